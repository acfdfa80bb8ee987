//! Interior triangulations.
//!
//! A mesh is a list of vertices, positively oriented triangles carrying a
//! material id, and tagged boundary edges. Boundary edges are stored so that
//! the interior lies to their left. The outer boundary loop must be a convex
//! polygon; inner loops (holes) are allowed and act as walls.

mod generate;
mod io;

use std::collections::{BTreeMap, HashMap};

use log::info;

use crate::error::{HsieError, Result};

pub use generate::{
    microcavity, straight_waveguide, subdivide, MicroCavity, Rect, RectMeshBuilder, StraightWaveguide, CLAD, CORE,
};
pub use io::{load_mesh, parse_mesh, write_mesh};

pub type Point = [f64; 2];

/// Boundary tags written by the structured generator.
pub mod tags {
    pub const LEFT: u32 = 1;
    pub const BOTTOM: u32 = 2;
    pub const RIGHT: u32 = 3;
    pub const TOP: u32 = 4;
    pub const HOLE: u32 = 5;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub v: [usize; 3],
    pub material: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    pub vertices: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Material id to the coefficient `n` multiplying `kappa^2`.
    pub materials: BTreeMap<u32, f64>,
    /// Boundary edge indices of the outer loop in counterclockwise order.
    outer_loop: Vec<usize>,
}

pub(crate) fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Mesh2D {
    /// Validates and normalizes a mesh: triangles are reoriented to positive
    /// area, boundary edges to keep the interior on their left.
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<Triangle>,
        mut boundary_edges: Vec<BoundaryEdge>,
        materials: BTreeMap<u32, f64>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(HsieError::InvalidMesh("non-finite vertex coordinate".into()));
        }
        for (k, t) in triangles.iter_mut().enumerate() {
            if t.v.iter().any(|&i| i >= nv) {
                return Err(HsieError::InvalidMesh(format!("triangle {k} references a missing vertex")));
            }
            let area = cross(vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]);
            if area == 0.0 || !area.is_finite() {
                return Err(HsieError::InvalidMesh(format!("triangle {k} is degenerate")));
            }
            if area < 0.0 {
                info!("triangle {k} is negatively oriented; reordering its vertices");
                t.v.swap(1, 2);
            }
        }
        for (&id, &n) in &materials {
            if !(n > 0.0) || !n.is_finite() {
                return Err(HsieError::InvalidMesh(format!("material {id} has non-positive value {n}")));
            }
        }

        // directed edge -> triangle
        let mut half: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (t.v[e], t.v[(e + 1) % 3]);
                if half.insert((a, b), k).is_some() {
                    return Err(HsieError::InvalidMesh(format!(
                        "edge ({a}, {b}) is shared by two triangles with the same orientation"
                    )));
                }
            }
        }
        let mut listed: HashMap<(usize, usize), usize> = HashMap::with_capacity(boundary_edges.len());
        for (k, be) in boundary_edges.iter_mut().enumerate() {
            let [a, b] = be.v;
            if a >= nv || b >= nv || a == b {
                return Err(HsieError::InvalidMesh(format!("boundary edge {k} is invalid")));
            }
            let fwd = half.contains_key(&(a, b));
            let bwd = half.contains_key(&(b, a));
            match (fwd, bwd) {
                (true, false) => {}
                (false, true) => be.v = [b, a],
                (true, true) => {
                    return Err(HsieError::InvalidMesh(format!("boundary edge {k} ({a}, {b}) is an interior edge")))
                }
                (false, false) => {
                    return Err(HsieError::InvalidMesh(format!("boundary edge {k} ({a}, {b}) is not a triangle edge")))
                }
            }
            if listed.insert((a.min(b), a.max(b)), k).is_some() {
                return Err(HsieError::InvalidMesh(format!("boundary edge ({a}, {b}) listed twice")));
            }
        }
        for &(a, b) in half.keys() {
            if !half.contains_key(&(b, a)) && !listed.contains_key(&(a.min(b), a.max(b))) {
                return Err(HsieError::InvalidMesh(format!("boundary edge ({a}, {b}) is missing from the edge list")));
            }
        }

        // loops
        let mut degree = vec![0usize; nv];
        let mut next_edge: HashMap<usize, usize> = HashMap::with_capacity(boundary_edges.len());
        for (k, be) in boundary_edges.iter().enumerate() {
            degree[be.v[0]] += 1;
            degree[be.v[1]] += 1;
            if next_edge.insert(be.v[0], k).is_some() {
                return Err(HsieError::OpenBoundaryLoop { vertex: be.v[0], degree: 4 });
            }
        }
        if let Some((vertex, &deg)) = degree.iter().enumerate().find(|&(_, &d)| d != 0 && d != 2) {
            return Err(HsieError::OpenBoundaryLoop { vertex, degree: deg });
        }
        let mut seen = vec![false; boundary_edges.len()];
        let mut loops: Vec<Vec<usize>> = Vec::new();
        for start in 0..boundary_edges.len() {
            if seen[start] {
                continue;
            }
            let mut lp = Vec::new();
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                lp.push(k);
                let end = boundary_edges[k].v[1];
                k = match next_edge.get(&end) {
                    Some(&n) => n,
                    None => return Err(HsieError::OpenBoundaryLoop { vertex: end, degree: degree[end] }),
                };
            }
            if k != start {
                return Err(HsieError::OpenBoundaryLoop {
                    vertex: boundary_edges[k].v[0],
                    degree: degree[boundary_edges[k].v[0]],
                });
            }
            loops.push(lp);
        }
        if loops.is_empty() {
            return Err(HsieError::InvalidMesh("mesh has no boundary".into()));
        }
        let loop_area = |lp: &[usize]| -> f64 {
            lp.iter()
                .map(|&k| {
                    let [a, b] = boundary_edges[k].v;
                    vertices[a][0] * vertices[b][1] - vertices[b][0] * vertices[a][1]
                })
                .sum::<f64>()
                * 0.5
        };
        let outer = loops
            .iter()
            .enumerate()
            .max_by(|a, b| loop_area(a.1).total_cmp(&loop_area(b.1)).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        if !(loop_area(&loops[outer]) > 0.0) {
            return Err(HsieError::InvalidMesh("outer boundary is not counterclockwise".into()));
        }
        // rotate so the loop starts at its lowest edge index
        let mut outer_loop = loops.swap_remove(outer);
        let first = outer_loop
            .iter()
            .enumerate()
            .min_by_key(|&(_, &k)| k)
            .map(|(i, _)| i)
            .unwrap();
        outer_loop.rotate_left(first);

        let mesh = Self {
            vertices,
            triangles,
            boundary_edges,
            materials,
            outer_loop,
        };
        mesh.check_convex()?;
        Ok(mesh)
    }

    fn check_convex(&self) -> Result<()> {
        let lp = &self.outer_loop;
        let n = lp.len();
        for i in 0..n {
            let e0 = self.boundary_edges[lp[i]].v;
            let e1 = self.boundary_edges[lp[(i + 1) % n]].v;
            let (a, b, c) = (self.vertices[e0[0]], self.vertices[e0[1]], self.vertices[e1[1]]);
            let l0 = (b[0] - a[0]).hypot(b[1] - a[1]);
            let l1 = (c[0] - b[0]).hypot(c[1] - b[1]);
            if cross(a, b, c) < -1e-12 * l0 * l1 {
                return Err(HsieError::NonConvexBoundary { vertex: e0[1] });
            }
        }
        Ok(())
    }

    /// Boundary edge indices of the outer loop, counterclockwise.
    pub fn outer_loop(&self) -> &[usize] {
        &self.outer_loop
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let v = self.triangles[t].v;
        0.5 * cross(self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]])
    }

    pub fn material_value(&self, id: u32) -> Result<f64> {
        self.materials.get(&id).copied().ok_or(HsieError::MissingMaterial(id))
    }

    /// Triangle containing each boundary edge, with the local edge number.
    pub fn boundary_edge_owners(&self) -> Vec<(usize, usize)> {
        let mut half: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(3 * self.triangles.len());
        for (k, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                half.insert((t.v[e], t.v[(e + 1) % 3]), (k, e));
            }
        }
        self.boundary_edges
            .iter()
            .map(|be| half[&(be.v[0], be.v[1])])
            .collect()
    }

    /// Splits every triangle into four through its edge midpoints.
    pub fn refine_uniform(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let [a, b, c] = t.v;
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            let m = t.material;
            triangles.push(Triangle { v: [a, ab, ca], material: m });
            triangles.push(Triangle { v: [ab, b, bc], material: m });
            triangles.push(Triangle { v: [ca, bc, c], material: m });
            triangles.push(Triangle { v: [ab, bc, ca], material: m });
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for be in &self.boundary_edges {
            let [a, b] = be.v;
            let m = midpoint(a, b, &mut vertices);
            boundary_edges.push(BoundaryEdge { v: [a, m], tag: be.tag });
            boundary_edges.push(BoundaryEdge { v: [m, b], tag: be.tag });
        }
        Self::new(vertices, triangles, boundary_edges, self.materials.clone())
            .expect("refinement of a valid mesh is valid")
    }

    pub fn refined(&self, times: usize) -> Self {
        let mut m = self.clone();
        for _ in 0..times {
            m = m.refine_uniform();
        }
        m
    }

    /// Builds a mesh from triangles alone, tagging each boundary edge with
    /// `tag(midpoint)`.
    pub fn from_triangles(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        materials: BTreeMap<u32, f64>,
        tag: impl Fn(Point) -> u32,
    ) -> Result<Self> {
        let mut count: BTreeMap<(usize, usize), (usize, usize, usize)> = BTreeMap::new();
        for t in &triangles {
            for e in 0..3 {
                let (a, b) = (t.v[e], t.v[(e + 1) % 3]);
                let entry = count.entry((a.min(b), a.max(b))).or_insert((0, a, b));
                entry.0 += 1;
            }
        }
        let boundary_edges = count
            .values()
            .filter(|c| c.0 == 1)
            .map(|&(_, a, b)| {
                let (p, q) = (vertices[a], vertices[b]);
                BoundaryEdge {
                    v: [a, b],
                    tag: tag([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]),
                }
            })
            .collect();
        Self::new(vertices, triangles, boundary_edges, materials)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}
