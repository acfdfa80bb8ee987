//! Exterior segmentations of the domain complement.
//!
//! Every exterior boundary edge of the outer loop gets one segment. An edge
//! segment is parametrized by `(xi, eta)` with `xi >= 0` the generalized
//! radial variable and `eta in [0, 1]` running from `v1` to `v2` along the
//! edge, the exterior lying to the left of `v1 -> v2`. Strips are
//! trapezoids with `a = b = 0`. With strips, every non-flat corner also
//! gets an infinite triangle spanned by the two adjacent normals.

use std::collections::BTreeSet;

use crate::error::{HsieError, Result};
use crate::mesh::{cross, Mesh2D, Point};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strategy {
    StripsAndTriangles,
    TrapezoidsNormalBisector,
    TrapezoidsReferencePoint(Point),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapezoidParams<T> {
    pub h_eta: T,
    pub h_xi: T,
    pub a: T,
    pub b: T,
    /// Columns: unit edge direction `v1 -> v2` and outward unit normal.
    pub rotation: [[T; 2]; 2],
}

/// Map parameters of the first exterior layer `v1 v2 v3 v4`, where `v1 v2`
/// is the boundary edge and `v1 v4`, `v2 v3` lie on the rays.
pub fn trapezoid_params<T: Real>(v1: [T; 2], v2: [T; 2], v3: [T; 2], v4: [T; 2]) -> Result<TrapezoidParams<T>> {
    let sub = |p: [T; 2], q: [T; 2]| [p[0] - q[0], p[1] - q[1]];
    let dot = |p: [T; 2], q: [T; 2]| p[0] * q[0] + p[1] * q[1];
    let norm = |p: [T; 2]| p[0].hypot(p[1]);
    let h_eta = norm(sub(v2, v1));
    let top = norm(sub(v4, v3));
    if !(h_eta > T::zero()) || !(top > T::zero()) {
        return Err(HsieError::DegenerateTrapezoid { h_xi: 0.0 });
    }
    let a = dot(sub(v4, v3), sub(v2, v3)) / top;
    let b = dot(sub(v3, v4), sub(v1, v4)) / top;
    let side = dot(sub(v3, v2), sub(v3, v2));
    let h2 = side - a * a;
    if !(h2 > T::zero()) {
        return Err(HsieError::DegenerateTrapezoid {
            h_xi: h2.to_f64().unwrap_or(f64::NAN),
        });
    }
    let h_xi = h2.sqrt();
    let t = [(v2[0] - v1[0]) / h_eta, (v2[1] - v1[1]) / h_eta];
    let n = [-t[1], t[0]];
    Ok(TrapezoidParams {
        h_eta,
        h_xi,
        a,
        b,
        rotation: [[t[0], n[0]], [t[1], n[1]]],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SegmentGeometry {
    /// Strip or trapezoid over boundary edge `edge`; `vertices` are the mesh
    /// vertex ids of `v1`, `v2`; `outer` are the first-layer ray points
    /// `v3` (from `v2`) and `v4` (from `v1`).
    Edge {
        edge: usize,
        vertices: [usize; 2],
        v1: Point,
        v2: Point,
        outer: [Point; 2],
        params: TrapezoidParams<f64>,
    },
    /// Infinite triangle at `corner`; `n1` is the normal of the preceding
    /// edge (counterclockwise order), `n2` of the following one.
    Corner {
        vertex: usize,
        corner: Point,
        n1: Point,
        n2: Point,
        /// Boundary edges whose strips hold the `n1` and `n2` rays.
        edges: [usize; 2],
    },
}

/// Identity of an exterior ray: the boundary vertex it starts from, and
/// `side = 1` for the ray of the following edge at a corner where the two
/// adjacent strips have separate rays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RayId {
    pub vertex: usize,
    pub side: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Strip,
    InfTriangle,
    Trapezoid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorSegment {
    pub kind: SegmentKind,
    pub geometry: SegmentGeometry,
    pub material: u32,
    /// Helmholtz coefficient on the segment.
    pub n: f64,
    /// Boundary tag of the edge (of the preceding edge for corners).
    pub tag: u32,
    /// Edges: rays at `v1` and `v2`. Corners: the `n1` and `n2` rays.
    pub rays: [RayId; 2],
}

impl ExteriorSegment {
    /// Whether `p` lies in the segment's infinite footprint, up to `tol`.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        match &self.geometry {
            SegmentGeometry::Edge { v1, params, .. } => {
                let r = params.rotation;
                let d = [p[0] - v1[0], p[1] - v1[1]];
                let s = r[0][0] * d[0] + r[1][0] * d[1];
                let t = r[0][1] * d[0] + r[1][1] * d[1];
                let xi = t / params.h_xi;
                if xi < -tol {
                    return false;
                }
                let width = params.h_eta + (params.a + params.b) * xi;
                let eta = (s + params.b * xi) / width;
                eta >= -tol && eta <= 1.0 + tol
            }
            SegmentGeometry::Corner { corner, n1, n2, .. } => {
                let d = [p[0] - corner[0], p[1] - corner[1]];
                let det = n1[0] * n2[1] - n1[1] * n2[0];
                let s = (d[0] * n2[1] - d[1] * n2[0]) / det;
                let t = (n1[0] * d[1] - n1[1] * d[0]) / det;
                s >= -tol && t >= -tol
            }
        }
    }
}

fn unit_normal(p: Point, q: Point) -> (Point, f64) {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len = d[0].hypot(d[1]);
    ([d[1] / len, -d[0] / len], len)
}

/// Builds the segmentation of the exterior of the outer loop. Edges whose
/// tag is not in `exterior_tags` are walls and get no segment; `None`
/// makes every outer edge transparent.
pub fn build_segmentation(
    mesh: &Mesh2D,
    strategy: Strategy,
    exterior_tags: Option<&BTreeSet<u32>>,
) -> Result<Vec<ExteriorSegment>> {
    let lp = mesh.outer_loop();
    let m = lp.len();
    let owners = mesh.boundary_edge_owners();
    let is_ext = |k: usize| exterior_tags.is_none_or(|s| s.contains(&mesh.boundary_edges[k].tag));

    // loop vertices P_i = start of edge i (counterclockwise)
    let pts: Vec<Point> = lp.iter().map(|&k| mesh.vertices[mesh.boundary_edges[k].v[0]]).collect();
    let mut normals = Vec::with_capacity(m);
    for i in 0..m {
        let (n, len) = unit_normal(pts[i], pts[(i + 1) % m]);
        if !(len > 0.0) {
            return Err(HsieError::DegenerateEdge { edge: lp[i] });
        }
        normals.push(n);
    }
    let extent = {
        let (lo, hi) = mesh.bounding_box();
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    };
    let flat = |i: usize| {
        let prev = (i + m - 1) % m;
        let c = cross(pts[prev], pts[i], pts[(i + 1) % m]);
        let l0 = (pts[i][0] - pts[prev][0]).hypot(pts[i][1] - pts[prev][1]);
        let l1 = (pts[(i + 1) % m][0] - pts[i][0]).hypot(pts[(i + 1) % m][1] - pts[i][1]);
        c.abs() <= 1e-12 * l0 * l1 && normals[prev][0] * normals[i][0] + normals[prev][1] * normals[i][1] > 0.0
    };

    // first-layer ray point at every loop vertex for trapezoid strategies
    let ray_points: Option<Vec<Point>> = match strategy {
        Strategy::StripsAndTriangles => None,
        Strategy::TrapezoidsNormalBisector => Some(
            (0..m)
                .map(|i| {
                    let prev = (i + m - 1) % m;
                    let (np, nn) = (normals[prev], normals[i]);
                    let d = match (is_ext(lp[prev]), is_ext(lp[i])) {
                        (true, false) => np,
                        (false, true) => nn,
                        _ => {
                            let s = [np[0] + nn[0], np[1] + nn[1]];
                            let l = s[0].hypot(s[1]);
                            [s[0] / l, s[1] / l]
                        }
                    };
                    let n = if is_ext(lp[i]) { nn } else { np };
                    let proj = d[0] * n[0] + d[1] * n[1];
                    [pts[i][0] + d[0] / proj, pts[i][1] + d[1] / proj]
                })
                .collect(),
        ),
        Strategy::TrapezoidsReferencePoint(p0) => {
            let mut dmin = f64::INFINITY;
            for i in 0..m {
                let n = normals[i];
                let dist = (pts[i][0] - p0[0]) * n[0] + (pts[i][1] - p0[1]) * n[1];
                dmin = dmin.min(dist);
            }
            if !(dmin > 1e-12 * extent) {
                return Err(HsieError::InvalidParameter(format!(
                    "reference point ({}, {}) is not strictly inside the polygon",
                    p0[0], p0[1]
                )));
            }
            let t = 1.0 / dmin;
            Some(
                pts.iter()
                    .map(|p| [p[0] + t * (p[0] - p0[0]), p[1] + t * (p[1] - p0[1])])
                    .collect(),
            )
        }
    };

    // strips keep separate rays on both sides of a corner
    let split = |i: usize| ray_points.is_none() && !flat(i);
    let ray = |i: usize, following: bool| RayId {
        vertex: mesh.boundary_edges[lp[i]].v[0],
        side: u8::from(following && split(i)),
    };

    let mut segments = Vec::new();
    for i in 0..m {
        let k = lp[i];
        let be = mesh.boundary_edges[k];
        let material = mesh.triangles[owners[k].0].material;
        let n = mesh.material_value(material)?;
        if is_ext(k) {
            let j = (i + 1) % m;
            // v1 = P_{i+1}, v2 = P_i keeps the exterior on the left
            let (v1, v2) = (pts[j], pts[i]);
            let (v3, v4, kind) = match &ray_points {
                Some(rp) => (rp[i], rp[j], SegmentKind::Trapezoid),
                None => {
                    let nn = normals[i];
                    (
                        [v2[0] + nn[0], v2[1] + nn[1]],
                        [v1[0] + nn[0], v1[1] + nn[1]],
                        SegmentKind::Strip,
                    )
                }
            };
            let mut params = trapezoid_params(v1, v2, v3, v4)?;
            if kind == SegmentKind::Strip {
                params.a = 0.0;
                params.b = 0.0;
                params.h_xi = 1.0;
            }
            if params.a + params.b < -1e-12 * params.h_eta {
                return Err(HsieError::RayCrossing {
                    edge: k,
                    sum: params.a + params.b,
                });
            }
            segments.push(ExteriorSegment {
                kind,
                geometry: SegmentGeometry::Edge {
                    edge: k,
                    vertices: [be.v[1], be.v[0]],
                    v1,
                    v2,
                    outer: [v3, v4],
                    params,
                },
                material,
                n,
                tag: be.tag,
                rays: [ray(j, false), ray(i, true)],
            });
        }
        // corner at the end of edge i
        let j = (i + 1) % m;
        if ray_points.is_none() && is_ext(k) && is_ext(lp[j]) && !flat(j) {
            let (n1, n2) = (normals[i], normals[j]);
            let det = n1[0] * n2[1] - n1[1] * n2[0];
            if !(det > 1e-12) {
                return Err(HsieError::DegenerateCorner { det });
            }
            segments.push(ExteriorSegment {
                kind: SegmentKind::InfTriangle,
                geometry: SegmentGeometry::Corner {
                    vertex: be.v[1],
                    corner: pts[j],
                    n1,
                    n2,
                    edges: [k, lp[j]],
                },
                material,
                n,
                tag: be.tag,
                rays: [ray(j, false), ray(j, true)],
            });
        }
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{tags, BoundaryEdge, Triangle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn polygon(pts: &[Point]) -> Mesh2D {
        // fan from the centroid
        let n = pts.len();
        let c = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n as f64, a[1] + p[1] / n as f64]);
        let mut vertices = pts.to_vec();
        vertices.push(c);
        let triangles = (0..n).map(|i| Triangle { v: [i, (i + 1) % n, n], material: 1 }).collect();
        let edges = (0..n).map(|i| BoundaryEdge { v: [i, (i + 1) % n], tag: 1 }).collect();
        Mesh2D::new(vertices, triangles, edges, BTreeMap::from([(1, 1.0)])).unwrap()
    }

    fn square() -> Mesh2D {
        polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    fn hexagon() -> Mesh2D {
        let pts: Vec<Point> = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        polygon(&pts)
    }

    #[test]
    fn rectangle_params() {
        let p = trapezoid_params([0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]).unwrap();
        assert_eq!((p.h_eta, p.h_xi, p.a, p.b), (1.0, 1.0, 0.0, 0.0));
        assert_eq!(p.rotation, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn bisector_params_by_hand() {
        let p = trapezoid_params::<f64>([0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [-1.0, 1.0]).unwrap();
        assert!((p.h_eta - 1.0).abs() < 1e-15);
        assert!((p.a - 1.0).abs() < 1e-15);
        assert!((p.b - 1.0).abs() < 1e-15);
        assert!((p.h_xi - 1.0).abs() < 1e-15);
        // rotated by 90 degrees
        let rot = |q: Point| [-q[1], q[0]];
        let r = trapezoid_params(rot([0.0, 0.0]), rot([1.0, 0.0]), rot([2.0, 1.0]), rot([-1.0, 1.0])).unwrap();
        assert!((r.h_eta - p.h_eta).abs() < 1e-15 && (r.h_xi - p.h_xi).abs() < 1e-15);
        assert!((r.a - p.a).abs() < 1e-15 && (r.b - p.b).abs() < 1e-15);
        assert_eq!(r.rotation, [[0.0, -1.0], [1.0, 0.0]]);
    }

    #[test]
    fn degenerate_trapezoid() {
        let err = trapezoid_params([0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [-1.0, 0.0]).unwrap_err();
        assert!(matches!(err, HsieError::DegenerateTrapezoid { .. }));
    }

    #[test]
    fn square_bisector_trapezoids() {
        let segs = build_segmentation(&square(), Strategy::TrapezoidsNormalBisector, None).unwrap();
        assert_eq!(segs.len(), 4);
        for s in &segs {
            let SegmentGeometry::Edge { params, .. } = &s.geometry else { panic!() };
            assert!((params.a - 1.0).abs() < 1e-14 && (params.b - 1.0).abs() < 1e-14);
            assert!((params.h_xi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn square_strips_and_triangles() {
        let segs = build_segmentation(&square(), Strategy::StripsAndTriangles, None).unwrap();
        assert_eq!(segs.iter().filter(|s| s.kind == SegmentKind::Strip).count(), 4);
        let tris: Vec<_> = segs.iter().filter(|s| s.kind == SegmentKind::InfTriangle).collect();
        assert_eq!(tris.len(), 4);
        for t in tris {
            let SegmentGeometry::Corner { n1, n2, .. } = t.geometry else { panic!() };
            assert!((n1[0] * n2[0] + n1[1] * n2[1]).abs() < 1e-15);
            assert!((n1[0].hypot(n1[1]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hexagon_reference_point_congruent() {
        let segs = build_segmentation(&hexagon(), Strategy::TrapezoidsReferencePoint([0.0, 0.0]), None).unwrap();
        assert_eq!(segs.len(), 6);
        let params: Vec<_> = segs
            .iter()
            .map(|s| match &s.geometry {
                SegmentGeometry::Edge { params, .. } => *params,
                _ => panic!(),
            })
            .collect();
        for p in &params[1..] {
            for (x, y) in [(p.h_eta, params[0].h_eta), (p.h_xi, params[0].h_xi), (p.a, params[0].a), (p.b, params[0].b)] {
                assert!((x - y).abs() < 1e-14, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn neighbours_share_ray_points() {
        for strategy in [Strategy::TrapezoidsNormalBisector, Strategy::TrapezoidsReferencePoint([0.1, -0.2])] {
            let segs = build_segmentation(&hexagon(), strategy, None).unwrap();
            for w in 0..segs.len() {
                let (SegmentGeometry::Edge { vertices: a, outer: oa, .. }, SegmentGeometry::Edge { vertices: b, outer: ob, .. }) =
                    (&segs[w].geometry, &segs[(w + 1) % segs.len()].geometry)
                else {
                    panic!()
                };
                // v1 of edge w is v2 of edge w+1
                assert_eq!(a[0], b[1]);
                assert_eq!(oa[1], ob[0]);
            }
        }
    }

    #[test]
    fn reference_point_outside_rejected() {
        let err = build_segmentation(&square(), Strategy::TrapezoidsReferencePoint([2.0, 0.5]), None).unwrap_err();
        assert!(matches!(err, HsieError::InvalidParameter(_)));
    }

    fn inside_polygon(mesh: &Mesh2D, p: Point) -> bool {
        mesh.outer_loop().iter().all(|&k| {
            let [a, b] = mesh.boundary_edges[k].v;
            cross(mesh.vertices[a], mesh.vertices[b], p) > 0.0
        })
    }

    fn check_coverage(mesh: &Mesh2D, strategy: Strategy) {
        let segs = build_segmentation(mesh, strategy, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (lo, hi) = mesh.bounding_box();
        let mut outside = 0;
        for _ in 0..10_000 {
            let p = [rng.gen_range(lo[0] - 2.0..hi[0] + 2.0), rng.gen_range(lo[1] - 2.0..hi[1] + 2.0)];
            let count = segs.iter().filter(|s| s.contains(p, 1e-12)).count();
            if inside_polygon(mesh, p) {
                continue;
            }
            outside += 1;
            assert_eq!(count, 1, "{strategy:?} at {p:?}");
        }
        assert!(outside > 1000);
    }

    #[test]
    fn segmentations_tile_the_exterior() {
        let tilted = polygon(&[[0.0, 0.0], [2.0, -0.5], [2.5, 1.0], [1.0, 2.0], [-0.5, 1.2]]);
        for mesh in [square(), hexagon(), tilted] {
            check_coverage(&mesh, Strategy::StripsAndTriangles);
            check_coverage(&mesh, Strategy::TrapezoidsNormalBisector);
            let c = mesh.vertices[mesh.vertices.len() - 1];
            check_coverage(&mesh, Strategy::TrapezoidsReferencePoint(c));
        }
    }

    #[test]
    fn collinear_vertices_get_no_triangle() {
        let m = crate::mesh::RectMeshBuilder::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0], 1, 1.0)
            .unwrap()
            .build()
            .unwrap();
        let segs = build_segmentation(&m, Strategy::StripsAndTriangles, None).unwrap();
        assert_eq!(segs.iter().filter(|s| s.kind == SegmentKind::InfTriangle).count(), 4);
        assert_eq!(segs.len(), 10);
        let bis = build_segmentation(&m, Strategy::TrapezoidsNormalBisector, None).unwrap();
        let flat: Vec<_> = bis
            .iter()
            .filter_map(|s| match &s.geometry {
                SegmentGeometry::Edge { params, .. } => Some(*params),
                _ => None,
            })
            .collect();
        assert!(flat.iter().any(|p| p.a == 0.0 || p.b == 0.0));
    }

    #[test]
    fn walls_are_skipped() {
        let m = crate::mesh::RectMeshBuilder::new(vec![0.0, 1.0], vec![0.0, 1.0], 1, 1.0)
            .unwrap()
            .build()
            .unwrap();
        let ext = BTreeSet::from([tags::LEFT, tags::RIGHT]);
        let segs = build_segmentation(&m, Strategy::StripsAndTriangles, Some(&ext)).unwrap();
        assert_eq!(segs.len(), 2);
        let segs = build_segmentation(&m, Strategy::TrapezoidsNormalBisector, Some(&ext)).unwrap();
        for s in &segs {
            let SegmentGeometry::Edge { params, .. } = &s.geometry else { panic!() };
            assert_eq!((params.a, params.b), (0.0, 0.0));
        }
    }
}
