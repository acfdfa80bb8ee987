//! Structured triangulations of rectangles with rectangular inclusions and
//! holes.

use std::collections::BTreeMap;

use super::{tags, Mesh2D, Point, Triangle};
use crate::error::{HsieError, Result};

/// Axis-aligned rectangle `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    fn contains(&self, p: Point) -> bool {
        p[0] > self.lo[0] && p[0] < self.hi[0] && p[1] > self.lo[1] && p[1] < self.hi[1]
    }
}

/// Tensor grid over a rectangle; every cell is split into two triangles
/// and takes the material of the last region containing its center.
#[derive(Clone, Debug)]
pub struct RectMeshBuilder {
    xs: Vec<f64>,
    ys: Vec<f64>,
    background: u32,
    regions: Vec<(Rect, Option<u32>)>,
    materials: BTreeMap<u32, f64>,
}

/// Subdivides each interval between consecutive breaks into equal parts no
/// longer than `max_h`.
pub fn subdivide(breaks: &[f64], max_h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let n = ((w[1] - w[0]) / max_h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
        out.push(w[1]);
    }
    out
}

impl RectMeshBuilder {
    /// Grid lines must be strictly increasing; the first and last entries
    /// are the box sides.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, background: u32, background_value: f64) -> Result<Self> {
        for (name, v) in [("x", &xs), ("y", &ys)] {
            if v.len() < 2 || v.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(HsieError::InvalidParameter(format!("{name} grid lines must increase strictly")));
            }
        }
        Ok(Self {
            xs,
            ys,
            background,
            regions: Vec::new(),
            materials: BTreeMap::from([(background, background_value)]),
        })
    }

    pub fn inclusion(mut self, rect: Rect, material: u32, value: f64) -> Self {
        self.regions.push((rect, Some(material)));
        self.materials.insert(material, value);
        self
    }

    pub fn hole(mut self, rect: Rect) -> Self {
        self.regions.push((rect, None));
        self
    }

    pub fn build(&self) -> Result<Mesh2D> {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut index = vec![usize::MAX; nx * ny];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut vid = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
            let k = j * nx + i;
            if index[k] == usize::MAX {
                index[k] = vertices.len();
                vertices.push([self.xs[i], self.ys[j]]);
            }
            index[k]
        };
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let c = [0.5 * (self.xs[i] + self.xs[i + 1]), 0.5 * (self.ys[j] + self.ys[j + 1])];
                let mut material = Some(self.background);
                for (r, m) in &self.regions {
                    if r.contains(c) {
                        material = *m;
                    }
                }
                let Some(material) = material else { continue };
                let a = vid(i, j, &mut vertices);
                let b = vid(i + 1, j, &mut vertices);
                let cc = vid(i + 1, j + 1, &mut vertices);
                let d = vid(i, j + 1, &mut vertices);
                triangles.push(Triangle { v: [a, b, cc], material });
                triangles.push(Triangle { v: [a, cc, d], material });
            }
        }
        let (x0, x1) = (self.xs[0], self.xs[nx - 1]);
        let (y0, y1) = (self.ys[0], self.ys[ny - 1]);
        Mesh2D::from_triangles(vertices, triangles, self.materials.clone(), |p| {
            if p[0] == x0 {
                tags::LEFT
            } else if p[0] == x1 {
                tags::RIGHT
            } else if p[1] == y0 {
                tags::BOTTOM
            } else if p[1] == y1 {
                tags::TOP
            } else {
                tags::HOLE
            }
        })
    }
}

/// Square cavity between two straight waveguides, centered at the origin.
/// The waveguides run horizontally through the whole box above and below
/// the cavity.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroCavity {
    pub width: f64,
    pub height: f64,
    pub cavity: f64,
    /// Gap between cavity and waveguide core.
    pub gap: f64,
    /// Waveguide core width.
    pub core: f64,
    pub n_core: f64,
    pub n_clad: f64,
}

impl Default for MicroCavity {
    fn default() -> Self {
        Self {
            width: 3.5,
            height: 4.546,
            cavity: 1.451,
            gap: 0.2745,
            core: 0.073,
            n_core: 3.4,
            n_clad: 1.45,
        }
    }
}

pub const CLAD: u32 = 1;
pub const CORE: u32 = 2;

/// Coarse micro-cavity mesh; cells are at most `max_h` long.
pub fn microcavity(g: &MicroCavity, max_h: f64) -> Result<Mesh2D> {
    let (w, h, s) = (0.5 * g.width, 0.5 * g.height, 0.5 * g.cavity);
    let (y1, y2) = (s + g.gap, s + g.gap + g.core);
    if !(y2 < h) || !(s < w) {
        return Err(HsieError::InvalidParameter("micro-cavity does not fit into its box".into()));
    }
    let xs = subdivide(&[-w, -s, s, w], max_h);
    let ys = subdivide(&[-h, -y2, -y1, -s, s, y1, y2, h], max_h);
    let core = g.n_core * g.n_core;
    RectMeshBuilder::new(xs, ys, CLAD, g.n_clad * g.n_clad)?
        .inclusion(Rect::new([-s, -s], [s, s]), CORE, core)
        .inclusion(Rect::new([-w, y1], [w, y2]), CORE, core)
        .inclusion(Rect::new([-w, -y2], [w, -y1]), CORE, core)
        .build()
}

/// Straight slab waveguide along x with core `|y| < half_width`.
#[derive(Clone, Debug, PartialEq)]
pub struct StraightWaveguide {
    pub length: f64,
    pub height: f64,
    pub half_width: f64,
    pub n_core: f64,
    pub n_clad: f64,
}

impl Default for StraightWaveguide {
    fn default() -> Self {
        Self {
            length: 1.0,
            height: 6.0,
            half_width: 0.0365,
            n_core: 3.4,
            n_clad: 1.45,
        }
    }
}

/// The y grid is graded away from the core: cell size grows geometrically
/// from the core width up to `max_h`.
pub fn straight_waveguide(g: &StraightWaveguide, max_h: f64) -> Result<Mesh2D> {
    let (l, h, a) = (0.5 * g.length, 0.5 * g.height, g.half_width);
    if !(a < h) {
        return Err(HsieError::InvalidParameter("waveguide core does not fit into its box".into()));
    }
    let mut upper = vec![a];
    let mut step = (2.0 * a).min(max_h);
    while upper.last().unwrap() + step < h - 0.5 * step {
        upper.push(upper.last().unwrap() + step);
        step = (1.5 * step).min(max_h);
    }
    upper.push(h);
    let mut ys: Vec<f64> = upper.iter().rev().map(|y| -y).collect();
    ys.extend_from_slice(&upper);
    let xs = subdivide(&[-l, l], max_h);
    RectMeshBuilder::new(xs, ys, CLAD, g.n_clad * g.n_clad)?
        .inclusion(Rect::new([-l, -a], [l, a]), CORE, g.n_core * g.n_core)
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area(m: &Mesh2D) -> f64 {
        (0..m.triangles.len()).map(|t| m.triangle_area(t)).sum()
    }

    #[test]
    fn subdivide_respects_breaks() {
        let g = subdivide(&[0.0, 1.0, 1.1], 0.3);
        assert_eq!(g.len(), 6);
        assert_eq!(g[4], 1.0);
        assert!(g.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-12));
    }

    #[test]
    fn hole_produces_inner_loop() {
        let xs = subdivide(&[0.0, 1.0, 2.0, 3.0], 1.0);
        let m = RectMeshBuilder::new(xs.clone(), xs, 1, 1.0)
            .unwrap()
            .hole(Rect::new([1.0, 1.0], [2.0, 2.0]))
            .build()
            .unwrap();
        assert_eq!(m.triangles.len(), 16);
        assert_eq!(m.boundary_edges.iter().filter(|e| e.tag == tags::HOLE).count(), 4);
        assert_eq!(m.outer_loop().len(), 12);
        assert!((area(&m) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn microcavity_layout() {
        let g = MicroCavity::default();
        let m = microcavity(&g, 0.5).unwrap();
        let (lo, hi) = m.bounding_box();
        assert_eq!((lo, hi), ([-1.75, -2.273], [1.75, 2.273]));
        assert!((area(&m) - 3.5 * 4.546).abs() < 1e-12);
        let core: f64 = (0..m.triangles.len())
            .filter(|&t| m.triangles[t].material == CORE)
            .map(|t| m.triangle_area(t))
            .sum();
        let expect = 1.451 * 1.451 + 2.0 * 3.5 * 0.073;
        assert!((core - expect).abs() < 1e-12);
        assert_eq!(m.outer_loop().len(), m.boundary_edges.len());
        // both waveguides reach both vertical sides
        let left_core = m
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tags::LEFT)
            .filter(|e| {
                let y = 0.5 * (m.vertices[e.v[0]][1] + m.vertices[e.v[1]][1]);
                y.abs() > 1.0 && y.abs() < 1.073
            })
            .count();
        assert_eq!(left_core, 2);
    }

    #[test]
    fn waveguide_grid_is_graded() {
        let m = straight_waveguide(&StraightWaveguide::default(), 0.5).unwrap();
        let (lo, hi) = m.bounding_box();
        assert_eq!((lo, hi), ([-0.5, -3.0], [0.5, 3.0]));
        assert!((area(&m) - 6.0).abs() < 1e-12);
    }
}
