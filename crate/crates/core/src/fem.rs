//! Conforming Lagrange finite elements on the interior triangulation and the
//! one-dimensional trace matrices used by the exterior elements.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::basis::{LagrangeLine, LagrangeTriangle, MAX_ORDER};
use crate::dense::DenseMatrix;
use crate::error::{HsieError, Result};
use crate::mesh::{Mesh2D, Point};
use crate::quadrature::{gauss_legendre_unit, triangle_rule};
use crate::scalar::{cr, Real};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::C64;

/// Global numbering of the order-`p` Lagrange space on a mesh: vertex DOFs
/// first, then edge DOFs (edges sorted by vertex pair, nodes running from the
/// lower to the higher vertex id), then triangle interiors.
#[derive(Clone, Debug)]
pub struct FeSpace<'m> {
    mesh: &'m Mesh2D,
    basis: LagrangeTriangle<f64>,
    n_dofs: usize,
    tri_dofs: Vec<usize>,
    trace_dofs: Vec<Vec<usize>>,
}

impl<'m> FeSpace<'m> {
    pub fn new(mesh: &'m Mesh2D, order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(HsieError::InvalidParameter(format!(
                "finite element order {order} outside 1..={MAX_ORDER}"
            )));
        }
        let p = order;
        let basis = LagrangeTriangle::<f64>::new(p);
        let nloc = basis.len();
        let nv = mesh.vertices.len();
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &mesh.triangles {
            for e in 0..3 {
                let (a, b) = (t.v[e], t.v[(e + 1) % 3]);
                edges.insert((a.min(b), a.max(b)), 0);
            }
        }
        let mut next = nv;
        for slot in edges.values_mut() {
            *slot = next;
            next += p - 1;
        }
        let n_int = nloc - 3 - 3 * (p - 1);
        let edge_dofs = |a: usize, b: usize| -> Vec<usize> {
            let start = edges[&(a.min(b), a.max(b))];
            let mut d: Vec<usize> = (start..start + p - 1).collect();
            if a > b {
                d.reverse();
            }
            d
        };
        let mut tri_dofs = Vec::with_capacity(nloc * mesh.triangles.len());
        for t in &mesh.triangles {
            tri_dofs.extend_from_slice(&t.v);
            for e in 0..3 {
                tri_dofs.extend(edge_dofs(t.v[e], t.v[(e + 1) % 3]));
            }
            tri_dofs.extend(next..next + n_int);
            next += n_int;
        }
        let trace_dofs = mesh
            .boundary_edges
            .iter()
            .map(|be| {
                let [a, b] = be.v;
                let mut d = vec![a];
                d.extend(edge_dofs(a, b));
                d.push(b);
                d
            })
            .collect();
        Ok(Self {
            mesh,
            basis,
            n_dofs: next,
            tri_dofs,
            trace_dofs,
        })
    }

    pub fn mesh(&self) -> &'m Mesh2D {
        self.mesh
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn dof_count(&self) -> usize {
        self.n_dofs
    }

    pub fn basis(&self) -> &LagrangeTriangle<f64> {
        &self.basis
    }

    /// Global DOFs of triangle `t` in local basis order.
    pub fn triangle_dofs(&self, t: usize) -> &[usize] {
        let n = self.basis.len();
        &self.tri_dofs[t * n..(t + 1) * n]
    }

    /// Global DOFs on boundary edge `k`, running from `v[0]` to `v[1]` of the
    /// stored edge.
    pub fn trace_dofs(&self, k: usize) -> &[usize] {
        &self.trace_dofs[k]
    }

    fn affine(&self, t: usize) -> (Point, [[f64; 2]; 2]) {
        let v = self.mesh.triangles[t].v;
        let p0 = self.mesh.vertices[v[0]];
        let p1 = self.mesh.vertices[v[1]];
        let p2 = self.mesh.vertices[v[2]];
        (p0, [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]])
    }

    /// Physical coordinates of every global DOF.
    pub fn dof_points(&self) -> Vec<Point> {
        let mut pts = vec![[f64::NAN; 2]; self.n_dofs];
        for t in 0..self.mesh.triangles.len() {
            let (p0, j) = self.affine(t);
            for (loc, &g) in self.triangle_dofs(t).iter().enumerate() {
                let [x, y] = self.basis.nodes()[loc];
                pts[g] = [p0[0] + j[0][0] * x + j[0][1] * y, p0[1] + j[1][0] * x + j[1][1] * y];
            }
        }
        pts
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> C64) -> Vec<C64> {
        self.dof_points().into_iter().map(f).collect()
    }

    /// Interior stiffness `S[ij] = int grad b_i . grad b_j` and mass
    /// `M[ij] = int n b_i b_j`.
    pub fn assemble_interior(&self) -> Result<(SparseMatrix, SparseMatrix)> {
        let mesh = self.mesh;
        let n_of: Vec<f64> = mesh
            .triangles
            .iter()
            .map(|t| mesh.material_value(t.material))
            .collect::<Result<_>>()?;
        let reference = ReferenceMatrices::new(&self.basis);
        let nloc = self.basis.len();
        let locals: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.triangles.len())
            .into_par_iter()
            .map(|t| {
                let (_, j) = self.affine(t);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                // |det J| J^{-1} J^{-T}
                let c = [
                    (j[0][1] * j[0][1] + j[1][1] * j[1][1]) / det,
                    -(j[0][0] * j[0][1] + j[1][0] * j[1][1]) / det,
                    (j[0][0] * j[0][0] + j[1][0] * j[1][0]) / det,
                ];
                let k: Vec<f64> = (0..nloc * nloc)
                    .map(|i| c[0] * reference.kxx[i] + c[1] * reference.kxy[i] + c[2] * reference.kyy[i])
                    .collect();
                let m: Vec<f64> = reference.mass.iter().map(|&v| n_of[t] * det * v).collect();
                (k, m)
            })
            .collect();
        let cap = locals.len() * nloc * nloc;
        let mut s = TripletBuilder::with_capacity(self.n_dofs, self.n_dofs, cap);
        let mut mm = TripletBuilder::with_capacity(self.n_dofs, self.n_dofs, cap);
        for (t, (k, m)) in locals.iter().enumerate() {
            let dofs = self.triangle_dofs(t);
            for a in 0..nloc {
                for b in 0..nloc {
                    s.push(dofs[a], dofs[b], C64::new(k[a * nloc + b], 0.0));
                    mm.push(dofs[a], dofs[b], C64::new(m[a * nloc + b], 0.0));
                }
            }
        }
        Ok((s.build(), mm.build()))
    }

    /// `(H^1 seminorm error, L^2 error, H^1 norm of the exact solution)`
    /// of the FE function `u` against `exact(p) = (value, gradient)`.
    pub fn h1_error(&self, u: &[C64], exact: impl Fn(Point) -> (C64, [C64; 2]) + Sync) -> (f64, f64, f64) {
        let rule = triangle_rule::<f64>(self.order() + 4);
        let tab: Vec<_> = rule.points.iter().map(|q| self.basis.eval(q[0], q[1])).collect();
        let parts: Vec<[f64; 3]> = (0..self.mesh.triangles.len())
            .into_par_iter()
            .map(|t| {
                let (p0, j) = self.affine(t);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let dofs = self.triangle_dofs(t);
                let mut acc = [0.0; 3];
                for (q, (vals, grads)) in tab.iter().enumerate() {
                    let [x, y] = rule.points[q];
                    let p = [p0[0] + j[0][0] * x + j[0][1] * y, p0[1] + j[1][0] * x + j[1][1] * y];
                    let mut uh = C64::new(0.0, 0.0);
                    let mut g = [C64::new(0.0, 0.0); 2];
                    for (loc, &d) in dofs.iter().enumerate() {
                        uh += u[d] * vals[loc];
                        // grad = J^{-T} grad_ref
                        let gx = (j[1][1] * grads[loc][0] - j[1][0] * grads[loc][1]) / det;
                        let gy = (-j[0][1] * grads[loc][0] + j[0][0] * grads[loc][1]) / det;
                        g[0] += u[d] * gx;
                        g[1] += u[d] * gy;
                    }
                    let (ue, ge) = exact(p);
                    let w = rule.weights[q] * det.abs();
                    acc[0] += w * ((g[0] - ge[0]).norm_sqr() + (g[1] - ge[1]).norm_sqr());
                    acc[1] += w * (uh - ue).norm_sqr();
                    acc[2] += w * (ue.norm_sqr() + ge[0].norm_sqr() + ge[1].norm_sqr());
                }
                acc
            })
            .collect();
        let mut tot = [0.0; 3];
        for a in parts {
            for i in 0..3 {
                tot[i] += a[i];
            }
        }
        (tot[0].sqrt(), tot[1].sqrt(), tot[2].sqrt())
    }
}

struct ReferenceMatrices {
    kxx: Vec<f64>,
    kxy: Vec<f64>,
    kyy: Vec<f64>,
    mass: Vec<f64>,
}

impl ReferenceMatrices {
    fn new(basis: &LagrangeTriangle<f64>) -> Self {
        let n = basis.len();
        let rule = triangle_rule::<f64>(basis.order() + 2);
        let mut r = Self {
            kxx: vec![0.0; n * n],
            kxy: vec![0.0; n * n],
            kyy: vec![0.0; n * n],
            mass: vec![0.0; n * n],
        };
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let (v, g) = basis.eval(q[0], q[1]);
            for a in 0..n {
                for b in 0..n {
                    let i = a * n + b;
                    r.kxx[i] += w * (g[a][0] * g[b][0]);
                    r.kxy[i] += w * (g[a][0] * g[b][1] + g[a][1] * g[b][0]);
                    r.kyy[i] += w * (g[a][1] * g[b][1]);
                    r.mass[i] += w * (v[a] * v[b]);
                }
            }
        }
        r
    }
}

/// Weight of an edge trace integral on the reference edge `eta in [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeWeight<T> {
    /// `int b_m b_n`
    Mass,
    /// `int b_m' b_n'`
    Stiffness,
    /// `int b_m' (h_xi^2 + (b - (a + b) eta)^2) b_n'`
    W1 { h_xi: T, a: T, b: T },
    /// `int b_m' (b - (a + b) eta) / h_xi b_n`
    W2 { h_xi: T, a: T, b: T },
}

/// Trace matrix on the reference edge `[0, 1]` with order-`p` nodal basis;
/// rows and columns follow the nodes in increasing `eta`.
pub fn edge_matrix<T: Real>(p: usize, weight: EdgeWeight<T>) -> DenseMatrix<T> {
    let line = LagrangeLine::<T>::new(p);
    let rule = gauss_legendre_unit::<T>(p + 3);
    let n = p + 1;
    let mut out = vec![T::zero(); n * n];
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        let v = line.eval(x);
        let d = line.eval_deriv(x);
        for a in 0..n {
            for b in 0..n {
                let val = match weight {
                    EdgeWeight::Mass => v[a] * v[b],
                    EdgeWeight::Stiffness => d[a] * d[b],
                    EdgeWeight::W1 { h_xi, a: ta, b: tb } => {
                        let s = tb - (ta + tb) * x;
                        (h_xi * h_xi + s * s) * (d[a] * d[b])
                    }
                    EdgeWeight::W2 { h_xi, a: ta, b: tb } => d[a] * ((tb - (ta + tb) * x) / h_xi) * v[b],
                };
                out[a * n + b] += w * val;
            }
        }
    }
    DenseMatrix::from_fn(n, n, |i, j| cr(out[i * n + j]))
}

/// Physical boundary mass and stiffness `(M^bd, S^bd)` on an edge of
/// length `h`.
pub fn boundary_matrices<T: Real>(p: usize, h: T) -> (DenseMatrix<T>, DenseMatrix<T>) {
    (
        edge_matrix(p, EdgeWeight::Mass).scale_real(h),
        edge_matrix(p, EdgeWeight::Stiffness).scale_real(T::one() / h),
    )
}
