//! Element matrices of the exterior segments.
//!
//! Edge segments (strips, trapezoids) carry the unknowns `(i, m)` with `i`
//! the radial index on a ray (`0` is the boundary value) and `m` the trace
//! basis index along the edge in increasing `eta`. Local index is
//! `i * n_trace + m` (radial major). Infinite triangles carry `(i, j)`
//! with index `i * n_ray + j`; `i` runs along the `n1` ray and `j` along
//! the `n2` ray, `(0, 0)` is the corner value.

use num_complex::Complex;

use crate::dense::DenseMatrix;
use crate::error::{HsieError, Result};
use crate::fem::{edge_matrix, EdgeWeight};
use crate::hardy::{hsm_mass_1d, hsm_mixed_1d, hsm_stiffness_1d, make_d, make_resolvent, make_t, HardyParams, TransformSign};
use crate::scalar::{ci, cr, Real};
use crate::segmentation::TrapezoidParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalDof {
    Edge { radial: usize, trace: usize },
    Corner { i: usize, j: usize },
}

#[derive(Clone, Debug)]
pub struct ExteriorElementMatrices<T: Real> {
    pub s: DenseMatrix<T>,
    pub m: DenseMatrix<T>,
    pub dofs: Vec<LocalDof>,
}

/// `(A + A^T) / 2`: removes round-off asymmetry of the Kronecker sums.
fn symmetrized<T: Real>(a: DenseMatrix<T>) -> DenseMatrix<T> {
    let half = T::lit(0.5);
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| (a[(i, j)] + a[(j, i)]) * half)
}

fn edge_dofs(n_ray: usize, n_trace: usize) -> Vec<LocalDof> {
    (0..n_ray)
        .flat_map(|radial| (0..n_trace).map(move |trace| LocalDof::Edge { radial, trace }))
        .collect()
}

/// Strip over an edge with physical boundary matrices `M^bd`, `S^bd`:
/// `S = S^HSM x M^bd + M^HSM x S^bd`, `M = n M^HSM x M^bd`.
pub fn strip_matrices<T: Real>(
    mbd: &DenseMatrix<T>,
    sbd: &DenseMatrix<T>,
    hardy: &HardyParams<T>,
    n_seg: T,
) -> ExteriorElementMatrices<T> {
    let shsm = hsm_stiffness_1d(hardy);
    let mhsm = hsm_mass_1d(hardy);
    let s = &shsm.kron(mbd) + &mhsm.kron(sbd);
    let m = mhsm.kron(mbd).scale_real(n_seg);
    ExteriorElementMatrices {
        s: symmetrized(s),
        m: symmetrized(m),
        dofs: edge_dofs(hardy.ray_dofs(), mbd.rows()),
    }
}

/// Reference-edge trace matrices of a trapezoid.
#[derive(Clone, Debug)]
pub struct TrapezoidTrace<T: Real> {
    pub b0: DenseMatrix<T>,
    pub b1: DenseMatrix<T>,
    pub b2: DenseMatrix<T>,
}

impl<T: Real> TrapezoidTrace<T> {
    pub fn new(order: usize, params: &TrapezoidParams<T>) -> Self {
        let (h_xi, a, b) = (params.h_xi, params.a, params.b);
        Self {
            b0: edge_matrix(order, EdgeWeight::Mass),
            b1: edge_matrix(order, EdgeWeight::W1 { h_xi, a, b }),
            b2: edge_matrix(order, EdgeWeight::W2 { h_xi, a, b }),
        }
    }
}

/// Radial matrices of a trapezoid: `(M_xi, L00, L01, L11)`.
pub fn trapezoid_radial<T: Real>(
    params: &TrapezoidParams<T>,
    hardy: &HardyParams<T>,
) -> Result<[DenseMatrix<T>; 4]> {
    let n = hardy.n_modes;
    let k0 = hardy.kappa0;
    let two = T::lit(2.0);
    let tm = make_t::<T>(n, TransformSign::Minus);
    let tp = make_t::<T>(n, TransformSign::Plus);
    let (tmt, tpt) = (tm.transpose(), tp.transpose());
    let sum = params.a + params.b;
    let op = &DenseMatrix::identity(n + 2).scale_real(params.h_eta) + &make_d(n + 1, k0).scale_real(sum);
    let res = make_resolvent(n + 1, k0, cr(params.h_eta), sum)?;
    let m_xi = tmt.matmul(&op).matmul(&tm).scale(ci::<T>() * two * params.h_xi / k0);
    let l00 = tmt.matmul(&res).matmul(&tm).scale(ci::<T>() * two / (k0 * params.h_xi));
    let l01 = tmt.matmul(&tp).scale_real(-two);
    let l11 = tpt.matmul(&op).matmul(&tp).scale(-ci::<T>() * two * k0 / params.h_xi);
    Ok([m_xi, l00, l01, l11])
}

/// Trapezoid matrices
/// `S = L00 x B1 + L01 x B2 + L10 x B2^T + L11 x B0`, `M = n M_xi x B0`.
pub fn trapezoid_matrices<T: Real>(
    params: &TrapezoidParams<T>,
    trace: &TrapezoidTrace<T>,
    hardy: &HardyParams<T>,
    n_seg: T,
) -> Result<ExteriorElementMatrices<T>> {
    if !(params.h_xi > T::zero()) {
        return Err(HsieError::DegenerateTrapezoid {
            h_xi: params.h_xi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let [m_xi, l00, l01, l11] = trapezoid_radial(params, hardy)?;
    let l10 = l01.transpose();
    let s = &(&l00.kron(&trace.b1) + &l01.kron(&trace.b2)) + &(&l10.kron(&trace.b2.transpose()) + &l11.kron(&trace.b0));
    let m = m_xi.kron(&trace.b0).scale_real(n_seg);
    Ok(ExteriorElementMatrices {
        s: symmetrized(s),
        m: symmetrized(m),
        dofs: edge_dofs(hardy.ray_dofs(), trace.b0.rows()),
    })
}

/// `G = |J| J^{-1} J^{-T}` and `|J|` for `J = [n1 n2]`.
pub fn corner_metric<T: Real>(n1: [T; 2], n2: [T; 2]) -> Result<([[T; 2]; 2], T)> {
    let det = n1[0] * n2[1] - n1[1] * n2[0];
    if !(det.abs() >= T::lit(1e-12)) {
        return Err(HsieError::DegenerateCorner {
            det: det.to_f64().unwrap_or(f64::NAN),
        });
    }
    let adet = det.abs();
    // J^{-1} = adj / det, G = |det| adj adj^T / det^2
    let adj = [[n2[1], -n2[0]], [-n1[1], n1[0]]];
    let mut g = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = (adj[i][0] * adj[j][0] + adj[i][1] * adj[j][1]) / adet;
        }
    }
    Ok((g, adet))
}

/// Infinite triangle spanned by `n1`, `n2` at a corner:
/// `S = G11 S x M + G12 P x P^T + G21 P^T x P + G22 M x S` with the 1D
/// Hardy matrices `S = S^HSM`, `M = M^HSM`, `P = -2 T_+^T T_-`, and
/// `M_T = n |J| M x M`.
pub fn triangle_matrices<T: Real>(
    n1: [T; 2],
    n2: [T; 2],
    hardy: &HardyParams<T>,
    n_seg: T,
) -> Result<ExteriorElementMatrices<T>> {
    let (g, adet) = corner_metric(n1, n2)?;
    let sh = hsm_stiffness_1d(hardy);
    let mh = hsm_mass_1d(hardy);
    let pt = hsm_mixed_1d::<T>(hardy.n_modes);
    let p = pt.transpose();
    let mut s = &sh.kron(&mh).scale_real(g[0][0]) + &mh.kron(&sh).scale_real(g[1][1]);
    if g[0][1] != T::zero() {
        s = &s + &(&p.kron(&pt).scale_real(g[0][1]) + &pt.kron(&p).scale_real(g[1][0]));
    }
    let m = mh.kron(&mh).scale_real(n_seg * adet);
    let n = hardy.ray_dofs();
    let dofs = (0..n).flat_map(|i| (0..n).map(move |j| LocalDof::Corner { i, j })).collect();
    Ok(ExteriorElementMatrices {
        s: symmetrized(s),
        m: symmetrized(m),
        dofs,
    })
}

/// Outgoing one-dimensional Dirichlet-to-Neumann value `-i sqrt(kappa^2 - mu)`,
/// branch with nonnegative imaginary part of the root.
pub fn exact_dtn<T: Real>(kappa: Complex<T>, mu: T) -> Complex<T> {
    let mut k = (kappa * kappa - cr(mu)).sqrt();
    if k.im < T::zero() || (k.im == T::zero() && k.re < T::zero()) {
        k = -k;
    }
    -ci::<T>() * k
}

/// Schur complement of `S - kappa^2 M` of an edge segment onto its trace
/// DOFs, as a dense matrix over the trace basis.
pub fn trace_schur<T: Real>(e: &ExteriorElementMatrices<T>, kappa: Complex<T>) -> Result<DenseMatrix<T>> {
    let k2 = kappa * kappa;
    let a = &e.s - &e.m.scale(k2);
    let trace: Vec<usize> = (0..e.dofs.len())
        .filter(|&k| matches!(e.dofs[k], LocalDof::Edge { radial: 0, .. }))
        .collect();
    let rest: Vec<usize> = (0..e.dofs.len())
        .filter(|&k| !matches!(e.dofs[k], LocalDof::Edge { radial: 0, .. }))
        .collect();
    let pick = |r: &[usize], c: &[usize]| DenseMatrix::from_fn(r.len(), c.len(), |i, j| a[(r[i], c[j])]);
    let att = pick(&trace, &trace);
    let atr = pick(&trace, &rest);
    let art = pick(&rest, &trace);
    let arr = pick(&rest, &rest);
    let x = arr.inverse(T::lit(1e-14))?.matmul(&art);
    Ok(&att - &atr.matmul(&x))
}

/// Generalized eigenpairs `Sbd w = mu Mbd w` of real symmetric boundary
/// matrices, ascending in `mu`, with `w^T Mbd w = 1`.
pub fn transverse_modes(mbd: &DenseMatrix<f64>, sbd: &DenseMatrix<f64>) -> Result<Vec<(f64, Vec<Complex<f64>>)>> {
    use faer::{Mat, Side};
    let n = mbd.rows();
    let fail = |what: &str| HsieError::InvalidParameter(format!("transverse eigendecomposition failed: {what}"));
    let m = Mat::<f64>::from_fn(n, n, |i, j| mbd[(i, j)].re);
    let s = Mat::<f64>::from_fn(n, n, |i, j| sbd[(i, j)].re);
    let em = m.self_adjoint_eigen(Side::Lower).map_err(|_| fail("mass"))?;
    let (q, lam) = (em.U(), em.S().column_vector());
    if (0..n).any(|k| !(lam[k] > 0.0)) {
        return Err(fail("mass matrix is not positive definite"));
    }
    let half = Mat::<f64>::from_fn(n, n, |i, j| (0..n).map(|k| q[(i, k)] * q[(j, k)] / lam[k].sqrt()).sum());
    let c = &half * &s * &half;
    let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let ec = c.self_adjoint_eigen(Side::Lower).map_err(|_| fail("stiffness"))?;
    let w = &half * ec.U();
    let mu = ec.S().column_vector();
    Ok((0..n).map(|k| (mu[k], (0..n).map(|i| Complex::new(w[(i, k)], 0.0)).collect())).collect())
}
