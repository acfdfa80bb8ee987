//! Sparse direct solves and the shift-invert eigensolver.
//!
//! Factorizations come from faer's sparse LU (column approximate minimum
//! degree ordering, partial pivoting). Solves are followed by up to three
//! steps of iterative refinement.
//!
//! The resonance problem `S x = lambda M x` is solved with Arnoldi on
//! `(S - sigma M)^{-1} M`, restarted by keeping an orthonormal basis of the
//! wanted Ritz vectors (Krylov-Schur style). Eigenvalues `theta` of the
//! shifted-inverted operator map back as `lambda = sigma + 1 / theta`.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::{Mat, Par};
use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HsieError, Result};
use crate::sparse::{norm2, SparseMatrix};
use crate::C64;

/// Seed of the pseudorandom Arnoldi start vector.
pub const START_SEED: u64 = 0x4853_4945;

const REFINE_STEPS: usize = 3;
const REFINE_TOL: f64 = 1e-10;

static SEQUENTIAL: Once = Once::new();

fn sequential_faer() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Normwise backward error `|b - A x| / (|A|_F |x| + |b|)`.
pub fn relative_residual(a: &SparseMatrix, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
    let denom = a.norm_fro() * norm2(x) + norm2(b);
    if denom == 0.0 {
        0.0
    } else {
        norm2(&r) / denom
    }
}

/// Sparse LU factors of a square matrix together with the matrix itself.
pub struct SparseLu {
    matrix: SparseMatrix,
    lu: Lu<usize, C64>,
    norm: f64,
}

impl SparseLu {
    pub fn new(a: SparseMatrix) -> Result<Self> {
        sequential_faer();
        if a.rows() != a.cols() {
            return Err(HsieError::InvalidParameter(format!(
                "cannot factor a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let lu = a.to_faer().sp_lu().map_err(|_| HsieError::SingularMatrix)?;
        let norm = a.norm_fro();
        let this = Self { matrix: a, lu, norm };
        // a singular pivot shows up as non-finite output
        let probe = this.raw_solve(&vec![C64::new(1.0, 0.0); this.matrix.rows()]);
        if probe.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(HsieError::SingularMatrix);
        }
        Ok(this)
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        x.col_as_slice(0).to_vec()
    }

    /// Solves `A x = b`, refining until the backward error is at most 1e-10.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let (x, res) = self.solve_refined(b);
        if !res.is_finite() {
            return Err(HsieError::SingularMatrix);
        }
        if res > REFINE_TOL {
            return Err(HsieError::ResidualTooLarge {
                residual: res,
                tolerance: REFINE_TOL,
            });
        }
        Ok(x)
    }

    /// Solve with refinement; returns the solution and its backward error.
    pub fn solve_refined(&self, b: &[C64]) -> (Vec<C64>, f64) {
        let mut x = self.raw_solve(b);
        let bnorm = norm2(b);
        let mut res = f64::INFINITY;
        for step in 0..=REFINE_STEPS {
            let ax = self.matrix.matvec(&x);
            let r: Vec<C64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
            let denom = self.norm * norm2(&x) + bnorm;
            res = if denom == 0.0 { 0.0 } else { norm2(&r) / denom };
            if res <= REFINE_TOL * 1e-3 || step == REFINE_STEPS || !res.is_finite() {
                break;
            }
            let dx = self.raw_solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        (x, res)
    }

    /// Unrefined solve, used inside Krylov iterations.
    pub fn solve_unrefined(&self, b: &[C64]) -> Vec<C64> {
        self.raw_solve(b)
    }
}

/// Factor and solve in one call.
pub fn lu_solve(a: &SparseMatrix, b: &[C64]) -> Result<Vec<C64>> {
    SparseLu::new(a.clone())?.solve(b)
}

/// Eigenpairs of `S x = lambda M x` near a shift.
#[derive(Clone, Debug)]
pub struct EigResult {
    /// Eigenvalues sorted by distance to the shift.
    pub eigenvalues: Vec<C64>,
    /// Eigenvectors, normalized to unit largest entry.
    pub eigenvectors: Vec<Vec<C64>>,
    /// `|S x - lambda M x| / |x|`.
    pub residuals: Vec<f64>,
    /// `|S x - lambda M x| / ((|S|_F + |lambda| |M|_F) |x|)`.
    pub backward_errors: Vec<f64>,
    pub restarts: usize,
    pub operator_applications: usize,
}

/// Options for [`shift_invert_eigs_with`].
#[derive(Clone, Debug)]
pub struct EigOptions {
    pub subspace: Option<usize>,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            subspace: None,
            max_restarts: 300,
            seed: START_SEED,
        }
    }
}

pub fn shift_invert_eigs(
    s: &SparseMatrix,
    m: &SparseMatrix,
    shift: C64,
    n_want: usize,
    tol: f64,
) -> Result<EigResult> {
    shift_invert_eigs_with(s, m, shift, n_want, tol, &EigOptions::default())
}

pub fn shift_invert_eigs_with(
    s: &SparseMatrix,
    m: &SparseMatrix,
    shift: C64,
    n_want: usize,
    tol: f64,
    opts: &EigOptions,
) -> Result<EigResult> {
    let n = s.rows();
    if n == 0 || n_want == 0 || n_want > n {
        return Err(HsieError::InvalidParameter(format!(
            "requested {n_want} eigenpairs of a dimension {n} pencil"
        )));
    }
    let shifted = s.lin_comb(C64::new(1.0, 0.0), m, -shift);
    let lu = match SparseLu::new(shifted) {
        Ok(lu) => lu,
        Err(HsieError::SingularMatrix) => return Err(HsieError::ShiftIsEigenvalue),
        Err(e) => return Err(e),
    };
    let s_norm = s.norm_fro();
    let m_norm = m.norm_fro();
    let op = |x: &[C64]| lu.solve_unrefined(&m.matvec(x));

    let dim = opts
        .subspace
        .unwrap_or_else(|| (2 * n_want + 20).max(30))
        .min(n)
        .max(n_want + 1)
        .min(n);
    let keep = (n_want + (dim - n_want) / 2).min(dim - 1).max(n_want.min(dim - 1));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let nv = norm2(&v0);
    v0.iter_mut().for_each(|v| *v /= nv);

    // basis vectors v_0..v_dim, Hessenberg-like (dim+1) x dim matrix
    let mut basis: Vec<Vec<C64>> = vec![v0];
    let mut h = vec![vec![czero(); dim]; dim + 1];
    let mut k = 0usize;
    let mut applications = 0usize;

    for restart in 0..=opts.max_restarts {
        // expand from k to dim
        let mut breakdown_at = None;
        for j in k..dim {
            let mut w = op(&basis[j]);
            applications += 1;
            let wn0 = norm2(&w);
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = hdot(v, &w);
                    h[i][j] += c;
                    for (wl, vl) in w.iter_mut().zip(v) {
                        *wl -= c * vl;
                    }
                }
            }
            let beta = norm2(&w);
            if beta <= 1e-14 * wn0.max(f64::MIN_POSITIVE) {
                breakdown_at = Some(j + 1);
                h[j + 1][j] = czero();
                break;
            }
            h[j + 1][j] = C64::new(beta, 0.0);
            w.iter_mut().for_each(|x| *x /= beta);
            if basis.len() > j + 1 {
                basis[j + 1] = w;
            } else {
                basis.push(w);
            }
        }
        let size = breakdown_at.unwrap_or(dim);

        // Ritz pairs of the leading size x size block
        let hm = Mat::<C64>::from_fn(size, size, |i, j| h[i][j]);
        let eig = hm
            .eigen()
            .map_err(|e| HsieError::DenseEigen(format!("{e:?}")))?;
        let theta: Vec<C64> = (0..size).map(|i| eig.S()[i]).collect();
        let u = eig.U();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()).then(a.cmp(&b)));
        let residual_row: Vec<C64> = if breakdown_at.is_some() {
            vec![czero(); size]
        } else {
            h[dim].clone()
        };
        let ritz_est = |idx: usize| -> f64 {
            let y: Vec<C64> = (0..size).map(|r| u[(r, idx)]).collect();
            let yn = norm2(&y);
            let bres: C64 = residual_row.iter().zip(&y).map(|(a, b)| a * b).sum();
            bres.norm() / (yn * theta[idx].norm().max(f64::MIN_POSITIVE))
        };
        let wanted: Vec<usize> = order.iter().copied().take(n_want.min(size)).collect();
        let est_ok = wanted.len() == n_want && wanted.iter().all(|&i| ritz_est(i) <= tol);
        let last = restart == opts.max_restarts;

        if est_ok || breakdown_at.is_some() || last {
            let result = extract(&basis, size, &u, &theta, &wanted, shift, s, m, s_norm, m_norm);
            let ok = result.backward_errors.len() == n_want
                && result.backward_errors.iter().all(|&r| r <= tol);
            if ok {
                debug!("shift-invert converged after {restart} restarts, {applications} solves");
                return Ok(EigResult {
                    restarts: restart,
                    operator_applications: applications,
                    ..result
                });
            }
            if last || breakdown_at.is_some() {
                let converged = result.backward_errors.iter().filter(|&&r| r <= tol).count();
                return Err(HsieError::ConvergenceFailure {
                    restarts: restart,
                    converged,
                    wanted: n_want,
                });
            }
        }

        // restart with an orthonormal basis of the kept Ritz vectors
        let kept: Vec<usize> = order.iter().copied().take(keep).collect();
        let mut q: Vec<Vec<C64>> = Vec::with_capacity(keep);
        for &idx in &kept {
            let mut y: Vec<C64> = (0..dim).map(|r| u[(r, idx)]).collect();
            for _ in 0..2 {
                for qv in &q {
                    let c = hdot(qv, &y);
                    for (yl, ql) in y.iter_mut().zip(qv) {
                        *yl -= c * ql;
                    }
                }
            }
            let yn = norm2(&y);
            if yn > 1e-10 {
                y.iter_mut().for_each(|v| *v /= yn);
                q.push(y);
            }
        }
        let kk = q.len();
        let mut new_basis: Vec<Vec<C64>> = Vec::with_capacity(dim + 1);
        for qv in &q {
            let mut x = vec![czero(); n];
            for (coef, v) in qv.iter().zip(&basis) {
                for (xl, vl) in x.iter_mut().zip(v) {
                    *xl += coef * vl;
                }
            }
            new_basis.push(x);
        }
        new_basis.push(basis[dim].clone());
        // H_k = Q^H H Q, residual row b Q
        let hq: Vec<Vec<C64>> = (0..dim)
            .map(|r| {
                (0..kk)
                    .map(|c| (0..dim).map(|l| h[r][l] * q[c][l]).sum())
                    .collect()
            })
            .collect();
        let mut new_h = vec![vec![czero(); dim]; dim + 1];
        for a in 0..kk {
            for c in 0..kk {
                new_h[a][c] = (0..dim).map(|r| q[a][r].conj() * hq[r][c]).sum();
            }
        }
        for c in 0..kk {
            new_h[kk][c] = (0..dim).map(|l| h[dim][l] * q[c][l]).sum();
        }
        basis = new_basis;
        h = new_h;
        k = kk;
    }
    unreachable!("restart loop returns on its last iteration")
}

fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(czero(), |s, (x, y)| s + x.conj() * y)
}

#[allow(clippy::too_many_arguments)]
fn extract(
    basis: &[Vec<C64>],
    size: usize,
    u: &faer::MatRef<'_, C64>,
    theta: &[C64],
    wanted: &[usize],
    shift: C64,
    s: &SparseMatrix,
    m: &SparseMatrix,
    s_norm: f64,
    m_norm: f64,
) -> EigResult {
    let n = s.rows();
    let mut pairs: Vec<(C64, Vec<C64>, f64, f64)> = wanted
        .iter()
        .map(|&idx| {
            let mut x = vec![czero(); n];
            for (r, v) in basis.iter().enumerate().take(size) {
                let c = u[(r, idx)];
                for (xl, vl) in x.iter_mut().zip(v) {
                    *xl += c * vl;
                }
            }
            normalize_max(&mut x);
            let lambda = shift + C64::new(1.0, 0.0) / theta[idx];
            let sx = s.matvec(&x);
            let mx = m.matvec(&x);
            let r: Vec<C64> = sx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
            let xn = norm2(&x);
            let res = norm2(&r) / xn;
            let bw = res / (s_norm + lambda.norm() * m_norm);
            (lambda, x, res, bw)
        })
        .collect();
    pairs.sort_by(|a, b| (a.0 - shift).norm().total_cmp(&(b.0 - shift).norm()));
    EigResult {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.2).collect(),
        backward_errors: pairs.iter().map(|p| p.3).collect(),
        eigenvectors: pairs.into_iter().map(|p| p.1).collect(),
        restarts: 0,
        operator_applications: 0,
    }
}

/// Scales `x` so that its largest entry (first one on ties) equals 1.
pub fn normalize_max(x: &mut [C64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.norm() > x[best].norm() {
            best = i;
        }
    }
    let p = x[best];
    if p.norm() > 0.0 {
        x.iter_mut().for_each(|v| *v /= p);
    }
}

/// All eigenvalues of the dense pencil `(S, M)` via QZ; infinite ones dropped.
pub fn dense_generalized_eigenvalues(s: &SparseMatrix, m: &SparseMatrix) -> Result<Vec<C64>> {
    sequential_faer();
    let n = s.rows();
    let sd = s.to_dense();
    let md = m.to_dense();
    let a = Mat::<C64>::from_fn(n, n, |i, j| sd[(i, j)]);
    let b = Mat::<C64>::from_fn(n, n, |i, j| md[(i, j)]);
    let ge = a
        .generalized_eigen(&b)
        .map_err(|e| HsieError::DenseEigen(format!("{e:?}")))?;
    let (sa, sb) = (ge.S_a(), ge.S_b());
    Ok((0..n)
        .filter(|&i| sb[i].norm() > 1e-13 * sa[i].norm())
        .map(|i| sa[i] / sb[i])
        .collect())
}
