//! One-dimensional Helmholtz problem on the half line with a Hardy space
//! infinite element attached at `r = a`.
//!
//! `-u'' - kappa^2 n u = 0` on `r > 0`, `u'(0) = g`, `u` outgoing, with
//! `n = 1` beyond `a`. The interior uses nodal Lagrange elements; the last
//! interior node is the boundary unknown `u0` of the infinite element.

use crate::basis::LagrangeLine;
use crate::error::{HsieError, Result};
use crate::hardy::{hsm_mass_1d, hsm_stiffness_1d, transformed_exterior, HardyParams};
use crate::quadrature::gauss_legendre_unit;
use crate::solvers::{shift_invert_eigs, SparseLu};
use crate::sparse::{norm2, SparseMatrix, TripletBuilder};
use crate::C64;

/// Residual above which a direct solve is reported as singular.
pub const SINGULAR_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Problem1D {
    /// Coupling radius.
    pub a: f64,
    /// Piecewise constant `n` on `[0, a]`: `(right end, value)` pairs in
    /// increasing order, the last end equal to `a`.
    pub n_profile: Vec<(f64, f64)>,
    pub kappa: C64,
    /// Neumann datum `u'(0)`.
    pub g: C64,
    pub fe_order: usize,
    pub n_cells: usize,
    pub hardy: HardyParams<f64>,
}

impl Problem1D {
    /// Homogeneous medium `n = 1`.
    pub fn homogeneous(a: f64, kappa: C64, g: C64, fe_order: usize, n_cells: usize, hardy: HardyParams<f64>) -> Self {
        Self {
            a,
            n_profile: vec![(a, 1.0)],
            kappa,
            g,
            fe_order,
            n_cells,
            hardy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HsieError::InvalidParameter(m));
        if !(self.a > 0.0) {
            return bad(format!("coupling radius must be positive, got {}", self.a));
        }
        if !(1..=crate::basis::MAX_ORDER).contains(&self.fe_order) {
            return bad(format!("fe_order {} outside 1..=7", self.fe_order));
        }
        if self.n_cells == 0 {
            return bad("n_cells must be at least 1".into());
        }
        if self.n_profile.is_empty() {
            return bad("empty refraction profile".into());
        }
        let mut prev = 0.0;
        for &(end, n) in &self.n_profile {
            if !(end > prev) || !(n > 0.0) {
                return bad(format!("invalid profile piece ({end}, {n})"));
            }
            prev = end;
        }
        if (prev - self.a).abs() > 1e-12 * self.a {
            return bad(format!("profile ends at {prev}, expected {}", self.a));
        }
        Ok(())
    }

    fn validate_kappa(&self) -> Result<()> {
        if !(self.kappa.re > 0.0) {
            return Err(HsieError::InvalidParameter(format!(
                "kappa must have positive real part, got {}",
                self.kappa
            )));
        }
        if !self.hardy.admits(self.kappa) {
            return Err(HsieError::InvalidParameter(format!(
                "Re(kappa / kappa0) must be positive (kappa = {}, kappa0 = {})",
                self.kappa, self.hardy.kappa0
            )));
        }
        Ok(())
    }

    /// Cell boundaries: a uniform grid refined by the profile discontinuities.
    pub fn cell_edges(&self) -> Vec<f64> {
        let h = self.a / self.n_cells as f64;
        let mut pts: Vec<f64> = (0..=self.n_cells).map(|i| i as f64 * h).collect();
        *pts.last_mut().unwrap() = self.a;
        for &(end, _) in &self.n_profile {
            pts.push(end);
        }
        pts.sort_by(f64::total_cmp);
        let tol = 1e-10 * h;
        let mut out: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            match out.last() {
                Some(&q) if p - q <= tol => {}
                _ => out.push(p),
            }
        }
        *out.last_mut().unwrap() = self.a;
        out
    }

    fn n_at(&self, r: f64) -> f64 {
        self.n_profile
            .iter()
            .find(|&&(end, _)| r <= end)
            .map_or(self.n_profile.last().unwrap().1, |p| p.1)
    }

    /// Number of interior finite element unknowns, `u0` included.
    pub fn interior_dofs(&self) -> usize {
        (self.cell_edges().len() - 1) * self.fe_order + 1
    }
}

/// Partitioned solution vector.
#[derive(Clone, Debug)]
pub struct Solution1D {
    /// Nodal values at `nodes`, ending with `u0`.
    pub interior_coeffs: Vec<C64>,
    pub nodes: Vec<f64>,
    pub u0: C64,
    /// Coefficients of `U` on `z^0..z^N`.
    pub hardy_coeffs: Vec<C64>,
    pub kappa0: C64,
}

impl Solution1D {
    fn from_vector(prob: &Problem1D, x: &[C64], nodes: Vec<f64>) -> Self {
        let ni = nodes.len();
        Self {
            interior_coeffs: x[..ni].to_vec(),
            nodes,
            u0: x[ni - 1],
            hardy_coeffs: x[ni..].to_vec(),
            kappa0: prob.hardy.kappa0,
        }
    }

    /// Coefficients of the transformed exterior function, degree `0..=N+1`.
    pub fn transformed_coeffs(&self) -> Vec<C64> {
        let mut ray = Vec::with_capacity(self.hardy_coeffs.len() + 1);
        ray.push(self.u0);
        ray.extend_from_slice(&self.hardy_coeffs);
        transformed_exterior(self.kappa0, &ray)
    }
}

/// Assembled pencil and load vector.
#[derive(Clone, Debug)]
pub struct System1D {
    pub s: SparseMatrix,
    pub m: SparseMatrix,
    pub rhs: Vec<C64>,
    pub nodes: Vec<f64>,
}

/// `S`, `M` and the load for `(S - kappa^2 M) x = rhs`.
pub fn assemble_1d(prob: &Problem1D) -> Result<System1D> {
    prob.validate()?;
    let p = prob.fe_order;
    let edges = prob.cell_edges();
    let n_cells = edges.len() - 1;
    let ni = n_cells * p + 1;
    let nh = prob.hardy.n_modes + 1;
    let n = ni + nh;

    let line = LagrangeLine::<f64>::new(p);
    let quad = gauss_legendre_unit::<f64>(p + 2);
    let tab: Vec<(Vec<f64>, Vec<f64>)> = quad
        .points
        .iter()
        .map(|&t| (line.eval(t), line.eval_deriv(t)))
        .collect();

    let mut nodes = Vec::with_capacity(ni);
    let mut sb = TripletBuilder::new(n, n);
    let mut mb = TripletBuilder::new(n, n);
    for c in 0..n_cells {
        let (r0, r1) = (edges[c], edges[c + 1]);
        let h = r1 - r0;
        let nval = prob.n_at(0.5 * (r0 + r1));
        for &t in &line.nodes[..p] {
            nodes.push(r0 + t * h);
        }
        for a in 0..=p {
            for b in 0..=p {
                let mut ks = 0.0;
                let mut km = 0.0;
                for (q, (v, d)) in tab.iter().enumerate() {
                    let w = quad.weights[q];
                    ks += w * d[a] * d[b] / h;
                    km += w * v[a] * v[b] * h;
                }
                sb.push(c * p + a, c * p + b, C64::new(ks, 0.0));
                mb.push(c * p + a, c * p + b, C64::new(nval * km, 0.0));
            }
        }
    }
    nodes.push(prob.a);

    let ext: Vec<usize> = (ni - 1..n).collect();
    sb.add_block(&ext, &ext, &hsm_stiffness_1d(&prob.hardy));
    mb.add_block(&ext, &ext, &hsm_mass_1d(&prob.hardy));

    let mut rhs = vec![C64::new(0.0, 0.0); n];
    rhs[0] = -prob.g;
    Ok(System1D {
        s: sb.build(),
        m: mb.build(),
        rhs,
        nodes,
    })
}

pub fn solve_scattering_1d(prob: &Problem1D) -> Result<Solution1D> {
    prob.validate_kappa()?;
    let sys = assemble_1d(prob)?;
    let k2 = prob.kappa * prob.kappa;
    let a = sys.s.lin_comb(C64::new(1.0, 0.0), &sys.m, -k2);
    let lu = match SparseLu::new(a.clone()) {
        Ok(lu) => lu,
        Err(HsieError::SingularMatrix) => {
            return Err(HsieError::SingularSystem { residual: f64::INFINITY })
        }
        Err(e) => return Err(e),
    };
    let (x, _) = lu.solve_refined(&sys.rhs);
    let res = rhs_relative_residual(&a, &x, &sys.rhs);
    if !(res <= SINGULAR_RESIDUAL) {
        return Err(HsieError::SingularSystem { residual: res });
    }
    Ok(Solution1D::from_vector(prob, &x, sys.nodes))
}

/// `|b - A x| / |b|`; unlike the backward error this blows up when `A` is
/// numerically singular.
pub fn rhs_relative_residual(a: &SparseMatrix, x: &[C64], b: &[C64]) -> f64 {
    let bn = norm2(b);
    if bn == 0.0 {
        return if norm2(x) == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let ax = a.matvec(x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
    norm2(&r) / bn
}

/// Eigenpairs `(kappa^2, mode)` of the homogeneous Neumann problem nearest `shift`
/// (a value of `kappa^2`).
pub fn solve_resonance_1d(
    prob: &Problem1D,
    shift: C64,
    n_want: usize,
    tol: f64,
) -> Result<Vec<(C64, Solution1D)>> {
    let sys = assemble_1d(prob)?;
    let eig = shift_invert_eigs(&sys.s, &sys.m, shift, n_want, tol)?;
    Ok(eig
        .eigenvalues
        .iter()
        .zip(&eig.eigenvectors)
        .map(|(&l, x)| (l, Solution1D::from_vector(prob, x, sys.nodes.clone())))
        .collect())
}

/// Exact `u(a)` of the homogeneous problem: `g e^{i kappa a} / (i kappa)`.
pub fn analytic_trace_homogeneous(kappa: C64, a: f64, g: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    g * (i * kappa * a).exp() / (i * kappa)
}
