//! Guided modes of the symmetric three-layer slab waveguide
//! `n(y) = n2^2` for `|y| < a`, `n1^2` otherwise, and the incoming field
//! `u_i(x, y) = v(y) exp(i kappa_x x)` built from them.
//!
//! With `X = gamma a` and `V = kappa a sqrt(n2^2 - n1^2)` the dispersion
//! relations are written pole-free on `X in (0, V)`:
//! even `X sin X - sqrt(V^2 - X^2) cos X = 0`,
//! odd `X cos X + sqrt(V^2 - X^2) sin X = 0`.

use num_complex::Complex;

use crate::assembly::IncomingField;
use crate::error::{HsieError, Result};
use crate::fem::FeSpace;
use crate::mesh::Point;
use crate::scalar::{ci, cr, Real};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlabMode<T> {
    pub kappa: T,
    pub half_width: T,
    pub n1: T,
    pub n2: T,
    pub kappa_x: T,
    /// Transverse wavenumber in the core.
    pub gamma: T,
    /// Decay rate in the cladding.
    pub beta: T,
    /// Layer coefficients `C1..C4` (lower cladding, two core waves, upper cladding).
    pub c: [Complex<T>; 4],
    pub parity: Parity,
}

fn dispersion<T: Real>(parity: Parity, x: T, v: T) -> T {
    let w = (v * v - x * x).max(T::zero()).sqrt();
    match parity {
        Parity::Even => x * x.sin() - w * x.cos(),
        Parity::Odd => x * x.cos() + w * x.sin(),
    }
}

/// Scaled dispersion function at `kappa_x` (zero at a guided mode).
pub fn dispersion_residual<T: Real>(mode: &SlabMode<T>) -> T {
    let v = mode.kappa * mode.half_width * (mode.n2 * mode.n2 - mode.n1 * mode.n1).sqrt();
    dispersion(mode.parity, mode.gamma * mode.half_width, v) / v
}

/// Number of guided modes of the given parity.
pub fn mode_count<T: Real>(kappa: T, half_width: T, n1: T, n2: T, parity: Parity) -> usize {
    let v = kappa * half_width * (n2 * n2 - n1 * n1).sqrt();
    let ratio = (v / T::FRAC_PI_2()).to_f64().unwrap_or(0.0);
    // X_k lies in (k pi, k pi + pi/2) for even, (k pi + pi/2, (k+1) pi) for odd
    match parity {
        Parity::Even => (ratio / 2.0).ceil() as usize,
        Parity::Odd => ((ratio - 1.0) / 2.0).ceil().max(0.0) as usize,
    }
}

/// Guided mode `branch` (0 = fundamental) of the given parity.
pub fn solve_slab_mode<T: Real>(kappa: T, half_width: T, n1: T, n2: T, parity: Parity, branch: usize) -> Result<SlabMode<T>> {
    if !(n2 > n1 && n1 > T::zero() && kappa > T::zero() && half_width > T::zero()) {
        return Err(HsieError::InvalidParameter(
            "slab mode needs n2 > n1 > 0 and positive kappa and half width".into(),
        ));
    }
    let v = kappa * half_width * (n2 * n2 - n1 * n1).sqrt();
    let available = mode_count(kappa, half_width, n1, n2, parity);
    if available == 0 {
        return Err(HsieError::NoGuidedMode(format!(
            "{parity:?} parity has no guided mode at V = {}",
            v.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if branch >= available {
        return Err(HsieError::BranchOutOfRange { branch, available });
    }
    let pi = T::PI();
    let k = T::count(branch);
    let (mut lo, mut hi) = match parity {
        Parity::Even => (k * pi, k * pi + T::FRAC_PI_2()),
        Parity::Odd => (k * pi + T::FRAC_PI_2(), (k + T::one()) * pi),
    };
    hi = hi.min(v);
    let mut flo = dispersion(parity, lo, v);
    let fhi = dispersion(parity, hi, v);
    if flo * fhi > T::zero() {
        return Err(HsieError::NoGuidedMode(format!("no sign change for {parity:?} branch {branch}")));
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = dispersion(parity, mid, v);
        if fm == T::zero() {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let x = (lo + hi) * T::lit(0.5);
    let gamma = x / half_width;
    let beta = (v * v - x * x).max(T::zero()).sqrt() / half_width;
    let kappa_x = (n2 * n2 * kappa * kappa - gamma * gamma).sqrt();
    let half = T::lit(0.5);
    let e = (beta * half_width).exp();
    let c = match parity {
        Parity::Even => {
            let c4 = cr((gamma * half_width).cos() * e);
            [c4, cr(half), cr(half), c4]
        }
        Parity::Odd => {
            let c4 = cr((gamma * half_width).sin() * e);
            [-c4, ci::<T>() * half, -ci::<T>() * half, c4]
        }
    };
    Ok(SlabMode {
        kappa,
        half_width,
        n1,
        n2,
        kappa_x,
        gamma,
        beta,
        c,
        parity,
    })
}

impl<T: Real> SlabMode<T> {
    /// `v(y)` and `v'(y)` in the waveguide frame.
    pub fn profile(&self, y: T) -> (Complex<T>, Complex<T>) {
        let a = self.half_width;
        if y >= a {
            let v = self.c[3] * (-self.beta * y).exp();
            (v, v * (-self.beta))
        } else if y <= -a {
            let v = self.c[0] * (self.beta * y).exp();
            (v, v * self.beta)
        } else {
            let i = ci::<T>();
            let em = (-i * cr(self.gamma * y)).exp();
            let ep = (i * cr(self.gamma * y)).exp();
            let v = self.c[1] * em + self.c[2] * ep;
            let d = (self.c[2] * ep - self.c[1] * em) * i * self.gamma;
            (v, d)
        }
    }

    /// Helmholtz coefficient `n(y)`.
    pub fn coefficient(&self, y: T) -> T {
        if y.abs() < self.half_width {
            self.n2 * self.n2
        } else {
            self.n1 * self.n1
        }
    }
}

impl SlabMode<f64> {
    /// `u_i` and its gradient for a waveguide centered at `y = center`,
    /// propagating in `+x` with phase zero at `x = x0`.
    pub fn field(&self, center: f64, x0: f64) -> impl Fn(Point) -> (C64, [C64; 2]) + Sync + '_ {
        move |p| {
            let (v, dv) = self.profile(p[1] - center);
            let phase = (C64::i() * self.kappa_x * (p[0] - x0)).exp();
            (v * phase, [C64::i() * self.kappa_x * v * phase, dv * phase])
        }
    }
}

/// Incoming data of a mode on the given boundary edges; values below
/// `1e-12 max|v|` are set to zero.
pub fn eval_incoming(
    space: &FeSpace,
    mode: &SlabMode<f64>,
    center: f64,
    x0: f64,
    edges: impl IntoIterator<Item = usize>,
    corner_tol: f64,
) -> IncomingField {
    let f = mode.field(center, x0);
    let mut inc = IncomingField::sample(space, edges, &f, corner_tol);
    let cut = 1e-12;
    for tr in inc.edges.values_mut() {
        for (d, n) in tr.g_d.iter_mut().zip(tr.g_n.iter_mut()) {
            if d.norm() < cut {
                *d = C64::new(0.0, 0.0);
                *n = C64::new(0.0, 0.0);
            }
        }
    }
    inc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn paper_mode() -> SlabMode<f64> {
        solve_slab_mode(2.0 * PI / 1.5, 0.0365, 1.45, 3.4, Parity::Even, 0).unwrap()
    }

    #[test]
    fn paper_fundamental_mode() {
        let m = paper_mode();
        let k = 2.0 * PI / 1.5;
        assert!(m.kappa_x > 1.45 * k && m.kappa_x < 3.4 * k);
        // pinned from a 1e-13 bisection
        assert!((m.kappa_x - 8.090305884986734).abs() < 1e-10);
        assert!(dispersion_residual(&m).abs() < 1e-12);
        assert_eq!(mode_count(k, 0.0365, 1.45, 3.4, Parity::Even), 1);
        assert_eq!(mode_count(k, 0.0365, 1.45, 3.4, Parity::Odd), 0);
        let err = solve_slab_mode(k, 0.0365, 1.45, 3.4, Parity::Odd, 0).unwrap_err();
        assert!(matches!(err, HsieError::NoGuidedMode(_)));
    }

    #[test]
    fn continuity_and_symmetry() {
        for (parity, branch) in [(Parity::Even, 0), (Parity::Even, 1), (Parity::Odd, 0), (Parity::Odd, 1)] {
            let m = solve_slab_mode(2.0 * PI / 1.5, 0.6, 1.45, 3.4, parity, branch).unwrap();
            let a = m.half_width;
            let eps = 1e-13;
            for y in [a, -a] {
                let (vi, di) = m.profile(y * (1.0 - eps));
                let (vo, do_) = m.profile(y * (1.0 + eps));
                assert!((vi - vo).norm() < 1e-11, "{parity:?} {branch}");
                assert!((di - do_).norm() < 1e-10 * m.gamma.max(m.beta));
            }
            let sign = if parity == Parity::Even { 1.0 } else { -1.0 };
            for k in 0..50 {
                let y = 0.05 * k as f64;
                assert!((m.profile(y).0 - m.profile(-y).0 * sign).norm() < 1e-12);
            }
            assert!(m.profile(5.0).0.norm() < 1e-3);
        }
    }

    #[test]
    fn ode_residual() {
        let m = solve_slab_mode(2.0 * PI / 1.5, 0.6, 1.45, 3.4, Parity::Odd, 1).unwrap();
        let a = m.half_width;
        let h = 1e-4;
        for (lo, hi) in [(-3.0 * a, -a), (-a, a), (a, 3.0 * a)] {
            for k in 1..100 {
                let y = lo + (hi - lo) * k as f64 / 100.0;
                let f = |y: f64| m.profile(y).0;
                let d2 = (f(y + h) - f(y) * 2.0 + f(y - h)) / (h * h);
                let r = -d2 - f(y) * (m.kappa * m.kappa * m.coefficient(y)) + f(y) * (m.kappa_x * m.kappa_x);
                assert!(r.norm() < h * h * m.gamma.max(m.beta).powi(4) / 6.0, "{y}: {r}");
            }
        }
    }

    #[test]
    fn mode_count_matches_scan() {
        for a in [0.0365, 0.3, 0.6, 1.1] {
            let k = 2.0 * PI / 1.5;
            let v: f64 = k * a * (3.4f64.powi(2) - 1.45f64.powi(2)).sqrt();
            for parity in [Parity::Even, Parity::Odd] {
                let n = 20000;
                let mut count = 0;
                let mut prev = dispersion(parity, 1e-12, v);
                for i in 1..=n {
                    let x = v * i as f64 / n as f64;
                    let f = dispersion(parity, x, v);
                    if f == 0.0 || f.signum() != prev.signum() {
                        count += 1;
                    }
                    prev = f;
                }
                // the odd function vanishes at X = V only when V is a cutoff
                assert_eq!(mode_count(k, a, 1.45, 3.4, parity), count, "a={a} {parity:?}");
            }
        }
    }

    #[test]
    fn branch_out_of_range() {
        let err = solve_slab_mode(2.0 * PI / 1.5, 0.6, 1.45, 3.4, Parity::Even, 5).unwrap_err();
        assert!(matches!(err, HsieError::BranchOutOfRange { .. }));
    }

    #[test]
    fn helmholtz_residual_2d() {
        let m = paper_mode();
        let f = m.field(0.0, 0.0);
        let h = 1e-3;
        for &(x, y) in &[(0.1, 0.01), (0.3, 0.2), (-0.2, -0.5)] {
            let u = |x: f64, y: f64| f([x, y]).0;
            let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - u(x, y) * 4.0) / (h * h);
            let r = -lap - u(x, y) * (m.kappa * m.kappa * m.coefficient(y));
            let k = m.kappa_x.max(m.gamma);
            assert!(r.norm() < h * h * k.powi(4) / 6.0, "{r}");
        }
    }

    #[test]
    fn f32_mode() {
        let m = solve_slab_mode(2.0f32 * std::f32::consts::PI / 1.5, 0.0365, 1.45, 3.4, Parity::Even, 0).unwrap();
        let d = paper_mode();
        assert!((m.kappa_x as f64 - d.kappa_x).abs() < 1e-4 * d.kappa_x);
    }

    #[test]
    fn neumann_data_follows_outward_normal() {
        use crate::mesh::{straight_waveguide, tags, StraightWaveguide};
        let g = StraightWaveguide { height: 12.0, ..Default::default() };
        let mesh = straight_waveguide(&g, 1.0).unwrap();
        let space = FeSpace::new(&mesh, 2).unwrap();
        let m = paper_mode();
        let edges = 0..mesh.boundary_edges.len();
        let inc = eval_incoming(&space, &m, 0.0, 0.0, edges, 0.0);
        let mut seen = [0, 0];
        for (&k, tr) in &inc.edges {
            let sign = match mesh.boundary_edges[k].tag {
                tags::LEFT => -1.0,
                tags::RIGHT => 1.0,
                _ => continue,
            };
            seen[(sign > 0.0) as usize] += 1;
            for (d, n) in tr.g_d.iter().zip(&tr.g_n) {
                let want = C64::i() * m.kappa_x * sign * d;
                assert!((n - want).norm() <= 1e-12 * (1.0 + want.norm()));
            }
        }
        assert!(seen[0] > 0 && seen[1] > 0);
        // far from the core the data is clamped to zero
        let top = inc.edges.iter().find(|(&k, _)| mesh.boundary_edges[k].tag == tags::TOP).unwrap().1;
        assert!(top.g_d.iter().chain(&top.g_n).all(|v| *v == C64::new(0.0, 0.0)));
    }
}
