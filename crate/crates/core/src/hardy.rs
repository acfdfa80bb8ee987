//! Hardy space operator matrices and the one-dimensional infinite element.
//!
//! The exterior solution along a ray is represented by its Möbius-transformed
//! Laplace transform in the Hardy space of the unit disk. With `N` Hardy
//! modes the unknowns on a ray are `(u0, U_0, ..., U_N)`: the boundary value
//! `u0` shared with the interior and the monomial coefficients of `U`.
//! Every matrix here acts on that `N + 2` dimensional coefficient space.
//!
//! All pairings are bilinear (plain transposes). The resulting exterior
//! element matrices are complex symmetric and independent of the wavenumber.

use num_complex::Complex;

use crate::dense::DenseMatrix;
use crate::error::{HsieError, Result};
use crate::scalar::{ci, cone, cr, czero, Real};

/// Tuning constant `kappa0` of the pole condition and the number of Hardy modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyParams<T> {
    pub kappa0: Complex<T>,
    pub n_modes: usize,
}

impl<T: Real> HardyParams<T> {
    pub fn new(kappa0: Complex<T>, n_modes: usize) -> Result<Self> {
        if !(kappa0.re > T::zero()) || !kappa0.im.is_finite() {
            return Err(HsieError::InvalidParameter(format!(
                "kappa0 must have positive real part, got {kappa0}"
            )));
        }
        Ok(Self { kappa0, n_modes })
    }

    /// Unknowns per ray: the boundary value plus `n_modes + 1` Hardy coefficients.
    pub fn ray_dofs(&self) -> usize {
        self.n_modes + 2
    }

    /// Whether `kappa` satisfies `Re(kappa / kappa0) > 0`.
    pub fn admits(&self, kappa: Complex<T>) -> bool {
        (kappa / self.kappa0).re > T::zero()
    }
}

/// Sign selecting `T_+` (derivative) or `T_-` (function value) decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformSign {
    Plus,
    Minus,
}

/// `T_{N,±}`: maps `(u0, U)` to the coefficients of `(u0 + (z ± 1) U(z)) / 2`.
///
/// Square of size `n_modes + 2`; the image keeps the `z^{N+1}` coefficient.
pub fn make_t<T: Real>(n_modes: usize, sign: TransformSign) -> DenseMatrix<T> {
    let n = n_modes + 2;
    let half = T::lit(0.5);
    let off = match sign {
        TransformSign::Plus => half,
        TransformSign::Minus => -half,
    };
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cr(half)
        } else if j == i + 1 {
            cr(off)
        } else {
            czero()
        }
    })
}

/// Galerkin matrix of `(DF)(z) = ((z-1)^2 F'(z) + (z-1) F(z)) / (2 i kappa0)` on
/// the monomials `z^0..z^n_modes`; multiplication by the radial variable.
pub fn make_d<T: Real>(n_modes: usize, kappa0: Complex<T>) -> DenseMatrix<T> {
    let n = n_modes + 1;
    let scale = cone::<T>() / (ci::<T>() * kappa0 * T::lit(2.0));
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            scale * (-T::count(2 * i + 1))
        } else if j == i + 1 {
            scale * T::count(j)
        } else if i == j + 1 {
            scale * T::count(i)
        } else {
            czero()
        }
    })
}

/// `(alpha I + beta D)^{-1}`, the discrete counterpart of division by
/// `alpha + beta * xi`.
pub fn make_resolvent<T: Real>(
    n_modes: usize,
    kappa0: Complex<T>,
    alpha: Complex<T>,
    beta: T,
) -> Result<DenseMatrix<T>> {
    let d = make_d(n_modes, kappa0);
    let op = &DenseMatrix::identity(n_modes + 1).scale(alpha) + &d.scale_real(beta);
    let inv = op.inverse(T::lit(1e-12))?;
    // Symmetrize: the exact inverse of a symmetric matrix is symmetric, LU
    // round-off is not.
    let half = T::lit(0.5);
    Ok(DenseMatrix::from_fn(inv.rows(), inv.cols(), |i, j| {
        (inv[(i, j)] + inv[(j, i)]) * half
    }))
}

/// `S^HSM = -2 i kappa0 T_+^T T_+`.
pub fn hsm_stiffness_1d<T: Real>(p: &HardyParams<T>) -> DenseMatrix<T> {
    let tp = make_t::<T>(p.n_modes, TransformSign::Plus);
    tp.transpose()
        .matmul(&tp)
        .scale(-ci::<T>() * p.kappa0 * T::lit(2.0))
}

/// `M^HSM = (2 i / kappa0) T_-^T T_-`.
pub fn hsm_mass_1d<T: Real>(p: &HardyParams<T>) -> DenseMatrix<T> {
    let tm = make_t::<T>(p.n_modes, TransformSign::Minus);
    tm.transpose()
        .matmul(&tm)
        .scale(ci::<T>() * T::lit(2.0) / p.kappa0)
}

/// `-2 T_-^T T_+`: pairs a function with the derivative of another.
pub fn hsm_mixed_1d<T: Real>(n_modes: usize) -> DenseMatrix<T> {
    let tm = make_t::<T>(n_modes, TransformSign::Minus);
    let tp = make_t::<T>(n_modes, TransformSign::Plus);
    tm.transpose().matmul(&tp).scale_real(T::lit(-2.0))
}

/// Exact Hardy-space coefficients `0..=n_modes` of the transformed outgoing
/// wave `u_boundary * exp(i kappa r)`.
pub fn reference_hardy_coefficients<T: Real>(
    kappa: Complex<T>,
    p: &HardyParams<T>,
    u_boundary: Complex<T>,
) -> Vec<Complex<T>> {
    reference_hardy_series(kappa, p.kappa0, u_boundary, p.n_modes + 1)
}

/// First `len` coefficients of `u_boundary / (i(kappa+kappa0)) * sum_j r^j z^j`
/// with `r = (kappa - kappa0) / (kappa + kappa0)`.
pub fn reference_hardy_series<T: Real>(
    kappa: Complex<T>,
    kappa0: Complex<T>,
    u_boundary: Complex<T>,
    len: usize,
) -> Vec<Complex<T>> {
    let ratio = hardy_ratio(kappa, kappa0);
    let mut c = u_boundary / (ci::<T>() * (kappa + kappa0));
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(c);
        c *= ratio;
    }
    out
}

/// `(kappa - kappa0) / (kappa + kappa0)`, the decay ratio of the Hardy series.
pub fn hardy_ratio<T: Real>(kappa: Complex<T>, kappa0: Complex<T>) -> Complex<T> {
    (kappa - kappa0) / (kappa + kappa0)
}

/// Transformed exterior function `(1 / (i kappa0)) T_- (u0, U)` from ray unknowns.
pub fn transformed_exterior<T: Real>(
    kappa0: Complex<T>,
    ray_values: &[Complex<T>],
) -> Vec<Complex<T>> {
    assert!(ray_values.len() >= 2, "ray needs u0 and at least one Hardy coefficient");
    let tm = make_t::<T>(ray_values.len() - 2, TransformSign::Minus);
    let s = cone::<T>() / (ci::<T>() * kappa0);
    tm.matvec(ray_values).into_iter().map(|v| v * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn t_minus_n1() {
        let t = make_t::<f64>(1, TransformSign::Minus);
        let expect = DenseMatrix::from_real_rows(&[
            &[0.5, -0.5, 0.0],
            &[0.0, 0.5, -0.5],
            &[0.0, 0.0, 0.5],
        ]);
        assert_eq!(t, expect);
    }

    #[test]
    fn t_plus_n0() {
        let t = make_t::<f64>(0, TransformSign::Plus);
        assert_eq!(t, DenseMatrix::from_real_rows(&[&[0.5, 0.5], &[0.0, 0.5]]));
    }

    #[test]
    fn t_minus_pure_boundary_value() {
        let t = make_t::<f64>(0, TransformSign::Minus);
        let u0 = C::new(0.7, -1.3);
        let y = t.matvec(&[u0, C::new(0.0, 0.0)]);
        assert_eq!(y, vec![u0 * 0.5, C::new(0.0, 0.0)]);
    }

    #[test]
    fn d_matches_closed_form_n2() {
        let k0 = C::new(1.5, 0.5);
        let d = make_d(2, k0);
        let s = C::new(1.0, 0.0) / (C::new(0.0, 2.0) * k0);
        let expect = [[-1.0, 1.0, 0.0], [1.0, -3.0, 2.0], [0.0, 2.0, -5.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[(i, j)], s * expect[i][j]);
            }
        }
    }

    #[test]
    fn d_column_zero_is_action_on_constant() {
        // D z^0 = (z - 1) / (2 i k0) = (-z^0 + z^1) / (2 i k0)
        let k0 = C::new(8.0, 5.0);
        let d = make_d(4, k0);
        let s = C::new(1.0, 0.0) / (C::new(0.0, 2.0) * k0);
        assert_eq!(d[(0, 0)], -s);
        assert_eq!(d[(1, 0)], s);
        for i in 2..5 {
            assert_eq!(d[(i, 0)], C::new(0.0, 0.0));
        }
    }

    #[test]
    fn resolvent_identity_case() {
        let c = C::new(2.0, -1.0);
        let r = make_resolvent(6, C::new(3.0, 1.0), c, 0.0).unwrap();
        let expect = DenseMatrix::identity(7).scale(C::new(1.0, 0.0) / c);
        assert!(r.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn resolvent_multiplies_back_to_identity() {
        let k0 = C::new(8.0, 5.0);
        let (alpha, beta) = (C::new(1.0, 0.0), 0.3);
        let r = make_resolvent(20, k0, alpha, beta).unwrap();
        let op = &DenseMatrix::identity(21).scale(alpha) + &make_d(20, k0).scale_real(beta);
        let prod = r.matmul(&op);
        assert!(prod.max_abs_diff(&DenseMatrix::identity(21)) < 1e-12);
        assert!(r.symmetry_defect() <= 1e-13 * r.max_abs());
    }

    #[test]
    fn hsm_n0_closed_forms() {
        let k0 = C::new(2.0, 0.7);
        let p = HardyParams::new(k0, 0).unwrap();
        let s = hsm_stiffness_1d(&p);
        let m = hsm_mass_1d(&p);
        let sf = -C::new(0.0, 1.0) * k0 * 0.5;
        let mf = C::new(0.0, 1.0) / (k0 * 2.0);
        let s_expect = [[1.0, 1.0], [1.0, 2.0]];
        let m_expect = [[1.0, -1.0], [-1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(s[(i, j)], sf * s_expect[i][j], 1e-15));
                assert!(close(m[(i, j)], mf * m_expect[i][j], 1e-15));
            }
        }
    }

    #[test]
    fn robin_term_is_exact_at_matched_kappa0() {
        // S00 - kappa^2 M00 = -i kappa when kappa = kappa0.
        let k = C::new(2.3, 0.4);
        let p = HardyParams::new(k, 0).unwrap();
        let v = hsm_stiffness_1d(&p)[(0, 0)] - k * k * hsm_mass_1d(&p)[(0, 0)];
        assert!(close(v, -C::new(0.0, 1.0) * k, 1e-14));
    }

    #[test]
    fn reference_coefficients_single_term_at_matched_kappa0() {
        let k0 = C::new(4.0, 1.0);
        let p = HardyParams::new(k0, 5).unwrap();
        let c = reference_hardy_coefficients(k0, &p, C::new(1.0, 0.0));
        assert!(close(c[0], C::new(1.0, 0.0) / (C::new(0.0, 2.0) * k0), 1e-15));
        assert!(c[1..].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn reference_ratio_minus_one_third() {
        let p = HardyParams::new(C::new(4.0, 0.0), 6).unwrap();
        let c = reference_hardy_coefficients(C::new(2.0, 0.0), &p, C::new(1.0, 0.0));
        for w in c.windows(2) {
            assert!(close(w[1] / w[0], C::new(-1.0 / 3.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn invalid_kappa0_rejected() {
        assert!(HardyParams::new(C::new(-1.0, 2.0), 3).is_err());
        assert!(HardyParams::new(C::new(0.0, 2.0), 3).is_err());
    }

    #[test]
    fn single_precision_kernels() {
        let p = HardyParams::<f32>::new(Complex::new(2.0, 1.0), 4).unwrap();
        let s = hsm_stiffness_1d(&p);
        let m = hsm_mass_1d(&p);
        assert_eq!(s.symmetry_defect(), 0.0);
        assert!(m.symmetry_defect() <= 1e-6 * m.max_abs());
        assert_eq!(make_d::<f32>(5, p.kappa0), make_d::<f32>(5, p.kappa0).transpose());
    }

    /// Integral of exp(2 i k r) over (0, inf) against -2 i k0 <ML f, ML f>
    /// summed from the geometric Hardy series.
    #[test]
    fn bilinear_identity_for_outgoing_wave() {
        let k = C::new(2.0, 1.0);
        let k0 = C::new(2.0, 0.0);
        let exact = C::new(1.0, 0.0) / (C::new(0.0, -2.0) * k);
        let coeffs = reference_hardy_series(k, k0, C::new(1.0, 0.0), 61);
        let pairing: C = coeffs.iter().map(|c| c * c).sum();
        let via_hardy = C::new(0.0, -2.0) * k0 * pairing;
        assert!((via_hardy - exact).norm() <= 1e-10 * exact.norm());
    }

    proptest! {
        #[test]
        fn t_difference_is_unit_superdiagonal(n in 0usize..=50) {
            let d = &make_t::<f64>(n, TransformSign::Plus) - &make_t::<f64>(n, TransformSign::Minus);
            for i in 0..n + 2 {
                for j in 0..n + 2 {
                    let expect = if j == i + 1 { 1.0 } else { 0.0 };
                    prop_assert_eq!(d[(i, j)], C::new(expect, 0.0));
                }
            }
        }

        #[test]
        fn d_is_exactly_symmetric_tridiagonal(n in 0usize..40, re in 0.1f64..10.0, im in -5.0f64..5.0) {
            let d = make_d(n, C::new(re, im));
            prop_assert_eq!(&d, &d.transpose());
            for i in 0..=n {
                for j in 0..=n {
                    if i.abs_diff(j) > 1 {
                        prop_assert_eq!(d[(i, j)], C::new(0.0, 0.0));
                    }
                }
            }
        }

        #[test]
        fn hsm_matrices_symmetric(n in 0usize..30, re in 0.1f64..10.0, im in -5.0f64..5.0) {
            let p = HardyParams::new(C::new(re, im), n).unwrap();
            let s = hsm_stiffness_1d(&p);
            let m = hsm_mass_1d(&p);
            prop_assert!(s.symmetry_defect() <= 1e-15 * s.max_abs());
            prop_assert!(m.symmetry_defect() <= 1e-15 * m.max_abs());
        }

        #[test]
        fn reference_decays_geometrically(kr in 0.1f64..10.0, ki in 0.0f64..3.0,
                                          k0r in 0.1f64..10.0, k0i in 0.0f64..5.0) {
            let k = C::new(kr, ki);
            let k0 = C::new(k0r, k0i);
            let p = HardyParams::new(k0, 12).unwrap();
            prop_assume!(p.admits(k));
            let rho = hardy_ratio(k, k0).norm();
            prop_assert!(rho < 1.0);
            let c = reference_hardy_coefficients(k, &p, C::new(1.0, 0.0));
            for w in c.windows(2) {
                if w[0].norm() > 1e-250 {
                    prop_assert!(((w[1].norm() / w[0].norm()) - rho).abs() <= 1e-14 * rho.max(1e-300));
                }
            }
        }
    }
}
