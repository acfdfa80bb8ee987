//! Gauss rules on the unit interval and the reference triangle.

use crate::scalar::Real;

/// Nodes and weights of a quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1d<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

/// Triangle rule on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleTri<T> {
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    if n == 0 {
        return (T::one(), T::zero());
    }
    let (mut p0, mut p1) = (T::one(), x);
    for k in 2..=n {
        let kf = T::count(k);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::count(n);
    let dp = if (x.abs() - T::one()).abs() < T::epsilon() {
        // P_n'(±1) = (±1)^{n-1} n (n + 1) / 2
        let v = nf * (nf + T::one()) / T::lit(2.0);
        if x < T::zero() && n.is_multiple_of(2) {
            -v
        } else {
            v
        }
    } else {
        nf * (x * p1 - p0) / (x * x - T::one())
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre<T: Real>(n: usize) -> Rule1d<T> {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut points = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let pi = T::PI();
    for i in 0..n.div_ceil(2) {
        let mut x = (pi * (T::count(i) + T::lit(0.75)) / (T::count(n) + T::lit(0.5))).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = T::zero();
    }
    Rule1d { points, weights }
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit<T: Real>(n: usize) -> Rule1d<T> {
    let r = gauss_legendre::<T>(n);
    let half = T::lit(0.5);
    Rule1d {
        points: r.points.iter().map(|&x| (x + T::one()) * half).collect(),
        weights: r.weights.iter().map(|&w| w * half).collect(),
    }
}

/// The `n + 1` Gauss-Lobatto-Legendre nodes on `[-1, 1]` in increasing order.
pub fn gauss_lobatto_nodes<T: Real>(n: usize) -> Vec<T> {
    assert!(n >= 1, "Lobatto nodes need at least two points");
    let mut x = vec![T::zero(); n + 1];
    x[0] = -T::one();
    x[n] = T::one();
    let pi = T::PI();
    for i in 1..n {
        // roots of P_n' by Newton on (1 - x^2) P_n'(x) = n (P_{n-1} - x P_n)
        let mut xi = -(pi * T::count(i) / T::count(n)).cos();
        for _ in 0..100 {
            let (p, _) = legendre(n, xi);
            let (pm, _) = legendre(n - 1, xi);
            let nf = T::count(n);
            let f = nf * (pm - xi * p);
            // derivative of (1-x^2) P_n' is -n(n+1) P_n
            let df = -nf * (nf + T::one()) * p;
            let dx = f / df;
            xi -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        x[i] = xi;
    }
    // exact antisymmetry
    for i in 0..n.div_ceil(2) {
        let v = (x[n - i] - x[i]) / T::lit(2.0);
        x[i] = -v;
        x[n - i] = v;
    }
    if n.is_multiple_of(2) {
        x[n / 2] = T::zero();
    }
    x
}

/// Collapsed Gauss rule on the reference triangle with `q` points per
/// direction; exact for polynomials of total degree `2q - 2`.
pub fn triangle_rule<T: Real>(q: usize) -> RuleTri<T> {
    let g = gauss_legendre_unit::<T>(q);
    let mut points = Vec::with_capacity(q * q);
    let mut weights = Vec::with_capacity(q * q);
    for (&s, &ws) in g.points.iter().zip(&g.weights) {
        for (&t, &wt) in g.points.iter().zip(&g.weights) {
            // (s, t) in the unit square -> (s (1 - t), t)
            points.push([s * (T::one() - t), t]);
            weights.push(ws * wt * (T::one() - t));
        }
    }
    RuleTri { points, weights }
}
