//! Nodal Lagrange bases on the unit interval and the reference triangle.
//!
//! Edge nodes are Gauss-Lobatto points, so the trace of the triangle basis on
//! any edge is exactly the interval basis of the same order. Interior triangle
//! nodes follow the Blyth-Pozrikidis construction from the same 1D points.

use crate::dense::DenseMatrix;
use crate::quadrature::gauss_lobatto_nodes;
use crate::scalar::Real;

pub const MAX_ORDER: usize = 7;

/// Gauss-Lobatto points of order `p` mapped to `[0, 1]`.
pub fn lobatto_unit<T: Real>(p: usize) -> Vec<T> {
    let half = T::lit(0.5);
    let mut v: Vec<T> = gauss_lobatto_nodes::<T>(p)
        .into_iter()
        .map(|x| (x + T::one()) * half)
        .collect();
    v[0] = T::zero();
    v[p] = T::one();
    v
}

/// Lagrange basis of order `p` on `[0, 1]` with nodes in increasing order.
#[derive(Clone, Debug)]
pub struct LagrangeLine<T> {
    pub nodes: Vec<T>,
    denom: Vec<T>,
}

impl<T: Real> LagrangeLine<T> {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "order must be at least 1");
        let nodes = lobatto_unit::<T>(p);
        let denom = (0..=p)
            .map(|i| {
                (0..=p)
                    .filter(|&j| j != i)
                    .fold(T::one(), |acc, j| acc * (nodes[i] - nodes[j]))
            })
            .collect();
        Self { nodes, denom }
    }

    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .fold(T::one(), |acc, j| acc * (t - self.nodes[j]))
                    / self.denom[i]
            })
            .collect()
    }

    pub fn eval_deriv(&self, t: T) -> Vec<T> {
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                let mut s = T::zero();
                for k in (0..n).filter(|&k| k != i) {
                    let prod = (0..n)
                        .filter(|&j| j != i && j != k)
                        .fold(T::one(), |acc, j| acc * (t - self.nodes[j]));
                    s += prod;
                }
                s / self.denom[i]
            })
            .collect()
    }
}

/// Jacobi polynomial `P_n^{(alpha, beta)}(x)` and its derivative.
pub fn jacobi<T: Real>(n: usize, alpha: T, beta: T, x: T) -> (T, T) {
    let value = |n: usize, alpha: T, beta: T| -> T {
        if n == 0 {
            return T::one();
        }
        let two = T::lit(2.0);
        let mut p0 = T::one();
        let mut p1 = ((alpha + beta + two) * x + (alpha - beta)) / two;
        for k in 2..=n {
            let kf = T::count(k);
            let c = two * kf + alpha + beta;
            let a1 = two * kf * (kf + alpha + beta) * (c - two);
            let a2 = (c - T::one()) * (alpha * alpha - beta * beta);
            let a3 = (c - two) * (c - T::one()) * c;
            let a4 = two * (kf + alpha - T::one()) * (kf + beta - T::one()) * c;
            let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let p = value(n, alpha, beta);
    let dp = if n == 0 {
        T::zero()
    } else {
        (T::count(n) + alpha + beta + T::one()) / T::lit(2.0)
            * value(n - 1, alpha + T::one(), beta + T::one())
    };
    (p, dp)
}

/// Orthogonal (Dubiner) basis on the triangle with vertices `(-1,-1), (1,-1), (-1,1)`.
fn dubiner<T: Real>(p: usize, r: T, s: T) -> Vec<(T, T, T)> {
    let one = T::one();
    let two = T::lit(2.0);
    let a = if (one - s).abs() <= T::epsilon() {
        -one
    } else {
        two * (one + r) / (one - s) - one
    };
    let b = s;
    let mut out = Vec::with_capacity((p + 1) * (p + 2) / 2);
    for i in 0..=p {
        let (pa, dpa) = jacobi(i, T::zero(), T::zero(), a);
        for j in 0..=(p - i) {
            let (qb, dqb) = jacobi(j, T::count(2 * i + 1), T::zero(), b);
            let w = (one - b).powi(i as i32);
            let value = pa * qb * w;
            let (dr, ds) = if i == 0 {
                (T::zero(), dqb)
            } else {
                let wm = (one - b).powi(i as i32 - 1);
                (
                    two * dpa * qb * wm,
                    wm * (dpa * (one + a) * qb + pa * (dqb * (one - b) - T::count(i) * qb)),
                )
            };
            out.push((value, dr, ds));
        }
    }
    out
}

/// Nodal Lagrange basis of order `p` on the reference triangle
/// `(0,0), (1,0), (0,1)`.
///
/// Node order: the three vertices, then the `p - 1` interior nodes of edges
/// `v0→v1`, `v1→v2`, `v2→v0` (each listed along the edge direction), then the
/// interior nodes.
#[derive(Clone, Debug)]
pub struct LagrangeTriangle<T: Real> {
    order: usize,
    nodes: Vec<[T; 2]>,
    inv_vandermonde: DenseMatrix<T>,
}

impl<T: Real> LagrangeTriangle<T> {
    pub fn new(p: usize) -> Self {
        assert!((1..=MAX_ORDER).contains(&p), "order {p} outside 1..={MAX_ORDER}");
        let nodes = triangle_nodes::<T>(p);
        let n = nodes.len();
        let vander = DenseMatrix::from_fn(n, n, |i, k| {
            let [x, y] = nodes[i];
            let r = x + x - T::one();
            let s = y + y - T::one();
            crate::scalar::cr(dubiner(p, r, s)[k].0)
        });
        let inv_vandermonde = vander
            .inverse(T::lit(1e-14))
            .expect("Vandermonde matrix of unisolvent nodes is invertible");
        Self {
            order: p,
            nodes,
            inv_vandermonde,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    /// Values and reference gradients of all basis functions at `(x, y)`.
    pub fn eval(&self, x: T, y: T) -> (Vec<T>, Vec<[T; 2]>) {
        let n = self.nodes.len();
        let psi = dubiner(self.order, x + x - T::one(), y + y - T::one());
        let two = T::lit(2.0);
        let mut values = vec![T::zero(); n];
        let mut grads = vec![[T::zero(); 2]; n];
        for (k, &(v, dr, ds)) in psi.iter().enumerate() {
            let row = self.inv_vandermonde.row(k);
            for j in 0..n {
                let c = row[j].re;
                values[j] += c * v;
                grads[j][0] += c * dr * two;
                grads[j][1] += c * ds * two;
            }
        }
        (values, grads)
    }

    /// Local node indices on edge `e` (0: v0→v1, 1: v1→v2, 2: v2→v0) in the
    /// edge direction, endpoints included.
    pub fn edge_nodes(&self, e: usize) -> Vec<usize> {
        let p = self.order;
        let (a, b) = [(0, 1), (1, 2), (2, 0)][e];
        let mut out = vec![a];
        out.extend((0..p - 1).map(|k| 3 + e * (p - 1) + k));
        out.push(b);
        out
    }
}

/// Blyth-Pozrikidis nodes in the documented order.
pub fn triangle_nodes<T: Real>(p: usize) -> Vec<[T; 2]> {
    let v = lobatto_unit::<T>(p);
    let three = T::lit(3.0);
    let node = |a0: usize, a1: usize, a2: usize| -> [T; 2] {
        let l1 = (T::one() + v[a1] + v[a1] - v[a0] - v[a2]) / three;
        let l2 = (T::one() + v[a2] + v[a2] - v[a0] - v[a1]) / three;
        [l1, l2]
    };
    let mut nodes = vec![
        [T::zero(), T::zero()],
        [T::one(), T::zero()],
        [T::zero(), T::one()],
    ];
    // edge v0 -> v1: position v[a1]
    for k in 1..p {
        nodes.push([v[k], T::zero()]);
    }
    // edge v1 -> v2: (1 - v[k], v[k])
    for k in 1..p {
        nodes.push([v[p - k], v[k]]);
    }
    // edge v2 -> v0: (0, 1 - v[k])
    for k in 1..p {
        nodes.push([T::zero(), v[p - k]]);
    }
    for a2 in 1..p {
        for a1 in 1..(p - a2) {
            let a0 = p - a1 - a2;
            nodes.push(node(a0, a1, a2));
        }
    }
    nodes
}
