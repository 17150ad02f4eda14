//! Legendre-Gauss-Lobatto collocation and its summation-by-parts operators.
//!
//! For `M = diag(weights)` and `B = diag(-1, 0, ..., 0, 1)`,
//! `M D + D^T M = B` holds up to round-off.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    // P_n' from the standard three-term identity; exact form at the endpoints.
    let nf = n as f64;
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        0.5 * x.powi(n as i32 + 1) * nf * (nf + 1.0)
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureOperator {
    r: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Row-major `(r+1) x (r+1)`; `d[j * n + l] = L_l'(xi_j)`.
    d: Vec<f64>,
}

impl QuadratureOperator {
    pub fn degree(&self) -> usize {
        self.r
    }

    pub fn num_nodes(&self) -> usize {
        self.r + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn d(&self, j: usize, l: usize) -> f64 {
        self.d[j * (self.r + 1) + l]
    }

    pub fn d_matrix(&self) -> &[f64] {
        &self.d
    }

    /// Boundary matrix entry `B_jj`.
    pub fn b(&self, j: usize) -> f64 {
        if j == 0 {
            -1.0
        } else if j == self.r {
            1.0
        } else {
            0.0
        }
    }

    /// Operator with one difference-matrix entry overwritten; only useful to
    /// exercise residual checks.
    pub fn with_d_entry(&self, j: usize, l: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.d[j * (self.r + 1) + l] = value;
        out
    }

    /// Square matrix `V[j][m] = P_m(xi_j)`.
    pub fn legendre_vandermonde(&self) -> Vec<Vec<f64>> {
        self.nodes
            .iter()
            .map(|&x| (0..=self.r).map(|m| legendre(m, x).0).collect())
            .collect()
    }
}

pub fn build_operator(r: usize) -> Result<QuadratureOperator> {
    if !(1..=MAX_DEGREE).contains(&r) {
        return Err(Error::InvalidDegree(r));
    }
    let n = r + 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[r] = 1.0;
    for (j, node) in nodes.iter_mut().enumerate().take(r).skip(1) {
        // Interior nodes are roots of P_r'; Chebyshev-Gauss-Lobatto start.
        let mut x = -(std::f64::consts::PI * j as f64 / r as f64).cos();
        for _ in 0..100 {
            let (p, _) = legendre(r, x);
            let (pm, _) = legendre(r - 1, x);
            let dx = (x * p - pm) / (n as f64 * p);
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        *node = x;
    }
    // Enforce exact antisymmetry of the node set.
    for j in 0..n / 2 {
        let m = 0.5 * (nodes[r - j] - nodes[j]);
        nodes[j] = -m;
        nodes[r - j] = m;
    }
    if n % 2 == 1 {
        nodes[r / 2] = 0.0;
    }
    let rf = r as f64;
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let p = legendre(r, x).0;
            2.0 / (rf * (rf + 1.0) * p * p)
        })
        .collect();

    // Barycentric differentiation; diagonal fixed by the zero row sum.
    let bary: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = 0.0;
        for l in 0..n {
            if l != j {
                let v = bary[l] / (bary[j] * (nodes[j] - nodes[l]));
                d[j * n + l] = v;
                diag -= v;
            }
        }
        d[j * n + j] = diag;
    }
    Ok(QuadratureOperator {
        r,
        nodes,
        weights,
        d,
    })
}

/// `max |M D + D^T M - B|` entrywise.
pub fn sbp_residual(op: &QuadratureOperator) -> f64 {
    let n = op.num_nodes();
    let w = op.weights();
    let mut res = 0.0f64;
    for j in 0..n {
        for l in 0..n {
            let q = w[j] * op.d(j, l) + op.d(l, j) * w[l];
            let b = if j == l { op.b(j) } else { 0.0 };
            res = res.max((q - b).abs());
        }
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn degree_one_tables() {
        let op = build_operator(1).unwrap();
        assert_eq!(op.nodes(), &[-1.0, 1.0]);
        assert_eq!(op.weights(), &[1.0, 1.0]);
        assert_eq!(op.d_matrix(), &[-0.5, 0.5, -0.5, 0.5]);
        assert!(sbp_residual(&op) <= 1e-16);
    }

    #[test]
    fn degree_two_tables() {
        let op = build_operator(2).unwrap();
        let nodes = [-1.0, 0.0, 1.0];
        let weights = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        let d = [-1.5, 2.0, -0.5, -0.5, 0.0, 0.5, 0.5, -2.0, 1.5];
        for j in 0..3 {
            assert_close(op.nodes()[j], nodes[j], 1e-15);
            assert_close(op.weights()[j], weights[j], 1e-15);
        }
        for k in 0..9 {
            assert_close(op.d_matrix()[k], d[k], 1e-14);
        }
    }

    #[test]
    fn sbp_identity_and_invariants() {
        for r in 1..=MAX_DEGREE {
            let op = build_operator(r).unwrap();
            assert!(sbp_residual(&op) < 1e-14, "r = {r}: {}", sbp_residual(&op));
            assert!((op.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
            assert!(op.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(op.weights().iter().all(|&w| w > 0.0));
            for j in 0..=r {
                let row: f64 = (0..=r).map(|l| op.d(j, l)).sum();
                assert!(row.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn out_of_range_degree() {
        assert!(matches!(build_operator(0), Err(Error::InvalidDegree(0))));
        assert!(build_operator(9).is_err());
    }

    #[test]
    fn corrupted_operator_is_detected() {
        let op = build_operator(3).unwrap();
        let bad = op.with_d_entry(1, 2, op.d(1, 2) + 1e-3);
        let res = sbp_residual(&bad);
        assert!((res - op.weights()[1] * 1e-3).abs() < 1e-12, "{res}");
    }

    #[test]
    fn quadrature_exactness() {
        for r in 1..=MAX_DEGREE {
            let op = build_operator(r).unwrap();
            for q in 0..=(2 * r - 1) {
                let num: f64 = op
                    .nodes()
                    .iter()
                    .zip(op.weights())
                    .map(|(x, w)| w * x.powi(q as i32))
                    .sum();
                let exact = if q % 2 == 1 {
                    0.0
                } else {
                    2.0 / (q as f64 + 1.0)
                };
                assert!((num - exact).abs() < 1e-13, "r = {r}, q = {q}");
            }
        }
    }

    #[test]
    fn differentiates_polynomials() {
        for r in 1..=MAX_DEGREE {
            let op = build_operator(r).unwrap();
            for q in 0..=r {
                for j in 0..=r {
                    let num: f64 = (0..=r)
                        .map(|l| op.d(j, l) * op.nodes()[l].powi(q as i32))
                        .sum();
                    let exact = if q == 0 {
                        0.0
                    } else {
                        q as f64 * op.nodes()[j].powi(q as i32 - 1)
                    };
                    assert!((num - exact).abs() < 1e-12, "r = {r}, q = {q}, j = {j}");
                }
            }
        }
    }
}
