//! Gauss–Hermite rules for the weight `e^{-s²}`.
//!
//! Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix
//! (off-diagonals `√(k/2)`), polished by Newton steps on the normalized
//! Hermite function `ψ_N`. Weights use the Christoffel form
//! `w_j = e^{-s_j²} / Σ_{k<N} ψ_k(s_j)²`, so the scaled weight
//! `e^{s_j²} w_j = 1 / Σ_{k<N} ψ_k(s_j)²` is available without ever forming
//! `e^{s_j²}` or `w_j` separately.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{GwptError, Result};

pub const MAX_ORDER: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    /// Zeros of `H_N`, strictly increasing.
    pub nodes: Vec<f64>,
    /// Weights for `∫ e^{-s²} h(s) ds`. Entries for the outermost nodes
    /// underflow to zero once `s_j² > ~745`.
    pub weights: Vec<f64>,
    /// `e^{s_j²} w_j`, weights for `∫ h(s) ds`.
    pub scaled_weights: Vec<f64>,
}

impl HermiteRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// Normalized Hermite functions `ψ_0..ψ_{n}` at `s`, returned as `(ψ_{n-1}, ψ_n, Σ_{k<n} ψ_k²)`.
fn hermite_functions(n: usize, s: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * s * s).exp();
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (2.0 / (k + 1) as f64).sqrt() * s * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur, sum_sq)
}

/// Gauss–Hermite nodes and weights of order `n`.
pub fn hermite_rule(n: usize) -> Result<HermiteRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(GwptError::NTooLarge { n, max: MAX_ORDER });
    }
    let jacobi = DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    for s in nodes.iter_mut() {
        for _ in 0..3 {
            let (psi_prev, psi_n, _) = hermite_functions(n, *s);
            let deriv = (2.0 * n as f64).sqrt() * psi_prev - *s * psi_n;
            if deriv == 0.0 {
                break;
            }
            let step = psi_n / deriv;
            *s -= step;
            if step.abs() <= 1e-16 * s.abs().max(1.0) {
                break;
            }
        }
    }
    for j in 0..n / 2 {
        let half = 0.5 * (nodes[n - 1 - j] - nodes[j]);
        nodes[j] = -half;
        nodes[n - 1 - j] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let scaled_weights: Vec<f64> = nodes
        .iter()
        .map(|&s| 1.0 / hermite_functions(n, s).2)
        .collect();
    let weights = nodes
        .iter()
        .zip(&scaled_weights)
        .map(|(&s, &sw)| (-s * s).exp() * sw)
        .collect();
    Ok(HermiteRule { nodes, weights, scaled_weights })
}

/// Weights from `w_j = 2^{N+1} N! √π / H_{N+1}(s_j)²` with physicists'
/// Hermite polynomials. Overflows for large `N`; kept as a cross-check.
pub fn explicit_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let numerator = 2f64.powi(n as i32 + 1) * factorial * PI.sqrt();
    nodes
        .iter()
        .map(|&s| {
            let mut h_prev = 1.0;
            let mut h = 2.0 * s;
            for k in 1..=n {
                let next = 2.0 * s * h - 2.0 * k as f64 * h_prev;
                h_prev = h;
                h = next;
            }
            // h is H_{n+1}
            numerator / (h * h)
        })
        .collect()
}

/// `∫ e^{-s²} s^m ds`: zero for odd `m`, `Γ((m+1)/2)` for even `m`.
pub fn gaussian_moment(m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let mut value = PI.sqrt();
    for k in 1..=(m / 2) {
        value *= k as f64 - 0.5;
    }
    value
}
