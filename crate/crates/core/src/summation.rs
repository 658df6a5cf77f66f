//! Position grids, the summation curve `S(x) = Σ_k |g_0(x − q_k)|²` and the
//! partition of unity `χ_k = |g_0(x − q_k)|² / S(x)` built from it.
//!
//! Grids are aligned with the eigenvectors of `Im C`: with `Im C = U Λ Uᵀ`,
//! point `k` sits at `center + U ℓ_k` where `ℓ_k` is the axis-aligned offset.

use std::f64::consts::PI;

use crate::error::{GwptError, Result};
use crate::gaussian::WidthMatrix;
use crate::linalg::{self, RMatrix, RVector};

/// The lattice window extends until terms drop below this fraction of the peak term.
const LATTICE_REL_CUTOFF: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// `k_n ∈ {1..M}`, offsets `−L_q + (2k_n − 1)Δq/2`.
    Finite,
    /// `k_n ∈ ℤ`, offsets `k_n Δq`.
    IntegerLattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionGrid {
    center: RVector,
    half_length: f64,
    points_per_dim: usize,
    dq: f64,
    u: RMatrix,
    lambdas: RVector,
    mode: GridMode,
}

impl PositionGrid {
    /// `M^d` points on the box `center ± L_q`, spacing `Δq = 2L_q/M`.
    pub fn finite(center: RVector, half_length: f64, points_per_dim: usize, width: &WidthMatrix) -> Result<Self> {
        if center.len() != width.dim() {
            return Err(GwptError::DimensionMismatch { expected: width.dim(), found: center.len() });
        }
        if !(half_length > 0.0 && half_length.is_finite()) || points_per_dim == 0 {
            return Err(GwptError::InvalidArgument(format!(
                "position box needs L_q > 0 and M >= 1 (got {half_length}, {points_per_dim})"
            )));
        }
        let (lambdas, u) = linalg::symmetric_eigen(width.imag());
        Ok(Self {
            center,
            half_length,
            points_per_dim,
            dq: 2.0 * half_length / points_per_dim as f64,
            u,
            lambdas,
            mode: GridMode::Finite,
        })
    }

    /// The infinite lattice `origin + U (k Δq)`, `k ∈ ℤ^d`.
    pub fn lattice(origin: RVector, dq: f64, width: &WidthMatrix) -> Result<Self> {
        if origin.len() != width.dim() {
            return Err(GwptError::DimensionMismatch { expected: width.dim(), found: origin.len() });
        }
        if !(dq > 0.0 && dq.is_finite()) {
            return Err(GwptError::InvalidArgument(format!("lattice spacing must be positive, got {dq}")));
        }
        let (lambdas, u) = linalg::symmetric_eigen(width.imag());
        Ok(Self {
            center: origin,
            half_length: f64::INFINITY,
            points_per_dim: 0,
            dq,
            u,
            lambdas,
            mode: GridMode::IntegerLattice,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &RVector {
        &self.center
    }

    /// `L_q`; infinite on the lattice.
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// `M`; zero on the lattice.
    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn rotation(&self) -> &RMatrix {
        &self.u
    }

    pub fn lambdas(&self) -> &RVector {
        &self.lambdas
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    /// Number of points (finite mode only).
    pub fn len(&self) -> usize {
        match self.mode {
            GridMode::Finite => self.points_per_dim.pow(self.dim() as u32),
            GridMode::IntegerLattice => usize::MAX,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis-aligned offset of index `k` along one eigen-direction.
    fn offset_1d(&self, k: i64) -> f64 {
        match self.mode {
            GridMode::Finite => -self.half_length + (2 * k - 1) as f64 * self.dq / 2.0,
            GridMode::IntegerLattice => k as f64 * self.dq,
        }
    }

    fn check_index(&self, k: &[i64]) -> Result<()> {
        let out_of_range = k.len() != self.dim()
            || (self.mode == GridMode::Finite
                && k.iter().any(|&kn| kn < 1 || kn > self.points_per_dim as i64));
        if out_of_range {
            return Err(GwptError::IndexOutOfRange { index: k.to_vec(), points: self.points_per_dim });
        }
        Ok(())
    }

    /// Position of grid point `k`.
    pub fn point(&self, k: &[i64]) -> Result<RVector> {
        self.check_index(k)?;
        Ok(self.point_unchecked(k))
    }

    fn point_unchecked(&self, k: &[i64]) -> RVector {
        let local = RVector::from_iterator(k.len(), k.iter().map(|&kn| self.offset_1d(kn)));
        &self.center + &self.u * local
    }

    /// All finite-grid indices and points, row-major in `(k_1, …, k_d)`.
    pub fn points(&self) -> Result<Vec<(Vec<i64>, RVector)>> {
        if self.mode != GridMode::Finite {
            return Err(GwptError::InvalidArgument("cannot enumerate an infinite lattice".into()));
        }
        Ok(multi_indices(self.dim(), 1, self.points_per_dim as i64)
            .into_iter()
            .map(|k| {
                let q = self.point_unchecked(&k);
                (k, q)
            })
            .collect())
    }

    /// Coordinates of `x − center` in the eigenbasis.
    fn local(&self, x: &[f64]) -> RVector {
        let shifted = RVector::from_iterator(x.len(), x.iter().zip(self.center.iter()).map(|(a, b)| a - b));
        self.u.transpose() * shifted
    }

    /// Lattice indices whose terms matter near `x`.
    fn lattice_window(&self, x: &[f64], eps: f64) -> Vec<Vec<i64>> {
        let local = self.local(x);
        let sigma = self.lambdas[0];
        // exp(-σ (r Δq)²/ε) < 1e-18 relative to the peak term
        let reach = (eps * (1.0 / LATTICE_REL_CUTOFF).ln() / sigma).sqrt();
        let radius = (reach / self.dq).ceil() as i64 + 1;
        let nearest: Vec<i64> = local.iter().map(|v| (v / self.dq).round() as i64).collect();
        multi_indices(self.dim(), -radius, radius)
            .into_iter()
            .map(|off| off.iter().zip(&nearest).map(|(a, b)| a + b).collect())
            .collect()
    }
}

/// Row-major enumeration of `{lo..=hi}^d`, last index fastest.
pub fn multi_indices(d: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    if hi < lo {
        return Vec::new();
    }
    let span = (hi - lo + 1) as usize;
    let total = span.pow(d as u32);
    (0..total)
        .map(|mut flat| {
            let mut idx = vec![0i64; d];
            for n in (0..d).rev() {
                idx[n] = lo + (flat % span) as i64;
                flat /= span;
            }
            idx
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummationCurve {
    grid: PositionGrid,
    width: WidthMatrix,
    eps: f64,
    prefactor: f64,
}

impl SummationCurve {
    pub fn new(grid: PositionGrid, width: WidthMatrix, eps: f64) -> Result<Self> {
        if grid.dim() != width.dim() {
            return Err(GwptError::DimensionMismatch { expected: width.dim(), found: grid.dim() });
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(GwptError::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        let d = width.dim() as f64;
        let prefactor = (PI * eps).powf(-d / 2.0) * width.imag_det().sqrt();
        Ok(Self { grid, width, eps, prefactor })
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn width(&self) -> &WidthMatrix {
        &self.width
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `|g_0(y)|² = (πε)^{-d/2} det(Im C)^{1/2} exp(−yᵀ Im C y / ε)`.
    pub fn squared_envelope(&self, y: &[f64]) -> f64 {
        let im = self.width.imag();
        let d = y.len();
        let mut quad = 0.0;
        for r in 0..d {
            for s in 0..d {
                quad += y[r] * im[(r, s)] * y[s];
            }
        }
        self.prefactor * (-quad / self.eps).exp()
    }

    fn term(&self, x: &[f64], q: &RVector) -> f64 {
        let y: Vec<f64> = x.iter().zip(q.iter()).map(|(a, b)| a - b).collect();
        self.squared_envelope(&y)
    }

    /// Direct evaluation of `S(x)`.
    pub fn direct(&self, x: &[f64]) -> f64 {
        match self.grid.mode {
            GridMode::Finite => {
                let m = self.grid.points_per_dim as i64;
                multi_indices(self.grid.dim(), 1, m)
                    .iter()
                    .map(|k| self.term(x, &self.grid.point_unchecked(k)))
                    .sum()
            }
            GridMode::IntegerLattice => {
                let mut terms: Vec<f64> = self
                    .grid
                    .lattice_window(x, self.eps)
                    .iter()
                    .map(|k| self.term(x, &self.grid.point_unchecked(k)))
                    .collect();
                // ascending order keeps the tail from being swamped
                terms.sort_by(f64::total_cmp);
                terms.iter().sum()
            }
        }
    }

    /// `χ_k(x) = |g_0(x − q_k)|² / S(x)`.
    pub fn partition_weight(&self, k: &[i64], x: &[f64]) -> Result<f64> {
        let q = self.grid.point(k)?;
        Ok(self.term(x, &q) / self.direct(x))
    }

    /// Indices contributing at `x`: the whole grid in finite mode, the
    /// truncation window on the lattice.
    pub fn active_indices(&self, x: &[f64]) -> Vec<Vec<i64>> {
        match self.grid.mode {
            GridMode::Finite => multi_indices(self.grid.dim(), 1, self.grid.points_per_dim as i64),
            GridMode::IntegerLattice => self.grid.lattice_window(x, self.eps),
        }
    }

    /// `S(x)` as the product of one-dimensional curves along the
    /// eigenvectors of `Im C`.
    pub fn product(&self, x: &[f64]) -> f64 {
        let local = self.grid.local(x);
        let eps = self.eps;
        (0..self.grid.dim())
            .map(|n| {
                let lambda = self.grid.lambdas[n];
                let pref = (PI * eps).powf(-0.5) * lambda.sqrt();
                let y = local[n];
                let term = |k: i64| {
                    let t = y - self.grid.offset_1d(k);
                    pref * (-lambda * t * t / eps).exp()
                };
                match self.grid.mode {
                    GridMode::Finite => (1..=self.grid.points_per_dim as i64).map(term).sum::<f64>(),
                    GridMode::IntegerLattice => {
                        let reach = (eps * (1.0 / LATTICE_REL_CUTOFF).ln() / lambda).sqrt();
                        let radius = (reach / self.grid.dq).ceil() as i64 + 1;
                        let nearest = (y / self.grid.dq).round() as i64;
                        let mut terms: Vec<f64> =
                            (nearest - radius..=nearest + radius).map(term).collect();
                        terms.sort_by(f64::total_cmp);
                        terms.iter().sum()
                    }
                }
            })
            .product()
    }
}

impl SummationCurve {
    /// Cosine-series value of the infinite lattice through the same grid
    /// points, as a product over the eigen-directions of `Im C`.
    pub fn expansion(&self, x: &[f64], n_terms: usize) -> f64 {
        let local = self.grid.local(x);
        let shift = self.grid.offset_1d(0);
        (0..self.grid.dim())
            .map(|n| summation_expansion(self.grid.dq, self.grid.lambdas[n], self.eps, local[n] - shift, n_terms))
            .product()
    }
}

pub fn summation_direct(curve: &SummationCurve, x: &[f64]) -> f64 {
    curve.direct(x)
}

pub fn summation_product(curve: &SummationCurve, x: &[f64]) -> f64 {
    curve.product(x)
}

pub fn partition_weight(curve: &SummationCurve, k: &[i64], x: &[f64]) -> Result<f64> {
    curve.partition_weight(k, x)
}

/// Partial sum of the cosine series of the one-dimensional lattice curve,
/// `1/Δq + (2/Δq) Σ_{n=1}^{n_terms} cos(2πnx/Δq) exp(−π²n²ε/(γ_i Δq²))`.
pub fn summation_expansion(dq: f64, gamma_i: f64, eps: f64, x: f64, n_terms: usize) -> f64 {
    let decay = PI * PI * eps / (gamma_i * dq * dq);
    let tail: f64 = (1..=n_terms)
        .map(|n| {
            let n = n as f64;
            (2.0 * PI * n * x / dq).cos() * (-decay * n * n).exp()
        })
        .sum();
    (1.0 + 2.0 * tail) / dq
}

/// `c_s Δq^{2s−1}` with `c_s = 2 s! γ_i^s / (π^{2s} ε^s)`, a uniform bound on
/// `|S(x) − 1/Δq|` for the one-dimensional lattice.
pub fn spectral_bound(s: u32, dq: f64, gamma_i: f64, eps: f64) -> f64 {
    let s_fact: f64 = (1..=s).map(f64::from).product();
    let c_s = 2.0 * s_fact * gamma_i.powi(s as i32) / (PI.powi(2 * s as i32) * eps.powi(s as i32));
    c_s * dq.powi(2 * s as i32 - 1)
}

/// Upper bound on `Σ_{k∈ℤ} |g_0(x − kΔq)|`:
/// `√2 (πε)^{1/4} γ_i^{-1/4} (1/Δq)(1 + Δq √(γ_i/(2πε)))`.
pub fn bound_upper(dq: f64, eps: f64, gamma_i: f64) -> Result<f64> {
    if !(dq > 0.0 && eps > 0.0 && gamma_i > 0.0) {
        return Err(GwptError::InvalidArgument("bound parameters must be positive".into()));
    }
    Ok(2f64.sqrt() * (PI * eps).powf(0.25) * gamma_i.powf(-0.25) / dq
        * (1.0 + dq * (gamma_i / (2.0 * PI * eps)).sqrt()))
}

/// Lower bound on `S` over the box for the finite one-dimensional grid:
/// `(1/2Δq)[erf(2L_q√(γ_i/ε)) − erf(Δq√(γ_i/ε))]`.
pub fn bound_lower(dq: f64, eps: f64, gamma_i: f64, half_length: f64) -> Result<f64> {
    if !(dq > 0.0 && eps > 0.0 && gamma_i > 0.0 && half_length > 0.0) {
        return Err(GwptError::InvalidArgument("bound parameters must be positive".into()));
    }
    if dq >= 2.0 * half_length {
        return Err(GwptError::InvalidGeometry { dq, box_length: 2.0 * half_length });
    }
    let r = (gamma_i / eps).sqrt();
    Ok((libm::erf(2.0 * half_length * r) - libm::erf(dq * r)) / (2.0 * dq))
}
