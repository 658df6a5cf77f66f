//! Evaluation of reconstructions `ψ_rec(x) = (1/S(x)) Σ_k Σ_j r_{j,k} g_{j,k}(x)`,
//! sup-norm error measurement and the constants of the a-priori error bounds.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{GwptError, Result};
use crate::gaussian::{OverlapParams, PhaseSpacePoint, WavePacket, WidthMatrix};
use crate::linalg::{CMatrix, RVector};
use crate::quadrature::{CoefficientTable, Rule};
use crate::summation::SummationCurve;

pub const MIN_SAMPLES: usize = 64;

/// The basis function `g_0` centered at the origin with zero momentum.
fn origin_packet(width: &WidthMatrix, eps: f64) -> Result<WavePacket> {
    WavePacket::new(PhaseSpacePoint::origin(width.dim()), width.clone(), eps)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    table: CoefficientTable,
    curve: SummationCurve,
    g0: WavePacket,
    /// Momentum nodes, `d` values per node.
    momenta: Vec<f64>,
}

impl Reconstruction {
    pub fn new(table: CoefficientTable, curve: SummationCurve) -> Result<Self> {
        let d = table.dim();
        if curve.grid().dim() != d {
            return Err(GwptError::DimensionMismatch { expected: d, found: curve.grid().dim() });
        }
        if curve.eps() != table.eps {
            return Err(GwptError::EpsMismatch { bra: table.eps, ket: curve.eps() });
        }
        if curve.width() != &table.basis {
            return Err(GwptError::InvalidArgument(
                "summation curve and coefficient table use different basis widths".into(),
            ));
        }
        if curve.grid().len() != table.n_positions() {
            return Err(GwptError::InvalidArgument(format!(
                "coefficient table has {} positions, grid has {}",
                table.n_positions(),
                curve.grid().len()
            )));
        }
        let g0 = origin_packet(&table.basis, table.eps)?;
        let momenta = table.momenta.iter().flat_map(|n| n.p.iter().copied()).collect();
        Ok(Self { table, curve, g0, momenta })
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn curve(&self) -> &SummationCurve {
        &self.curve
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// `ψ_rec(x)`; `x` must have the grid dimension.
    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        let d = self.dim();
        let eps = self.table.eps;
        let mut y = vec![0.0; d];
        let mut total = Complex64::new(0.0, 0.0);
        let mut s = 0.0;
        for (k, (_, q)) in self.table.positions.iter().enumerate() {
            for r in 0..d {
                y[r] = x[r] - q[r];
            }
            let envelope = self.g0.eval(&y);
            let weight = envelope.norm_sqr();
            if weight == 0.0 {
                continue;
            }
            s += weight;
            let mut inner = Complex64::new(0.0, 0.0);
            for (r_jk, p) in self.table.row(k).iter().zip(self.momenta.chunks_exact(d)) {
                let phase: f64 = p.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / eps;
                let (sin, cos) = phase.sin_cos();
                inner += r_jk * Complex64::new(cos, sin);
            }
            total += envelope * inner;
        }
        if s == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        total / s
    }
}

pub fn reconstruct(rec: &Reconstruction, x: &[f64]) -> Result<Complex64> {
    if x.len() != rec.dim() {
        return Err(GwptError::DimensionMismatch { expected: rec.dim(), found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GwptError::NonFinite("evaluation point"));
    }
    Ok(rec.evaluate(x))
}

/// `I_{q_k}(x) = g_0(x − q_k) c(x) ∫ f_x(p) dp`, in closed form.
pub fn semi_discrete_i(q_k: &RVector, psi0: &WavePacket, basis: &WidthMatrix, x: &[f64]) -> Result<Complex64> {
    if x.len() != basis.dim() {
        return Err(GwptError::DimensionMismatch { expected: basis.dim(), found: x.len() });
    }
    let params = OverlapParams::new(basis, psi0, q_k)?;
    let g0 = origin_packet(basis, psi0.eps())?;
    let y: Vec<f64> = x.iter().zip(q_k.iter()).map(|(a, b)| a - b).collect();
    Ok(g0.eval(&y) * params.c_times_integral(x, &params.a_inverse()))
}

/// `(1/S(x)) Σ_k I_{q_k}(x)`, which reproduces `ψ0` exactly.
#[derive(Debug, Clone)]
pub struct SemiDiscrete {
    curve: SummationCurve,
    g0: WavePacket,
    params: Vec<OverlapParams>,
    a_inv: CMatrix,
}

impl SemiDiscrete {
    pub fn new(curve: SummationCurve, psi0: &WavePacket) -> Result<Self> {
        let basis = curve.width().clone();
        if curve.eps() != psi0.eps() {
            return Err(GwptError::EpsMismatch { bra: curve.eps(), ket: psi0.eps() });
        }
        let params = curve
            .grid()
            .points()?
            .iter()
            .map(|(_, q)| OverlapParams::new(&basis, psi0, q))
            .collect::<Result<Vec<_>>>()?;
        let a_inv = match params.first() {
            Some(p) => p.a_inverse(),
            None => CMatrix::zeros(basis.dim(), basis.dim()),
        };
        let g0 = origin_packet(&basis, psi0.eps())?;
        Ok(Self { curve, g0, params, a_inv })
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        let mut y = vec![0.0; x.len()];
        let mut total = Complex64::new(0.0, 0.0);
        let mut s = 0.0;
        for params in &self.params {
            for (r, q) in params.q_k().iter().enumerate() {
                y[r] = x[r] - q;
            }
            let envelope = self.g0.eval(&y);
            let weight = envelope.norm_sqr();
            if weight == 0.0 {
                continue;
            }
            s += weight;
            total += envelope * params.c_times_integral(x, &self.a_inv);
        }
        if s == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        total / s
    }

    pub fn curve(&self) -> &SummationCurve {
        &self.curve
    }
}

/// Uniform tensor sample grid on `center + [−L, L]^d` including the end
/// points, row-major.
pub fn sample_points(center: &RVector, half_length: f64, samples_per_dim: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let step = 2.0 * half_length / (samples_per_dim - 1) as f64;
    let total = samples_per_dim.pow(d as u32);
    (0..total)
        .map(|mut flat| {
            let mut x = vec![0.0; d];
            for r in (0..d).rev() {
                let i = flat % samples_per_dim;
                flat /= samples_per_dim;
                x[r] = center[r] - half_length + i as f64 * step;
            }
            x
        })
        .collect()
}

/// `max |ψ0(x) − approx(x)|` over the uniform sample grid on the box.
pub fn sup_error_of<F>(
    approx: F,
    psi0: &WavePacket,
    center: &RVector,
    half_length: f64,
    samples_per_dim: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if samples_per_dim < MIN_SAMPLES {
        return Err(GwptError::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples per dimension are needed, got {samples_per_dim}"
        )));
    }
    if center.len() != psi0.dim() {
        return Err(GwptError::DimensionMismatch { expected: psi0.dim(), found: center.len() });
    }
    let errors: Vec<f64> = sample_points(center, half_length, samples_per_dim)
        .par_iter()
        .map(|x| (psi0.eval(x) - approx(x)).norm())
        .collect();
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(GwptError::NonFinite("reconstruction error"));
    }
    Ok(errors.into_iter().fold(0.0, f64::max))
}

/// Sup error of a reconstruction on the box of its position grid.
pub fn sup_error(rec: &Reconstruction, psi0: &WavePacket, half_length: f64, samples_per_dim: usize) -> Result<f64> {
    let center = rec.curve().grid().center().clone();
    sup_error_of(|x| rec.evaluate(x), psi0, &center, half_length, samples_per_dim)
}

/// Parameters entering the a-priori error constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub dim: usize,
    pub eps: f64,
    /// Half length of the momentum box.
    pub l_p: f64,
    /// Half length of the position box.
    pub l_q: f64,
    /// Smallest eigenvalue of the basis `Im C`.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedConstants {
    /// Truncation constant `c_T = (2πε)^{d/2} exp(−d L_p²/2ε)`.
    pub c_t: f64,
    /// Midpoint constant `c_cM = d (L_p³/3)(4d(L_p+L_q)²/ε² + 1/ε)`.
    pub c_cm: f64,
    /// Position-sum prefactor `C_Γq`.
    pub c_gamma_q: f64,
    /// Absolute truncation constant `(2πε)^{-d} c_T C_Γq^d`.
    pub big_c_t: f64,
    /// Absolute midpoint constant `(2πε)^{-d} c_cM C_Γq^d`.
    pub big_c_cm: f64,
}

impl PredictedConstants {
    /// `C_T + C_cM N^{-2}`.
    pub fn tcm_bound(&self, n: usize) -> f64 {
        self.big_c_t + self.big_c_cm / (n * n) as f64
    }
}

fn check_inputs(p: &BoundInputs) -> Result<()> {
    let positive = [p.eps, p.l_p, p.l_q, p.sigma];
    if p.dim == 0 || positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(GwptError::InvalidArgument(format!("bound inputs must be positive: {p:?}")));
    }
    Ok(())
}

pub fn predicted_constants(p: &BoundInputs) -> Result<PredictedConstants> {
    check_inputs(p)?;
    let d = p.dim as f64;
    let c_t = (2.0 * PI * p.eps).powf(d / 2.0) * (-d * p.l_p * p.l_p / (2.0 * p.eps)).exp();
    let c_cm = d * p.l_p.powi(3) / 3.0
        * (4.0 * d * (p.l_p + p.l_q).powi(2) / (p.eps * p.eps) + 1.0 / p.eps);
    let c_gamma_q = position_sum_constant(p.eps, p.sigma, p.l_q);
    let scale = (2.0 * PI * p.eps).powf(-d) * c_gamma_q.powf(d);
    Ok(PredictedConstants {
        c_t,
        c_cm,
        c_gamma_q,
        big_c_t: scale * c_t,
        big_c_cm: scale * c_cm,
    })
}

/// `C_Γq = 2√2 (πε)^{1/4} σ^{-1/4} / erf(2L_q√(σ/ε))`.
pub fn position_sum_constant(eps: f64, sigma: f64, l_q: f64) -> f64 {
    2.0 * 2f64.sqrt() * (PI * eps).powf(0.25) * sigma.powf(-0.25) / libm::erf(2.0 * l_q * (sigma / eps).sqrt())
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Bound on the `s`-th momentum derivative of the integrand:
/// `(s!/ε^s) Σ_{m≤s/2} ε^{m+1/2}/(2^{m−1} m!) (√ε + 2L_q√d)^{s−2m}`.
pub fn derivative_constant(s: u32, eps: f64, l_q: f64, dim: usize) -> f64 {
    let base = eps.sqrt() + 2.0 * l_q * (dim as f64).sqrt();
    let sum: f64 = (0..=s / 2)
        .map(|m| {
            eps.powf(m as f64 + 0.5) / (2f64.powi(m as i32 - 1) * factorial(m)) * base.powi((s - 2 * m) as i32)
        })
        .sum();
    factorial(s) / eps.powi(s as i32) * sum
}

/// `c_s^{RS} = d c_{2s+1} / (2π)^{2s+1}`.
pub fn rs_constant(s: u32, eps: f64, l_q: f64, dim: usize) -> f64 {
    dim as f64 * derivative_constant(2 * s + 1, eps, l_q, dim) / (2.0 * PI).powi(2 * s as i32 + 1)
}

/// Absolute lattice bound `(2πε)^{-d} c_s^{RS} C_Γq^d Δp^{2s+1}`.
pub fn rs_bound(s: u32, dp: f64, p: &BoundInputs) -> Result<f64> {
    check_inputs(p)?;
    let d = p.dim as f64;
    let scale = (2.0 * PI * p.eps).powf(-d) * position_sum_constant(p.eps, p.sigma, p.l_q).powf(d);
    Ok(scale * rs_constant(s, p.eps, p.l_q, p.dim) * dp.powi(2 * s as i32 + 1))
}

/// `√π 2^{(3s+d)/2} d^{s/2+1} ε^{(d−s)/2} L_q^s` with the unknown
/// interpolation constant set to 1, so only the scaling is meaningful.
pub fn gh_shape(s: u32, eps: f64, l_q: f64, dim: usize) -> f64 {
    let (s, d) = (s as f64, dim as f64);
    PI.sqrt() * 2f64.powf((3.0 * s + d) / 2.0) * d.powf(s / 2.0 + 1.0) * eps.powf((d - s) / 2.0) * l_q.powf(s)
}

/// One row of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSweepRecord {
    pub rule: Rule,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub eps: f64,
    /// Momentum half length; TcM only, the lattice reach for RS.
    pub l_p: Option<f64>,
    pub sup_error: f64,
    pub predicted_bound: Option<f64>,
    pub wall_time_s: Option<f64>,
}

pub const SWEEP_HEADER: &str = "rule,N,M,gamma,eps,L_p,sup_error,predicted_bound,wall_time_s";

impl ErrorSweepRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(crate::csv_float).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.rule,
            self.n,
            self.m,
            crate::csv_float(self.gamma),
            crate::csv_float(self.eps),
            opt(self.l_p),
            crate::csv_float(self.sup_error),
            opt(self.predicted_bound),
            opt(self.wall_time_s)
        )
    }
}

impl std::str::FromStr for ErrorSweepRecord {
    type Err = GwptError;

    /// Parses one data row written by [`ErrorSweepRecord::csv_row`].
    fn from_str(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.trim_end().split(',').collect();
        if fields.len() != 9 {
            return Err(GwptError::InvalidArgument(format!("expected 9 CSV fields, found {}", fields.len())));
        }
        let bad = |name: &str| GwptError::InvalidArgument(format!("invalid {name} in '{row}'"));
        let real = |i: usize, name: &str| fields[i].parse::<f64>().map_err(|_| bad(name));
        let optional = |i: usize, name: &str| -> Result<Option<f64>> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                real(i, name).map(Some)
            }
        };
        Ok(Self {
            rule: fields[0].parse()?,
            n: fields[1].parse().map_err(|_| bad("N"))?,
            m: fields[2].parse().map_err(|_| bad("M"))?,
            gamma: real(3, "gamma")?,
            eps: real(4, "eps")?,
            l_p: optional(5, "L_p")?,
            sup_error: real(6, "sup_error")?,
            predicted_bound: optional(7, "predicted_bound")?,
            wall_time_s: optional(8, "wall_time_s")?,
        })
    }
}

pub fn write_records<W: Write>(records: &[ErrorSweepRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Trailing errors varying by less than this fraction of their mean form a plateau.
pub const PLATEAU_VARIATION: f64 = 0.1;
/// Trailing errors all below this level are treated as a plateau at machine precision.
pub const ROUNDING_FLOOR: f64 = 1e-14;
/// Points within this factor of the plateau are excluded from the rate fits.
pub const PLATEAU_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub algebraic_slope: f64,
    pub plateau: Option<f64>,
    pub exp_rate: Option<f64>,
}

/// Least-squares line `y = a + b t`; returns `(b, residual sum of squares)`.
fn line_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    let slope = sxy / sxx;
    let rss = t
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (ym + slope * (a - tm));
            r * r
        })
        .sum();
    (slope, rss)
}

/// Convergence diagnostics for a sweep over `N` with everything else fixed.
pub fn fit_rate(records: &[ErrorSweepRecord]) -> Result<RateFit> {
    if records.len() < 4 {
        return Err(GwptError::TooFewPoints { found: records.len(), needed: 4 });
    }
    if records.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(GwptError::InvalidArgument("records must have strictly increasing N".into()));
    }
    if records.iter().any(|r| !(r.sup_error > 0.0 && r.sup_error.is_finite())) {
        return Err(GwptError::InvalidArgument("sup errors must be positive and finite".into()));
    }
    let tail: Vec<f64> = records[records.len() - 3..].iter().map(|r| r.sup_error).collect();
    let mean = tail.iter().sum::<f64>() / 3.0;
    let max = tail.iter().copied().fold(f64::MIN, f64::max);
    let min = tail.iter().copied().fold(f64::MAX, f64::min);
    let plateau = ((max - min) < PLATEAU_VARIATION * mean || max <= ROUNDING_FLOOR).then_some(mean);

    let segment: Vec<&ErrorSweepRecord> = match plateau {
        Some(level) => records
            .iter()
            .take_while(|r| r.sup_error > PLATEAU_MARGIN * level)
            .collect(),
        None => records.iter().collect(),
    };
    if segment.len() < 2 {
        return Err(GwptError::TooFewPoints { found: segment.len(), needed: 2 });
    }
    let n: Vec<f64> = segment.iter().map(|r| r.n as f64).collect();
    let log_n: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let log_e: Vec<f64> = segment.iter().map(|r| r.sup_error.ln()).collect();
    let (algebraic_slope, rss_log) = line_fit(&log_n, &log_e);
    let (linear_slope, rss_lin) = line_fit(&n, &log_e);
    let exp_rate = (rss_lin < rss_log).then_some(linear_slope);
    Ok(RateFit { algebraic_slope, plateau, exp_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{coefficients, gh_grid, tcm_grid};
    use crate::summation::PositionGrid;

    fn example_psi0() -> WavePacket {
        WavePacket::new_1d(0.0, 0.0, Complex64::new(0.0, 1.0), 1.0).unwrap()
    }

    fn curve(gamma: f64, m: usize, l_q: f64, eps: f64) -> SummationCurve {
        let width = WidthMatrix::imaginary_diagonal(&[gamma]).unwrap();
        let grid = PositionGrid::finite(RVector::zeros(1), l_q, m, &width).unwrap();
        SummationCurve::new(grid, width, eps).unwrap()
    }

    fn record(n: usize, e: f64) -> ErrorSweepRecord {
        ErrorSweepRecord {
            rule: Rule::Gh,
            n,
            m: 16,
            gamma: 2.0,
            eps: 1.0,
            l_p: None,
            sup_error: e,
            predicted_bound: None,
            wall_time_s: None,
        }
    }

    #[test]
    fn zero_table_reconstructs_zero() {
        let psi0 = example_psi0();
        let c = curve(2.0, 16, 8.0, 1.0);
        let grid = tcm_grid(8, 4.0 * PI, &RVector::zeros(1)).unwrap();
        let table = coefficients(&grid, c.grid(), c.width(), &psi0).unwrap();
        let zero = table.with_values(vec![Complex64::new(0.0, 0.0); table.len()]).unwrap();
        let rec = Reconstruction::new(zero, c).unwrap();
        assert_eq!(rec.evaluate(&[0.3]), Complex64::new(0.0, 0.0));
        let err = sup_error(&rec, &psi0, 8.0, 65).unwrap();
        assert!((err - psi0.peak()).abs() < 1e-15);
    }

    #[test]
    fn single_term() {
        let psi0 = example_psi0();
        let c = curve(1.0, 1, 1.0, 1.0);
        let grid = tcm_grid(1, 1.0, &RVector::zeros(1)).unwrap();
        let table = coefficients(&grid, c.grid(), c.width(), &psi0).unwrap();
        let r = table.get(0, 0);
        let rec = Reconstruction::new(table, c.clone()).unwrap();
        let x = [0.4];
        let g = origin_packet(c.width(), 1.0).unwrap().eval(&x);
        let expected = r * g / c.direct(&x);
        assert!((rec.evaluate(&x) - expected).norm() < 1e-15);
    }

    #[test]
    fn gh_reconstructs_basis_member() {
        let psi0 = example_psi0();
        let c = curve(1.0, 64, 8.0, 1.0);
        let grid = gh_grid(32, 1.0, &RVector::zeros(1)).unwrap();
        let table = coefficients(&grid, c.grid(), c.width(), &psi0).unwrap();
        let rec = Reconstruction::new(table, c).unwrap();
        assert!(sup_error(&rec, &psi0, 8.0, 256).unwrap() < 1e-8);
    }

    #[test]
    fn semi_discrete_matches_momentum_quadrature() {
        let psi0 = example_psi0();
        let basis = psi0.width().clone();
        let q = RVector::zeros(1);
        let closed = semi_discrete_i(&q, &psi0, &basis, &[0.0]).unwrap();
        // trapezoid over p of (2πε)^{-1} ⟨g_z|ψ0⟩ g_z(x)
        let params = OverlapParams::new(&basis, &psi0, &q).unwrap();
        let g0 = origin_packet(&basis, 1.0).unwrap();
        let n = 100_000;
        let h = 24.0 / n as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let p = -12.0 + i as f64 * h;
            let z = PhaseSpacePoint::from_slices(&[0.0], &[p]).unwrap();
            let gz = g0.recentered(z).unwrap().eval(&[0.0]);
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            sum += params.overlap_at(&RVector::from_vec(vec![p])) * gz * (w * h);
        }
        sum /= 2.0 * PI;
        assert!((closed - sum).norm() < 1e-12);
    }

    #[test]
    fn semi_discrete_far_center_is_negligible() {
        let psi0 = example_psi0();
        let basis = psi0.width().clone();
        let near = semi_discrete_i(&RVector::zeros(1), &psi0, &basis, &[0.0]).unwrap();
        let far = semi_discrete_i(&RVector::from_vec(vec![10.0]), &psi0, &basis, &[0.0]).unwrap();
        assert!(far.norm() < 1e-15 * near.norm());
    }

    #[test]
    fn semi_discrete_identity() {
        let psi0 = WavePacket::new_1d(0.5, 1.0, Complex64::new(0.2, 1.0), 0.5).unwrap();
        let c = curve(2.0, 40, 8.0, 0.5);
        let semi = SemiDiscrete::new(c, &psi0).unwrap();
        let err = sup_error_of(|x| semi.evaluate(x), &psi0, &RVector::zeros(1), 6.0, 256).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn too_few_samples() {
        let psi0 = example_psi0();
        let r = sup_error_of(|_| Complex64::new(0.0, 0.0), &psi0, &RVector::zeros(1), 1.0, 63);
        assert!(r.is_err());
    }

    #[test]
    fn constants_examples() {
        let inputs = BoundInputs { dim: 1, eps: 1.0, l_p: 4.0 * PI, l_q: 8.0, sigma: 2.0 };
        let k = predicted_constants(&inputs).unwrap();
        let c_t = (2.0 * PI).sqrt() * (-8.0 * PI * PI).exp();
        assert!((k.c_t - c_t).abs() < 1e-12 * c_t);
        let c_cm = (4.0 * PI).powi(3) / 3.0 * (4.0 * (4.0 * PI + 8.0).powi(2) + 1.0);
        assert!((k.c_cm - c_cm).abs() < 1e-12 * c_cm);
        let c_g = 2.0 * 2f64.sqrt() * PI.powf(0.25) * 2f64.powf(-0.25) / libm::erf(16.0 * 2f64.sqrt());
        assert!((k.c_gamma_q - c_g).abs() < 1e-14);
        assert!((k.big_c_cm - c_cm * c_g / (2.0 * PI)).abs() < 1e-10 * k.big_c_cm);
        assert!(predicted_constants(&BoundInputs { sigma: 0.0, ..inputs }).is_err());
    }

    #[test]
    fn derivative_constant_low_orders() {
        // s = 0: ε^{1/2}·2; s = 1: (1/ε)·2ε^{1/2}(√ε + 2L_q)
        assert!((derivative_constant(0, 4.0, 1.0, 1) - 4.0).abs() < 1e-14);
        let v = derivative_constant(1, 4.0, 1.0, 1);
        assert!((v - 0.25 * 4.0 * 4.0).abs() < 1e-14);
        let rs = rs_constant(1, 1.0, 8.0, 1);
        assert!((rs - derivative_constant(3, 1.0, 8.0, 1) / (2.0 * PI).powi(3)).abs() < 1e-12 * rs);
    }

    #[test]
    fn gh_shape_scaling() {
        let a = gh_shape(2, 1.0, 8.0, 1);
        assert!((a - PI.sqrt() * 2f64.powf(3.5) * 64.0).abs() < 1e-10 * a);
        // doubling L_q scales by 2^s
        assert!((gh_shape(3, 0.5, 4.0, 2) * 8.0 - gh_shape(3, 0.5, 8.0, 2)).abs() < 1e-9 * gh_shape(3, 0.5, 8.0, 2));
    }

    #[test]
    fn fit_power_law() {
        let recs: Vec<_> = (2..=32).map(|n| record(n, (n as f64).powi(-2))).collect();
        let fit = fit_rate(&recs).unwrap();
        assert!((fit.algebraic_slope + 2.0).abs() < 0.05);
    }

    #[test]
    fn fit_exponential_with_plateau() {
        let recs: Vec<_> = (1..=64).map(|n| record(n, (-(n as f64)).exp().max(1e-12))).collect();
        let fit = fit_rate(&recs).unwrap();
        let plateau = fit.plateau.unwrap();
        assert!((plateau - 1e-12).abs() < 1e-15);
        assert!((fit.exp_rate.unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn fit_needs_four_points() {
        let recs: Vec<_> = (1..=3).map(|n| record(n, 1.0 / n as f64)).collect();
        assert!(matches!(fit_rate(&recs), Err(GwptError::TooFewPoints { found: 3, .. })));
    }

    #[test]
    fn record_csv() {
        let mut r = record(8, 1.5e-10);
        r.l_p = Some(4.0 * PI);
        assert_eq!(r.csv_row(), "GH,8,16,2.0,1.0,12.566370614359172,1.5e-10,,");
        assert_eq!(r.csv_row().parse::<ErrorSweepRecord>().unwrap(), r);
        assert!("GH,8,16".parse::<ErrorSweepRecord>().is_err());
    }
}
