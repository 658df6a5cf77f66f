//! Sweeps and checks driven by an [`ExperimentConfig`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{BasisWidths, ExperimentConfig, RuleConfig};
use crate::csv_float;
use crate::error::GwptError;
use crate::gaussian::{overlap, overlap_oracle, PhaseSpacePoint, WavePacket, WidthMatrix};
use crate::linalg::{self, RMatrix, RVector};
use crate::quadrature::{self, Rule};
use crate::reconstruction::{
    self, predicted_constants, rs_bound, sample_points, sup_error, sup_error_of, BoundInputs,
    ErrorSweepRecord, Reconstruction, SemiDiscrete,
};
use crate::summation::{spectral_bound, PositionGrid, SummationCurve};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(GwptError),
    #[error("numerical failure for {rule} N={n} (eps={eps}, gamma={gamma}, M={m}): {source}")]
    Numeric {
        rule: Rule,
        n: usize,
        eps: f64,
        gamma: f64,
        m: usize,
        source: GwptError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Overrides `box.samples_per_dim`.
    pub samples: Option<usize>,
    /// Record wall-clock time per sweep point.
    pub timing: bool,
}

/// Everything fixed by one `(ε, basis width, M)` combination.
#[derive(Debug, Clone)]
pub struct Setting {
    pub eps: f64,
    pub m: usize,
    /// Smallest eigenvalue of the basis `Im C`.
    pub gamma: f64,
    pub psi0: WavePacket,
    pub basis: WidthMatrix,
    pub curve: SummationCurve,
}

fn basis_widths(config: &ExperimentConfig) -> Result<Vec<WidthMatrix>, GwptError> {
    let d = config.dim();
    match &config.basis {
        BasisWidths::Isotropic(values) => values
            .iter()
            .map(|g| WidthMatrix::imaginary(&(RMatrix::identity(d, d) * *g)))
            .collect(),
        BasisWidths::Matrix(rows) => {
            let m = RMatrix::from_fn(d, d, |r, c| rows[r][c]);
            Ok(vec![WidthMatrix::imaginary(&m)?])
        }
    }
}

/// Settings in config order: ε outermost, then basis width, then `M`.
pub fn settings(config: &ExperimentConfig) -> Result<Vec<Setting>, GwptError> {
    let d = config.dim();
    let widths = basis_widths(config)?;
    let center = RVector::from_column_slice(&config.grid.center);
    let mut out = Vec::new();
    for &eps in &config.psi0.eps {
        let psi0 = WavePacket::new(
            PhaseSpacePoint::from_slices(&config.psi0.q0, &config.psi0.p0)?,
            WidthMatrix::imaginary(&(RMatrix::identity(d, d) * config.psi0.gamma0_imag))?,
            eps,
        )?;
        for basis in &widths {
            let gamma = linalg::symmetric_eigen(basis.imag()).0[0];
            for &m in &config.grid.m {
                let grid = PositionGrid::finite(center.clone(), config.grid.l_q, m, basis)?;
                let curve = SummationCurve::new(grid, basis.clone(), eps)?;
                out.push(Setting { eps, m, gamma, psi0: psi0.clone(), basis: basis.clone(), curve });
            }
        }
    }
    Ok(out)
}

/// One reconstruction to measure.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Point {
    Tcm { n: usize, l_p: f64 },
    Gh { n: usize, adapted: bool },
    Rs { dp: f64, tail_tol: f64 },
}

fn points_for(rule: &RuleConfig) -> Vec<Point> {
    match rule {
        RuleConfig::Tcm { n, l_p } => l_p
            .iter()
            .flat_map(|&l| n.iter().map(move |&n| Point::Tcm { n, l_p: l }))
            .collect(),
        RuleConfig::Gh { n, adapted } => n.iter().map(|&n| Point::Gh { n, adapted: *adapted }).collect(),
        RuleConfig::Rs { dp, tail_tol } => dp
            .iter()
            .map(|&dp| Point::Rs { dp, tail_tol: *tail_tol })
            .collect(),
    }
}

/// Momentum grid for one sweep point.
fn momentum_grid(point: Point, setting: &Setting) -> Result<quadrature::MomentumGrid, GwptError> {
    let p0 = &setting.psi0.center().p;
    match point {
        Point::Tcm { n, l_p } => quadrature::tcm_grid(n, l_p, p0),
        Point::Gh { n, adapted: false } => quadrature::gh_grid(n, setting.eps, p0),
        Point::Gh { n, adapted: true } => {
            let scaling = quadrature::adapted_scaling(&setting.basis, &setting.psi0)?;
            quadrature::gh_grid_scaled(n, setting.eps, p0, &scaling)
        }
        Point::Rs { dp, tail_tol } => {
            let rate = quadrature::envelope_rate(&setting.basis, &setting.psi0)?;
            quadrature::rs_grid_with_envelope(dp, p0, setting.eps, tail_tol, rate)
        }
    }
}

fn measure(
    point: Point,
    setting: &Setting,
    config: &ExperimentConfig,
    samples: usize,
    timing: bool,
) -> Result<ErrorSweepRecord, ExperimentError> {
    let start = Instant::now();
    let grid = momentum_grid(point, setting);
    let (rule, n) = match point {
        Point::Tcm { n, .. } => (Rule::Tcm, n),
        Point::Gh { n, .. } => (Rule::Gh, n),
        Point::Rs { .. } => (Rule::Rs, grid.as_ref().map(|g| g.points_per_dim()).unwrap_or(0)),
    };
    let numeric = |source: GwptError| ExperimentError::Numeric {
        rule,
        n,
        eps: setting.eps,
        gamma: setting.gamma,
        m: setting.m,
        source,
    };
    let grid = grid.map_err(numeric)?;
    let table = quadrature::coefficients(&grid, setting.curve.grid(), &setting.basis, &setting.psi0)
        .map_err(numeric)?;
    let rec = Reconstruction::new(table, setting.curve.clone()).map_err(numeric)?;
    let error = sup_error(&rec, &setting.psi0, config.grid.l_q, samples).map_err(numeric)?;

    let inputs = |l_p: f64| BoundInputs {
        dim: config.dim(),
        eps: setting.eps,
        l_p,
        l_q: config.grid.l_q,
        sigma: setting.gamma,
    };
    let (l_p, predicted_bound) = match (point, &grid.meta) {
        (Point::Tcm { n, l_p }, _) => {
            let consts = predicted_constants(&inputs(l_p)).map_err(numeric)?;
            (Some(l_p), Some(consts.tcm_bound(n)))
        }
        (Point::Rs { dp, .. }, quadrature::GridMeta::Rs { cutoff, .. }) => {
            let reach = *cutoff as f64 * dp;
            (Some(reach), Some(rs_bound(1, dp, &inputs(reach)).map_err(numeric)?))
        }
        _ => (None, None),
    };
    Ok(ErrorSweepRecord {
        rule,
        n,
        m: setting.m,
        gamma: setting.gamma,
        eps: setting.eps,
        l_p,
        sup_error: error,
        predicted_bound,
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// All sweep records in config order: setting, then rule, then `L_p`, then `N`.
pub fn run_sweep(config: &ExperimentConfig, options: RunOptions) -> Result<Vec<ErrorSweepRecord>, ExperimentError> {
    let samples = options.samples.unwrap_or(config.grid.samples_per_dim);
    let settings = settings(config).map_err(ExperimentError::Config)?;
    let jobs: Vec<(usize, Point)> = settings
        .iter()
        .enumerate()
        .flat_map(|(i, _)| config.rules.iter().flat_map(points_for).map(move |p| (i, p)))
        .collect();
    jobs.par_iter()
        .map(|&(i, point)| measure(point, &settings[i], config, samples, options.timing))
        .collect()
}

pub fn sweep_csv(records: &[ErrorSweepRecord]) -> String {
    let mut buf = Vec::new();
    reconstruction::write_records(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Summation curve against its cosine series and the spectral bounds,
/// sampled on the box for every setting.
pub fn summation_csv(config: &ExperimentConfig, options: RunOptions) -> Result<String, ExperimentError> {
    let samples = options.samples.unwrap_or(config.grid.samples_per_dim);
    let center = RVector::from_column_slice(&config.grid.center);
    let settings = settings(config).map_err(ExperimentError::Config)?;
    let mut out = String::from("gamma,M,eps,x,S_direct,S_expansion,inv_dq,spectral_bound_s1,spectral_bound_s2,spectral_bound_s3\n");
    let d = config.dim() as i32;
    let xs = sample_points(&center, config.grid.l_q, samples.max(2));
    for setting in &settings {
        let dq = setting.curve.grid().dq();
        let bounds: Vec<String> = (1..=3)
            .map(|s| csv_float(spectral_bound(s, dq, setting.gamma, setting.eps)))
            .collect();
        let rows: Vec<String> = xs
            .par_iter()
            .map(|x| {
                let label = x.iter().map(|v| csv_float(*v)).collect::<Vec<_>>().join(";");
                format!(
                    "{},{},{},{},{},{},{},{}\n",
                    csv_float(setting.gamma),
                    setting.m,
                    csv_float(setting.eps),
                    label,
                    csv_float(setting.curve.direct(x)),
                    csv_float(setting.curve.expansion(x, 20)),
                    csv_float(dq.powi(-d)),
                    bounds.join(",")
                )
            })
            .collect();
        rows.iter().for_each(|r| out.push_str(r));
    }
    Ok(out)
}

/// Sup error of the exact semi-discrete representation for every setting.
pub fn semi_discrete_csv(config: &ExperimentConfig, options: RunOptions) -> Result<String, ExperimentError> {
    let samples = options.samples.unwrap_or(config.grid.samples_per_dim);
    let center = RVector::from_column_slice(&config.grid.center);
    let mut out = String::from("eps,gamma,M,sup_error\n");
    for setting in settings(config).map_err(ExperimentError::Config)? {
        let numeric = |source| ExperimentError::Numeric {
            rule: Rule::Tcm,
            n: 0,
            eps: setting.eps,
            gamma: setting.gamma,
            m: setting.m,
            source,
        };
        let semi = SemiDiscrete::new(setting.curve.clone(), &setting.psi0).map_err(numeric)?;
        let err = sup_error_of(|x| semi.evaluate(x), &setting.psi0, &center, config.grid.l_q, samples)
            .map_err(numeric)?;
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_float(setting.eps),
            csv_float(setting.gamma),
            setting.m,
            csv_float(err)
        );
    }
    Ok(out)
}

/// Random pair of packets with purely imaginary widths sharing one ε.
pub fn random_pair<R: Rng>(rng: &mut R, d: usize) -> Result<(WavePacket, WavePacket), GwptError> {
    let eps = rng.random_range(0.3..2.0);
    let packet = |rng: &mut R| -> Result<WavePacket, GwptError> {
        let angle: f64 = rng.random_range(0.0..PI);
        let lambdas: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..3.0)).collect();
        let im = if d == 2 {
            let (c, s) = (angle.cos(), angle.sin());
            let rot = RMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            &rot * RMatrix::from_diagonal(&RVector::from_vec(lambdas)) * rot.transpose()
        } else {
            RMatrix::from_diagonal(&RVector::from_vec(lambdas))
        };
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        WavePacket::new(PhaseSpacePoint::from_slices(&q, &p)?, WidthMatrix::imaginary(&im)?, eps)
    };
    Ok((packet(rng)?, packet(rng)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapComparison {
    pub dim: usize,
    pub analytic: Complex64,
    pub oracle: Complex64,
}

impl OverlapComparison {
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.oracle).norm() / self.analytic.norm()
    }
}

/// Analytic overlaps of seeded random pairs against the trapezoid oracle.
pub fn overlap_comparisons(seed: u64, pairs_1d: usize, pairs_2d: usize) -> Result<Vec<OverlapComparison>, GwptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for (d, count) in [(1, pairs_1d), (2, pairs_2d)] {
        for _ in 0..count {
            pairs.push((d, random_pair(&mut rng, d)?));
        }
    }
    pairs
        .par_iter()
        .map(|(d, (bra, ket))| {
            let points = if *d == 1 { 2001 } else { 401 };
            Ok(OverlapComparison {
                dim: *d,
                analytic: overlap(bra, ket)?,
                oracle: overlap_oracle(bra, ket, 20.0, points)?,
            })
        })
        .collect()
}

pub fn overlap_csv(comparisons: &[OverlapComparison]) -> String {
    let mut out = String::from("pair,d,analytic_re,analytic_im,oracle_re,oracle_im,rel_error\n");
    for (i, c) in comparisons.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i,
            c.dim,
            csv_float(c.analytic.re),
            csv_float(c.analytic.im),
            csv_float(c.oracle.re),
            csv_float(c.oracle.im),
            csv_float(c.relative_error())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::parse(
            "psi0.q0 = 0\npsi0.p0 = 0\npsi0.gamma0_imag = 1\npsi0.eps = 1\nbasis.gamma_imag = 2\n\
             box.L_q = 8\nbox.M = 16\nbox.samples_per_dim = 128\nrules = TcM, GH, RS\n\
             tcm.N = 4, 8, 16\ntcm.L_p = 4pi\ngh.N = 4, 8\nrs.dp = pi\n",
        )
        .unwrap()
    }

    #[test]
    fn sweep_order_and_bounds() {
        let records = run_sweep(&small_config(), RunOptions::default()).unwrap();
        let tags: Vec<(Rule, usize)> = records.iter().map(|r| (r.rule, r.n)).collect();
        assert_eq!(tags[..5], [(Rule::Tcm, 4), (Rule::Tcm, 8), (Rule::Tcm, 16), (Rule::Gh, 4), (Rule::Gh, 8)]);
        assert_eq!(records[5].rule, Rule::Rs);
        for r in &records {
            assert!(r.sup_error >= 0.0 && r.wall_time_s.is_none());
            if r.rule == Rule::Tcm {
                assert!(r.sup_error <= r.predicted_bound.unwrap());
            }
        }
    }

    #[test]
    fn summation_rows() {
        let mut config = small_config();
        config.grid.samples_per_dim = 65;
        let csv = summation_csv(&config, RunOptions::default()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 66);
        let mid: Vec<f64> = lines[33].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(mid[3], 0.0);
        // Δq = 1 and γ = 2: the curve sits on 1/Δq and matches the series
        assert!((mid[4] - 1.0).abs() < mid[7]);
        assert!((mid[4] - mid[5]).abs() < 1e-12);
    }

    #[test]
    fn semi_discrete_rows() {
        let csv = semi_discrete_csv(&small_config(), RunOptions::default()).unwrap();
        let err: f64 = csv.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-10);
    }

    #[test]
    fn overlap_pairs_agree() {
        let rows = overlap_comparisons(7, 5, 1).unwrap();
        assert_eq!(rows.len(), 6);
        for c in rows.iter().filter(|c| c.analytic.norm() > 1e-8) {
            assert!(c.relative_error() < 1e-6, "{c:?}");
        }
    }
}
