//! Momentum grids for the three discretizations and the analytic
//! representation coefficients
//! `r_{j,k} = ω_j (2πε)^{-d} ⟨g_{j,k}|ψ0⟩`.
//!
//! All multi-indices are enumerated row-major (last component fastest).

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{GwptError, Result};
use crate::gaussian::{OverlapParams, WavePacket, WidthMatrix};
use crate::hermite;
use crate::linalg::{self, RMatrix, RVector};
use crate::summation::{multi_indices, PositionGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Truncation to a box plus compound midpoint rule.
    Tcm,
    /// Riemann sum over the infinite lattice.
    Rs,
    /// Gauss–Hermite.
    Gh,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::Tcm => "TcM",
            Rule::Rs => "RS",
            Rule::Gh => "GH",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Rule {
    type Err = GwptError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tcm" => Ok(Rule::Tcm),
            "rs" => Ok(Rule::Rs),
            "gh" => Ok(Rule::Gh),
            other => Err(GwptError::InvalidArgument(format!("unknown rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumNode {
    pub index: Vec<i64>,
    pub p: RVector,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridMeta {
    Tcm { n: usize, half_length: f64, dp: f64 },
    Rs { dp: f64, cutoff: i64, tail_tol: f64 },
    /// Nodes `p0 + √(2ε) T s_j`; `T` is the identity unless adapted.
    Gh { n: usize, scaling: RMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub rule: Rule,
    pub p0: RVector,
    pub nodes: Vec<MomentumNode>,
    pub meta: GridMeta,
}

impl MomentumGrid {
    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes per dimension.
    pub fn points_per_dim(&self) -> usize {
        match &self.meta {
            GridMeta::Tcm { n, .. } | GridMeta::Gh { n, .. } => *n,
            GridMeta::Rs { cutoff, .. } => (2 * cutoff + 1) as usize,
        }
    }

    /// Approximates `∫ f(p − p0) dp` with this grid.
    pub fn integrate<F: Fn(&[f64]) -> Complex64>(&self, f: F) -> Complex64 {
        let mut rel = vec![0.0; self.dim()];
        self.nodes
            .iter()
            .map(|node| {
                for (r, (p, p0)) in rel.iter_mut().zip(node.p.iter().zip(self.p0.iter())) {
                    *r = p - p0;
                }
                f(&rel) * node.weight
            })
            .sum()
    }
}

/// `p_{j,n} = p_{0,n} − L_p + (2j_n − 1)Δp/2`, `Δp = 2L_p/N`, weight `Δp^d`.
pub fn tcm_grid(n: usize, half_length: f64, p0: &RVector) -> Result<MomentumGrid> {
    if n == 0 || !(half_length > 0.0 && half_length.is_finite()) {
        return Err(GwptError::InvalidArgument(format!(
            "TcM grid needs N >= 1 and L_p > 0 (got {n}, {half_length})"
        )));
    }
    let d = p0.len();
    let dp = 2.0 * half_length / n as f64;
    let weight = dp.powi(d as i32);
    let nodes = multi_indices(d, 1, n as i64)
        .into_iter()
        .map(|j| {
            let p = RVector::from_fn(d, |r, _| p0[r] - half_length + (2 * j[r] - 1) as f64 * dp / 2.0);
            MomentumNode { index: j, p, weight }
        })
        .collect();
    Ok(MomentumGrid {
        rule: Rule::Tcm,
        p0: p0.clone(),
        nodes,
        meta: GridMeta::Tcm { n, half_length, dp },
    })
}

/// Lattice `p0 + jΔp`, `|j_n| ≤ J`, with `J` the smallest integer such that
/// `exp(−(JΔp)²/2ε) < tail_tol`.
pub fn rs_grid(dp: f64, p0: &RVector, eps: f64, tail_tol: f64) -> Result<MomentumGrid> {
    rs_grid_with_envelope(dp, p0, eps, tail_tol, 1.0)
}

/// As [`rs_grid`] for the envelope `exp(−a|p − p0|²/2ε)`; `a` is the
/// smallest eigenvalue of `Re A` for the basis/target pair.
pub fn rs_grid_with_envelope(dp: f64, p0: &RVector, eps: f64, tail_tol: f64, a: f64) -> Result<MomentumGrid> {
    if !(dp > 0.0 && dp.is_finite()) || !(eps > 0.0) || !(a > 0.0) {
        return Err(GwptError::InvalidArgument("RS grid needs positive dp, eps and envelope".into()));
    }
    if !(tail_tol > 0.0 && tail_tol <= 1e-6) {
        return Err(GwptError::InvalidArgument(format!("tail_tol must lie in (0, 1e-6], got {tail_tol}")));
    }
    let reach = (2.0 * eps * (1.0 / tail_tol).ln() / a).sqrt() / dp;
    let cutoff = reach.floor() as i64 + 1;
    let d = p0.len();
    let weight = dp.powi(d as i32);
    let nodes = multi_indices(d, -cutoff, cutoff)
        .into_iter()
        .map(|j| {
            let p = RVector::from_fn(d, |r, _| p0[r] + j[r] as f64 * dp);
            MomentumNode { index: j, p, weight }
        })
        .collect();
    Ok(MomentumGrid {
        rule: Rule::Rs,
        p0: p0.clone(),
        nodes,
        meta: GridMeta::Rs { dp, cutoff, tail_tol },
    })
}

/// Gauss–Hermite grid `p_j = p0 + s_j√(2ε)` with weights
/// `ω_j = e^{s_j²} w_j √(2ε)`, tensorized.
pub fn gh_grid(n: usize, eps: f64, p0: &RVector) -> Result<MomentumGrid> {
    let d = p0.len();
    gh_grid_scaled(n, eps, p0, &RMatrix::identity(d, d))
}

/// Gauss–Hermite grid after the substitution `p = p0 + √(2ε) T y`:
/// nodes `p0 + √(2ε) T s_j`, weights `|det T| (2ε)^{d/2} Π e^{s²}w`.
/// With `T = (Re A)^{-1/2}` the Gaussian factor of the integrand becomes
/// exactly the Hermite weight.
pub fn gh_grid_scaled(n: usize, eps: f64, p0: &RVector, scaling: &RMatrix) -> Result<MomentumGrid> {
    let rule = hermite::hermite_rule(n)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(GwptError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let d = p0.len();
    if scaling.nrows() != d || scaling.ncols() != d {
        return Err(GwptError::DimensionMismatch { expected: d, found: scaling.nrows() });
    }
    let h = (2.0 * eps).sqrt();
    let jacobian = scaling.clone().lu().determinant().abs() * h.powi(d as i32);
    let nodes = multi_indices(d, 1, n as i64)
        .into_iter()
        .map(|j| {
            let s = RVector::from_fn(d, |r, _| rule.nodes[(j[r] - 1) as usize]);
            let weight = jacobian
                * j.iter()
                    .map(|&jn| rule.scaled_weights[(jn - 1) as usize])
                    .product::<f64>();
            let p = p0 + scaling * s * h;
            MomentumNode { index: j, p, weight }
        })
        .collect();
    Ok(MomentumGrid {
        rule: Rule::Gh,
        p0: p0.clone(),
        nodes,
        meta: GridMeta::Gh { n, scaling: scaling.clone() },
    })
}

/// `(Re A)^{-1/2}` with `A = i(C0 − conj(C))^{-1}`, the Gauss–Hermite
/// scaling that matches the momentum envelope of the coefficients.
pub fn adapted_scaling(basis: &WidthMatrix, psi0: &WavePacket) -> Result<RMatrix> {
    let params = OverlapParams::new(basis, psi0, &psi0.center().q)?;
    Ok(linalg::inverse_sqrt_spd(&linalg::real_part(&params.a)))
}

/// Smallest eigenvalue of `Re A`, the slowest momentum decay rate.
pub fn envelope_rate(basis: &WidthMatrix, psi0: &WavePacket) -> Result<f64> {
    let params = OverlapParams::new(basis, psi0, &psi0.center().q)?;
    let (vals, _) = linalg::symmetric_eigen(&linalg::real_part(&params.a));
    Ok(vals[0])
}

/// Representation coefficients on the cross product of a momentum grid and
/// a position grid. Entry `(j, k)` is stored at `k * n_j + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub rule: Rule,
    pub eps: f64,
    pub basis: WidthMatrix,
    pub positions: Vec<(Vec<i64>, RVector)>,
    pub momenta: Vec<MomentumNode>,
    values: Vec<Complex64>,
}

impl CoefficientTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_momenta(&self) -> usize {
        self.momenta.len()
    }

    pub fn n_positions(&self) -> usize {
        self.positions.len()
    }

    /// `r_{j,k}` by flat positions in the momentum and position lists.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[k * self.momenta.len() + j]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Coefficients of position `k`, one per momentum node.
    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.momenta.len();
        &self.values[k * n..(k + 1) * n]
    }

    /// Same layout with every coefficient replaced.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(GwptError::DimensionMismatch { expected: self.values.len(), found: values.len() });
        }
        Ok(Self { values, ..self.clone() })
    }

    /// CSV with header `rule,j,k,re,im`; multi-indices joined by `;`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "rule,j,k,re,im")?;
        for (k, (kidx, _)) in self.positions.iter().enumerate() {
            for (j, node) in self.momenta.iter().enumerate() {
                let r = self.get(j, k);
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.rule,
                    join_index(&node.index),
                    join_index(kidx),
                    crate::csv_float(r.re),
                    crate::csv_float(r.im)
                )?;
            }
        }
        Ok(())
    }
}

fn join_index(idx: &[i64]) -> String {
    idx.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Fills `r_{j,k} = weight_j (2πε)^{-d} ⟨g_{j,k}|ψ0⟩` for every grid pair.
pub fn coefficients(
    grid: &MomentumGrid,
    positions: &PositionGrid,
    basis: &WidthMatrix,
    psi0: &WavePacket,
) -> Result<CoefficientTable> {
    let d = basis.dim();
    if grid.dim() != d || positions.dim() != d || psi0.dim() != d {
        return Err(GwptError::DimensionMismatch { expected: d, found: grid.dim().max(positions.dim()) });
    }
    let eps = psi0.eps();
    let points = positions.points()?;
    let norm = (2.0 * PI * eps).powi(-(d as i32));
    let rows: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|(_, q)| {
            let params = OverlapParams::new(basis, psi0, q)?;
            Ok(grid
                .nodes
                .iter()
                .map(|node| params.overlap_at(&node.p) * (node.weight * norm))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(CoefficientTable {
        rule: grid.rule,
        eps,
        basis: basis.clone(),
        positions: points,
        momenta: grid.nodes.clone(),
        values: rows.into_iter().flatten().collect(),
    })
}
