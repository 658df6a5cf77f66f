//! Gaussian wave packet transform.
//!
//! A Gaussian wave packet `ψ0` is written as a discrete superposition of
//! Gaussian basis functions `g_{j,k}` centered on a position grid `q_k` and a
//! momentum grid `p_j`:
//!
//! ```text
//! ψ0(x) ≈ (1/S(x)) Σ_k Σ_j r_{j,k} g_{j,k}(x)
//! ```
//!
//! where `S` is the summation curve of the position grid and the
//! coefficients `r_{j,k}` are quadrature-weighted analytic overlaps. Three
//! momentum rules are provided: truncated compound midpoint, lattice Riemann
//! sums and Gauss–Hermite.

pub mod config;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod hermite;
pub mod linalg;
pub mod quadrature;
pub mod reconstruction;
pub mod summation;

pub use error::{GwptError, Result};
pub use gaussian::{
    evaluate, overlap, overlap_oracle, overlap_params, validate_width, OverlapParams,
    PhaseSpacePoint, WavePacket, WidthMatrix,
};
pub use hermite::{hermite_rule, HermiteRule};
pub use quadrature::{
    coefficients, gh_grid, gh_grid_scaled, rs_grid, tcm_grid, CoefficientTable, MomentumGrid, Rule,
};
pub use summation::{
    bound_lower, bound_upper, partition_weight, spectral_bound, summation_direct,
    summation_expansion, summation_product, PositionGrid, SummationCurve,
};

/// Shortest representation that parses back to the same `f64`.
pub fn csv_float(v: f64) -> String {
    format!("{v:?}")
}
