//! Normalized Gaussian wave packets, their analytic inner products and the
//! parameters of the momentum integrand that links basis functions to a
//! target packet.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{GwptError, Result};
use crate::linalg::{self, bilinear, cvec, CMatrix, RMatrix, RVector, I};

const SYMMETRY_TOL: f64 = 1e-12;

/// Complex symmetric width matrix with positive definite imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthMatrix {
    entries: CMatrix,
    imag: RMatrix,
    imag_det: f64,
}

impl WidthMatrix {
    /// Validates `raw` and stores its symmetrized form `(raw + raw^T)/2`.
    pub fn new(raw: CMatrix) -> Result<Self> {
        if !raw.is_square() {
            return Err(GwptError::DimensionMismatch {
                expected: raw.nrows(),
                found: raw.ncols(),
            });
        }
        if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GwptError::NonFinite("width matrix"));
        }
        let scale = raw.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let asym = (&raw - raw.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > SYMMETRY_TOL * scale {
            return Err(GwptError::NotSymmetric { max_asymmetry: asym });
        }
        let entries = (&raw + raw.transpose()).map(|z| z * 0.5);
        let imag = linalg::imag_part(&entries);
        let (eigs, _) = linalg::symmetric_eigen(&imag);
        let smallest = eigs[0];
        if smallest <= 0.0 {
            return Err(GwptError::ImaginaryPartNotPositiveDefinite { eigenvalue: smallest });
        }
        let imag_det = eigs.iter().product();
        Ok(Self { entries, imag, imag_det })
    }

    /// One-dimensional width `gamma`.
    pub fn scalar(gamma: Complex64) -> Result<Self> {
        Self::new(CMatrix::from_element(1, 1, gamma))
    }

    /// `i * diag(values)`.
    pub fn imaginary_diagonal(values: &[f64]) -> Result<Self> {
        let d = values.len();
        Self::new(CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                Complex64::new(0.0, values[r])
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `i * im` for a real symmetric positive definite `im`.
    pub fn imaginary(im: &RMatrix) -> Result<Self> {
        Self::new(im.map(|v| Complex64::new(0.0, v)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn imag(&self) -> &RMatrix {
        &self.imag
    }

    pub fn imag_det(&self) -> f64 {
        self.imag_det
    }

    pub fn is_purely_imaginary(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0)
    }
}

/// Checks that `raw` lies in the Siegel upper half-space.
pub fn validate_width(raw: CMatrix) -> Result<WidthMatrix> {
    WidthMatrix::new(raw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    pub q: RVector,
    pub p: RVector,
}

impl PhaseSpacePoint {
    pub fn new(q: RVector, p: RVector) -> Result<Self> {
        if q.len() != p.len() {
            return Err(GwptError::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(GwptError::NonFinite("phase space point"));
        }
        Ok(Self { q, p })
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(RVector::from_column_slice(q), RVector::from_column_slice(p))
    }

    pub fn origin(dim: usize) -> Self {
        Self { q: RVector::zeros(dim), p: RVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// The packet `(πε)^{-d/4} det(Im C)^{1/4} exp[(i/ε)(½(x−q)ᵀC(x−q) + pᵀ(x−q))]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    center: PhaseSpacePoint,
    width: WidthMatrix,
    eps: f64,
    norm: f64,
}

impl WavePacket {
    pub fn new(center: PhaseSpacePoint, width: WidthMatrix, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(GwptError::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        if center.dim() != width.dim() {
            return Err(GwptError::DimensionMismatch {
                expected: width.dim(),
                found: center.dim(),
            });
        }
        let d = width.dim() as f64;
        let norm = (PI * eps).powf(-d / 4.0) * width.imag_det().powf(0.25);
        Ok(Self { center, width, eps, norm })
    }

    /// One-dimensional packet with scalar width `gamma`.
    pub fn new_1d(q: f64, p: f64, gamma: Complex64, eps: f64) -> Result<Self> {
        Self::new(
            PhaseSpacePoint::from_slices(&[q], &[p])?,
            WidthMatrix::scalar(gamma)?,
            eps,
        )
    }

    pub fn center(&self) -> &PhaseSpacePoint {
        &self.center
    }

    pub fn width(&self) -> &WidthMatrix {
        &self.width
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.width.dim()
    }

    /// Peak modulus `(πε)^{-d/4} det(Im C)^{1/4}`.
    pub fn peak(&self) -> f64 {
        self.norm
    }

    /// Same width and ε, moved to a new phase space center.
    pub fn recentered(&self, center: PhaseSpacePoint) -> Result<Self> {
        Self::new(center, self.width.clone(), self.eps)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(GwptError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: &[f64]) -> Complex64 {
        let d = self.dim();
        let c = self.width.entries();
        let mut quad = Complex64::new(0.0, 0.0);
        let mut lin = 0.0;
        for r in 0..d {
            let yr = x[r] - self.center.q[r];
            lin += self.center.p[r] * yr;
            for s in 0..d {
                quad += c[(r, s)] * (yr * (x[s] - self.center.q[s]));
            }
        }
        let phase = (quad * 0.5 + lin) * (I / self.eps);
        phase.exp() * self.norm
    }
}

/// Evaluates a packet at `x`.
pub fn evaluate(packet: &WavePacket, x: &[f64]) -> Result<Complex64> {
    packet.evaluate(x)
}

fn check_pair(bra: &WavePacket, ket: &WavePacket) -> Result<()> {
    if bra.dim() != ket.dim() {
        return Err(GwptError::DimensionMismatch { expected: bra.dim(), found: ket.dim() });
    }
    if bra.eps() != ket.eps() {
        return Err(GwptError::EpsMismatch { bra: bra.eps(), ket: ket.eps() });
    }
    Ok(())
}

/// Matrices shared by the overlap formula and the momentum integrand.
#[derive(Debug, Clone)]
struct PairMatrices {
    a: CMatrix,
    c0: CMatrix,
    c_conj: CMatrix,
    /// `√det(A^{-1})`, principal branch.
    sqrt_det_a_inv: Complex64,
    /// `det(Im C · Im C0)^{1/4}`.
    imag_det_quarter: f64,
}

impl PairMatrices {
    fn new(basis: &WidthMatrix, target: &WidthMatrix) -> Result<Self> {
        let c0 = target.entries().clone();
        let c_conj = basis.entries().map(|z| z.conj());
        let diff_inv = linalg::inverse(&(&c0 - &c_conj))?;
        let a = diff_inv.map(|z| z * I);
        // A^{-1} = -i (C0 - conj(C))
        let a_inv = (&c0 - &c_conj).map(|z| -z * I);
        let sqrt_det_a_inv = linalg::determinant(&a_inv).sqrt();
        let imag_det_quarter = (basis.imag_det() * target.imag_det()).powf(0.25);
        Ok(Self { a, c0, c_conj, sqrt_det_a_inv, imag_det_quarter })
    }

    fn m_position(&self) -> CMatrix {
        (&self.c_conj * &self.a * &self.c0).map(|z| z * I)
    }

    fn m_momentum(&self) -> CMatrix {
        self.a.map(|z| z * I)
    }
}

/// Analytic `⟨bra|ket⟩`, antilinear in `bra`.
pub fn overlap(bra: &WavePacket, ket: &WavePacket) -> Result<Complex64> {
    check_pair(bra, ket)?;
    let mats = PairMatrices::new(bra.width(), ket.width())?;
    Ok(overlap_with(&mats, bra.center(), ket.center(), bra.eps()))
}

fn overlap_with(
    mats: &PairMatrices,
    z: &PhaseSpacePoint,
    z0: &PhaseSpacePoint,
    eps: f64,
) -> Complex64 {
    let d = z.dim() as f64;
    let dq = cvec(&(&z.q - &z0.q));
    let dp = cvec(&(&z.p - &z0.p));
    let psum = &z.p + &z0.p;
    let phase = (&z.q - &z0.q).dot(&psum) / (2.0 * eps);
    let coupling = bilinear(&dp, &(&mats.a * (&mats.c0 + &mats.c_conj)), &dq) / (2.0 * eps);
    let beta = 2f64.powf(d / 2.0) * mats.imag_det_quarter / mats.sqrt_det_a_inv
        * (I * phase + coupling).exp();
    let quad = bilinear(&dq, &mats.m_position(), &dq) + bilinear(&dp, &mats.m_momentum(), &dp);
    beta * (quad * I / (2.0 * eps)).exp()
}

/// Tensorized trapezoid approximation of `∫ conj(bra) ket dx` over the box of
/// half-width `box_halfwidth` around the midpoint of the two centers.
///
/// Nominally O(h²); for Gaussians that have decayed at the box edges the
/// trapezoid rule is spectrally accurate.
pub fn overlap_oracle(
    bra: &WavePacket,
    ket: &WavePacket,
    box_halfwidth: f64,
    points_per_dim: usize,
) -> Result<Complex64> {
    check_pair(bra, ket)?;
    let d = bra.dim();
    if d > 3 {
        return Err(GwptError::DimensionTooLarge { dim: d, max: 3 });
    }
    if points_per_dim < 16 {
        return Err(GwptError::InvalidArgument(format!(
            "overlap oracle needs at least 16 points per dimension, got {points_per_dim}"
        )));
    }
    if !(box_halfwidth > 0.0) {
        return Err(GwptError::InvalidArgument("box half-width must be positive".into()));
    }
    let mid = (&bra.center().q + &ket.center().q) * 0.5;
    let h = 2.0 * box_halfwidth / (points_per_dim - 1) as f64;
    let weight_1d = |i: usize| if i == 0 || i == points_per_dim - 1 { 0.5 } else { 1.0 };
    let total = points_per_dim.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut sum = Complex64::new(0.0, 0.0);
    for flat in 0..total {
        let mut rest = flat;
        let mut w = 1.0;
        for n in (0..d).rev() {
            let i = rest % points_per_dim;
            rest /= points_per_dim;
            x[n] = mid[n] - box_halfwidth + i as f64 * h;
            w *= weight_1d(i);
        }
        sum += bra.eval(&x).conj() * ket.eval(&x) * w;
    }
    Ok(sum * h.powi(d as i32))
}

/// Parameters of the momentum integrand for basis width `C`, target `ψ0` and
/// basis position `q_k`.
///
/// With `A = i(C0 − conj(C))^{-1}`,
/// `b(x) = x − q_k − iAC0(q_k − q0)` and
/// `c(x) = det(Im C Im C0)^{1/4} / ((πε)^d √(2^d det A^{-1}))
///         · exp(−(q_k−q0)ᵀ conj(C) A C0 (q_k−q0)/2ε + i p0ᵀ(x − q0)/ε)`,
/// the basis/target inner product satisfies
/// `(2πε)^{-d}⟨g_z|ψ0⟩g_z(x) = g_0(x−q_k) c(x) f_x(p − p0)` where
/// `f_x(p) = exp(−pᵀAp/2ε + i b(x)ᵀp/ε)`.
#[derive(Debug, Clone)]
pub struct OverlapParams {
    /// `A = i(C0 − conj(C))^{-1}`.
    pub a: CMatrix,
    /// Block-diagonal `2d × 2d` matrix of the overlap exponent.
    pub m: CMatrix,
    eps: f64,
    q_k: RVector,
    target: PhaseSpacePoint,
    mats: PairMatrices,
    /// `b(x) = x − q_k + shift`.
    b_shift: DVector<Complex64>,
    /// `c(x) = c_const · exp(i p0ᵀ(x − q0)/ε)`.
    c_const: Complex64,
}

impl OverlapParams {
    pub fn new(basis: &WidthMatrix, psi0: &WavePacket, q_k: &RVector) -> Result<Self> {
        let d = basis.dim();
        if psi0.dim() != d {
            return Err(GwptError::DimensionMismatch { expected: d, found: psi0.dim() });
        }
        if q_k.len() != d {
            return Err(GwptError::DimensionMismatch { expected: d, found: q_k.len() });
        }
        let eps = psi0.eps();
        let mats = PairMatrices::new(basis, psi0.width())?;
        let target = psi0.center().clone();
        let dq = cvec(&(q_k - &target.q));
        let b_shift = (&mats.a * &mats.c0 * &dq).map(|z| -z * I);
        let quad = bilinear(&dq, &(&mats.c_conj * &mats.a * &mats.c0), &dq);
        let c_const = mats.imag_det_quarter
            / ((PI * eps).powi(d as i32) * 2f64.powf(d as f64 / 2.0) * mats.sqrt_det_a_inv)
            * (-quad / (2.0 * eps)).exp();
        let m_pos = mats.m_position();
        let m_mom = mats.m_momentum();
        let mut m = CMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&m_pos);
        m.view_mut((d, d), (d, d)).copy_from(&m_mom);
        Ok(Self {
            a: mats.a.clone(),
            m,
            eps,
            q_k: q_k.clone(),
            target,
            mats,
            b_shift,
            c_const,
        })
    }

    pub fn dim(&self) -> usize {
        self.q_k.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn q_k(&self) -> &RVector {
        &self.q_k
    }

    pub fn b(&self, x: &[f64]) -> DVector<Complex64> {
        DVector::from_fn(self.dim(), |n, _| {
            Complex64::new(x[n] - self.q_k[n], 0.0) + self.b_shift[n]
        })
    }

    pub fn c(&self, x: &[f64]) -> Complex64 {
        let phase: f64 = (0..self.dim())
            .map(|n| self.target.p[n] * (x[n] - self.target.q[n]))
            .sum();
        self.c_const * (I * phase / self.eps).exp()
    }

    /// `β(z)` for the basis center `z = (q_k, p)`.
    pub fn beta(&self, p: &RVector) -> Complex64 {
        let d = self.dim() as f64;
        let dq = cvec(&(&self.q_k - &self.target.q));
        let dp = cvec(&(p - &self.target.p));
        let psum = p + &self.target.p;
        let phase = (&self.q_k - &self.target.q).dot(&psum) / (2.0 * self.eps);
        let coupling =
            bilinear(&dp, &(&self.mats.a * (&self.mats.c0 + &self.mats.c_conj)), &dq) / (2.0 * self.eps);
        2f64.powf(d / 2.0) * self.mats.imag_det_quarter / self.mats.sqrt_det_a_inv
            * (I * phase + coupling).exp()
    }

    /// `⟨g_(q_k,p)|ψ0⟩` through `β` and `M`.
    pub fn overlap_at(&self, p: &RVector) -> Complex64 {
        let z = PhaseSpacePoint { q: self.q_k.clone(), p: p.clone() };
        overlap_with(&self.mats, &z, &self.target, self.eps)
    }

    /// `f_x(p) = exp(−pᵀAp/2ε + i b(x)ᵀp/ε)` at the momentum offset `p`.
    pub fn integrand(&self, x: &[f64], p: &[f64]) -> Complex64 {
        let b = self.b(x);
        let d = self.dim();
        let mut quad = Complex64::new(0.0, 0.0);
        let mut lin = Complex64::new(0.0, 0.0);
        for r in 0..d {
            lin += b[r] * p[r];
            for s in 0..d {
                quad += self.a[(r, s)] * (p[r] * p[s]);
            }
        }
        (-quad / (2.0 * self.eps) + I * lin / self.eps).exp()
    }

    /// Closed form of `c(x) ∫ f_x(p) dp`:
    /// `c(x) (2πε)^{d/2} det(A)^{-1/2} exp(−b(x)ᵀA^{-1}b(x)/2ε)`.
    ///
    /// The square roots of `det A^{-1}` in `c` and in the Gaussian integral
    /// cancel, so no branch choice enters here.
    pub fn c_times_integral(&self, x: &[f64], a_inv: &CMatrix) -> Complex64 {
        let d = self.dim();
        let b = self.b(x);
        let expo = -bilinear(&b, a_inv, &b) / (2.0 * self.eps);
        let dq = cvec(&(&self.q_k - &self.target.q));
        let quad = bilinear(&dq, &(&self.mats.c_conj * &self.mats.a * &self.mats.c0), &dq);
        let phase: f64 = (0..d)
            .map(|n| self.target.p[n] * (x[n] - self.target.q[n]))
            .sum();
        let pref = self.mats.imag_det_quarter * (2.0 * PI * self.eps).powf(d as f64 / 2.0)
            / ((PI * self.eps).powi(d as i32) * 2f64.powf(d as f64 / 2.0));
        pref * (-quad / (2.0 * self.eps) + I * phase / self.eps + expo).exp()
    }

    /// `A^{-1} = −i(C0 − conj(C))`.
    pub fn a_inverse(&self) -> CMatrix {
        (&self.mats.c0 - &self.mats.c_conj).map(|z| -z * I)
    }

    /// `(C0^{-1} − conj(C)^{-1})^{-1}` computed directly, for checking the
    /// identity with the top-left block of `M`.
    pub fn m_position_direct(&self) -> Result<CMatrix> {
        let inner = linalg::inverse(&self.mats.c0)? - linalg::inverse(&self.mats.c_conj)?;
        linalg::inverse(&inner)
    }
}

/// Builds the integrand parameters for basis width `basis_c` at `q_k`.
pub fn overlap_params(basis_c: &WidthMatrix, psi0: &WavePacket, q_k: &RVector) -> Result<OverlapParams> {
    OverlapParams::new(basis_c, psi0, q_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn validate_examples() {
        let w = validate_width(CMatrix::from_element(1, 1, c(0.0, 1.0))).unwrap();
        assert_eq!(w.dim(), 1);
        let w2 = WidthMatrix::imaginary_diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(w2.dim(), 2);
        let bad = validate_width(CMatrix::from_element(1, 1, c(0.0, -1.0)));
        assert!(matches!(bad, Err(GwptError::ImaginaryPartNotPositiveDefinite { eigenvalue }) if eigenvalue == -1.0));
    }

    #[test]
    fn asymmetric_width_rejected() {
        let raw = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.1, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        assert!(matches!(validate_width(raw), Err(GwptError::NotSymmetric { .. })));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let raw = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 1.0), c(0.2, 0.1 + 1e-14), c(0.2, 0.1), c(0.0, 2.0)],
        );
        let w = validate_width(raw).unwrap();
        assert_eq!(w.entries()[(0, 1)], w.entries()[(1, 0)]);
    }

    #[test]
    fn evaluate_examples() {
        let g = WavePacket::new_1d(0.0, 0.0, c(0.0, 1.0), 1.0).unwrap();
        let v0 = g.evaluate(&[0.0]).unwrap();
        assert!((v0.re - 0.751_125_544_464_942_5).abs() < 1e-15 && v0.im == 0.0);
        let v1 = g.evaluate(&[1.0]).unwrap();
        assert!((v1.re - PI.powf(-0.25) * (-0.5f64).exp()).abs() < 1e-15);

        let moving = WavePacket::new_1d(0.0, 2.0, c(0.0, 1.0), 1.0).unwrap();
        let v = moving.evaluate(&[1.0]).unwrap();
        let expected = Complex64::from_polar(PI.powf(-0.25) * (-0.5f64).exp(), 2.0);
        assert!((v - expected).norm() < 1e-15);

        assert!(matches!(g.evaluate(&[0.0, 1.0]), Err(GwptError::DimensionMismatch { .. })));
    }

    #[test]
    fn self_overlap_is_one() {
        let g = WavePacket::new(
            PhaseSpacePoint::from_slices(&[0.3, -1.0], &[2.0, 0.5]).unwrap(),
            WidthMatrix::new(CMatrix::from_row_slice(
                2,
                2,
                &[c(0.5, 1.5), c(-0.2, 0.3), c(-0.2, 0.3), c(0.1, 0.8)],
            ))
            .unwrap(),
            0.3,
        )
        .unwrap();
        let o = overlap(&g, &g).unwrap();
        assert!((o - c(1.0, 0.0)).norm() < 1e-13, "{o}");
    }

    #[test]
    fn coherent_state_overlaps() {
        let g0 = WavePacket::new_1d(0.0, 0.0, c(0.0, 1.0), 1.0).unwrap();
        let shifted_q = WavePacket::new_1d(1.0, 0.0, c(0.0, 1.0), 1.0).unwrap();
        let shifted_p = WavePacket::new_1d(0.0, 2.0, c(0.0, 1.0), 1.0).unwrap();
        let a = overlap(&g0, &shifted_q).unwrap().norm();
        let b = overlap(&g0, &shifted_p).unwrap().norm();
        assert!((a - (-0.25f64).exp()).abs() < 1e-14);
        assert!((b - (-1.0f64).exp()).abs() < 1e-14);
        let oracle = overlap_oracle(&g0, &shifted_q, 12.0, 100_000).unwrap();
        assert!((oracle.norm() - a).abs() < 1e-8);
    }

    #[test]
    fn overlap_error_paths() {
        let g = WavePacket::new_1d(0.0, 0.0, c(0.0, 1.0), 1.0).unwrap();
        let other_eps = WavePacket::new_1d(0.0, 0.0, c(0.0, 1.0), 0.5).unwrap();
        assert!(matches!(overlap(&g, &other_eps), Err(GwptError::EpsMismatch { .. })));
        let g2 = WavePacket::new(
            PhaseSpacePoint::origin(2),
            WidthMatrix::imaginary_diagonal(&[1.0, 1.0]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(matches!(overlap(&g, &g2), Err(GwptError::DimensionMismatch { .. })));
        let g4 = WavePacket::new(
            PhaseSpacePoint::origin(4),
            WidthMatrix::imaginary_diagonal(&[1.0; 4]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(matches!(overlap_oracle(&g4, &g4, 5.0, 16), Err(GwptError::DimensionTooLarge { .. })));
    }

    #[test]
    fn oracle_normalization_and_tail() {
        let eps = 0.5;
        let g = WavePacket::new_1d(0.2, -0.7, c(0.3, 1.4), eps).unwrap();
        let n = overlap_oracle(&g, &g, 12.0 * eps.sqrt(), 100_000).unwrap();
        assert!((n - c(1.0, 0.0)).norm() < 1e-8);
        let far = WavePacket::new_1d(0.2 + 10.0 * eps.sqrt(), -0.7, c(0.3, 1.4), eps).unwrap();
        let o = overlap_oracle(&g, &far, 12.0 * eps.sqrt() + 5.0 * eps.sqrt(), 20_000).unwrap();
        assert!(o.norm() < 1e-10);
    }

    #[test]
    fn overlap_params_examples() {
        let width = WidthMatrix::scalar(c(0.0, 1.0)).unwrap();
        let psi = WavePacket::new_1d(0.5, 0.0, c(0.0, 1.0), 1.0).unwrap();
        let q = RVector::from_vec(vec![0.5]);
        let params = overlap_params(&width, &psi, &q).unwrap();
        assert!((params.a[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(params.b(&[0.5])[0].norm() < 1e-15);

        let wide = WidthMatrix::scalar(c(0.0, 2.0)).unwrap();
        let params = overlap_params(&wide, &psi, &q).unwrap();
        assert!((params.a[(0, 0)] - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn m_block_identity() {
        let basis = WidthMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.4, 2.0), c(0.1, -0.3), c(0.1, -0.3), c(-0.2, 1.1)],
        ))
        .unwrap();
        let psi = WavePacket::new(
            PhaseSpacePoint::from_slices(&[0.1, 0.2], &[1.0, -1.0]).unwrap(),
            WidthMatrix::new(CMatrix::from_row_slice(
                2,
                2,
                &[c(-0.3, 0.9), c(0.0, 0.2), c(0.0, 0.2), c(0.5, 1.7)],
            ))
            .unwrap(),
            0.25,
        )
        .unwrap();
        let params = overlap_params(&basis, &psi, &RVector::from_vec(vec![0.7, -0.4])).unwrap();
        let direct = params.m_position_direct().unwrap();
        let block = params.m.view((0, 0), (2, 2)).clone_owned();
        let rel = (&direct - &block).iter().map(|z| z.norm()).fold(0.0, f64::max)
            / direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rel < 1e-10);
        assert!(params.m.view((0, 2), (2, 2)).iter().all(|z| z.norm() == 0.0));
    }
}
