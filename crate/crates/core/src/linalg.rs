//! Small dense linear algebra helpers. Matrices here are d×d with d rarely
//! above a handful, so nothing is blocked or structure-aware.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GwptError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn imag_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn cvec(v: &RVector) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Inverse through partial-pivoted LU. Fails when a pivot vanishes or the
/// result is not finite.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or(GwptError::SingularDifference)?;
    if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(inv)
    } else {
        Err(GwptError::SingularDifference)
    }
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

/// `u^T M v` without conjugation.
pub fn bilinear(u: &DVector<Complex64>, m: &CMatrix, v: &DVector<Complex64>) -> Complex64 {
    (u.transpose() * m * v)[(0, 0)]
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back in ascending order. Each eigenvector is flipped so
/// that its first component of non-negligible size is positive, which makes
/// the basis (and every grid built from it) reproducible.
pub fn symmetric_eigen(m: &RMatrix) -> (RVector, RMatrix) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = RMatrix::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-32 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = RVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = RMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut u = v.column(i).clone_owned();
        if let Some(first) = u.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                u.neg_mut();
            }
        }
        vectors.set_column(col, &u);
    }
    (values, vectors)
}

/// `S^{-1/2}` for a symmetric positive definite `S`, via its eigendecomposition.
pub fn inverse_sqrt_spd(m: &RMatrix) -> RMatrix {
    let (vals, vecs) = symmetric_eigen(m);
    let d = RMatrix::from_diagonal(&vals.map(|l| 1.0 / l.sqrt()));
    &vecs * d * vecs.transpose()
}
