use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ValidateError;

pub const RANK_TOL: f64 = 1e-5;
const NOT_PSD: f64 = 1e-8;
const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi on a real symmetric matrix. Returns eigenvalues in descending order and
/// the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    let total = a.norm();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off.sqrt() <= 1e-17 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[(k, p)], a[(k, r)]);
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[(p, k)], a[(r, k)]);
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| q[(r, order[c])]);
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredVoltages {
    pub v: Vec<Complex64>,
    /// `λ₂/λ₁` of `V`.
    pub rank_ratio: f64,
    /// Whether `rank_ratio` exceeds the tolerance; `v` is then only the best rank-1 fit.
    pub flagged: bool,
}

/// Best rank-1 factor of a Hermitian PSD matrix, rotated so `v₀` is real and nonnegative.
pub fn extract_voltages(vmat: &DMatrix<Complex64>, rank_tol: f64) -> Result<RecoveredVoltages, ValidateError> {
    let n = vmat.nrows();
    // [[Re, −Im], [Im, Re]] has every eigenvalue of V twice
    let emb = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = vmat[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let emb = (&emb + emb.transpose()) * 0.5;
    let (values, vectors) = jacobi_eigen(&emb);
    let l1 = values[0];
    let lmin = *values.last().unwrap();
    if l1 <= 0.0 {
        return Err(ValidateError::NotPsd { min_eig: lmin, max_eig: l1 });
    }
    if lmin < -NOT_PSD * l1 {
        return Err(ValidateError::NotPsd { min_eig: lmin, max_eig: l1 });
    }
    let l2 = if n > 1 { values[2].max(0.0) } else { 0.0 };
    let rank_ratio = l2 / l1;
    let mut u: Vec<Complex64> = (0..n).map(|k| Complex64::new(vectors[(k, 0)], vectors[(n + k, 0)])).collect();
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phase = if u[0].norm() > 0.0 { u[0].conj() / u[0].norm() } else { Complex64::new(1.0, 0.0) };
    let scale = l1.sqrt() / norm;
    u.iter_mut().for_each(|z| *z = *z * phase * scale);
    // exact angle reference
    u[0] = Complex64::new(u[0].norm(), 0.0);
    Ok(RecoveredVoltages { v: u, rank_ratio, flagged: rank_ratio > rank_tol })
}
