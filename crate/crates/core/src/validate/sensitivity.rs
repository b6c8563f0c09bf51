//! Two-node line sensitivities of `(P₁, P₂, Q₁, Q₂)` to `(|V₁|, |V₂|, θ₁, θ₂)`.
//!
//! `y = G + jB` is the series admittance, so `B < 0` for an inductive line.

use std::io::Write;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::ValidateError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v1: f64,
    pub v2: f64,
    pub th1: f64,
    pub th2: f64,
    pub g: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityBlock {
    /// Small-angle block as commonly printed, including its (Q₂, θ₂) entry `−B|V₁||V₂|`.
    pub matrix: Matrix4<f64>,
    /// Exact Jacobian of the textbook injections at the operating point.
    pub exact: Matrix4<f64>,
    /// `ωL/R = |B|/G`.
    pub decoupling_ratio: f64,
}

/// Entries of the printed block that disagree with the textbook Jacobian at `θ₁ = θ₂`.
pub const INCONSISTENT_ENTRIES: [(usize, usize); 1] = [(3, 3)];

/// Textbook injections `S₁ = V₁ conj(y (V₁ − V₂))`, `S₂ = V₂ conj(y (V₂ − V₁))`.
pub fn injections(op: &OperatingPoint) -> [f64; 4] {
    let OperatingPoint { v1, v2, th1, th2, g, b } = *op;
    let t = th1 - th2;
    let (c, s) = (t.cos(), t.sin());
    [
        v1 * v1 * g - v1 * v2 * (g * c + b * s),
        v2 * v2 * g - v1 * v2 * (g * c - b * s),
        -v1 * v1 * b + v1 * v2 * (b * c - g * s),
        -v2 * v2 * b + v1 * v2 * (b * c + g * s),
    ]
}

fn exact_jacobian(op: &OperatingPoint) -> Matrix4<f64> {
    let OperatingPoint { v1, v2, th1, th2, g, b } = *op;
    let t = th1 - th2;
    let (c, s) = (t.cos(), t.sin());
    let m = v1 * v2;
    // d/dθ₁ = d/dt and d/dθ₂ = −d/dt
    let dp1 = m * (g * s - b * c);
    let dp2 = m * (g * s + b * c);
    let dq1 = m * (-b * s - g * c);
    let dq2 = m * (-b * s + g * c);
    Matrix4::new(
        2.0 * g * v1 - v2 * (g * c + b * s), -v1 * (g * c + b * s), dp1, -dp1,
        -v2 * (g * c - b * s), 2.0 * g * v2 - v1 * (g * c - b * s), dp2, -dp2,
        -2.0 * b * v1 + v2 * (b * c - g * s), v1 * (b * c - g * s), dq1, -dq1,
        v2 * (b * c + g * s), -2.0 * b * v2 + v1 * (b * c + g * s), dq2, -dq2,
    )
}

fn printed(op: &OperatingPoint) -> Matrix4<f64> {
    let OperatingPoint { v1, v2, g, b, .. } = *op;
    let m = v1 * v2;
    Matrix4::new(
        2.0 * g * v1 - g * v2, -g * v1, -b * m, b * m,
        -g * v2, -g * v1 + 2.0 * g * v2, b * m, -b * m,
        -2.0 * b * v1 + b * v2, b * v1, -g * m, g * m,
        b * v2, b * v1 - 2.0 * b * v2, g * m, -b * m,
    )
}

pub fn sensitivity_matrix(op: &OperatingPoint) -> Result<SensitivityBlock, ValidateError> {
    if !(op.v1 > 0.0 && op.v2 > 0.0) {
        return Err(ValidateError::InvalidOperatingPoint);
    }
    Ok(SensitivityBlock {
        matrix: printed(op),
        exact: exact_jacobian(op),
        decoupling_ratio: if op.g > 0.0 { op.b.abs() / op.g } else { f64::INFINITY },
    })
}

/// Central finite differences of [`injections`] with step `h`.
pub fn finite_difference_jacobian(op: &OperatingPoint, h: f64) -> Matrix4<f64> {
    let mut jac = Matrix4::zeros();
    for col in 0..4 {
        let shifted = |sign: f64| {
            let mut p = *op;
            match col {
                0 => p.v1 += sign * h,
                1 => p.v2 += sign * h,
                2 => p.th1 += sign * h,
                _ => p.th2 += sign * h,
            }
            injections(&p)
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        for row in 0..4 {
            jac[(row, col)] = (plus[row] - minus[row]) / (2.0 * h);
        }
    }
    jac
}

/// Frobenius norms of the `P–θ` and `P–|V|` blocks of the printed matrix.
pub fn decoupling_norms(block: &SensitivityBlock) -> (f64, f64) {
    let m = &block.matrix;
    let p_theta = m.fixed_view::<2, 2>(0, 2).norm();
    let p_v = m.fixed_view::<2, 2>(0, 0).norm();
    (p_theta, p_v)
}

/// One row per operating point with the sixteen printed entries, then the exact ones.
pub fn write_sensitivity_csv<W: Write>(rows: &[(OperatingPoint, SensitivityBlock)], out: W) -> Result<(), ValidateError> {
    let mut w = csv::Writer::from_writer(out);
    let names = ["p1", "p2", "q1", "q2"];
    let vars = ["v1", "v2", "th1", "th2"];
    let mut header: Vec<String> = ["v1", "v2", "th1", "th2", "g", "b", "decoupling_ratio"].map(String::from).to_vec();
    for prefix in ["printed", "exact"] {
        for n in names {
            for v in vars {
                header.push(format!("{prefix}_d{n}_d{v}"));
            }
        }
    }
    w.write_record(&header)?;
    for (op, blk) in rows {
        let mut rec: Vec<String> = [op.v1, op.v2, op.th1, op.th2, op.g, op.b, blk.decoupling_ratio]
            .iter()
            .map(|x| format!("{x:e}"))
            .collect();
        for m in [&blk.matrix, &blk.exact] {
            for r in 0..4 {
                for c in 0..4 {
                    rec.push(format!("{:e}", m[(r, c)]));
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resistive_flat_point() {
        let op = OperatingPoint { v1: 1.0, v2: 1.0, th1: 0.0, th2: 0.0, g: 1.0, b: 0.0 };
        let blk = sensitivity_matrix(&op).unwrap();
        assert_eq!(blk.matrix[(0, 0)], 1.0);
        for c in 2..4 {
            assert_eq!(blk.matrix[(0, c)], 0.0);
            assert_eq!(blk.matrix[(1, c)], 0.0);
        }
        assert_eq!(blk.decoupling_ratio, 0.0);
    }

    #[test]
    fn exact_jacobian_matches_finite_differences() {
        let op = OperatingPoint { v1: 1.03, v2: 0.98, th1: 0.05, th2: -0.02, g: 3.0, b: -1.2 };
        let blk = sensitivity_matrix(&op).unwrap();
        let fd = finite_difference_jacobian(&op, 1e-6);
        assert!((blk.exact - fd).abs().max() < 1e-8);
    }

    #[test]
    fn csv_has_header_and_row() {
        let op = OperatingPoint { v1: 1.0, v2: 1.0, th1: 0.0, th2: 0.0, g: 1.0, b: -0.1 };
        let blk = sensitivity_matrix(&op).unwrap();
        let mut buf = Vec::new();
        write_sensitivity_csv(&[(op, blk)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 7 + 32);
    }
}
