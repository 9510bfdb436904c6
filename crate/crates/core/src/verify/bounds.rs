//! Closed-form bounds: inaccuracy from a cost value, quantum Hamming bound,
//! and the effective distance of concatenated codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariant {
    /// K √(2C)
    General,
    /// 2^{n/4 + d/2} K √(mC), errors of bounded Pauli weight
    PauliWeight,
    /// K √(2mC), each Kraus operator proportional to a Pauli
    Effective,
}

/// Upper bound on the worst-case inaccuracy ε given C^ℓ1.
pub fn inaccuracy_bound(c_l1: f64, k: usize, n: usize, d: usize, m: usize, variant: BoundVariant) -> Result<f64> {
    if !(c_l1 >= 0.0) || !c_l1.is_finite() {
        return Err(Error::Invalid(format!("cost must be a finite non-negative number, got {c_l1}")));
    }
    let k = k as f64;
    Ok(match variant {
        BoundVariant::General => k * (2.0 * c_l1).sqrt(),
        BoundVariant::PauliWeight => 2f64.powf(n as f64 / 4.0 + d as f64 / 2.0) * k * (m as f64 * c_l1).sqrt(),
        BoundVariant::Effective => k * (2.0 * m as f64 * c_l1).sqrt(),
    })
}

/// Non-degenerate quantum Hamming bound 2^n ≥ K · (number of correctable errors).
pub fn hamming_check(n: usize, k: usize, single_error_count: usize) -> bool {
    let lhs = 2f64.powi(n as i32);
    lhs >= k as f64 * single_error_count as f64
}

/// min{1, c_Z} · Π_j ⌈δ_j / max{1, c_Z}⌉.
pub fn concat_bound(deltas: &[f64], c_z: f64) -> Result<f64> {
    if deltas.is_empty() {
        return Err(Error::Invalid("no inner-code distances".into()));
    }
    if !(c_z > 0.0) {
        return Err(Error::Invalid(format!("c_Z must be positive, got {c_z}")));
    }
    let denom = c_z.max(1.0);
    // tolerate float noise just above an integer ratio
    let prod: f64 = deltas.iter().map(|&d| (d / denom - 1e-12).ceil()).product();
    Ok(c_z.min(1.0) * prod)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inaccuracy_examples() {
        for v in [BoundVariant::General, BoundVariant::PauliWeight, BoundVariant::Effective] {
            assert_eq!(inaccuracy_bound(0.0, 2, 5, 3, 4, v).unwrap(), 0.0);
        }
        let g = inaccuracy_bound(1e-6, 2, 5, 3, 4, BoundVariant::General).unwrap();
        assert!((g - 2.828e-3).abs() < 1e-6);
        let p = inaccuracy_bound(1e-6, 2, 5, 3, 4, BoundVariant::PauliWeight).unwrap();
        assert!((p - 2.69e-2).abs() < 1e-4);
        assert!(inaccuracy_bound(-1.0, 2, 5, 3, 4, BoundVariant::General).is_err());
    }

    #[test]
    fn hamming_examples() {
        assert!(hamming_check(7, 2, 42));
        assert!(!hamming_check(6, 2, 33));
        assert!(hamming_check(3, 1, 8));
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat_bound(&[3.0, 3.0], 1.0).unwrap(), 9.0);
        assert_eq!(concat_bound(&[3.0], 2.0).unwrap(), 2.0);
        assert_eq!(concat_bound(&[4.0, 3.0], 0.5).unwrap(), 6.0);
        assert!(concat_bound(&[], 1.0).is_err());
        assert!(concat_bound(&[3.0], 0.0).is_err());
    }
}
