//! The two noise-level-free stopping policies.
//!
//! Statistical rule: stop at the first iterate whose residual drops to
//! `(tau_m / sqrt(m)) * z_m`, where `tau_m = tau_coeff * m^tau_exponent`
//! and `z_m` is the ensemble spread. The threshold estimates the
//! residual floor set by the averaged noise; no explicit noise level is
//! needed, but the rule requires `m >= 2` samples for `z_m` to carry
//! information.
//!
//! Heuristic rule: run a full iteration budget and keep the iterate
//! minimizing `Omega(k) = (k + varrho) * residual_k^2`, ties broken
//! toward the smallest index. Needs no noise information at all.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Statistical,
    Heuristic,
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuleKind::Statistical => write!(f, "statistical"),
            RuleKind::Heuristic => write!(f, "heuristic"),
        }
    }
}

impl std::str::FromStr for RuleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statistical" => Ok(RuleKind::Statistical),
            "heuristic" => Ok(RuleKind::Heuristic),
            other => Err(Error::config(format!(
                "unknown stopping rule {other:?}, expected statistical or heuristic"
            ))),
        }
    }
}

/// A stopping rule with its parameters. `tau_coeff`/`tau_exponent`
/// apply to the statistical rule, `varrho` to the heuristic one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StoppingPolicy {
    pub kind: RuleKind,
    pub tau_coeff: f64,
    pub tau_exponent: f64,
    pub varrho: f64,
}

impl StoppingPolicy {
    /// Statistical rule with the given threshold coefficients.
    pub fn statistical(tau_coeff: f64, tau_exponent: f64) -> Self {
        StoppingPolicy { kind: RuleKind::Statistical, tau_coeff, tau_exponent, varrho: 1.0 }
    }

    /// Heuristic rule with the given weight offset.
    pub fn heuristic(varrho: f64) -> Self {
        StoppingPolicy { kind: RuleKind::Heuristic, tau_coeff: 0.0, tau_exponent: 0.0, varrho }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self.kind {
            RuleKind::Statistical => {
                if m < 2 {
                    return Err(Error::Policy(format!(
                        "statistical rule needs m >= 2 samples for a meaningful spread, got m = {m}"
                    )));
                }
                if !(self.tau_coeff > 0.0) {
                    return Err(Error::Policy("tau_coeff must be positive".into()));
                }
            }
            RuleKind::Heuristic => {
                if !(self.varrho >= 1.0) {
                    return Err(Error::Policy(format!("varrho must be >= 1, got {}", self.varrho)));
                }
            }
        }
        Ok(())
    }
}

/// Residual threshold of the statistical rule:
/// `(tau_m / sqrt(m)) * z_m` with `tau_m = tau_coeff * m^tau_exponent`.
pub fn statistical_threshold(policy: &StoppingPolicy, m: usize, z_m: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Policy(format!(
            "statistical threshold undefined for m = {m}: the spread has no degrees of freedom"
        )));
    }
    let mf = m as f64;
    let tau_m = policy.tau_coeff * mf.powf(policy.tau_exponent);
    Ok(tau_m / mf.sqrt() * z_m)
}

/// Index minimizing `Omega(k) = (k + varrho) * residual_k^2`; ties go
/// to the smallest index.
pub fn heuristic_select(residuals: &[f64], varrho: f64) -> usize {
    debug_assert!(!residuals.is_empty());
    let mut best = 0usize;
    let mut best_val = omega(0, residuals[0], varrho);
    for (k, &r) in residuals.iter().enumerate().skip(1) {
        let val = omega(k, r, varrho);
        if val < best_val {
            best_val = val;
            best = k;
        }
    }
    best
}

/// The heuristic objective `(k + varrho) * residual^2`.
pub fn omega(k: usize, residual: f64, varrho: f64) -> f64 {
    (k as f64 + varrho) * residual * residual
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_sqrt_m_tau_is_m_independent() {
        // tau = 2 m^0.5 makes the threshold 2 z_m for every m.
        let p = StoppingPolicy::statistical(2.0, 0.5);
        for m in [2usize, 5, 10, 50] {
            let t = statistical_threshold(&p, m, 1.7).unwrap();
            assert!((t - 3.4).abs() < 1e-12, "m = {m}: {t}");
        }
    }

    #[test]
    fn threshold_zero_spread_is_zero() {
        let p = StoppingPolicy::statistical(3.0, 0.5);
        assert_eq!(statistical_threshold(&p, 4, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn threshold_hand_value() {
        // m = 9, tau = 3 * sqrt(9) = 9, z = 1: threshold 9 / 3 = 3.
        let p = StoppingPolicy::statistical(3.0, 0.5);
        let t = statistical_threshold(&p, 9, 1.0).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_rejects_single_sample() {
        let p = StoppingPolicy::statistical(2.0, 0.5);
        assert!(statistical_threshold(&p, 1, 0.5).is_err());
        assert!(p.validate(1).is_err());
        assert!(p.validate(2).is_ok());
    }

    #[test]
    fn heuristic_constant_residuals_pick_start() {
        assert_eq!(heuristic_select(&[2.0, 2.0, 2.0, 2.0], 5.0), 0);
    }

    #[test]
    fn heuristic_hand_example() {
        // Residuals [3, 2, 1, 1.5], varrho = 1:
        // Omega = [9, 8, 3, 9] -> index 2.
        assert_eq!(heuristic_select(&[3.0, 2.0, 1.0, 1.5], 1.0), 2);
    }

    #[test]
    fn heuristic_tie_breaks_to_smaller_index() {
        // Power-of-two residuals keep the products exact in floating
        // point: Omega = [1, 8, 12, 1], an exact tie between 0 and 3.
        let r = [1.0, 2.0, 2.0, 0.5];
        let varrho = 1.0;
        assert_eq!(omega(0, r[0], varrho), omega(3, r[3], varrho));
        assert_eq!(heuristic_select(&r, varrho), 0);
    }

    #[test]
    fn heuristic_output_is_global_argmin() {
        let residuals: Vec<f64> = (0..40).map(|k| 5.0 / (k as f64 + 1.0) + 0.01 * k as f64).collect();
        let varrho = 7.0;
        let k_star = heuristic_select(&residuals, varrho);
        for (k, &r) in residuals.iter().enumerate() {
            assert!(omega(k_star, residuals[k_star], varrho) <= omega(k, r, varrho));
        }
    }

    #[test]
    fn increasing_tau_never_stops_later() {
        // A larger tau raises the threshold, so the first crossing can
        // only move to the same or an earlier iterate.
        let residuals = [5.0, 3.0, 2.0, 1.2, 0.7, 0.4];
        let z = 0.5;
        let m = 4;
        let mut last_index = None;
        for coeff in [1.0, 2.0, 3.0, 4.0] {
            let p = StoppingPolicy::statistical(coeff, 0.5);
            let thr = statistical_threshold(&p, m, z).unwrap();
            let idx = residuals.iter().position(|&r| r <= thr).unwrap_or(residuals.len());
            if let Some(prev) = last_index {
                assert!(idx <= prev);
            }
            last_index = Some(idx);
        }
    }
}
