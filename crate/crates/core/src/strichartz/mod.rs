//! Numerical verification of the space-time estimates: exponent tables,
//! homogeneous/inhomogeneous density estimates, the dual integral in its two
//! forms, optimality scans, and the operator-kernel estimate.

pub mod field;
pub mod dual;
pub mod optimality;
pub mod density;

use serde::{Deserialize, Serialize};

use crate::dynamics::AdmissiblePair;
use crate::error::{Error, Result};

pub use density::{
    homogeneous_density_estimate, inhomogeneous_density_estimate, kernel_strichartz_check,
};
pub use dual::{dual_integral_i, DualIntegralOptions, DualIntegralResult};
pub use field::SpaceTimeField;
pub use optimality::{optimality_distribution_scan, optimality_endpoint_scan, OptimalityFit};

/// Regime of the α ↦ α₁ exponent map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaRegime {
    /// d = 1: α₁ = α.
    OneDimensional,
    /// (d−1)/4 < α < (d−1)/2: α₁ = 2α − (d−1)/2 (regularity gain).
    Middle,
    /// α = (d−1)/2: any α₁ < (d−1)/2; realized as (d−1)/2 − gap.
    Boundary,
    /// α > (d−1)/2: α₁ = α.
    High,
}

impl AlphaRegime {
    pub fn tag(&self) -> &'static str {
        match self {
            AlphaRegime::OneDimensional => "d1",
            AlphaRegime::Middle => "middle",
            AlphaRegime::Boundary => "boundary",
            AlphaRegime::High => "high",
        }
    }
}

fn check_alpha(d: usize, alpha: f64) -> Result<()> {
    match d {
        1 => {
            if alpha >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("d=1 requires alpha >= 0 (got {alpha})")))
            }
        }
        2 | 3 => {
            let floor = (d as f64 - 1.0) / 4.0;
            if alpha > floor {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "d={d} requires alpha > (d-1)/4 = {floor} (got {alpha})"
                )))
            }
        }
        _ => Err(Error::DimensionUnsupported(d)),
    }
}

/// The derivative gain exponent α₁ with its regime tag. In the boundary
/// regime the supremum (d−1)/2 is approached from below by a fixed gap.
pub fn alpha1_of(d: usize, alpha: f64) -> Result<(f64, AlphaRegime)> {
    check_alpha(d, alpha)?;
    if d == 1 {
        return Ok((alpha, AlphaRegime::OneDimensional));
    }
    let half = (d as f64 - 1.0) / 2.0;
    if alpha < half {
        Ok((2.0 * alpha - half, AlphaRegime::Middle))
    } else if alpha == half {
        Ok((half - crate::ALPHA1_BOUNDARY_GAP, AlphaRegime::Boundary))
    } else {
        Ok((alpha, AlphaRegime::High))
    }
}

/// η(d, α) used in the density component of the 𝔜^α norm (α ≥ 1):
/// positive only in the (d=3, α=1) case.
pub fn eta_of(d: usize, alpha: f64) -> Result<f64> {
    check_alpha(d, alpha)?;
    if alpha < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "eta is defined for alpha >= 1 (got {alpha})"
        )));
    }
    if d == 3 && alpha == 1.0 {
        Ok(crate::ETA_DEFAULT)
    } else {
        Ok(0.0)
    }
}

/// Resolved exponent set for one (d, α), reproducibility metadata for scans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub d: usize,
    pub alpha: f64,
    pub alpha1: f64,
    pub eta: f64,
    pub regime: AlphaRegime,
}

pub fn exponent_config(d: usize, alpha: f64) -> Result<ExponentConfig> {
    let (alpha1, regime) = alpha1_of(d, alpha)?;
    let eta = if alpha >= 1.0 { eta_of(d, alpha)? } else { 0.0 };
    Ok(ExponentConfig { d, alpha, alpha1, eta, regime })
}

/// Sample `count` admissible pairs: always (∞,2), then the d-dependent
/// near-endpoint pair, then intermediate points of the scaling line
/// 2/q + d/r = d/2. The forbidden endpoint (2,∞) in d=2 is never produced.
pub fn admissible_pairs(d: usize, count: usize) -> Result<Vec<AdmissiblePair>> {
    if count < 1 {
        return Err(Error::InvalidParameter("pair count must be >= 1".into()));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::DimensionUnsupported(d));
    }
    // fastest admissible time exponent per dimension
    let q_min = match d {
        1 => 4.0,
        2 => 2.2,
        _ => 2.0,
    };
    let mut pairs: Vec<AdmissiblePair> = Vec::new();
    let push = |q: f64, pairs: &mut Vec<AdmissiblePair>| {
        let denom = d as f64 / 2.0 - 2.0 / q;
        let r = if denom.abs() < 1e-14 { f64::INFINITY } else { d as f64 / denom };
        if let Ok(p) = AdmissiblePair::new(q, r, d) {
            if !pairs.iter().any(|e| e.label() == p.label()) {
                pairs.push(p);
            }
        }
    };
    if count == 1 {
        push(f64::INFINITY, &mut pairs);
        return Ok(pairs);
    }
    for i in 0..count {
        // interpolate uniformly in 1/q from 0 to 1/q_min
        let inv_q = (i as f64 / (count - 1) as f64) / q_min;
        let q = if inv_q == 0.0 { f64::INFINITY } else { 1.0 / inv_q };
        push(q, &mut pairs);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_table_pins() {
        let (a1, reg) = alpha1_of(3, 0.75).unwrap();
        assert!((a1 - 0.5).abs() < 1e-15);
        assert_eq!(reg, AlphaRegime::Middle);

        let (a1, reg) = alpha1_of(2, 1.0).unwrap();
        assert_eq!(a1, 1.0);
        assert_eq!(reg, AlphaRegime::High);

        let (a1, reg) = alpha1_of(1, 0.0).unwrap();
        assert_eq!(a1, 0.0);
        assert_eq!(reg, AlphaRegime::OneDimensional);

        let (a1, _) = alpha1_of(3, 0.6).unwrap();
        assert!((a1 - 0.2).abs() < 1e-12);

        // boundary regime sits strictly below (d-1)/2
        let (a1, reg) = alpha1_of(3, 1.0).unwrap();
        assert_eq!(reg, AlphaRegime::Boundary);
        assert!(a1 < 1.0);
    }

    #[test]
    fn eta_pins() {
        assert!(eta_of(3, 1.0).unwrap() > 0.0);
        assert_eq!(eta_of(2, 1.0).unwrap(), 0.0);
        assert_eq!(eta_of(2, 1.5).unwrap(), 0.0);
        assert_eq!(eta_of(3, 1.5).unwrap(), 0.0);
        assert!(eta_of(2, 0.5).is_err());
    }

    #[test]
    fn alpha_constraints_enforced() {
        assert!(alpha1_of(1, -0.1).is_err());
        assert!(alpha1_of(2, 0.25).is_err()); // boundary of Eq (alpha) excluded
        assert!(alpha1_of(3, 0.5).is_err());
        assert!(alpha1_of(2, 0.2500001).is_ok());
    }

    #[test]
    fn regularity_gain_in_middle_regime() {
        // α₁ + 1/2 > α throughout the middle regime
        for d in [2usize, 3] {
            let lo = (d as f64 - 1.0) / 4.0;
            let hi = (d as f64 - 1.0) / 2.0;
            for i in 1..20 {
                let alpha = lo + (hi - lo) * i as f64 / 20.0;
                let (a1, reg) = alpha1_of(d, alpha).unwrap();
                assert_eq!(reg, AlphaRegime::Middle);
                assert!(a1 + 0.5 > alpha, "d={d} alpha={alpha}");
            }
        }
    }

    #[test]
    fn pair_families() {
        let p3 = admissible_pairs(3, 4).unwrap();
        assert!(p3.iter().any(|p| p.q.is_infinite() && p.r == 2.0));
        assert!(p3.iter().any(|p| p.q == 2.0 && (p.r - 6.0).abs() < 1e-9));
        for p in &p3 {
            assert!((2.0 / p.q + 3.0 / p.r - 1.5).abs() < 1e-12);
        }
        let p2 = admissible_pairs(2, 6).unwrap();
        assert!(p2.iter().all(|p| !(p.q == 2.0 && p.r.is_infinite())));
        // explicit request of the forbidden endpoint is rejected
        assert!(AdmissiblePair::new(2.0, f64::INFINITY, 2).is_err());
    }
}
