//! Zero-photon catalysis as heralded noiseless attenuation.
//!
//! Mixing the sent mode with vacuum on a beam splitter of transmittance `T`
//! and post-selecting on no click acts as `√T^{n̂}`: a coherent state `|α⟩`
//! becomes `|√T α⟩` with probability `exp(−|α|²(1 − T))`. Every branch of the
//! four-state ensemble has the same amplitude, so the whole ensemble is
//! rescaled to `α̃² = T α²` with that same weight.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::modulation::{modulation_state, ModulationState, GAUSSIAN_EQUIVALENCE_BOUND};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalysisResult {
    pub t_bs: f64,
    pub alpha_sq_in: f64,
    pub alpha_sq_out: f64,
    pub p_success: f64,
    pub state_out: ModulationState,
    /// `Ṽ_M = 2α̃²` lies below the Gaussian-equivalence bound.
    pub within_bound: bool,
}

fn check_transmittance(t_bs: f64) -> Result<()> {
    ensure_finite("T", t_bs)?;
    if t_bs <= 0.0 || t_bs > 1.0 {
        return Err(Error::Domain(format!("catalysis transmittance must lie in (0, 1], got {t_bs}")));
    }
    Ok(())
}

/// Heralding probability `P_d = exp(−α²(1 − T))`.
pub fn success_probability(alpha_sq: f64, t_bs: f64) -> Result<f64> {
    ensure_finite("alpha^2", alpha_sq)?;
    if alpha_sq < 0.0 {
        return Err(Error::Domain(format!("alpha^2 must be >= 0, got {alpha_sq}")));
    }
    check_transmittance(t_bs)?;
    Ok((-alpha_sq * (1.0 - t_bs)).exp())
}

pub fn apply_catalysis(alpha_sq: f64, t_bs: f64) -> Result<CatalysisResult> {
    let p_success = success_probability(alpha_sq, t_bs)?;
    let alpha_sq_out = t_bs * alpha_sq;
    let state_out = modulation_state(alpha_sq_out)?;
    Ok(CatalysisResult {
        t_bs,
        alpha_sq_in: alpha_sq,
        alpha_sq_out,
        p_success,
        state_out,
        within_bound: 2.0 * alpha_sq_out < GAUSSIAN_EQUIVALENCE_BOUND,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_catalysis() {
        let r = apply_catalysis(0.75, 1.0).unwrap();
        assert_eq!(r.p_success, 1.0);
        assert_eq!(r.state_out, modulation_state(0.75).unwrap());
        assert!(!r.within_bound);
    }

    #[test]
    fn vacuum_is_invariant() {
        for t in [0.01, 0.3, 1.0] {
            assert_eq!(success_probability(0.0, t).unwrap(), 1.0);
        }
    }

    #[test]
    fn reported_operating_point() {
        assert_relative_eq!(success_probability(0.75, 0.275).unwrap(), (-0.54375f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(success_probability(0.75, 0.275).unwrap(), 0.580_567_038_759_224, max_relative = 1e-13);
        let r = apply_catalysis(0.75, 0.275).unwrap();
        assert_relative_eq!(r.alpha_sq_out, 0.20625, epsilon = 1e-15);
        assert_relative_eq!(r.state_out.x_var, 1.4125, epsilon = 1e-15);
        assert_relative_eq!(r.state_out.z4, 0.981_899_664_608_557_3, max_relative = 1e-13);
        assert!(r.within_bound);
    }

    #[test]
    fn half_transmittance() {
        let r = apply_catalysis(0.2, 0.5).unwrap();
        assert_relative_eq!(r.alpha_sq_out, 0.1, epsilon = 1e-16);
        assert_relative_eq!(r.p_success, 0.904_837_418_035_959_6, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_transmittance() {
        for t in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(matches!(apply_catalysis(0.5, t), Err(Error::Domain(_))), "t={t}");
        }
    }

    proptest! {
        #[test]
        fn catalysis_composes(a in 0.0f64..2.0, t1 in 0.01f64..=1.0, t2 in 0.01f64..=1.0) {
            let first = apply_catalysis(a, t1).unwrap();
            let second = apply_catalysis(first.alpha_sq_out, t2).unwrap();
            let direct = apply_catalysis(a, t1 * t2).unwrap();
            prop_assert!((second.state_out.x_var - direct.state_out.x_var).abs() < 1e-12);
            prop_assert!((second.state_out.z4 - direct.state_out.z4).abs() < 1e-12);
            for (x, y) in second.state_out.lambdas.iter().zip(direct.state_out.lambdas) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((first.p_success * second.p_success - direct.p_success).abs() < 1e-12);
        }

        #[test]
        fn success_increases_with_transmittance(a in 0.01f64..2.0, t in 0.01f64..0.99) {
            let lo = success_probability(a, t).unwrap();
            let hi = success_probability(a, t + 0.01).unwrap();
            prop_assert!(hi > lo);
            prop_assert!(lo > 0.0 && hi <= 1.0);
        }
    }
}
