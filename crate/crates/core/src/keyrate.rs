//! Asymptotic secret key rate under reverse reconciliation.
//!
//! The pipeline is catalysis → equivalent channel → `Γ_AB̃` → `I(A:B)` and
//! `χ(B:E)` → `K = P_d (β I(A:B) − χ(B:E))`. Both parties use the same
//! variance `V = 1 + 2α²`; the original protocol is the `T = 1` special case.

use serde::{Deserialize, Serialize};

use crate::catalysis::apply_catalysis;
use crate::channel::{equivalent_channel, ChannelScenario, EquivalentChannel};
use crate::error::{ensure_finite, Error, Result};
use crate::modulation::{modulation_state, ModulationState, GAUSSIAN_EQUIVALENCE_BOUND};

/// Rounding noise below which a value is snapped back into the physical range.
const CLAMP_TOL: f64 = 1e-9;
/// Violations larger than this are reported as errors.
const PHYSICALITY_TOL: f64 = 1e-6;

/// Entries of `Γ_AB̃ = [[a·I₂, c·σ_z], [c·σ_z, b·I₂]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCovariance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TwoModeCovariance {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let cov = Self { a, b, c };
        cov.check_physical()?;
        Ok(cov)
    }

    /// `ϑ = a² + b² − 2c²`
    pub fn theta(&self) -> f64 {
        self.a * self.a + self.b * self.b - 2.0 * self.c * self.c
    }

    /// `ζ = ab − c²`, the square root of the determinant.
    pub fn zeta(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }

    pub fn check_physical(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            ensure_finite(name, v)?;
        }
        if self.a < 1.0 - PHYSICALITY_TOL || self.b < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Physicality(format!(
                "single-mode variances below vacuum: a = {}, b = {}",
                self.a, self.b
            )));
        }
        symplectic_eigenvalues(self).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub alpha_sq: f64,
    pub t_bs: f64,
    pub beta: f64,
    pub cov: TwoModeCovariance,
    pub theta: f64,
    pub zeta: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub p_d: f64,
    pub key_rate: f64,
    pub within_bound: bool,
    /// `None` only without modulation, where the optimal gain degenerates.
    pub channel: Option<EquivalentChannel>,
}

/// `Γ_AB̃` from the (possibly catalyzed) sender statistics and the equivalent channel.
pub fn covariance_ab(x_eff: f64, z_eff: f64, equiv: &EquivalentChannel) -> Result<TwoModeCovariance> {
    ensure_finite("X", x_eff)?;
    ensure_finite("Z", z_eff)?;
    if x_eff < 1.0 {
        return Err(Error::Domain(format!("X must be >= 1, got {x_eff}")));
    }
    if z_eff < 0.0 {
        return Err(Error::Domain(format!("Z must be >= 0, got {z_eff}")));
    }
    TwoModeCovariance::new(x_eff, equiv.t_c * (x_eff + equiv.chi_t), equiv.t_c.sqrt() * z_eff)
}

/// Shannon mutual information between Alice's and Bob's heterodyne data, in bits.
pub fn mutual_information(cov: &TwoModeCovariance) -> Result<f64> {
    let denom = (cov.a + 1.0) - cov.c * cov.c / (cov.b + 1.0);
    if denom <= 0.0 || cov.b <= -1.0 {
        return Err(Error::Physicality(format!("mutual information denominator {denom} <= 0")));
    }
    Ok(((cov.a + 1.0) / denom).log2())
}

/// `G(x) = (x+1) log₂(x+1) − x log₂ x`, with `0·log 0 = 0`.
pub fn g_function(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    if x < -CLAMP_TOL {
        return Err(Error::Domain(format!("G is undefined for x = {x}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

fn snap_to_vacuum(nu: f64, what: &str) -> Result<f64> {
    if !nu.is_finite() || nu < 1.0 - PHYSICALITY_TOL {
        return Err(Error::Physicality(format!("{what} = {nu} < 1")));
    }
    Ok(if (1.0 - CLAMP_TOL..1.0).contains(&nu) { 1.0 } else { nu })
}

/// Symplectic eigenvalues `(ν₁, ν₂)` of `Γ_AB̃`, with `ν₁ ≥ ν₂`.
pub fn symplectic_eigenvalues(cov: &TwoModeCovariance) -> Result<(f64, f64)> {
    let theta = cov.theta();
    let zeta = cov.zeta();
    let mut disc = theta * theta - 4.0 * zeta * zeta;
    if disc < 0.0 {
        if disc < -CLAMP_TOL * (theta * theta).max(1.0) {
            return Err(Error::Physicality(format!("negative discriminant {disc}")));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let nu1 = (0.5 * (theta + root)).max(0.0).sqrt();
    let nu2 = (0.5 * (theta - root)).max(0.0).sqrt();
    Ok((snap_to_vacuum(nu1, "nu1")?, snap_to_vacuum(nu2, "nu2")?))
}

/// Symplectic eigenvalue of Alice's state conditioned on Bob's heterodyne outcome.
pub fn conditional_eigenvalue(cov: &TwoModeCovariance) -> Result<f64> {
    let nu3 = (cov.a * (cov.b + 1.0) - cov.c * cov.c) / (cov.b + 1.0);
    snap_to_vacuum(nu3, "nu3")
}

fn entropy_term(nu: f64) -> Result<f64> {
    g_function(((nu - 1.0) / 2.0).max(0.0))
}

/// Holevo information `χ(B:E)` available to the eavesdropper, in bits.
pub fn holevo_bound(cov: &TwoModeCovariance) -> Result<f64> {
    let (nu1, nu2) = symplectic_eigenvalues(cov)?;
    let nu3 = conditional_eigenvalue(cov)?;
    let chi = entropy_term(nu1)? + entropy_term(nu2)? - entropy_term(nu3)?;
    if chi < -CLAMP_TOL {
        return Err(Error::Physicality(format!("negative Holevo bound {chi}")));
    }
    Ok(chi.max(0.0))
}

fn check_beta(beta: f64) -> Result<()> {
    ensure_finite("beta", beta)?;
    if beta <= 0.0 || beta > 1.0 {
        return Err(Error::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// Shared tail of the pipeline, from sender statistics onward.
fn assemble(
    alpha_sq: f64,
    t_bs: f64,
    sent: &ModulationState,
    p_d: f64,
    scenario: &ChannelScenario,
    beta: f64,
) -> Result<KeyRateResult> {
    check_beta(beta)?;
    scenario.validate()?;
    let (cov, channel) = if alpha_sq == 0.0 {
        // V → 1 drives the optimal gain and T_C to zero while b → 1.
        (TwoModeCovariance::new(sent.x_var, 1.0, 0.0)?, None)
    } else {
        let ch = equivalent_channel(scenario, 1.0 + 2.0 * alpha_sq)?;
        (covariance_ab(sent.x_var, sent.z4, &ch)?, Some(ch))
    };
    let (nu1, nu2) = symplectic_eigenvalues(&cov)?;
    let nu3 = conditional_eigenvalue(&cov)?;
    let i_ab = mutual_information(&cov)?;
    let chi_be = holevo_bound(&cov)?;
    let key_rate = p_d * (beta * i_ab - chi_be);
    if !key_rate.is_finite() {
        return Err(Error::Evaluation(format!("non-finite key rate at alpha^2 = {alpha_sq}, T = {t_bs}")));
    }
    Ok(KeyRateResult {
        alpha_sq,
        t_bs,
        beta,
        cov,
        theta: cov.theta(),
        zeta: cov.zeta(),
        nu1,
        nu2,
        nu3,
        i_ab,
        chi_be,
        p_d,
        key_rate,
        within_bound: sent.modulated_variance() < GAUSSIAN_EQUIVALENCE_BOUND,
        channel,
    })
}

/// Key rate of the catalysis-assisted protocol; `t_bs = 1` is the original protocol.
pub fn secret_key_rate(alpha_sq: f64, t_bs: f64, scenario: &ChannelScenario, beta: f64) -> Result<KeyRateResult> {
    let cat = apply_catalysis(alpha_sq, t_bs)?;
    assemble(alpha_sq, t_bs, &cat.state_out, cat.p_success, scenario, beta)
}

/// Key rate of the protocol without catalysis, built directly from `(X, Z₄)` at α.
pub fn original_key_rate(alpha_sq: f64, scenario: &ChannelScenario, beta: f64) -> Result<KeyRateResult> {
    let sent = modulation_state(alpha_sq)?;
    assemble(alpha_sq, 1.0, &sent, 1.0, scenario, beta)
}

/// Repeaterless secret-key capacity `−log₂(1 − η)` of a pure-loss line.
pub fn plob_from_transmittance(eta: f64) -> Result<f64> {
    ensure_finite("eta", eta)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("transmittance must lie in [0, 1], got {eta}")));
    }
    if eta == 1.0 {
        return Err(Error::Divergence);
    }
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}

/// Repeaterless bound over the whole Alice–Bob fiber (both legs).
pub fn plob_bound(scenario: &ChannelScenario) -> Result<f64> {
    scenario.validate()?;
    plob_from_transmittance(10f64.powf(-scenario.kappa * scenario.total_length() / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Case, DEFAULT_KAPPA};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cov(a: f64, b: f64, c: f64) -> TwoModeCovariance {
        TwoModeCovariance::new(a, b, c).unwrap()
    }

    #[test]
    fn uncorrelated_modes() {
        let c0 = cov(1.7, 1.3, 0.0);
        assert_eq!(mutual_information(&c0).unwrap(), 0.0);
        let (n1, n2) = symplectic_eigenvalues(&c0).unwrap();
        assert_relative_eq!(n1, 1.7, epsilon = 1e-14);
        assert_relative_eq!(n2, 1.3, epsilon = 1e-14);
        assert_eq!(conditional_eigenvalue(&c0).unwrap(), 1.7);
        let vac_a = cov(1.0, 2.0, 0.0);
        assert_relative_eq!(holevo_bound(&vac_a).unwrap(), g_function(0.5).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn mutual_information_is_even_in_c() {
        assert_relative_eq!(mutual_information(&cov(2.0, 2.0, 1.0)).unwrap(), (3.0f64 / (3.0 - 1.0 / 3.0)).log2(), epsilon = 1e-15);
        assert_relative_eq!(mutual_information(&cov(2.0, 2.0, 1.0)).unwrap(), 0.169_925_001_442_312_4, epsilon = 1e-14);
        let pos = TwoModeCovariance { a: 2.0, b: 2.0, c: 1.0 };
        let neg = TwoModeCovariance { c: -1.0, ..pos };
        assert_eq!(mutual_information(&pos).unwrap(), mutual_information(&neg).unwrap());
    }

    #[test]
    fn g_values() {
        assert_eq!(g_function(0.0).unwrap(), 0.0);
        assert_eq!(g_function(-5e-10).unwrap(), 0.0);
        assert_relative_eq!(g_function(1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(g_function(3.0).unwrap(), 3.245_112_497_836_531_5, epsilon = 1e-14);
        assert!(matches!(g_function(-1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn pure_two_mode_squeezed_state() {
        for v in [1.2, 2.5, 7.0] {
            let c = cov(v, v, (v * v - 1.0f64).sqrt());
            let (n1, n2) = symplectic_eigenvalues(&c).unwrap();
            assert_relative_eq!(n1, 1.0, epsilon = 1e-7);
            assert_relative_eq!(n2, 1.0, epsilon = 1e-7);
            assert_relative_eq!(conditional_eigenvalue(&c).unwrap(), 1.0, epsilon = 1e-12);
            assert!(holevo_bound(&c).unwrap() < 1e-6);
        }
    }

    #[test]
    fn hand_checked_eigenvalues() {
        let c = cov(1.4, 1.2, 0.5);
        assert_relative_eq!(c.theta(), 2.9, epsilon = 1e-15);
        assert_relative_eq!(c.zeta(), 1.43, epsilon = 1e-15);
        let (n1, n2) = symplectic_eigenvalues(&c).unwrap();
        assert!((n1 - 1.3).abs() < 1e-12 && (n2 - 1.1).abs() < 1e-12, "{n1} {n2}");
        assert!((conditional_eigenvalue(&c).unwrap() - 2.83 / 2.2).abs() < 1e-12);
        assert_relative_eq!(holevo_bound(&c).unwrap(), 0.310_238_911_362_103_25, epsilon = 1e-12);
    }

    #[test]
    fn unphysical_covariances_are_rejected() {
        assert!(matches!(TwoModeCovariance::new(1.0, 1.0, 0.5), Err(Error::Physicality(_))));
        assert!(matches!(TwoModeCovariance::new(0.5, 1.0, 0.0), Err(Error::Physicality(_))));
        assert!(matches!(TwoModeCovariance::new(2.0, 2.0, 2.0), Err(Error::Physicality(_))));
    }

    #[test]
    fn covariance_assembly() {
        let s = ChannelScenario::for_case(Case::Asymmetric, 25.0, 0.002).unwrap();
        let ch = equivalent_channel(&s, 2.5).unwrap();
        let z = crate::modulation::correlation_z4(0.20625).unwrap();
        let c = covariance_ab(1.4125, z, &ch).unwrap();
        assert_relative_eq!(c.a, 1.4125, epsilon = 1e-15);
        assert_relative_eq!(c.b, 1.057_032_746_720_277, max_relative = 1e-13);
        assert_relative_eq!(c.c, 0.361_475_376_745_690_4, max_relative = 1e-13);
        assert_eq!(covariance_ab(1.4125, 0.0, &ch).unwrap().c, 0.0);

        let ideal = EquivalentChannel { g_sq: 2.0, t_c: 1.0, eps_th: 0.0, chi_t: 0.0 };
        let v = 1.8;
        let zg = (v * v - 1.0f64).sqrt();
        let c = covariance_ab(v, zg * 0.9, &ideal).unwrap();
        assert_eq!((c.a, c.b, c.c), (v, v, zg * 0.9));
    }

    #[test]
    fn regression_operating_point() {
        let s = ChannelScenario::for_case(Case::Asymmetric, 25.0, 0.002).unwrap();
        let r = secret_key_rate(0.75, 0.275, &s, 0.95).unwrap();
        assert_relative_eq!(r.i_ab, 0.038_495_028_480_597_012, max_relative = 1e-11);
        assert_relative_eq!(r.chi_be, 0.028_827_933_679_352_85, max_relative = 1e-11);
        assert_relative_eq!(r.p_d, 0.580_567_038_759_224, max_relative = 1e-13);
        assert_relative_eq!(r.key_rate, 0.004_494_949_367_566_402, max_relative = 1e-9);
        assert_relative_eq!(r.nu1, 1.358_404_431_219_83, max_relative = 1e-12);
        assert_relative_eq!(r.nu2, 1.002_937_177_940_106_8, max_relative = 1e-12);
        assert_relative_eq!(r.nu3, 1.348_979_159_993_067_9, max_relative = 1e-12);
        assert!(r.within_bound);
    }

    #[test]
    fn zpc_positive_at_35_km() {
        let s = ChannelScenario::for_case(Case::Asymmetric, 35.0, 0.002).unwrap();
        assert!(secret_key_rate(0.75, 0.258, &s, 0.95).unwrap().key_rate > 0.0);
    }

    #[test]
    fn no_modulation_yields_no_key() {
        let s = ChannelScenario::for_case(Case::Asymmetric, 10.0, 0.002).unwrap();
        for t in [0.3, 1.0] {
            let r = secret_key_rate(0.0, t, &s, 0.95).unwrap();
            assert_eq!(r.cov.c, 0.0);
            assert_eq!(r.i_ab, 0.0);
            assert!(r.key_rate <= 0.0);
            assert_eq!(r.key_rate, -r.p_d * r.chi_be);
            assert!(r.channel.is_none());
        }
    }

    #[test]
    fn rejects_bad_beta() {
        let s = ChannelScenario::for_case(Case::Asymmetric, 10.0, 0.002).unwrap();
        assert!(matches!(secret_key_rate(0.5, 0.5, &s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(secret_key_rate(0.5, 0.5, &s, 1.2), Err(Error::Domain(_))));
    }

    #[test]
    fn plob_values() {
        assert_relative_eq!(plob_from_transmittance(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(plob_from_transmittance(0.0).unwrap(), 0.0);
        assert!(plob_from_transmittance(1e-12).unwrap() < 2e-12);
        let s = ChannelScenario::for_case(Case::Asymmetric, 25.0, 0.002).unwrap();
        assert_relative_eq!(plob_bound(&s).unwrap(), 0.548_412_254_608_163_8, max_relative = 1e-13);
        let zero = ChannelScenario::new(0.0, 0.0, DEFAULT_KAPPA, 0.0, 0.0).unwrap();
        assert_eq!(plob_bound(&zero), Err(Error::Divergence));
    }

    #[test]
    fn zero_distance_symmetric_still_evaluates() {
        let s = ChannelScenario::for_case(Case::Symmetric, 0.0, 0.002).unwrap();
        assert!(secret_key_rate(0.8, 0.31, &s, 0.95).unwrap().key_rate > 0.0);
    }

    proptest! {
        #[test]
        fn key_rate_identity(a in 0.0f64..2.0, t in 0.01f64..=1.0, l in 0.0f64..80.0, xi in 0.0f64..0.02, beta in 0.5f64..=1.0) {
            let s = ChannelScenario::for_case(Case::Asymmetric, l, xi).unwrap();
            let r = secret_key_rate(a, t, &s, beta).unwrap();
            prop_assert!((r.key_rate - r.p_d * (beta * r.i_ab - r.chi_be)).abs() < 1e-15);
            prop_assert!(r.nu1 >= r.nu2);
            prop_assert!(r.chi_be >= 0.0);
        }

        #[test]
        fn key_rate_increases_with_beta(a in 0.01f64..2.0, t in 0.05f64..=1.0, l in 0.0f64..60.0, beta in 0.5f64..0.99) {
            let s = ChannelScenario::for_case(Case::Asymmetric, l, 0.002).unwrap();
            let lo = secret_key_rate(a, t, &s, beta).unwrap();
            let hi = secret_key_rate(a, t, &s, beta + 0.01).unwrap();
            prop_assume!(lo.i_ab > 0.0);
            prop_assert!(hi.key_rate > lo.key_rate);
        }
    }
}
