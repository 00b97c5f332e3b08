//! Reduction of the two-leg relay topology to an equivalent one-way channel.
//!
//! Alice and Bob each send through a fiber to the relay. After the relay's
//! Bell measurement and Bob's displacement with gain `g`, the link behaves
//! like a single channel from Alice to Bob with transmittance
//! `T_C = g² T_A / 2` and input-referred excess noise `ε_th`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Standard telecom fiber attenuation in dB/km.
pub const DEFAULT_KAPPA: f64 = 0.2;

/// Relay placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// Relay co-located with Bob: `L_BC = 0`.
    #[serde(alias = "asym")]
    Asymmetric,
    /// Relay midway: `L_AC = L_BC`.
    #[serde(alias = "sym")]
    Symmetric,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::Asymmetric => "asymmetric",
            Case::Symmetric => "symmetric",
        }
    }
}

/// Physical layout of one MDI link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    /// Alice–relay fiber length (km).
    pub l_ac: f64,
    /// Bob–relay fiber length (km).
    pub l_bc: f64,
    /// Fiber loss (dB/km).
    pub kappa: f64,
    /// Excess noise on Alice's leg (SNU).
    pub xi_a: f64,
    /// Excess noise on Bob's leg (SNU).
    pub xi_b: f64,
}

impl ChannelScenario {
    pub fn new(l_ac: f64, l_bc: f64, kappa: f64, xi_a: f64, xi_b: f64) -> Result<Self> {
        let scenario = Self { l_ac, l_bc, kappa, xi_a, xi_b };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Layout for `case` with Alice–Bob distance `distance_km`, equal excess
    /// noise on both legs and the default fiber loss.
    ///
    /// In the symmetric case the distance is split evenly between the legs.
    pub fn for_case(case: Case, distance_km: f64, xi: f64) -> Result<Self> {
        match case {
            Case::Asymmetric => Self::new(distance_km, 0.0, DEFAULT_KAPPA, xi, xi),
            Case::Symmetric => Self::new(0.5 * distance_km, 0.5 * distance_km, DEFAULT_KAPPA, xi, xi),
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    /// Same layout with `ξ_A = ξ_B = xi`.
    pub fn with_excess_noise(mut self, xi: f64) -> Result<Self> {
        self.xi_a = xi;
        self.xi_b = xi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("L_AC", self.l_ac),
            ("L_BC", self.l_bc),
            ("kappa", self.kappa),
            ("xi_A", self.xi_a),
            ("xi_B", self.xi_b),
        ] {
            ensure_finite(name, value)?;
            if value < 0.0 {
                return Err(Error::Domain(format!("{name} must be >= 0, got {value}")));
            }
        }
        if self.kappa == 0.0 {
            return Err(Error::Domain("kappa must be > 0".into()));
        }
        Ok(())
    }

    pub fn t_a(&self) -> f64 {
        10f64.powf(-self.kappa * self.l_ac / 10.0)
    }

    pub fn t_b(&self) -> f64 {
        10f64.powf(-self.kappa * self.l_bc / 10.0)
    }

    /// End-to-end Alice–Bob fiber length.
    pub fn total_length(&self) -> f64 {
        self.l_ac + self.l_bc
    }

    pub fn is_extreme_asymmetric(&self) -> bool {
        self.l_bc == 0.0
    }

    pub fn is_symmetric(&self) -> bool {
        self.l_ac == self.l_bc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentChannel {
    pub g_sq: f64,
    pub t_c: f64,
    pub eps_th: f64,
    pub chi_t: f64,
}

/// `10^(−κL/10)`
pub fn transmittance_from_distance(length_km: f64, kappa: f64) -> Result<f64> {
    ensure_finite("length", length_km)?;
    ensure_finite("kappa", kappa)?;
    if length_km < 0.0 {
        return Err(Error::Domain(format!("length must be >= 0, got {length_km}")));
    }
    if kappa <= 0.0 {
        return Err(Error::Domain(format!("kappa must be > 0, got {kappa}")));
    }
    Ok(10f64.powf(-kappa * length_km / 10.0))
}

/// Input-referred noise of one lossy leg, `(1 − T)/T + ξ`.
pub fn chi_line(t_line: f64, xi: f64) -> Result<f64> {
    ensure_finite("T", t_line)?;
    ensure_finite("xi", xi)?;
    if t_line <= 0.0 || t_line > 1.0 {
        return Err(Error::Domain(format!("line transmittance must lie in (0, 1], got {t_line}")));
    }
    Ok((1.0 - t_line) / t_line + xi)
}

/// Displacement gain minimizing the equivalent excess noise.
pub fn optimal_gain_sq(v_b: f64, t_b: f64) -> Result<f64> {
    ensure_finite("V_B", v_b)?;
    ensure_finite("T_B", t_b)?;
    if v_b <= 1.0 {
        return Err(Error::Domain(format!("V_B must be > 1, got {v_b}")));
    }
    if t_b <= 0.0 || t_b > 1.0 {
        return Err(Error::Domain(format!("T_B must lie in (0, 1], got {t_b}")));
    }
    Ok(2.0 * (v_b - 1.0) / ((v_b + 1.0) * t_b))
}

fn leg_noises(scenario: &ChannelScenario) -> Result<(f64, f64, f64, f64)> {
    scenario.validate()?;
    let t_a = scenario.t_a();
    let t_b = scenario.t_b();
    Ok((t_a, t_b, chi_line(t_a, scenario.xi_a)?, chi_line(t_b, scenario.xi_b)?))
}

/// Equivalent excess noise for an arbitrary displacement gain `g²`.
pub fn excess_noise_general(scenario: &ChannelScenario, v_b: f64, g_sq: f64) -> Result<f64> {
    ensure_finite("V_B", v_b)?;
    ensure_finite("g^2", g_sq)?;
    if v_b < 1.0 {
        return Err(Error::Domain(format!("V_B must be >= 1, got {v_b}")));
    }
    if g_sq <= 0.0 {
        return Err(Error::Domain(format!("g^2 must be > 0, got {g_sq}")));
    }
    let (t_a, t_b, chi_a, chi_b) = leg_noises(scenario)?;
    let ratio = t_b / t_a;
    let mismatch = (2.0 * (v_b - 1.0) / (g_sq * t_b)).sqrt() - (v_b + 1.0).sqrt();
    Ok(1.0 + chi_a + ratio * (chi_b - 1.0) + ratio * mismatch * mismatch)
}

/// Equivalent excess noise at the optimal gain (the mismatch term vanishes).
pub fn excess_noise_min(scenario: &ChannelScenario) -> Result<f64> {
    let (t_a, t_b, chi_a, chi_b) = leg_noises(scenario)?;
    Ok((t_b / t_a) * (chi_b - 1.0) + 1.0 + chi_a)
}

pub fn equivalent_channel(scenario: &ChannelScenario, v_b: f64) -> Result<EquivalentChannel> {
    let g_sq = optimal_gain_sq(v_b, scenario.t_b())?;
    let t_c = g_sq * scenario.t_a() / 2.0;
    let eps_th = excess_noise_min(scenario)?;
    Ok(EquivalentChannel { g_sq, t_c, eps_th, chi_t: (1.0 - t_c) / t_c + eps_th })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn transmittance_values() {
        assert_eq!(transmittance_from_distance(0.0, 0.2).unwrap(), 1.0);
        assert_relative_eq!(transmittance_from_distance(50.0, 0.2).unwrap(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(transmittance_from_distance(25.0, 0.2).unwrap(), 0.316_227_766_016_837_94, max_relative = 1e-15);
        assert!(matches!(transmittance_from_distance(-1.0, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn chi_line_values() {
        assert_eq!(chi_line(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(chi_line(0.5, 0.0).unwrap(), 1.0);
        let t = 10f64.powf(-0.5);
        assert_relative_eq!(chi_line(t, 0.002).unwrap(), 2.164_277_660_168_379_5, max_relative = 1e-14);
        assert!(matches!(chi_line(0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gain_values() {
        assert_relative_eq!(optimal_gain_sq(3.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(optimal_gain_sq(2.5, 1.0).unwrap(), 6.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(optimal_gain_sq(1.4, 0.5).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(optimal_gain_sq(1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn lossless_noiseless_link_has_no_excess_noise() {
        let s = ChannelScenario::new(0.0, 0.0, DEFAULT_KAPPA, 0.0, 0.0).unwrap();
        for v in [1.4, 2.5, 4.0] {
            assert_eq!(equivalent_channel(&s, v).unwrap().eps_th, 0.0);
        }
    }

    #[test]
    fn extreme_asymmetric_noise() {
        let s = ChannelScenario::for_case(Case::Asymmetric, 25.0, 0.002).unwrap();
        let ch = equivalent_channel(&s, 2.5).unwrap();
        assert_relative_eq!(ch.eps_th, 0.008_324_555_320_336_758, max_relative = 1e-13);
        assert_relative_eq!(ch.t_c, 0.135_526_185_435_787_69, max_relative = 1e-13);
        assert_relative_eq!(ch.chi_t, 6.386_972_429_046_555, max_relative = 1e-13);
    }

    #[test]
    fn symmetric_noise() {
        // (χ − 1) + 1 + χ with χ = (1 − T)/T + ξ, T = 10^(−0.004).
        let s = ChannelScenario::new(0.2, 0.2, DEFAULT_KAPPA, 0.002, 0.002).unwrap();
        let ch = equivalent_channel(&s, 2.6).unwrap();
        assert_relative_eq!(ch.eps_th, 0.022_505_772_153_368_824, max_relative = 1e-12);
        assert!(s.is_symmetric());
    }

    #[test]
    fn case_layouts() {
        let a = ChannelScenario::for_case(Case::Asymmetric, 30.0, 0.001).unwrap();
        assert!(a.is_extreme_asymmetric());
        assert_eq!(a.total_length(), 30.0);
        let s = ChannelScenario::for_case(Case::Symmetric, 0.2, 0.001).unwrap();
        assert!(s.is_symmetric());
        assert_relative_eq!(s.total_length(), 0.2);
        assert!(ChannelScenario::new(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ChannelScenario::new(1.0, 0.0, 0.2, -1e-3, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn asymmetric_closed_form(l in 0.0f64..100.0, xa in 0.0f64..0.05, xb in 0.0f64..0.05, v in 1.01f64..6.0) {
            let s = ChannelScenario::new(l, 0.0, DEFAULT_KAPPA, xa, xb).unwrap();
            let eps = equivalent_channel(&s, v).unwrap().eps_th;
            let expected = xa + xb / s.t_a();
            prop_assert!((eps - expected).abs() <= 1e-12 * expected.max(1.0));
        }

        #[test]
        fn noise_monotone_in_xi(la in 0.0f64..60.0, lb in 0.0f64..60.0, xa in 0.0f64..0.05, xb in 0.0f64..0.05, d in 0.0f64..0.01) {
            let base = ChannelScenario::new(la, lb, DEFAULT_KAPPA, xa, xb).unwrap();
            let e0 = excess_noise_min(&base).unwrap();
            let ea = excess_noise_min(&ChannelScenario { xi_a: xa + d, ..base }).unwrap();
            let eb = excess_noise_min(&ChannelScenario { xi_b: xb + d, ..base }).unwrap();
            prop_assert!(ea >= e0 && eb >= e0);
        }
    }
}
