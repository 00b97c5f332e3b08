//! Parameter optimization and security thresholds.
//!
//! Maximization is a coarse grid followed by golden-section refinement inside
//! the bracket around the best grid point. Thresholds (tolerable excess noise,
//! maximal distance) are found by bisection on the sign of the optimized rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Case, ChannelScenario};
use crate::error::{ensure_finite, Error, Result};
use crate::keyrate::secret_key_rate;

/// Grid spacing for the catalysis transmittance.
pub const T_GRID_STEP: f64 = 0.01;
/// Golden-section stopping width for the transmittance.
pub const T_TOLERANCE: f64 = 1e-4;
/// Grid spacing for the variance.
pub const V_GRID_STEP: f64 = 0.05;
/// Golden-section stopping width for the variance.
pub const V_TOLERANCE: f64 = 1e-3;
/// Search interval for the tolerable excess noise (SNU).
pub const XI_SEARCH: Interval = Interval { lo: 0.0, hi: 0.05 };
pub const XI_TOLERANCE: f64 = 1e-5;
/// Search interval for the maximal transmission distance (km).
pub const DISTANCE_SEARCH: Interval = Interval { lo: 0.0, hi: 200.0 };
pub const DISTANCE_TOLERANCE: f64 = 0.01;
pub const DEFAULT_T_RANGE: Interval = Interval { lo: 0.01, hi: 1.0 };
pub const DEFAULT_V_RANGE: Interval = Interval { lo: 1.05, hi: 8.0 };

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        ensure_finite("interval start", lo)?;
        ensure_finite("interval end", hi)?;
        if lo > hi {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub arg_opt: f64,
    pub value_opt: f64,
    pub feasible: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Zero-photon catalysis on Alice's sent mode, transmittance optimized.
    Zpc,
    /// No catalysis (`T = 1`).
    Original,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Zpc => "zpc",
            Protocol::Original => "original",
        }
    }

    /// Variance reported as optimal for this protocol and relay placement.
    pub fn reference_variance(self, case: Case) -> f64 {
        match (self, case) {
            (Protocol::Zpc, Case::Asymmetric) => 2.5,
            (Protocol::Zpc, Case::Symmetric) => 2.6,
            (Protocol::Original, Case::Asymmetric) => 1.4,
            (Protocol::Original, Case::Symmetric) => 1.5,
        }
    }
}

/// How the catalysis transmittance is searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSearch {
    pub range: Interval,
    /// Keep the catalyzed modulated variance `T(V − 1)` below 0.5.
    pub strict_bound: bool,
}

impl Default for TSearch {
    fn default() -> Self {
        Self { range: DEFAULT_T_RANGE, strict_bound: false }
    }
}

impl TSearch {
    fn effective_range(&self, alpha_sq: f64) -> Result<Interval> {
        let range = Interval::new(self.range.lo, self.range.hi)?;
        if range.lo <= 0.0 || range.hi > 1.0 {
            return Err(Error::Domain(format!("T range [{}, {}] must lie in (0, 1]", range.lo, range.hi)));
        }
        if !self.strict_bound || alpha_sq == 0.0 {
            return Ok(range);
        }
        // 2 T α² < 0.5
        let t_max = 0.25 / alpha_sq * (1.0 - 1e-12);
        if t_max < range.lo {
            return Err(Error::Domain(format!(
                "no transmittance in [{}, {}] satisfies the Gaussian-equivalence bound at alpha^2 = {alpha_sq}",
                range.lo, range.hi
            )));
        }
        Ok(Interval { lo: range.lo, hi: range.hi.min(t_max) })
    }
}

/// Transmittance policy for a variance sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TPolicy {
    Fixed(f64),
    Optimize(TSearch),
}

fn grid_points(range: Interval, step: f64) -> Vec<f64> {
    let n = ((range.width() / step) + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| range.lo + i as f64 * step).collect();
    if let Some(&last) = pts.last() {
        if range.hi - last > 1e-12 {
            pts.push(range.hi);
        }
    }
    pts
}

/// Maximize `f` over `range`: grid of spacing `step`, then golden section
/// inside the neighbouring grid cells until the bracket is narrower than `tol`.
/// Ties go to the smaller argument.
pub fn grid_then_golden<F>(f: F, range: Interval, step: f64, tol: f64) -> Result<OptimizationOutcome>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let eval = |x: f64| -> std::result::Result<f64, Error> {
        match f(x) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(Error::Evaluation(format!("objective is {v} at {x}"))),
            Err(e) => Err(e),
        }
    };
    let pts = grid_points(range, step);
    let samples: Vec<std::result::Result<f64, Error>> = pts.par_iter().map(|&x| eval(x)).collect();
    let mut evaluations = pts.len();

    let mut best: Option<(usize, f64)> = None;
    let mut first_error = None;
    for (i, s) in samples.iter().enumerate() {
        match s {
            Ok(v) => {
                if best.is_none_or(|(_, b)| *v > b) {
                    best = Some((i, *v));
                }
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let Some((best_i, best_v)) = best else {
        let cause = first_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(Error::Evaluation(format!("no finite objective value on [{}, {}]: {cause}", range.lo, range.hi)));
    };

    let score = |x: f64| eval(x).unwrap_or(f64::NEG_INFINITY);
    let mut lo = pts[best_i.saturating_sub(1)];
    let mut hi = pts[(best_i + 1).min(pts.len() - 1)];
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (score(x1), score(x2));
    evaluations += 2;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = score(x2);
        }
        evaluations += 1;
    }
    let (mut arg_opt, mut value_opt) = (pts[best_i], best_v);
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > value_opt || (v == value_opt && x < arg_opt) {
            arg_opt = x;
            value_opt = v;
        }
    }
    Ok(OptimizationOutcome { arg_opt, value_opt, feasible: value_opt > 0.0, evaluations })
}

/// Best catalysis transmittance for fixed α².
pub fn maximize_over_t(alpha_sq: f64, scenario: &ChannelScenario, beta: f64, search: &TSearch) -> Result<OptimizationOutcome> {
    let range = search.effective_range(alpha_sq)?;
    grid_then_golden(
        |t| secret_key_rate(alpha_sq, t, scenario, beta).map(|r| r.key_rate),
        range,
        T_GRID_STEP,
        T_TOLERANCE,
    )
}

/// Best variance `V = 1 + 2α²`, either at fixed `T` or re-optimizing `T` per point.
pub fn maximize_over_v(policy: TPolicy, scenario: &ChannelScenario, beta: f64, v_range: Interval) -> Result<OptimizationOutcome> {
    let v_range = Interval::new(v_range.lo, v_range.hi)?;
    if v_range.lo <= 1.0 || v_range.hi > 8.0 {
        return Err(Error::Domain(format!("V range [{}, {}] must lie in (1, 8]", v_range.lo, v_range.hi)));
    }
    grid_then_golden(
        |v| {
            let alpha_sq = (v - 1.0) / 2.0;
            match policy {
                TPolicy::Fixed(t) => secret_key_rate(alpha_sq, t, scenario, beta).map(|r| r.key_rate),
                TPolicy::Optimize(search) => maximize_over_t(alpha_sq, scenario, beta, &search).map(|o| o.value_opt),
            }
        },
        v_range,
        V_GRID_STEP,
        V_TOLERANCE,
    )
}

/// `(T*, K*)`: the protocol's best rate at this point (`T = 1` for the original protocol).
pub fn optimal_key_rate(
    protocol: Protocol,
    alpha_sq: f64,
    scenario: &ChannelScenario,
    beta: f64,
    search: &TSearch,
) -> Result<(f64, f64)> {
    match protocol {
        Protocol::Original => Ok((1.0, secret_key_rate(alpha_sq, 1.0, scenario, beta)?.key_rate)),
        Protocol::Zpc => {
            let o = maximize_over_t(alpha_sq, scenario, beta, search)?;
            Ok((o.arg_opt, o.value_opt))
        }
    }
}

/// Largest `x` in `range` with `positive(x)`, assuming a single sign change.
/// Returns `range.lo` if infeasible at the start and `range.hi` if feasible throughout.
fn bisect_last_positive<F>(positive: F, range: Interval, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    if !positive(range.lo)? {
        return Ok(range.lo);
    }
    if positive(range.hi)? {
        return Ok(range.hi);
    }
    let (mut lo, mut hi) = (range.lo, range.hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest excess noise `ξ = ξ_A = ξ_B` that still yields a positive optimized rate.
pub fn noise_threshold(v: f64, protocol: Protocol, scenario: &ChannelScenario, beta: f64, search: &TSearch) -> Result<f64> {
    let alpha_sq = variance_to_alpha_sq(v)?;
    bisect_last_positive(
        |xi| {
            let s = scenario.with_excess_noise(xi)?;
            Ok(optimal_key_rate(protocol, alpha_sq, &s, beta, search)?.1 > 0.0)
        },
        XI_SEARCH,
        XI_TOLERANCE,
    )
}

/// Longest Alice–Bob distance (km) with a positive optimized rate.
#[allow(clippy::too_many_arguments)]
pub fn max_distance(
    v: f64,
    protocol: Protocol,
    xi: f64,
    beta: f64,
    case: Case,
    kappa: f64,
    search: &TSearch,
) -> Result<f64> {
    let alpha_sq = variance_to_alpha_sq(v)?;
    bisect_last_positive(
        |l| {
            let s = ChannelScenario::for_case(case, l, xi)?.with_kappa(kappa)?;
            Ok(optimal_key_rate(protocol, alpha_sq, &s, beta, search)?.1 > 0.0)
        },
        DISTANCE_SEARCH,
        DISTANCE_TOLERANCE,
    )
}

/// `α² = (V − 1)/2`
pub fn variance_to_alpha_sq(v: f64) -> Result<f64> {
    ensure_finite("V", v)?;
    if v < 1.0 {
        return Err(Error::Domain(format!("V must be >= 1, got {v}")));
    }
    Ok((v - 1.0) / 2.0)
}
