//! Statistics of the four-state discrete-modulation ensemble.
//!
//! Alice (and Bob) send one of the four coherent states `|α e^{i(2l+1)π/4}⟩`
//! with equal probability. The entanglement-based picture purifies this
//! ensemble into `|Φ₄⟩ = Σ_l √λ_l |φ_l⟩|φ_l⟩`, whose covariance matrix is
//!
//! ```text
//! Γ = [[X·I₂,  Z₄·σ_z],
//!      [Z₄·σ_z, X·I₂ ]]
//! ```
//!
//! with `X = 1 + 2α²` and `Z₄ = 2α² Σ_k λ_{k-1}^{3/2} λ_k^{-1/2}` (index
//! taken mod 4). All variances are in shot-noise units with `x = a + a†`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Upper end of the modulated variance `V_M = 2α²` for which the four-state
/// ensemble is treated as Gaussian-equivalent.
pub const GAUSSIAN_EQUIVALENCE_BOUND: f64 = 0.5;

/// Below this α² the cancelling differences `cosh − cos` and `sinh − sin`
/// are summed as power series instead of being subtracted.
const SERIES_SWITCH: f64 = 1.0;

/// Closed-form statistics of `|Φ₄⟩` at a given α².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationState {
    pub alpha_sq: f64,
    pub lambdas: [f64; 4],
    pub x_var: f64,
    pub z4: f64,
}

impl ModulationState {
    /// Modulated variance `V_M = 2α²`.
    pub fn modulated_variance(&self) -> f64 {
        2.0 * self.alpha_sq
    }

    /// Whether `V_M` lies below the Gaussian-equivalence bound.
    pub fn within_bound(&self) -> bool {
        self.modulated_variance() < GAUSSIAN_EQUIVALENCE_BOUND
    }

    /// The Gaussian-modulation correlation `Z_G` at the same variance.
    pub fn z_gaussian(&self) -> f64 {
        (self.x_var * self.x_var - 1.0).sqrt()
    }

    /// The 4×4 covariance matrix in (x_A, p_A, x_A1, p_A1) ordering.
    pub fn covariance_matrix(&self) -> [[f64; 4]; 4] {
        let (x, z) = (self.x_var, self.z4);
        [
            [x, 0.0, z, 0.0],
            [0.0, x, 0.0, -z],
            [z, 0.0, x, 0.0],
            [0.0, -z, 0.0, x],
        ]
    }
}

fn check_alpha_sq(alpha_sq: f64) -> Result<()> {
    ensure_finite("alpha^2", alpha_sq)?;
    if alpha_sq < 0.0 {
        return Err(Error::Domain(format!("alpha^2 must be >= 0, got {alpha_sq}")));
    }
    Ok(())
}

/// `Σ_k x^{4k+r} / (4k+r)!`
fn residue_series(x: f64, r: u32) -> f64 {
    let mut term = 1.0;
    for j in 1..=r {
        term *= x / f64::from(j);
    }
    let mut sum = term;
    let mut n = r;
    loop {
        for _ in 0..4 {
            n += 1;
            term *= x / f64::from(n);
        }
        sum += term;
        if term <= sum * 1e-18 {
            return sum;
        }
    }
}

/// Ensemble weights `(λ₀, λ₁, λ₂, λ₃)`.
pub fn lambda_coeffs(alpha_sq: f64) -> Result<[f64; 4]> {
    check_alpha_sq(alpha_sq)?;
    let a = alpha_sq;
    let half_e = 0.5 * (-a).exp();
    let (cosh_plus_cos, sinh_plus_sin) = (a.cosh() + a.cos(), a.sinh() + a.sin());
    let (cosh_minus_cos, sinh_minus_sin) = if a < SERIES_SWITCH {
        (2.0 * residue_series(a, 2), 2.0 * residue_series(a, 3))
    } else {
        (a.cosh() - a.cos(), a.sinh() - a.sin())
    };
    Ok([
        half_e * cosh_plus_cos,
        half_e * sinh_plus_sin,
        half_e * cosh_minus_cos,
        half_e * sinh_minus_sin,
    ])
}

/// Quadrature variance `X = 1 + 2α²`.
pub fn variance_x(alpha_sq: f64) -> Result<f64> {
    check_alpha_sq(alpha_sq)?;
    Ok(1.0 + 2.0 * alpha_sq)
}

fn z4_from_lambdas(alpha_sq: f64, lambdas: &[f64; 4]) -> f64 {
    if alpha_sq == 0.0 {
        return 0.0;
    }
    let sum: f64 = (0..4)
        .map(|k| {
            let prev = lambdas[(k + 3) % 4];
            let cur = lambdas[k];
            // λ_k underflows only where the term's limit is zero.
            if cur > 0.0 {
                prev.powf(1.5) / cur.sqrt()
            } else {
                0.0
            }
        })
        .sum();
    2.0 * alpha_sq * sum
}

/// Cross-correlation `Z₄` of the four-state ensemble, zero at `α² = 0`.
pub fn correlation_z4(alpha_sq: f64) -> Result<f64> {
    let lambdas = lambda_coeffs(alpha_sq)?;
    Ok(z4_from_lambdas(alpha_sq, &lambdas))
}

/// Gaussian-modulation correlation `Z_G = √(X² − 1)`.
pub fn correlation_zg(x_var: f64) -> Result<f64> {
    ensure_finite("X", x_var)?;
    if x_var < 1.0 {
        return Err(Error::Domain(format!("X must be >= 1, got {x_var}")));
    }
    Ok((x_var * x_var - 1.0).sqrt())
}

pub fn modulation_state(alpha_sq: f64) -> Result<ModulationState> {
    let lambdas = lambda_coeffs(alpha_sq)?;
    Ok(ModulationState {
        alpha_sq,
        lambdas,
        x_var: 1.0 + 2.0 * alpha_sq,
        z4: z4_from_lambdas(alpha_sq, &lambdas),
    })
}
