//! Truncated Fock-space reconstruction of the four-state ensemble.
//!
//! This module rebuilds `|Φ₄⟩` term by term from its number-state series,
//! applies the heralded attenuation `√T^{n̂}` to the sent mode, and measures
//! quadrature moments directly. It shares no code with [`crate::modulation`]
//! or [`crate::catalysis`] and exists to check them.
//!
//! All amplitudes of `|Φ₄⟩` are real in the number basis, so states are
//! stored as a real `N × N` coefficient grid `ψ[n_A][n_A1]`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Cutoff used for `α² ≤ 1`; the coherent tail beyond it is below 1e-30.
pub const DEFAULT_CUTOFF: usize = 40;
/// Largest α² the oracle accepts.
pub const MAX_ALPHA_SQ: f64 = 2.0;
/// Largest tolerated probability mass beyond the cutoff.
const TAIL_TOL: f64 = 1e-12;

/// A two-mode state `Σ ψ[n][m] |n⟩_A |m⟩_A1` truncated at `dim` photons per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    dim: usize,
    amplitudes: DMatrix<f64>,
    norm_sq: f64,
}

impl TruncatedState {
    fn from_amplitudes(amplitudes: DMatrix<f64>) -> Self {
        let norm_sq = amplitudes.norm_squared();
        Self { dim: amplitudes.nrows(), amplitudes, norm_sq }
    }

    /// `|0⟩|0⟩`
    pub fn vacuum(dim: usize) -> Self {
        let mut amplitudes = DMatrix::zeros(dim, dim);
        amplitudes[(0, 0)] = 1.0;
        Self::from_amplitudes(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &DMatrix<f64> {
        &self.amplitudes
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

/// Observables supported by [`quadrature_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    /// `⟨x_A x_A1⟩`
    XaXa1,
    /// `⟨p_A p_A1⟩`
    PaPa1,
    /// `⟨x_A²⟩`
    XaSq,
    /// `⟨x_A1²⟩`
    Xa1Sq,
    /// `⟨1⟩`
    Identity,
}

fn check_inputs(alpha_sq: f64, n_cut: usize) -> Result<()> {
    ensure_finite("alpha^2", alpha_sq)?;
    if !(0.0..=MAX_ALPHA_SQ).contains(&alpha_sq) {
        return Err(Error::Domain(format!("oracle needs 0 <= alpha^2 <= {MAX_ALPHA_SQ}, got {alpha_sq}")));
    }
    if n_cut < 4 * alpha_sq.ceil() as usize + 24 {
        return Err(Error::Truncation { alpha_sq, n_cut });
    }
    Ok(())
}

/// Coherent-state amplitudes `e^{−α²/2} αⁿ / √n!` for `n < n_cut`.
fn poisson_amplitudes(alpha_sq: f64, n_cut: usize) -> Vec<f64> {
    let alpha = alpha_sq.sqrt();
    let mut amp = Vec::with_capacity(n_cut);
    let mut cur = (-alpha_sq / 2.0).exp();
    for n in 0..n_cut {
        if n > 0 {
            cur *= alpha / (n as f64).sqrt();
        }
        amp.push(cur);
    }
    amp
}

/// Branch weights `λ_l = ‖Σ_m (−1)^m e^{−α²/2} α^{4m+l}/√(4m+l)! |4m+l⟩‖²`,
/// summed over the truncated series.
pub fn branch_weights(alpha_sq: f64, n_cut: usize) -> Result<[f64; 4]> {
    check_inputs(alpha_sq, n_cut)?;
    let mut weights = [0.0; 4];
    for (n, a) in poisson_amplitudes(alpha_sq, n_cut).into_iter().enumerate() {
        weights[n % 4] += a * a;
    }
    Ok(weights)
}

/// `|Φ₄⟩ = Σ_l √λ_l |φ_l⟩|φ_l⟩`, with `|φ_l⟩` built from its number-state series.
pub fn build_phi4(alpha_sq: f64, n_cut: usize) -> Result<TruncatedState> {
    check_inputs(alpha_sq, n_cut)?;
    let amp = poisson_amplitudes(alpha_sq, n_cut);
    let captured: f64 = amp.iter().map(|a| a * a).sum();
    if 1.0 - captured > TAIL_TOL {
        return Err(Error::Truncation { alpha_sq, n_cut });
    }
    let weights = branch_weights(alpha_sq, n_cut)?;
    // Unnormalized branch vector of |φ_l⟩: norm² is λ_l.
    let signed: Vec<f64> = amp
        .iter()
        .enumerate()
        .map(|(n, a)| if (n / 4) % 2 == 0 { *a } else { -*a })
        .collect();
    let mut psi = DMatrix::zeros(n_cut, n_cut);
    for n in 0..n_cut {
        for m in (n % 4..n_cut).step_by(4) {
            let w = weights[n % 4];
            if w > 0.0 {
                // √λ_l · (u_l/√λ_l) ⊗ (u_l/√λ_l)
                psi[(n, m)] = signed[n] * signed[m] / w.sqrt();
            }
        }
    }
    Ok(TruncatedState::from_amplitudes(psi))
}

/// Position quadrature `x = a + a†` in the number basis.
fn x_matrix(dim: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(dim, dim);
    for n in 0..dim.saturating_sub(1) {
        let v = ((n + 1) as f64).sqrt();
        x[(n, n + 1)] = v;
        x[(n + 1, n)] = v;
    }
    x
}

/// Real part `q` of `p = i(a† − a) = i·q`, so that `p ⊗ p = −q ⊗ q`.
fn q_matrix(dim: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(dim, dim);
    for n in 0..dim.saturating_sub(1) {
        let v = ((n + 1) as f64).sqrt();
        q[(n + 1, n)] = v;
        q[(n, n + 1)] = -v;
    }
    q
}

/// Expectation value of `which`, normalized by the state's norm.
pub fn quadrature_moment(state: &TruncatedState, which: Moment) -> f64 {
    let psi = &state.amplitudes;
    let n = state.dim;
    let raw = match which {
        Moment::Identity => psi.norm_squared(),
        Moment::XaSq => {
            let x = x_matrix(n);
            psi.dot(&(&x * &x * psi))
        }
        Moment::Xa1Sq => {
            let x = x_matrix(n);
            psi.dot(&(psi * &x * &x))
        }
        Moment::XaXa1 => {
            let x = x_matrix(n);
            psi.dot(&(&x * psi * &x))
        }
        Moment::PaPa1 => {
            let q = q_matrix(n);
            -psi.dot(&(&q * psi * q.transpose()))
        }
    };
    raw / state.norm_sq
}

/// Heralded attenuation `√T^{n̂}` on mode A1. Returns the renormalized state
/// and the heralding probability.
pub fn apply_zpc_oracle(state: &TruncatedState, t_bs: f64) -> Result<(TruncatedState, f64)> {
    ensure_finite("T", t_bs)?;
    if t_bs <= 0.0 || t_bs > 1.0 {
        return Err(Error::Domain(format!("T must lie in (0, 1], got {t_bs}")));
    }
    let mut psi = state.amplitudes.clone();
    for (m, mut col) in psi.column_iter_mut().enumerate() {
        col *= t_bs.powf(m as f64 / 2.0);
    }
    let p_success = psi.norm_squared() / state.norm_sq;
    if p_success < 1e-15 {
        return Err(Error::DegenerateAttenuation(p_success));
    }
    psi /= psi.norm();
    Ok((TruncatedState::from_amplitudes(psi), p_success))
}

/// Canonical purification of mode A1: `ψ' = √ρ_A1` with `ρ_A1 = ψᵀψ`.
///
/// Alice's mode of the entanglement-based picture is virtual, so after the
/// sent mode is attenuated the ensemble is described by the purification
/// whose Schmidt vectors on both modes coincide. That is the state whose
/// moments are compared against the closed-form catalyzed covariance.
pub fn canonical_purification(state: &TruncatedState) -> TruncatedState {
    let psi = &state.amplitudes;
    let rho = psi.transpose() * psi / state.norm_sq;
    let eig = SymmetricEigen::new(rho);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let roots = eig.eigenvalues.map(|mu| if mu > 1e-14 * top { mu.sqrt() } else { 0.0 });
    let u = &eig.eigenvectors;
    let sqrt_rho = u * DMatrix::from_diagonal(&roots) * u.transpose();
    TruncatedState::from_amplitudes(sqrt_rho)
}

/// Largest deviations between the oracle and the closed-form code at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub alpha_sq: f64,
    pub t_bs: f64,
    pub n_cut: usize,
    pub lambda_dev: f64,
    pub x_dev: f64,
    pub z4_dev: f64,
    pub p_success_dev: f64,
    pub x_out_dev: f64,
    pub z4_out_dev: f64,
}

impl OracleReport {
    pub fn max_deviation(&self) -> f64 {
        [self.lambda_dev, self.x_dev, self.z4_dev, self.p_success_dev, self.x_out_dev, self.z4_out_dev]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Compare the closed forms against the oracle at `(α², T)`.
pub fn verify_closed_forms(alpha_sq: f64, t_bs: f64, n_cut: usize) -> Result<OracleReport> {
    let closed = crate::modulation::modulation_state(alpha_sq)?;
    let catalyzed = crate::catalysis::apply_catalysis(alpha_sq, t_bs)?;

    let weights = branch_weights(alpha_sq, n_cut)?;
    let phi = build_phi4(alpha_sq, n_cut)?;
    let (attenuated, p_success) = apply_zpc_oracle(&phi, t_bs)?;
    let out = canonical_purification(&attenuated);

    let lambda_dev = weights
        .iter()
        .zip(closed.lambdas)
        .map(|(w, l)| (w - l).abs())
        .fold(0.0, f64::max);
    let x_dev = (quadrature_moment(&phi, Moment::XaSq) - closed.x_var)
        .abs()
        .max((quadrature_moment(&phi, Moment::Xa1Sq) - closed.x_var).abs());
    let z4_dev = (quadrature_moment(&phi, Moment::XaXa1) - closed.z4)
        .abs()
        .max((quadrature_moment(&phi, Moment::PaPa1) + closed.z4).abs());
    let x_out_dev = (quadrature_moment(&out, Moment::XaSq) - catalyzed.state_out.x_var)
        .abs()
        .max((quadrature_moment(&out, Moment::Xa1Sq) - catalyzed.state_out.x_var).abs());
    let z4_out_dev = (quadrature_moment(&out, Moment::XaXa1) - catalyzed.state_out.z4)
        .abs()
        .max((quadrature_moment(&out, Moment::PaPa1) + catalyzed.state_out.z4).abs());

    Ok(OracleReport {
        alpha_sq,
        t_bs,
        n_cut,
        lambda_dev,
        x_dev,
        z4_dev,
        p_success_dev: (p_success - catalyzed.p_success).abs(),
        x_out_dev,
        z4_out_dev,
    })
}
