use thiserror::Error;

/// Failures raised by the key-rate pipeline and its verification helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance matrix (or a quantity derived from one) is not a physical state.
    #[error("non-physical state: {0}")]
    Physicality(String),

    /// The Fock cutoff cannot hold the requested state to the required accuracy.
    #[error("Fock cutoff {n_cut} is too small for alpha^2 = {alpha_sq}")]
    Truncation { alpha_sq: f64, n_cut: usize },

    /// Post-selection left (numerically) nothing of the state.
    #[error("degenerate attenuation: success probability {0:e}")]
    DegenerateAttenuation(f64),

    /// No finite objective value was produced during an optimization or root search.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// The repeaterless bound diverges for a lossless line.
    #[error("repeaterless bound diverges at unit transmittance")]
    Divergence,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
