use thiserror::Error;

/// Errors produced by the simulator and its calculators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is outside its allowed domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A state or operator had the wrong dimension for the requested operation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Lead spin polarization is insufficient for tunnel initialization.
    #[error("leads are not spin-polarized: g_l_eff*mu_B*B0 = {zeeman_ev:.4e} eV does not exceed 5*k_B*T = {thermal_ev:.4e} eV")]
    UnpolarizedLeads { zeeman_ev: f64, thermal_ev: f64 },

    /// A readout configuration violates its scheme constraints.
    #[error("invalid readout configuration: {0}")]
    InvalidReadout(String),

    /// An operation is not defined for the given readout scheme.
    #[error("operation not supported for readout scheme {0}")]
    UnsupportedScheme(String),

    /// A numerical integration or linear-algebra step produced an unphysical result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A quantity string could not be parsed.
    #[error("cannot parse quantity `{input}`: {reason}")]
    Quantity { input: String, reason: String },

    /// A configuration or protocol document failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// Too few samples for a statistical estimate.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// A failure inside a Monte Carlo shot.
    #[error("shot {shot}: {source}")]
    Shot {
        shot: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that indicate a numerical problem rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric(_) => true,
            Error::Shot { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value < 0.0 {
        return Err(Error::param(name, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value <= 0.0 {
        return Err(Error::param(name, format!("must be > 0, got {value}")));
    }
    Ok(())
}

pub(crate) fn require_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::param(name, format!("must lie in [0, 1], got {value}")));
    }
    Ok(())
}
