use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A series or continued fraction did not reach the requested tolerance.
    #[error("{func} did not converge within {terms} terms (x = {x})")]
    Convergence {
        func: &'static str,
        x: f64,
        terms: usize,
    },

    /// Two quantized directions are (numerically) collinear.
    #[error("degenerate geometry: |<h1, h2>| = {overlap}")]
    DegenerateGeometry { overlap: f64 },

    /// A closed form evaluated outside its admissible band, e.g. a CDF
    /// outside [0, 1] beyond the cancellation tolerance.
    #[error("precision loss in {func}: raw value {raw} at {detail}")]
    Precision {
        func: &'static str,
        raw: f64,
        detail: String,
    },

    /// An inverse feedback law has no solution for the requested loss target.
    #[error("infeasible {law}: {term} = {value} must be positive")]
    Infeasible {
        law: &'static str,
        term: &'static str,
        value: f64,
    },

    /// Invalid experiment or scheme configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An error tied to one point of a parameter sweep.
    #[error("at {snr_db} dB: {source}")]
    AtPoint { snr_db: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// True for errors caused by numerics rather than by the caller's inputs.
    pub fn is_numerical(&self) -> bool {
        if let Error::AtPoint { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Precision { .. }
                | Error::Infeasible { .. }
                | Error::DegenerateGeometry { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
