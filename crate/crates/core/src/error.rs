use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty truncation: band [{lo}, {hi}] carries no density")]
    EmptyTruncation { lo: f64, hi: f64 },

    #[error("kappa_min ({kappa_min}) exceeds kappa_max ({kappa_max})")]
    KappaOrder { kappa_min: f64, kappa_max: f64 },

    #[error("negative kappa ({0}) passed to a singular integral")]
    NegativeKappa(f64),

    #[error("over-barrier field; no tunneling geometry (E = {field}, threshold {threshold})")]
    OverBarrierField { field: f64, threshold: f64 },

    #[error("classically forbidden: k = {k} does not exceed kappa_max = {kappa_max}")]
    ClassicallyForbidden { k: f64, kappa_max: f64 },

    #[error("segment index {index} out of range for a stack of {len}")]
    SegmentIndex { index: usize, len: usize },

    #[error("operation requires {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
