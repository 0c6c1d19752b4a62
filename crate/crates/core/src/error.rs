use alloc::string::String;

/// Errors raised by the model, geometry and measurement code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A quantity fell outside the range where the model is defined.
    #[error("{quantity} = {value} is outside its domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// The caller asked for something that cannot be done with these inputs.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numerical routine could not produce a result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Dark-pixel segmentation found nothing below the threshold.
    #[error("no pupil found: no pixel in the region is darker than the threshold")]
    NoPupil,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(quantity: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        quantity,
        value,
        domain,
    }
}
