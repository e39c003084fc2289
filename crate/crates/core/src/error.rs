use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    /// The tree grew past the configured leaf cap.
    #[error("leaf count exceeded cap of {max_leaves} at time {time_reached} (z = {leaves})")]
    Capacity {
        max_leaves: u64,
        leaves: u64,
        time_reached: f64,
    },

    #[error("enumeration of k = {k} leaves exceeds the cap of {cap}")]
    EnumerationCap { k: usize, cap: usize },

    /// A truncated series could not certify the requested accuracy.
    #[error("series truncated after {terms} terms with tail bound {bound:e} (needed {target:e})")]
    Accuracy { terms: u64, bound: f64, target: f64 },

    #[error("{context}: {source}")]
    Cell {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    pub fn in_cell(self, context: impl Into<String>) -> Self {
        Error::Cell {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
