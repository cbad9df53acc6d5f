use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("partitions {0} and {1} are not split-merge neighbors")]
    NotNeighbors(String, String),

    #[error("{what} = {value} exceeds the supported limit of {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("distance to stationarity increased at t = {0}")]
    NonMonotone(usize),

    #[error("1 - z = exp(-z s) has no positive root for s = {0}")]
    NoPositiveRoot(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        Err(Error::TooLarge { what, value, limit })
    } else {
        Ok(())
    }
}
