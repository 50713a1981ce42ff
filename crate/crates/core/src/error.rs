use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("non-finite mean {value} at lattice site ({i}, {j})")]
    NonFiniteSite { i: usize, j: usize, value: f64 },

    #[error("non-finite field value at grid point ({i}, {j}): mu={mu}, sigma={sigma}")]
    NonFiniteGridPoint { i: usize, j: usize, mu: f64, sigma: f64 },

    #[error("point ({i}, {j}) is outside a {n1}x{n2} grid")]
    OutOfRange { i: usize, j: usize, n1: usize, n2: usize },

    #[error("curve is not coordinatewise monotone at vertex {index}")]
    NotMonotone { index: usize },

    #[error("incommensurate grids: {0}")]
    Incommensurate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
