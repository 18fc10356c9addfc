//! Maximal Lyapunov exponent of the switched system `Ẋ = X (uA + (1-u)B)`
//! on `SL2(R)`, for a pair of trace-free 2x2 generators.

pub mod error;
pub mod exec;
pub mod exponent;
pub mod geometry;
pub mod oracle;
pub mod periodic;
pub mod simulator;
pub mod sl2;

pub use error::{Error, Result};
