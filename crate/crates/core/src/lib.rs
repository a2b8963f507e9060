pub mod arith;
pub mod bessel;
pub mod character;
pub mod error;
pub mod kloosterman;
pub mod lfunctions;
pub mod moments;
pub mod report;
pub mod sum;
pub mod trace;

pub use error::{Error, Result};
