pub mod cli;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod oracle;
pub mod rates;
pub mod states;
pub mod susceptibility;

pub use error::{Error, Result};
