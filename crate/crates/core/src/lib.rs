pub mod config;
pub mod construction;
pub mod delone;
pub mod error;
pub mod estimators;
pub mod montecarlo;
pub mod numerics;
pub mod psi;
pub mod verify;

pub use error::{Error, Result};
