//! Bayes-optimal single-copy measurements for estimating the mixing weight λ
//! of ρ_λ = λρ1 + (1−λ)ρ2 when ρ1, ρ2 and a prior over λ are known.

pub mod basis;
pub mod bayes;
pub mod cli_io;
pub mod error;
pub mod highdim;
pub mod linalg;
pub mod policy;
pub mod qubit;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod selftest;
pub mod simulator;
pub mod state;

pub use error::{Error, Result};
