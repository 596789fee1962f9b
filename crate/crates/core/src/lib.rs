//! Open-system dynamics of a bosonic double-well trap.
//!
//! Builds GKSL generators for a two-site Bose-Hubbard model coupled to a
//! stationary Gaussian environment, integrates them, compares the initial
//! slope of the inter-well current with closed forms and samples a
//! stochastic unraveling of the singular-coupling limit.

pub mod analytics;
pub mod environment;
pub mod error;
pub mod evolution;
pub mod fockspace;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod stochastic;

pub use error::{Error, Result};
pub use fockspace::C64;
