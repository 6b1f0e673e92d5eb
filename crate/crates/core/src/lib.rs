//! Numerical laboratory for the defocusing semilinear wave equation
//! ∂ₜ²u − Δu = −|u|^{p−1}u in three space dimensions, 3 ≤ p ≤ 5, with
//! diagnostics for the splitting of the energy into inward and outward parts.

pub mod analysis;
pub mod data;
pub mod error;
pub mod flux;
pub mod geometry;
pub mod grid;
pub mod quadrature;
pub mod region;
pub mod solver;
pub mod state;
pub mod stencil;
pub mod trace;

pub use error::{Error, Result};
pub use grid::{Backend, Grid};
pub use state::{Coupling, ProblemSpec, SimState};
