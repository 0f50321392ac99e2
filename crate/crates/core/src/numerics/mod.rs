//! Small numerical kernels shared by the solvers: adaptive quadrature, an
//! embedded Runge-Kutta integrator and golden-section search.

mod golden;
mod ode;
mod quadrature;

pub use golden::{golden_section_max, GoldenResult};
pub use ode::{DormandPrince, OdeError};
pub use quadrature::{integrate, QuadResult};
