//! Reconstructions, special-case checks, manufactured solutions and the
//! convergence harness.

mod cases;
mod convergence;
mod lifting;
mod points;
mod two_point;

pub use cases::ManufacturedCase;
pub use convergence::{discrete_errors, errors_and_orders, ConvergenceReport, ConvergenceRow, Order};
pub use lifting::{broken_gradient, broken_value, lift_flux, mfe_inner_product, LiftedFlux, MfeInnerProduct};
pub use points::{super_admissible_point, super_admissible_points, SuperAdmissible};
pub use two_point::{two_point_verify, TwoPointCheck};
