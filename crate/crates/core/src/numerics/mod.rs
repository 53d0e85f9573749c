//! Quadrature, root finding, line fits and an adaptive Runge–Kutta integrator.

pub mod fit;
pub mod ode;
pub mod quad;
pub mod roots;

pub use fit::{linear_slope, loglog_slope, RunningFit};
pub use ode::{Dopri5, OdeError, StepRecord};
pub use quad::{adaptive_simpson, gauss_kronrod, QuadError};
pub use roots::{bisect, golden_max};
