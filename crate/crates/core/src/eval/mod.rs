//! Post-hoc error metrics on fixed expressions and the numeric oracles used
//! to check and plot them.

mod curve;
mod metrics;
mod normal;
mod ode;
mod quad;

pub use curve::{curve, curve_csv, format_sig, grid, invert, task_reference, CurveRow, Reference, CSV_HEADER};
pub use metrics::{antideriv_error, erf_check, erf_check_fn, residual_error, Offset, ERF_INTERVAL};
pub use normal::{erf, erfc, normal_cdf};
pub use ode::{lane_emden_reference, ode_reference, ode_reference_for_task, ReferenceSolution, SERIES_START};
pub use quad::{quadrature, quadrature_nudged, simpson_weights, Quad, QuadratureSpec, DEFAULT_PANELS, NUDGE};
