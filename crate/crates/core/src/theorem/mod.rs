mod continuation;
mod minimize;
mod objective;

pub use continuation::{
    continuation_curve, dlambda_domega, lambda_on_curve, theorem1_suite, ContinuationRow,
    SuiteReport,
};
pub use minimize::{minimize, LocalMinResult, GRAD_TOL};
pub use objective::{library, DoubleWell, Objective1D, Quadratic, RippledQuadratic};
