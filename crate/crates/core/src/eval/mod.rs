//! Metrics, Monte-Carlo cross-validation, the Welch t-test and grade-level
//! rate comparisons.

mod cv;
mod grades;
mod metrics;
mod stats;

pub use cv::{montecarlo_cv, CvReport};
pub use grades::{analyze_grades, GradeReport, GradeRow};
pub use metrics::{accuracy, confusion, r_squared, ConfusionMatrix};
pub use stats::{ln_gamma, regularized_incomplete_beta, student_t_sf_two_sided, welch_ttest, TTest, ALPHA};
