//! Conjugate instants, Morse indices and crossing forms for
//! `-div(a grad u) + f u = 0` on shrinking intervals and balls, with a
//! shooting check of the nonlinear bifurcation they predict.
//!
//! The usual entry point is [`scan::verify_smale_identity`]:
//!
//! ```
//! use conjscan::{assembly::Grid, demos, scan};
//!
//! let grid = Grid::new(401).unwrap();
//! let report = scan::verify_smale_identity(&demos::interval(), &grid, &Default::default()).unwrap();
//! assert_eq!(report.smale_lhs, 2);
//! assert_eq!(report.crossing_pairs().len(), 2);
//! ```

pub mod assembly;
pub mod banded;
pub mod config;
pub mod crossing;
pub mod demos;
pub mod error;
pub mod expr;
pub mod inertia;
pub mod matrix_lab;
pub mod problem;
pub mod report;
pub mod scan;
pub mod shooting;
pub mod spline;

pub use error::{Error, Result};
pub use problem::{CoefficientField, Interval1DProblem, Problem, RadialProblem};
