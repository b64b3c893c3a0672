//! Multi-objective optimization by iterated Bezier simplex fitting.
//!
//! A single-objective step rule (here: one gradient step on a weighted-sum
//! scalarization) is lifted to a method that approximates the whole Pareto
//! set. Each iteration draws uniform weights on the probability simplex,
//! evaluates the current Bezier simplex at them, steps every point with the
//! rule, and refits the control points by least squares.
//!
//! ```
//! use bezier_mopt::{problems, solver::{run_surface_gd, SolverConfig}, metrics};
//!
//! let problem = problems::scaled_med();
//! let config = SolverConfig { samples: 30, iterations: 200, seed: 1, ..Default::default() };
//! let (model, _trace) = run_surface_gd(&problem, &config).unwrap();
//! assert!(metrics::mse(&model, &problem, 1000, 7).unwrap() < 1e-2);
//! ```

pub mod bezier;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod problems;
pub mod rng;
pub mod simplex;
pub mod solver;
pub mod sweep;

pub use bezier::BezierSimplex;
pub use error::{Error, Result};
pub use problems::Problem;
pub use simplex::{MultiIndexSet, WeightVector};
pub use solver::{run_generic, run_surface_gd, SolverConfig, StepSchedule};

pub const VERSION: &str = concat!("bezier-mopt ", env!("CARGO_PKG_VERSION"));
