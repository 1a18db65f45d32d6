//! Euler schemes with truncated noise for scalar SDEs driven by countably
//! many independent Brownian motions, with path-independent adaptive step
//! sizes and Monte Carlo error analysis.
//!
//! ```
//! use sde_trunc::analysis::asymptotic_constants;
//! use sde_trunc::model::benchmark_problem;
//!
//! let problem = benchmark_problem(0.9, 16).unwrap();
//! let c = asymptotic_constants(&problem, 64).unwrap();
//! assert!(c.ratio < 1.0);
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod wiener;

pub use error::{Result, SdeError};
