//! Simulation of adaptive multi-observable expectation-value estimation by
//! quantum gradient estimation, with a non-iterative baseline, query and
//! qubit accounting, and small dense checks of the block-encoding layer.
//!
//! The estimator works on grids `G_p` of `2^p` points in `(-1/2, 1/2)`. Each
//! round prepares a state whose phase is linear in the grid point with slope
//! set by the residual `<O_j> - u_j`, reads it out in the Fourier basis and
//! takes medians. See [`adaptive::run_adaptive`].
//!
//! ```
//! use hlgrad::adaptive::{run_adaptive, AdaptiveConfig};
//!
//! let cfg = AdaptiveConfig::new(vec![0.3, -0.6], 1.0 / 64.0);
//! let run = run_adaptive(&cfg).unwrap();
//! assert_eq!(run.estimates.len(), 2);
//! ```

pub mod adaptive;
pub mod baseline;
pub mod error;
pub mod grid;
pub mod micro;
pub mod probing;
pub mod resources;
pub mod seed;

pub use adaptive::{mse_harness, run_adaptive, AdaptiveConfig, MseReport, RunResult};
pub use error::{Error, Result};
pub use grid::{GridRegister, OutcomeDistribution};
pub use probing::{ProbingModel, ProbingSpec};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub struct IntroductionChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/grid.md")]
pub struct GridChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/probing.md")]
pub struct ProbingChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/adaptive.md")]
pub struct AdaptiveChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/resources.md")]
pub struct ResourcesChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/baseline.md")]
pub struct BaselineChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/block_encoding.md")]
pub struct BlockEncodingChapter;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub struct CliChapter;
