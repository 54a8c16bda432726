//! Exact equilibrium analysis for small instances of the mechanisms.
//!
//! The pipeline has three stages:
//!
//! 1. **Build** ([`build_bft`], [`build_fork`]): translate a population and
//!    mechanism parameters into an explicit game graph ([`tree::GameTree`])
//!    — players (honest nodes, and one player per coalition so joint
//!    deviations are covered), information sets, chance draws, and terminal
//!    outcomes carrying payoff increments along the way.
//! 2. **Solve** ([`spe`]): find all pure-strategy equilibria that are
//!    sequentially rational stage by stage, via backward induction over
//!    stage blocks plus a global best-response audit.
//! 3. **Report**: a [`spe::SolveReport`] lists equilibria, whether the
//!    equilibrium outcome is unique, and the selected profile's outcome
//!    distribution.

pub mod build_bft;
pub mod build_fork;
pub mod spe;
pub mod tree;

pub use build_bft::{build_bft_game, BftGameSpec, MAX_POPULATION};
pub use build_fork::{build_fork_alloc_game, build_fork_tx_game};
pub use spe::{solve, SolveError, SolveOptions, SolveReport};
pub use tree::{GameTree, Outcome, OutcomeDist, Strategy};

use thiserror::Error;

/// Why a game could not be built.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    /// The population is too small to seat a pair, or large enough that the
    /// exact game graph stops being tractable.
    #[error("population of {n} nodes is outside the supported range 2..={max}")]
    PopulationTooLarge { n: usize, max: usize },
    /// The configuration has no sound game model.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// The builder produced an inconsistent graph; this is a bug.
    #[error("internal game construction error: {0}")]
    Internal(String),
}
