//! α-rank estimation under payoff uncertainty.
//!
//! A Gaussian belief over an unknown payoff matrix induces a distribution
//! over α-ranks. Query selection strategies choose which payoff entry to
//! sample next so that this distribution concentrates on the true ranking.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpharank;
pub mod belief;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod games;
pub mod par;
pub mod payoff;
pub mod rank_belief;
pub mod rng;
pub mod samplers;
pub mod theory;

pub use alpharank::{alpha_rank, AlphaRank, RankSolver, TransitionMatrix};
pub use belief::{GaussianBelief, KernelSpec};
pub use error::{Error, Result};
pub use par::Execution;
pub use payoff::{PayoffMatrix, PayoffTensor, Payoffs};
pub use rank_belief::RankSampleSet;
