//! Information-theoretic aggregation of finite Markov chains.
//!
//! Given a stationary Markov chain on a large state space and a target
//! number of aggregate states, this crate searches for a deterministic
//! state mapping that trades off two objectives:
//!
//! * the observed aggregate process should be close to a Markov chain
//!   (lumpability, measured by [`info::cost_lumpability`]), and
//! * the aggregate chain should retain as much of the one-step temporal
//!   dependence of the original chain as possible (predictability,
//!   measured by [`info::cost_predictability`]).
//!
//! The blended cost is parameterized by `beta` in `[0, 1]` and minimized
//! by greedy single-state reassignment sweeps
//! ([`optimize::sequential_aggregation`]), optionally wrapped in a
//! `beta`-annealing schedule ([`optimize::annealed_aggregation`]) and
//! multi-restart selection.
//!
//! The crate is `no_std` (with `alloc`); all operations are pure
//! functions of their inputs, so values can be shared freely across
//! threads.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

use core::fmt;

pub mod chain;
pub mod eval;
pub mod generate;
pub mod info;
pub mod matrix;
pub mod optimize;
pub mod rng;

pub use chain::{
    aggregate_chain, stationary_distribution, AggregatedChain, AggregationMap, MarkovChain,
};
pub use eval::{
    adjusted_rand_index, bisimulation_check, bisimulation_check_sampled, check_lumpable,
    is_reversible, partition_comparison, BisimulationReport, PartitionComparison,
    EXHAUSTIVE_SUBSET_CAP,
};
pub use generate::{
    bigram_chain, block_stochastic, permute_chain, similarity_chain, BlockChainDraw,
    BlockChainSpec, SimilaritySpec,
};
pub use info::{
    bisimulation_epsilon, cost_beta, cost_lumpability, cost_predictability, entropy,
    kl_divergence_rate, mutual_information, CostReport, JointPmf,
};
pub use matrix::Matrix;
pub use optimize::{
    annealed_aggregation, best_of_restarts_annealed, best_of_restarts_fixed,
    sequential_aggregation, AggregationOutcome, AnnealOutcome, AnnealSchedule, SweepState,
};
pub use rng::Rng;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A transition-matrix row is not a probability vector.
    NonStochastic { row: usize, sum: f64 },
    /// The chain has no unique strictly positive stationary distribution.
    Reducible,
    /// The stationary linear system is rank deficient beyond the expected
    /// single degree of freedom.
    NoUniqueSolution,
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// An aggregate state has an empty preimage.
    EmptyAggregate { aggregate: usize },
    /// `beta` outside `[0, 1]`.
    BetaOutOfRange { beta: f64 },
    /// Requested more aggregates than original states.
    KTooLarge { k: usize, n: usize },
    /// A user-supplied initial assignment leaves some aggregate empty.
    NonSurjectiveInit,
    /// A generator specification is structurally invalid.
    InvalidSpec(&'static str),
    /// The supplied index sequence is not a bijection on the states.
    NotAPermutation,
    /// All points coincide, so no similarity scale can be derived.
    DegeneratePoints,
    /// The character graph of the text is not strongly connected.
    NotIrreducible,
    /// Two assignments differ in length.
    LengthMismatch { left: usize, right: usize },
    /// Exhaustive subset enumeration was requested for too many aggregates.
    TooManyAggregates { count: usize, max: usize },
    /// A probability vector or table failed validation.
    InvalidPmf(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonStochastic { row, sum } => {
                write!(f, "row {row} is not a probability vector (sum {sum})")
            }
            Error::Reducible => write!(f, "chain is reducible or lacks positive stationary mass"),
            Error::NoUniqueSolution => {
                write!(f, "stationary system is rank deficient beyond one degree")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EmptyAggregate { aggregate } => {
                write!(f, "aggregate {aggregate} has an empty preimage")
            }
            Error::BetaOutOfRange { beta } => write!(f, "beta {beta} outside [0, 1]"),
            Error::KTooLarge { k, n } => {
                write!(f, "{k} aggregates requested for a chain with {n} states")
            }
            Error::NonSurjectiveInit => write!(f, "initial assignment is not surjective"),
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::NotAPermutation => write!(f, "index sequence is not a permutation"),
            Error::DegeneratePoints => write!(f, "all points coincide; similarity scale is zero"),
            Error::NotIrreducible => write!(f, "character graph is not strongly connected"),
            Error::LengthMismatch { left, right } => {
                write!(f, "assignments have different lengths: {left} vs {right}")
            }
            Error::TooManyAggregates { count, max } => {
                write!(
                    f,
                    "{count} aggregates exceed the exhaustive-check cap of {max}"
                )
            }
            Error::InvalidPmf(msg) => write!(f, "invalid probability vector: {msg}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
