//! Scoring and verification: partition agreement, reversibility,
//! lumpability predicates, and the bisimulation subset check.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{aggregate_chain, AggregationMap, MarkovChain};
use crate::info::bisimulation_epsilon;
use crate::rng::Rng;
use crate::{Error, Result};

/// Pairwise-agreement comparison of two partitions.
#[derive(Debug, Clone)]
pub struct PartitionComparison {
    /// Adjusted Rand index in `[-1, 1]`.
    pub ari: f64,
    /// Joint label count table (rows: first partition, cols: second).
    pub contingency: Vec<Vec<u64>>,
}

/// Builds the contingency table and the adjusted Rand index of two
/// equal-length label assignments.
///
/// When the chance-corrected denominator vanishes (for example both
/// partitions are a single cluster) the index is defined as 0.
pub fn partition_comparison(a: &[usize], b: &[usize]) -> Result<PartitionComparison> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidSpec("empty partitions"));
    }
    let rows = a.iter().max().unwrap() + 1;
    let cols = b.iter().max().unwrap() + 1;
    let mut contingency = vec![vec![0u64; cols]; rows];
    for (&x, &y) in a.iter().zip(b) {
        contingency[x][y] += 1;
    }

    let choose2 = |v: u64| -> f64 { (v as f64) * (v as f64 - 1.0) / 2.0 };
    let mut sum_cells = 0.0;
    let mut row_sums = vec![0u64; rows];
    let mut col_sums = vec![0u64; cols];
    for (i, row) in contingency.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            sum_cells += choose2(v);
            row_sums[i] += v;
            col_sums[j] += v;
        }
    }
    let sum_rows: f64 = row_sums.iter().map(|&v| choose2(v)).sum();
    let sum_cols: f64 = col_sums.iter().map(|&v| choose2(v)).sum();
    let total_pairs = choose2(a.len() as u64);

    let ari = if total_pairs == 0.0 {
        0.0
    } else {
        let expected = sum_rows * sum_cols / total_pairs;
        let max_index = 0.5 * (sum_rows + sum_cols);
        if max_index == expected {
            0.0
        } else {
            (sum_cells - expected) / (max_index - expected)
        }
    };
    Ok(PartitionComparison { ari, contingency })
}

/// Adjusted Rand index of two label assignments.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(partition_comparison(a, b)?.ari)
}

/// True when the chain satisfies detailed balance within `tol`.
pub fn is_reversible(chain: &MarkovChain, tol: f64) -> bool {
    let n = chain.n_states();
    let mu = chain.stationary();
    let p = chain.transition();
    for x in 0..n {
        for xp in x + 1..n {
            if (mu[x] * p[(x, xp)] - mu[xp] * p[(xp, x)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// True when the observed aggregate process is Markov within `tol`,
/// i.e. the lumpability cost vanishes.
pub fn check_lumpable(chain: &MarkovChain, g: &AggregationMap, tol: f64) -> Result<bool> {
    Ok(crate::info::cost_lumpability(chain, g)? <= tol)
}

/// Aggregates with preimages per exhaustive subset check; beyond this,
/// use [`bisimulation_check_sampled`].
pub const EXHAUSTIVE_SUBSET_CAP: usize = 20;

/// Result of the subset transition-mass check.
#[derive(Debug, Clone)]
pub struct BisimulationReport {
    /// Radius derived from the lumpability cost.
    pub epsilon: f64,
    /// Worst value of (aggregate mass) - (state mass) - epsilon over all
    /// checked (state, target subset) pairs; positive means violated.
    pub max_violation: f64,
    pub holds: bool,
    /// Number of target subsets checked per state.
    pub subsets_checked: u64,
    /// Whether every subset was enumerated or only a sample.
    pub exhaustive: bool,
}

const VIOLATION_SLACK: f64 = 1e-12;

/// Exhaustively verifies that, for every state `x` and every aggregate
/// target set `B`, the transition mass of `x` into the preimage of `B`
/// is at least the aggregate transition mass into `B` minus the derived
/// radius.
///
/// The number of aggregates is capped at [`EXHAUSTIVE_SUBSET_CAP`].
pub fn bisimulation_check(chain: &MarkovChain, g: &AggregationMap) -> Result<BisimulationReport> {
    let k = g.num_aggregates();
    if k > EXHAUSTIVE_SUBSET_CAP {
        return Err(Error::TooManyAggregates {
            count: k,
            max: EXHAUSTIVE_SUBSET_CAP,
        });
    }
    let epsilon = bisimulation_epsilon(chain, g)?;
    let agg = aggregate_chain(chain, g)?;
    let assignment = g.assignment();

    let mut max_violation = f64::NEG_INFINITY;
    let subsets = 1u64 << k;
    let mut diff = vec![0.0; k];
    for (x, &agg_of_x) in assignment.iter().enumerate() {
        let q_row = agg.q.row(agg_of_x);
        let r_row = agg.r.row(x);
        for y in 0..k {
            diff[y] = q_row[y] - r_row[y];
        }
        // Gray-code walk: one membership flip per step keeps the subset
        // sum update O(1).
        let mut sum = 0.0;
        let mut prev_gray = 0u64;
        for i in 1..subsets {
            let gray = i ^ (i >> 1);
            let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
            if gray & (gray ^ prev_gray) != 0 {
                sum += diff[flipped];
            } else {
                sum -= diff[flipped];
            }
            prev_gray = gray;
            let violation = sum - epsilon;
            if violation > max_violation {
                max_violation = violation;
            }
        }
    }
    Ok(BisimulationReport {
        epsilon,
        max_violation,
        holds: max_violation <= VIOLATION_SLACK,
        subsets_checked: subsets - 1,
        exhaustive: true,
    })
}

/// Monte-Carlo variant of [`bisimulation_check`] for large aggregate
/// counts: per state, `n_samples` random target subsets are tested.
pub fn bisimulation_check_sampled(
    chain: &MarkovChain,
    g: &AggregationMap,
    n_samples: u64,
    seed: u64,
) -> Result<BisimulationReport> {
    if n_samples == 0 {
        return Err(Error::InvalidSpec("need at least one subset sample"));
    }
    let epsilon = bisimulation_epsilon(chain, g)?;
    let agg = aggregate_chain(chain, g)?;
    let k = g.num_aggregates();
    let assignment = g.assignment();
    let mut rng = Rng::new(seed);

    let mut max_violation = f64::NEG_INFINITY;
    for (x, &agg_of_x) in assignment.iter().enumerate() {
        let q_row = agg.q.row(agg_of_x);
        let r_row = agg.r.row(x);
        for _ in 0..n_samples {
            let mut sum = 0.0;
            for y in 0..k {
                if rng.next_u64() & 1 == 1 {
                    sum += q_row[y] - r_row[y];
                }
            }
            let violation = sum - epsilon;
            if violation > max_violation {
                max_violation = violation;
            }
        }
    }
    Ok(BisimulationReport {
        epsilon,
        max_violation,
        holds: max_violation <= VIOLATION_SLACK,
        subsets_checked: n_samples,
        exhaustive: false,
    })
}
