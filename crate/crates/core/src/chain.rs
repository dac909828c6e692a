//! Finite stationary Markov chains, deterministic state aggregations,
//! and the optimal aggregated chain for a given mapping.
//!
//! A chain is stored as a row-stochastic transition matrix together with
//! its stationary distribution. Aggregating through a surjective map
//! `g: states -> aggregates` yields the transition matrix that best
//! approximates the observed aggregate process in one step, namely the
//! conditional distribution of the next aggregate given the current one.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::{Error, Result};

/// Row sums may deviate from 1 by this much on input; rows are
/// renormalized on acceptance.
const ROW_SUM_INPUT_TOL: f64 = 1e-8;
/// Residual tolerance for the computed stationary vector.
const STATIONARY_RESIDUAL_TOL: f64 = 1e-9;
/// Stationary entries at or below this are treated as zero mass.
const MIN_STATIONARY_MASS: f64 = 1e-12;
/// Orders above this use power iteration instead of the direct solve.
const DIRECT_SOLVE_MAX_ORDER: usize = 2000;

/// A stationary finite Markov chain: labeled states, row-stochastic
/// transition matrix, and strictly positive stationary distribution.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    states: Vec<String>,
    transition: Matrix,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// Validates a transition matrix and computes its stationary
    /// distribution. States are labeled `s0, s1, ...`.
    ///
    /// Rows must be nonnegative and sum to 1 within `1e-8`; they are
    /// renormalized exactly on acceptance. Chains without a unique
    /// strictly positive stationary vector are rejected as reducible.
    pub fn from_transition(transition: Matrix) -> Result<Self> {
        let labels = (0..transition.rows())
            .map(|i| alloc::format!("s{i}"))
            .collect();
        Self::with_states(labels, transition)
    }

    /// Same as [`MarkovChain::from_transition`] with caller-supplied labels.
    pub fn with_states(states: Vec<String>, mut transition: Matrix) -> Result<Self> {
        if !transition.is_square() {
            return Err(Error::DimensionMismatch {
                expected: transition.rows(),
                found: transition.cols(),
            });
        }
        if states.len() != transition.rows() {
            return Err(Error::DimensionMismatch {
                expected: transition.rows(),
                found: states.len(),
            });
        }
        if transition.rows() == 0 {
            return Err(Error::InvalidSpec("empty transition matrix"));
        }
        for i in 0..transition.rows() {
            let row = transition.row_mut(i);
            let mut sum = 0.0;
            for v in row.iter() {
                if *v < 0.0 {
                    return Err(Error::NonStochastic { row: i, sum: *v });
                }
                sum += *v;
            }
            if (sum - 1.0).abs() > ROW_SUM_INPUT_TOL {
                return Err(Error::NonStochastic { row: i, sum });
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        let stationary = stationary_distribution(&transition).map_err(|e| match e {
            Error::NoUniqueSolution => Error::Reducible,
            other => other,
        })?;
        if stationary.iter().any(|&m| m <= MIN_STATIONARY_MASS) {
            return Err(Error::Reducible);
        }
        Ok(MarkovChain {
            states,
            transition,
            stationary,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transition.rows()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn min_stationary(&self) -> f64 {
        self.stationary
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Stationary distribution of a validated row-stochastic matrix.
///
/// Solves the fixed-point system directly with the last equation
/// replaced by the normalization constraint; falls back to power
/// iteration for orders above 2000.
pub fn stationary_distribution(transition: &Matrix) -> Result<Vec<f64>> {
    if !transition.is_square() {
        return Err(Error::DimensionMismatch {
            expected: transition.rows(),
            found: transition.cols(),
        });
    }
    let n = transition.rows();
    if n == 0 {
        return Err(Error::InvalidSpec("empty transition matrix"));
    }
    let mu = if n <= DIRECT_SOLVE_MAX_ORDER {
        stationary_direct(transition)?
    } else {
        stationary_power(transition)?
    };

    // Residual check: mu' P = mu' must hold to high accuracy.
    let mut residual = 0.0_f64;
    for j in 0..n {
        let mut acc = 0.0;
        for (i, &m) in mu.iter().enumerate() {
            acc += m * transition[(i, j)];
        }
        residual = residual.max((acc - mu[j]).abs());
    }
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::NoUniqueSolution);
    }
    Ok(mu)
}

/// Direct solve of `(P^T - I) mu = 0` with the last row replaced by
/// `sum(mu) = 1`, using Gaussian elimination with partial pivoting.
fn stationary_direct(transition: &Matrix) -> Result<Vec<f64>> {
    let n = transition.rows();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = transition[(i, j)];
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;

    // Scale-aware singularity threshold.
    let scale = a.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tiny = scale * 1e-13 * n as f64;

    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[(row, col)].abs() > a[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if a[(pivot, col)].abs() <= tiny {
            return Err(Error::NoUniqueSolution);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = a[(row, col)] / a[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[(row, j)] -= factor * a[(col, j)];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut mu = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= a[(row, j)] * mu[j];
        }
        mu[row] = acc / a[(row, row)];
    }
    let total: f64 = mu.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::NoUniqueSolution);
    }
    for v in mu.iter_mut() {
        *v /= total;
    }
    Ok(mu)
}

fn stationary_power(transition: &Matrix) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-13;
    const MAX_ITER: usize = 1_000_000;
    let n = transition.rows();
    let mut mu = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITER {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (i, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (j, p) in transition.row(i).iter().enumerate() {
                next[j] += m * p;
            }
        }
        let total: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= total;
        }
        let diff = mu
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        core::mem::swap(&mut mu, &mut next);
        if diff < TOL {
            return Ok(mu);
        }
    }
    Err(Error::NoUniqueSolution)
}

/// A deterministic aggregation map `g`: one aggregate index per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMap {
    assignment: Vec<usize>,
    num_aggregates: usize,
}

impl AggregationMap {
    pub fn new(assignment: Vec<usize>, num_aggregates: usize) -> Result<Self> {
        if num_aggregates == 0 {
            return Err(Error::InvalidSpec("num_aggregates must be positive"));
        }
        if assignment.iter().any(|&y| y >= num_aggregates) {
            return Err(Error::InvalidSpec("assignment entry out of range"));
        }
        Ok(AggregationMap {
            assignment,
            num_aggregates,
        })
    }

    /// The identity map on `n` states.
    pub fn identity(n: usize) -> Self {
        AggregationMap {
            assignment: (0..n).collect(),
            num_aggregates: n,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_aggregates(&self) -> usize {
        self.num_aggregates
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Preimage sizes per aggregate.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_aggregates];
        for &y in &self.assignment {
            sizes[y] += 1;
        }
        sizes
    }

    /// True when every aggregate has at least one preimage state.
    pub fn is_surjective(&self) -> bool {
        self.sizes().iter().all(|&s| s > 0)
    }

    /// Errs with the first empty aggregate, if any.
    pub fn require_surjective(&self) -> Result<()> {
        match self.sizes().iter().position(|&s| s == 0) {
            Some(y) => Err(Error::EmptyAggregate { aggregate: y }),
            None => Ok(()),
        }
    }

    /// The lifted indicator matrix: `n x K`, row `x` has a single 1 in
    /// column `g(x)`.
    pub fn lift(&self) -> Matrix {
        let mut w = Matrix::zeros(self.assignment.len(), self.num_aggregates);
        for (x, &y) in self.assignment.iter().enumerate() {
            w[(x, y)] = 1.0;
        }
        w
    }
}

/// The aggregate approximation of a chain under a mapping: its
/// transition matrix `q`, stationary vector `nu`, and the intermediate
/// state-to-aggregate matrix `r` (row `x` is the distribution of the
/// next aggregate given current state `x`).
#[derive(Debug, Clone)]
pub struct AggregatedChain {
    pub q: Matrix,
    pub nu: Vec<f64>,
    pub r: Matrix,
}

/// Computes the aggregate chain for a surjective mapping.
///
/// `q[y][y']` is the conditional probability of observing aggregate `y'`
/// next given aggregate `y` now, under the stationary law of the
/// original chain.
pub fn aggregate_chain(chain: &MarkovChain, g: &AggregationMap) -> Result<AggregatedChain> {
    let n = chain.n_states();
    if g.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: g.len(),
        });
    }
    g.require_surjective()?;
    let k = g.num_aggregates();
    let mu = chain.stationary();
    let p = chain.transition();
    let assignment = g.assignment();

    let mut nu = vec![0.0; k];
    for (x, &y) in assignment.iter().enumerate() {
        nu[y] += mu[x];
    }

    let mut r = Matrix::zeros(n, k);
    for x in 0..n {
        let row = p.row(x);
        let out = r.row_mut(x);
        for (xp, &v) in row.iter().enumerate() {
            out[assignment[xp]] += v;
        }
    }

    let mut q = Matrix::zeros(k, k);
    for x in 0..n {
        let y = assignment[x];
        let weight = mu[x] / nu[y];
        for (yp, &v) in r.row(x).iter().enumerate() {
            q[(y, yp)] += weight * v;
        }
    }

    Ok(AggregatedChain { q, nu, r })
}
