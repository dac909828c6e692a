//! Information measures over finite chains and aggregations.
//!
//! Everything is reported in bits (base-2 logarithms). The conventions
//! `0 log 0 = 0` and `0 log (0/0) = 0` are applied term-wise; a positive
//! numerator over a zero denominator yields the `+inf` sentinel rather
//! than an error.
//!
//! Conditional entropies are assembled from joint tables rather than by
//! subtracting large entropies, which keeps cancellation error small.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{aggregate_chain, AggregationMap, MarkovChain};
use crate::matrix::Matrix;
use crate::{Error, Result};

const LN_2: f64 = core::f64::consts::LN_2;
const PMF_SUM_TOL: f64 = 1e-8;

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// Entropy of an unvalidated probability row, in bits.
#[inline]
pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * log2(v);
        }
    }
    h
}

/// Shannon entropy in bits. The input must be a probability vector
/// (nonnegative, total mass 1 within `1e-8`).
pub fn entropy(p: &[f64]) -> Result<f64> {
    validate_pmf(p)?;
    Ok(entropy_unchecked(p).max(0.0))
}

fn validate_pmf(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidPmf("empty vector"));
    }
    let mut sum = 0.0;
    for &v in p {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::InvalidPmf("negative or non-finite entry"));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PMF_SUM_TOL {
        return Err(Error::InvalidPmf("total mass is not 1"));
    }
    Ok(())
}

/// A joint probability table with cached marginals.
#[derive(Debug, Clone)]
pub struct JointPmf {
    table: Matrix,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

impl JointPmf {
    /// Validates a table of joint probabilities: entries nonnegative,
    /// total mass 1 within `1e-8`.
    pub fn from_table(table: Matrix) -> Result<Self> {
        if table.rows() == 0 || table.cols() == 0 {
            return Err(Error::InvalidPmf("empty table"));
        }
        if table.data().iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidPmf("negative or non-finite entry"));
        }
        if (table.total() - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf("total mass is not 1"));
        }
        let row_marginal = table.row_sums();
        let col_marginal = table.col_sums();
        Ok(JointPmf {
            table,
            row_marginal,
            col_marginal,
        })
    }

    /// One-step joint `p(x1, x2) = mu[x1] * P[x1][x2]` of a chain.
    pub fn one_step(chain: &MarkovChain) -> Self {
        let n = chain.n_states();
        let mu = chain.stationary();
        let p = chain.transition();
        let mut table = Matrix::zeros(n, n);
        for (x, &mu_x) in mu.iter().enumerate() {
            let row = table.row_mut(x);
            for (xp, &v) in p.row(x).iter().enumerate() {
                row[xp] = mu_x * v;
            }
        }
        let row_marginal = mu.to_vec();
        let col_marginal = table.col_sums();
        JointPmf {
            table,
            row_marginal,
            col_marginal,
        }
    }

    /// Joint of the current state and the next aggregate,
    /// `p(x1, g(x2))`.
    pub fn one_step_col_aggregated(chain: &MarkovChain, g: &AggregationMap) -> Self {
        let n = chain.n_states();
        let k = g.num_aggregates();
        let mu = chain.stationary();
        let p = chain.transition();
        let assignment = g.assignment();
        let mut table = Matrix::zeros(n, k);
        for (x, &mu_x) in mu.iter().enumerate() {
            let row = table.row_mut(x);
            for (xp, &v) in p.row(x).iter().enumerate() {
                row[assignment[xp]] += mu_x * v;
            }
        }
        let row_marginal = mu.to_vec();
        let col_marginal = table.col_sums();
        JointPmf {
            table,
            row_marginal,
            col_marginal,
        }
    }

    /// Joint of consecutive aggregates, `p(g(x1), g(x2))`.
    pub fn one_step_aggregated(chain: &MarkovChain, g: &AggregationMap) -> Self {
        let k = g.num_aggregates();
        let mu = chain.stationary();
        let p = chain.transition();
        let assignment = g.assignment();
        let mut table = Matrix::zeros(k, k);
        for (x, &mu_x) in mu.iter().enumerate() {
            let y = assignment[x];
            for (xp, &v) in p.row(x).iter().enumerate() {
                table[(y, assignment[xp])] += mu_x * v;
            }
        }
        let row_marginal = table.row_sums();
        let col_marginal = table.col_sums();
        JointPmf {
            table,
            row_marginal,
            col_marginal,
        }
    }

    pub fn table(&self) -> &Matrix {
        &self.table
    }

    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }
}

/// Mutual information of a joint table, in bits: the entropy of the
/// column marginal minus the row-conditional entropy of the columns.
pub fn mutual_information(joint: &JointPmf) -> f64 {
    let h_col = entropy_unchecked(&joint.col_marginal);
    let mut h_cond = 0.0;
    let mut cond = vec![0.0; joint.table.cols()];
    for (i, &pr) in joint.row_marginal.iter().enumerate() {
        if pr <= 0.0 {
            continue;
        }
        for (c, &v) in cond.iter_mut().zip(joint.table.row(i)) {
            *c = v / pr;
        }
        h_cond += pr * entropy_unchecked(&cond);
    }
    (h_col - h_cond).max(0.0)
}

/// Kullback-Leibler divergence rate between two Markov chains on the
/// same state set, in bits per step: the expected per-step divergence of
/// the rows of `primary` from the rows of `other`, weighted by the
/// stationary distribution of `primary`.
///
/// Where `primary` has support but `other` does not, the rate is `+inf`.
pub fn kl_divergence_rate(primary: &MarkovChain, other: &Matrix) -> Result<f64> {
    let n = primary.n_states();
    if !other.is_square() || other.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: other.rows(),
        });
    }
    let mu = primary.stationary();
    let p_prime = primary.transition();
    let mut rate = 0.0;
    for z in 0..n {
        for zp in 0..n {
            let a = p_prime[(z, zp)];
            if a <= 0.0 {
                continue;
            }
            let b = other[(z, zp)];
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            rate += mu[z] * a * log2(a / b);
        }
    }
    Ok(rate.max(0.0))
}

/// Per-state divergence decomposition of the lumpability cost:
/// `sum_x mu_x D(r[x] || q[g(x)])`, in bits.
pub fn lumpability_divergence_sum(chain: &MarkovChain, g: &AggregationMap) -> Result<f64> {
    let agg = aggregate_chain(chain, g)?;
    let mu = chain.stationary();
    let assignment = g.assignment();
    let mut total = 0.0;
    for (x, &y) in assignment.iter().enumerate() {
        let r_row = agg.r.row(x);
        let q_row = agg.q.row(y);
        let mut d = 0.0;
        for (&rv, &qv) in r_row.iter().zip(q_row) {
            if rv > 0.0 {
                if qv <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                d += rv * log2(rv / qv);
            }
        }
        total += mu[x] * d;
    }
    Ok(total.max(0.0))
}

/// Lumpability cost in bits: the conditional entropy of the next
/// aggregate given the current aggregate minus the conditional entropy
/// given the full current state. Zero exactly when the observed
/// aggregate process is Markov.
pub fn cost_lumpability(chain: &MarkovChain, g: &AggregationMap) -> Result<f64> {
    let agg = aggregate_chain(chain, g)?;
    Ok(cost_lumpability_from_parts(chain, &agg))
}

fn cost_lumpability_from_parts(chain: &MarkovChain, agg: &crate::chain::AggregatedChain) -> f64 {
    let mu = chain.stationary();
    let mut h_next_given_aggregate = 0.0;
    for (y, &nu_y) in agg.nu.iter().enumerate() {
        if nu_y > 0.0 {
            h_next_given_aggregate += nu_y * entropy_unchecked(agg.q.row(y));
        }
    }
    let mut h_next_given_state = 0.0;
    for (x, &mu_x) in mu.iter().enumerate() {
        h_next_given_state += mu_x * entropy_unchecked(agg.r.row(x));
    }
    (h_next_given_aggregate - h_next_given_state).max(0.0)
}

/// Predictability cost in bits: the one-step mutual information of the
/// original chain minus that of the observed aggregate process. Always
/// at least the lumpability cost.
pub fn cost_predictability(chain: &MarkovChain, g: &AggregationMap) -> Result<f64> {
    g.require_surjective()?;
    if g.len() != chain.n_states() {
        return Err(Error::LengthMismatch {
            left: chain.n_states(),
            right: g.len(),
        });
    }
    let i_xx = mutual_information(&JointPmf::one_step(chain));
    let i_yy = mutual_information(&JointPmf::one_step_aggregated(chain, g));
    Ok((i_xx - i_yy).max(0.0))
}

/// Full cost report at a given `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// Trade-off parameter in `[0, 1]`.
    pub beta: f64,
    /// Lumpability cost, bits.
    pub c_l: f64,
    /// Predictability cost, bits.
    pub c_p: f64,
    /// Blended cost `(1 - 2 beta) c_l + beta c_p`, bits.
    pub c_beta: f64,
    /// One-step mutual information of the original chain, bits.
    pub i_x1x2: f64,
    /// Mutual information between the current state and the next
    /// aggregate, bits.
    pub i_x1gy2: f64,
    /// One-step mutual information of the aggregate process, bits.
    pub i_gy1gy2: f64,
    /// Bisimulation radius derived from the lumpability cost.
    pub epsilon_bisim: f64,
}

/// Evaluates the blended aggregation cost and all of its components.
///
/// The returned `c_beta` is assembled from `c_l` and `c_p`; the three
/// mutual-information fields allow the equivalent expansion
/// `beta i_x1x2 + (1 - 2 beta) i_x1gy2 - (1 - beta) i_gy1gy2`,
/// which agrees with `c_beta` to within accumulated rounding.
pub fn cost_beta(chain: &MarkovChain, g: &AggregationMap, beta: f64) -> Result<CostReport> {
    if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
        return Err(Error::BetaOutOfRange { beta });
    }
    if g.len() != chain.n_states() {
        return Err(Error::LengthMismatch {
            left: chain.n_states(),
            right: g.len(),
        });
    }
    let agg = aggregate_chain(chain, g)?;

    let c_l = cost_lumpability_from_parts(chain, &agg);
    let i_x1x2 = mutual_information(&JointPmf::one_step(chain));
    let i_x1gy2 = mutual_information(&JointPmf::one_step_col_aggregated(chain, g));
    let i_gy1gy2 = mutual_information(&JointPmf::one_step_aggregated(chain, g));
    let c_p = (i_x1x2 - i_gy1gy2).max(0.0);
    let c_beta = (1.0 - 2.0 * beta) * c_l + beta * c_p;

    let epsilon_bisim = epsilon_from_cost(c_l, chain.min_stationary());

    Ok(CostReport {
        beta,
        c_l,
        c_p,
        c_beta,
        i_x1x2,
        i_x1gy2,
        i_gy1gy2,
        epsilon_bisim,
    })
}

#[inline]
fn epsilon_from_cost(c_l_bits: f64, min_mu: f64) -> f64 {
    // The underlying concentration argument is stated in nats, hence the
    // explicit ln(2) conversion of the bit-valued cost.
    libm::sqrt(LN_2 * c_l_bits / (2.0 * min_mu))
}

/// Bisimulation radius for a chain and mapping: every aggregate target
/// set captures transition mass from each state up to this slack.
pub fn bisimulation_epsilon(chain: &MarkovChain, g: &AggregationMap) -> Result<f64> {
    let c_l = cost_lumpability(chain, g)?;
    Ok(epsilon_from_cost(c_l, chain.min_stationary()))
}
