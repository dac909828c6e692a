//! Greedy optimization of the blended aggregation cost.
//!
//! [`sequential_aggregation`] sweeps the states in ascending order; each
//! state is tentatively reassigned to every aggregate and moved to the
//! best strictly improving target, with ties kept in place. A sweep
//! touches every (state, aggregate) pair, and each candidate move is
//! scored in `O(n)` by updating only the two affected rows/columns of
//! the cached joint tables, so one sweep costs `O(K * n^2)`.
//!
//! [`annealed_aggregation`] chains such runs along a decreasing `beta`
//! grid, warm-starting each stage with the previous assignment. Small
//! `beta` landscapes are riddled with poor local minima; walking down
//! from `beta = 1` avoids most of them.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{AggregationMap, MarkovChain};
use crate::info::{cost_beta, CostReport, JointPmf};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

/// Cached joints are rebuilt from scratch after this many accepted moves
/// to bound floating-point drift.
const REFRESH_INTERVAL: usize = 1000;

#[inline]
fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// Contribution of one joint cell to a mutual-information sum.
/// Nonpositive cells contribute nothing (`0 log 0 = 0`; tiny negative
/// values only arise from rounding in incremental updates).
#[inline]
fn mi_term(v: f64, row_marginal: f64, col_marginal: f64) -> f64 {
    if v > 0.0 && row_marginal > 0.0 && col_marginal > 0.0 {
        v * log2(v / (row_marginal * col_marginal))
    } else {
        0.0
    }
}

fn mi_of_table(table: &Matrix, row_marginal: &[f64], col_marginal: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &rm) in row_marginal.iter().enumerate() {
        for (j, &v) in table.row(i).iter().enumerate() {
            total += mi_term(v, rm, col_marginal[j]);
        }
    }
    total
}

/// Incremental cost-evaluation state for one chain, one assignment, and
/// one `beta`.
///
/// Holds the joint table of (current state, next aggregate), the joint
/// table of consecutive aggregates, and their cached mutual
/// informations. Candidate moves are scored without mutating; accepted
/// moves update the tables in place.
#[derive(Debug, Clone)]
pub struct SweepState<'a> {
    chain: &'a MarkovChain,
    beta: f64,
    assignment: Vec<usize>,
    k: usize,
    sizes: Vec<usize>,
    /// `n x K` joint of (current state, next aggregate).
    joint_state_agg: Matrix,
    /// `K x K` joint of consecutive aggregates.
    joint_agg_agg: Matrix,
    /// Aggregate marginal; column marginal of `joint_state_agg` and both
    /// marginals of `joint_agg_agg`.
    nu: Vec<f64>,
    mi_state_agg: f64,
    mi_agg_agg: f64,
    /// One-step mutual information of the original chain (constant).
    mi_state_state: f64,
    /// `incoming[x][x1] = mu[x1] * P[x1][x]`; transposed layout so the
    /// hot loop walks contiguous memory.
    incoming: Matrix,
    accepted_since_refresh: usize,
}

impl<'a> SweepState<'a> {
    pub fn new(chain: &'a MarkovChain, g: &AggregationMap, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::BetaOutOfRange { beta });
        }
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

        let mut incoming = Matrix::zeros(n, n);
        for (x1, &m) in mu.iter().enumerate() {
            for (x, &v) in p.row(x1).iter().enumerate() {
                incoming[(x, x1)] = m * v;
            }
        }

        let mi_state_state = crate::info::mutual_information(&JointPmf::one_step(chain));

        let mut state = SweepState {
            chain,
            beta,
            assignment: g.assignment().to_vec(),
            k,
            sizes: g.sizes(),
            joint_state_agg: Matrix::zeros(n, k),
            joint_agg_agg: Matrix::zeros(k, k),
            nu: vec![0.0; k],
            mi_state_agg: 0.0,
            mi_agg_agg: 0.0,
            mi_state_state,
            incoming,
            accepted_since_refresh: 0,
        };
        state.rebuild();
        Ok(state)
    }

    /// Recomputes the joint tables and cached mutual informations from
    /// the chain and the current assignment.
    pub fn rebuild(&mut self) {
        let n = self.chain.n_states();
        let mu = self.chain.stationary();
        let p = self.chain.transition();

        self.joint_state_agg = Matrix::zeros(n, self.k);
        self.joint_agg_agg = Matrix::zeros(self.k, self.k);
        for v in self.nu.iter_mut() {
            *v = 0.0;
        }
        for (x, &mu_x) in mu.iter().enumerate() {
            let y = self.assignment[x];
            self.nu[y] += mu_x;
            for (xp, &v) in p.row(x).iter().enumerate() {
                let mass = mu_x * v;
                let yp = self.assignment[xp];
                self.joint_state_agg[(x, yp)] += mass;
                self.joint_agg_agg[(y, yp)] += mass;
            }
        }
        self.mi_state_agg = mi_of_table(&self.joint_state_agg, mu, &self.nu);
        self.mi_agg_agg = mi_of_table(&self.joint_agg_agg, &self.nu, &self.nu);
        self.accepted_since_refresh = 0;
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Changes `beta` without touching the cached tables (they do not
    /// depend on it).
    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::BetaOutOfRange { beta });
        }
        self.beta = beta;
        Ok(())
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_aggregates(&self) -> usize {
        self.k
    }

    pub fn aggregation_map(&self) -> AggregationMap {
        AggregationMap::new(self.assignment.clone(), self.k).expect("assignment is valid")
    }

    /// Cached mutual informations `(I(X1; g(X2)), I(g(X1); g(X2)))`.
    pub fn cached_mutual_informations(&self) -> (f64, f64) {
        (self.mi_state_agg, self.mi_agg_agg)
    }

    /// Current blended cost from the cached quantities.
    pub fn cost(&self) -> f64 {
        let b = self.beta;
        b * self.mi_state_state + (1.0 - 2.0 * b) * self.mi_state_agg - (1.0 - b) * self.mi_agg_agg
    }

    /// Largest absolute deviation of the cached joint tables and
    /// marginals from a from-scratch reconstruction.
    pub fn table_drift(&self) -> f64 {
        let mut fresh = self.clone();
        fresh.rebuild();
        let mut drift = self
            .joint_state_agg
            .max_abs_diff(&fresh.joint_state_agg)
            .unwrap();
        drift = drift.max(
            self.joint_agg_agg
                .max_abs_diff(&fresh.joint_agg_agg)
                .unwrap(),
        );
        for (a, b) in self.nu.iter().zip(&fresh.nu) {
            drift = drift.max((a - b).abs());
        }
        drift
            .max((self.mi_state_agg - fresh.mi_state_agg).abs())
            .max((self.mi_agg_agg - fresh.mi_agg_agg).abs())
    }

    /// Outgoing/incoming aggregate mass of state `x`, excluding its
    /// self-transition, plus the self-transition mass itself.
    fn fill_move_scratch(&self, x: usize, out_w: &mut [f64], in_w: &mut [f64]) -> f64 {
        let mu = self.chain.stationary();
        let p_row = self.chain.transition().row(x);
        let w_col = self.incoming.row(x);
        let mu_x = mu[x];

        for v in out_w.iter_mut() {
            *v = 0.0;
        }
        for v in in_w.iter_mut() {
            *v = 0.0;
        }
        for (xp, &v) in p_row.iter().enumerate() {
            if xp != x {
                out_w[self.assignment[xp]] += mu_x * v;
            }
        }
        for (x1, &w) in w_col.iter().enumerate() {
            if x1 != x {
                in_w[self.assignment[x1]] += w;
            }
        }
        mu_x * p_row[x]
    }

    /// Change in `I(X1; g(X2))` if `x` moves from its current aggregate
    /// `from` to `to`. Only the two affected columns contribute.
    fn delta_mi_state_agg(&self, x: usize, from: usize, to: usize) -> f64 {
        let mu = self.chain.stationary();
        let w_col = self.incoming.row(x);
        let mu_x = mu[x];
        let nu_from_new = self.nu[from] - mu_x;
        let nu_to_new = self.nu[to] + mu_x;
        let nu_from_old = self.nu[from];
        let nu_to_old = self.nu[to];

        let mut delta = 0.0;
        for (x1, &w) in w_col.iter().enumerate() {
            let rm = mu[x1];
            let a_from = self.joint_state_agg[(x1, from)];
            let a_to = self.joint_state_agg[(x1, to)];
            delta += mi_term(a_from - w, rm, nu_from_new) + mi_term(a_to + w, rm, nu_to_new)
                - mi_term(a_from, rm, nu_from_old)
                - mi_term(a_to, rm, nu_to_old);
        }
        delta
    }

    /// Value of the aggregate-aggregate joint at `(y1, y2)` after moving
    /// `x` from `from` to `to`.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn moved_joint_agg(
        &self,
        from: usize,
        to: usize,
        out_w: &[f64],
        in_w: &[f64],
        self_w: f64,
        y1: usize,
        y2: usize,
    ) -> f64 {
        let mut v = self.joint_agg_agg[(y1, y2)];
        if y1 == from {
            v -= out_w[y2];
        }
        if y1 == to {
            v += out_w[y2];
        }
        if y2 == from {
            v -= in_w[y1];
        }
        if y2 == to {
            v += in_w[y1];
        }
        if y1 == from && y2 == from {
            v -= self_w;
        }
        if y1 == to && y2 == to {
            v += self_w;
        }
        v
    }

    /// Change in `I(g(X1); g(X2))` when state `x` (of stationary mass
    /// `mu_x`) moves. Only cells in the two affected rows and columns
    /// contribute.
    fn delta_mi_agg_agg(
        &self,
        from: usize,
        to: usize,
        out_w: &[f64],
        in_w: &[f64],
        self_w: f64,
        mu_x: f64,
    ) -> f64 {
        let nu_new = |y: usize| -> f64 {
            if y == from {
                self.nu[y] - mu_x
            } else if y == to {
                self.nu[y] + mu_x
            } else {
                self.nu[y]
            }
        };
        let nu_old = |y: usize| -> f64 { self.nu[y] };

        let mut delta = 0.0;
        for y1 in 0..self.k {
            let touches_row = y1 == from || y1 == to;
            for y2 in 0..self.k {
                if !touches_row && y2 != from && y2 != to {
                    continue;
                }
                let old = self.joint_agg_agg[(y1, y2)];
                let new = self.moved_joint_agg(from, to, out_w, in_w, self_w, y1, y2);
                delta +=
                    mi_term(new, nu_new(y1), nu_new(y2)) - mi_term(old, nu_old(y1), nu_old(y2));
            }
        }
        delta
    }

    #[inline]
    fn combine(&self, delta_state_agg: f64, delta_agg_agg: f64) -> f64 {
        (1.0 - 2.0 * self.beta) * delta_state_agg - (1.0 - self.beta) * delta_agg_agg
    }

    /// Cost change of reassigning state `x` to aggregate `to`.
    ///
    /// Returns 0 when `to` is the current aggregate and `+inf` when the
    /// move would empty the current aggregate (surjectivity guard).
    pub fn move_delta(&self, x: usize, to: usize) -> f64 {
        let from = self.assignment[x];
        if to == from {
            return 0.0;
        }
        if self.sizes[from] == 1 {
            return f64::INFINITY;
        }
        let mut out_w = vec![0.0; self.k];
        let mut in_w = vec![0.0; self.k];
        let self_w = self.fill_move_scratch(x, &mut out_w, &mut in_w);
        let mu_x = self.chain.stationary()[x];
        let d1 = self.delta_mi_state_agg(x, from, to);
        let d2 = self.delta_mi_agg_agg(from, to, &out_w, &in_w, self_w, mu_x);
        self.combine(d1, d2)
    }

    /// Applies a reassignment, updating tables and cached mutual
    /// informations incrementally. Errs when the move would empty the
    /// source aggregate.
    pub fn apply_move(&mut self, x: usize, to: usize) -> Result<()> {
        let from = self.assignment[x];
        if to >= self.k {
            return Err(Error::InvalidSpec("aggregate index out of range"));
        }
        if to == from {
            return Ok(());
        }
        if self.sizes[from] == 1 {
            return Err(Error::EmptyAggregate { aggregate: from });
        }
        let mut out_w = vec![0.0; self.k];
        let mut in_w = vec![0.0; self.k];
        let self_w = self.fill_move_scratch(x, &mut out_w, &mut in_w);
        let mu_x = self.chain.stationary()[x];
        let d1 = self.delta_mi_state_agg(x, from, to);
        let d2 = self.delta_mi_agg_agg(from, to, &out_w, &in_w, self_w, mu_x);
        self.commit(x, from, to, &out_w, &in_w, self_w, d1, d2);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn commit(
        &mut self,
        x: usize,
        from: usize,
        to: usize,
        out_w: &[f64],
        in_w: &[f64],
        self_w: f64,
        delta_state_agg: f64,
        delta_agg_agg: f64,
    ) {
        let mu_x = self.chain.stationary()[x];
        let n = self.chain.n_states();

        for x1 in 0..n {
            let w = self.incoming[(x, x1)];
            self.joint_state_agg[(x1, from)] -= w;
            self.joint_state_agg[(x1, to)] += w;
        }
        for (y2, &w) in out_w.iter().enumerate() {
            self.joint_agg_agg[(from, y2)] -= w;
            self.joint_agg_agg[(to, y2)] += w;
        }
        for (y1, &w) in in_w.iter().enumerate() {
            self.joint_agg_agg[(y1, from)] -= w;
            self.joint_agg_agg[(y1, to)] += w;
        }
        self.joint_agg_agg[(from, from)] -= self_w;
        self.joint_agg_agg[(to, to)] += self_w;

        self.nu[from] -= mu_x;
        self.nu[to] += mu_x;
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
        self.assignment[x] = to;
        self.mi_state_agg += delta_state_agg;
        self.mi_agg_agg += delta_agg_agg;

        self.accepted_since_refresh += 1;
        if self.accepted_since_refresh >= REFRESH_INTERVAL {
            self.rebuild();
        }
    }

    /// One full pass over the states in ascending order. Each state
    /// moves to the aggregate with the strictly smallest cost change;
    /// ties keep the current assignment. Returns the number of accepted
    /// moves.
    pub fn sweep(&mut self) -> usize {
        let n = self.chain.n_states();
        let mut out_w = vec![0.0; self.k];
        let mut in_w = vec![0.0; self.k];
        let mut accepted = 0;

        for x in 0..n {
            let from = self.assignment[x];
            if self.sizes[from] == 1 {
                continue;
            }
            let self_w = self.fill_move_scratch(x, &mut out_w, &mut in_w);
            let mu_x = self.chain.stationary()[x];
            let mut best_to = from;
            let mut best_delta = 0.0;
            for to in 0..self.k {
                if to == from {
                    continue;
                }
                let d1 = self.delta_mi_state_agg(x, from, to);
                let d2 = self.delta_mi_agg_agg(from, to, &out_w, &in_w, self_w, mu_x);
                let delta = self.combine(d1, d2);
                if delta < best_delta {
                    best_delta = delta;
                    best_to = to;
                }
            }
            if best_to != from {
                let d1 = self.delta_mi_state_agg(x, from, best_to);
                let d2 = self.delta_mi_agg_agg(from, best_to, &out_w, &in_w, self_w, mu_x);
                self.commit(x, from, best_to, &out_w, &in_w, self_w, d1, d2);
                accepted += 1;
            }
        }
        accepted
    }
}

/// Result of one optimization run.
#[derive(Debug, Clone)]
pub struct AggregationOutcome {
    pub map: AggregationMap,
    pub report: CostReport,
    /// Number of sweeps executed (including the final all-rejected one).
    pub sweeps: usize,
}

/// Draws a uniformly random assignment, resampling until it is
/// surjective. For `k` close to `n` uniform resampling almost never
/// succeeds, so after a bounded number of attempts the assignment is
/// built from a random permutation instead.
fn random_surjective(n: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    const MAX_ATTEMPTS: usize = 10_000;
    let mut assignment = vec![0usize; n];
    let mut seen = vec![false; k];
    for _ in 0..MAX_ATTEMPTS {
        for v in seen.iter_mut() {
            *v = false;
        }
        let mut distinct = 0;
        for slot in assignment.iter_mut() {
            let y = rng.below(k);
            *slot = y;
            if !seen[y] {
                seen[y] = true;
                distinct += 1;
            }
        }
        if distinct == k {
            return assignment;
        }
    }
    let perm = rng.permutation(n);
    for (y, &x) in perm.iter().take(k).enumerate() {
        assignment[x] = y;
    }
    for &x in perm.iter().skip(k) {
        assignment[x] = rng.below(k);
    }
    assignment
}

/// Greedy sweep optimization of the blended cost at a fixed `beta`.
///
/// Starts from `g_init` when given (it must map onto exactly `k`
/// aggregates surjectively), otherwise from a uniformly random
/// surjective assignment drawn from `seed`. Runs until a sweep accepts
/// no move or `max_sweeps` is reached.
pub fn sequential_aggregation(
    chain: &MarkovChain,
    beta: f64,
    k: usize,
    max_sweeps: usize,
    g_init: Option<&AggregationMap>,
    seed: u64,
) -> Result<AggregationOutcome> {
    let n = chain.n_states();
    if k == 0 {
        return Err(Error::InvalidSpec("need at least one aggregate"));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
        return Err(Error::BetaOutOfRange { beta });
    }

    let g = match g_init {
        Some(g) => {
            if g.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: g.len(),
                });
            }
            if g.num_aggregates() != k {
                return Err(Error::InvalidSpec("initial map has wrong aggregate count"));
            }
            if !g.is_surjective() {
                return Err(Error::NonSurjectiveInit);
            }
            g.clone()
        }
        None => {
            let mut rng = Rng::new(seed);
            AggregationMap::new(random_surjective(n, k, &mut rng), k)?
        }
    };

    let mut state = SweepState::new(chain, &g, beta)?;
    let mut sweeps = 0;
    for _ in 0..max_sweeps {
        let accepted = state.sweep();
        sweeps += 1;
        if accepted == 0 {
            break;
        }
    }

    let map = state.aggregation_map();
    let report = cost_beta(chain, &map, beta)?;
    Ok(AggregationOutcome {
        map,
        report,
        sweeps,
    })
}

/// Annealing schedule: run at `beta = 1`, then repeatedly lower `beta`
/// by `delta` (clamped at `beta_target`), warm-starting each stage.
#[derive(Debug, Clone)]
pub struct AnnealSchedule {
    pub beta_target: f64,
    pub delta: f64,
    /// Sweep budget per stage.
    pub max_sweeps: usize,
    pub keep_trajectory: bool,
}

impl AnnealSchedule {
    pub fn new(beta_target: f64, delta: f64, max_sweeps: usize) -> Self {
        AnnealSchedule {
            beta_target,
            delta,
            max_sweeps,
            keep_trajectory: false,
        }
    }

    pub fn with_trajectory(mut self) -> Self {
        self.keep_trajectory = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta_target) || !self.beta_target.is_finite() {
            return Err(Error::BetaOutOfRange {
                beta: self.beta_target,
            });
        }
        if self.delta <= 0.0 || !self.delta.is_finite() {
            return Err(Error::InvalidSpec("annealing step must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidSpec("need a positive sweep budget"));
        }
        Ok(())
    }
}

/// `1 - offset` snapped to the nearest multiple of 1e-12.
fn grid_point(offset: f64) -> f64 {
    libm::round((1.0 - offset) * 1e12) / 1e12
}

/// One annealing stage: the `beta` it ran at and its outcome.
#[derive(Debug, Clone)]
pub struct AnnealStep {
    pub beta: f64,
    pub outcome: AggregationOutcome,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub final_outcome: AggregationOutcome,
    /// One record per grid point, in execution order (`beta`
    /// decreasing), when the schedule keeps the trajectory.
    pub trajectory: Option<Vec<AnnealStep>>,
}

/// Warm-started optimization along the grid
/// `{1, 1 - delta, 1 - 2 delta, ..., beta_target}`.
///
/// The first stage runs at `beta = 1` from `g_init` or a random
/// surjective assignment; every later stage starts from the previous
/// stage's result. The trajectory, when kept, carries the aggregations
/// for every grid value, so one annealing run covers a whole `beta`
/// range.
pub fn annealed_aggregation(
    chain: &MarkovChain,
    schedule: &AnnealSchedule,
    k: usize,
    seed: u64,
    g_init: Option<&AggregationMap>,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    let mut trajectory = schedule.keep_trajectory.then(Vec::new);

    let mut beta = 1.0;
    let mut outcome = sequential_aggregation(chain, beta, k, schedule.max_sweeps, g_init, seed)?;
    if let Some(t) = trajectory.as_mut() {
        t.push(AnnealStep {
            beta,
            outcome: outcome.clone(),
        });
    }
    let mut step = 0u32;
    while beta > schedule.beta_target {
        // Grid points are quantized to 1e-12 so that decimal steps give
        // exact decimal stages; repeated subtraction would accumulate
        // ulps and could leave a stray stage just above the target.
        step += 1;
        beta = grid_point(f64::from(step) * schedule.delta);
        if beta <= schedule.beta_target + 1e-12 {
            beta = schedule.beta_target;
        }
        outcome = sequential_aggregation(
            chain,
            beta,
            k,
            schedule.max_sweeps,
            Some(&outcome.map),
            seed,
        )?;
        if let Some(t) = trajectory.as_mut() {
            t.push(AnnealStep {
                beta,
                outcome: outcome.clone(),
            });
        }
    }
    Ok(AnnealOutcome {
        final_outcome: outcome,
        trajectory,
    })
}

/// Best run among independent restarts.
#[derive(Debug, Clone)]
pub struct RestartsFixedOutcome {
    pub best: AggregationOutcome,
    /// Index of the winning restart (lowest index on cost ties).
    pub best_restart: usize,
    /// Final cost of every restart, in restart order.
    pub costs: Vec<f64>,
}

/// Runs `sequential_aggregation` for seeds `base_seed, base_seed + 1,
/// ...` and keeps the run with the smallest final cost. Deterministic:
/// ties go to the lowest restart index.
pub fn best_of_restarts_fixed(
    chain: &MarkovChain,
    beta: f64,
    k: usize,
    max_sweeps: usize,
    n_restarts: usize,
    base_seed: u64,
) -> Result<RestartsFixedOutcome> {
    if n_restarts == 0 {
        return Err(Error::InvalidSpec("need at least one restart"));
    }
    let mut best: Option<(usize, AggregationOutcome)> = None;
    let mut costs = Vec::with_capacity(n_restarts);
    for i in 0..n_restarts {
        let outcome = sequential_aggregation(
            chain,
            beta,
            k,
            max_sweeps,
            None,
            base_seed.wrapping_add(i as u64),
        )?;
        let cost = outcome.report.c_beta;
        costs.push(cost);
        if best.as_ref().is_none_or(|(_, b)| cost < b.report.c_beta) {
            best = Some((i, outcome));
        }
    }
    let (best_restart, best) = best.expect("at least one restart ran");
    Ok(RestartsFixedOutcome {
        best,
        best_restart,
        costs,
    })
}

/// Best annealing run among independent restarts, compared by the final
/// cost at `beta_target`.
#[derive(Debug, Clone)]
pub struct RestartsAnnealedOutcome {
    pub best: AnnealOutcome,
    pub best_restart: usize,
    pub costs: Vec<f64>,
}

pub fn best_of_restarts_annealed(
    chain: &MarkovChain,
    schedule: &AnnealSchedule,
    k: usize,
    n_restarts: usize,
    base_seed: u64,
) -> Result<RestartsAnnealedOutcome> {
    if n_restarts == 0 {
        return Err(Error::InvalidSpec("need at least one restart"));
    }
    let mut best: Option<(usize, AnnealOutcome)> = None;
    let mut costs = Vec::with_capacity(n_restarts);
    for i in 0..n_restarts {
        let outcome =
            annealed_aggregation(chain, schedule, k, base_seed.wrapping_add(i as u64), None)?;
        let cost = outcome.final_outcome.report.c_beta;
        costs.push(cost);
        if best
            .as_ref()
            .is_none_or(|(_, b)| cost < b.final_outcome.report.c_beta)
        {
            best = Some((i, outcome));
        }
    }
    let (best_restart, best) = best.expect("at least one restart ran");
    Ok(RestartsAnnealedOutcome {
        best,
        best_restart,
        costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_chain(n: usize, seed: u64) -> MarkovChain {
        let mut rng = Rng::new(seed);
        let mut t = Matrix::zeros(n, n);
        for i in 0..n {
            rng.simplex_row(t.row_mut(i));
        }
        MarkovChain::from_transition(t).unwrap()
    }

    fn random_surjective_map(n: usize, k: usize, seed: u64) -> AggregationMap {
        let mut rng = Rng::new(seed);
        AggregationMap::new(random_surjective(n, k, &mut rng), k).unwrap()
    }

    #[test]
    fn move_delta_zero_for_no_move() {
        let chain = random_chain(6, 1);
        let g = random_surjective_map(6, 3, 2);
        let state = SweepState::new(&chain, &g, 0.4).unwrap();
        for x in 0..6 {
            assert_eq!(state.move_delta(x, state.assignment()[x]), 0.0);
        }
    }

    #[test]
    fn move_delta_matches_from_scratch_recomputation() {
        let chain = random_chain(6, 3);
        let g = random_surjective_map(6, 3, 4);
        for &beta in &[0.0, 0.3, 0.5, 0.8, 1.0] {
            let state = SweepState::new(&chain, &g, beta).unwrap();
            let base = cost_beta(&chain, &g, beta).unwrap().c_beta;
            for x in 0..6 {
                for to in 0..3 {
                    let delta = state.move_delta(x, to);
                    if !delta.is_finite() {
                        continue;
                    }
                    let mut moved = g.assignment().to_vec();
                    moved[x] = to;
                    let moved = AggregationMap::new(moved, 3).unwrap();
                    let target = cost_beta(&chain, &moved, beta).unwrap().c_beta;
                    assert!(
                        (delta - (target - base)).abs() < 1e-11,
                        "x={x} to={to} beta={beta}: {delta} vs {}",
                        target - base
                    );
                }
            }
        }
    }

    #[test]
    fn emptying_move_is_rejected() {
        let chain = random_chain(4, 5);
        let g = AggregationMap::new(vec![0, 1, 1, 1], 2).unwrap();
        let mut state = SweepState::new(&chain, &g, 0.5).unwrap();
        assert_eq!(state.move_delta(0, 1), f64::INFINITY);
        assert_eq!(
            state.apply_move(0, 1).unwrap_err(),
            Error::EmptyAggregate { aggregate: 0 }
        );
    }

    #[test]
    fn incremental_state_stays_consistent_under_random_moves() {
        let chain = random_chain(12, 7);
        let g = random_surjective_map(12, 4, 8);
        let mut state = SweepState::new(&chain, &g, 0.6).unwrap();
        let mut rng = Rng::new(99);
        for _ in 0..500 {
            let x = rng.below(12);
            let to = rng.below(4);
            if state.move_delta(x, to).is_finite() {
                state.apply_move(x, to).unwrap();
            }
        }
        assert!(state.table_drift() < 1e-10);
    }

    #[test]
    fn at_beta_one_deltas_track_bottleneck_objective() {
        // At beta = 1 the blended cost is I(X1;X2) - I(X1;g(X2)), so a
        // move's delta must equal the negated change of I(X1;g(X2)).
        let chain = random_chain(8, 11);
        let g = random_surjective_map(8, 3, 12);
        let state = SweepState::new(&chain, &g, 1.0).unwrap();
        for x in 0..8 {
            for to in 0..3 {
                let delta = state.move_delta(x, to);
                if !delta.is_finite() || to == state.assignment()[x] {
                    continue;
                }
                let mut a = g.assignment().to_vec();
                a[x] = to;
                let moved = AggregationMap::new(a, 3).unwrap();
                let before =
                    crate::info::mutual_information(&JointPmf::one_step_col_aggregated(&chain, &g));
                let after = crate::info::mutual_information(&JointPmf::one_step_col_aggregated(
                    &chain, &moved,
                ));
                assert!((delta + (after - before)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn sweep_cost_is_monotone_and_terminates() {
        let chain = random_chain(20, 21);
        let g = random_surjective_map(20, 4, 22);
        let mut state = SweepState::new(&chain, &g, 0.3).unwrap();
        let mut last = state.cost();
        for _ in 0..50 {
            let accepted = state.sweep();
            let now = state.cost();
            assert!(now <= last + 1e-12, "cost increased: {last} -> {now}");
            last = now;
            if accepted == 0 {
                break;
            }
        }
        let final_sweep = state.sweep();
        assert_eq!(final_sweep, 0, "converged state must stay fixed");
    }

    #[test]
    fn lumpable_chain_true_partition_is_fixed_point() {
        // Two-block lumpable chain: within-block rows share the same
        // aggregate transition mass.
        let p = matrix(&[
            &[0.35, 0.35, 0.10, 0.20],
            &[0.20, 0.50, 0.25, 0.05],
            &[0.10, 0.10, 0.45, 0.35],
            &[0.15, 0.05, 0.50, 0.30],
        ]);
        let chain = MarkovChain::from_transition(p).unwrap();
        let truth = AggregationMap::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(crate::info::cost_lumpability(&chain, &truth).unwrap() < 1e-12);

        let out = sequential_aggregation(&chain, 0.0, 2, 50, Some(&truth), 0).unwrap();
        assert_eq!(out.map.assignment(), truth.assignment());
        assert!(out.report.c_beta < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let chain = random_chain(15, 31);
        let a = sequential_aggregation(&chain, 0.5, 3, 50, None, 123).unwrap();
        let b = sequential_aggregation(&chain, 0.5, 3, 50, None, 123).unwrap();
        assert_eq!(a.map.assignment(), b.map.assignment());
        assert_eq!(a.report.c_beta.to_bits(), b.report.c_beta.to_bits());
        assert_eq!(a.sweeps, b.sweeps);
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let chain = random_chain(5, 41);
        assert!(matches!(
            sequential_aggregation(&chain, 0.5, 6, 10, None, 0),
            Err(Error::KTooLarge { k: 6, n: 5 })
        ));
        let bad_init = AggregationMap::new(vec![0, 0, 0, 0, 0], 2).unwrap();
        assert!(matches!(
            sequential_aggregation(&chain, 0.5, 2, 10, Some(&bad_init), 0),
            Err(Error::NonSurjectiveInit)
        ));
        assert!(matches!(
            sequential_aggregation(&chain, 1.5, 2, 10, None, 0),
            Err(Error::BetaOutOfRange { .. })
        ));
    }

    #[test]
    fn anneal_grid_coarse_step_gives_two_stages() {
        let chain = random_chain(10, 51);
        let schedule = AnnealSchedule::new(0.2, 1.0, 50).with_trajectory();
        let out = annealed_aggregation(&chain, &schedule, 3, 7, None).unwrap();
        let traj = out.trajectory.unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj[0].beta, 1.0);
        assert_eq!(traj[1].beta, 0.2);
    }

    #[test]
    fn anneal_covers_full_grid() {
        let chain = random_chain(10, 52);
        let schedule = AnnealSchedule::new(0.0, 0.25, 50).with_trajectory();
        let out = annealed_aggregation(&chain, &schedule, 3, 7, None).unwrap();
        let betas: Vec<f64> = out.trajectory.unwrap().iter().map(|s| s.beta).collect();
        assert_eq!(betas, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn restart_wrapper_is_deterministic_and_minimal() {
        let chain = random_chain(14, 61);
        let a = best_of_restarts_fixed(&chain, 1.0, 3, 50, 8, 1000).unwrap();
        let b = best_of_restarts_fixed(&chain, 1.0, 3, 50, 8, 1000).unwrap();
        assert_eq!(a.best.map.assignment(), b.best.map.assignment());
        assert_eq!(a.best_restart, b.best_restart);
        let min = a.costs.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(a.costs[a.best_restart], min);

        let single = best_of_restarts_fixed(&chain, 1.0, 3, 50, 1, 77).unwrap();
        let direct = sequential_aggregation(&chain, 1.0, 3, 50, None, 77).unwrap();
        assert_eq!(single.best.map.assignment(), direct.map.assignment());
    }
}
