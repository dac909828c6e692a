//! Parameter-grid experiments over the block-stochastic generator.
//!
//! One repetition draws a fresh chain, optimizes it (annealed by
//! default, fixed-beta runs with `--no-anneal`), and contributes one
//! CSV row per requested `beta`. Repetitions run on worker threads;
//! every seed is derived from the single `--seed` flag, and rows are
//! sorted before writing, so the file content is independent of
//! scheduling.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::Args;
use markov_agg_core::{
    adjusted_rand_index, sequential_aggregation, AggregationMap, AggregationOutcome,
    BlockChainSpec, MarkovChain,
};

use crate::CliError;

#[derive(Args)]
pub struct SweepArgs {
    /// Diagonal-dominance values of the mixing matrix.
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    /// Noise levels.
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    /// Trade-off values to record; with annealing they must lie on the
    /// annealing grid walked down from 1.
    #[arg(long, value_delimiter = ',', required = true)]
    betas: Vec<f64>,
    /// Number of aggregate states (the generator's block count).
    #[arg(short = 'K', long = "aggregates")]
    k: usize,
    /// Block sizes of the generated chains.
    #[arg(long, value_delimiter = ',', default_value = "25,25,50")]
    sizes: Vec<usize>,
    /// Repetitions per (alpha, eps) grid point.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Independent optimizer restarts per repetition.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    /// Run each beta independently from a random start instead of
    /// annealing down from 1.
    #[arg(long)]
    no_anneal: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to MARKOV_AGG_THREADS, then to the
    /// available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// CSV output path.
    #[arg(short, long)]
    output: PathBuf,
}

struct Row {
    alpha: f64,
    eps: f64,
    beta: Option<f64>,
    run: usize,
    cost: Option<f64>,
    ari: Option<f64>,
    sweeps: Option<usize>,
    wall_ms: Option<f64>,
    error: Option<String>,
}

impl Row {
    fn render(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|v| v.to_string()).unwrap_or_default()
        }
        // Only the error field can contain commas or quotes.
        let error = match &self.error {
            None => String::new(),
            Some(e) => format!("\"{}\"", e.replace('"', "\"\"")),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.alpha,
            self.eps,
            opt(&self.beta),
            self.run,
            opt(&self.cost),
            opt(&self.ari),
            opt(&self.sweeps),
            opt(&self.wall_ms.map(|v| format!("{v:.3}"))),
            error
        )
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a stream-independent seed from the base seed and task
/// coordinates.
fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix(base);
    for &p in parts {
        h = splitmix(h ^ p);
    }
    h
}

struct StageOutcome {
    beta: f64,
    outcome: AggregationOutcome,
    wall_ms: f64,
}

/// Warm-started descent over the annealing grid, with per-stage wall
/// time. `delta` and the final target come from the requested betas.
fn annealed_stages(
    chain: &MarkovChain,
    k: usize,
    max_sweeps: usize,
    delta: f64,
    target: f64,
    seed: u64,
) -> Result<Vec<StageOutcome>, CliError> {
    let mut stages = Vec::new();
    let mut beta = 1.0;
    let t0 = Instant::now();
    let mut outcome = sequential_aggregation(chain, beta, k, max_sweeps, None, seed)?;
    stages.push(StageOutcome {
        beta,
        outcome: outcome.clone(),
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    });
    let mut step = 0u32;
    while beta > target {
        step += 1;
        // Same grid quantization as the core annealing loop.
        beta = ((1.0 - f64::from(step) * delta) * 1e12).round() / 1e12;
        if beta <= target + 1e-12 {
            beta = target;
        }
        let t0 = Instant::now();
        outcome = sequential_aggregation(chain, beta, k, max_sweeps, Some(&outcome.map), seed)?;
        stages.push(StageOutcome {
            beta,
            outcome: outcome.clone(),
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(stages)
}

#[allow(clippy::too_many_arguments)]
fn run_one_rep(
    args: &SweepArgs,
    alpha: f64,
    eps: f64,
    rep: usize,
    matrix_seed: u64,
    algo_seed: u64,
    delta: f64,
    target: f64,
) -> Result<Vec<Row>, CliError> {
    let spec = BlockChainSpec::new(args.sizes.clone(), alpha, eps, matrix_seed);
    let (chain, planted) = spec.generate_chain()?;

    let requested = |beta: f64| args.betas.iter().any(|b| (b - beta).abs() < 1e-9);
    let score = |map: &AggregationMap| -> Result<f64, CliError> {
        Ok(adjusted_rand_index(map.assignment(), planted.assignment())?)
    };

    let mut rows = Vec::new();
    if args.no_anneal {
        for &beta in &args.betas {
            let t0 = Instant::now();
            let mut best: Option<AggregationOutcome> = None;
            for r in 0..args.restarts {
                let outcome = sequential_aggregation(
                    &chain,
                    beta,
                    args.k,
                    args.max_sweeps,
                    None,
                    algo_seed.wrapping_add(r as u64),
                )?;
                if best
                    .as_ref()
                    .is_none_or(|b| outcome.report.c_beta < b.report.c_beta)
                {
                    best = Some(outcome);
                }
            }
            let best = best.expect("at least one restart");
            rows.push(Row {
                alpha,
                eps,
                beta: Some(beta),
                run: rep,
                cost: Some(best.report.c_beta),
                ari: Some(score(&best.map)?),
                sweeps: Some(best.sweeps),
                wall_ms: Some(t0.elapsed().as_secs_f64() * 1e3),
                error: None,
            });
        }
    } else {
        let mut best: Option<Vec<StageOutcome>> = None;
        for r in 0..args.restarts {
            let stages = annealed_stages(
                &chain,
                args.k,
                args.max_sweeps,
                delta,
                target,
                algo_seed.wrapping_add(r as u64),
            )?;
            let final_cost = stages.last().expect("nonempty grid").outcome.report.c_beta;
            if best
                .as_ref()
                .is_none_or(|b| final_cost < b.last().unwrap().outcome.report.c_beta)
            {
                best = Some(stages);
            }
        }
        for stage in best.expect("at least one restart") {
            if !requested(stage.beta) {
                continue;
            }
            rows.push(Row {
                alpha,
                eps,
                beta: Some(stage.beta),
                run: rep,
                cost: Some(stage.outcome.report.c_beta),
                ari: Some(score(&stage.outcome.map)?),
                sweeps: Some(stage.outcome.sweeps),
                wall_ms: Some(stage.wall_ms),
                error: None,
            });
        }
    }
    Ok(rows)
}

fn thread_count(args: &SweepArgs) -> usize {
    if let Some(t) = args.threads {
        return t.max(1);
    }
    if let Ok(raw) = std::env::var("MARKOV_AGG_THREADS") {
        if let Ok(t) = raw.parse::<usize>() {
            return t.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::input("--reps must be at least 1"));
    }
    if args.restarts == 0 {
        return Err(CliError::input("--restarts must be at least 1"));
    }
    if args.betas.is_empty() {
        return Err(CliError::input("need at least one beta"));
    }
    for &b in &args.betas {
        if !(0.0..=1.0).contains(&b) {
            return Err(CliError::input(format!("beta {b} outside [0, 1]")));
        }
    }

    // Annealing walks down from 1 in steps of the smallest spacing of
    // the requested betas; each requested beta must land on that grid.
    let mut sorted = args.betas.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let target = *sorted.last().unwrap();
    let delta = sorted
        .windows(2)
        .map(|w| w[0] - w[1])
        .filter(|d| *d > 1e-9)
        .fold(f64::INFINITY, f64::min);
    let delta = if delta.is_finite() { delta } else { 0.1 };
    if !args.no_anneal {
        for &b in &sorted {
            let steps = ((1.0 - b) / delta).round();
            let on_grid = (1.0 - steps * delta - b).abs() < 1e-9 || (b - target).abs() < 1e-9;
            if !on_grid {
                return Err(CliError::input(format!(
                    "beta {b} does not lie on the annealing grid with step {delta}"
                )));
            }
        }
    }

    let tasks: Vec<(usize, usize, usize)> = (0..args.alphas.len())
        .flat_map(|ai| {
            (0..args.eps.len()).flat_map(move |ei| (0..args.reps).map(move |rep| (ai, ei, rep)))
        })
        .collect();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Vec<Row>)>> = Mutex::new(Vec::with_capacity(tasks.len()));
    let workers = thread_count(&args).min(tasks.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= tasks.len() {
                    break;
                }
                let (ai, ei, rep) = tasks[idx];
                let alpha = args.alphas[ai];
                let eps = args.eps[ei];
                let matrix_seed = derive_seed(args.seed, &[1, ai as u64, ei as u64, rep as u64]);
                let algo_seed = derive_seed(args.seed, &[2, ai as u64, ei as u64, rep as u64]);
                let rows = match run_one_rep(
                    &args,
                    alpha,
                    eps,
                    rep,
                    matrix_seed,
                    algo_seed,
                    delta,
                    target,
                ) {
                    Ok(rows) => rows,
                    Err(e) => vec![Row {
                        alpha,
                        eps,
                        beta: None,
                        run: rep,
                        cost: None,
                        ari: None,
                        sweeps: None,
                        wall_ms: None,
                        error: Some(e.to_string()),
                    }],
                };
                results.lock().unwrap().push((idx, rows));
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(idx, _)| *idx);

    let mut csv = String::from("alpha,eps,beta,run,cost,ari,sweeps,wall_ms,error\n");
    for (_, rows) in &results {
        for row in rows {
            csv.push_str(&row.render());
            csv.push('\n');
        }
    }
    fs::write(&args.output, csv)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", args.output.display())))?;
    Ok(())
}
