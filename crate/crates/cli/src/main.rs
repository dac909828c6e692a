//! Command-line front end for information-theoretic Markov chain
//! aggregation: synthetic generators, aggregation runs, cost reports,
//! evaluation, and experiment sweeps with reproducible seeds.

mod formats;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use markov_agg_core::{
    annealed_aggregation, best_of_restarts_annealed, best_of_restarts_fixed, bigram_chain,
    bisimulation_check, bisimulation_check_sampled, cost_beta, partition_comparison,
    sequential_aggregation, similarity_chain, AggregationOutcome, AnnealSchedule, BlockChainSpec,
    Error as CoreError, SimilaritySpec, EXHAUSTIVE_SUBSET_CAP,
};
use serde::Serialize;

use formats::{
    load_chain, load_partition, load_points_csv, print_json, write_json, ChainFile, CostReportJson,
    PartitionFile, ResultFile,
};

/// Errors carry the exit code: 1 for malformed input, 2 for numeric
/// failures (reducible chains, degenerate geometry, and the like).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Numeric(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NonStochastic { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::BetaOutOfRange { .. }
            | CoreError::KTooLarge { .. }
            | CoreError::NonSurjectiveInit
            | CoreError::InvalidSpec(_)
            | CoreError::NotAPermutation
            | CoreError::LengthMismatch { .. } => CliError::Input(e.to_string()),
            CoreError::Reducible
            | CoreError::NoUniqueSolution
            | CoreError::EmptyAggregate { .. }
            | CoreError::DegeneratePoints
            | CoreError::NotIrreducible
            | CoreError::TooManyAggregates { .. }
            | CoreError::InvalidPmf(_) => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "markov-agg",
    version,
    about = "Information-theoretic Markov chain aggregation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic chains.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Build a random-walk chain from a point cloud.
    Cluster(ClusterArgs),
    /// Build a character bigram chain from a text file.
    Bigram(BigramArgs),
    /// Optimize an aggregation for a chain.
    Aggregate(AggregateArgs),
    /// Evaluate the aggregation costs of a given partition.
    Cost(CostArgs),
    /// Compare partitions or verify the bisimulation inequality.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Run a parameter-grid experiment and write a CSV table.
    Sweep(sweep::SweepArgs),
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Block-stochastic chain with a planted partition.
    Block(GenerateBlockArgs),
}

#[derive(Args)]
struct GenerateBlockArgs {
    /// Comma-separated block sizes, e.g. 25,25,50.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Diagonal-dominance weight of the mixing matrix, in [0, 1].
    #[arg(long)]
    alpha: f64,
    /// Noise mixing weight, in [0, 1].
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chain output path (JSON).
    #[arg(short, long)]
    output: PathBuf,
    /// Optional output path for the planted partition (JSON).
    #[arg(long)]
    planted: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// CSV of points: one point per line, comma-separated coordinates.
    #[arg(long)]
    points: PathBuf,
    /// Neighbor count for the similarity scale.
    #[arg(short, long)]
    k: usize,
    /// Chain output path (JSON); stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FoldMode {
    /// Fold common accented Latin letters onto their ASCII base.
    Ascii,
    /// Keep characters as they are.
    None,
}

#[derive(Args)]
struct BigramArgs {
    /// Input text file.
    #[arg(long)]
    text: PathBuf,
    /// Replace runs of line breaks with a single space.
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    strip_linebreaks: bool,
    /// Drop underscores (emphasis markup in plain-text books).
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    strip_underscores: bool,
    /// Accent folding applied before counting.
    #[arg(long, value_enum, default_value_t = FoldMode::Ascii)]
    fold: FoldMode,
    /// Chain output path (JSON); stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Optional output path for the alphabet (JSON array of symbols).
    #[arg(long)]
    alphabet: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Chain input path (JSON).
    #[arg(short, long)]
    input: PathBuf,
    /// Number of aggregate states.
    #[arg(short = 'K', long = "aggregates")]
    k: usize,
    /// Trade-off parameter in [0, 1] (the target value when annealing).
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Anneal from beta = 1 down to --beta-target instead of a single
    /// fixed-beta run.
    #[arg(long)]
    anneal: bool,
    /// Annealing target (defaults to --beta when omitted).
    #[arg(long)]
    beta_target: Option<f64>,
    /// Annealing step.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Keep one result record per annealing grid point; the output file
    /// then holds an array of records.
    #[arg(long)]
    trajectory: bool,
    /// Independent restarts; the run with the smallest final cost wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Sweep budget per optimization run.
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Result output path (JSON); stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Chain input path (JSON).
    #[arg(short, long)]
    input: PathBuf,
    /// Partition input path (JSON).
    #[arg(long)]
    partition: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvaluateCommand {
    /// Adjusted Rand index between two partition files.
    Ari(EvaluateAriArgs),
    /// Subset transition-mass check of a chain against a partition.
    Bisim(EvaluateBisimArgs),
}

#[derive(Args)]
struct EvaluateAriArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateBisimArgs {
    #[arg(long)]
    chain: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Monte-Carlo subset samples per state when the aggregate count
    /// exceeds the exhaustive cap.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(GenerateCommand::Block(args)) => cmd_generate_block(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Bigram(args) => cmd_bigram(args),
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Cost(args) => cmd_cost(args),
        Command::Evaluate(EvaluateCommand::Ari(args)) => cmd_evaluate_ari(args),
        Command::Evaluate(EvaluateCommand::Bisim(args)) => cmd_evaluate_bisim(args),
        Command::Sweep(args) => sweep::run(args),
    }
}

fn cmd_generate_block(args: GenerateBlockArgs) -> Result<(), CliError> {
    let spec = BlockChainSpec::new(args.sizes, args.alpha, args.eps, args.seed);
    let (chain, planted) = spec.generate_chain()?;
    write_json(&args.output, &ChainFile::from_chain(&chain))?;
    if let Some(path) = args.planted {
        write_json(&path, &PartitionFile::from_map(&planted))?;
    }
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), CliError> {
    let points = load_points_csv(&args.points)?;
    let chain = similarity_chain(&SimilaritySpec {
        points,
        k_nearest: args.k,
    })?;
    let file = ChainFile::from_chain(&chain);
    match args.output {
        Some(path) => write_json(&path, &file),
        None => print_json(&file),
    }
}

/// Fold table for the accented Latin letters common in plain-text
/// books.
fn fold_ascii(c: char) -> char {
    match c {
        'á' | 'à' | 'â' | 'ä' | 'ã' | 'å' => 'a',
        'Á' | 'À' | 'Â' | 'Ä' | 'Ã' | 'Å' => 'A',
        'é' | 'è' | 'ê' | 'ë' => 'e',
        'É' | 'È' | 'Ê' | 'Ë' => 'E',
        'í' | 'ì' | 'î' | 'ï' => 'i',
        'Í' | 'Ì' | 'Î' | 'Ï' => 'I',
        'ó' | 'ò' | 'ô' | 'ö' | 'õ' => 'o',
        'Ó' | 'Ò' | 'Ô' | 'Ö' | 'Õ' => 'O',
        'ú' | 'ù' | 'û' | 'ü' => 'u',
        'Ú' | 'Ù' | 'Û' | 'Ü' => 'U',
        'ç' => 'c',
        'Ç' => 'C',
        'ñ' => 'n',
        'Ñ' => 'N',
        other => other,
    }
}

fn cmd_bigram(args: BigramArgs) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(&args.text)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.text.display())))?;

    let mut text = String::with_capacity(raw.len());
    let mut pending_break = false;
    for c in raw.chars() {
        let c = if args.fold == FoldMode::Ascii {
            fold_ascii(c)
        } else {
            c
        };
        if args.strip_linebreaks && (c == '\n' || c == '\r') {
            pending_break = true;
            continue;
        }
        if pending_break {
            text.push(' ');
            pending_break = false;
        }
        if args.strip_underscores && c == '_' {
            continue;
        }
        text.push(c);
    }

    let (chain, alphabet) = bigram_chain(&text)?;
    if let Some(path) = args.alphabet {
        let symbols: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
        write_json(&path, &symbols)?;
    }
    let file = ChainFile::from_chain(&chain);
    match args.output {
        Some(path) => write_json(&path, &file),
        None => print_json(&file),
    }
}

fn result_record(outcome: &AggregationOutcome, seed: u64) -> ResultFile {
    ResultFile {
        assignment: outcome.map.assignment().to_vec(),
        num_aggregates: outcome.map.num_aggregates(),
        beta: outcome.report.beta,
        cost_report: CostReportJson::from(&outcome.report),
        seed,
        sweeps: outcome.sweeps,
    }
}

fn cmd_aggregate(args: AggregateArgs) -> Result<(), CliError> {
    let chain = load_chain(&args.input)?;
    if args.restarts == 0 {
        return Err(CliError::input("--restarts must be at least 1"));
    }

    enum Payload {
        One(ResultFile),
        Many(Vec<ResultFile>),
    }

    let payload = if args.anneal {
        let schedule = AnnealSchedule {
            beta_target: args.beta_target.unwrap_or(args.beta),
            delta: args.delta,
            max_sweeps: args.max_sweeps,
            keep_trajectory: args.trajectory,
        };
        let (outcome, seed) = if args.restarts == 1 {
            (
                annealed_aggregation(&chain, &schedule, args.k, args.seed, None)?,
                args.seed,
            )
        } else {
            let restarts =
                best_of_restarts_annealed(&chain, &schedule, args.k, args.restarts, args.seed)?;
            let seed = args.seed.wrapping_add(restarts.best_restart as u64);
            (restarts.best, seed)
        };
        if args.trajectory {
            let records = outcome
                .trajectory
                .as_ref()
                .expect("trajectory was requested")
                .iter()
                .map(|step| result_record(&step.outcome, seed))
                .collect();
            Payload::Many(records)
        } else {
            Payload::One(result_record(&outcome.final_outcome, seed))
        }
    } else {
        if args.trajectory {
            return Err(CliError::input("--trajectory requires --anneal"));
        }
        let (outcome, seed) = if args.restarts == 1 {
            (
                sequential_aggregation(
                    &chain,
                    args.beta,
                    args.k,
                    args.max_sweeps,
                    None,
                    args.seed,
                )?,
                args.seed,
            )
        } else {
            let restarts = best_of_restarts_fixed(
                &chain,
                args.beta,
                args.k,
                args.max_sweeps,
                args.restarts,
                args.seed,
            )?;
            let seed = args.seed.wrapping_add(restarts.best_restart as u64);
            (restarts.best, seed)
        };
        Payload::One(result_record(&outcome, seed))
    };

    match (&args.output, payload) {
        (Some(path), Payload::One(record)) => write_json(path, &record),
        (Some(path), Payload::Many(records)) => write_json(path, &records),
        (None, Payload::One(record)) => print_json(&record),
        (None, Payload::Many(records)) => print_json(&records),
    }
}

fn cmd_cost(args: CostArgs) -> Result<(), CliError> {
    let chain = load_chain(&args.input)?;
    let partition = load_partition(&args.partition)?;
    let report = cost_beta(&chain, &partition, args.beta)?;
    let json = CostReportJson::from(&report);
    match args.output {
        Some(path) => write_json(&path, &json),
        None => print_json(&json),
    }
}

fn cmd_evaluate_ari(args: EvaluateAriArgs) -> Result<(), CliError> {
    let a = load_partition(&args.a)?;
    let b = load_partition(&args.b)?;
    let cmp = partition_comparison(a.assignment(), b.assignment())?;

    #[derive(Serialize)]
    struct AriJson {
        ari: f64,
        contingency: Vec<Vec<u64>>,
    }
    let json = AriJson {
        ari: cmp.ari,
        contingency: cmp.contingency,
    };
    match args.output {
        Some(path) => write_json(&path, &json),
        None => print_json(&json),
    }
}

fn cmd_evaluate_bisim(args: EvaluateBisimArgs) -> Result<(), CliError> {
    let chain = load_chain(&args.chain)?;
    let partition = load_partition(&args.partition)?;
    let report = if partition.num_aggregates() <= EXHAUSTIVE_SUBSET_CAP {
        bisimulation_check(&chain, &partition)?
    } else {
        bisimulation_check_sampled(&chain, &partition, args.samples, args.seed)?
    };

    #[derive(Serialize)]
    struct BisimJson {
        epsilon: f64,
        max_violation: f64,
        holds: bool,
        subsets_checked: u64,
        exhaustive: bool,
    }
    let json = BisimJson {
        epsilon: report.epsilon,
        max_violation: report.max_violation,
        holds: report.holds,
        subsets_checked: report.subsets_checked,
        exhaustive: report.exhaustive,
    };
    match args.output {
        Some(path) => write_json(&path, &json),
        None => print_json(&json),
    }
}
