//! JSON file schemas and loading helpers.
//!
//! Chain files: `{"states": [labels...], "transition": [[row]...]}`.
//! Partition files: `{"assignment": [ints...], "num_aggregates": K}`
//! (`num_aggregates` may be omitted and defaults to `max + 1`, so
//! result files double as partition inputs).

use std::fs;
use std::path::Path;

use markov_agg_core::{AggregationMap, CostReport, MarkovChain, Matrix};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct ChainFile {
    pub states: Vec<String>,
    pub transition: Vec<Vec<f64>>,
}

impl ChainFile {
    pub fn from_chain(chain: &MarkovChain) -> Self {
        let n = chain.n_states();
        ChainFile {
            states: chain.states().to_vec(),
            transition: (0..n).map(|i| chain.transition().row(i).to_vec()).collect(),
        }
    }

    pub fn into_chain(self) -> Result<MarkovChain, CliError> {
        let matrix = Matrix::from_rows(&self.transition)
            .ok_or_else(|| CliError::input("transition rows have unequal lengths"))?;
        Ok(MarkovChain::with_states(self.states, matrix)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionFile {
    pub assignment: Vec<usize>,
    #[serde(default)]
    pub num_aggregates: Option<usize>,
}

impl PartitionFile {
    pub fn from_map(map: &AggregationMap) -> Self {
        PartitionFile {
            assignment: map.assignment().to_vec(),
            num_aggregates: Some(map.num_aggregates()),
        }
    }

    pub fn into_map(self) -> Result<AggregationMap, CliError> {
        let k = match self.num_aggregates {
            Some(k) => k,
            None => self
                .assignment
                .iter()
                .max()
                .map(|m| m + 1)
                .ok_or_else(|| CliError::input("empty assignment"))?,
        };
        Ok(AggregationMap::new(self.assignment, k)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CostReportJson {
    pub beta: f64,
    pub c_l: f64,
    pub c_p: f64,
    pub c_beta: f64,
    pub i_x1x2: f64,
    pub i_x1gy2: f64,
    pub i_gy1gy2: f64,
    pub epsilon_bisim: f64,
}

impl From<&CostReport> for CostReportJson {
    fn from(r: &CostReport) -> Self {
        CostReportJson {
            beta: r.beta,
            c_l: r.c_l,
            c_p: r.c_p,
            c_beta: r.c_beta,
            i_x1x2: r.i_x1x2,
            i_x1gy2: r.i_x1gy2,
            i_gy1gy2: r.i_gy1gy2,
            epsilon_bisim: r.epsilon_bisim,
        }
    }
}

/// One optimization result; trajectory files hold an array of these.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub assignment: Vec<usize>,
    pub num_aggregates: usize,
    pub beta: f64,
    pub cost_report: CostReportJson,
    pub seed: u64,
    pub sweeps: usize,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::input(format!("cannot parse {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut rendered = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize: {e}")))?;
    rendered.push('\n');
    fs::write(path, rendered)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let rendered = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize: {e}")))?;
    println!("{rendered}");
    Ok(())
}

pub fn load_chain(path: &Path) -> Result<MarkovChain, CliError> {
    read_json::<ChainFile>(path)?.into_chain()
}

pub fn load_partition(path: &Path) -> Result<AggregationMap, CliError> {
    read_json::<PartitionFile>(path)?.into_map()
}

/// One point per line, comma-separated coordinates.
pub fn load_points_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let coords: Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let coords = coords.map_err(|e| {
            CliError::input(format!(
                "{}:{}: bad coordinate: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        points.push(coords);
    }
    Ok(points)
}
