//! Reads a run directory back and writes the summary tables.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Deserialize;

use crate::allocation::SwapEvent;
use crate::error::{Error, Result};
use crate::harness::config::Interval;
use crate::harness::grid::{csv_writer, Dataset, RunSummary, ScenarioKey};
use crate::metrics::{ecdf, partial_dependence};

pub const PERFORMANCE_BY_A_HEADER: &[&str] = &["strategy", "pattern", "scope_var", "scope_value", "mean", "n"];
pub const SWAPS_BY_ROUND_HEADER: &[&str] = &["strategy", "tau", "round", "mean_swaps", "runs"];
pub const MODULARITY_ECDF_HEADER: &[&str] = &["strategy", "tau", "pattern", "value", "cum_prob"];

#[derive(Deserialize)]
struct RunRow {
    scenario: usize,
    strategy: String,
    a: f64,
    tau: String,
    pattern: String,
    run: usize,
    seed: u64,
    periods: usize,
    global_max: Option<f64>,
    final_performance: f64,
    mean_performance: f64,
    #[serde(rename = "swaps")]
    _swaps: usize,
    ledger: String,
}

#[derive(Deserialize)]
struct SwapRow {
    scenario: usize,
    run: usize,
    period: usize,
    #[serde(rename = "round")]
    _round: usize,
    decision: usize,
    from: usize,
    to: usize,
    price: f64,
    threshold: f64,
}

#[derive(Deserialize)]
struct ModularityRow {
    scenario: usize,
    run: usize,
    #[serde(rename = "period")]
    _period: usize,
    #[serde(rename = "agent")]
    _agent: usize,
    #[serde(rename = "k_int")]
    _k_int: usize,
    #[serde(rename = "k_all")]
    _k_all: usize,
    value: f64,
}

fn reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(BufReader::new(file)))
}

fn bad_row(path: &Path, what: &str) -> Error {
    Error::Config(format!("{}: {what}", path.display()))
}

/// Rebuilds a dataset from `runs.csv`, `swaps.csv` and `modularity.csv`.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let runs_path = dir.join("runs.csv");
    let mut index = BTreeMap::new();
    let mut runs = Vec::new();
    for row in reader(&runs_path)?.deserialize() {
        let row: RunRow = row?;
        let ledger = if row.ledger.is_empty() {
            Vec::new()
        } else {
            row.ledger
                .split(';')
                .map(|v| v.parse::<f64>().map_err(|_| bad_row(&runs_path, "malformed ledger")))
                .collect::<Result<_>>()?
        };
        let scenario = ScenarioKey {
            index: row.scenario,
            strategy: row.strategy.parse()?,
            a: row.a,
            tau: row.tau.parse()?,
            pattern: row.pattern.parse()?,
        };
        index.insert((row.scenario, row.run), runs.len());
        runs.push(RunSummary {
            scenario,
            run: row.run,
            seed: row.seed,
            periods: row.periods,
            global_max: row.global_max,
            final_performance: row.final_performance,
            mean_performance: row.mean_performance,
            swaps: Vec::new(),
            modularity: Vec::new(),
            ledger,
        });
    }

    let swaps_path = dir.join("swaps.csv");
    for row in reader(&swaps_path)?.deserialize() {
        let row: SwapRow = row?;
        let &slot = index
            .get(&(row.scenario, row.run))
            .ok_or_else(|| bad_row(&swaps_path, "swap for an unknown run"))?;
        runs[slot].swaps.push(SwapEvent {
            period: row.period,
            decision: row.decision - 1,
            from: row.from - 1,
            to: row.to - 1,
            price: row.price,
            threshold: row.threshold,
        });
    }

    let modularity_path = dir.join("modularity.csv");
    for row in reader(&modularity_path)?.deserialize() {
        let row: ModularityRow = row?;
        let &slot = index
            .get(&(row.scenario, row.run))
            .ok_or_else(|| bad_row(&modularity_path, "reading for an unknown run"))?;
        runs[slot].modularity.push(row.value);
    }
    Ok(Dataset { runs })
}

/// One row of `performance_by_a.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceRow {
    /// Strategy name, or `benchmark` for fixed allocations.
    pub strategy: String,
    pub pattern: String,
    pub a: f64,
    pub mean: f64,
    pub n: usize,
}

fn grouped<'a, K: Ord>(
    runs: impl Iterator<Item = &'a RunSummary>,
    key: impl Fn(&RunSummary) -> K,
) -> BTreeMap<K, Vec<RunSummary>> {
    let mut groups: BTreeMap<K, Vec<RunSummary>> = BTreeMap::new();
    for r in runs {
        groups.entry(key(r)).or_default().push(r.clone());
    }
    groups
}

/// Partial dependence of final-period performance on `a`, per allocation
/// mode and pattern. Fixed-allocation runs of both strategies are pooled
/// under `benchmark`.
pub fn performance_by_a(dataset: &Dataset) -> Result<Vec<PerformanceRow>> {
    let groups = grouped(dataset.runs.iter(), |r| {
        (r.scenario.allocation_label(), r.scenario.pattern.name())
    });
    let mut rows = Vec::new();
    for ((label, pattern), records) in groups {
        let table = partial_dependence(&records, &["a"])?;
        for row in table.rows {
            let a = match row.scope[0] {
                crate::metrics::FactorValue::Number(a) => a,
                crate::metrics::FactorValue::Text(_) => unreachable!("a is numeric"),
            };
            rows.push(PerformanceRow {
                strategy: label.to_string(),
                pattern: pattern.to_string(),
                a,
                mean: row.mean,
                n: row.n,
            });
        }
    }
    Ok(rows)
}

/// Mean swaps per round, per strategy and tau, pooled over everything else.
/// Returns `(strategy, tau, round, mean, runs)`.
pub fn swaps_by_round(dataset: &Dataset) -> Vec<(String, usize, usize, f64, usize)> {
    let finite = dataset.runs.iter().filter(|r| r.scenario.tau != Interval::Never);
    let groups = grouped(finite, |r| {
        (r.scenario.strategy.name(), r.scenario.tau.period_count().unwrap_or(0))
    });
    let mut rows = Vec::new();
    for ((strategy, tau), records) in groups {
        let per_run: Vec<Vec<usize>> = records.iter().map(RunSummary::swaps_per_round).collect();
        let rounds = per_run.iter().map(Vec::len).max().unwrap_or(0);
        for round in 0..rounds {
            let present: Vec<usize> = per_run.iter().filter_map(|c| c.get(round).copied()).collect();
            let mean = present.iter().sum::<usize>() as f64 / present.len() as f64;
            rows.push((strategy.to_string(), tau, round + 1, mean, present.len()));
        }
    }
    rows
}

/// Writes `performance_by_a.csv`, `swaps_by_round.csv` and
/// `modularity_ecdf.csv` into `dir`.
pub fn write_report(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join("performance_by_a.csv");
    let mut w = csv_writer(&path, PERFORMANCE_BY_A_HEADER)?;
    for row in performance_by_a(dataset)? {
        w.write_record([
            row.strategy,
            row.pattern,
            "a".to_string(),
            row.a.to_string(),
            row.mean.to_string(),
            row.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("swaps_by_round.csv");
    let mut w = csv_writer(&path, SWAPS_BY_ROUND_HEADER)?;
    for (strategy, tau, round, mean, runs) in swaps_by_round(dataset) {
        w.write_record([strategy, tau.to_string(), round.to_string(), mean.to_string(), runs.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("modularity_ecdf.csv");
    let mut w = csv_writer(&path, MODULARITY_ECDF_HEADER)?;
    let groups = grouped(dataset.runs.iter(), |r| {
        (r.scenario.allocation_label(), r.scenario.tau, r.scenario.pattern.name())
    });
    for ((label, tau, pattern), records) in groups {
        let values: Vec<f64> = records.iter().flat_map(|r| r.modularity.iter().copied()).collect();
        if values.is_empty() {
            continue;
        }
        for &(value, cum) in ecdf(&values)?.steps() {
            w.write_record([
                label.to_string(),
                tau.to_string(),
                pattern.to_string(),
                value.to_string(),
                cum.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}
