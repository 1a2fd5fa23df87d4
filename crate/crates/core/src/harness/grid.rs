//! Grid execution: runs every scenario `runs` times on a worker pool and
//! streams results to CSV in (scenario, run) order.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::allocation::SwapEvent;
use crate::error::{Error, Result};
use crate::harness::config::{GridConfig, Interval, TraceMode};
use crate::harness::sim::{run_seed, run_simulation, RunTrace};
use crate::landscape::PatternId;
use crate::metrics::{FactorRecord, FactorValue};
use crate::organization::Strategy;

pub const RUNS_HEADER: &[&str] = &[
    "scenario",
    "strategy",
    "a",
    "tau",
    "pattern",
    "run",
    "seed",
    "periods",
    "global_max",
    "final_performance",
    "mean_performance",
    "swaps",
    "ledger",
];
pub const TRACE_HEADER: &[&str] = &[
    "scenario",
    "strategy",
    "a",
    "tau",
    "pattern",
    "run",
    "period",
    "performance",
    "decisions",
    "portfolios",
];
pub const SWAPS_HEADER: &[&str] = &[
    "scenario",
    "run",
    "period",
    "round",
    "decision",
    "from",
    "to",
    "price",
    "threshold",
];
pub const MODULARITY_HEADER: &[&str] = &["scenario", "run", "period", "agent", "k_int", "k_all", "value"];

/// Identifies the scenario a run belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioKey {
    pub index: usize,
    pub strategy: Strategy,
    pub a: f64,
    pub tau: Interval,
    pub pattern: PatternId,
}

impl ScenarioKey {
    /// `benchmark` for fixed allocations, otherwise the strategy name.
    pub fn allocation_label(&self) -> &'static str {
        match self.tau {
            Interval::Never => "benchmark",
            Interval::Every(_) => self.strategy.name(),
        }
    }
}

/// The per-run observables kept in memory and in `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: ScenarioKey,
    pub run: usize,
    pub seed: u64,
    pub periods: usize,
    pub global_max: Option<f64>,
    pub final_performance: f64,
    pub mean_performance: f64,
    pub swaps: Vec<SwapEvent>,
    pub modularity: Vec<f64>,
    pub ledger: Vec<f64>,
}

impl RunSummary {
    pub fn from_trace(scenario: ScenarioKey, periods: usize, trace: &RunTrace) -> Self {
        RunSummary {
            scenario,
            run: trace.run,
            seed: trace.seed,
            periods,
            global_max: trace.global_max,
            final_performance: trace.final_performance(),
            mean_performance: trace.performance.iter().sum::<f64>() / trace.performance.len() as f64,
            swaps: trace.swaps.clone(),
            modularity: trace.modularity.iter().map(|r| r.value).collect(),
            ledger: trace.ledger.clone(),
        }
    }

    /// Number of swaps in each round `1..=rounds`.
    pub fn swaps_per_round(&self) -> Vec<usize> {
        let Interval::Every(tau) = self.scenario.tau else {
            return Vec::new();
        };
        let mut counts = vec![0; self.periods / tau];
        for e in &self.swaps {
            counts[e.period / tau - 1] += 1;
        }
        counts
    }
}

impl FactorRecord for RunSummary {
    fn factor_names(&self) -> &'static [&'static str] {
        &["strategy", "a", "tau", "pattern"]
    }

    fn factor(&self, name: &str) -> Option<FactorValue> {
        let s = &self.scenario;
        match name {
            "strategy" => Some(FactorValue::Text(s.strategy.name().into())),
            "a" => Some(FactorValue::Number(s.a)),
            "tau" => Some(FactorValue::Number(s.tau.as_f64())),
            "pattern" => Some(FactorValue::Text(s.pattern.name().into())),
            _ => None,
        }
    }

    fn outcome(&self) -> f64 {
        self.final_performance
    }
}

/// All run summaries of a grid, in (scenario, run) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub runs: Vec<RunSummary>,
}

impl Dataset {
    pub fn select<'a>(&'a self, filter: impl Fn(&ScenarioKey) -> bool + 'a) -> impl Iterator<Item = &'a RunSummary> + 'a {
        self.runs.iter().filter(move |r| filter(&r.scenario))
    }
}

struct CsvSink {
    runs: csv::Writer<BufWriter<File>>,
    trace: Option<csv::Writer<BufWriter<File>>>,
    swaps: csv::Writer<BufWriter<File>>,
    modularity: csv::Writer<BufWriter<File>>,
}

pub(crate) fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    Ok(w)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl CsvSink {
    fn create(dir: &Path, trace: TraceMode) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(CsvSink {
            runs: csv_writer(&dir.join("runs.csv"), RUNS_HEADER)?,
            trace: match trace {
                TraceMode::Full => Some(csv_writer(&dir.join("trace.csv"), TRACE_HEADER)?),
                TraceMode::None => None,
            },
            swaps: csv_writer(&dir.join("swaps.csv"), SWAPS_HEADER)?,
            modularity: csv_writer(&dir.join("modularity.csv"), MODULARITY_HEADER)?,
        })
    }

    fn write(&mut self, key: &ScenarioKey, summary: &RunSummary, trace: &RunTrace) -> Result<()> {
        let scenario = key.index.to_string();
        let run = trace.run.to_string();
        let (a, tau) = (key.a.to_string(), key.tau.to_string());
        self.runs.write_record([
            scenario.as_str(),
            key.strategy.name(),
            &a,
            &tau,
            key.pattern.name(),
            &run,
            &trace.seed.to_string(),
            &summary.periods.to_string(),
            &trace.global_max.map_or(String::new(), |v| v.to_string()),
            &summary.final_performance.to_string(),
            &summary.mean_performance.to_string(),
            &trace.swaps.len().to_string(),
            &join(&trace.ledger, ";"),
        ])?;
        if let Some(w) = self.trace.as_mut() {
            for (idx, perf) in trace.performance.iter().enumerate() {
                let portfolios = join(
                    trace.portfolios[idx].iter().map(|p| join(p.iter().map(|i| i + 1), " ")),
                    "|",
                );
                w.write_record([
                    scenario.as_str(),
                    key.strategy.name(),
                    &a,
                    &tau,
                    key.pattern.name(),
                    &run,
                    &(idx + 1).to_string(),
                    &perf.to_string(),
                    &trace.decisions[idx].to_string(),
                    &portfolios,
                ])?;
            }
        }
        for e in &trace.swaps {
            let round = key.tau.period_count().map_or(0, |tau| e.period / tau);
            self.swaps.write_record([
                scenario.clone(),
                run.clone(),
                e.period.to_string(),
                round.to_string(),
                (e.decision + 1).to_string(),
                (e.from + 1).to_string(),
                (e.to + 1).to_string(),
                e.price.to_string(),
                e.threshold.to_string(),
            ])?;
        }
        for r in &trace.modularity {
            self.modularity.write_record([
                scenario.clone(),
                run.clone(),
                r.period.to_string(),
                (r.agent + 1).to_string(),
                r.k_int.to_string(),
                r.k_all.to_string(),
                r.value.to_string(),
            ])?;
        }
        Ok(())
    }

    fn finish(mut self, dir: &Path) -> Result<()> {
        let flush = |w: &mut csv::Writer<BufWriter<File>>, name: &str| {
            w.flush().map_err(|e| Error::io(dir.join(name), e))
        };
        flush(&mut self.runs, "runs.csv")?;
        if let Some(w) = self.trace.as_mut() {
            flush(w, "trace.csv")?;
        }
        flush(&mut self.swaps, "swaps.csv")?;
        flush(&mut self.modularity, "modularity.csv")
    }
}

/// Options for [`run_grid`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    /// Directory for `runs.csv`, `trace.csv`, `swaps.csv`, `modularity.csv`.
    pub out_dir: Option<PathBuf>,
}

const CHUNK: usize = 512;

/// Runs the full factorial grid. Rows reach disk ordered by (scenario, run)
/// regardless of the worker count.
pub fn run_grid(grid: &GridConfig, options: &RunOptions) -> Result<Dataset> {
    grid.validate()?;
    let scenarios = grid.scenarios();
    let jobs: Vec<(usize, usize)> = scenarios
        .iter()
        .flat_map(|s| (0..s.config.runs).map(move |run| (s.index, run)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = options.workers {
        builder = builder.num_threads(workers.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut sink = match &options.out_dir {
        Some(dir) => Some(CsvSink::create(dir, grid.trace)?),
        None => None,
    };
    let mut dataset = Dataset::default();
    for chunk in jobs.chunks(CHUNK) {
        let traces: Vec<Result<RunTrace>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(index, run)| {
                    let config = &scenarios[index].config;
                    run_simulation(config, run, run_seed(config, run, grid.common_random_numbers))
                })
                .collect()
        });
        for (&(index, _), trace) in chunk.iter().zip(traces) {
            let trace = trace?;
            let config = &scenarios[index].config;
            let key = ScenarioKey {
                index,
                strategy: config.strategy,
                a: config.a,
                tau: config.tau,
                pattern: config.pattern,
            };
            let summary = RunSummary::from_trace(key, config.periods, &trace);
            if let Some(sink) = sink.as_mut() {
                sink.write(&key, &summary, &trace)?;
            }
            dataset.runs.push(summary);
        }
    }
    if let (Some(sink), Some(dir)) = (sink, &options.out_dir) {
        sink.finish(dir)?;
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> GridConfig {
        GridConfig::parse(
            "a = 0.5, 1.0\ntau = 5, inf\npattern = small_diag, random_k4\nruns = 2\nperiods = 30\n",
            None,
        )
        .unwrap()
    }

    #[test]
    fn smoke_grid_writes_one_row_per_period() {
        let dir = tempfile::tempdir().unwrap();
        let grid = smoke();
        let ds = run_grid(&grid, &RunOptions { workers: Some(2), out_dir: Some(dir.path().into()) }).unwrap();
        assert_eq!(ds.runs.len(), 16 * 2);
        let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 1 + 16 * 2 * 30);
        assert_eq!(trace.lines().next().unwrap(), TRACE_HEADER.join(","));
        let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs.lines().count(), 1 + 32);
    }

    #[test]
    fn run_count_does_not_change_existing_runs() {
        let mut grid = smoke();
        let two = run_grid(&grid, &RunOptions::default()).unwrap();
        grid.base.runs = 3;
        let three = run_grid(&grid, &RunOptions::default()).unwrap();
        for r in &two.runs {
            let same = three
                .runs
                .iter()
                .find(|x| x.scenario.index == r.scenario.index && x.run == r.run)
                .unwrap();
            assert_eq!(same, r);
        }
    }

    #[test]
    fn swaps_per_round_counts() {
        let grid = smoke();
        let ds = run_grid(&grid, &RunOptions::default()).unwrap();
        for r in &ds.runs {
            let per_round = r.swaps_per_round();
            assert_eq!(per_round.iter().sum::<usize>(), r.swaps.len());
            match r.scenario.tau {
                Interval::Never => assert!(per_round.is_empty()),
                Interval::Every(tau) => assert_eq!(per_round.len(), 30 / tau),
            }
        }
    }
}
