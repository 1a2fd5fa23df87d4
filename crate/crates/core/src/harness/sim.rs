//! The per-run simulation loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::allocation::{run_reallocation, SwapEvent};
use crate::dynamics::{assemble_solution, hill_climb_from, update_beliefs};
use crate::error::Result;
use crate::harness::config::ScenarioConfig;
use crate::landscape::{build_pattern, generate_landscape_with, DecisionVector, InfluenceMatrix, PatternId};
use crate::metrics::{modularity, normalized_performance, ModularityReading};
use crate::organization::{IncentiveScheme, OrgState};

/// Seed of run `run` in a scenario.
///
/// The first eight bytes (little endian) of SHA-256 over
/// `"orgsim-run-v1" | master_seed | strategy | a | tau | pattern | run`, with
/// numbers as little-endian u64 and names as UTF-8 followed by a zero byte.
/// The strategy name is left out when `common_random_numbers` is set. Because
/// the seed depends only on the scenario's content and the run index, it is
/// independent of grid composition, run count and execution order.
pub fn run_seed(config: &ScenarioConfig, run: usize, common_random_numbers: bool) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"orgsim-run-v1\0");
    hasher.update(config.master_seed.to_le_bytes());
    if !common_random_numbers {
        hasher.update(config.strategy.name().as_bytes());
    }
    hasher.update([0]);
    hasher.update(config.a.to_bits().to_le_bytes());
    hasher.update(config.tau.to_string().as_bytes());
    hasher.update([0]);
    hasher.update(config.pattern.name().as_bytes());
    hasher.update([0]);
    hasher.update((run as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Everything observed in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: usize,
    pub seed: u64,
    pub initial: DecisionVector,
    /// `None` when normalization is disabled.
    pub global_max: Option<f64>,
    /// Per-period performance for `t = 1..=T`, normalized when possible.
    pub performance: Vec<f64>,
    pub decisions: Vec<DecisionVector>,
    /// Per-period portfolios (ascending decision indices per agent).
    pub portfolios: Vec<Vec<Vec<usize>>>,
    pub swaps: Vec<SwapEvent>,
    pub modularity: Vec<ModularityReading>,
    pub ledger: Vec<f64>,
}

impl RunTrace {
    pub fn final_performance(&self) -> f64 {
        *self.performance.last().expect("runs have at least one period")
    }
}

fn influence_matrix(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<InfluenceMatrix> {
    match (config.pattern, &config.matrix) {
        (PatternId::Custom, Some(matrix)) => Ok((**matrix).clone()),
        (pattern, _) => build_pattern(pattern, rng),
    }
}

/// Runs one simulation. Fully determined by `config` and `seed`.
///
/// Period `t` (1-based) is a re-allocation round when `t` is a multiple of
/// tau; otherwise every agent searches, the new vector is assembled and the
/// agents that flipped learn from it.
pub fn run_simulation(config: &ScenarioConfig, run: usize, seed: u64) -> Result<RunTrace> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = influence_matrix(config, &mut rng)?;
    let cap = config.normalize.then_some(config.enumeration_cap);
    let land = generate_landscape_with(matrix, &mut rng, cap)?;
    let global_max = land.global_max();
    let initial = DecisionVector::random(config.n, &mut rng);
    let scheme = IncentiveScheme::new(config.a)?;
    let mut state = OrgState::new(&land, config.m, config.q, config.strategy, scheme, initial)?;

    let mut trace = RunTrace {
        run,
        seed,
        initial,
        global_max,
        performance: Vec::with_capacity(config.periods),
        decisions: Vec::with_capacity(config.periods),
        portfolios: Vec::with_capacity(config.periods),
        swaps: Vec::new(),
        modularity: Vec::new(),
        ledger: Vec::new(),
    };

    for t in 1..=config.periods {
        state.period = t;
        state.previous = state.current;
        if config.tau.is_reallocation(t) {
            let events = run_reallocation(&mut state, config.strategy, config.sigma, &mut rng)?;
            trace.swaps.extend(events);
        } else {
            let outcomes: Vec<_> = state
                .agents
                .iter()
                .map(|agent| {
                    hill_climb_from(agent, &state.previous, &state.previous_contributions, &land, scheme, &mut rng)
                })
                .collect();
            state.current = assemble_solution(&outcomes, &state.previous)?;
            let contribs = land.contributions(&state.current);
            for (agent, outcome) in state.agents.iter_mut().zip(&outcomes) {
                update_beliefs(agent, outcome, &contribs, &state.previous_contributions)?;
            }
            state.previous_contributions = contribs;
        }

        let raw = land.full_performance(&state.current);
        trace.performance.push(match global_max {
            Some(max) => normalized_performance(raw, max)?,
            None => raw,
        });
        trace.decisions.push(state.current);
        trace.portfolios.push(state.portfolios());
        if t == config.modularity_period() {
            trace.modularity = state
                .agents
                .iter()
                .map(|a| modularity(a.id, t, a.portfolio(), land.matrix()))
                .collect::<Result<_>>()?;
        }
    }
    trace.ledger = state.ledger;
    Ok(trace)
}
