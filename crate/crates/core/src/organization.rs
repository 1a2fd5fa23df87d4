//! Agents, their areas of responsibility, beliefs, and the incentive scheme.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::landscape::{mean, DecisionVector, Landscape};

/// How agents form offers and signals when tasks are re-allocated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    PerformanceBased,
    InterdependenceBased,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::PerformanceBased, Strategy::InterdependenceBased];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::PerformanceBased => "performance_based",
            Strategy::InterdependenceBased => "interdependence_based",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Linear incentive scheme: weight `a` on own performance, `1 - a` on residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncentiveScheme {
    a: f64,
}

impl IncentiveScheme {
    pub fn new(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Config(format!("incentive parameter {a} outside [0, 1]")));
        }
        Ok(IncentiveScheme { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn utility(&self, own: f64, residual: f64) -> f64 {
        self.a * own + (1.0 - self.a) * residual
    }
}

/// Per-agent Beta counts over ordered decision pairs `(i, j)`: how often a flip
/// of `i` was (alpha) or was not (beta) followed by a change of `c_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefStore {
    n: usize,
    alpha: Vec<u32>,
    beta: Vec<u32>,
}

impl BeliefStore {
    /// Every pair starts at one observation of each kind (belief 0.5).
    pub fn new(n: usize) -> Self {
        BeliefStore {
            n,
            alpha: vec![1; n * n],
            beta: vec![1; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self, i: usize, j: usize) -> u32 {
        self.alpha[i * self.n + j]
    }

    pub fn beta(&self, i: usize, j: usize) -> u32 {
        self.beta[i * self.n + j]
    }

    pub fn observe_change(&mut self, i: usize, j: usize) {
        self.alpha[i * self.n + j] += 1;
    }

    pub fn observe_no_change(&mut self, i: usize, j: usize) {
        self.beta[i * self.n + j] += 1;
    }

    /// Expected probability that `i` and `j` are interdependent.
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        crate::dynamics::belief_mean(self.alpha(i, j), self.beta(i, j))
    }

    /// Total observation count for the pair.
    pub fn observations(&self, i: usize, j: usize) -> u64 {
        u64::from(self.alpha(i, j)) + u64::from(self.beta(i, j))
    }
}

/// A decision-making agent. Portfolios are kept sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    portfolio: Vec<usize>,
    pub beliefs: BeliefStore,
    pub strategy: Strategy,
}

impl Agent {
    pub fn new(id: usize, mut portfolio: Vec<usize>, n: usize, strategy: Strategy) -> Self {
        portfolio.sort_unstable();
        portfolio.dedup();
        Agent {
            id,
            portfolio,
            beliefs: BeliefStore::new(n),
            strategy,
        }
    }

    pub fn portfolio(&self) -> &[usize] {
        &self.portfolio
    }

    pub fn owns(&self, decision: usize) -> bool {
        self.portfolio.binary_search(&decision).is_ok()
    }

    pub(crate) fn give(&mut self, decision: usize) -> bool {
        match self.portfolio.binary_search(&decision) {
            Ok(pos) => {
                self.portfolio.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub(crate) fn take(&mut self, decision: usize) {
        if let Err(pos) = self.portfolio.binary_search(&decision) {
            self.portfolio.insert(pos, decision);
        }
    }
}

/// Sequential, symmetric allocation: agent `k` gets the `k`-th run of `n / m` decisions.
pub fn initial_allocation(n: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    if m == 0 || n == 0 {
        return Err(Error::Config("need at least one agent and one decision".into()));
    }
    if !n.is_multiple_of(m) {
        return Err(Error::Config(format!(
            "{m} agents cannot split {n} decisions symmetrically"
        )));
    }
    let size = n / m;
    Ok((0..m).map(|k| (k * size..(k + 1) * size).collect()).collect())
}

/// Decisions outside `portfolio`, ascending.
pub fn residual(portfolio: &[usize], n: usize) -> Vec<usize> {
    (0..n).filter(|i| !portfolio.contains(i)).collect()
}

/// Incentive-weighted utility of `agent` for the implemented vector `d`.
pub fn utility(agent: &Agent, d: &DecisionVector, scheme: IncentiveScheme, land: &Landscape) -> Result<f64> {
    let own = land.performance(d, agent.portfolio())?;
    let rest = land.performance(d, &residual(agent.portfolio(), land.n()))?;
    Ok(scheme.utility(own, rest))
}

/// Utility computed from precomputed contributions of a full vector.
pub(crate) fn utility_from_contributions(
    portfolio: &[usize],
    contributions: &[f64],
    scheme: IncentiveScheme,
) -> f64 {
    let mut own_sum = 0.0;
    let mut rest_sum = 0.0;
    let mut own_count = 0usize;
    for (i, &c) in contributions.iter().enumerate() {
        if portfolio.binary_search(&i).is_ok() {
            own_sum += c;
            own_count += 1;
        } else {
            rest_sum += c;
        }
    }
    let rest_count = contributions.len() - own_count;
    let own = if own_count > 0 { own_sum / own_count as f64 } else { 0.0 };
    let rest = if rest_count > 0 { rest_sum / rest_count as f64 } else { 0.0 };
    scheme.utility(own, rest)
}

/// The complete state of one simulation run at period `t`.
#[derive(Debug, Clone)]
pub struct OrgState {
    pub period: usize,
    pub current: DecisionVector,
    pub previous: DecisionVector,
    pub agents: Vec<Agent>,
    pub scheme: IncentiveScheme,
    /// Contributions of `previous` under the run's landscape.
    pub previous_contributions: Vec<f64>,
    /// Cumulative auction payments per agent (credits positive).
    pub ledger: Vec<f64>,
    pub capacity: usize,
}

impl OrgState {
    /// State at `t = 0`: sequential allocation, fresh beliefs, `initial` implemented.
    pub fn new(
        land: &Landscape,
        agents: usize,
        capacity: usize,
        strategy: Strategy,
        scheme: IncentiveScheme,
        initial: DecisionVector,
    ) -> Result<Self> {
        let n = land.n();
        if agents < 2 {
            return Err(Error::Config("at least two agents are required".into()));
        }
        if capacity == 0 || capacity >= n {
            return Err(Error::Config(format!("capacity {capacity} must lie in [1, {n})")));
        }
        let portfolios = initial_allocation(n, agents)?;
        if n / agents > capacity {
            return Err(Error::Config(format!(
                "initial portfolios of {} decisions exceed capacity {capacity}",
                n / agents
            )));
        }
        if initial.len() != n {
            return Err(Error::Config("initial vector length differs from landscape".into()));
        }
        let agents = portfolios
            .into_iter()
            .enumerate()
            .map(|(id, p)| Agent::new(id, p, n, strategy))
            .collect::<Vec<_>>();
        Ok(OrgState {
            period: 0,
            current: initial,
            previous: initial,
            ledger: vec![0.0; agents.len()],
            agents,
            scheme,
            previous_contributions: land.contributions(&initial),
            capacity,
        })
    }

    pub fn n(&self) -> usize {
        self.current.len()
    }

    pub fn portfolios(&self) -> Vec<Vec<usize>> {
        self.agents.iter().map(|a| a.portfolio().to_vec()).collect()
    }

    /// Checks that portfolios partition all decisions and respect capacity.
    pub fn check_partition(&self) -> Result<()> {
        let n = self.n();
        let mut owner = vec![None; n];
        for agent in &self.agents {
            let size = agent.portfolio().len();
            if size == 0 || size > self.capacity {
                return Err(Error::Invariant(format!(
                    "agent {} holds {size} decisions (capacity {})",
                    agent.id + 1,
                    self.capacity
                )));
            }
            for &i in agent.portfolio() {
                if i >= n {
                    return Err(Error::Invariant(format!("decision {} out of range", i + 1)));
                }
                if let Some(other) = owner[i].replace(agent.id) {
                    return Err(Error::Invariant(format!(
                        "decision {} held by agents {} and {}",
                        i + 1,
                        other + 1,
                        agent.id + 1
                    )));
                }
            }
        }
        if let Some(free) = owner.iter().position(Option::is_none) {
            return Err(Error::Invariant(format!("decision {} unallocated", free + 1)));
        }
        Ok(())
    }
}

/// Full-problem performance recovered from per-agent portfolio means.
pub fn performance_from_portfolios(land: &Landscape, d: &DecisionVector, agents: &[Agent]) -> Result<f64> {
    let total: Vec<f64> = agents
        .iter()
        .map(|a| land.performance(d, a.portfolio()).map(|p| p * a.portfolio().len() as f64))
        .collect::<Result<_>>()?;
    mean(total).map(|m| m * agents.len() as f64 / land.n() as f64).ok_or(Error::EmptySubset)
}
