//! Per-period search and belief learning.
//!
//! Agents search one decision at a time under hidden action: every candidate is
//! judged against the other agents' decisions from the previous period, and all
//! agents move simultaneously. After the new vector is implemented each agent
//! that flipped a decision learns from the contributions it can see, i.e. those
//! inside its own portfolio.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::landscape::{DecisionVector, Landscape};
use crate::organization::{utility_from_contributions, Agent, IncentiveScheme};

/// Result of one agent's search in one period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub agent: usize,
    /// Decision flipped this period, `None` if the incumbent was kept.
    pub flipped: Option<usize>,
    /// The agent's portfolio at search time, ascending.
    pub positions: Vec<usize>,
    /// New values of the decisions in `positions`.
    pub bits: Vec<bool>,
}

/// A neighbour of the incumbent at Hamming distance one within the portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub flipped: usize,
    pub vector: DecisionVector,
}

/// Flips one decision of the agent's portfolio, chosen uniformly.
pub fn propose_candidate<R: Rng + ?Sized>(agent: &Agent, d_prev: &DecisionVector, rng: &mut R) -> Candidate {
    let &flipped = agent
        .portfolio()
        .choose(rng)
        .expect("agents always hold at least one decision");
    Candidate {
        flipped,
        vector: d_prev.flipped(flipped),
    }
}

/// One hill-climbing step: adopt the candidate only if it strictly raises utility.
pub fn hill_climb_step<R: Rng + ?Sized>(
    agent: &Agent,
    d_prev: &DecisionVector,
    land: &Landscape,
    scheme: IncentiveScheme,
    rng: &mut R,
) -> SearchOutcome {
    let contribs = land.contributions(d_prev);
    hill_climb_from(agent, d_prev, &contribs, land, scheme, rng)
}

/// [`hill_climb_step`] with the incumbent's contributions already known.
pub(crate) fn hill_climb_from<R: Rng + ?Sized>(
    agent: &Agent,
    d_prev: &DecisionVector,
    prev_contribs: &[f64],
    land: &Landscape,
    scheme: IncentiveScheme,
    rng: &mut R,
) -> SearchOutcome {
    let candidate = propose_candidate(agent, d_prev, rng);
    let cand_contribs = land.contributions(&candidate.vector);
    let incumbent = utility_from_contributions(agent.portfolio(), prev_contribs, scheme);
    let challenger = utility_from_contributions(agent.portfolio(), &cand_contribs, scheme);
    let (flipped, chosen) = if challenger > incumbent {
        (Some(candidate.flipped), candidate.vector)
    } else {
        (None, *d_prev)
    };
    SearchOutcome {
        agent: agent.id,
        flipped,
        positions: agent.portfolio().to_vec(),
        bits: agent.portfolio().iter().map(|&i| chosen.get(i)).collect(),
    }
}

/// Overlays every agent's chosen bits onto the previous vector.
pub fn assemble_solution(outcomes: &[SearchOutcome], d_prev: &DecisionVector) -> Result<DecisionVector> {
    let mut written = vec![false; d_prev.len()];
    let mut next = *d_prev;
    for outcome in outcomes {
        if outcome.positions.len() != outcome.bits.len() {
            return Err(Error::Invariant(format!(
                "agent {} reported {} bits for {} positions",
                outcome.agent + 1,
                outcome.bits.len(),
                outcome.positions.len()
            )));
        }
        for (&pos, &bit) in outcome.positions.iter().zip(&outcome.bits) {
            if pos >= written.len() {
                return Err(Error::IndexOutOfRange { index: pos, n: written.len() });
            }
            if std::mem::replace(&mut written[pos], true) {
                return Err(Error::Invariant(format!(
                    "decision {} written by more than one agent",
                    pos + 1
                )));
            }
            next.set(pos, bit);
        }
    }
    Ok(next)
}

/// Posterior mean of a Beta(alpha, beta) belief.
pub fn belief_mean(alpha: u32, beta: u32) -> f64 {
    f64::from(alpha) / (f64::from(alpha) + f64::from(beta))
}

/// Records what the agent saw after implementing `outcome`.
///
/// For a flipped decision `i`, every other own decision `j` gains one
/// observation: alpha if `c_j` changed between the two periods (bit-exact),
/// beta otherwise. Nothing is learned when no decision was flipped.
pub fn update_beliefs(
    agent: &mut Agent,
    outcome: &SearchOutcome,
    contribs_now: &[f64],
    contribs_prev: &[f64],
) -> Result<()> {
    let Some(i) = outcome.flipped else {
        return Ok(());
    };
    if !agent.owns(i) {
        return Err(Error::Invariant(format!(
            "agent {} flipped decision {} outside its portfolio",
            agent.id + 1,
            i + 1
        )));
    }
    let portfolio = agent.portfolio().to_vec();
    for j in portfolio.into_iter().filter(|&j| j != i) {
        if contribs_now[j].to_bits() != contribs_prev[j].to_bits() {
            agent.beliefs.observe_change(i, j);
        } else {
            agent.beliefs.observe_no_change(i, j);
        }
    }
    Ok(())
}
