//! Task re-allocation rounds.
//!
//! Every eligible agent offers one decision with a threshold. Offers are then
//! processed one at a time in random order: the other agents with spare
//! capacity send signals, the strongest signal wins if it reaches the
//! threshold, and the winner pays the second-highest signal or the threshold,
//! whichever is larger.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::organization::{Agent, OrgState, Strategy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offer {
    pub offerer: usize,
    pub decision: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub bidder: usize,
    pub value: f64,
}

/// An executed transfer of one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapEvent {
    pub period: usize,
    pub decision: usize,
    pub from: usize,
    pub to: usize,
    pub price: f64,
    pub threshold: f64,
}

fn uniform_argmin<R: Rng + ?Sized>(scored: &[(usize, f64)], rng: &mut R) -> Option<(usize, f64)> {
    let min = scored.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let ties: Vec<(usize, f64)> = scored.iter().copied().filter(|&(_, v)| v == min).collect();
    ties.choose(rng).copied()
}

/// Offers the own decision with the lowest contribution last period, at that
/// contribution. Agents holding a single decision do not offer.
pub fn select_offer_performance<R: Rng + ?Sized>(
    agent: &Agent,
    contribs_prev: &[f64],
    rng: &mut R,
) -> Option<Offer> {
    if agent.portfolio().len() < 2 {
        return None;
    }
    let scored: Vec<(usize, f64)> = agent.portfolio().iter().map(|&i| (i, contribs_prev[i])).collect();
    uniform_argmin(&scored, rng).map(|(decision, threshold)| Offer {
        offerer: agent.id,
        decision,
        threshold,
    })
}

/// Noisy estimate of the offered decision's last contribution.
pub fn compute_signal_performance<R: Rng + ?Sized>(
    bidder: &Agent,
    offer: &Offer,
    contribs_prev: &[f64],
    sigma: f64,
    capacity: usize,
    rng: &mut R,
) -> Result<Option<Signal>> {
    let noise = signal_noise(sigma)?;
    if bidder.portfolio().len() >= capacity || bidder.id == offer.offerer {
        return Ok(None);
    }
    Ok(Some(Signal {
        bidder: bidder.id,
        value: contribs_prev[offer.decision] + noise.sample(rng),
    }))
}

fn signal_noise(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("signal noise sigma must be finite and >= 0, got {sigma}")));
    }
    Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("signal noise: {e}")))
}

/// Mean belief that decision `i` interacts with the agent's other decisions.
fn internal_belief(agent: &Agent, i: usize) -> f64 {
    let others: Vec<f64> = agent
        .portfolio()
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| agent.beliefs.mean(i, j))
        .collect();
    others.iter().sum::<f64>() / others.len() as f64
}

/// Offers the own decision least believed to interact with the rest of the
/// portfolio; that mean belief is the threshold.
pub fn select_offer_interdependence<R: Rng + ?Sized>(agent: &Agent, rng: &mut R) -> Option<Offer> {
    if agent.portfolio().len() < 2 {
        return None;
    }
    let scored: Vec<(usize, f64)> = agent.portfolio().iter().map(|&i| (i, internal_belief(agent, i))).collect();
    uniform_argmin(&scored, rng).map(|(decision, threshold)| Offer {
        offerer: agent.id,
        decision,
        threshold,
    })
}

/// Mean belief of the bidder that the offered decision interacts with its own portfolio.
pub fn compute_signal_interdependence(bidder: &Agent, offer: &Offer, capacity: usize) -> Option<Signal> {
    if bidder.portfolio().len() >= capacity || bidder.id == offer.offerer {
        return None;
    }
    let beliefs: Vec<f64> = bidder
        .portfolio()
        .iter()
        .map(|&j| bidder.beliefs.mean(offer.decision, j))
        .collect();
    Some(Signal {
        bidder: bidder.id,
        value: beliefs.iter().sum::<f64>() / beliefs.len() as f64,
    })
}

/// Winner and price for one offer, or `None` if no signal reaches the threshold.
///
/// Ties for the maximum are broken uniformly. The price is the second-highest
/// signal when it exceeds the threshold, otherwise the threshold.
pub fn resolve_offer<R: Rng + ?Sized>(threshold: f64, signals: &[Signal], rng: &mut R) -> Option<(usize, f64)> {
    let max = signals.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
    if signals.is_empty() || max < threshold {
        return None;
    }
    let top: Vec<&Signal> = signals.iter().filter(|s| s.value == max).collect();
    let winner = top.choose(rng).expect("at least one maximal signal").bidder;
    let second = signals
        .iter()
        .filter(|s| s.bidder != winner)
        .map(|s| s.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let price = if second > threshold { second } else { threshold };
    Some((winner, price))
}

/// Runs one re-allocation round on `state`. The decision vector, contributions
/// and beliefs are left untouched; only portfolios and the ledger change.
pub fn run_reallocation<R: Rng + ?Sized>(
    state: &mut OrgState,
    strategy: Strategy,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<SwapEvent>> {
    if strategy == Strategy::PerformanceBased {
        signal_noise(sigma)?;
    }
    let contribs = state.previous_contributions.clone();
    let mut offers: Vec<Offer> = state
        .agents
        .iter()
        .filter_map(|agent| match strategy {
            Strategy::PerformanceBased => select_offer_performance(agent, &contribs, rng),
            Strategy::InterdependenceBased => select_offer_interdependence(agent, rng),
        })
        .collect();
    offers.shuffle(rng);

    let capacity = state.capacity;
    let mut events = Vec::new();
    for offer in offers {
        let mut signals = Vec::new();
        for bidder in &state.agents {
            let signal = match strategy {
                Strategy::PerformanceBased => {
                    compute_signal_performance(bidder, &offer, &contribs, sigma, capacity, rng)?
                }
                Strategy::InterdependenceBased => compute_signal_interdependence(bidder, &offer, capacity),
            };
            signals.extend(signal);
        }
        let Some((winner, price)) = resolve_offer(offer.threshold, &signals, rng) else {
            continue;
        };
        if !state.agents[offer.offerer].give(offer.decision) {
            return Err(Error::Invariant(format!(
                "agent {} offered decision {} it does not hold",
                offer.offerer + 1,
                offer.decision + 1
            )));
        }
        state.agents[winner].take(offer.decision);
        state.ledger[offer.offerer] += price;
        state.ledger[winner] -= price;
        events.push(SwapEvent {
            period: state.period,
            decision: offer.decision,
            from: offer.offerer,
            to: winner,
            price,
            threshold: offer.threshold,
        });
    }
    Ok(events)
}
