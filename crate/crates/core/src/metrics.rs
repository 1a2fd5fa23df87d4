//! Observables computed from simulation output.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::allocation::SwapEvent;
use crate::error::{Error, Result};
use crate::landscape::InfluenceMatrix;

/// Performance relative to the landscape's global maximum.
pub fn normalized_performance(performance: f64, global_max: f64) -> Result<f64> {
    if !(global_max > 0.0) {
        return Err(Error::Config(format!(
            "cannot normalize by a non-positive maximum ({global_max})"
        )));
    }
    Ok(performance / global_max)
}

/// Share of a portfolio's interdependencies that stay inside the portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityReading {
    pub agent: usize,
    pub period: usize,
    pub value: f64,
    pub k_int: usize,
    pub k_all: usize,
}

pub fn modularity(agent: usize, period: usize, portfolio: &[usize], matrix: &InfluenceMatrix) -> Result<ModularityReading> {
    if portfolio.is_empty() {
        return Err(Error::Modularity("empty portfolio".into()));
    }
    let k = matrix
        .uniform_k()
        .ok_or_else(|| Error::Modularity("rows have different interdependency counts".into()))?;
    if k == 0 {
        return Err(Error::Modularity("pattern has no interdependencies (K = 0)".into()));
    }
    let k_int = portfolio
        .iter()
        .flat_map(|&i| portfolio.iter().map(move |&j| (i, j)))
        .filter(|&(i, j)| i != j && matrix.cell(i, j))
        .count();
    let k_all = portfolio.len() * k;
    Ok(ModularityReading {
        agent,
        period,
        value: k_int as f64 / k_all as f64,
        k_int,
        k_all,
    })
}

/// Right-continuous empirical CDF stored as `(value, P(X <= value))` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    steps: Vec<(f64, f64)>,
    len: usize,
}

impl EmpiricalCdf {
    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `P(X <= x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.steps.partition_point(|&(v, _)| v <= x) {
            0 => 0.0,
            k => self.steps[k - 1].1,
        }
    }
}

pub fn ecdf(values: &[f64]) -> Result<EmpiricalCdf> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("ECDF sample contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (idx, &v) in sorted.iter().enumerate() {
        let cum = (idx + 1) as f64 / n;
        match steps.last_mut() {
            Some(last) if last.0 == v => last.1 = cum,
            _ => steps.push((v, cum)),
        }
    }
    if let Some(last) = steps.last_mut() {
        last.1 = 1.0;
    }
    Ok(EmpiricalCdf { steps, len: sorted.len() })
}

/// Value of an experimental factor, ordered numerically for numbers.
#[derive(Debug, Clone)]
pub enum FactorValue {
    Number(f64),
    Text(String),
}

impl PartialEq for FactorValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FactorValue {}

impl PartialOrd for FactorValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FactorValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (FactorValue::Number(a), FactorValue::Number(b)) => a.total_cmp(b),
            (FactorValue::Text(a), FactorValue::Text(b)) => a.cmp(b),
            (FactorValue::Number(_), FactorValue::Text(_)) => Ordering::Less,
            (FactorValue::Text(_), FactorValue::Number(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for FactorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorValue::Number(v) if v.is_infinite() => f.write_str("inf"),
            FactorValue::Number(v) => write!(f, "{v}"),
            FactorValue::Text(s) => f.write_str(s),
        }
    }
}

/// A record with named factors and one outcome.
pub trait FactorRecord {
    /// Names of every factor the record carries.
    fn factor_names(&self) -> &'static [&'static str];
    fn factor(&self, name: &str) -> Option<FactorValue>;
    fn outcome(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialDependenceRow {
    pub scope: Vec<FactorValue>,
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialDependenceTable {
    pub scope_vars: Vec<String>,
    pub rows: Vec<PartialDependenceRow>,
    /// False when some scope cell misses a complementary configuration.
    pub balanced: bool,
}

impl PartialDependenceTable {
    pub fn get(&self, scope: &[FactorValue]) -> Option<&PartialDependenceRow> {
        self.rows.iter().find(|r| r.scope == scope)
    }
}

/// Mean outcome per combination of the scope factors, averaged over every
/// record sharing that combination.
pub fn partial_dependence<R: FactorRecord>(records: &[R], scope: &[&str]) -> Result<PartialDependenceTable> {
    let Some(first) = records.first() else {
        return Ok(PartialDependenceTable {
            scope_vars: scope.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            balanced: true,
        });
    };
    let names = first.factor_names();
    if let Some(unknown) = scope.iter().find(|s| !names.contains(s)) {
        return Err(Error::UnknownVariable(unknown.to_string()));
    }
    let complement: Vec<&str> = names.iter().copied().filter(|n| !scope.contains(n)).collect();

    let lookup = |r: &R, name: &str| r.factor(name).ok_or_else(|| Error::UnknownVariable(name.to_string()));
    // scope cell -> (outcome sum, count, complementary configurations seen)
    type Cell = (f64, usize, BTreeSet<Vec<FactorValue>>);
    let mut cells: BTreeMap<Vec<FactorValue>, Cell> = BTreeMap::new();
    let mut all_configs = BTreeSet::new();
    for r in records {
        let key = scope.iter().map(|s| lookup(r, s)).collect::<Result<Vec<_>>>()?;
        let config = complement.iter().map(|s| lookup(r, s)).collect::<Result<Vec<_>>>()?;
        all_configs.insert(config.clone());
        let cell = cells.entry(key).or_insert_with(|| (0.0, 0, BTreeSet::new()));
        cell.0 += r.outcome();
        cell.1 += 1;
        cell.2.insert(config);
    }
    let balanced = cells.values().all(|(_, _, configs)| configs.len() == all_configs.len());
    if !balanced {
        log::warn!(
            "partial dependence on {:?}: complementary factors do not form a full grid",
            scope
        );
    }
    Ok(PartialDependenceTable {
        scope_vars: scope.iter().map(|s| s.to_string()).collect(),
        rows: cells
            .into_iter()
            .map(|(scope, (sum, n, _))| PartialDependenceRow {
                scope,
                mean: sum / n as f64,
                n,
            })
            .collect(),
        balanced,
    })
}

/// Mean number of swaps per re-allocation round across runs.
///
/// Each element of `runs` holds one run's events; round `r` covers period
/// `r * tau`. The result has one entry per round `1..=periods / tau`.
pub fn swap_series(runs: &[Vec<SwapEvent>], tau: usize, periods: usize) -> Vec<(usize, f64)> {
    let rounds = periods.checked_div(tau).unwrap_or(0);
    let mut totals = vec![0usize; rounds];
    for events in runs {
        for e in events {
            let round = e.period / tau;
            if e.period % tau == 0 && (1..=rounds).contains(&round) {
                totals[round - 1] += 1;
            }
        }
    }
    let denom = runs.len().max(1) as f64;
    totals
        .into_iter()
        .enumerate()
        .map(|(idx, total)| (idx + 1, total as f64 / denom))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{build_pattern, generate_landscape, DecisionVector, PatternId};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pattern(p: PatternId) -> InfluenceMatrix {
        build_pattern(p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalized_performance(0.7, 0.7).unwrap(), 1.0);
        assert_eq!(normalized_performance(0.0, 0.7).unwrap(), 0.0);
        assert!(normalized_performance(0.5, 0.0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let land = generate_landscape(pattern(PatternId::SmallRing), &mut rng).unwrap();
        let max = land.global_max().unwrap();
        for _ in 0..200 {
            let d = DecisionVector::random(15, &mut rng);
            let v = normalized_performance(land.full_performance(&d), max).unwrap();
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn benchmark_modularity() {
        let m = modularity(0, 0, &[0, 1, 2], &pattern(PatternId::SmallDiag)).unwrap();
        assert_eq!((m.k_int, m.k_all, m.value), (6, 6, 1.0));
        let m = modularity(0, 0, &[0, 1, 2], &pattern(PatternId::SmallReciprocal)).unwrap();
        assert_eq!((m.k_int, m.k_all), (6, 18));
        assert!((m.value - 1.0 / 3.0).abs() < 1e-15);
        let m = modularity(0, 0, &[0, 1, 2], &pattern(PatternId::SmallRing)).unwrap();
        assert!((m.value - 0.4).abs() < 1e-15);
        assert_eq!(modularity(0, 0, &[4], &pattern(PatternId::SmallDiag)).unwrap().value, 0.0);
        for block in 0..3 {
            let p: Vec<usize> = (5 * block..5 * block + 5).collect();
            assert_eq!(modularity(block, 0, &p, &pattern(PatternId::BigDiag)).unwrap().value, 1.0);
        }
        for block in 0..5 {
            let p: Vec<usize> = (3 * block..3 * block + 3).collect();
            assert_eq!(modularity(block, 0, &p, &pattern(PatternId::SmallDiag)).unwrap().value, 1.0);
        }
    }

    #[test]
    fn modularity_errors() {
        let identity = InfluenceMatrix::parse("2\n10\n01\n").unwrap();
        assert!(modularity(0, 0, &[0], &identity).is_err());
        assert!(modularity(0, 0, &[], &pattern(PatternId::SmallDiag)).is_err());
        let uneven = InfluenceMatrix::parse("2\n11\n01\n").unwrap();
        assert!(modularity(0, 0, &[0], &uneven).is_err());
    }

    #[test]
    fn ecdf_steps() {
        let e = ecdf(&[0.8, 0.2, 0.2]).unwrap();
        assert!((e.eval(0.2) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.eval(0.1), 0.0);
        assert_eq!(e.eval(0.8), 1.0);
        let single = ecdf(&[0.4]).unwrap();
        assert_eq!(single.steps(), &[(0.4, 1.0)]);
        assert_eq!(single.eval(0.39), 0.0);
        assert!(matches!(ecdf(&[]), Err(Error::EmptySample)));
    }

    proptest! {
        #[test]
        fn ecdf_matches_sort_and_count(values in proptest::collection::vec(0u8..20, 1..200), probe in 0u8..22) {
            let xs: Vec<f64> = values.iter().map(|&v| f64::from(v) / 10.0).collect();
            let e = ecdf(&xs).unwrap();
            let x = f64::from(probe) / 10.0;
            let count = xs.iter().filter(|&&v| v <= x).count();
            prop_assert!((e.eval(x) - count as f64 / xs.len() as f64).abs() < 1e-12);
            prop_assert!(e.steps().windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
            prop_assert_eq!(e.steps().last().unwrap().1, 1.0);
        }

        #[test]
        fn modularity_in_unit_interval(seed in any::<u64>(), idx in 0usize..8, picks in proptest::collection::btree_set(0usize..15, 1..6)) {
            let p = PatternId::BUILTIN[idx];
            let m = build_pattern(p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let portfolio: Vec<usize> = picks.into_iter().collect();
            let r = modularity(0, 0, &portfolio, &m).unwrap();
            prop_assert!(r.k_int <= r.k_all);
            prop_assert!((0.0..=1.0).contains(&r.value));
        }
    }

    struct Rec {
        a: f64,
        other: &'static str,
        y: f64,
    }

    impl FactorRecord for Rec {
        fn factor_names(&self) -> &'static [&'static str] {
            &["a", "other"]
        }
        fn factor(&self, name: &str) -> Option<FactorValue> {
            match name {
                "a" => Some(FactorValue::Number(self.a)),
                "other" => Some(FactorValue::Text(self.other.into())),
                _ => None,
            }
        }
        fn outcome(&self) -> f64 {
            self.y
        }
    }

    #[test]
    fn partial_dependence_basics() {
        let recs = vec![Rec { a: 0.5, other: "x", y: 0.4 }, Rec { a: 0.5, other: "y", y: 0.6 }];
        let t = partial_dependence(&recs, &["a"]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!((t.rows[0].mean - 0.5).abs() < 1e-15);
        assert_eq!(t.rows[0].n, 2);
        assert!(t.balanced);

        let raw = vec![Rec { a: 0.1, other: "x", y: 0.3 }, Rec { a: 0.2, other: "x", y: 0.9 }];
        let t = partial_dependence(&raw, &["a"]).unwrap();
        assert_eq!(t.get(&[FactorValue::Number(0.1)]).unwrap().mean, 0.3);
        assert_eq!(t.get(&[FactorValue::Number(0.2)]).unwrap().mean, 0.9);

        assert!(matches!(partial_dependence(&raw, &["b"]), Err(Error::UnknownVariable(_))));
        let unbalanced = vec![Rec { a: 0.1, other: "x", y: 0.3 }, Rec { a: 0.2, other: "y", y: 0.9 }];
        assert!(!partial_dependence(&unbalanced, &["a"]).unwrap().balanced);
    }

    #[test]
    fn partial_dependence_matches_group_by_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let others = ["p", "q", "r", "s"];
        let recs: Vec<Rec> = (0..100)
            .map(|_| Rec {
                a: f64::from(rng.random_range(1..=5u8)) / 10.0,
                other: others[rng.random_range(0..4)],
                y: rng.random(),
            })
            .collect();
        let t = partial_dependence(&recs, &["a"]).unwrap();
        for row in &t.rows {
            let FactorValue::Number(a) = row.scope[0] else { panic!() };
            let ys: Vec<f64> = recs.iter().filter(|r| r.a == a).map(|r| r.y).collect();
            assert_eq!(row.n, ys.len());
            assert!((row.mean - ys.iter().sum::<f64>() / ys.len() as f64).abs() < 1e-12);
        }
        let grand: f64 = recs.iter().map(|r| r.y).sum::<f64>() / 100.0;
        let back: f64 = t.rows.iter().map(|r| r.mean * r.n as f64).sum::<f64>() / 100.0;
        assert!((grand - back).abs() < 1e-12);
    }

    fn ev(period: usize) -> SwapEvent {
        SwapEvent { period, decision: 0, from: 0, to: 1, price: 0.0, threshold: 0.0 }
    }

    #[test]
    fn swap_series_counts() {
        assert!(swap_series(&[vec![], vec![]], 15, 200).iter().all(|&(_, v)| v == 0.0));
        let runs = vec![vec![ev(45); 4], vec![ev(45); 4]];
        let s = swap_series(&runs, 15, 200);
        assert_eq!(s.len(), 13);
        assert_eq!(s[2], (3, 4.0));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let runs: Vec<Vec<SwapEvent>> = (0..30)
            .map(|_| (0..rng.random_range(0..20)).map(|_| ev(5 * rng.random_range(1..=8))).collect())
            .collect();
        let s = swap_series(&runs, 5, 40);
        for (round, mean) in s {
            let recount: usize = runs.iter().map(|r| r.iter().filter(|e| e.period == round * 5).count()).sum();
            assert!((mean - recount as f64 / 30.0).abs() < 1e-12);
        }
    }
}
