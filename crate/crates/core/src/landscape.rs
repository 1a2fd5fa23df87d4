//! Interdependence patterns and NK performance landscapes.
//!
//! Decisions are indexed from 0 internally; text formats and CSV output use
//! 1-based indices. A decision vector is packed into a `u64` with decision 0 in
//! the least significant bit, so landscapes are limited to 64 decisions.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

/// Largest number of decisions a packed [`DecisionVector`] can hold.
pub const MAX_DECISIONS: usize = 64;

/// Number of decisions the built-in patterns are defined for.
pub const BUILTIN_DECISIONS: usize = 15;

/// Default bit-width up to which the global optimum is found by enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// The built-in interdependence patterns plus `Custom` for loaded matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    SmallDiag,
    BigDiag,
    SmallReciprocal,
    BigReciprocal,
    SmallRing,
    BigRing,
    RandomK4,
    RandomK6,
    Custom,
}

impl PatternId {
    pub const BUILTIN: [PatternId; 8] = [
        PatternId::SmallDiag,
        PatternId::BigDiag,
        PatternId::SmallReciprocal,
        PatternId::BigReciprocal,
        PatternId::SmallRing,
        PatternId::BigRing,
        PatternId::RandomK4,
        PatternId::RandomK6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternId::SmallDiag => "small_diag",
            PatternId::BigDiag => "big_diag",
            PatternId::SmallReciprocal => "small_reciprocal",
            PatternId::BigReciprocal => "big_reciprocal",
            PatternId::SmallRing => "small_ring",
            PatternId::BigRing => "big_ring",
            PatternId::RandomK4 => "random_k4",
            PatternId::RandomK6 => "random_k6",
            PatternId::Custom => "custom",
        }
    }

    /// Number of interdependencies per contribution, `None` for custom matrices.
    pub fn k(self) -> Option<usize> {
        match self {
            PatternId::SmallDiag => Some(2),
            PatternId::BigDiag => Some(4),
            PatternId::SmallReciprocal | PatternId::BigReciprocal => Some(6),
            PatternId::SmallRing => Some(5),
            PatternId::BigRing => Some(9),
            PatternId::RandomK4 => Some(4),
            PatternId::RandomK6 => Some(6),
            PatternId::Custom => None,
        }
    }

    /// Patterns whose benchmark allocation internalizes every interdependency.
    pub fn is_decomposable(self) -> bool {
        matches!(self, PatternId::SmallDiag | PatternId::BigDiag)
    }

    pub fn is_random(self) -> bool {
        matches!(self, PatternId::RandomK4 | PatternId::RandomK6)
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternId::BUILTIN
            .iter()
            .chain(std::iter::once(&PatternId::Custom))
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown pattern `{s}`")))
    }
}

/// N×N boolean matrix; `cell(i, j)` is true when decision `j` influences
/// contribution `c_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceMatrix {
    n: usize,
    cells: Vec<bool>,
    pattern: PatternId,
}

impl InfluenceMatrix {
    /// Builds a matrix from row-major cells and validates it.
    pub fn from_cells(n: usize, cells: Vec<bool>, pattern: PatternId) -> Result<Self> {
        if n == 0 {
            return Err(Error::Matrix("matrix must have at least one decision".into()));
        }
        if n > MAX_DECISIONS {
            return Err(Error::Matrix(format!(
                "{n} decisions exceed the supported maximum of {MAX_DECISIONS}"
            )));
        }
        if cells.len() != n * n {
            return Err(Error::Matrix(format!(
                "expected {} cells for a {n}x{n} matrix, got {}",
                n * n,
                cells.len()
            )));
        }
        let matrix = InfluenceMatrix { n, cells, pattern };
        for i in 0..n {
            if !matrix.cell(i, i) {
                return Err(Error::Matrix(format!(
                    "row {}: diagonal cell must be 1",
                    i + 1
                )));
            }
        }
        if let Some(k) = pattern.k() {
            for i in 0..n {
                let count = matrix.row_count(i);
                if count != k + 1 {
                    return Err(Error::Matrix(format!(
                        "row {}: expected {} influencing decisions for {pattern}, found {count}",
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        Ok(matrix)
    }

    /// Parses the plain-text format: first line N, then N lines of N `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Matrix("empty matrix file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Matrix(format!("first line must be the decision count, got `{header}`")))?;
        let mut cells = Vec::with_capacity(n * n);
        for row in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Matrix(format!("row {}: missing", row + 1)))?;
            if line.chars().count() != n {
                return Err(Error::Matrix(format!(
                    "row {}: expected {n} characters, got {}",
                    row + 1,
                    line.chars().count()
                )));
            }
            for ch in line.chars() {
                match ch {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    other => {
                        return Err(Error::Matrix(format!(
                            "row {}: invalid character `{other}`",
                            row + 1
                        )))
                    }
                }
            }
        }
        if lines.next().is_some() {
            return Err(Error::Matrix(format!("more than {n} rows")));
        }
        InfluenceMatrix::from_cells(n, cells, PatternId::Custom)
    }

    /// Renders the matrix in the text format accepted by [`InfluenceMatrix::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.push(if self.cell(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pattern(&self) -> PatternId {
        self.pattern
    }

    pub fn cell(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    /// Ascending positions of the decisions that influence contribution `i`.
    pub fn row(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.cell(i, j)).collect()
    }

    fn row_count(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.cell(i, j)).count()
    }

    /// The common off-diagonal row count K, or `None` if rows differ.
    pub fn uniform_k(&self) -> Option<usize> {
        let first = self.row_count(0);
        (1..self.n)
            .all(|i| self.row_count(i) == first)
            .then(|| first - 1)
    }
}

fn block_matrix(n: usize, block: usize, pattern: PatternId, extra: impl Fn(usize, usize, usize) -> bool) -> Vec<bool> {
    let blocks = n / block;
    let mut cells = vec![false; n * n];
    for i in 0..n {
        let bi = i / block;
        for j in 0..n {
            let bj = j / block;
            cells[i * n + j] = bi == bj || extra(bi, bj, j % block);
        }
    }
    debug_assert!(blocks * block == n, "{pattern} needs whole blocks");
    cells
}

/// Builds one of the eight built-in patterns over 15 decisions.
///
/// Small patterns use five 3×3 diagonal blocks, big patterns three 5×5 blocks.
/// Rings add full coupling to the next block (cyclically). Reciprocal patterns
/// add the leading decisions of the previous and next blocks: two for small
/// blocks, one for big blocks. Random patterns add extra cells per row to the
/// small blocks, drawn without replacement from `rng` among columns outside the
/// row's own block.
pub fn build_pattern<R: Rng + ?Sized>(pattern: PatternId, rng: &mut R) -> Result<InfluenceMatrix> {
    let n = BUILTIN_DECISIONS;
    let cells = match pattern {
        PatternId::SmallDiag => block_matrix(n, 3, pattern, |_, _, _| false),
        PatternId::BigDiag => block_matrix(n, 5, pattern, |_, _, _| false),
        PatternId::SmallRing => block_matrix(n, 3, pattern, |bi, bj, _| bj == (bi + 1) % 5),
        PatternId::BigRing => block_matrix(n, 5, pattern, |bi, bj, _| bj == (bi + 1) % 3),
        PatternId::SmallReciprocal => block_matrix(n, 3, pattern, |bi, bj, offset| {
            offset < 2 && (bj == (bi + 1) % 5 || bj == (bi + 4) % 5)
        }),
        PatternId::BigReciprocal => block_matrix(n, 5, pattern, |bi, bj, offset| {
            offset < 1 && (bj == (bi + 1) % 3 || bj == (bi + 2) % 3)
        }),
        PatternId::RandomK4 | PatternId::RandomK6 => {
            let extra = if pattern == PatternId::RandomK4 { 2 } else { 4 };
            let mut cells = block_matrix(n, 3, pattern, |_, _, _| false);
            for i in 0..n {
                let own = i / 3;
                let outside: Vec<usize> = (0..n).filter(|j| j / 3 != own).collect();
                for pick in index::sample(rng, outside.len(), extra) {
                    cells[i * n + outside[pick]] = true;
                }
            }
            cells
        }
        PatternId::Custom => {
            return Err(Error::Config(
                "custom patterns are loaded from a matrix file, not built".into(),
            ))
        }
    };
    InfluenceMatrix::from_cells(n, cells, pattern)
}

/// [`build_pattern`] driven by a fresh generator seeded with `seed`. Only the
/// random patterns depend on the seed.
pub fn build_pattern_seeded(pattern: PatternId, seed: u64) -> Result<InfluenceMatrix> {
    build_pattern(pattern, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
}

/// A solution to the full decision problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecisionVector {
    bits: u64,
    len: usize,
}

impl DecisionVector {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DECISIONS, "decision vector longer than {MAX_DECISIONS}");
        DecisionVector { bits: 0, len }
    }

    /// Builds a vector from its packed form; decision 0 is the least significant bit.
    pub fn from_packed(bits: u64, len: usize) -> Self {
        assert!(len <= MAX_DECISIONS, "decision vector longer than {MAX_DECISIONS}");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        DecisionVector { bits: bits & mask, len }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = DecisionVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        DecisionVector::from_packed(rng.random::<u64>(), len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn packed(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.bits >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "decision {i} out of range for {}", self.len);
        if value {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "decision {i} out of range for {}", self.len);
        self.bits ^= 1 << i;
    }

    pub fn flipped(mut self, i: usize) -> Self {
        self.flip(i);
        self
    }

    pub fn hamming(&self, other: &DecisionVector) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

/// Renders `d_1 d_2 ... d_N` as a string of `0`/`1`.
impl fmt::Display for DecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Arithmetic mean accumulated in slice order.
pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// An NK performance landscape: one payoff table per decision.
///
/// Table `n` has `2^(K_n+1)` entries indexed by the bits of the influencing
/// decisions, packed in ascending position order with the first position in
/// the least significant bit.
#[derive(Debug, Clone)]
pub struct Landscape {
    matrix: InfluenceMatrix,
    positions: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
    optimum: Option<(DecisionVector, f64)>,
}

/// Draws a landscape with uniform `[0, 1)` payoffs and enumerates its optimum
/// under the default cap.
pub fn generate_landscape<R: Rng + ?Sized>(matrix: InfluenceMatrix, rng: &mut R) -> Result<Landscape> {
    generate_landscape_with(matrix, rng, Some(DEFAULT_ENUMERATION_CAP))
}

/// Like [`generate_landscape`]; `enumeration_cap = None` skips the optimum
/// (and therefore normalization) entirely.
pub fn generate_landscape_with<R: Rng + ?Sized>(
    matrix: InfluenceMatrix,
    rng: &mut R,
    enumeration_cap: Option<usize>,
) -> Result<Landscape> {
    if let Some(cap) = enumeration_cap {
        check_cap(matrix.n(), cap)?;
    }
    let tables = (0..matrix.n())
        .map(|i| {
            let size = 1usize << matrix.row_count(i);
            (0..size).map(|_| rng.random::<f64>()).collect()
        })
        .collect();
    Landscape::from_tables(matrix, tables, enumeration_cap)
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::EnumerationCap { n, cap })
    } else {
        Ok(())
    }
}

impl Landscape {
    /// Builds a landscape from explicit payoff tables (values in `[0, 1]`).
    pub fn from_tables(
        matrix: InfluenceMatrix,
        tables: Vec<Vec<f64>>,
        enumeration_cap: Option<usize>,
    ) -> Result<Self> {
        let n = matrix.n();
        if tables.len() != n {
            return Err(Error::Matrix(format!("expected {n} payoff tables, got {}", tables.len())));
        }
        let positions: Vec<Vec<usize>> = (0..n).map(|i| matrix.row(i)).collect();
        for (i, table) in tables.iter().enumerate() {
            if positions[i].len() > 30 {
                return Err(Error::Matrix(format!(
                    "row {}: {} influencing decisions exceed the table size limit",
                    i + 1,
                    positions[i].len()
                )));
            }
            let expected = 1usize << positions[i].len();
            if table.len() != expected {
                return Err(Error::Matrix(format!(
                    "row {}: payoff table needs {expected} entries, got {}",
                    i + 1,
                    table.len()
                )));
            }
            if let Some(bad) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Matrix(format!("row {}: payoff {bad} outside [0, 1]", i + 1)));
            }
        }
        let mut land = Landscape {
            matrix,
            positions,
            tables,
            optimum: None,
        };
        if let Some(cap) = enumeration_cap {
            check_cap(n, cap)?;
            land.optimum = Some(land.enumerate_optimum());
        }
        Ok(land)
    }

    pub fn matrix(&self) -> &InfluenceMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn table(&self, n: usize) -> &[f64] {
        &self.tables[n]
    }

    /// Index into table `n` selected by `d`.
    pub fn table_key(&self, d: &DecisionVector, n: usize) -> usize {
        self.positions[n]
            .iter()
            .enumerate()
            .fold(0usize, |key, (slot, &pos)| key | (usize::from(d.get(pos)) << slot))
    }

    /// Payoff `c_n` of decision `n` under `d`.
    pub fn contribution(&self, d: &DecisionVector, n: usize) -> f64 {
        self.tables[n][self.table_key(d, n)]
    }

    /// All contributions `c_1..c_N` under `d`.
    pub fn contributions(&self, d: &DecisionVector) -> Vec<f64> {
        (0..self.n()).map(|n| self.contribution(d, n)).collect()
    }

    /// Mean contribution over `subset`, taken in the given order.
    pub fn performance(&self, d: &DecisionVector, subset: &[usize]) -> Result<f64> {
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.n()) {
            return Err(Error::IndexOutOfRange { index: bad, n: self.n() });
        }
        mean(subset.iter().map(|&i| self.contribution(d, i))).ok_or(Error::EmptySubset)
    }

    /// Performance of the whole decision problem.
    pub fn full_performance(&self, d: &DecisionVector) -> f64 {
        mean((0..self.n()).map(|i| self.contribution(d, i))).expect("landscape has decisions")
    }

    /// Best vector and its performance; ties go to the smallest packed value.
    pub fn global_maximum(&self) -> Result<(DecisionVector, f64)> {
        self.optimum.ok_or(Error::Config(
            "global maximum not computed: normalization is disabled for this landscape".into(),
        ))
    }

    pub fn global_max(&self) -> Option<f64> {
        self.optimum.map(|(_, v)| v)
    }

    /// Exhaustive search in Gray-code order; a step flips one decision and only
    /// the rows it influences are looked up again.
    fn enumerate_optimum(&self) -> (DecisionVector, f64) {
        let n = self.n();
        // column j -> (row, slot of j within that row's key)
        let columns: Vec<Vec<(usize, usize)>> = (0..n)
            .map(|j| {
                (0..n)
                    .filter_map(|i| self.positions[i].iter().position(|&p| p == j).map(|slot| (i, slot)))
                    .collect()
            })
            .collect();
        let mut keys = vec![0usize; n];
        let mut contribs: Vec<f64> = (0..n).map(|i| self.tables[i][0]).collect();
        let mut bits = 0u64;
        let mut best_bits = 0u64;
        let mut best = mean(contribs.iter().copied()).expect("non-empty");
        for step in 1u64..(1u64 << n) {
            let j = step.trailing_zeros() as usize;
            bits ^= 1 << j;
            for &(row, slot) in &columns[j] {
                keys[row] ^= 1 << slot;
                contribs[row] = self.tables[row][keys[row]];
            }
            let value = mean(contribs.iter().copied()).expect("non-empty");
            if value > best || (value == best && bits < best_bits) {
                best = value;
                best_bits = bits;
            }
        }
        (DecisionVector::from_packed(best_bits, n), best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn row_set(m: &InfluenceMatrix, i: usize) -> Vec<usize> {
        m.row(i)
    }

    #[test]
    fn small_diag_has_five_full_blocks() {
        let m = build_pattern(PatternId::SmallDiag, &mut rng(0)).unwrap();
        for i in 0..15 {
            let b = i / 3;
            assert_eq!(row_set(&m, i), vec![3 * b, 3 * b + 1, 3 * b + 2]);
        }
    }

    #[test]
    fn small_ring_first_row() {
        let m = build_pattern(PatternId::SmallRing, &mut rng(0)).unwrap();
        assert_eq!(row_set(&m, 0), vec![0, 1, 2, 3, 4, 5]);
        // last block wraps around to the first
        assert_eq!(row_set(&m, 14), vec![0, 1, 2, 12, 13, 14]);
    }

    #[test]
    fn reciprocal_patterns() {
        let m = build_pattern(PatternId::SmallReciprocal, &mut rng(0)).unwrap();
        assert_eq!(row_set(&m, 0), vec![0, 1, 2, 3, 4, 12, 13]);
        assert_eq!(row_set(&m, 7), vec![3, 4, 6, 7, 8, 9, 10]);
        let m = build_pattern(PatternId::BigReciprocal, &mut rng(0)).unwrap();
        assert_eq!(row_set(&m, 0), vec![0, 1, 2, 3, 4, 5, 10]);
        assert_eq!(row_set(&m, 12), vec![0, 5, 10, 11, 12, 13, 14]);
    }

    #[test]
    fn big_ring_row() {
        let m = build_pattern(PatternId::BigRing, &mut rng(0)).unwrap();
        assert_eq!(row_set(&m, 11), (0..5).chain(10..15).collect::<Vec<_>>());
    }

    #[test]
    fn row_sums_match_declared_k() {
        for p in PatternId::BUILTIN {
            for seed in 0..5 {
                let m = build_pattern(p, &mut rng(seed)).unwrap();
                assert_eq!(m.uniform_k(), p.k(), "{p}");
                for i in 0..15 {
                    assert!(m.cell(i, i));
                }
            }
        }
    }

    #[test]
    fn random_patterns_extend_small_blocks() {
        let diag = build_pattern(PatternId::SmallDiag, &mut rng(0)).unwrap();
        for (p, extra) in [(PatternId::RandomK4, 2), (PatternId::RandomK6, 4)] {
            let m = build_pattern(p, &mut rng(7)).unwrap();
            for i in 0..15 {
                let mut outside = 0;
                for j in 0..15 {
                    if diag.cell(i, j) {
                        assert!(m.cell(i, j));
                    } else if m.cell(i, j) {
                        outside += 1;
                    }
                }
                assert_eq!(outside, extra);
            }
        }
        let a = build_pattern(PatternId::RandomK6, &mut rng(1)).unwrap();
        let b = build_pattern(PatternId::RandomK6, &mut rng(2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn text_format_roundtrip_and_errors() {
        let m = build_pattern(PatternId::BigRing, &mut rng(0)).unwrap();
        let parsed = InfluenceMatrix::parse(&m.to_text()).unwrap();
        assert_eq!(parsed.to_text(), m.to_text());
        assert_eq!(parsed.pattern(), PatternId::Custom);

        let err = InfluenceMatrix::parse("3\n110\n010\n101\n").unwrap();
        assert_eq!(err.uniform_k(), None);
        let err = InfluenceMatrix::parse("3\n110\n000\n001\n").unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err = InfluenceMatrix::parse("3\n11\n010\n001\n").unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        assert!(InfluenceMatrix::parse("2\n1x\n01\n").is_err());
        assert!(InfluenceMatrix::parse("2\n10\n").is_err());
    }

    #[test]
    fn builtin_pattern_rejects_wrong_row_sum() {
        let mut cells = vec![false; 225];
        for i in 0..15 {
            cells[i * 15 + i] = true;
        }
        let err = InfluenceMatrix::from_cells(15, cells, PatternId::SmallDiag).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn landscape_tables_sized_and_in_range() {
        let m = build_pattern(PatternId::SmallDiag, &mut rng(0)).unwrap();
        let land = generate_landscape(m, &mut rng(3)).unwrap();
        for i in 0..15 {
            assert_eq!(land.table(i).len(), 8);
            assert!(land.table(i).iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn same_seed_same_landscape() {
        let m = build_pattern(PatternId::RandomK4, &mut rng(0)).unwrap();
        let a = generate_landscape(m.clone(), &mut rng(11)).unwrap();
        let b = generate_landscape(m, &mut rng(11)).unwrap();
        for i in 0..15 {
            let ta: Vec<u64> = a.table(i).iter().map(|v| v.to_bits()).collect();
            let tb: Vec<u64> = b.table(i).iter().map(|v| v.to_bits()).collect();
            assert_eq!(ta, tb);
        }
        assert_eq!(a.global_maximum().unwrap(), b.global_maximum().unwrap());
    }

    #[test]
    fn enumeration_cap_enforced() {
        let n = 21;
        let mut cells = vec![false; n * n];
        for i in 0..n {
            cells[i * n + i] = true;
        }
        let m = InfluenceMatrix::from_cells(n, cells, PatternId::Custom).unwrap();
        let err = generate_landscape(m.clone(), &mut rng(0)).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { n: 21, cap: 20 }));
        assert!(err.to_string().contains("normalize = false"));
        let land = generate_landscape_with(m, &mut rng(0), None).unwrap();
        assert!(land.global_maximum().is_err());
        assert!(land.global_max().is_none());
    }

    #[test]
    fn contribution_locality_and_lookup() {
        let m = build_pattern(PatternId::SmallReciprocal, &mut rng(0)).unwrap();
        let land = generate_landscape(m, &mut rng(5)).unwrap();
        let mut r = rng(9);
        for _ in 0..50 {
            let d = DecisionVector::random(15, &mut r);
            for i in 0..15 {
                for j in 0..15 {
                    let e = d.flipped(j);
                    let before = land.contribution(&d, i);
                    let after = land.contribution(&e, i);
                    if land.matrix().cell(i, j) {
                        // a referenced flip moves to a different entry
                        assert_ne!(land.table_key(&d, i), land.table_key(&e, i));
                        assert_eq!(after, land.table(i)[land.table_key(&e, i)]);
                    } else {
                        assert_eq!(before.to_bits(), after.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn performance_mean_and_errors() {
        let m = InfluenceMatrix::parse("3\n100\n010\n001\n").unwrap();
        let land = Landscape::from_tables(
            m,
            vec![vec![0.2, 0.9], vec![0.4, 0.1], vec![0.6, 0.3]],
            Some(20),
        )
        .unwrap();
        let d = DecisionVector::zeros(3);
        assert!((land.performance(&d, &[0, 1, 2]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(land.performance(&d, &[1]).unwrap(), 0.4);
        assert!(matches!(land.performance(&d, &[]), Err(Error::EmptySubset)));
        assert!(matches!(
            land.performance(&d, &[3]),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn dominant_vector_is_argmax() {
        let m = build_pattern(PatternId::SmallRing, &mut rng(0)).unwrap();
        let base = generate_landscape_with(m.clone(), &mut rng(2), None).unwrap();
        let target = DecisionVector::from_packed(0b101_1001_0110_1101, 15);
        let mut tables: Vec<Vec<f64>> = (0..15).map(|i| base.table(i).to_vec()).collect();
        for (i, t) in tables.iter_mut().enumerate() {
            t[base.table_key(&target, i)] = 1.0;
        }
        let land = Landscape::from_tables(m, tables, Some(20)).unwrap();
        let (best, value) = land.global_maximum().unwrap();
        assert_eq!(best, target);
        assert_eq!(value, 1.0);
    }

    #[test]
    fn toy_landscape_matches_hand_table() {
        // N=4, each contribution depends on itself and its right neighbour (cyclic).
        let m = InfluenceMatrix::parse("4\n1100\n0110\n0011\n1001\n").unwrap();
        let tables = vec![
            vec![0.10, 0.50, 0.30, 0.70],
            vec![0.60, 0.20, 0.90, 0.40],
            vec![0.35, 0.15, 0.55, 0.05],
            vec![0.80, 0.25, 0.45, 0.65],
        ];
        let land = Landscape::from_tables(m, tables.clone(), Some(20)).unwrap();
        // hand enumeration of all 16 rows
        let mut best = (0u64, f64::MIN);
        for x in 0u64..16 {
            let bit = |i: usize| ((x >> i) & 1) as usize;
            let c0 = tables[0][bit(0) | bit(1) << 1];
            let c1 = tables[1][bit(1) | bit(2) << 1];
            let c2 = tables[2][bit(2) | bit(3) << 1];
            let c3 = tables[3][bit(0) | bit(3) << 1];
            let v = (c0 + c1 + c2 + c3) / 4.0;
            let d = DecisionVector::from_packed(x, 4);
            assert!((land.full_performance(&d) - v).abs() < 1e-15);
            if v > best.1 {
                best = (x, v);
            }
        }
        let (d, v) = land.global_maximum().unwrap();
        assert_eq!(d.packed(), best.0);
        assert!((v - best.1).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_smallest_packed_value() {
        let m = InfluenceMatrix::parse("2\n10\n01\n").unwrap();
        let land = Landscape::from_tables(m, vec![vec![0.5, 0.5], vec![0.3, 0.3]], Some(20)).unwrap();
        assert_eq!(land.global_maximum().unwrap().0.packed(), 0);
    }

    #[test]
    fn decision_vector_display_and_flip() {
        let mut d = DecisionVector::zeros(4);
        d.flip(1);
        d.set(3, true);
        assert_eq!(d.to_string(), "0101");
        assert_eq!(d.hamming(&DecisionVector::zeros(4)), 2);
        assert_eq!(DecisionVector::from_bits(&[false, true, false, true]), d);
    }

    #[test]
    fn pattern_names_roundtrip() {
        for p in PatternId::BUILTIN {
            assert_eq!(p.name().parse::<PatternId>().unwrap(), p);
        }
        assert!("nope".parse::<PatternId>().is_err());
    }
}
