//! Words over {R, Y} and their crystal-basis labels.
//!
//! A word of length `N` is a vector of the `N`-fold tensor product of the
//! spin-1/2 crystal. It is identified by `2·J3 = #R − #Y` together with the
//! irrep labels `2·J^i` (`i = 2..=N`) of every prefix of length `i`. All label
//! arithmetic is done on doubled integers, so half-integer spins never show up
//! as fractions.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CrystalError, Result};

/// Smallest admissible chain length.
pub const MIN_CHAIN_LEN: usize = 2;
/// Largest chain length accepted by the dense pipeline (dimension `2^14`).
pub const MAX_CHAIN_LEN: usize = 14;

/// A single site: purine `R` (spin up) or pyrimidine `Y` (spin down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    R,
    Y,
}

impl Spin {
    /// Doubled spin projection: `+1` for `R`, `−1` for `Y`.
    pub fn two_m(self) -> i32 {
        match self {
            Spin::R => 1,
            Spin::Y => -1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::R => Spin::Y,
            Spin::Y => Spin::R,
        }
    }

    fn from_char(c: char) -> Option<Spin> {
        match c {
            'R' | 'r' | '1' | '+' | '↑' => Some(Spin::R),
            'Y' | 'y' | '0' | '-' | '↓' => Some(Spin::Y),
            _ => None,
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Spin::R => '↑',
            Spin::Y => '↓',
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::R => "R",
            Spin::Y => "Y",
        })
    }
}

/// An ordered chain of spins, `MIN_CHAIN_LEN ≤ len ≤ MAX_CHAIN_LEN`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinWord(Vec<Spin>);

impl SpinWord {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        check_chain_len(spins.len())?;
        Ok(SpinWord(spins))
    }

    /// Builds the word whose bit `i` (from the left, most significant first)
    /// is `1` for `R`.
    pub fn from_bits(n: usize, bits: u32) -> Result<Self> {
        check_chain_len(n)?;
        let spins = (0..n)
            .map(|i| {
                if bits >> (n - 1 - i) & 1 == 1 {
                    Spin::R
                } else {
                    Spin::Y
                }
            })
            .collect();
        Ok(SpinWord(spins))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.0
    }

    pub fn count(&self, spin: Spin) -> usize {
        self.0.iter().filter(|&&s| s == spin).count()
    }

    /// The word with the spin at `position` (0-based) flipped.
    pub fn flipped_at(&self, position: usize) -> SpinWord {
        let mut spins = self.0.clone();
        spins[position] = spins[position].flipped();
        SpinWord(spins)
    }

    /// Arrow rendering, e.g. `↑↓↓`.
    pub fn arrows(&self) -> String {
        self.0.iter().map(|s| s.arrow()).collect()
    }
}

impl fmt::Display for SpinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for SpinWord {
    type Err = CrystalError;

    /// Accepts `R`/`Y`, `1`/`0`, `+`/`-` and arrows.
    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .trim()
            .chars()
            .map(|c| Spin::from_char(c).ok_or(CrystalError::BadSymbol(c)))
            .collect::<Result<Vec<_>>>()?;
        SpinWord::new(spins)
    }
}

fn check_chain_len(n: usize) -> Result<()> {
    if (MIN_CHAIN_LEN..=MAX_CHAIN_LEN).contains(&n) {
        Ok(())
    } else {
        Err(CrystalError::ChainLength {
            n,
            min: MIN_CHAIN_LEN,
            max: MAX_CHAIN_LEN,
        })
    }
}

/// Crystal labels `(2·J3; 2·J^2, …, 2·J^N)`.
///
/// Only constructible through validation, so every value in circulation
/// satisfies the label invariants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrystalLabels {
    two_j3: i32,
    /// `two_j[0]` is `2·J^2`, `two_j[N − 2]` is `2·J^N`.
    two_j: Vec<i32>,
}

impl CrystalLabels {
    pub fn new(two_j3: i32, two_j: Vec<i32>) -> Result<Self> {
        if validate_labels(two_j3, &two_j) {
            Ok(CrystalLabels { two_j3, two_j })
        } else {
            Err(CrystalError::InvalidLabels { two_j3, two_j })
        }
    }

    /// Same as [`CrystalLabels::new`] but reports invalid tuples as `None`.
    pub fn checked(two_j3: i32, two_j: Vec<i32>) -> Option<Self> {
        validate_labels(two_j3, &two_j).then_some(CrystalLabels { two_j3, two_j })
    }

    pub fn two_j3(&self) -> i32 {
        self.two_j3
    }

    /// All `2·J^i`, starting at `i = 2`.
    pub fn two_j(&self) -> &[i32] {
        &self.two_j
    }

    /// `2·J^i` for `2 ≤ i ≤ N`.
    pub fn two_j_at(&self, i: usize) -> i32 {
        self.two_j[i - 2]
    }

    /// `2·J^N`, the irrep label.
    pub fn two_j_total(&self) -> i32 {
        *self.two_j.last().expect("labels have at least one entry")
    }

    pub fn chain_len(&self) -> usize {
        self.two_j.len() + 1
    }

    /// Number of contracted RY couples, `(N − 2·J^N) / 2`.
    pub fn contracted_couples(&self) -> usize {
        (self.chain_len() - self.two_j_total() as usize) / 2
    }

    /// Sort key of the canonical basis order: `(2J^N, …, 2J^2, 2J3)`.
    pub fn canonical_key(&self) -> Vec<i32> {
        let mut key: Vec<i32> = self.two_j.iter().rev().copied().collect();
        key.push(self.two_j3);
        key
    }

    pub(crate) fn into_parts(self) -> (i32, Vec<i32>) {
        (self.two_j3, self.two_j)
    }
}

impl fmt::Display for CrystalLabels {
    /// `J3=<p>/2; J^2..J^N=<q2>/2,...,<qN>/2`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J3={}/2; J^2..J^N=", self.two_j3)?;
        for (pos, q) in self.two_j.iter().enumerate() {
            if pos > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}/2")?;
        }
        Ok(())
    }
}

impl FromStr for CrystalLabels {
    type Err = CrystalError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CrystalError::BadLabelText(s.to_string());
        let half = |t: &str| -> Result<i32> {
            t.trim()
                .strip_suffix("/2")
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(bad)
        };
        let (j3_part, j_part) = s.split_once(';').ok_or_else(bad)?;
        let two_j3 = half(j3_part.trim().strip_prefix("J3=").ok_or_else(bad)?)?;
        let two_j = j_part
            .trim()
            .strip_prefix("J^2..J^N=")
            .ok_or_else(bad)?
            .split(',')
            .map(half)
            .collect::<Result<Vec<_>>>()?;
        CrystalLabels::new(two_j3, two_j)
    }
}

/// Running prefix reduction: uncancelled `Y` count `a`, uncancelled `R` count `b`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReductionState {
    pub a: u32,
    pub b: u32,
}

impl ReductionState {
    /// Consumes one symbol. A `Y` following an uncancelled `R` contracts with it.
    pub fn push(&mut self, spin: Spin) {
        match spin {
            Spin::R => self.b += 1,
            Spin::Y if self.b > 0 => self.b -= 1,
            Spin::Y => self.a += 1,
        }
    }

    /// `2·J` of the scanned prefix.
    pub fn two_j(&self) -> i32 {
        (self.a + self.b) as i32
    }

    pub fn reduce<'a>(spins: impl IntoIterator<Item = &'a Spin>) -> Self {
        let mut state = ReductionState::default();
        for &s in spins {
            state.push(s);
        }
        state
    }
}

/// True iff the tuple is the label set of some word.
pub fn validate_labels(two_j3: i32, two_j: &[i32]) -> bool {
    let Some((&first, _)) = two_j.split_first() else {
        return false;
    };
    if first != 0 && first != 2 {
        return false;
    }
    if two_j.windows(2).any(|w| (w[1] - w[0]).abs() != 1) {
        return false;
    }
    if two_j.iter().any(|&q| q < 0) {
        return false;
    }
    let total = *two_j.last().unwrap();
    two_j3.abs() <= total && (total - two_j3).rem_euclid(2) == 0
}

pub fn labels_from_word(word: &SpinWord) -> CrystalLabels {
    let mut state = ReductionState::default();
    let mut two_j = Vec::with_capacity(word.len() - 1);
    for (pos, &spin) in word.spins().iter().enumerate() {
        state.push(spin);
        if pos >= 1 {
            two_j.push(state.two_j());
        }
    }
    let two_j3 = word.spins().iter().map(|s| s.two_m()).sum();
    debug_assert!(validate_labels(two_j3, &two_j));
    CrystalLabels { two_j3, two_j }
}

/// Inverse of [`labels_from_word`], reconstructing the word right to left.
pub fn word_from_labels(labels: &CrystalLabels) -> SpinWord {
    let n = labels.chain_len();
    let total = labels.two_j_total();
    let mut b = (total + labels.two_j3) / 2;
    let mut a = (total - labels.two_j3) / 2;
    let mut spins = vec![Spin::R; n];
    // Position `i` (1-based) for i = N..=3 is decided by comparing 2J^{i-1}
    // with 2J^i; the first two letters come from the remaining (a, b) state.
    for i in (3..=n).rev() {
        let here = labels.two_j_at(i);
        let before = labels.two_j_at(i - 1);
        spins[i - 1] = if before == here + 1 {
            b += 1;
            Spin::Y
        } else if b >= 1 {
            b -= 1;
            Spin::R
        } else {
            a -= 1;
            Spin::Y
        };
    }
    // Prefix of length two: (a, b) is (0, 0) for RY, and otherwise
    // spells out the letters directly: YY (2, 0), YR (1, 1), RR (0, 2).
    let (first, second) = match (a, b) {
        (0, 0) => (Spin::R, Spin::Y),
        (2, 0) => (Spin::Y, Spin::Y),
        (1, 1) => (Spin::Y, Spin::R),
        (0, 2) => (Spin::R, Spin::R),
        other => unreachable!("validated labels leave a two-letter prefix, got {other:?}"),
    };
    spins[0] = first;
    spins[1] = second;
    SpinWord(spins)
}

/// Number of positions where the two words differ.
pub fn hamming_distance(w1: &SpinWord, w2: &SpinWord) -> Result<usize> {
    if w1.len() != w2.len() {
        return Err(CrystalError::LengthMismatch(w1.len(), w2.len()));
    }
    Ok(w1
        .spins()
        .iter()
        .zip(w2.spins())
        .filter(|(x, y)| x != y)
        .count())
}

/// All `2^N` words of a given length in canonical order, with label lookup.
#[derive(Debug, Clone)]
pub struct BasisMap {
    n: usize,
    states: Vec<(SpinWord, CrystalLabels)>,
    by_labels: HashMap<CrystalLabels, usize>,
    by_word: HashMap<SpinWord, usize>,
}

impl BasisMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[(SpinWord, CrystalLabels)] {
        &self.states
    }

    pub fn word(&self, index: usize) -> &SpinWord {
        &self.states[index].0
    }

    pub fn labels(&self, index: usize) -> &CrystalLabels {
        &self.states[index].1
    }

    pub fn lookup(&self, labels: &CrystalLabels) -> Option<usize> {
        self.by_labels.get(labels).copied()
    }

    pub fn index_of(&self, word: &SpinWord) -> Option<usize> {
        self.by_word.get(word).copied()
    }
}

pub fn enumerate_basis(n: usize) -> Result<BasisMap> {
    check_chain_len(n)?;
    let mut states: Vec<(SpinWord, CrystalLabels)> = (0..1u32 << n)
        .map(|bits| {
            let word = SpinWord::from_bits(n, bits).expect("length checked");
            let labels = labels_from_word(&word);
            (word, labels)
        })
        .collect();
    states.sort_by_cached_key(|(_, labels)| labels.canonical_key());
    let by_labels = states
        .iter()
        .enumerate()
        .map(|(i, (_, l))| (l.clone(), i))
        .collect();
    let by_word = states
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (w.clone(), i))
        .collect();
    Ok(BasisMap {
        n,
        states,
        by_labels,
        by_word,
    })
}
