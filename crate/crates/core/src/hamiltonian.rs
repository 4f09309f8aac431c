//! Ladder operators on crystal labels and symbolic Hamiltonian assembly.
//!
//! Every operator acts on labels with unit amplitude, or annihilates the
//! state when the shifted tuple is not the label set of any word. Hamiltonian
//! terms are products of such operators, so each surviving chain adds exactly
//! one to an integer coefficient. Numbers only enter in [`evaluate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::ops::Add;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::crystal::{enumerate_basis, BasisMap, CrystalLabels, ReductionState, Spin, SpinWord};
use crate::error::{CrystalError, Result};

/// Outcome of a ladder operator: `None` when the state is annihilated.
pub type LadderResult = Option<CrystalLabels>;

fn shifted(labels: &CrystalLabels, d_two_j3: i32, range: std::ops::RangeInclusive<usize>, d_two_j: i32) -> LadderResult {
    let (two_j3, mut two_j) = labels.clone().into_parts();
    for i in range {
        two_j[i - 2] += d_two_j;
    }
    CrystalLabels::checked(two_j3 + d_two_j3, two_j)
}

pub fn apply_j_plus(labels: &CrystalLabels) -> LadderResult {
    let n = labels.chain_len();
    shifted(labels, 2, n..=n, 0)
}

pub fn apply_j_minus(labels: &CrystalLabels) -> LadderResult {
    let n = labels.chain_len();
    shifted(labels, -2, n..=n, 0)
}

fn check_a_index(i: usize, n: usize) -> Result<()> {
    if (2..=n).contains(&i) {
        Ok(())
    } else {
        Err(CrystalError::OperatorIndex(format!("A_{i} needs 2 <= i <= {n}")))
    }
}

fn check_aik_index(i: usize, k: usize, n: usize) -> Result<()> {
    if (2..n).contains(&i) && (i + 1..=n).contains(&k) {
        Ok(())
    } else {
        Err(CrystalError::OperatorIndex(format!(
            "A_{{{i},{k}}} needs 2 <= i <= {} and i+1 <= k <= {n}",
            n - 1
        )))
    }
}

/// `A_i`: lowers `J^l` by one for every `i ≤ l ≤ N`.
pub fn apply_a(i: usize, labels: &CrystalLabels) -> Result<LadderResult> {
    let n = labels.chain_len();
    check_a_index(i, n)?;
    Ok(shifted(labels, 0, i..=n, -2))
}

pub fn apply_a_dagger(i: usize, labels: &CrystalLabels) -> Result<LadderResult> {
    let n = labels.chain_len();
    check_a_index(i, n)?;
    Ok(shifted(labels, 0, i..=n, 2))
}

/// `A_{i,k}`: lowers `J^l` by one for `i ≤ l ≤ k − 1`, leaving `J^N` alone
/// unless `k − 1 = N` (never, since `k ≤ N`).
pub fn apply_a_ik(i: usize, k: usize, labels: &CrystalLabels) -> Result<LadderResult> {
    check_aik_index(i, k, labels.chain_len())?;
    Ok(shifted(labels, 0, i..=k - 1, -2))
}

pub fn apply_a_ik_dagger(i: usize, k: usize, labels: &CrystalLabels) -> Result<LadderResult> {
    check_aik_index(i, k, labels.chain_len())?;
    Ok(shifted(labels, 0, i..=k - 1, 2))
}

/// One factor of an operator product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderOp {
    JPlus,
    JMinus,
    A(usize),
    ADagger(usize),
    Aik(usize, usize),
    AikDagger(usize, usize),
}

impl LadderOp {
    pub fn apply(&self, labels: &CrystalLabels) -> Result<LadderResult> {
        match *self {
            LadderOp::JPlus => Ok(apply_j_plus(labels)),
            LadderOp::JMinus => Ok(apply_j_minus(labels)),
            LadderOp::A(i) => apply_a(i, labels),
            LadderOp::ADagger(i) => apply_a_dagger(i, labels),
            LadderOp::Aik(i, k) => apply_a_ik(i, k, labels),
            LadderOp::AikDagger(i, k) => apply_a_ik_dagger(i, k, labels),
        }
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LadderOp::JPlus => write!(f, "J+"),
            LadderOp::JMinus => write!(f, "J-"),
            LadderOp::A(i) => write!(f, "A_{i}"),
            LadderOp::ADagger(i) => write!(f, "A†_{i}"),
            LadderOp::Aik(i, k) => write!(f, "A_{{{i},{k}}}"),
            LadderOp::AikDagger(i, k) => write!(f, "A†_{{{i},{k}}}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CouplingSymbol {
    Mu0,
    Eps,
    Gamma,
    Delta,
    Eta,
    Beta,
}

impl CouplingSymbol {
    pub const ALL: [CouplingSymbol; 6] = [
        CouplingSymbol::Mu0,
        CouplingSymbol::Eps,
        CouplingSymbol::Gamma,
        CouplingSymbol::Delta,
        CouplingSymbol::Eta,
        CouplingSymbol::Beta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CouplingSymbol::Mu0 => "MU0",
            CouplingSymbol::Eps => "EPS",
            CouplingSymbol::Gamma => "GAMMA",
            CouplingSymbol::Delta => "DELTA",
            CouplingSymbol::Eta => "ETA",
            CouplingSymbol::Beta => "BETA",
        }
    }
}

impl fmt::Display for CouplingSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CouplingSymbol {
    type Err = CrystalError;

    fn from_str(s: &str) -> Result<Self> {
        CouplingSymbol::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CrystalError::Parameter(format!("unknown coupling symbol {s:?}")))
    }
}

/// Coupling constants in units of `μ0` (`ħ = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CouplingValues {
    pub mu0: f64,
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub beta: f64,
}

impl CouplingValues {
    pub fn get(&self, symbol: CouplingSymbol) -> f64 {
        match symbol {
            CouplingSymbol::Mu0 => self.mu0,
            CouplingSymbol::Eps => self.eps,
            CouplingSymbol::Gamma => self.gamma,
            CouplingSymbol::Delta => self.delta,
            CouplingSymbol::Eta => self.eta,
            CouplingSymbol::Beta => self.beta,
        }
    }

    pub fn set(&mut self, symbol: CouplingSymbol, value: f64) {
        let slot = match symbol {
            CouplingSymbol::Mu0 => &mut self.mu0,
            CouplingSymbol::Eps => &mut self.eps,
            CouplingSymbol::Gamma => &mut self.gamma,
            CouplingSymbol::Delta => &mut self.delta,
            CouplingSymbol::Eta => &mut self.eta,
            CouplingSymbol::Beta => &mut self.beta,
        };
        *slot = value;
    }

    pub fn is_finite(&self) -> bool {
        CouplingSymbol::ALL.iter().all(|&s| self.get(s).is_finite())
    }
}

impl Add for CouplingValues {
    type Output = CouplingValues;

    fn add(self, rhs: CouplingValues) -> CouplingValues {
        let mut out = self;
        for s in CouplingSymbol::ALL {
            out.set(s, self.get(s) + rhs.get(s));
        }
        out
    }
}

/// Which Hamiltonian term generated a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermId {
    H1,
    H2,
    H3,
    H5,
    H6,
    Hamming,
}

/// Forward half (lowers `J3`) or adjoint half (raises `J3`) of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Forward,
    Adjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfSelection {
    Both,
    ForwardOnly,
    AdjointOnly,
}

impl HalfSelection {
    fn admits(self, half: Half) -> bool {
        match self {
            HalfSelection::Both => true,
            HalfSelection::ForwardOnly => half == Half::Forward,
            HalfSelection::AdjointOnly => half == Half::Adjoint,
        }
    }
}

/// An operator product as written; factors are applied right to left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorChain {
    pub term: TermId,
    pub symbol: CouplingSymbol,
    pub half: Half,
    pub ops: Vec<LadderOp>,
}

impl OperatorChain {
    fn new(term: TermId, symbol: CouplingSymbol, half: Half, ops: Vec<LadderOp>) -> Self {
        OperatorChain { term, symbol, half, ops }
    }

    /// Applies the product to `labels`; any annihilated intermediate kills it.
    pub fn apply(&self, labels: &CrystalLabels) -> Result<LadderResult> {
        let mut state = labels.clone();
        for op in self.ops.iter().rev() {
            match op.apply(&state)? {
                Some(next) => state = next,
                None => return Ok(None),
            }
        }
        Ok(Some(state))
    }
}

impl fmt::Display for OperatorChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pos, op) in self.ops.iter().enumerate() {
            if pos > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

/// Every operator product of `H_I` for a chain of length `n`, with the
/// couplings taken independent of the site indices:
/// `H_I = ε(H3 + H5) + γ H1 + δ H2 + η H6`.
pub fn model_chains(n: usize) -> Vec<OperatorChain> {
    use CouplingSymbol::*;
    use Half::*;
    use LadderOp::*;

    let mut chains = vec![
        OperatorChain::new(TermId::H2, Delta, Forward, vec![JMinus]),
        OperatorChain::new(TermId::H2, Delta, Adjoint, vec![JPlus]),
    ];
    for i in 2..n {
        for k in i + 1..=n {
            chains.push(OperatorChain::new(TermId::H1, Gamma, Forward, vec![Aik(i, k), JMinus]));
            chains.push(OperatorChain::new(TermId::H1, Gamma, Adjoint, vec![JPlus, AikDagger(i, k)]));
        }
    }
    for i in 2..=n {
        chains.push(OperatorChain::new(TermId::H3, Eps, Forward, vec![A(i), JMinus]));
        chains.push(OperatorChain::new(TermId::H3, Eps, Adjoint, vec![JPlus, ADagger(i)]));
    }
    for m in 2..=n {
        chains.push(OperatorChain::new(TermId::H5, Eps, Forward, vec![JMinus, ADagger(m)]));
        chains.push(OperatorChain::new(TermId::H5, Eps, Adjoint, vec![A(m), JPlus]));
    }
    for i in 2..n.saturating_sub(1) {
        for k in i + 1..n {
            chains.push(OperatorChain::new(
                TermId::H6,
                Eta,
                Forward,
                vec![Aik(i, k), JMinus, ADagger(k + 1)],
            ));
            chains.push(OperatorChain::new(
                TermId::H6,
                Eta,
                Adjoint,
                vec![AikDagger(i, k), A(k + 1), JPlus],
            ));
        }
    }
    chains
}

/// Multiplicity of each generating term at each matrix position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermProvenance(BTreeMap<(usize, usize), BTreeMap<TermId, u32>>);

impl TermProvenance {
    fn record(&mut self, row: usize, col: usize, term: TermId) {
        *self.0.entry((row, col)).or_default().entry(term).or_default() += 1;
    }

    pub fn at(&self, row: usize, col: usize) -> Option<&BTreeMap<TermId, u32>> {
        self.0.get(&(row, col))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeMap<TermId, u32>)> {
        self.0.iter()
    }
}

/// Exact, parameter-free Hamiltonian structure on the canonical basis.
///
/// `H = μ0·D + Σ_s value(s)·K_s` where `D[i][i] = 2·J3(i)` and every `K_s` is a
/// symmetric nonnegative integer matrix with zero diagonal, stored as its
/// nonzero `(row, col) → multiplicity` entries.
#[derive(Debug, Clone)]
pub struct SymbolicHamiltonian {
    basis: BasisMap,
    diagonal: Vec<i32>,
    coefficients: BTreeMap<CouplingSymbol, BTreeMap<(usize, usize), u32>>,
    provenance: TermProvenance,
}

impl SymbolicHamiltonian {
    fn empty(basis: BasisMap) -> Self {
        let diagonal = basis.states().iter().map(|(_, l)| l.two_j3()).collect();
        SymbolicHamiltonian {
            basis,
            diagonal,
            coefficients: BTreeMap::new(),
            provenance: TermProvenance::default(),
        }
    }

    fn add(&mut self, row: usize, col: usize, symbol: CouplingSymbol, term: TermId) {
        *self
            .coefficients
            .entry(symbol)
            .or_default()
            .entry((row, col))
            .or_default() += 1;
        self.provenance.record(row, col, term);
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &BasisMap {
        &self.basis
    }

    /// `2·J3` of every basis state, in canonical order.
    pub fn diagonal(&self) -> &[i32] {
        &self.diagonal
    }

    pub fn coefficient(&self, symbol: CouplingSymbol, row: usize, col: usize) -> u32 {
        self.coefficients
            .get(&symbol)
            .and_then(|m| m.get(&(row, col)))
            .copied()
            .unwrap_or(0)
    }

    /// Nonzero entries of `K_symbol`.
    pub fn entries(&self, symbol: CouplingSymbol) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        self.coefficients
            .get(&symbol)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&pos, &c)| (pos, c)))
    }

    /// Symbols with at least one nonzero off-diagonal coefficient.
    pub fn active_symbols(&self) -> Vec<CouplingSymbol> {
        self.coefficients
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(&s, _)| s)
            .collect()
    }

    pub fn provenance(&self) -> &TermProvenance {
        &self.provenance
    }

    /// Dense integer copy of `K_symbol`.
    pub fn coefficient_matrix(&self, symbol: CouplingSymbol) -> DMatrix<u32> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for ((r, c), v) in self.entries(symbol) {
            m[(r, c)] = v;
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.coefficients
            .values()
            .all(|m| m.iter().all(|(&(r, c), v)| m.get(&(c, r)) == Some(v)))
    }

    /// Text dump: one `row col SYMBOL value` line per nonzero entry, 1-based,
    /// sorted by `(row, col, symbol)`; diagonal lines carry `MU0 <2J3>`.
    pub fn dump(&self) -> String {
        let mut lines: BTreeMap<(usize, usize, CouplingSymbol), i64> = BTreeMap::new();
        for (i, &d) in self.diagonal.iter().enumerate() {
            if d != 0 {
                lines.insert((i, i, CouplingSymbol::Mu0), d as i64);
            }
        }
        for (&symbol, m) in &self.coefficients {
            for (&(r, c), &v) in m {
                lines.insert((r, c, symbol), v as i64);
            }
        }
        let mut out = String::new();
        for ((r, c, s), v) in lines {
            writeln!(out, "{} {} {} {}", r + 1, c + 1, s, v).unwrap();
        }
        out
    }
}

/// Model Hamiltonian `H0 + H_I` for chains of length `n`.
pub fn build_model(n: usize) -> Result<SymbolicHamiltonian> {
    build_model_from(enumerate_basis(n)?, HalfSelection::Both)
}

/// Model Hamiltonian restricted to the requested halves of each term.
pub fn build_model_from(basis: BasisMap, selection: HalfSelection) -> Result<SymbolicHamiltonian> {
    let chains: Vec<OperatorChain> = model_chains(basis.n())
        .into_iter()
        .filter(|c| selection.admits(c.half))
        .collect();
    let mut sym = SymbolicHamiltonian::empty(basis);
    for col in 0..sym.dim() {
        let labels = sym.basis.labels(col).clone();
        for chain in &chains {
            if let Some(out) = chain.apply(&labels)? {
                let row = sym
                    .basis
                    .lookup(&out)
                    .expect("valid labels are always in the basis");
                sym.add(row, col, chain.symbol, chain.term);
            }
        }
    }
    if selection == HalfSelection::Both {
        assert!(sym.is_symmetric(), "model Hamiltonian must be symmetric");
    }
    Ok(sym)
}

/// Baseline coupling every pair of words at Hamming distance one with `β`.
///
/// The `μ0` diagonal is kept; evaluate with `mu0 = 0` to drop it.
pub fn build_hamming(n: usize) -> Result<SymbolicHamiltonian> {
    let mut sym = SymbolicHamiltonian::empty(enumerate_basis(n)?);
    for col in 0..sym.dim() {
        let word = sym.basis.word(col).clone();
        for pos in 0..n {
            let row = sym
                .basis
                .index_of(&word.flipped_at(pos))
                .expect("every word is in the basis");
            sym.add(row, col, CouplingSymbol::Beta, TermId::Hamming);
        }
    }
    Ok(sym)
}

/// Dense numeric Hamiltonian in units of `μ0`.
pub fn evaluate(sym: &SymbolicHamiltonian, values: &CouplingValues) -> DMatrix<f64> {
    let dim = sym.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, &d) in sym.diagonal.iter().enumerate() {
        h[(i, i)] = values.mu0 * d as f64;
    }
    for (&symbol, m) in &sym.coefficients {
        let v = values.get(symbol);
        for (&(r, c), &k) in m {
            h[(r, c)] += v * k as f64;
        }
    }
    h
}

/// Basis states reachable from `state` through any nonzero off-diagonal coefficient.
pub fn allowed_transitions(sym: &SymbolicHamiltonian, state: usize) -> Result<BTreeSet<usize>> {
    if state >= sym.dim() {
        return Err(CrystalError::StateIndex { index: state, dim: sym.dim() });
    }
    Ok(sym
        .coefficients
        .values()
        .flat_map(|m| m.iter())
        .filter(|(&(r, c), &v)| c == state && r != state && v > 0)
        .map(|(&(r, _), _)| r)
        .collect())
}

/// Free-nucleotide counts around a site, before and after flipping it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MutationContext {
    /// Uncontracted purines strictly left of the site.
    pub r_l: u32,
    /// Uncontracted pyrimidines strictly right of the site.
    pub y_r: u32,
    pub r_in: u32,
    pub y_in: u32,
    pub r_fi: u32,
    pub y_fi: u32,
}

/// Context of the flip at `position` (1-based).
pub fn mutation_context(word: &SpinWord, position: usize) -> Result<MutationContext> {
    let n = word.len();
    if !(1..=n).contains(&position) {
        return Err(CrystalError::Position { position, n });
    }
    let spins = word.spins();
    let r_l = ReductionState::reduce(&spins[..position - 1]).b;
    let y_r = ReductionState::reduce(&spins[position..]).a;
    let ctx = match spins[position - 1] {
        // R → Y: the site's R joins the free purines before the flip.
        Spin::R => MutationContext {
            r_l,
            y_r,
            r_in: r_l + 1,
            y_in: y_r,
            r_fi: r_l,
            y_fi: y_r + 1,
        },
        Spin::Y => MutationContext {
            r_l,
            y_r,
            r_in: r_l,
            y_in: y_r + 1,
            r_fi: r_l + 1,
            y_fi: y_r,
        },
    };
    Ok(ctx)
}
