//! Exact diagonalization and time-averaged transition probabilities.
//!
//! With `H = V·diag(λ)·Vᵀ` and a real orthogonal `V`, the amplitude
//! `⟨f|e^{−iHt}|i⟩ = Σ_m c_m e^{−iλ_m t}` where `c_m = V[f][m]·V[i][m]`. Every
//! observable below is a closed form in the `c_m` and `λ_m`; nothing is
//! integrated numerically.

// Negated comparisons below also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};

use crate::eigen::symmetric_eigen;

use crate::error::{CrystalError, Result};

/// Relative tolerance for the symmetry check and the decomposition residuals.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
/// Eigenvalues closer than this fraction of `max|λ|` are treated as degenerate.
pub const DEFAULT_DEGENERACY_REL_TOL: f64 = 1e-9;
/// Below this argument `sin(x)/x` is evaluated by its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Column `m` is the eigenvector of `eigenvalues[m]`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.amax()
    }

    /// `V·diag(λ)·Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        v * DMatrix::from_diagonal(&self.eigenvalues) * v.transpose()
    }

    /// Overlap weights `c_m = V[f][m]·V[i][m]` for one pair of basis states.
    pub fn overlaps(&self, initial: usize, target: usize) -> DVector<f64> {
        self.eigenvectors
            .row(target)
            .component_mul(&self.eigenvectors.row(initial))
            .transpose()
    }

    /// All overlaps at once: row `f` holds `c_m` for the pair `(initial, f)`.
    fn overlap_matrix(&self, initial: usize) -> DMatrix<f64> {
        let row = self.eigenvectors.row(initial).clone_owned();
        let mut c = self.eigenvectors.clone();
        for mut r in c.row_iter_mut() {
            r.component_mul_assign(&row);
        }
        c
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.dim() {
            Ok(())
        } else {
            Err(CrystalError::StateIndex { index, dim: self.dim() })
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Diagonalizes `h`.
///
/// `tol` bounds the asymmetry accepted, relative to `max|H_ij|`. Eigenvalues
/// come out ascending and each eigenvector has its largest-magnitude
/// component (first one on ties) nonnegative.
pub fn eigendecompose(h: &DMatrix<f64>, tol: f64) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(CrystalError::Dimension { expected: h.nrows(), got: h.ncols() });
    }
    let dim = h.nrows();
    let scale = max_abs(h);
    let asym = max_abs(&(h - h.transpose()));
    if asym > tol * scale {
        return Err(CrystalError::NotSymmetric(asym));
    }
    if dim == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (h + h.transpose()) * 0.5;
    let (values, vectors) = symmetric_eigen(&sym).ok_or(CrystalError::NoConvergence)?;
    if values.iter().any(|x| !x.is_finite()) {
        return Err(CrystalError::NoConvergence);
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&m| values[m]));
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).clone_owned();
        let lead = col.iamax();
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `sin(x)/x`, with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `|⟨f|e^{−iHt}|i⟩|²`.
///
/// # Panics
/// If `initial` or `target` is not a basis index.
pub fn transition_probability(spec: &SpectralDecomposition, initial: usize, target: usize, t: f64) -> f64 {
    let c = spec.overlaps(initial, target);
    let (re, im) = c
        .iter()
        .zip(spec.eigenvalues.iter())
        .fold((0.0, 0.0), |(re, im), (&cm, &lm)| {
            let (s, co) = (lm * t).sin_cos();
            (re + cm * co, im + cm * s)
        });
    re * re + im * im
}

/// Time-averaged transition probabilities from one initial basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProfile {
    pub initial: usize,
    /// Averaging horizon in units of `1/μ0`; `f64::INFINITY` for the long-time limit.
    pub horizon: f64,
    pub p_avg: Vec<f64>,
}

impl TransitionProfile {
    pub fn total(&self) -> f64 {
        self.p_avg.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &TransitionProfile) -> f64 {
        self.p_avg
            .iter()
            .zip(&other.p_avg)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

// Products of rounding noise can dip a hair below zero.
fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// `⟨p_if⟩_T = (1/T)∫₀ᵀ p_if(t) dt = Σ_{m,n} c_m c_n sinc((λ_m − λ_n)T)` for every `f`.
pub fn time_averaged_profile(spec: &SpectralDecomposition, initial: usize, horizon: f64) -> Result<TransitionProfile> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CrystalError::Horizon(horizon));
    }
    spec.check_index(initial)?;
    let dim = spec.dim();
    let lambda = &spec.eigenvalues;
    let kernel = DMatrix::from_fn(dim, dim, |m, n| sinc((lambda[m] - lambda[n]) * horizon));
    let c = spec.overlap_matrix(initial);
    let ck = &c * kernel;
    let p_avg = (0..dim)
        .map(|f| clamp_probability(ck.row(f).dot(&c.row(f))))
        .collect();
    Ok(TransitionProfile { initial, horizon, p_avg })
}

pub fn default_degeneracy_tol(spec: &SpectralDecomposition) -> f64 {
    DEFAULT_DEGENERACY_REL_TOL * spec.max_abs_eigenvalue()
}

/// Groups of consecutive (ascending) eigenvalue indices whose gaps are at most `tol`.
pub fn eigenvalue_clusters(spec: &SpectralDecomposition, tol: f64) -> Vec<std::ops::Range<usize>> {
    let lambda = &spec.eigenvalues;
    let mut clusters = Vec::new();
    let mut start = 0;
    for m in 1..=lambda.len() {
        if m == lambda.len() || lambda[m] - lambda[m - 1] > tol {
            clusters.push(start..m);
            start = m;
        }
    }
    clusters
}

/// Long-time limit of the average: `Σ_C (Σ_{m∈C} c_m)²` over degenerate clusters `C`.
pub fn infinite_time_average(spec: &SpectralDecomposition, initial: usize, degeneracy_tol: f64) -> Result<TransitionProfile> {
    if !(degeneracy_tol >= 0.0) {
        return Err(CrystalError::Parameter(format!("degeneracy tolerance {degeneracy_tol}")));
    }
    spec.check_index(initial)?;
    let clusters = eigenvalue_clusters(spec, degeneracy_tol);
    let c = spec.overlap_matrix(initial);
    let p_avg = c
        .row_iter()
        .map(|row| {
            let p: f64 = clusters
                .iter()
                .map(|range| {
                    let s: f64 = row.columns_range(range.clone()).sum();
                    s * s
                })
                .sum();
            clamp_probability(p)
        })
        .collect();
    Ok(TransitionProfile { initial, horizon: f64::INFINITY, p_avg })
}

/// Geometric horizon search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableHorizonSearch {
    pub rel_tol: f64,
    pub growth: f64,
    pub start: f64,
    pub cap: f64,
}

impl Default for StableHorizonSearch {
    fn default() -> Self {
        StableHorizonSearch {
            rel_tol: 1e-3,
            growth: 2.0,
            start: 10.0,
            cap: 1e9,
        }
    }
}

/// Smallest tested `T` in `start·growth^j` with
/// `max_f |⟨p⟩_T − ⟨p⟩_{growth·T}| ≤ rel_tol`, and the profile at that `T`.
pub fn find_stable_horizon(
    spec: &SpectralDecomposition,
    initial: usize,
    search: &StableHorizonSearch,
) -> Result<TransitionProfile> {
    if !(search.rel_tol > 0.0) {
        return Err(CrystalError::Parameter(format!("rel_tol must be positive, got {}", search.rel_tol)));
    }
    if !(search.growth > 1.0) {
        return Err(CrystalError::Parameter(format!("growth must exceed 1, got {}", search.growth)));
    }
    if !(search.start > 0.0) {
        return Err(CrystalError::Horizon(search.start));
    }
    let mut t = search.start;
    let mut current = time_averaged_profile(spec, initial, t)?;
    while t <= search.cap {
        let next = time_averaged_profile(spec, initial, t * search.growth)?;
        if current.max_abs_diff(&next) <= search.rel_tol {
            return Ok(current);
        }
        t *= search.growth;
        current = next;
    }
    Err(CrystalError::HorizonCap { cap: search.cap })
}

/// [`find_stable_horizon`] with the given tolerance and growth, default start and cap.
pub fn find_stable_t(spec: &SpectralDecomposition, initial: usize, rel_tol: f64, growth: f64) -> Result<f64> {
    let search = StableHorizonSearch { rel_tol, growth, ..Default::default() };
    find_stable_horizon(spec, initial, &search).map(|p| p.horizon)
}
