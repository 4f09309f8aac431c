//! Rank ordering of transition profiles, Yule/Zipf fits and plateaux diagnostics.
//!
//! The Yule law `f(R) = a·R^k·b^R` is linear in `(ln a, k, ln b)` after taking
//! logs, so the primary fit is an ordinary least-squares solve. Zipf is the
//! nested case `b = 1`. A damped least-squares pass can then refine the
//! parameters against linear-space residuals.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::crystal::{hamming_distance, BasisMap, SpinWord};
use crate::dynamics::TransitionProfile;
use crate::error::{CrystalError, Result};

/// Values at or below this are treated as zero (excluded from fits).
pub const ZERO_FLOOR: f64 = 1e-13;

const REFINE_MAX_ITER: usize = 500;
const REFINE_STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub index: usize,
    pub value: f64,
}

/// Profile values sorted in decreasing order, ties broken by basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedDistribution {
    pub entries: Vec<RankedEntry>,
    pub include_self: bool,
}

impl RankedDistribution {
    /// Builds a distribution from `(index, value)` pairs, ranking them.
    pub fn from_values(values: impl IntoIterator<Item = (usize, f64)>, include_self: bool) -> Self {
        let mut pairs: Vec<(usize, f64)> = values.into_iter().collect();
        pairs.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let entries = pairs
            .into_iter()
            .enumerate()
            .map(|(pos, (index, value))| RankedEntry { rank: pos + 1, index, value })
            .collect();
        RankedDistribution { entries, include_self }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Number of values above [`ZERO_FLOOR`].
    pub fn positive_count(&self) -> usize {
        self.entries.iter().filter(|e| e.value > ZERO_FLOOR).count()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].value >= w[1].value)
    }
}

pub fn rank_order(profile: &TransitionProfile, include_self: bool) -> RankedDistribution {
    let values = profile
        .p_avg
        .iter()
        .copied()
        .enumerate()
        .filter(|&(f, _)| include_self || f != profile.initial);
    RankedDistribution::from_values(values, include_self)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Yule,
    Zipf,
}

impl FitModel {
    fn min_points(self) -> usize {
        match self {
            FitModel::Yule => 4,
            FitModel::Zipf => 3,
        }
    }

    fn n_params(self) -> usize {
        match self {
            FitModel::Yule => 3,
            FitModel::Zipf => 2,
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::Yule => "yule",
            FitModel::Zipf => "zipf",
        })
    }
}

/// Residual space the parameters were optimized in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSpace {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub a: f64,
    pub k: f64,
    /// Always 1 for Zipf.
    pub b: f64,
    pub sse_log: f64,
    pub sse_linear: f64,
    /// Coefficient of determination of the linear-space predictions.
    pub r2: f64,
    pub points_used: usize,
    pub points_excluded: usize,
    pub fit_space: FitSpace,
    /// False when a refinement diverged and the seed was returned instead.
    pub converged: bool,
}

impl FitResult {
    pub fn predict(&self, rank: f64) -> f64 {
        self.a * rank.powf(self.k) * self.b.powf(rank)
    }

    /// Sum of squared residuals in the space the fit was optimized in.
    pub fn sse(&self) -> f64 {
        match self.fit_space {
            FitSpace::Log => self.sse_log,
            FitSpace::Linear => self.sse_linear,
        }
    }
}

/// Positive points `(rank, value)` and the number of excluded ones.
fn fit_points(ranked: &RankedDistribution) -> (Vec<(f64, f64)>, usize) {
    let points: Vec<(f64, f64)> = ranked
        .entries
        .iter()
        .filter(|e| e.value > ZERO_FLOOR)
        .map(|e| (e.rank as f64, e.value))
        .collect();
    let excluded = ranked.len() - points.len();
    (points, excluded)
}

fn log_predictor(model: FitModel, theta: &[f64], rank: f64) -> f64 {
    let mut y = theta[0] + theta[1] * rank.ln();
    if model == FitModel::Yule {
        y += theta[2] * rank;
    }
    y
}

fn finish(model: FitModel, theta: &[f64], points: &[(f64, f64)], excluded: usize, fit_space: FitSpace, converged: bool) -> FitResult {
    let mut sse_log = 0.0;
    let mut sse_linear = 0.0;
    for &(r, v) in points {
        let y = log_predictor(model, theta, r);
        sse_log += (v.ln() - y).powi(2);
        sse_linear += (v - y.exp()).powi(2);
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let sst: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    // Constant data leaves only rounding noise in `sst`.
    let scale: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let flat = 1e-24 * scale;
    let r2 = if sst > flat {
        1.0 - sse_linear / sst
    } else if sse_linear <= flat {
        1.0
    } else {
        0.0
    };
    FitResult {
        model,
        a: theta[0].exp(),
        k: theta[1],
        b: if model == FitModel::Yule { theta[2].exp() } else { 1.0 },
        sse_log,
        sse_linear,
        r2,
        points_used: points.len(),
        points_excluded: excluded,
        fit_space,
        converged,
    }
}

fn theta_of(fit: &FitResult) -> Vec<f64> {
    let mut theta = vec![fit.a.ln(), fit.k];
    if fit.model == FitModel::Yule {
        theta.push(fit.b.ln());
    }
    theta
}

/// Least squares on `ln f = ln a + k·ln R + R·ln b` (Zipf drops the last term).
pub fn fit_log_linear(ranked: &RankedDistribution, model: FitModel) -> Result<FitResult> {
    let (points, excluded) = fit_points(ranked);
    if points.len() < model.min_points() {
        return Err(CrystalError::UnderDetermined {
            used: points.len(),
            needed: model.min_points(),
        });
    }
    let p = model.n_params();
    let design = DMatrix::from_fn(points.len(), p, |row, col| {
        let r = points[row].0;
        match col {
            0 => 1.0,
            1 => r.ln(),
            _ => r,
        }
    });
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1.ln()));
    let theta = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| CrystalError::Parameter(e.to_string()))?;
    Ok(finish(model, theta.as_slice(), &points, excluded, FitSpace::Log, true))
}

/// Damped least squares on linear-space residuals `f_R − a·R^k·b^R`, seeded
/// by `initial`. Steps are only accepted when they lower the linear-space
/// sse, so the result is never worse than the seed.
pub fn fit_refine(ranked: &RankedDistribution, initial: &FitResult) -> Result<FitResult> {
    let model = initial.model;
    let (points, excluded) = fit_points(ranked);
    if points.len() < model.min_points() {
        return Err(CrystalError::UnderDetermined {
            used: points.len(),
            needed: model.min_points(),
        });
    }
    let p = model.n_params();
    let features = |r: f64| -> Vec<f64> {
        let mut x = vec![1.0, r.ln()];
        if model == FitModel::Yule {
            x.push(r);
        }
        x
    };
    let sse_at = |theta: &[f64]| -> f64 {
        points
            .iter()
            .map(|&(r, v)| (v - log_predictor(model, theta, r).exp()).powi(2))
            .sum()
    };

    let seed = finish(model, &theta_of(initial), &points, excluded, FitSpace::Linear, true);
    let mut theta = theta_of(initial);
    let mut sse = sse_at(&theta);
    if !sse.is_finite() {
        return Ok(FitResult { converged: false, ..seed });
    }
    let mut damping = 1e-3;
    for _ in 0..REFINE_MAX_ITER {
        // Jacobian of the model prediction; residual = v − prediction.
        let mut jtj = DMatrix::<f64>::zeros(p, p);
        let mut jtr = DVector::<f64>::zeros(p);
        for &(r, v) in &points {
            let pred = log_predictor(model, &theta, r).exp();
            let x = features(r);
            for a in 0..p {
                jtr[a] += pred * x[a] * (v - pred);
                for b in 0..p {
                    jtj[(a, b)] += pred * pred * x[a] * x[b];
                }
            }
        }
        let mut accepted = false;
        while damping < 1e16 {
            let mut lhs = jtj.clone();
            for a in 0..p {
                lhs[(a, a)] += damping * jtj[(a, a)].max(1e-300);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&jtr)) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let trial_sse = sse_at(&trial);
            let step_norm = step.norm();
            let theta_norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
            if trial_sse.is_finite() && trial_sse < sse {
                theta = trial;
                sse = trial_sse;
                damping = (damping / 10.0).max(1e-12);
                accepted = true;
                if step_norm <= REFINE_STEP_TOL * (theta_norm + REFINE_STEP_TOL) {
                    return Ok(finish(model, &theta, &points, excluded, FitSpace::Linear, true));
                }
                break;
            }
            if step_norm <= REFINE_STEP_TOL * (theta_norm + REFINE_STEP_TOL) {
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    if theta.iter().all(|t| t.is_finite()) {
        Ok(finish(model, &theta, &points, excluded, FitSpace::Linear, true))
    } else {
        Ok(FitResult { converged: false, ..seed })
    }
}

/// Yule and Zipf fitted to the same points, with `sse_zipf / sse_yule` in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub yule: FitResult,
    pub zipf: FitResult,
    pub sse_ratio: f64,
}

pub fn compare_models(ranked: &RankedDistribution) -> Result<ModelComparison> {
    let yule = fit_log_linear(ranked, FitModel::Yule)?;
    let zipf = fit_log_linear(ranked, FitModel::Zipf)?;
    // Both residuals at rounding level means both models are exact.
    let noise = 1e-24 * yule.points_used as f64;
    let sse_ratio = if yule.sse_log > noise {
        zipf.sse_log / yule.sse_log
    } else if zipf.sse_log <= noise {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(ModelComparison { yule, zipf, sse_ratio })
}

/// Ranked values of the states at one Hamming distance from the initial word.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauGroup {
    pub distance: usize,
    /// `(basis index, value)` in rank order.
    pub members: Vec<(usize, f64)>,
    pub mean: f64,
    /// `max − min` of the member values; 0 for empty or singleton groups.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateauxReport {
    /// One group per distance `0..=N`.
    pub groups: Vec<PlateauGroup>,
    /// Whether, ordering groups by mean, every value of a higher group is at
    /// least every value of the next lower one.
    pub ordering_consistent: bool,
}

impl PlateauxReport {
    pub fn max_spread(&self) -> f64 {
        self.groups.iter().fold(0.0_f64, |acc, g| acc.max(g.spread))
    }

    /// Flat groups whose order explains the ranking.
    pub fn is_exact(&self, tol: f64) -> bool {
        self.ordering_consistent && self.max_spread() <= tol
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.members.len()).collect()
    }
}

pub fn plateaux_report(ranked: &RankedDistribution, basis: &BasisMap, initial_word: &SpinWord) -> Result<PlateauxReport> {
    let n = basis.n();
    if initial_word.len() != n {
        return Err(CrystalError::LengthMismatch(initial_word.len(), n));
    }
    let mut members: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 1];
    for e in &ranked.entries {
        if e.index >= basis.dim() {
            return Err(CrystalError::StateIndex { index: e.index, dim: basis.dim() });
        }
        let d = hamming_distance(basis.word(e.index), initial_word)?;
        members[d].push((e.index, e.value));
    }
    let groups: Vec<PlateauGroup> = members
        .into_iter()
        .enumerate()
        .map(|(distance, members)| {
            let (lo, hi) = members
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
            let mean = if members.is_empty() {
                0.0
            } else {
                members.iter().map(|m| m.1).sum::<f64>() / members.len() as f64
            };
            let spread = if members.is_empty() { 0.0 } else { hi - lo };
            PlateauGroup { distance, members, mean, spread }
        })
        .collect();

    let mut by_mean: Vec<&PlateauGroup> = groups.iter().filter(|g| !g.members.is_empty()).collect();
    by_mean.sort_by(|x, y| y.mean.total_cmp(&x.mean));
    let ordering_consistent = by_mean.windows(2).all(|w| {
        let upper_min = w[0].members.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        let lower_max = w[1].members.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
        upper_min >= lower_max
    });
    Ok(PlateauxReport { groups, ordering_consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::enumerate_basis;

    fn ranked_from(values: &[f64]) -> RankedDistribution {
        RankedDistribution::from_values(values.iter().copied().enumerate(), true)
    }

    fn yule_values(a: f64, k: f64, b: f64, count: usize) -> Vec<f64> {
        (1..=count).map(|r| a * (r as f64).powf(k) * b.powf(r as f64)).collect()
    }

    #[test]
    fn delta_row_ranks_by_index() {
        let profile = TransitionProfile { initial: 2, horizon: 1.0, p_avg: vec![0.0, 0.0, 1.0, 0.0] };
        let ranked = rank_order(&profile, false);
        let idx: Vec<usize> = ranked.entries.iter().map(|e| e.index).collect();
        assert_eq!(idx, [0, 1, 3]);
        assert!(ranked.values().iter().all(|&v| v == 0.0));
        let ranked = rank_order(&profile, true);
        assert_eq!(ranked.entries[0].index, 2);
        assert_eq!(ranked.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), [1, 2, 3, 4]);
    }

    #[test]
    fn recovers_caption_parameters() {
        let ranked = ranked_from(&yule_values(1.96, -1.49, 0.24, 8));
        let fit = fit_log_linear(&ranked, FitModel::Yule).unwrap();
        assert!((fit.a - 1.96).abs() < 1e-6);
        assert!((fit.k + 1.49).abs() < 1e-6);
        assert!((fit.b - 0.24).abs() < 1e-6);
        assert!(fit.sse_log < 1e-18);
    }

    #[test]
    fn constant_data() {
        let ranked = ranked_from(&[0.2; 6]);
        let fit = fit_log_linear(&ranked, FitModel::Yule).unwrap();
        assert!((fit.a - 0.2).abs() < 1e-9);
        assert!(fit.k.abs() < 1e-9);
        assert!((fit.b - 1.0).abs() < 1e-9);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn zipf_nested_in_yule() {
        let ranked = ranked_from(&yule_values(0.5, -0.8, 1.0, 10));
        let fit = fit_log_linear(&ranked, FitModel::Yule).unwrap();
        assert!((fit.b - 1.0).abs() < 1e-9);
        let cmp = compare_models(&ranked).unwrap();
        assert!((cmp.sse_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zipf_misses_yule_data() {
        let ranked = ranked_from(&yule_values(1.96, -1.49, 0.24, 8));
        let cmp = compare_models(&ranked).unwrap();
        assert!(cmp.sse_ratio > 1e6);
    }

    #[test]
    fn under_determined() {
        let ranked = ranked_from(&[0.5, 0.3, 0.1, 0.0, 0.0]);
        let err = fit_log_linear(&ranked, FitModel::Yule).unwrap_err();
        assert_eq!(err, CrystalError::UnderDetermined { used: 3, needed: 4 });
        let fit = fit_log_linear(&ranked, FitModel::Zipf).unwrap();
        assert_eq!((fit.points_used, fit.points_excluded), (3, 2));
        assert_eq!(fit.b, 1.0);
    }

    #[test]
    fn refine_keeps_exact_fit() {
        let ranked = ranked_from(&yule_values(0.6, -0.64, 0.72, 16));
        let seed = fit_log_linear(&ranked, FitModel::Yule).unwrap();
        let refined = fit_refine(&ranked, &seed).unwrap();
        assert!((refined.a - seed.a).abs() < 1e-9);
        assert!((refined.k - seed.k).abs() < 1e-9);
        assert!((refined.b - seed.b).abs() < 1e-9);
        assert_eq!(refined.fit_space, FitSpace::Linear);
        assert!(refined.converged);
    }

    #[test]
    fn binomial_groups() {
        let basis = enumerate_basis(2).unwrap();
        let profile = TransitionProfile { initial: 3, horizon: 1.0, p_avg: vec![0.25; 4] };
        let ranked = rank_order(&profile, true);
        let report = plateaux_report(&ranked, &basis, &"RR".parse().unwrap()).unwrap();
        assert_eq!(report.group_sizes(), [1, 2, 1]);
        assert!(report.is_exact(1e-12));
        assert!(plateaux_report(&ranked, &basis, &"RRR".parse().unwrap()).is_err());
    }
}
