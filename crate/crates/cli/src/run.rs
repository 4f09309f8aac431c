use std::fmt::Write as _;
use std::path::Path;

use crystalchain::analysis::{
    compare_models, fit_refine, plateaux_report, rank_order, FitResult, PlateauxReport, RankedDistribution,
};
use crystalchain::crystal::{BasisMap, SpinWord};
use crystalchain::dynamics::{
    default_degeneracy_tol, eigendecompose, find_stable_horizon, infinite_time_average, time_averaged_profile,
    StableHorizonSearch, TransitionProfile, DEFAULT_EIGEN_TOL,
};
use crystalchain::hamiltonian::{build_hamming, build_model, evaluate, SymbolicHamiltonian};
use serde::Serialize;

use crate::config::{Horizon, ModelKind, RunConfig};
use crate::error::CliError;

pub fn build_symbolic(n: usize, model: ModelKind) -> Result<SymbolicHamiltonian, CliError> {
    match model {
        ModelKind::Crystal => build_model(n),
        ModelKind::Hamming => build_hamming(n),
    }
    .map_err(CliError::Config)
}

/// Profile and ranking of one configuration.
pub struct RunOutput {
    pub config: RunConfig,
    pub word: SpinWord,
    pub profile: TransitionProfile,
    pub ranked: RankedDistribution,
    /// `None` for the infinite-time limit.
    pub resolved_t: Option<f64>,
}

pub fn run_profile(sym: &SymbolicHamiltonian, config: &RunConfig) -> Result<RunOutput, CliError> {
    let word = config.initial_word()?;
    if sym.n() != config.n {
        return Err(CliError::Usage(format!("Hamiltonian built for N={}, config has N={}", sym.n(), config.n)));
    }
    let initial = sym.basis().index_of(&word).ok_or_else(|| CliError::Usage(format!("{word} is not a basis word")))?;
    let h = evaluate(sym, &config.couplings);
    let spec = eigendecompose(&h, DEFAULT_EIGEN_TOL).map_err(CliError::Dynamics)?;
    let profile = match config.horizon {
        Horizon::Explicit(t) => time_averaged_profile(&spec, initial, t),
        Horizon::Auto => find_stable_horizon(&spec, initial, &StableHorizonSearch { cap: config.max_horizon, ..Default::default() }),
        Horizon::Infinite => infinite_time_average(&spec, initial, default_degeneracy_tol(&spec)),
    }
    .map_err(CliError::Dynamics)?;
    let resolved_t = profile.horizon.is_finite().then_some(profile.horizon);
    let ranked = rank_order(&profile, config.include_self);
    Ok(RunOutput { config: config.clone(), word, profile, ranked, resolved_t })
}

/// Log-linear Yule and Zipf fits, the refined Yule fit and their comparison.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub yule: FitResult,
    pub zipf: FitResult,
    pub yule_refined: FitResult,
    /// `sse_zipf / sse_yule` of the log-space fits.
    pub sse_ratio: f64,
}

impl FitSummary {
    pub fn compute(ranked: &RankedDistribution) -> Result<Self, CliError> {
        let cmp = compare_models(ranked).map_err(CliError::Fit)?;
        let yule_refined = fit_refine(ranked, &cmp.yule).map_err(CliError::Fit)?;
        Ok(FitSummary { yule: cmp.yule, zipf: cmp.zipf, yule_refined, sse_ratio: cmp.sse_ratio })
    }

    pub fn as_list(&self) -> Vec<FitResult> {
        vec![self.yule, self.zipf, self.yule_refined]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub config: RunConfig,
    #[serde(rename = "resolved_T")]
    pub resolved_t: Option<f64>,
    pub fits: Vec<FitResult>,
    pub version: &'static str,
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
}

impl Manifest {
    pub fn new(output: &RunOutput, fits: Vec<FitResult>) -> Self {
        Manifest {
            config: output.config.clone(),
            resolved_t: output.resolved_t,
            fits,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            preset: None,
            assumptions: Vec::new(),
        }
    }
}

pub fn profile_csv(basis: &BasisMap, profile: &TransitionProfile) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "word", "two_j3", "two_jN", "p_avg"])?;
    for (i, p) in profile.p_avg.iter().enumerate() {
        let labels = basis.labels(i);
        w.write_record([
            (i + 1).to_string(),
            basis.word(i).to_string(),
            labels.two_j3().to_string(),
            labels.two_j_total().to_string(),
            format!("{p:?}"),
        ])?;
    }
    into_string(w)
}

pub fn ranked_csv(basis: &BasisMap, ranked: &RankedDistribution) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "index", "word", "value"])?;
    for e in &ranked.entries {
        w.write_record([e.rank.to_string(), (e.index + 1).to_string(), basis.word(e.index).to_string(), format!("{:?}", e.value)])?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

/// Whitespace-delimited `rank value` lines for plotting.
pub fn plot_text(ranked: &RankedDistribution) -> String {
    let mut out = String::new();
    for e in &ranked.entries {
        writeln!(out, "{} {:?}", e.rank, e.value).unwrap();
    }
    out
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    distance: usize,
    size: usize,
    mean: f64,
    spread: f64,
}

#[derive(Debug, Serialize)]
struct PlateauxSummary {
    exact: bool,
    max_spread: f64,
    ordering_consistent: bool,
    groups: Vec<GroupSummary>,
}

/// Spread below which a Hamming-distance group counts as a flat plateau.
pub const PLATEAU_TOL: f64 = 1e-9;

pub fn plateaux(basis: &BasisMap, output: &RunOutput) -> Result<PlateauxReport, CliError> {
    plateaux_report(&output.ranked, basis, &output.word).map_err(CliError::Config)
}

pub fn plateaux_json(report: &PlateauxReport) -> Result<String, CliError> {
    let summary = PlateauxSummary {
        exact: report.is_exact(PLATEAU_TOL),
        max_spread: report.max_spread(),
        ordering_consistent: report.ordering_consistent,
        groups: report
            .groups
            .iter()
            .map(|g| GroupSummary { distance: g.distance, size: g.members.len(), mean: g.mean, spread: g.spread })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&summary)? + "\n")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `profile.csv`, `ranked.csv` and `manifest.json` into `dir`.
pub fn write_run(dir: &Path, basis: &BasisMap, output: &RunOutput, manifest: &Manifest) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(dir, "profile.csv", &profile_csv(basis, &output.profile)?)?;
    write_file(dir, "ranked.csv", &ranked_csv(basis, &output.ranked)?)?;
    write_file(dir, "manifest.json", &to_json(manifest)?)
}
