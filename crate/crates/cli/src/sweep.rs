use std::path::Path;

use crystalchain::hamiltonian::{CouplingSymbol, SymbolicHamiltonian};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::{create_dir, plateaux, run_profile, write_file, write_run, FitSummary, Manifest, PLATEAU_TOL};

/// Tied symbols sharing a list of values, e.g. `eps+gamma=0.1,0.3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub symbols: Vec<CouplingSymbol>,
    pub values: Vec<f64>,
}

impl std::str::FromStr for GridAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lhs, rhs) = s.split_once('=').ok_or_else(|| format!("grid axis {s:?} lacks `=`"))?;
        let symbols = lhs
            .split('+')
            .map(|t| t.trim().parse::<CouplingSymbol>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let values = rhs
            .split(',')
            .map(|t| match t.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("bad grid value {t:?}")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GridAxis { symbols, values })
    }
}

/// Cartesian product of the axes, last axis varying fastest; no axes, no points.
pub fn grid_points(template: &RunConfig, axes: &[GridAxis]) -> Vec<RunConfig> {
    if axes.is_empty() {
        return Vec::new();
    }
    let mut points = vec![template.clone()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    for &s in &axis.symbols {
                        q.couplings.set(s, v);
                    }
                    q
                })
            })
            .collect();
    }
    points
}

struct PointOutcome {
    config: RunConfig,
    result: Result<PointSummary, CliError>,
}

struct PointSummary {
    resolved_t: Option<f64>,
    fits: Option<FitSummary>,
    plateaux_exact: bool,
}

fn run_point(sym: &SymbolicHamiltonian, config: &RunConfig, dir: &Path) -> Result<PointSummary, CliError> {
    let output = run_profile(sym, config)?;
    let fits = FitSummary::compute(&output.ranked).ok();
    let report = plateaux(sym.basis(), &output)?;
    let manifest = Manifest::new(&output, fits.as_ref().map(FitSummary::as_list).unwrap_or_default());
    write_run(dir, sym.basis(), &output, &manifest)?;
    Ok(PointSummary { resolved_t: output.resolved_t, fits, plateaux_exact: report.is_exact(PLATEAU_TOL) })
}

pub fn point_dir_name(index: usize) -> String {
    format!("point-{:04}", index + 1)
}

/// Runs every point concurrently, then writes `summary.csv`. Fails only when
/// every point failed.
pub fn run_sweep(
    sym: &SymbolicHamiltonian,
    points: Vec<RunConfig>,
    out: &Path,
    workers: Option<usize>,
) -> Result<usize, CliError> {
    create_dir(out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let outcomes: Vec<PointOutcome> = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(i, config)| {
                let result = run_point(sym, &config, &out.join(point_dir_name(i)));
                PointOutcome { config, result }
            })
            .collect()
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "point", "dir", "mu0", "eps", "gamma", "delta", "eta", "beta", "status", "resolved_T", "yule_a", "yule_k", "yule_b",
        "yule_r2", "zipf_a", "zipf_k", "sse_ratio", "plateaux_exact",
    ])?;
    let fmt = |v: f64| format!("{v:?}");
    for (i, o) in outcomes.iter().enumerate() {
        let c = &o.config.couplings;
        let mut row = vec![(i + 1).to_string(), point_dir_name(i)];
        row.extend([c.mu0, c.eps, c.gamma, c.delta, c.eta, c.beta].map(fmt));
        match &o.result {
            Ok(s) => {
                row.push("ok".into());
                row.push(s.resolved_t.map(fmt).unwrap_or_else(|| "inf".into()));
                match &s.fits {
                    Some(f) => row.extend([f.yule.a, f.yule.k, f.yule.b, f.yule.r2, f.zipf.a, f.zipf.k, f.sse_ratio].map(fmt)),
                    None => row.extend(std::iter::repeat_n(String::new(), 7)),
                }
                row.push(s.plateaux_exact.to_string());
            }
            Err(e) => {
                row.push(format!("error (exit {}): {e}", e.exit_code()));
                row.extend(std::iter::repeat_n(String::new(), 9));
            }
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    write_file(out, "summary.csv", &String::from_utf8(bytes).expect("CSV fields are UTF-8"))?;

    let succeeded = outcomes.iter().filter(|o| o.result.is_ok()).count();
    if succeeded == 0 {
        if let Some(PointOutcome { result: Err(e), .. }) = outcomes.into_iter().next() {
            return Err(e);
        }
    }
    Ok(succeeded)
}
