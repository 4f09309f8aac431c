mod config;
mod error;
mod presets;
mod run;
mod sweep;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crystalchain::analysis::{fit_log_linear, fit_refine, FitModel, RankedDistribution, RankedEntry};
use crystalchain::hamiltonian::evaluate;
use serde::Serialize;

use config::{check_chain_len, CommonArgs, ConfigLayer};
use error::CliError;
use presets::Figure;
use run::{build_symbolic, plateaux, plateaux_json, plot_text, run_profile, to_json, write_file, write_run, FitSummary, Manifest};

#[derive(Parser)]
#[command(name = "crystalchain", version, about = "Crystal-basis mutation dynamics of spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical basis as `index word labels` lines.
    Basis {
        #[arg(long)]
        n: usize,
    },
    /// Print the symbolic Hamiltonian, or the numeric matrix for the given couplings.
    Hamiltonian {
        #[command(flatten)]
        common: CommonArgs,
        /// One `row col SYMBOL coefficient` line per nonzero entry.
        #[arg(long)]
        symbolic: bool,
    },
    /// Compute the time-averaged transition profile of one configuration.
    Profile {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory for profile.csv, ranked.csv and manifest.json; stdout gets profile.csv otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit Yule and/or Zipf laws to a ranked CSV (`rank` and `value` columns).
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FitChoice::Both)]
        model: FitChoice,
        /// Refine each log-space fit by least squares on the values themselves.
        #[arg(long)]
        refine: bool,
    },
    /// Run a figure preset and write its data, fits and plot file.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory; defaults to the figure name.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a coupling grid around a template configuration.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid axis `sym=v1,v2,...`; tie symbols with `+`, e.g. `eps+gamma+delta=0.3`.
        #[arg(long = "grid")]
        grid: Vec<sweep::GridAxis>,
        #[arg(long)]
        out: PathBuf,
        /// Maximum concurrent points.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitChoice {
    Yule,
    Zipf,
    Both,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result = dispatch(cli.command).and_then(|text| stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Runs a subcommand and returns what goes to stdout.
fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Basis { n } => cmd_basis(n),
        Command::Hamiltonian { common, symbolic } => cmd_hamiltonian(&common.layered_over(ConfigLayer::default())?, symbolic),
        Command::Profile { common, out } => cmd_profile(&common.layered_over(ConfigLayer::default())?, out.as_deref()),
        Command::Fit { input, model, refine } => cmd_fit(&input, model, refine),
        Command::Reproduce { figure, common, out } => {
            let out = out.unwrap_or_else(|| PathBuf::from(figure.name()));
            cmd_reproduce(figure, &common.layered_over(figure.layer())?, &out)
        }
        Command::Sweep { common, grid, out, workers } => {
            let template = common.layered_over(ConfigLayer::default())?.resolve()?;
            let sym = build_symbolic(template.n, template.model)?;
            let points = sweep::grid_points(&template, &grid);
            let total = points.len();
            let ok = sweep::run_sweep(&sym, points, &out, workers)?;
            Ok(format!("{ok}/{total} points succeeded; summary in {}\n", out.join("summary.csv").display()))
        }
    }
}

fn cmd_basis(n: usize) -> Result<String, CliError> {
    check_chain_len(n)?;
    let basis = crystalchain::crystal::enumerate_basis(n).map_err(CliError::Config)?;
    let mut out = String::new();
    for (i, (word, labels)) in basis.states().iter().enumerate() {
        writeln!(out, "{} {} {}", i + 1, word, labels).unwrap();
    }
    Ok(out)
}

fn cmd_hamiltonian(layer: &ConfigLayer, symbolic: bool) -> Result<String, CliError> {
    let sym = build_symbolic(layer.n()?, layer.model())?;
    if symbolic {
        return Ok(sym.dump());
    }
    let couplings = layer.couplings();
    if !couplings.is_finite() {
        return Err(CliError::Usage("coupling values must be finite".into()));
    }
    let h = evaluate(&sym, &couplings);
    let mut out = String::new();
    for r in 0..h.nrows() {
        let row: Vec<String> = h.row(r).iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    Ok(out)
}

fn cmd_profile(layer: &ConfigLayer, out: Option<&Path>) -> Result<String, CliError> {
    let config = layer.resolve()?;
    let sym = build_symbolic(config.n, config.model)?;
    let output = run_profile(&sym, &config)?;
    let Some(dir) = out else {
        return run::profile_csv(sym.basis(), &output.profile);
    };
    let fits = FitSummary::compute(&output.ranked).map(|f| f.as_list()).unwrap_or_default();
    write_run(dir, sym.basis(), &output, &Manifest::new(&output, fits))?;
    Ok(format!("wrote profile.csv, ranked.csv, manifest.json to {}\n", dir.display()))
}

#[derive(serde::Deserialize)]
struct RankedRow {
    rank: usize,
    index: Option<usize>,
    value: f64,
}

fn read_ranked(path: &Path) -> Result<RankedDistribution, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Usage(format!("{other:?}")),
    })?;
    let mut entries = Vec::new();
    for row in reader.deserialize() {
        let row: RankedRow = row?;
        if row.rank == 0 || !row.value.is_finite() {
            return Err(CliError::Usage(format!("bad ranked row: rank {} value {}", row.rank, row.value)));
        }
        entries.push(RankedEntry { rank: row.rank, index: row.index.map_or(row.rank - 1, |i| i.saturating_sub(1)), value: row.value });
    }
    Ok(RankedDistribution { entries, include_self: true })
}

#[derive(Serialize)]
struct FitOutput {
    fits: Vec<crystalchain::analysis::FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sse_ratio: Option<f64>,
}

fn cmd_fit(input: &Path, choice: FitChoice, refine: bool) -> Result<String, CliError> {
    let ranked = read_ranked(input)?;
    let models = match choice {
        FitChoice::Yule => vec![FitModel::Yule],
        FitChoice::Zipf => vec![FitModel::Zipf],
        FitChoice::Both => vec![FitModel::Yule, FitModel::Zipf],
    };
    let mut fits = Vec::new();
    for model in models {
        let seed = fit_log_linear(&ranked, model).map_err(CliError::Fit)?;
        fits.push(if refine { fit_refine(&ranked, &seed).map_err(CliError::Fit)? } else { seed });
    }
    let sse_ratio = (choice == FitChoice::Both).then(|| {
        crystalchain::analysis::compare_models(&ranked).map(|c| c.sse_ratio).map_err(CliError::Fit)
    });
    let sse_ratio = sse_ratio.transpose()?;
    to_json(&FitOutput { fits, sse_ratio })
}

fn cmd_reproduce(figure: Figure, layer: &ConfigLayer, out: &Path) -> Result<String, CliError> {
    let config = layer.resolve()?;
    let sym = build_symbolic(config.n, config.model)?;
    let output = run_profile(&sym, &config)?;
    let fits = FitSummary::compute(&output.ranked)?;
    let report = plateaux(sym.basis(), &output)?;
    let mut manifest = Manifest::new(&output, fits.as_list());
    manifest.preset = Some(figure.name().to_string());
    manifest.assumptions = figure.assumptions();
    write_run(out, sym.basis(), &output, &manifest)?;
    write_file(out, "fits.json", &to_json(&fits)?)?;
    write_file(out, "plateaux.json", &plateaux_json(&report)?)?;
    write_file(out, "plot.txt", &plot_text(&output.ranked))?;
    Ok(format!(
        "{}: T={} yule a={:.4} k={:.4} b={:.4} r2={:.4}; zipf/yule sse={:.3}; plateaux exact={}; wrote {}\n",
        figure.name(),
        output.resolved_t.map_or("inf".to_string(), |t| t.to_string()),
        fits.yule.a,
        fits.yule.k,
        fits.yule.b,
        fits.yule.r2,
        fits.sse_ratio,
        report.is_exact(run::PLATEAU_TOL),
        out.display()
    ))
}
