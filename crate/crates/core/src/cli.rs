//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on any validation, parse or I/O error, 2 when the
//! sampler fails (excess divergences or a broken invariant). Errors go to standard
//! error as `error[<kind>]: <message>`.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::evaluation::{
    kfold_cv, many_large_knots, posterior_predictive_check, predict_strength, subgroup_mspe, BayesianModel,
    PredictiveSummary, Predictor, Regression1, Regression2,
};
use crate::io::{self, atomic_write, reports, ColumnMapping, RunConfig};
use crate::model::{CellGrid, Specimen};
use crate::rng::{self, Purpose};
use crate::sampler::{posterior_quantiles, run_chains, PosteriorDraws, SUMMARY_PROBS};
use crate::simulator::generate_dataset;

#[derive(Debug, Parser)]
#[command(
    name = "knotstrength",
    version,
    about = "Spatial Bayesian model for the tensile strength of lumber"
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    specimens: Option<PathBuf>,
    #[arg(long, global = true)]
    knots: Option<PathBuf>,
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
    #[arg(long, global = true)]
    draws: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Column-mapping TOML for externally produced specimen and knot tables.
    #[arg(long, global = true)]
    mapping: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset (specimens, knots and hidden profiles).
    Simulate,
    /// Run HMC on the specimens and write draws and diagnostics.
    Fit,
    /// Posterior quantile table from saved draws.
    Summarize,
    /// Posterior predictive checks of five UTS summary statistics.
    Ppc,
    /// K-fold cross-validation of the regressions and the Bayesian model.
    Cv,
    /// Predictive strength of specimens from saved draws.
    Predict,
}

/// Runs the CLI on `args` (program name first) and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("error[usage]: {e}");
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SamplerFailed(_) => 2,
        _ => 1,
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let paths = &mut cfg.paths;
    for (flag, slot) in [
        (&cli.specimens, &mut paths.specimens),
        (&cli.knots, &mut paths.knots),
        (&cli.truth, &mut paths.truth),
        (&cli.draws, &mut paths.draws),
        (&cli.out_dir, &mut paths.out_dir),
    ] {
        if let Some(p) = flag {
            *slot = p.clone();
        }
    }
    if cli.mapping.is_some() {
        paths.mapping = cli.mapping.clone();
    }
    Ok(cfg)
}

fn load_mapping(cfg: &RunConfig) -> Result<ColumnMapping> {
    match &cfg.paths.mapping {
        Some(p) => {
            ColumnMapping::from_toml_str(&io::read_text(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
        None => Ok(ColumnMapping::default()),
    }
}

fn load_data(cfg: &RunConfig, grid: &CellGrid) -> Result<Vec<Specimen>> {
    let mapping = load_mapping(cfg)?;
    io::ingest(&cfg.paths.specimens, &cfg.paths.knots, grid, &mapping)
}

/// Specimens with a recorded test result; the unobserved ones are left to `predict`.
fn load_observed(cfg: &RunConfig, grid: &CellGrid) -> Result<Vec<Specimen>> {
    let data: Vec<Specimen> = load_data(cfg, grid)?
        .into_iter()
        .filter(|s| s.observation.is_some())
        .collect();
    if data.is_empty() {
        return Err(Error::invalid(
            "specimens",
            "no specimen has an observed UTS and failure cell",
        ));
    }
    Ok(data)
}

fn load_draws(cfg: &RunConfig) -> Result<PosteriorDraws> {
    let p = &cfg.paths.draws;
    io::parse_draws(&io::read_text(p)?, &p.display().to_string())
}

/// Writes every (path, bytes) pair, creating parent directories first.
fn write_all(outputs: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    for (path, bytes) in outputs {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        atomic_write(path, bytes)?;
    }
    for (path, _) in outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.paths.out_dir.join(name)
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let grid = cfg.grid()?;
    match cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Fit => fit(&cfg, &grid),
        Command::Summarize => summarize(&cfg),
        Command::Ppc => ppc(&cfg, &grid),
        Command::Cv => cv(&cfg, &grid),
        Command::Predict => predict(&cfg, &grid),
    }
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let sims = generate_dataset(&cfg.sim_config()?)?;
    let specimens: Vec<Specimen> = sims.iter().map(|s| s.specimen.clone()).collect();
    write_all(&[
        (cfg.paths.specimens.clone(), io::render_specimens(&specimens)?),
        (cfg.paths.knots.clone(), io::render_knots(&specimens)?),
        (cfg.paths.truth.clone(), io::render_truth(&sims)?),
    ])
}

fn fit(cfg: &RunConfig, grid: &CellGrid) -> Result<()> {
    let data = load_observed(cfg, grid)?;
    let fit = run_chains(&data, *grid, cfg.grid.kernel, cfg.prior, &cfg.hmc_config())?;
    let d = &fit.diagnostics;
    write_all(&[
        (cfg.paths.draws.clone(), io::render_draws(&fit.draws)?),
        (out(cfg, "diagnostics.csv"), reports::render_diagnostics(d)?),
        (out(cfg, "chains.csv"), reports::render_chains(d)?),
    ])?;
    let max_rhat = d.max_rhat();
    if max_rhat > 1.05 {
        eprintln!("warning: maximum split R-hat {max_rhat:.3} exceeds 1.05");
    }
    if d.failed {
        let worst = d.chains.iter().map(|c| c.divergence_fraction()).fold(0.0, f64::max);
        return Err(Error::SamplerFailed(format!(
            "divergent transitions in {:.1}% of a chain's draws",
            100.0 * worst
        )));
    }
    Ok(())
}

fn summarize(cfg: &RunConfig) -> Result<()> {
    let draws = load_draws(cfg)?;
    let table = posterior_quantiles(&draws, &SUMMARY_PROBS)?;
    write_all(&[(out(cfg, "summary.csv"), reports::render_summary(&table)?)])
}

fn ppc(cfg: &RunConfig, grid: &CellGrid) -> Result<()> {
    let draws = load_draws(cfg)?.thinned(cfg.ppc.draws);
    let data = load_observed(cfg, grid)?;
    let report = posterior_predictive_check(&draws, &data, grid, cfg.grid.kernel, cfg.seed)?;
    let mut outputs = vec![(out(cfg, "ppc_report.csv"), reports::render_ppc_report(&report)?)];
    for check in &report.checks {
        outputs.push((
            out(cfg, &format!("ppc_hist_{}.csv", check.quantity.name())),
            reports::render_ppc_histogram(check, cfg.ppc.bins)?,
        ));
    }
    write_all(&outputs)
}

fn cv(cfg: &RunConfig, grid: &CellGrid) -> Result<()> {
    let data = load_observed(cfg, grid)?;
    let mut bayes = BayesianModel::new(*grid, cfg.grid.kernel, cfg.prior, cfg.hmc.clone());
    if let Some(j) = cfg.cv.fit_cells {
        bayes.grid = grid.with_cells(j)?;
    }
    bayes.predictive_draws = cfg.cv.predictive_draws;
    bayes.reps_per_draw = cfg.cv.reps_per_draw;
    let mut models: Vec<&dyn Predictor> = vec![&Regression1, &Regression2];
    if cfg.cv.bayesian {
        models.push(&bayes);
    }
    let report = kfold_cv(&data, cfg.cv.folds, &models, cfg.seed)?;

    let everyone = vec![true; data.len()];
    let large: Vec<bool> = data
        .iter()
        .map(|s| many_large_knots(s, grid, cfg.grid.thickness))
        .collect();
    let mut groups = Vec::new();
    for (name, mask) in [("all", &everyone), ("many_large_knots", &large)] {
        let n = mask.iter().filter(|&&b| b).count();
        if n == 0 {
            continue;
        }
        let per_model = report
            .models
            .iter()
            .map(|m| Ok((m.name.clone(), subgroup_mspe(m, &report.observed, mask)?)))
            .collect::<Result<Vec<_>>>()?;
        groups.push((name.to_string(), n, per_model));
    }
    write_all(&[
        (out(cfg, "cv_report.csv"), reports::render_cv_report(&report)?),
        (
            out(cfg, "cv_predictions.csv"),
            reports::render_cv_predictions(&data, &report)?,
        ),
        (out(cfg, "cv_subgroups.csv"), reports::render_subgroups(&groups)?),
    ])
}

fn predict(cfg: &RunConfig, grid: &CellGrid) -> Result<()> {
    let draws = load_draws(cfg)?.thinned(cfg.predict.draws);
    let data = load_data(cfg, grid)?;
    let summaries = data
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = rng::stream(cfg.seed, Purpose::Predict, i as u64);
            let d = predict_strength(&draws, s, grid, cfg.grid.kernel, &mut rng, cfg.predict.reps_per_draw)?;
            PredictiveSummary::from_draws(&d, 0.95)
        })
        .collect::<Result<Vec<_>>>()?;
    write_all(&[(
        out(cfg, "predictions.csv"),
        reports::render_predictions(&data, &summaries)?,
    )])
}
