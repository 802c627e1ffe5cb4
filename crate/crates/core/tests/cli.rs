use std::fs;
use std::path::Path;

use knotstrength::cli::run;

fn config(dir: &Path, extra: &str) -> String {
    let p = |name: &str| dir.join(name).display().to_string();
    format!(
        "seed = 17\n{extra}\n[grid]\ncells = 12\n[simulate]\nn = 24\n[hmc]\nchains = 2\niterations = 300\nwarmup = 150\n\
         [cv]\nfolds = 3\npredictive_draws = 100\n[ppc]\ndraws = 50\nbins = 10\n[predict]\ndraws = 100\n\
         [paths]\nspecimens = \"{}\"\nknots = \"{}\"\ntruth = \"{}\"\ndraws = \"{}\"\nout_dir = \"{}\"\n",
        p("specimens.csv"),
        p("knots.csv"),
        p("truth.csv"),
        p("draws.csv"),
        p("out"),
    )
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn cli(cfg: &str, cmd: &str) -> i32 {
    run(["knotstrength", "--config", cfg, cmd])
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn invalid_config_key_fails_closed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &config(dir.path(), "sede = 3"));
    for cmd in ["simulate", "fit", "summarize", "ppc", "cv", "predict"] {
        assert_eq!(cli(&cfg, cmd), 1, "{cmd}");
    }
    assert_eq!(listing(dir.path()), vec!["run.toml".to_string()]);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(run(["knotstrength", "--help"]), 0);
    assert_eq!(run(["knotstrength", "explode"]), 1);
    assert_eq!(run(["knotstrength"]), 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &config(dir.path(), ""));
    assert_eq!(cli(&cfg, "fit"), 1, "missing input files");
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, &config(d, ""));
    assert_eq!(cli(&cfg, "simulate"), 0);
    // An untested specimen is left out of fitting and checking but still predicted.
    let mut table = fs::read_to_string(d.join("specimens.csv")).unwrap();
    table.push_str("untested,2.0,,\n");
    fs::write(d.join("specimens.csv"), table).unwrap();
    for cmd in ["fit", "summarize", "ppc", "predict", "cv"] {
        assert_eq!(cli(&cfg, cmd), 0, "{cmd}");
    }
    let summary = fs::read_to_string(d.join("out/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("parameter,q50,q2.5,q97.5"));
    let names: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["eta0", "eta1", "rho", "sigma", "beta", "gamma0", "gamma1"]);

    let out = listing(&d.join("out"));
    for f in [
        "chains.csv",
        "cv_predictions.csv",
        "cv_report.csv",
        "cv_subgroups.csv",
        "diagnostics.csv",
        "ppc_hist_mean.csv",
        "ppc_report.csv",
        "predictions.csv",
        "summary.csv",
    ] {
        assert!(out.contains(&f.to_string()), "{f} missing from {out:?}");
    }
    let cv = fs::read_to_string(d.join("out/cv_report.csv")).unwrap();
    for model in ["regression1", "regression2", "bayesian", "empirical"] {
        assert!(cv.lines().any(|l| l.starts_with(model)), "{model} row missing");
    }
    let predictions = fs::read_to_string(d.join("out/predictions.csv")).unwrap();
    assert_eq!(predictions.lines().count(), 26);
    assert!(predictions.lines().any(|l| l.starts_with("untested,")));
}

#[test]
fn flags_override_config_paths_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, &config(d, ""));
    let alt = d.join("alt.csv").display().to_string();
    assert_eq!(
        run([
            "knotstrength",
            "--config",
            &cfg,
            "--seed",
            "5",
            "--specimens",
            &alt,
            "simulate"
        ]),
        0
    );
    assert!(d.join("alt.csv").exists());
    assert!(!d.join("specimens.csv").exists());
}

#[test]
fn excessive_divergences_exit_with_two() {
    // One warmup iteration leaves a wildly large initial step unadapted.
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = config(d, "").replace(
        "warmup = 150",
        "warmup = 1\ninitial_step_size = 50.0\nadapt_mass = false",
    );
    let cfg = write_config(d, &cfg);
    assert_eq!(cli(&cfg, "simulate"), 0);
    assert_eq!(cli(&cfg, "fit"), 2);
}
