//! Result tables written by the CLI.

use crate::error::Result;
use crate::evaluation::{CvReport, PpcReport, Prediction, PredictiveSummary, QuantityCheck};
use crate::model::Specimen;
use crate::sampler::{Diagnostics, QuantileTable};
use crate::stats;

use super::{fmt_f64, fmt_opt, CsvBuffer};

fn prob_label(p: f64) -> String {
    format!("q{}", p * 100.0)
}

/// parameter, q50, q2.5, q97.5 (one column per requested probability).
pub fn render_summary(table: &QuantileTable) -> Result<Vec<u8>> {
    let header: Vec<String> = std::iter::once("parameter".to_string())
        .chain(table.probs.iter().map(|&p| prob_label(p)))
        .collect();
    let mut w = CsvBuffer::new(&header)?;
    for (name, q) in &table.rows {
        w.row(std::iter::once(name.to_string()).chain(q.iter().map(|&v| fmt_f64(v))))?;
    }
    w.finish()
}

pub fn render_diagnostics(d: &Diagnostics) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&["parameter", "rhat", "ess_bulk"])?;
    for p in &d.parameters {
        w.row([p.name.to_string(), fmt_opt(p.rhat), fmt_opt(p.ess_bulk)])?;
    }
    w.finish()
}

pub fn render_chains(d: &Diagnostics) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&[
        "chain",
        "step_size",
        "max_leapfrog_steps",
        "retained",
        "divergences",
        "mean_accept",
    ])?;
    for (c, run) in d.chains.iter().enumerate() {
        w.row([
            (c + 1).to_string(),
            fmt_f64(run.step_size),
            run.max_leapfrog_steps.to_string(),
            run.retained.to_string(),
            run.divergences.to_string(),
            fmt_f64(run.mean_accept),
        ])?;
    }
    w.finish()
}

pub fn render_predictions(specimens: &[Specimen], summaries: &[PredictiveSummary]) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&["id", "mean", "q2.5", "q97.5", "draws"])?;
    for (s, p) in specimens.iter().zip(summaries) {
        w.row([
            s.id.clone(),
            fmt_f64(p.mean),
            fmt_f64(p.lower),
            fmt_f64(p.upper),
            p.draws.to_string(),
        ])?;
    }
    w.finish()
}

pub fn render_cv_report(report: &CvReport) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&[
        "model",
        "mean_prediction",
        "mean_prediction_se",
        "mspe",
        "mspe_se",
        "mape",
        "mape_se",
        "interval_length",
        "interval_length_se",
    ])?;
    for m in &report.models {
        w.row([
            m.name.clone(),
            fmt_f64(m.mean_prediction.value),
            fmt_f64(m.mean_prediction.se),
            fmt_f64(m.mspe.value),
            fmt_f64(m.mspe.se),
            fmt_f64(m.mape.value),
            fmt_f64(m.mape.se),
            fmt_f64(m.interval_length.value),
            fmt_f64(m.interval_length.se),
        ])?;
    }
    w.row([
        "empirical".to_string(),
        fmt_f64(stats::mean(&report.observed)),
        fmt_f64(stats::sd(&report.observed) / (report.observed.len() as f64).sqrt()),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ])?;
    w.finish()
}

/// Held-out predictions of every model, one row per (specimen, model).
pub fn render_cv_predictions(specimens: &[Specimen], report: &CvReport) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&["id", "fold", "observed", "model", "mean", "lower", "upper"])?;
    for (i, s) in specimens.iter().enumerate() {
        for m in &report.models {
            let Prediction { mean, lower, upper } = m.predictions[i];
            w.row([
                s.id.clone(),
                (report.folds[i] + 1).to_string(),
                fmt_f64(report.observed[i]),
                m.name.clone(),
                fmt_f64(mean),
                fmt_f64(lower),
                fmt_f64(upper),
            ])?;
        }
    }
    w.finish()
}

/// (subgroup name, size, per-model MSPE).
/// Subgroup name, its size, and (model, MSPE) pairs.
pub type SubgroupRow = (String, usize, Vec<(String, f64)>);

pub fn render_subgroups(rows: &[SubgroupRow]) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&["subgroup", "n", "model", "mspe"])?;
    for (group, n, models) in rows {
        for (model, mspe) in models {
            w.row([group.clone(), n.to_string(), model.clone(), fmt_f64(*mspe)])?;
        }
    }
    w.finish()
}

pub fn render_ppc_report(report: &PpcReport) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&["quantity", "observed", "lower", "upper", "p_value", "replicates"])?;
    for c in &report.checks {
        w.row([
            c.quantity.name().to_string(),
            fmt_f64(c.observed),
            fmt_f64(c.lower),
            fmt_f64(c.upper),
            fmt_f64(c.p_value),
            c.replicated.len().to_string(),
        ])?;
    }
    w.finish()
}

/// Histogram of the replicated values of one quantity: bin_lower, bin_upper, count.
pub fn render_ppc_histogram(check: &QuantityCheck, bins: usize) -> Result<Vec<u8>> {
    let (edges, counts) = stats::histogram(&check.replicated, bins);
    let mut w = CsvBuffer::new(&["bin_lower", "bin_upper", "count"])?;
    for (i, c) in counts.iter().enumerate() {
        w.row([fmt_f64(edges[i]), fmt_f64(edges[i + 1]), c.to_string()])?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::sampler::{posterior_quantiles, ChainDraws, PosteriorDraws, SUMMARY_PROBS};

    #[test]
    fn summary_columns() {
        let draws = PosteriorDraws {
            chains: vec![ChainDraws {
                theta: vec![ModelParams::SIMULATION_TRUTH; 4],
                log_posterior: vec![0.0; 4],
                latents: None,
            }],
        };
        let t = posterior_quantiles(&draws, &SUMMARY_PROBS).unwrap();
        let text = String::from_utf8(render_summary(&t).unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "parameter,q50,q2.5,q97.5");
        assert_eq!(text.lines().count(), 8);
        assert!(text.lines().nth(1).unwrap().starts_with("eta0,3."));
    }
}
