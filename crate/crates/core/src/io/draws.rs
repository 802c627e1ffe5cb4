//! Posterior draws CSV: one row per retained iteration.

use crate::error::Result;
use crate::model::ModelParams;
use crate::sampler::{ChainDraws, PosteriorDraws};

use super::tables::Table;
use super::{fmt_f64, CsvBuffer};

pub const DRAWS_HEADER: [&str; 10] = [
    "chain",
    "iteration",
    "eta0",
    "eta1",
    "rho",
    "sigma",
    "beta",
    "gamma0",
    "gamma1",
    "log_posterior",
];

/// Chains and iterations are numbered from 1.
pub fn render_draws(draws: &PosteriorDraws) -> Result<Vec<u8>> {
    let mut w = CsvBuffer::new(&DRAWS_HEADER)?;
    for (c, chain) in draws.chains.iter().enumerate() {
        for (i, (theta, lp)) in chain.theta.iter().zip(&chain.log_posterior).enumerate() {
            let mut row = vec![(c + 1).to_string(), (i + 1).to_string()];
            row.extend(theta.to_array().iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(*lp));
            w.row(row)?;
        }
    }
    w.finish()
}

/// Inverse of [`render_draws`]. Rows must be grouped by chain (1, 2, …) with
/// iterations numbered consecutively from 1, and every draw must be a valid θ.
pub fn parse_draws(text: &str, source: &str) -> Result<PosteriorDraws> {
    let t = Table::parse(text, source)?;
    let cols: Vec<usize> = DRAWS_HEADER.iter().map(|h| t.column(h)).collect::<Result<_>>()?;
    let mut chains: Vec<ChainDraws> = Vec::new();
    for (row, rec) in t.rows() {
        let row = *row;
        let int = |i: usize| -> Result<usize> {
            let raw = t.field(row, rec, cols[i])?;
            raw.parse()
                .map_err(|_| t.err(row, format!("{}: cannot parse '{raw}' as an integer", DRAWS_HEADER[i])))
        };
        let chain = int(0)?;
        let iteration = int(1)?;
        if chain == chains.len() + 1 {
            chains.push(ChainDraws::default());
        } else if chain != chains.len() || chain == 0 {
            return Err(t.err(row, format!("chain {chain} out of sequence")));
        }
        let current = chains.last_mut().expect("a chain was pushed above");
        if iteration != current.theta.len() + 1 {
            return Err(t.err(row, format!("iteration {iteration} out of sequence")));
        }
        let values: Vec<f64> = (2..9)
            .map(|i| t.float(row, rec, cols[i], DRAWS_HEADER[i]))
            .collect::<Result<_>>()?;
        let theta = ModelParams::from_slice(&values);
        theta.validate().map_err(|e| t.err(row, e.to_string()))?;
        current.theta.push(theta);
        current.log_posterior.push(t.float(row, rec, cols[9], "log_posterior")?);
    }
    if chains.is_empty() {
        return Err(t.err(1, "no draws"));
    }
    Ok(PosteriorDraws { chains })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let theta = |x: f64| ModelParams {
            eta0: x,
            rho: 0.1 + x / 10.0,
            ..ModelParams::SIMULATION_TRUTH
        };
        let draws = PosteriorDraws {
            chains: (0..2)
                .map(|c| ChainDraws {
                    theta: (0..3).map(|i| theta(1.0 / 3.0 + (c * 3 + i) as f64)).collect(),
                    log_posterior: vec![-1e-300, 12.345678901234567, -7.0],
                    latents: None,
                })
                .collect(),
        };
        let text = String::from_utf8(render_draws(&draws).unwrap()).unwrap();
        assert_eq!(parse_draws(&text, "d").unwrap(), draws);
    }

    #[test]
    fn sequence_errors() {
        let head = DRAWS_HEADER.join(",");
        let row = |c, i| format!("{c},{i},3,1.5,0.7,0.8,0.5,0.25,0.15,-1\n");
        assert!(parse_draws(&format!("{head}\n{}{}", row(1, 1), row(1, 2)), "d").is_ok());
        assert!(parse_draws(&format!("{head}\n{}{}", row(1, 1), row(1, 3)), "d").is_err());
        assert!(parse_draws(&format!("{head}\n{}{}", row(1, 1), row(3, 1)), "d").is_err());
        assert!(parse_draws(&format!("{head}\n{}", row(0, 1)), "d").is_err());
        assert!(parse_draws(&format!("{head}\n"), "d").is_err());
        let bad_rho = format!("{head}\n1,1,3,1.5,1.2,0.8,0.5,0.25,0.15,-1\n");
        assert!(parse_draws(&bad_rho, "d").is_err());
    }
}
