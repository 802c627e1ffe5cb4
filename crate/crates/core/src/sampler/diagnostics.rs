//! Split-chain R-hat and autocorrelation-based effective sample size.

fn split_halves(chains: &[Vec<f64>]) -> Option<Vec<&[f64]>> {
    let n = chains.iter().map(Vec::len).min()?;
    let half = n / 2;
    if half < 2 {
        return None;
    }
    // an odd draw in the middle of a chain is dropped, as is any excess over the shortest chain
    Some(chains.iter().flat_map(|c| [&c[..half], &c[n - half..n]]).collect())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// (W, B) of the split halves.
fn within_between(halves: &[&[f64]]) -> (f64, f64) {
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|c| (c - grand).powi(2)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    (w, b)
}

/// Potential scale reduction over split halves; `None` when a half-chain has fewer than
/// two draws or the within-chain variance is zero.
pub fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let halves = split_halves(chains)?;
    let n = halves[0].len() as f64;
    let (w, b) = within_between(&halves);
    if !(w > 0.0) || !w.is_finite() {
        return None;
    }
    Some(((w * (n - 1.0) / n + b / n) / w).sqrt())
}

/// Autocovariance at `lag` (biased, divisor n).
fn autocov(x: &[f64], mu: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - mu) * (b - mu))
        .sum::<f64>()
        / n as f64
}

/// Multi-chain ESS over split halves using Geyer's initial positive sequence: pairs of
/// consecutive autocorrelations are summed until the first negative pair. Capped at the
/// total number of draws.
pub fn bulk_ess(chains: &[Vec<f64>]) -> Option<f64> {
    let halves = split_halves(chains)?;
    let m = halves.len();
    let n = halves[0].len();
    let (w, b) = within_between(&halves);
    if !(w > 0.0) || !w.is_finite() {
        return None;
    }
    let nf = n as f64;
    let var_plus = w * (nf - 1.0) / nf + b / nf;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let rho = |lag: usize| -> f64 {
        let mean_acov = halves
            .iter()
            .zip(&means)
            .map(|(h, mu)| autocov(h, *mu, lag))
            .sum::<f64>()
            / m as f64;
        // acov at lag 0 uses divisor n; rescale W to match
        1.0 - (w * (nf - 1.0) / nf - mean_acov) / var_plus
    };

    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        // enforce a monotone sequence
        let pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / ((m * n) as f64).log10().max(1.0));
    let total = (m * n) as f64;
    Some((total / tau).min(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn iid(seed: u64, chains: usize, n: usize, offset: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..chains)
            .map(|c| {
                (0..n)
                    .map(|_| offset(c) + rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn iid_rhat_near_one() {
        let chains = iid(1, 4, 2500, |_| 0.0);
        let r = split_rhat(&chains).unwrap();
        assert!((0.999..=1.01).contains(&r), "rhat {r}");
    }

    #[test]
    fn separated_chains_flagged() {
        let chains = iid(2, 2, 1000, |c| if c == 0 { 0.0 } else { 10.0 });
        assert!(split_rhat(&chains).unwrap() > 2.0);
    }

    #[test]
    fn iid_ess_close_to_draw_count() {
        let chains = iid(3, 4, 2500, |_| 0.0);
        let ess = bulk_ess(&chains).unwrap();
        assert!((ess - 10_000.0).abs() < 2_000.0, "ess {ess}");
        assert!(ess <= 10_000.0);
    }

    #[test]
    fn autocorrelated_chain_has_lower_ess() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let chain: Vec<f64> = (0..4000)
            .scan(0.0, |x, _| {
                *x = 0.9 * *x + rng.sample::<f64, _>(StandardNormal);
                Some(*x)
            })
            .collect();
        let ess = bulk_ess(&[chain]).unwrap();
        // theoretical n(1−ρ)/(1+ρ) ≈ 210
        assert!((100.0..400.0).contains(&ess), "ess {ess}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(split_rhat(&[vec![1.0; 100], vec![1.0; 100]]).is_none());
        assert!(split_rhat(&[vec![1.0, 2.0, 3.0]]).is_none());
        assert!(bulk_ess(&[vec![0.5; 50]]).is_none());
    }
}
