//! Small descriptive-statistics helpers shared by the sampler and evaluation code,
//! plus the standard-normal tail functions used by the latent transform.

use libm::erfc;
use statrs::function::erf::erfc_inv;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Above this point the upper tail is evaluated from the Mills ratio.
const TAIL_SWITCH: f64 = 25.0;

/// Quantile by linear interpolation between order statistics (position `p·(n−1)`).
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantiles(values: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance (n − 1 denominator); zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

pub fn sd(values: &[f64]) -> f64 {
    variance(values).sqrt()
}

/// Equal-width histogram over [min, max]; returns (edges, counts) with
/// `edges.len() == counts.len() + 1`.
pub fn histogram(values: &[f64], bins: usize) -> (Vec<f64>, Vec<u64>) {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return (vec![0.0, 0.0], vec![0]);
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    (edges, counts)
}

/// Mills ratio Φc(x)/φ(x) for large x by its continued fraction.
fn mills_ratio(x: f64) -> f64 {
    let mut acc = x;
    for k in (1..=40).rev() {
        acc = x + k as f64 / acc;
    }
    1.0 / acc
}

/// log Φc(x), the log upper-tail probability of a standard normal.
pub fn norm_log_sf(x: f64) -> f64 {
    if x >= TAIL_SWITCH {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
    } else if x < -5.0 {
        (-0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)).ln_1p()
    } else {
        (0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)).ln()
    }
}

/// Hazard φ(x)/Φc(x), which is −d log Φc(x)/dx.
pub fn norm_hazard(x: f64) -> f64 {
    if x >= TAIL_SWITCH {
        1.0 / mills_ratio(x)
    } else {
        (-0.5 * x * x - LN_SQRT_2PI - norm_log_sf(x)).exp()
    }
}

/// Inverse of [`norm_log_sf`]: the `t` with log Φc(t) = `log_p`, for `log_p ≤ 0`.
/// Returns a non-finite value when the answer is not representable.
pub fn norm_log_sf_inv(log_p: f64) -> f64 {
    let mut t = if log_p < -std::f64::consts::LN_2 {
        let p = log_p.exp();
        if p > 1e-300 {
            std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
        } else {
            let r = (-2.0 * log_p).sqrt();
            (-2.0 * log_p - 2.0 * r.ln() - 2.0 * LN_SQRT_2PI).sqrt()
        }
    } else {
        let q = -log_p.exp_m1();
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * q)
    };
    // Newton on the log scale; log Φc is concave so this settles in a few steps.
    for _ in 0..8 {
        if !t.is_finite() {
            break;
        }
        let log_sf = norm_log_sf(t);
        let hazard = if t >= TAIL_SWITCH {
            1.0 / mills_ratio(t)
        } else {
            (-0.5 * t * t - LN_SQRT_2PI - log_sf).exp()
        };
        let step = (log_sf - log_p) / hazard;
        t += step;
        if step.abs() <= 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    t
}
