//! Euclidean HMC with a diagonal metric and jittered trajectory length.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::posterior::AugmentedPosterior;

/// Energy error beyond which a transition counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// A differentiable log density on ℝⁿ.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Log density at `z`; writes the gradient into `grad`.
    fn logp_and_grad(&self, z: &[f64], grad: &mut [f64]) -> Result<f64>;
}

impl LogDensity for AugmentedPosterior {
    fn dim(&self) -> usize {
        AugmentedPosterior::dim(self)
    }

    fn logp_and_grad(&self, z: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.log_density_and_gradient(z, grad)
    }
}

/// Integrates `n_steps` leapfrog steps in place. On entry `grad` must hold ∇log p(z);
/// on success it holds the gradient at the final point and the final log density is
/// returned. Any non-finite evaluation aborts the trajectory with an error.
pub fn leapfrog<G>(
    z: &mut [f64],
    momentum: &mut [f64],
    grad: &mut [f64],
    step_size: f64,
    n_steps: usize,
    inv_mass: &[f64],
    mut grad_fn: G,
) -> Result<f64>
where
    G: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let half = 0.5 * step_size;
    let mut logp = f64::NAN;
    for _ in 0..n_steps {
        for (p, g) in momentum.iter_mut().zip(grad.iter()) {
            *p += half * g;
        }
        for ((x, p), m) in z.iter_mut().zip(momentum.iter()).zip(inv_mass) {
            *x += step_size * m * p;
        }
        logp = grad_fn(z, grad)?;
        for (p, g) in momentum.iter_mut().zip(grad.iter()) {
            *p += half * g;
        }
    }
    Ok(logp)
}

pub fn kinetic_energy(momentum: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * momentum.iter().zip(inv_mass).map(|(p, m)| p * p * m).sum::<f64>()
}

/// Current position of a chain with its cached density and gradient.
#[derive(Debug, Clone)]
pub struct HmcState {
    pub z: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

impl HmcState {
    pub fn new<T: LogDensity + ?Sized>(target: &T, z: Vec<f64>) -> Result<Self> {
        let mut grad = vec![0.0; z.len()];
        let logp = target.logp_and_grad(&z, &mut grad)?;
        Ok(Self { z, logp, grad })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub accepted: bool,
    pub divergent: bool,
    /// min(1, exp(−ΔH)); zero for divergent transitions.
    pub accept_stat: f64,
    pub n_steps: usize,
}

/// One Metropolis-corrected HMC transition with a fixed number of leapfrog steps.
pub fn hmc_iterate<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &mut HmcState,
    step_size: f64,
    n_steps: usize,
    inv_mass: &[f64],
    rng: &mut R,
) -> Transition {
    let mut momentum: Vec<f64> = inv_mass
        .iter()
        .map(|m| rng.sample::<f64, _>(StandardNormal) / m.sqrt())
        .collect();
    let h0 = -state.logp + kinetic_energy(&momentum, inv_mass);

    let mut z = state.z.clone();
    let mut grad = state.grad.clone();
    let result = leapfrog(
        &mut z,
        &mut momentum,
        &mut grad,
        step_size,
        n_steps,
        inv_mass,
        |x, g| target.logp_and_grad(x, g),
    );

    let (logp, delta) = match result {
        Ok(logp) => {
            let h1 = -logp + kinetic_energy(&momentum, inv_mass);
            (logp, h1 - h0)
        }
        Err(_) => (f64::NAN, f64::INFINITY),
    };
    if !delta.is_finite() || delta.abs() > DIVERGENCE_THRESHOLD {
        return Transition {
            accepted: false,
            divergent: true,
            accept_stat: 0.0,
            n_steps,
        };
    }
    let accept_stat = (-delta).exp().min(1.0);
    let accepted = rng.random::<f64>() < accept_stat;
    if accepted {
        state.z = z;
        state.logp = logp;
        state.grad = grad;
    }
    Transition {
        accepted,
        divergent: false,
        accept_stat,
        n_steps,
    }
}

/// Doubles or halves an initial step size until the one-step acceptance crosses ½.
pub fn find_reasonable_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &HmcState,
    inv_mass: &[f64],
    initial: f64,
    rng: &mut R,
) -> f64 {
    let mut step = initial;
    let one_step = |step: f64, rng: &mut R| -> f64 {
        let mut momentum: Vec<f64> = inv_mass
            .iter()
            .map(|m| rng.sample::<f64, _>(StandardNormal) / m.sqrt())
            .collect();
        let h0 = -state.logp + kinetic_energy(&momentum, inv_mass);
        let mut z = state.z.clone();
        let mut grad = state.grad.clone();
        match leapfrog(&mut z, &mut momentum, &mut grad, step, 1, inv_mass, |x, g| {
            target.logp_and_grad(x, g)
        }) {
            Ok(logp) => {
                let h1 = -logp + kinetic_energy(&momentum, inv_mass);
                let d = h0 - h1;
                if d.is_finite() {
                    d
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let log_half = 0.5f64.ln();
    let first = one_step(step, rng);
    let direction = if first > log_half { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let d = one_step(step, rng);
        if direction > 0.0 && !(d > log_half) {
            break;
        }
        if direction < 0.0 && d > log_half {
            break;
        }
        step = if direction > 0.0 { step * 2.0 } else { step * 0.5 };
        if !(1e-12..=1e6).contains(&step) {
            break;
        }
    }
    step.clamp(1e-12, 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn std_normal(z: &[f64], g: &mut [f64]) -> Result<f64> {
        for (gi, zi) in g.iter_mut().zip(z) {
            *gi = -zi;
        }
        Ok(-0.5 * z.iter().map(|v| v * v).sum::<f64>())
    }

    #[test]
    fn one_step_on_standard_normal() {
        let h = 0.1;
        let mut z = vec![1.0];
        let mut p = vec![0.0];
        let mut g = vec![-1.0];
        leapfrog(&mut z, &mut p, &mut g, h, 1, &[1.0], std_normal).unwrap();
        assert_relative_eq!(z[0], 1.0 - h * h / 2.0, max_relative = 1e-15);
        // p' = −h/2·z − h/2·z' by hand
        assert_relative_eq!(p[0], -h / 2.0 - h / 2.0 * (1.0 - h * h / 2.0), max_relative = 1e-15);
    }

    /// Quadratic target with a fixed symmetric positive definite precision.
    fn quadratic(precision: &[[f64; 3]; 3]) -> impl Fn(&[f64], &mut [f64]) -> Result<f64> + '_ {
        move |z, g| {
            let mut lp = 0.0;
            for i in 0..3 {
                let row: f64 = (0..3).map(|j| precision[i][j] * z[j]).sum();
                g[i] = -row;
                lp -= 0.5 * z[i] * row;
            }
            Ok(lp)
        }
    }

    #[test]
    fn reversible_on_quadratic() {
        let prec = [[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 0.5]];
        let f = quadratic(&prec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let z0: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let p0: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let inv_mass = [0.7, 1.3, 2.0];
            let (mut z, mut p) = (z0.clone(), p0.clone());
            let mut g = vec![0.0; 3];
            f(&z, &mut g).unwrap();
            leapfrog(&mut z, &mut p, &mut g, 0.2, 37, &inv_mass, &f).unwrap();
            p.iter_mut().for_each(|v| *v = -*v);
            leapfrog(&mut z, &mut p, &mut g, 0.2, 37, &inv_mass, &f).unwrap();
            for i in 0..3 {
                assert!((z[i] - z0[i]).abs() < 1e-8);
                assert!((p[i] + p0[i]).abs() < 1e-8);
            }
        }
    }

    fn max_energy_error(h: f64, steps: usize) -> f64 {
        let mut z = vec![1.0, -0.5];
        let mut p = vec![0.3, 0.8];
        let inv_mass = [1.0, 1.0];
        let mut g = vec![0.0; 2];
        let lp = std_normal(&z, &mut g).unwrap();
        let h0 = -lp + kinetic_energy(&p, &inv_mass);
        let mut worst: f64 = 0.0;
        for _ in 0..steps {
            let lp = leapfrog(&mut z, &mut p, &mut g, h, 1, &inv_mass, std_normal).unwrap();
            worst = worst.max((-lp + kinetic_energy(&p, &inv_mass) - h0).abs());
        }
        worst
    }

    #[test]
    fn energy_error_is_second_order() {
        let coarse = max_energy_error(0.2, 100);
        let fine = max_energy_error(0.05, 100);
        let ratio = coarse / fine;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    struct Gauss2;
    impl LogDensity for Gauss2 {
        fn dim(&self) -> usize {
            2
        }
        fn logp_and_grad(&self, z: &[f64], g: &mut [f64]) -> Result<f64> {
            std_normal(z, g)
        }
    }

    #[test]
    fn tiny_steps_always_accept() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut state = HmcState::new(&Gauss2, vec![0.4, -1.2]).unwrap();
        for _ in 0..50 {
            let t = hmc_iterate(&Gauss2, &mut state, 1e-6, 3, &[1.0, 1.0], &mut rng);
            assert!(t.accept_stat > 0.999_999);
            assert!(!t.divergent);
        }
    }

    struct Broken;
    impl LogDensity for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn logp_and_grad(&self, z: &[f64], g: &mut [f64]) -> Result<f64> {
            if z[0].abs() > 1.5 {
                return Err(crate::Error::NonFinite("test".into()));
            }
            g[0] = -z[0];
            Ok(-0.5 * z[0] * z[0])
        }
    }

    #[test]
    fn failed_trajectory_is_divergent_and_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = HmcState::new(&Broken, vec![1.4]).unwrap();
        let t = hmc_iterate(&Broken, &mut state, 50.0, 1, &[1.0], &mut rng);
        assert!(t.divergent);
        assert!(!t.accepted);
        assert_eq!(state.z, vec![1.4]);
    }
}
