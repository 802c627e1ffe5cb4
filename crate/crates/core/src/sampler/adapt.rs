//! Warmup adaptation: dual-averaging step size and windowed diagonal mass.

/// Smallest allowed inverse-mass entry.
pub const MASS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DualAverage {
    log_step: f64,
    log_step_avg: f64,
    hbar: f64,
    mu: f64,
    count: f64,
    target: f64,
}

impl DualAverage {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    pub fn new(initial_step: f64, target: f64) -> Self {
        Self {
            log_step: initial_step.ln(),
            log_step_avg: initial_step.ln(),
            hbar: 0.0,
            mu: (10.0 * initial_step).ln(),
            count: 0.0,
            target,
        }
    }

    pub fn update(&mut self, accept_stat: f64) {
        self.count += 1.0;
        let w = 1.0 / (self.count + Self::T0);
        self.hbar = (1.0 - w) * self.hbar + w * (self.target - accept_stat);
        self.log_step = self.mu - self.count.sqrt() / Self::GAMMA * self.hbar;
        let eta = self.count.powf(-Self::KAPPA);
        self.log_step_avg = eta * self.log_step + (1.0 - eta) * self.log_step_avg;
    }

    /// Step size to use for the next warmup iteration.
    pub fn current(&self) -> f64 {
        self.log_step.exp()
    }

    /// Averaged step size, frozen at the end of warmup.
    pub fn final_step(&self) -> f64 {
        self.log_step_avg.exp()
    }
}

/// Welford accumulator for per-coordinate variances.
#[derive(Debug, Clone)]
pub struct RunningVariance {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningVariance {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Regularized variances, shrunk toward 10⁻³ for short windows and floored at
    /// [`MASS_FLOOR`].
    pub fn inverse_mass(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| {
                let var = if self.n > 1 { s / (n - 1.0) } else { 1.0 };
                let reg = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
                reg.max(MASS_FLOOR)
            })
            .collect()
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|v| *v = 0.0);
        self.m2.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Expanding-window warmup plan: a fast initial buffer, doubling slow windows that
/// end in metric updates, and a fast terminal buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSchedule {
    /// 0-based warmup iterations after which the metric is re-estimated.
    pub window_ends: Vec<usize>,
    pub warmup: usize,
}

impl WindowSchedule {
    pub fn new(warmup: usize) -> Self {
        let (init, term, base) = if warmup >= 150 {
            (75, 50, 25)
        } else {
            let init = (warmup as f64 * 0.15) as usize;
            let term = (warmup as f64 * 0.1) as usize;
            (init, term, warmup.saturating_sub(init + term))
        };
        let slow_end = warmup.saturating_sub(term);
        let mut window_ends = Vec::new();
        let mut start = init;
        let mut size = base.max(1);
        while start < slow_end {
            let mut end = start + size;
            if end + 2 * size > slow_end {
                end = slow_end;
            }
            window_ends.push(end - 1);
            start = end;
            size *= 2;
        }
        Self { window_ends, warmup }
    }

    /// First iteration whose draws feed the metric estimate.
    pub fn slow_start(&self) -> usize {
        if self.warmup >= 150 {
            75
        } else {
            (self.warmup as f64 * 0.15) as usize
        }
    }

    pub fn in_slow_phase(&self, iter: usize) -> bool {
        iter >= self.slow_start() && self.window_ends.last().is_some_and(|&e| iter <= e)
    }

    pub fn ends_window(&self, iter: usize) -> bool {
        self.window_ends.contains(&iter)
    }
}
