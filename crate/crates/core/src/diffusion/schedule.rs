use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Cosine,
    Linear,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Schedule(format!("unknown kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cosine => "cosine",
            Self::Linear => "linear",
        })
    }
}

const COSINE_OFFSET: f64 = 0.008;
const MAX_BETA: f64 = 0.999;

/// Per-step noise retention for steps `1..=N`.
///
/// `alpha_bar(t)` is the product of `alpha(1..=t)` and
/// `snr(t) = alpha_bar(t) / (1 - alpha_bar(t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSchedule {
    kind: ScheduleKind,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    snr: Vec<f64>,
}

impl DiffusionSchedule {
    /// Cosine: `alpha_bar(t) = f(t)/f(0)` with `f(t) = cos^2(((t/N + s)/(1 + s)) * pi/2)`.
    /// Linear: betas spaced evenly from `1e-4 * 1000/N` to `0.02 * 1000/N`, so the
    /// total noise is comparable to the classic 1000-step schedule.
    /// Betas are capped at 0.999 in both cases.
    pub fn new(steps: usize, kind: ScheduleKind) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Schedule(format!("need at least 2 steps, got {steps}")));
        }
        let n = steps as f64;
        let betas: Vec<f64> = match kind {
            ScheduleKind::Cosine => {
                let f = |t: f64| {
                    (((t / n + COSINE_OFFSET) / (1.0 + COSINE_OFFSET)) * PI / 2.0)
                        .cos()
                        .powi(2)
                };
                (1..=steps)
                    .map(|t| (1.0 - f(t as f64) / f(t as f64 - 1.0)).min(MAX_BETA))
                    .collect()
            }
            ScheduleKind::Linear => {
                let scale = 1000.0 / n;
                let (b0, b1) = (1e-4 * scale, 0.02 * scale);
                (0..steps)
                    .map(|i| (b0 + (b1 - b0) * i as f64 / (n - 1.0)).min(MAX_BETA))
                    .collect()
            }
        };
        let alpha: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        let snr = alpha_bar.iter().map(|ab| ab / (1.0 - ab)).collect();
        Ok(Self {
            kind,
            alpha,
            alpha_bar,
            snr,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    fn idx(&self, t: usize) -> usize {
        assert!(t >= 1 && t <= self.steps(), "step {t} outside 1..={}", self.steps());
        t - 1
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[self.idx(t)]
    }

    pub fn beta(&self, t: usize) -> f64 {
        1.0 - self.alpha(t)
    }

    /// `alpha_bar(0)` is 1 by convention.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[self.idx(t)]
        }
    }

    pub fn snr(&self, t: usize) -> f64 {
        self.snr[self.idx(t)]
    }
}

/// Closed-form forward noising `sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps`.
pub fn noise_trajectory(x0: &[f64], t: usize, eps: &[f64], sched: &DiffusionSchedule) -> Result<Vec<f64>> {
    if t < 1 || t > sched.steps() {
        return Err(Error::StepOutOfRange { t, n: sched.steps() });
    }
    if x0.len() != eps.len() {
        return Err(Error::shape("noise", format!("{} vs {}", x0.len(), eps.len())));
    }
    let ab = sched.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_step_linear_is_monotone() {
        let s = DiffusionSchedule::new(2, ScheduleKind::Linear).unwrap();
        assert!(s.alpha_bar(1) > s.alpha_bar(2));
        assert!(s.snr(1) > s.snr(2));
    }

    #[test]
    fn too_few_steps_is_an_error() {
        assert!(DiffusionSchedule::new(1, ScheduleKind::Cosine).is_err());
    }

    #[test]
    fn cosine_32_ends_near_zero() {
        let s = DiffusionSchedule::new(32, ScheduleKind::Cosine).unwrap();
        // Evaluate the closed form directly.
        let f = |t: f64| (((t / 32.0 + 0.008) / 1.008) * PI / 2.0).cos().powi(2);
        assert!((s.alpha_bar(1) - f(1.0) / f(0.0)).abs() < 1e-12);
        assert!((s.alpha_bar(16) - f(16.0) / f(0.0)).abs() < 1e-12);
        assert!(s.alpha_bar(32) < 0.01);
        assert!(s.alpha_bar(1) > 0.95);
    }

    #[test]
    fn zero_noise_scales_the_input() {
        let s = DiffusionSchedule::new(32, ScheduleKind::Cosine).unwrap();
        let x0 = [0.5, -1.0, 2.0];
        let out = noise_trajectory(&x0, 10, &[0.0; 3], &s).unwrap();
        for (o, x) in out.iter().zip(x0) {
            assert_eq!(*o, s.alpha_bar(10).sqrt() * x);
        }
        assert!(noise_trajectory(&x0, 0, &[0.0; 3], &s).is_err());
        assert!(noise_trajectory(&x0, 33, &[0.0; 3], &s).is_err());
    }

    #[test]
    fn near_identity_at_first_step() {
        let s = DiffusionSchedule::new(1000, ScheduleKind::Linear).unwrap();
        let out = noise_trajectory(&[1.0], 1, &[1.0], &s).unwrap();
        assert!((out[0] - 1.0).abs() < 0.011);
    }

    #[test]
    fn monte_carlo_moments_follow_the_affine_law() {
        let s = DiffusionSchedule::new(32, ScheduleKind::Cosine).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = 12;
        let n = 10_000;
        let x0 = 0.8;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                noise_trajectory(&[x0], t, &[e], &s).unwrap()[0]
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (mu, sigma2) = (s.alpha_bar(t).sqrt() * x0, 1.0 - s.alpha_bar(t));
        assert!((mean - mu).abs() < 3.0 * (sigma2 / n as f64).sqrt());
        // Standard error of the sample variance for a Gaussian.
        assert!((var - sigma2).abs() < 3.0 * sigma2 * (2.0 / (n - 1) as f64).sqrt());
    }
}
