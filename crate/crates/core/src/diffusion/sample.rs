use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{Bound, Graph, Tensor, Var};
use crate::model::DtgModel;
use crate::perception::ConditionVector;
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// Feed each denoiser output straight into the next step, from `N` down to 1.
    #[default]
    Chained,
    /// Ancestral sampling through the Gaussian posterior `q(x_{t-1} | x_t, x0_hat)`.
    Posterior,
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chained" => Ok(Self::Chained),
            "posterior" => Ok(Self::Posterior),
            other => Err(Error::Config(format!("unknown sampler {other:?}"))),
        }
    }
}

impl std::fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Chained => "chained",
            Self::Posterior => "posterior",
        })
    }
}

/// One denoiser evaluation on flat rows `x: [B, 2M]` (row-major) at a shared step.
pub fn crnn_denoise(model: &DtgModel, x: &[f64], t: usize, conds: &[ConditionVector]) -> Result<Vec<f64>> {
    Denoiser::new(model, conds)?.denoise(x, t)
}

/// Parameters and conditions bound once, reused across denoising steps.
struct Denoiser<'a> {
    model: &'a DtgModel,
    g: Graph,
    p: Bound,
    cv: Var,
    base: usize,
    b: usize,
}

impl<'a> Denoiser<'a> {
    fn new(model: &'a DtgModel, conds: &[ConditionVector]) -> Result<Self> {
        let b = conds.len();
        if b == 0 {
            return Err(Error::Empty("condition batch"));
        }
        let dc = conds[0].dim();
        if conds.iter().any(|c| c.dim() != dc) {
            return Err(Error::shape("crnn_denoise", "condition widths differ"));
        }
        let mut g = Graph::new();
        let p = model.params().bind_frozen(&mut g);
        let cv = g.constant(Tensor::new(
            vec![b, dc],
            conds.iter().flat_map(|c| c.0.iter().copied()).collect(),
        )?);
        let base = g.len();
        Ok(Self {
            model,
            g,
            p,
            cv,
            base,
            b,
        })
    }

    fn denoise(&mut self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let n = self.model.schedule().steps();
        if t < 1 || t > n {
            return Err(Error::StepOutOfRange { t, n });
        }
        self.g.truncate(self.base);
        let width = 2 * self.model.crnn().tokens();
        let xv = self.g.constant(Tensor::new(vec![self.b, width], x.to_vec())?);
        let y = self
            .model
            .crnn()
            .forward(&mut self.g, &self.p, xv, &vec![t; self.b], self.cv)?;
        Ok(self.g.value(y).data().to_vec())
    }
}

fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draw one trajectory per condition. Noise for row `i` is drawn before row
/// `i + 1`, so a batch of one reproduces the single-condition call.
pub fn sample_batch(
    model: &DtgModel,
    conds: &[ConditionVector],
    rng: &mut impl Rng,
    mode: SamplerMode,
) -> Result<Vec<Trajectory>> {
    run(model, conds, mode, |_, n| gaussian(rng, n))
}

/// Like [`sample_batch`], but row `i` draws all of its noise from `rngs[i]`,
/// so each result is independent of the rest of the batch.
pub fn sample_batch_independent<R: Rng>(
    model: &DtgModel,
    conds: &[ConditionVector],
    rngs: &mut [R],
    mode: SamplerMode,
) -> Result<Vec<Trajectory>> {
    if rngs.len() != conds.len() {
        return Err(Error::shape(
            "sample",
            format!("{} rngs for {} conditions", rngs.len(), conds.len()),
        ));
    }
    run(model, conds, mode, |i, n| gaussian(&mut rngs[i], n))
}

fn run(
    model: &DtgModel,
    conds: &[ConditionVector],
    mode: SamplerMode,
    mut noise: impl FnMut(usize, usize) -> Vec<f64>,
) -> Result<Vec<Trajectory>> {
    let sched = model.schedule();
    let width = 2 * model.crnn().tokens();
    let draw = |noise: &mut dyn FnMut(usize, usize) -> Vec<f64>| -> Vec<f64> {
        (0..conds.len()).flat_map(|i| noise(i, width)).collect()
    };
    let mut den = Denoiser::new(model, conds)?;
    let mut x = draw(&mut noise);
    for t in (1..=sched.steps()).rev() {
        let x0 = den.denoise(&x, t)?;
        x = match mode {
            SamplerMode::Chained => x0,
            SamplerMode::Posterior if t == 1 => x0,
            SamplerMode::Posterior => {
                let (ab, ab_prev, beta) = (sched.alpha_bar(t), sched.alpha_bar(t - 1), sched.beta(t));
                let c0 = beta * ab_prev.sqrt() / (1.0 - ab);
                let ct = (1.0 - ab_prev) * sched.alpha(t).sqrt() / (1.0 - ab);
                let sigma = (beta * (1.0 - ab_prev) / (1.0 - ab)).sqrt();
                let z = draw(&mut noise);
                x0.iter()
                    .zip(&x)
                    .zip(&z)
                    .map(|((a, xt), z)| c0 * a + ct * xt + sigma * z)
                    .collect()
            }
        };
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sampled trajectory"));
    }
    x.chunks_exact(width).map(Trajectory::from_flat).collect()
}

pub fn sample(model: &DtgModel, cond: &ConditionVector, rng: &mut impl Rng, mode: SamplerMode) -> Result<Trajectory> {
    Ok(sample_batch(model, std::slice::from_ref(cond), rng, mode)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::CrnnConfig;
    use crate::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelConfig {
        let mut cfg = ModelConfig::default();
        cfg.observation.rays = 8;
        cfg.encoder.scan_hidden = vec![6];
        cfg.encoder.velocity_hidden = vec![3];
        cfg.encoder.fusion_hidden = vec![5];
        cfg.encoder.condition_dim = 4;
        cfg.crnn = CrnnConfig {
            embed_dim: 4,
            time_hidden: 3,
            hidden: 5,
            passes: 1,
        };
        cfg.diffusion.steps = 8;
        cfg
    }

    #[test]
    fn zero_network_yields_bias_prefix_sums() {
        let mut m = DtgModel::new(&tiny(), 0).unwrap();
        for t in m.params_mut().tensors_mut() {
            t.data_mut().fill(0.0);
        }
        let rb = m.params().find("crnn/readout.b").unwrap();
        m.params_mut().get_mut(rb).data_mut().copy_from_slice(&[0.9, 0.1]);
        let c = ConditionVector(vec![0.0; 4]);
        for mode in [SamplerMode::Chained, SamplerMode::Posterior] {
            let traj = sample(&m, &c, &mut ChaCha8Rng::seed_from_u64(5), mode).unwrap();
            for (k, w) in traj.waypoints().iter().enumerate() {
                let k = (k + 1) as f64;
                assert!((w[0] - 0.9 * k).abs() < 1e-12 && (w[1] - 0.1 * k).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible_and_batch_matches_single() {
        let m = DtgModel::new(&tiny(), 3).unwrap();
        let c1 = ConditionVector(vec![0.1, -0.2, 0.3, 0.4]);
        let c2 = ConditionVector(vec![-0.5, 0.0, 0.2, 0.1]);
        for mode in [SamplerMode::Chained, SamplerMode::Posterior] {
            let a = sample(&m, &c1, &mut ChaCha8Rng::seed_from_u64(8), mode).unwrap();
            let b = sample(&m, &c1, &mut ChaCha8Rng::seed_from_u64(8), mode).unwrap();
            assert_eq!(a, b);
            let batch = sample_batch(
                &m,
                &[c1.clone(), c2.clone()],
                &mut ChaCha8Rng::seed_from_u64(8),
                SamplerMode::Chained,
            )
            .unwrap();
            assert_eq!(batch.len(), 2);
            assert_ne!(batch[0], batch[1]);
            let mut rngs = [ChaCha8Rng::seed_from_u64(8), ChaCha8Rng::seed_from_u64(1)];
            let ind = sample_batch_independent(&m, &[c1.clone(), c2.clone()], &mut rngs, mode).unwrap();
            assert_eq!(ind[0], a);
        }
        let a = sample(&m, &c1, &mut ChaCha8Rng::seed_from_u64(8), SamplerMode::Posterior).unwrap();
        let b = sample(&m, &c1, &mut ChaCha8Rng::seed_from_u64(9), SamplerMode::Posterior).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn denoise_rejects_bad_steps() {
        let m = DtgModel::new(&tiny(), 3).unwrap();
        let c = ConditionVector(vec![0.0; 4]);
        assert!(crnn_denoise(&m, &[0.0; 32], 0, std::slice::from_ref(&c)).is_err());
        assert!(crnn_denoise(&m, &[0.0; 32], 9, std::slice::from_ref(&c)).is_err());
        assert!(crnn_denoise(&m, &[0.0; 31], 1, &[c]).is_err());
    }
}
