//! Observation encoder: range scans, velocity history and goal fused into a
//! condition vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{Bound, Graph, ParamSet, Tensor, Var};
use crate::model::DtgModel;
use crate::nn::Mlp;
use crate::world::{Observation, ObservationSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    /// Hidden sizes of the scan branch (input is every normalized range).
    pub scan_hidden: Vec<usize>,
    pub velocity_hidden: Vec<usize>,
    /// Hidden sizes of the fusion MLP before the final condition layer.
    pub fusion_hidden: Vec<usize>,
    pub condition_dim: usize,
    /// Goal coordinates are divided by this (meters).
    pub goal_scale_m: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            scan_hidden: vec![512, 256],
            velocity_hidden: vec![64],
            fusion_hidden: vec![256],
            condition_dim: 256,
            goal_scale_m: 60.0,
        }
    }
}

/// Output of the encoder for one observation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionVector(pub Vec<f64>);

impl ConditionVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug)]
pub struct PerceptionEncoder {
    scan: Mlp,
    velocity: Mlp,
    fusion: Mlp,
    spec: ObservationSpec,
    goal_scale: f64,
}

fn sizes(input: usize, hidden: &[usize]) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).collect()
}

impl PerceptionEncoder {
    pub fn new(params: &mut ParamSet, spec: ObservationSpec, cfg: &EncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        if cfg.scan_hidden.is_empty() || cfg.velocity_hidden.is_empty() || cfg.condition_dim == 0 {
            return Err(Error::Config("encoder branches need at least one layer".into()));
        }
        if cfg.goal_scale_m <= 0.0 || spec.max_range_m <= 0.0 {
            return Err(Error::Config("goal scale and max range must be positive".into()));
        }
        let scan = Mlp::new(
            params,
            "perception/scan",
            &sizes(spec.scan_frames * spec.rays, &cfg.scan_hidden),
            rng,
        );
        let velocity = Mlp::new(
            params,
            "perception/velocity",
            &sizes(2 * spec.velocity_frames, &cfg.velocity_hidden),
            rng,
        );
        let mut fuse = sizes(scan.out_dim() + velocity.out_dim() + 2, &cfg.fusion_hidden);
        fuse.push(cfg.condition_dim);
        let fusion = Mlp::new(params, "perception/fusion", &fuse, rng);
        Ok(Self {
            scan,
            velocity,
            fusion,
            spec,
            goal_scale: cfg.goal_scale_m,
        })
    }

    pub fn spec(&self) -> &ObservationSpec {
        &self.spec
    }

    pub fn condition_dim(&self) -> usize {
        self.fusion.out_dim()
    }

    /// Normalized input rows `(scans, velocities, goal)` for a batch.
    pub fn features(&self, batch: &[&Observation]) -> Result<[Tensor; 3]> {
        if batch.is_empty() {
            return Err(Error::Empty("observation batch"));
        }
        let inv = 1.0 / self.spec.max_range_m;
        let (mut s, mut v, mut g) = (Vec::new(), Vec::new(), Vec::new());
        for obs in batch {
            obs.validate(&self.spec)?;
            if obs.scans.iter().any(|&r| !(0.0..=self.spec.max_range_m).contains(&r)) {
                return Err(Error::InvalidInput(format!(
                    "scan range outside [0, {}]",
                    self.spec.max_range_m
                )));
            }
            s.extend(obs.scans.iter().map(|r| r * inv));
            v.extend(obs.velocities.iter().flatten());
            g.extend(obs.goal.iter().map(|x| x / self.goal_scale));
        }
        let b = batch.len();
        Ok([
            Tensor::matrix(b, self.spec.scan_frames * self.spec.rays, s)?,
            Tensor::matrix(b, 2 * self.spec.velocity_frames, v)?,
            Tensor::matrix(b, 2, g)?,
        ])
    }

    /// Condition rows `[B, D_c]` on `g`.
    pub fn forward(&self, g: &mut Graph, p: &Bound, batch: &[&Observation]) -> Result<Var> {
        let [s, v, goal] = self.features(batch)?;
        let s = g.constant(s);
        let v = g.constant(v);
        let goal = g.constant(goal);
        let hs = self.scan.forward(g, p, s)?;
        let hv = self.velocity.forward(g, p, v)?;
        let x = g.concat(&[hs, hv, goal])?;
        self.fusion.forward(g, p, x)
    }
}

pub fn encode(model: &DtgModel, obs: &Observation) -> Result<ConditionVector> {
    Ok(encode_batch(model, &[obs])?.remove(0))
}

pub fn encode_batch(model: &DtgModel, batch: &[&Observation]) -> Result<Vec<ConditionVector>> {
    let mut g = Graph::new();
    let p = model.params().bind_frozen(&mut g);
    let c = model.encoder().forward(&mut g, &p, batch)?;
    let t = g.value(c);
    let out: Vec<ConditionVector> = (0..t.rows())
        .map(|r| ConditionVector(t.row_slice(r).to_vec()))
        .collect();
    if out.iter().any(|c| c.0.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("condition vector"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn small() -> ModelConfig {
        let mut cfg = ModelConfig::default();
        cfg.observation.rays = 8;
        cfg.encoder.scan_hidden = vec![6];
        cfg.encoder.velocity_hidden = vec![3];
        cfg.encoder.fusion_hidden = vec![5];
        cfg.encoder.condition_dim = 4;
        cfg
    }

    fn obs(cfg: &ModelConfig, range: f64) -> Observation {
        let s = cfg.observation;
        Observation {
            scans: vec![range; s.scan_frames * s.rays],
            velocities: vec![[0.5, 0.1]; s.velocity_frames],
            goal: [12.0, -3.0],
        }
    }

    #[test]
    fn zero_weights_propagate_biases_only() {
        let cfg = small();
        let mut m = DtgModel::new(&cfg, 0).unwrap();
        for t in m.params_mut().tensors_mut() {
            t.data_mut().fill(0.0);
        }
        let fb = m.params().find("perception/fusion.1.b").unwrap();
        m.params_mut()
            .get_mut(fb)
            .data_mut()
            .copy_from_slice(&[0.1, -0.2, 0.3, 0.0]);
        let c = encode(&m, &obs(&cfg, 0.0)).unwrap();
        let want: Vec<f64> = [0.1f64, -0.2, 0.3, 0.0].iter().map(|b| b.tanh()).collect();
        assert_eq!(c.0, want);
    }

    #[test]
    fn encoding_is_deterministic() {
        let cfg = small();
        let m = DtgModel::new(&cfg, 3).unwrap();
        let o = obs(&cfg, 7.0);
        assert_eq!(encode(&m, &o).unwrap(), encode(&m, &o).unwrap());
        let batch = encode_batch(&m, &[&o, &obs(&cfg, 2.0)]).unwrap();
        assert_eq!(batch[0], encode(&m, &o).unwrap());
    }

    #[test]
    fn ranges_beyond_max_are_rejected() {
        let cfg = small();
        let m = DtgModel::new(&cfg, 3).unwrap();
        let o = obs(&cfg, cfg.observation.max_range_m + 0.1);
        assert!(matches!(encode(&m, &o), Err(Error::InvalidInput(_))));
        let mut o = obs(&cfg, 1.0);
        o.velocities.pop();
        assert!(matches!(encode(&m, &o), Err(Error::Shape { .. })));
    }

    #[test]
    fn one_ray_perturbation_is_lipschitz_bounded() {
        let cfg = small();
        let m = DtgModel::new(&cfg, 9).unwrap();
        let base = obs(&cfg, 5.0);
        let c0 = encode(&m, &base).unwrap();
        // Finite-difference Jacobian column for ray 3.
        let h = 1e-6;
        let mut o = base.clone();
        o.scans[3] += h;
        let col: f64 = encode(&m, &o)
            .unwrap()
            .0
            .iter()
            .zip(&c0.0)
            .map(|(a, b)| ((a - b) / h).powi(2))
            .sum::<f64>()
            .sqrt();
        for delta in [0.01, 0.1, 0.5] {
            let mut o = base.clone();
            o.scans[3] += delta;
            let d: f64 = encode(&m, &o)
                .unwrap()
                .0
                .iter()
                .zip(&c0.0)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            // The local slope times a safety factor for curvature over delta.
            assert!(d <= 2.0 * col * delta + 1e-9, "delta {delta}: {d} vs {}", col * delta);
        }
    }
}
