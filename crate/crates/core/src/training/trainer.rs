use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::adaptive::{AdaptiveState, DEFAULT_GATED_STEPS};
use super::loss::{diffusion_loss, traversability_loss, traversability_loss_graph};
use super::optim::{Optimizer, OptimizerKind};
use crate::dataset::Dataset;
use crate::diffusion::noise_trajectory;
use crate::error::{Error, Result};
use crate::grad::{Graph, Tensor};
use crate::model::DtgModel;
use crate::trajectory::Trajectory;
use crate::world::Observation;

/// Gating threshold on the recent diffusion loss.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Threshold {
    /// A fraction of the mean diffusion loss over the first epoch.
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Auto => s.serialize_str("auto"),
            Threshold::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Threshold::Fixed(v)),
            Raw::Str(s) if s == "auto" => Ok(Threshold::Auto),
            Raw::Str(s) => s
                .parse()
                .map(Threshold::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("expected \"auto\" or a number, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the traversability term; 0 disables it entirely.
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub h_d: Threshold,
    /// Multiplier on the first-epoch mean loss when `h_d` is `auto`.
    pub h_d_factor: f64,
    /// Step indices `0..gated_steps` may be gated.
    pub gated_steps: usize,
    pub seed: u64,
    /// Write an intermediate checkpoint every this many epochs (0: final only).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
            optimizer: OptimizerKind::Adam,
            h_d: Threshold::Auto,
            h_d_factor: 0.5,
            gated_steps: DEFAULT_GATED_STEPS,
            seed: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(Error::Config(
                "beta must be >= 0, learning rate > 0 and batch size >= 1".into(),
            ));
        }
        if let Threshold::Fixed(h) = self.h_d {
            if h.is_nan() {
                return Err(Error::Config("h_d is NaN".into()));
            }
        }
        Ok(())
    }
}

/// One training sample: a record, its 0-based step index and the injected noise.
#[derive(Clone, Debug, PartialEq)]
pub struct StepItem {
    pub record: usize,
    pub t: usize,
    pub noise: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GatePolicy {
    Adaptive,
    Always,
    Never,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemLoss {
    pub record: usize,
    pub t: usize,
    pub l_d: f64,
    pub l_t: f64,
    pub gated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// `mean_i (L_d_i + beta * gated_i * L_t_i)`.
    pub total: f64,
    pub items: Vec<ItemLoss>,
    pub rejected: bool,
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub epoch: usize,
    pub record: usize,
    pub t: usize,
    pub l_d: f64,
    pub l_t: f64,
    pub gated: bool,
    pub buffer_len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_l_d: f64,
    pub mean_total: f64,
    pub gated_items: usize,
    pub buffer: Vec<usize>,
    pub threshold: f64,
    pub rejected_steps: usize,
}

pub struct Trainer<'a> {
    model: DtgModel,
    data: &'a Dataset,
    cfg: TrainConfig,
    opt: Optimizer,
    state: AdaptiveState,
    rng: ChaCha8Rng,
    epoch: usize,
    step: usize,
    log: Vec<LogRow>,
    lt_applied: usize,
    rejected: Vec<String>,
}

impl<'a> Trainer<'a> {
    pub fn new(model: DtgModel, data: &'a Dataset, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mc = model.config();
        if data.observation != mc.observation || data.trajectory != mc.trajectory {
            return Err(Error::Config(
                "dataset sensor or trajectory layout differs from the model".into(),
            ));
        }
        if data.records.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let threshold = match cfg.h_d {
            Threshold::Auto => f64::INFINITY,
            Threshold::Fixed(h) => h,
        };
        Ok(Self {
            opt: Optimizer::new(cfg.optimizer, cfg.learning_rate, model.params()),
            state: AdaptiveState::new(model.schedule().steps(), threshold, cfg.gated_steps),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            model,
            data,
            cfg,
            epoch: 0,
            step: 0,
            log: Vec::new(),
            lt_applied: 0,
            rejected: Vec::new(),
        })
    }

    pub fn model(&self) -> &DtgModel {
        &self.model
    }

    pub fn into_model(self) -> DtgModel {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn state(&self) -> &AdaptiveState {
        &self.state
    }

    pub fn log(&self) -> &[LogRow] {
        &self.log
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// How many samples actually had the traversability term in their graph.
    pub fn lt_applications(&self) -> usize {
        self.lt_applied
    }

    /// Diagnostics for steps skipped because of a non-finite loss.
    pub fn rejected_steps(&self) -> &[String] {
        &self.rejected
    }

    /// Random step index and noise for each record.
    pub fn draw_items(&mut self, records: &[usize]) -> Vec<StepItem> {
        let n = self.model.schedule().steps();
        let width = 2 * self.model.config().trajectory.waypoints;
        records
            .iter()
            .map(|&record| {
                let t = self.rng.random_range(0..n);
                let noise = (0..width).map(|_| StandardNormal.sample(&mut self.rng)).collect();
                StepItem { record, t, noise }
            })
            .collect()
    }

    pub fn train_step(&mut self, items: &[StepItem], policy: GatePolicy) -> Result<StepReport> {
        if items.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let data = self.data;
        let width = 2 * self.model.config().trajectory.waypoints;
        let b = items.len();
        let mut noisy = Vec::with_capacity(b * width);
        let mut clean = Vec::with_capacity(b * width);
        let mut obs: Vec<&Observation> = Vec::with_capacity(b);
        for it in items {
            let r = data.records.get(it.record).ok_or(Error::Empty("record index"))?;
            let gt = r.ground_truth.flat();
            noisy.extend(noise_trajectory(&gt, it.t + 1, &it.noise, self.model.schedule())?);
            clean.extend(gt);
            obs.push(&r.observation);
        }
        let steps: Vec<usize> = items.iter().map(|it| it.t + 1).collect();

        let mut g = Graph::new();
        let p = self.model.params().bind(&mut g);
        let cond = self.model.encoder().forward(&mut g, &p, &obs)?;
        let xv = g.constant(Tensor::matrix(b, width, noisy)?);
        let pred = self.model.crnn().forward(&mut g, &p, xv, &steps, cond)?;
        let gt = g.constant(Tensor::matrix(b, width, clean.clone())?);
        let ld = g.mse(pred, gt)?;

        let pv = g.value(pred).data().to_vec();
        let mut report = StepReport {
            total: f64::NAN,
            items: Vec::with_capacity(b),
            rejected: false,
        };
        let mut l_d = Vec::with_capacity(b);
        for i in 0..b {
            l_d.push(diffusion_loss(
                &pv[i * width..(i + 1) * width],
                &clean[i * width..(i + 1) * width],
            )?);
        }
        if !g.value(ld).item().is_finite() || l_d.iter().any(|v| !v.is_finite()) {
            let msg = format!(
                "step {} epoch {}: non-finite diffusion loss, records {:?}",
                self.step,
                self.epoch,
                items.iter().map(|it| it.record).collect::<Vec<_>>()
            );
            self.rejected.push(msg);
            report.rejected = true;
            self.step += 1;
            return Ok(report);
        }

        let mut lt_terms = Vec::new();
        for (i, it) in items.iter().enumerate() {
            let r = &data.records[it.record];
            let world = data.world_of(r);
            let gated = match policy {
                GatePolicy::Adaptive => self.state.update(self.epoch, it.t, l_d[i]),
                GatePolicy::Always => true,
                GatePolicy::Never => false,
            };
            let traj = Trajectory::from_flat(&pv[i * width..(i + 1) * width])?;
            let (mut l_t, _) = traversability_loss(&traj.world_waypoints(&r.start), world)?;
            if gated && self.cfg.beta > 0.0 {
                let row = g.slice_rows(pred, i, i + 1)?;
                let lt = traversability_loss_graph(&mut g, row, &r.start, world)?;
                l_t = g.value(lt).item();
                lt_terms.push(lt);
                self.lt_applied += 1;
            }
            report.items.push(ItemLoss {
                record: it.record,
                t: it.t,
                l_d: l_d[i],
                l_t,
                gated,
            });
            self.log.push(LogRow {
                step: self.step,
                epoch: self.epoch,
                record: it.record,
                t: it.t,
                l_d: l_d[i],
                l_t,
                gated,
                buffer_len: self.state.buffer().len(),
            });
        }

        let mut total = ld;
        if let Some((&first, rest)) = lt_terms.split_first() {
            let mut s = first;
            for &v in rest {
                s = g.add(s, v)?;
            }
            let s = g.scale(s, self.cfg.beta / b as f64);
            total = g.add(ld, s)?;
        }
        report.total = g.value(total).item();
        if !report.total.is_finite() {
            self.rejected.push(format!(
                "step {} epoch {}: non-finite total loss",
                self.step, self.epoch
            ));
            report.rejected = true;
            self.step += 1;
            return Ok(report);
        }
        let mut grads = g.backward(total)?;
        let grads: Vec<Tensor> = p
            .vars()
            .iter()
            .zip(self.model.params().iter())
            .map(|(&v, (_, t))| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.shape().to_vec())))
            .collect();
        self.opt.step(self.model.params_mut(), &grads)?;
        self.step += 1;
        Ok(report)
    }

    /// One shuffled pass over the dataset.
    pub fn run_epoch(&mut self) -> Result<EpochSummary> {
        let before = self.state.buffer().clone();
        let mut order: Vec<usize> = (0..self.data.records.len()).collect();
        order.shuffle(&mut self.rng);
        let (mut sum_d, mut sum_total, mut n, mut batches, mut gated) = (0.0, 0.0, 0usize, 0usize, 0usize);
        let rejected_before = self.rejected.len();
        for chunk in order.chunks(self.cfg.batch_size) {
            let items = self.draw_items(chunk);
            let rep = self.train_step(&items, GatePolicy::Adaptive)?;
            if rep.rejected {
                continue;
            }
            sum_d += rep.items.iter().map(|i| i.l_d).sum::<f64>();
            gated += rep.items.iter().filter(|i| i.gated).count();
            n += rep.items.len();
            sum_total += rep.total;
            batches += 1;
        }
        let mean_l_d = if n > 0 { sum_d / n as f64 } else { f64::NAN };
        if self.epoch == 0 {
            if let Threshold::Auto = self.cfg.h_d {
                self.state.set_threshold(self.cfg.h_d_factor * mean_l_d);
            }
        }
        if !self.state.buffer().is_superset(&before) {
            return Err(Error::InvalidInput("gated step buffer shrank".into()));
        }
        let summary = EpochSummary {
            epoch: self.epoch,
            mean_l_d,
            mean_total: sum_total / batches.max(1) as f64,
            gated_items: gated,
            buffer: self.state.buffer().iter().copied().collect(),
            threshold: self.state.threshold(),
            rejected_steps: self.rejected.len() - rejected_before,
        };
        self.epoch += 1;
        Ok(summary)
    }

    /// Run the configured number of epochs, calling `on_epoch` after each.
    pub fn run(&mut self, mut on_epoch: impl FnMut(&EpochSummary, &DtgModel) -> Result<()>) -> Result<()> {
        while self.epoch < self.cfg.epochs {
            let s = self.run_epoch()?;
            on_epoch(&s, &self.model)?;
        }
        Ok(())
    }
}

pub const LOG_HEADER: &str = "step,epoch,record,t,l_d,l_t,gated,buffer_len";

pub fn write_log_csv(rows: &[LogRow], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.step, r.epoch, r.record, r.t, r.l_d, r.l_t, r.gated as u8, r.buffer_len
        )?;
    }
    Ok(())
}

/// Parse a log written by [`write_log_csv`].
pub fn read_log_csv(text: &str) -> Result<Vec<LogRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err(Error::Format {
            kind: "training log",
            detail: "unexpected header".into(),
        });
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || Error::Format {
                kind: "training log",
                detail: format!("bad row {l:?}"),
            };
            if f.len() != 8 {
                return Err(bad());
            }
            let u = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let x = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(LogRow {
                step: u(f[0])?,
                epoch: u(f[1])?,
                record: u(f[2])?,
                t: u(f[3])?,
                l_d: x(f[4])?,
                l_t: x(f[5])?,
                gated: f[6] == "1",
                buffer_len: u(f[7])?,
            })
        })
        .collect()
}
