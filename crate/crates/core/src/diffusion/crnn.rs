use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{Bound, Graph, ParamId, ParamSet, Tensor, Var};
use crate::nn::Dense;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrnnConfig {
    /// Sinusoidal step-embedding width (even).
    pub embed_dim: usize,
    /// Output width of the embedding projection.
    pub time_hidden: usize,
    /// GRU state width.
    pub hidden: usize,
    /// Full sweeps over the token sequence; each sweep after the first reads
    /// the previous sweep's output.
    pub passes: usize,
}

impl Default for CrnnConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            time_hidden: 128,
            hidden: 128,
            passes: 1,
        }
    }
}

/// Interleaved `[sin(t w_0), cos(t w_0), sin(t w_1), ...]` with
/// `w_i = 10000^(-2i/dim)`.
pub fn sinusoidal_embedding(t: usize, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim / 2 {
        let w = 10000f64.powf(-2.0 * i as f64 / dim as f64);
        out.push((t as f64 * w).sin());
        out.push((t as f64 * w).cos());
    }
    out
}

/// GRU with combined gate weights in `[reset | update | candidate]` order.
#[derive(Clone, Debug)]
struct Gru {
    wx: ParamId,
    bx: ParamId,
    wh: ParamId,
    bh: ParamId,
    hidden: usize,
}

impl Gru {
    fn new(params: &mut ParamSet, name: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let a = 1.0 / (hidden as f64).sqrt();
        let mut u = |rows: usize| {
            let d = (0..rows * 3 * hidden).map(|_| rng.random_range(-a..a)).collect();
            Tensor::new(vec![rows, 3 * hidden], d).expect("sized")
        };
        let (wx, bx, wh, bh) = (u(input), u(1), u(hidden), u(1));
        Self {
            wx: params.push(format!("{name}.wx"), wx),
            bx: params.push(format!("{name}.bx"), bx),
            wh: params.push(format!("{name}.wh"), wh),
            bh: params.push(format!("{name}.bh"), bh),
            hidden,
        }
    }

    fn step(&self, g: &mut Graph, p: &Bound, x: Var, h: Var) -> Result<Var> {
        let n = self.hidden;
        let gx = g.matmul(x, p.var(self.wx))?;
        let gx = g.add(gx, p.var(self.bx))?;
        let gh = g.matmul(h, p.var(self.wh))?;
        let gh = g.add(gh, p.var(self.bh))?;
        let (xr, xz, xn) = (
            g.slice_cols(gx, 0, n)?,
            g.slice_cols(gx, n, 2 * n)?,
            g.slice_cols(gx, 2 * n, 3 * n)?,
        );
        let (hr, hz, hn) = (
            g.slice_cols(gh, 0, n)?,
            g.slice_cols(gh, n, 2 * n)?,
            g.slice_cols(gh, 2 * n, 3 * n)?,
        );
        let r = g.add(xr, hr)?;
        let r = g.sigmoid(r);
        let z = g.add(xz, hz)?;
        let z = g.sigmoid(z);
        let rh = g.mul(r, hn)?;
        let cand = g.add(xn, rh)?;
        let cand = g.tanh(cand);
        // h' = (1 - z) * cand + z * h = cand + z * (h - cand)
        let diff = g.sub(h, cand)?;
        let zd = g.mul(z, diff)?;
        g.add(cand, zd)
    }
}

/// Conditional recurrent denoiser. The initial GRU state comes from the step
/// embedding and the condition vector; the GRU then reads the noisy increments
/// one waypoint at a time and a shared head maps each state to a clean
/// increment estimate.
#[derive(Clone, Debug)]
pub struct Crnn {
    f1: Dense,
    f2: Dense,
    gru: Gru,
    readout: Dense,
    embed_dim: usize,
    condition_dim: usize,
    tokens: usize,
    passes: usize,
}

impl Crnn {
    pub fn new(
        params: &mut ParamSet,
        cfg: &CrnnConfig,
        condition_dim: usize,
        tokens: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if cfg.embed_dim == 0 || !cfg.embed_dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "embed_dim must be even and positive, got {}",
                cfg.embed_dim
            )));
        }
        if cfg.hidden == 0 || cfg.time_hidden == 0 || cfg.passes == 0 || tokens == 0 {
            return Err(Error::Config("denoiser sizes must be positive".into()));
        }
        let f1 = Dense::new(params, "crnn/f1", cfg.embed_dim, cfg.time_hidden, rng);
        let f2 = Dense::new(params, "crnn/f2", cfg.time_hidden + condition_dim, cfg.hidden, rng);
        let gru = Gru::new(params, "crnn/gru", 2, cfg.hidden, rng);
        let readout = Dense::new(params, "crnn/readout", cfg.hidden, 2, rng);
        Ok(Self {
            f1,
            f2,
            gru,
            readout,
            embed_dim: cfg.embed_dim,
            condition_dim,
            tokens,
            passes: cfg.passes,
        })
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    /// `x_noisy: [B, 2M]`, `cond: [B, D_c]`, one 1-based step per row.
    /// Returns the predicted clean increments `[B, 2M]`.
    pub fn forward(&self, g: &mut Graph, p: &Bound, x_noisy: Var, steps: &[usize], cond: Var) -> Result<Var> {
        let b = steps.len();
        let (xs, cs) = (g.value(x_noisy).shape().to_vec(), g.value(cond).shape().to_vec());
        if xs != [b, 2 * self.tokens] || cs != [b, self.condition_dim] {
            return Err(Error::shape(
                "crnn",
                format!("x {xs:?}, c {cs:?} for {b} steps of {} tokens", self.tokens),
            ));
        }
        let emb: Vec<f64> = steps
            .iter()
            .flat_map(|&t| sinusoidal_embedding(t, self.embed_dim))
            .collect();
        let emb = g.constant(Tensor::matrix(b, self.embed_dim, emb)?);
        let e = self.f1.forward_tanh(g, p, emb)?;
        let ec = g.concat(&[e, cond])?;
        let h0 = self.f2.forward_tanh(g, p, ec)?;
        let mut input = x_noisy;
        for _ in 0..self.passes {
            let mut h = h0;
            let mut outs = Vec::with_capacity(self.tokens);
            for m in 0..self.tokens {
                let tok = g.slice_cols(input, 2 * m, 2 * m + 2)?;
                h = self.gru.step(g, p, tok, h)?;
                outs.push(self.readout.forward(g, p, h)?);
            }
            input = g.concat(&outs)?;
        }
        Ok(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(passes: usize) -> (ParamSet, Crnn) {
        let mut ps = ParamSet::new();
        let cfg = CrnnConfig {
            embed_dim: 4,
            time_hidden: 3,
            hidden: 3,
            passes,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = Crnn::new(&mut ps, &cfg, 2, 3, &mut rng).unwrap();
        (ps, c)
    }

    fn run(ps: &ParamSet, c: &Crnn, x: &[f64], t: usize) -> Vec<f64> {
        let mut g = Graph::new();
        let p = ps.bind_frozen(&mut g);
        let x = g.constant(Tensor::row(x.to_vec()));
        let cond = g.constant(Tensor::row(vec![0.3, -0.7]));
        let y = c.forward(&mut g, &p, x, &[t], cond).unwrap();
        g.value(y).data().to_vec()
    }

    #[test]
    fn embedding_is_interleaved() {
        let e = sinusoidal_embedding(3, 4);
        assert_eq!(e, vec![3f64.sin(), 3f64.cos(), (0.03f64).sin(), (0.03f64).cos()]);
    }

    #[test]
    fn zero_network_emits_readout_bias() {
        let (mut ps, c) = build(1);
        for t in ps.tensors_mut() {
            t.data_mut().fill(0.0);
        }
        let rb = ps.find("crnn/readout.b").unwrap();
        ps.get_mut(rb).data_mut().copy_from_slice(&[0.25, -1.5]);
        let y = run(&ps, &c, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 7);
        assert_eq!(y, [0.25, -1.5].repeat(3));
    }

    #[test]
    fn forward_is_deterministic_and_passes_matter() {
        let (ps, c) = build(1);
        let x = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6];
        assert_eq!(run(&ps, &c, &x, 2), run(&ps, &c, &x, 2));
        assert_ne!(run(&ps, &c, &x, 2), run(&ps, &c, &x, 3));
        let (ps2, c2) = build(2);
        assert_ne!(run(&ps, &c, &x, 2), run(&ps2, &c2, &x, 2));
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let (ps, c) = build(1);
        let mut g = Graph::new();
        let p = ps.bind_frozen(&mut g);
        let x = g.constant(Tensor::row(vec![0.0; 5]));
        let cond = g.constant(Tensor::row(vec![0.0; 2]));
        assert!(c.forward(&mut g, &p, x, &[1], cond).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for passes in [1, 2] {
            let (ps, c) = build(passes);
            let x = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6];
            let target = [0.3, -0.1, 0.2, 0.0, -0.4, 0.1];
            let loss = |ps: &ParamSet| -> (f64, Option<Vec<Tensor>>) {
                let mut g = Graph::new();
                let p = ps.bind(&mut g);
                let xv = g.constant(Tensor::row(x.to_vec()));
                let cond = g.constant(Tensor::row(vec![0.3, -0.7]));
                let y = c.forward(&mut g, &p, xv, &[5], cond).unwrap();
                let tv = g.constant(Tensor::row(target.to_vec()));
                let l = g.mse(y, tv).unwrap();
                let mut grads = g.backward(l).unwrap();
                let gs = p.vars().iter().map(|&v| grads.take(v).unwrap()).collect();
                (g.value(l).item(), Some(gs))
            };
            let (_, grads) = loss(&ps);
            let grads = grads.unwrap();
            let eps = 1e-5;
            for id in ps.ids() {
                for k in 0..ps.get(id).len() {
                    let mut plus = ps.clone();
                    plus.get_mut(id).data_mut()[k] += eps;
                    let mut minus = ps.clone();
                    minus.get_mut(id).data_mut()[k] -= eps;
                    let fd = (loss(&plus).0 - loss(&minus).0) / (2.0 * eps);
                    let an = grads[id.index()].data()[k];
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                    assert!(rel < 1e-4, "{} [{k}] passes {passes}: fd {fd} vs {an}", ps.name(id));
                }
            }
        }
    }
}
