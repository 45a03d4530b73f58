//! Small building blocks shared by the encoder and the denoiser.

use rand::Rng;

use crate::error::Result;
use crate::grad::{Bound, Graph, ParamId, ParamSet, Tensor, Var};

/// Affine layer `x W + b` with `W: [fan_in, fan_out]`, `b: [1, fan_out]`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Dense {
    /// Glorot-uniform weights, zero bias. Tensors are named `{name}.w` / `{name}.b`.
    pub fn new(params: &mut ParamSet, name: &str, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.random_range(-a..a)).collect();
        Self {
            w: params.push(
                format!("{name}.w"),
                Tensor::new(vec![fan_in, fan_out], w).expect("sized"),
            ),
            b: params.push(format!("{name}.b"), Tensor::zeros(vec![1, fan_out])),
            fan_in,
            fan_out,
        }
    }

    pub fn forward(&self, g: &mut Graph, p: &Bound, x: Var) -> Result<Var> {
        let h = g.matmul(x, p.var(self.w))?;
        g.add(h, p.var(self.b))
    }

    pub fn forward_tanh(&self, g: &mut Graph, p: &Bound, x: Var) -> Result<Var> {
        let h = self.forward(g, p, x)?;
        Ok(g.tanh(h))
    }
}

/// Stack of tanh layers `sizes[0] -> sizes[1] -> ...`.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn new(params: &mut ParamSet, name: &str, sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, s)| Dense::new(params, &format!("{name}.{i}"), s[0], s[1], rng))
            .collect();
        Self { layers }
    }

    pub fn forward(&self, g: &mut Graph, p: &Bound, mut x: Var) -> Result<Var> {
        for l in &self.layers {
            x = l.forward_tanh(g, p, x)?;
        }
        Ok(x)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.fan_out)
    }
}
