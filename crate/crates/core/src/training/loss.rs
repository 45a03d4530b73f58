use crate::error::{Error, Result};
use crate::grad::{bilinear, Graph, Tensor, Var};
use crate::world::{GridWorld, Pose};

/// Mean squared error over every coordinate of two increment sequences.
pub fn diffusion_loss(predicted: &[f64], ground_truth: &[f64]) -> Result<f64> {
    if predicted.len() != ground_truth.len() || predicted.is_empty() {
        return Err(Error::shape(
            "diffusion_loss",
            format!("{} vs {}", predicted.len(), ground_truth.len()),
        ));
    }
    let s: f64 = predicted.iter().zip(ground_truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / predicted.len() as f64)
}

/// `exp(1 - mean clearance)` over world-frame waypoints, with clearance
/// interpolated bilinearly from the world's clipped field. Lies in `[1, e]`.
/// Also returns how many waypoints fell outside the field and were clamped.
pub fn traversability_loss(waypoints: &[[f64; 2]], world: &GridWorld) -> Result<(f64, usize)> {
    if waypoints.is_empty() {
        return Err(Error::Empty("waypoints"));
    }
    let field = world.clearance_ref();
    let mut sum = 0.0;
    let mut clamped = 0;
    for w in waypoints {
        let (v, _, c) = bilinear(&field, w[0], w[1]);
        sum += v;
        clamped += c as usize;
    }
    Ok(((1.0 - sum / waypoints.len() as f64).exp(), clamped))
}

/// Graph version of [`traversability_loss`] for one predicted increment row
/// `[1, 2M]` expressed in the frame of `pose`.
pub fn traversability_loss_graph(g: &mut Graph, increments: Var, pose: &Pose, world: &GridWorld) -> Result<Var> {
    let m = g.value(increments).len() / 2;
    let inc = g.reshape(increments, vec![m, 2])?;
    let local = g.cumsum_rows(inc);
    let (s, c) = pose.heading.sin_cos();
    // Row vectors: world = local * R^T + t.
    let rt = g.constant(Tensor::matrix(2, 2, vec![c, s, -s, c])?);
    let rotated = g.matmul(local, rt)?;
    let t = g.constant(Tensor::row(vec![pose.x, pose.y]));
    let xy = g.add(rotated, t)?;
    let clr = g.bilinear_sample(world.clearance_ref(), xy)?;
    let mean = g.mean(clr);
    let neg = g.scale(mean, -1.0);
    let arg = g.add_scalar(neg, 1.0);
    Ok(g.exp(arg))
}
