//! Noise schedule, forward noising, the conditional recurrent denoiser and
//! the samplers.

mod crnn;
mod sample;
mod schedule;

pub use crate::trajectory::waypoints_from_increments;
pub use crnn::{sinusoidal_embedding, Crnn, CrnnConfig};
pub use sample::{crnn_denoise, sample, sample_batch, sample_batch_independent, SamplerMode};
pub use schedule::{noise_trajectory, DiffusionSchedule, ScheduleKind};
