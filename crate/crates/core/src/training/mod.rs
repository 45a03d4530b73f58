//! Losses, step gating for the traversability term, optimizers and the
//! training loop.

mod adaptive;
mod loss;
mod optim;
mod trainer;

pub use adaptive::{AdaptiveState, DEFAULT_GATED_STEPS, HISTORY_LEN};
pub use loss::{diffusion_loss, traversability_loss, traversability_loss_graph};
pub use optim::{Optimizer, OptimizerKind};
pub use trainer::{
    read_log_csv, write_log_csv, EpochSummary, GatePolicy, ItemLoss, LogRow, StepItem, StepReport, Threshold,
    TrainConfig, Trainer, LOG_HEADER,
};
