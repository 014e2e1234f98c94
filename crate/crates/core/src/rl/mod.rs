//! From-scratch networks and the dual DDPG agents with their cooperative
//! training loop.

mod checkpoint;
mod ddpg;
mod mlp;
mod replay;
mod train;

use thiserror::Error;

pub use checkpoint::{
    agent_from_text, agent_to_text, agent_to_text_pair, load_agent, load_dual_agents,
    save_agent, save_dual_agents,
};
pub use ddpg::{DdpgAgent, DdpgConfig, UpdateStats};
pub use mlp::{Adam, ForwardCache, Gradients, Layer, Mlp, OutputActivation};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    evaluate_agents, train_dual_agents, DualAgents, EvalRecord, TraceRow, TrainConfig,
    TrainOutput, TrainingCurve,
};

#[derive(Debug, Error)]
pub enum RlError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("network shapes do not match")]
    ShapeMismatch,
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("replay holds {have} transitions, need {need}")]
    InsufficientReplay { have: usize, need: usize },
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
    #[error("malformed checkpoint: {reason}")]
    MalformedCheckpoint { reason: String },
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
}

/// Derive a sub-seed from a master seed and a stream tag (splitmix64).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
