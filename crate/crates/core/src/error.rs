use thiserror::Error;

use crate::graph::Pool;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer `{layer}` moves no data (input + weight + output bytes = 0)")]
    DegenerateLayer { layer: String },

    #[error("layer `{layer}`: {reason}")]
    InvalidLayer { layer: String, reason: String },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("invalid hardware profile: {0}")]
    InvalidHardware(String),

    #[error(
        "insufficient memory: {sram_bytes} B of SRAM cannot hold four {buffer_bytes} B buffers \
         (one input, two weight, one output)"
    )]
    InsufficientMemory { sram_bytes: u64, buffer_bytes: u64 },

    #[error("invalid task graph: {0}")]
    InvalidGraph(String),

    #[error("deadlock at t={time_ns} ns: {ready} ready task(s) blocked on the {starved} pool")]
    Deadlock {
        time_ns: u64,
        starved: Pool,
        ready: usize,
    },

    #[error("invalid durability model: {0}")]
    InvalidDurability(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
