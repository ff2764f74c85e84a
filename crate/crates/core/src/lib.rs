//! Out-of-core NN inference on microcontrollers: layer tiling into fixed
//! SRAM buffer pools, a task DAG over IO and compute, and a discrete-event
//! simulation of the dual-queue scheduler that runs it.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod export;
pub mod graph;
pub mod model;
pub mod report;
pub mod sim;
pub mod tiler;

pub use analysis::{
    estimate_energy, first_failure_horizon, half_wear_horizon, DurabilityModel, PowerParams,
};
pub use error::{Error, Result};
pub use experiment::{run, Outcome, Scenario};
pub use graph::{build_graph, Pool, Resource, Task, TaskGraph, TaskId, TaskKind};
pub use model::{zoo, HardwareProfile, LayerClass, LayerKind, LayerSpec, NnSpec};
pub use report::{report, SwapReport};
pub use sim::{simulate, simulate_sequential, simulate_with, ScheduleTrace, SimOptions};
pub use tiler::{layout_pools, tile_layer, tile_network, BufferPoolLayout, LayerTiling};
