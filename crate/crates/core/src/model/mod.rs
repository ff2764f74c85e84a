//! Network and hardware descriptions, and the arithmetic-intensity taxonomy
//! used to label every layer as compute-bound, IO-bound or insignificant.

mod workload;
pub mod zoo;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::PowerParams;
use crate::error::{Error, Result};

pub use workload::{derive_workload, LayerDesc, NetworkFile, PoolDesc};

/// Default fraction of a network's ops and bytes below which a layer is
/// considered insignificant.
pub const DEFAULT_EPSILON_FRAC: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    DepthwiseConv,
    PointwiseConv,
    FullyConnected,
    #[serde(rename = "relu")]
    ReLU,
    Pool,
}

impl LayerKind {
    /// Pure data-movement layers carry no parameters.
    pub fn is_weightless(self) -> bool {
        matches!(self, LayerKind::ReLU | LayerKind::Pool)
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LayerKind::Conv => "conv",
            LayerKind::DepthwiseConv => "depthwise_conv",
            LayerKind::PointwiseConv => "pointwise_conv",
            LayerKind::FullyConnected => "fully_connected",
            LayerKind::ReLU => "relu",
            LayerKind::Pool => "pool",
        };
        f.write_str(s)
    }
}

/// Per-layer workload: arithmetic operations and the bytes of each tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub input_bytes: u64,
    pub weight_bytes: u64,
    pub output_bytes: u64,
    /// A multiply-accumulate counts as two operations.
    pub ops: u64,
}

impl LayerSpec {
    /// Bytes that must move for one execution of the layer, ignoring re-reads.
    pub fn moved_bytes(&self) -> u64 {
        self.input_bytes + self.weight_bytes + self.output_bytes
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidLayer {
            layer: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.is_empty() {
            return Err(bad("empty layer name"));
        }
        if self.input_bytes == 0 || self.output_bytes == 0 {
            return Err(bad("input and output tensors must be non-empty"));
        }
        if self.kind.is_weightless() && self.weight_bytes != 0 {
            return Err(bad("relu/pool layers carry no weights"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

/// Aggregate ops and moved bytes over a network, the denominators of the
/// insignificance test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkTotals {
    pub ops: u64,
    pub moved_bytes: u64,
}

impl NnSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            layers,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "network `{}` has no layers",
                self.name
            )));
        }
        let mut seen = HashSet::new();
        for layer in &self.layers {
            layer.validate()?;
            if !seen.insert(layer.name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate layer name `{}` in `{}`",
                    layer.name, self.name
                )));
            }
        }
        Ok(())
    }

    /// Parse either a structural network description or a list of
    /// pre-derived layer workloads.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Σ weights plus the largest single-layer activation working set.
    pub fn footprint_bytes(&self) -> u64 {
        let weights: u64 = self.layers.iter().map(|l| l.weight_bytes).sum();
        let activations = self
            .layers
            .iter()
            .map(|l| l.input_bytes + l.output_bytes)
            .max()
            .unwrap_or(0);
        weights + activations
    }

    pub fn weight_bytes(&self) -> u64 {
        self.layers.iter().map(|l| l.weight_bytes).sum()
    }

    /// Upper bound on bytes written to flash per frame.
    pub fn output_bytes_sum(&self) -> u64 {
        self.layers.iter().map(|l| l.output_bytes).sum()
    }

    pub fn totals(&self) -> NetworkTotals {
        NetworkTotals {
            ops: self.layers.iter().map(|l| l.ops).sum(),
            moved_bytes: self.layers.iter().map(|l| l.moved_bytes()).sum(),
        }
    }

    pub fn classify(&self, hw: &HardwareProfile, epsilon_frac: f64) -> Result<Vec<LayerClass>> {
        let totals = self.totals();
        self.layers
            .iter()
            .map(|l| classify_layer(l, &totals, hw, epsilon_frac))
            .collect()
    }

    pub fn class_counts(&self, hw: &HardwareProfile, epsilon_frac: f64) -> Result<ClassCounts> {
        let mut counts = ClassCounts::default();
        for class in self.classify(hw, epsilon_frac)? {
            match class {
                LayerClass::ComputeBound => counts.compute_bound += 1,
                LayerClass::IoBound => counts.io_bound += 1,
                LayerClass::Insignificant => counts.insignificant += 1,
            }
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerClass {
    ComputeBound,
    IoBound,
    Insignificant,
}

impl fmt::Display for LayerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerClass::ComputeBound => "compute-bound",
            LayerClass::IoBound => "io-bound",
            LayerClass::Insignificant => "insignificant",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub compute_bound: usize,
    pub io_bound: usize,
    pub insignificant: usize,
}

fn default_cell_cycles() -> u64 {
    10_000
}

/// MCU and storage parameters. Rates are SI (ops/s, bytes/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    #[serde(default)]
    pub name: String,
    pub cpu_ops_per_sec: f64,
    pub io_bytes_per_sec: f64,
    /// Fixed cost of one IO transaction (command issue, card latency).
    #[serde(default)]
    pub io_fixed_overhead_sec: f64,
    /// Extra per-byte IO cost, e.g. for encrypting or hashing swapped tiles.
    #[serde(default)]
    pub io_extra_sec_per_byte: f64,
    pub sram_bytes: u64,
    pub flash_capacity_bytes: u64,
    #[serde(default = "default_cell_cycles")]
    pub flash_cell_cycles: u64,
    #[serde(default)]
    pub power: PowerParams,
}

impl HardwareProfile {
    /// Per-transaction latency of the shipped SD-card profile.
    pub const SD_TRANSACTION_SEC: f64 = 0.002;

    /// Cortex-M7 at 216 MHz with a microSD card over DMA; 512 KB of SRAM
    /// and a 64 GB card.
    pub fn stm32f746() -> Self {
        Self {
            name: "stm32f746".into(),
            cpu_ops_per_sec: 216e6,
            io_bytes_per_sec: 20e6,
            io_fixed_overhead_sec: Self::SD_TRANSACTION_SEC,
            io_extra_sec_per_byte: 0.0,
            sram_bytes: 512 * 1024,
            flash_capacity_bytes: 64_000_000_000,
            flash_cell_cycles: 10_000,
            power: PowerParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let hw: Self = serde_json::from_str(text)?;
        hw.validate()?;
        Ok(hw)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_rates(mut self, cpu_ops_per_sec: f64, io_bytes_per_sec: f64) -> Self {
        self.cpu_ops_per_sec = cpu_ops_per_sec;
        self.io_bytes_per_sec = io_bytes_per_sec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !positive(self.cpu_ops_per_sec) {
            return Err(Error::InvalidHardware(format!(
                "cpu_ops_per_sec must be positive, got {}",
                self.cpu_ops_per_sec
            )));
        }
        if !positive(self.io_bytes_per_sec) {
            return Err(Error::InvalidHardware(format!(
                "io_bytes_per_sec must be positive, got {}",
                self.io_bytes_per_sec
            )));
        }
        if !non_negative(self.io_fixed_overhead_sec) || !non_negative(self.io_extra_sec_per_byte) {
            return Err(Error::InvalidHardware(
                "IO overheads must be non-negative".into(),
            ));
        }
        if self.sram_bytes == 0 {
            return Err(Error::InvalidHardware("sram_bytes must be positive".into()));
        }
        if self.flash_capacity_bytes == 0 || self.flash_cell_cycles == 0 {
            return Err(Error::InvalidHardware(
                "flash capacity and cell cycles must be positive".into(),
            ));
        }
        self.power.validate()
    }

    /// Seconds to move `bytes` in one IO transaction.
    pub fn io_seconds(&self, bytes: u64) -> f64 {
        let b = bytes as f64;
        self.io_fixed_overhead_sec + b / self.io_bytes_per_sec + b * self.io_extra_sec_per_byte
    }

    pub fn compute_seconds(&self, ops: f64) -> f64 {
        ops / self.cpu_ops_per_sec
    }
}

/// `N = (W / S_cpu) / (Q / S_io)`, with `Q` counting input, weights and
/// output once each.
pub fn normalized_intensity(layer: &LayerSpec, hw: &HardwareProfile) -> Result<f64> {
    let moved = layer.moved_bytes();
    if moved == 0 {
        return Err(Error::DegenerateLayer {
            layer: layer.name.clone(),
        });
    }
    let compute_delay = layer.ops as f64 / hw.cpu_ops_per_sec;
    let io_delay = moved as f64 / hw.io_bytes_per_sec;
    Ok(compute_delay / io_delay)
}

pub fn classify_layer(
    layer: &LayerSpec,
    totals: &NetworkTotals,
    hw: &HardwareProfile,
    epsilon_frac: f64,
) -> Result<LayerClass> {
    let n = normalized_intensity(layer, hw)?;
    let ops_frac = if totals.ops == 0 {
        0.0
    } else {
        layer.ops as f64 / totals.ops as f64
    };
    let bytes_frac = layer.moved_bytes() as f64 / totals.moved_bytes.max(1) as f64;
    if ops_frac < epsilon_frac && bytes_frac < epsilon_frac {
        return Ok(LayerClass::Insignificant);
    }
    Ok(if n > 1.0 {
        LayerClass::ComputeBound
    } else {
        LayerClass::IoBound
    })
}
