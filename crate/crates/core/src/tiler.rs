//! Splitting layer tensors into buffer-sized tiles, and carving SRAM into
//! the three fixed buffer pools.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LayerSpec;

/// Input, weight and output pools. Buffers never move between pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferPoolLayout {
    pub buffer_bytes: u64,
    pub n_input_buffers: u32,
    pub n_weight_buffers: u32,
    pub n_output_buffers: u32,
}

impl BufferPoolLayout {
    pub fn total_buffers(&self) -> u32 {
        self.n_input_buffers + self.n_weight_buffers + self.n_output_buffers
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_buffers() as u64 * self.buffer_bytes
    }

    /// Explicit pool sizes, checked against the minimal working set of one
    /// input, two weight and one output buffer.
    pub fn new(buffer_bytes: u64, input: u32, weight: u32, output: u32) -> Result<Self> {
        if buffer_bytes == 0 || input < 1 || weight < 2 || output < 1 {
            return Err(Error::InsufficientMemory {
                sram_bytes: (input + weight + output) as u64 * buffer_bytes,
                buffer_bytes,
            });
        }
        Ok(Self {
            buffer_bytes,
            n_input_buffers: input,
            n_weight_buffers: weight,
            n_output_buffers: output,
        })
    }
}

/// Split `sram_bytes` into equal buffers and hand out a quarter to inputs,
/// half to weights and a quarter to outputs.
pub fn layout_pools(sram_bytes: u64, buffer_bytes: u64) -> Result<BufferPoolLayout> {
    if buffer_bytes == 0 || sram_bytes < 4 * buffer_bytes {
        return Err(Error::InsufficientMemory {
            sram_bytes,
            buffer_bytes,
        });
    }
    let total = sram_bytes / buffer_bytes;
    let input = (total / 4).max(1);
    let output = (total / 4).max(1);
    let mut weight = (total / 2).max(2);
    // total >= 4 here, so trimming weights alone always restores the bound
    // without dropping below two.
    let excess = (input + weight + output).saturating_sub(total);
    weight -= excess;
    Ok(BufferPoolLayout {
        buffer_bytes,
        n_input_buffers: input as u32,
        n_weight_buffers: weight as u32,
        n_output_buffers: output as u32,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTiling {
    pub layer: String,
    /// Paired input/output tiles; each pair yields one output tile.
    pub n_pairs: u32,
    pub n_weight_tiles: u32,
    pub input_bytes: u64,
    pub weight_bytes: u64,
    pub output_bytes: u64,
    /// Largest tile of each tensor.
    pub input_tile_bytes: u64,
    pub weight_tile_bytes: u64,
    pub output_tile_bytes: u64,
}

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Size of tile `index` when `total` bytes are split as evenly as possible
/// over `count` tiles; earlier tiles absorb the remainder.
pub fn split_bytes(total: u64, count: u32, index: u32) -> u64 {
    if count == 0 {
        return 0;
    }
    let count = count as u64;
    let base = total / count;
    base + u64::from((index as u64) < total % count)
}

impl LayerTiling {
    pub fn input_tile(&self, pair: u32) -> u64 {
        split_bytes(self.input_bytes, self.n_pairs, pair)
    }

    pub fn output_tile(&self, pair: u32) -> u64 {
        split_bytes(self.output_bytes, self.n_pairs, pair)
    }

    pub fn weight_tile(&self, tile: u32) -> u64 {
        split_bytes(self.weight_bytes, self.n_weight_tiles, tile)
    }

    pub fn compute_tasks(&self) -> u64 {
        self.n_pairs as u64 * self.n_weight_tiles.max(1) as u64
    }

    pub fn io_tasks(&self) -> u64 {
        self.n_pairs as u64 * (self.n_weight_tiles as u64 + 2)
    }

    /// Bytes read per frame: every pair reads its input tile and all weights.
    pub fn read_bytes(&self) -> u64 {
        self.input_bytes + self.n_pairs as u64 * self.weight_bytes
    }
}

pub fn tile_layer(layer: &LayerSpec, buffer_bytes: u64) -> Result<LayerTiling> {
    if buffer_bytes == 0 {
        return Err(Error::InvalidGraph("buffer size must be positive".into()));
    }
    let n_weight = div_ceil(layer.weight_bytes, buffer_bytes);
    let n_pairs = div_ceil(layer.input_bytes, buffer_bytes)
        .max(div_ceil(layer.output_bytes, buffer_bytes))
        .max(1);
    let tile = |total: u64, count: u64| {
        if count == 0 {
            0
        } else {
            div_ceil(total, count)
        }
    };
    let to_u32 = |v: u64| {
        u32::try_from(v).map_err(|_| Error::InvalidLayer {
            layer: layer.name.clone(),
            reason: format!("{v} tiles exceed the supported range"),
        })
    };
    Ok(LayerTiling {
        layer: layer.name.clone(),
        n_pairs: to_u32(n_pairs)?,
        n_weight_tiles: to_u32(n_weight)?,
        input_bytes: layer.input_bytes,
        weight_bytes: layer.weight_bytes,
        output_bytes: layer.output_bytes,
        input_tile_bytes: tile(layer.input_bytes, n_pairs),
        weight_tile_bytes: tile(layer.weight_bytes, n_weight),
        output_tile_bytes: tile(layer.output_bytes, n_pairs),
    })
}

pub fn tile_network(layers: &[LayerSpec], buffer_bytes: u64) -> Result<Vec<LayerTiling>> {
    layers.iter().map(|l| tile_layer(l, buffer_bytes)).collect()
}
