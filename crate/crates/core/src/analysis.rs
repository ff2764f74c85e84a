//! Flash durability projections and the worst-case energy model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ScheduleTrace;

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

pub fn days_to_years(days: f64) -> f64 {
    days / DAYS_PER_YEAR
}

/// Endurance of a reference batch of cards, scaled linearly with capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurabilityModel {
    pub reference_capacity_bytes: f64,
    /// Bytes written before the first card (low) and the last card (high) of
    /// the reference batch saw its first failure.
    pub first_failure_bytes_range: (f64, f64),
    pub cell_cycles: u64,
    pub half_wear_fraction: f64,
}

impl Default for DurabilityModel {
    /// 4 GB cards written continuously: first failures between 6.5 TB and
    /// 12.5 TB; 10K program/erase cycles per cell.
    fn default() -> Self {
        Self {
            reference_capacity_bytes: 4e9,
            first_failure_bytes_range: (6.5e12, 12.5e12),
            cell_cycles: 10_000,
            half_wear_fraction: 0.5,
        }
    }
}

impl DurabilityModel {
    pub fn with_cell_cycles(mut self, cycles: u64) -> Self {
        self.cell_cycles = cycles;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (low, high) = self.first_failure_bytes_range;
        let ok = self.reference_capacity_bytes > 0.0
            && low > 0.0
            && low <= high
            && self.cell_cycles > 0
            && self.half_wear_fraction > 0.0
            && self.half_wear_fraction <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDurability(format!("{self:?}")))
        }
    }
}

fn check_inputs(daily_write_bytes: f64, card_capacity_bytes: f64) -> Result<()> {
    if card_capacity_bytes.is_nan() || card_capacity_bytes <= 0.0 {
        return Err(Error::InvalidDurability(format!(
            "card capacity must be positive, got {card_capacity_bytes}"
        )));
    }
    if daily_write_bytes.is_nan() || daily_write_bytes < 0.0 {
        return Err(Error::InvalidDurability(format!(
            "daily writes must be non-negative, got {daily_write_bytes}"
        )));
    }
    Ok(())
}

/// Days until the first cell failure, as a (earliest, latest) range.
/// Infinite when nothing is written.
pub fn first_failure_horizon(
    daily_write_bytes: f64,
    card_capacity_bytes: f64,
    model: &DurabilityModel,
) -> Result<(f64, f64)> {
    check_inputs(daily_write_bytes, card_capacity_bytes)?;
    model.validate()?;
    let scale = card_capacity_bytes / model.reference_capacity_bytes;
    let (low, high) = model.first_failure_bytes_range;
    if daily_write_bytes == 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    Ok((
        low * scale / daily_write_bytes,
        high * scale / daily_write_bytes,
    ))
}

/// Days until the configured fraction of cells has exhausted its cycles.
pub fn half_wear_horizon(
    daily_write_bytes: f64,
    card_capacity_bytes: f64,
    model: &DurabilityModel,
) -> Result<f64> {
    check_inputs(daily_write_bytes, card_capacity_bytes)?;
    model.validate()?;
    if daily_write_bytes == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(
        card_capacity_bytes * model.cell_cycles as f64 * model.half_wear_fraction
            / daily_write_bytes,
    )
}

/// Two-term power model: the board draws `p_active_compute_watts` for the
/// whole run and `p_io_extra_watts` on top while the IO channel is busy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub p_active_compute_watts: f64,
    pub p_io_extra_watts: f64,
}

impl PowerParams {
    /// Fit both terms from an in-core run (no IO) and an out-of-core run
    /// whose IO channel was busy throughout.
    pub fn calibrate(
        in_core_wh: f64,
        in_core_sec: f64,
        out_of_core_wh: f64,
        out_of_core_sec: f64,
    ) -> Self {
        let p_active = in_core_wh * 3600.0 / in_core_sec;
        let p_io = out_of_core_wh * 3600.0 / out_of_core_sec - p_active;
        Self {
            p_active_compute_watts: p_active,
            p_io_extra_watts: p_io,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.p_active_compute_watts) && ok(self.p_io_extra_watts) {
            Ok(())
        } else {
            Err(Error::InvalidHardware(format!(
                "invalid power parameters {self:?}"
            )))
        }
    }
}

impl Default for PowerParams {
    /// STM32F746 board: 0.07 Wh over 178 s in-core, 0.10 Wh over 213 s with
    /// the SD card written continuously.
    fn default() -> Self {
        Self::calibrate(0.07, 178.0, 0.10, 213.0)
    }
}

pub fn energy_wh(makespan_sec: f64, io_busy_sec: f64, power: &PowerParams) -> f64 {
    (power.p_active_compute_watts * makespan_sec + power.p_io_extra_watts * io_busy_sec) / 3600.0
}

pub fn estimate_energy(trace: &ScheduleTrace, power: &PowerParams) -> f64 {
    energy_wh(trace.makespan_sec(), trace.io_busy_sec(), power)
}

/// Energy of the same work on an MCU that never swaps.
pub fn in_core_energy(compute_only_sec: f64, power: &PowerParams) -> f64 {
    energy_wh(compute_only_sec, 0.0, power)
}
