//! End-to-end runs of one configuration: tile, build, simulate, analyze.

use crate::analysis::{
    days_to_years, estimate_energy, first_failure_horizon, half_wear_horizon, in_core_energy,
    DurabilityModel,
};
use crate::error::Result;
use crate::export::{ReportRow, REPORT_SCHEMA};
use crate::graph::{build_graph, TaskGraph};
use crate::model::{HardwareProfile, NnSpec};
use crate::report::{report, SwapReport};
use crate::sim::{
    compute_only_baseline, simulate_sequential, simulate_with, ScheduleTrace, SimOptions,
};
use crate::tiler::{layout_pools, tile_network, BufferPoolLayout, LayerTiling};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nn: NnSpec,
    pub hw: HardwareProfile,
    pub sram_bytes: u64,
    pub buffer_bytes: u64,
    pub n_frames: u32,
    pub arrival_interval_ns: u64,
}

impl Scenario {
    /// All frames released together; SRAM size taken from the hardware.
    pub fn new(nn: NnSpec, hw: HardwareProfile, buffer_bytes: u64, n_frames: u32) -> Self {
        let sram_bytes = hw.sram_bytes;
        Self {
            nn,
            hw,
            sram_bytes,
            buffer_bytes,
            n_frames,
            arrival_interval_ns: 0,
        }
    }

    pub fn with_sram(mut self, sram_bytes: u64) -> Self {
        self.sram_bytes = sram_bytes;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub layout: BufferPoolLayout,
    pub tilings: Vec<LayerTiling>,
    pub graph: TaskGraph,
    pub trace: ScheduleTrace,
    /// One-frame run, for isolated latency.
    pub isolated: ScheduleTrace,
    pub sequential_sec: f64,
    pub report: SwapReport,
    /// Days until first failure (earliest, latest) and until half wear.
    pub first_failure_days: (f64, f64),
    pub half_wear_days: f64,
    pub energy_wh: f64,
    pub in_core_energy_wh: f64,
}

impl Outcome {
    pub fn io_tasks_per_frame(&self) -> u64 {
        self.tilings.iter().map(LayerTiling::io_tasks).sum()
    }

    pub fn compute_tasks_per_frame(&self) -> u64 {
        self.tilings.iter().map(LayerTiling::compute_tasks).sum()
    }
}

pub fn run(s: &Scenario) -> Result<Outcome> {
    s.nn.validate()?;
    s.hw.validate()?;
    let layout = layout_pools(s.sram_bytes, s.buffer_bytes)?;
    let tilings = tile_network(&s.nn.layers, s.buffer_bytes)?;
    let graph = build_graph(&s.nn, &tilings, &s.hw, s.n_frames)?;
    let options = SimOptions {
        arrival_interval_ns: s.arrival_interval_ns,
    };
    let trace = simulate_with(&graph, &layout, &options)?;
    let isolated = if s.n_frames == 1 {
        trace.clone()
    } else {
        let single = build_graph(&s.nn, &tilings, &s.hw, 1)?;
        simulate_with(&single, &layout, &SimOptions::default())?
    };
    let sequential_sec = simulate_sequential(&graph).makespan_sec();
    let compute_only_total = compute_only_baseline(&graph);
    let compute_only_sec = compute_only_total / s.n_frames as f64;
    let report = report(&trace, compute_only_sec, Some(&isolated));

    let durability = DurabilityModel::default().with_cell_cycles(s.hw.flash_cell_cycles);
    let capacity = s.hw.flash_capacity_bytes as f64;
    let first_failure_days =
        first_failure_horizon(report.write_bytes_per_day, capacity, &durability)?;
    let half_wear_days = half_wear_horizon(report.write_bytes_per_day, capacity, &durability)?;
    let energy_wh = estimate_energy(&trace, &s.hw.power);
    let in_core_energy_wh = in_core_energy(compute_only_total, &s.hw.power);

    Ok(Outcome {
        layout,
        tilings,
        graph,
        trace,
        isolated,
        sequential_sec,
        report,
        first_failure_days,
        half_wear_days,
        energy_wh,
        in_core_energy_wh,
    })
}

pub fn report_row(s: &Scenario, o: &Outcome) -> ReportRow {
    let r = &o.report;
    ReportRow {
        schema: REPORT_SCHEMA,
        nn: s.nn.name.clone(),
        hw: s.hw.name.clone(),
        sram_bytes: s.sram_bytes,
        buffer_bytes: s.buffer_bytes,
        n_frames: s.n_frames,
        arrival_interval_ns: s.arrival_interval_ns,
        io_overhead_sec: s.hw.io_fixed_overhead_sec,
        n_input_buffers: o.layout.n_input_buffers,
        n_weight_buffers: o.layout.n_weight_buffers,
        n_output_buffers: o.layout.n_output_buffers,
        io_tasks_per_frame: o.io_tasks_per_frame(),
        compute_tasks_per_frame: o.compute_tasks_per_frame(),
        makespan_sec: r.makespan_sec,
        sequential_sec: o.sequential_sec,
        compute_only_sec: r.compute_only_sec,
        isolated_latency_sec: r.isolated_latency_sec,
        mean_latency_sec: r.mean_latency_sec,
        delay_increase_pct: r.delay_increase_pct,
        throughput_fps: r.throughput_fps,
        ideal_throughput_fps: r.ideal_throughput_fps,
        throughput_loss_pct: r.throughput_loss_pct,
        read_bytes_per_frame: r.read_bytes_per_frame,
        write_bytes_per_frame: r.write_bytes_per_frame,
        write_bytes_per_day: r.write_bytes_per_day,
        io_busy_sec: r.io_busy_sec,
        cpu_busy_sec: r.cpu_busy_sec,
        first_failure_low_years: days_to_years(o.first_failure_days.0),
        first_failure_high_years: days_to_years(o.first_failure_days.1),
        half_wear_years: days_to_years(o.half_wear_days),
        energy_wh: o.energy_wh,
        in_core_energy_wh: o.in_core_energy_wh,
        energy_ratio: if o.in_core_energy_wh > 0.0 {
            o.energy_wh / o.in_core_energy_wh
        } else {
            1.0
        },
    }
}
