//! Per-run performance summary derived from a schedule trace.

use serde::{Deserialize, Serialize};

use crate::analysis::SECONDS_PER_DAY;
use crate::sim::{ns_to_sec, ScheduleTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub n_frames: u32,
    pub makespan_sec: f64,
    /// In-pipeline latency: completion minus release, per frame.
    pub per_frame_latency_sec: Vec<f64>,
    pub mean_latency_sec: f64,
    /// Makespan of one frame running alone.
    pub isolated_latency_sec: f64,
    /// Compute time of one frame with no IO at all.
    pub compute_only_sec: f64,
    pub delay_increase_pct: f64,
    pub throughput_fps: f64,
    pub ideal_throughput_fps: f64,
    pub throughput_loss_pct: f64,
    pub read_bytes_per_frame: f64,
    pub write_bytes_per_frame: f64,
    /// Writes over a day of back-to-back single-frame inference.
    pub write_bytes_per_day: f64,
    pub io_busy_sec: f64,
    pub cpu_busy_sec: f64,
}

fn pct_over(value: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        ((value - reference) / reference * 100.0).max(0.0)
    } else {
        0.0
    }
}

/// Summarize `trace`. `compute_only_sec` is the per-frame compute baseline;
/// `isolated` is a one-frame run of the same network, and defaults to
/// `trace` itself when it holds a single frame.
pub fn report(
    trace: &ScheduleTrace,
    compute_only_sec: f64,
    isolated: Option<&ScheduleTrace>,
) -> SwapReport {
    let n_frames = trace.n_frames();
    let frames = n_frames.max(1) as f64;
    let makespan_sec = trace.makespan_sec();
    let per_frame_latency_sec: Vec<f64> = trace
        .frame_latency_ns()
        .into_iter()
        .map(ns_to_sec)
        .collect();
    let mean_latency_sec = if per_frame_latency_sec.is_empty() {
        0.0
    } else {
        per_frame_latency_sec.iter().sum::<f64>() / per_frame_latency_sec.len() as f64
    };
    let isolated_latency_sec = match isolated {
        Some(t) => t.makespan_sec(),
        None if n_frames == 1 => makespan_sec,
        None => mean_latency_sec,
    };

    let throughput_fps = if makespan_sec > 0.0 {
        n_frames as f64 / makespan_sec
    } else {
        0.0
    };
    let ideal_throughput_fps = if compute_only_sec > 0.0 {
        1.0 / compute_only_sec
    } else {
        0.0
    };
    let throughput_loss_pct = if ideal_throughput_fps > 0.0 && throughput_fps > 0.0 {
        ((1.0 - throughput_fps / ideal_throughput_fps) * 100.0).max(0.0)
    } else {
        0.0
    };

    let write_bytes_per_frame = trace.write_bytes as f64 / frames;
    let write_bytes_per_day = if isolated_latency_sec > 0.0 {
        write_bytes_per_frame * SECONDS_PER_DAY / isolated_latency_sec
    } else {
        0.0
    };

    SwapReport {
        n_frames,
        makespan_sec,
        per_frame_latency_sec,
        mean_latency_sec,
        isolated_latency_sec,
        compute_only_sec,
        delay_increase_pct: pct_over(isolated_latency_sec, compute_only_sec),
        throughput_fps,
        ideal_throughput_fps,
        throughput_loss_pct,
        read_bytes_per_frame: trace.read_bytes as f64 / frames,
        write_bytes_per_frame,
        write_bytes_per_day,
        io_busy_sec: trace.io_busy_sec(),
        cpu_busy_sec: trace.cpu_busy_sec(),
    }
}
