//! Trace and report serialization: CSV event lists, Chrome trace-event JSON
//! and the per-configuration report table.

use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::graph::Resource;
use crate::sim::ScheduleTrace;

pub const REPORT_SCHEMA: &str = "swapsim.report.v1";

#[derive(Serialize)]
struct TraceRow<'a> {
    task_id: u32,
    kind: &'a str,
    frame: u32,
    layer: u32,
    tile: u32,
    resource: String,
    start_ns: u64,
    end_ns: u64,
}

pub fn write_trace_csv<W: Write>(trace: &ScheduleTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in &trace.events {
        w.serialize(TraceRow {
            task_id: e.task.0,
            kind: e.kind.short_name(),
            frame: e.frame,
            layer: e.layer,
            tile: e.tile,
            resource: e.resource.to_string(),
            start_ns: e.start_ns,
            end_ns: e.end_ns,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn track(resource: Resource) -> u32 {
    match resource {
        Resource::Cpu => 0,
        Resource::Io => 1,
    }
}

/// Chrome trace-event JSON: one complete ("X") event per task, with the CPU
/// and the IO channel as separate tracks. Timestamps are microseconds.
pub fn trace_json(trace: &ScheduleTrace, layer_names: &[String]) -> serde_json::Value {
    let mut events = Vec::with_capacity(trace.events.len() + 2);
    for resource in [Resource::Cpu, Resource::Io] {
        events.push(json!({
            "name": "thread_name",
            "ph": "M",
            "pid": 0,
            "tid": track(resource),
            "args": { "name": resource.to_string() },
        }));
    }
    for e in &trace.events {
        let layer = layer_names
            .get(e.layer as usize)
            .cloned()
            .unwrap_or_else(|| e.layer.to_string());
        events.push(json!({
            "name": format!("{} {} t{}", e.kind.short_name(), layer, e.tile),
            "cat": e.kind.short_name(),
            "ph": "X",
            "pid": 0,
            "tid": track(e.resource),
            "ts": e.start_ns as f64 / 1e3,
            "dur": (e.end_ns - e.start_ns) as f64 / 1e3,
            "args": { "task": e.task.0, "frame": e.frame, "layer": e.layer, "bytes": e.bytes },
        }));
    }
    json!({ "traceEvents": events, "displayTimeUnit": "ms" })
}

pub fn write_trace_json<W: Write>(
    trace: &ScheduleTrace,
    layer_names: &[String],
    out: W,
) -> Result<()> {
    serde_json::to_writer(out, &trace_json(trace, layer_names))?;
    Ok(())
}

/// One row of the report table. Column order is part of the schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub schema: &'static str,
    pub nn: String,
    pub hw: String,
    pub sram_bytes: u64,
    pub buffer_bytes: u64,
    pub n_frames: u32,
    pub arrival_interval_ns: u64,
    pub io_overhead_sec: f64,
    pub n_input_buffers: u32,
    pub n_weight_buffers: u32,
    pub n_output_buffers: u32,
    pub io_tasks_per_frame: u64,
    pub compute_tasks_per_frame: u64,
    pub makespan_sec: f64,
    pub sequential_sec: f64,
    pub compute_only_sec: f64,
    pub isolated_latency_sec: f64,
    pub mean_latency_sec: f64,
    pub delay_increase_pct: f64,
    pub throughput_fps: f64,
    pub ideal_throughput_fps: f64,
    pub throughput_loss_pct: f64,
    pub read_bytes_per_frame: f64,
    pub write_bytes_per_frame: f64,
    pub write_bytes_per_day: f64,
    pub io_busy_sec: f64,
    pub cpu_busy_sec: f64,
    pub first_failure_low_years: f64,
    pub first_failure_high_years: f64,
    pub half_wear_years: f64,
    pub energy_wh: f64,
    pub in_core_energy_wh: f64,
    pub energy_ratio: f64,
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{TaskId, TaskKind};
    use crate::sim::TraceEvent;

    fn trace() -> ScheduleTrace {
        let ev = |id, kind: TaskKind, s, e| TraceEvent {
            task: TaskId(id),
            kind,
            frame: 0,
            layer: 0,
            tile: 0,
            resource: kind.resource(),
            start_ns: s,
            end_ns: e,
            bytes: 8,
            buffer: None,
        };
        ScheduleTrace::from_events(
            vec![
                ev(0, TaskKind::ReadInput, 0, 1000),
                ev(1, TaskKind::Compute, 1000, 3000),
                ev(2, TaskKind::WriteOutput, 3000, 4000),
            ],
            vec![0],
        )
    }

    #[test]
    fn trace_csv_columns() {
        let mut buf = Vec::new();
        write_trace_csv(&trace(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "task_id,kind,frame,layer,tile,resource,start_ns,end_ns"
        );
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains(",CPU,1000,3000"), "{}", lines[2]);
    }

    #[test]
    fn trace_json_has_one_event_per_task() {
        let v = trace_json(&trace(), &["conv".to_string()]);
        let events = v["traceEvents"].as_array().unwrap();
        let spans: Vec<_> = events.iter().filter(|e| e["ph"] == "X").collect();
        assert_eq!(spans.len(), 3);
        assert_eq!(spans[1]["tid"], 0);
        assert_eq!(spans[1]["dur"], 2.0);
        assert!(spans[0]["name"].as_str().unwrap().contains("conv"));
    }
}
