use std::path::Path;

use swapsim::experiment::report_row;
use swapsim::export::{write_report_csv, write_trace_csv};
use swapsim::{run, HardwareProfile, NnSpec, Scenario};

fn models() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/models"))
}

#[test]
fn files_match_the_builtin_zoo() {
    let hw = HardwareProfile::from_path(models().join("stm32f746.json")).unwrap();
    assert_eq!(hw, swapsim::zoo::stm32f746());
    for name in swapsim::zoo::NAMES {
        let nn = NnSpec::from_path(models().join(format!("{name}.json"))).unwrap();
        assert_eq!(Some(nn), swapsim::zoo::by_name(name));
    }
}

#[test]
fn report_is_consistent_with_the_trace() {
    let nn = NnSpec::from_path(models().join("alexnet.json")).unwrap();
    let s = Scenario::new(nn.clone(), swapsim::zoo::stm32f746(), 64 * 1024, 3);
    let o = run(&s).unwrap();
    let r = &o.report;

    let per_frame_io: u64 = o.tilings.iter().map(|t| t.io_tasks()).sum();
    assert_eq!(o.io_tasks_per_frame(), per_frame_io);
    assert_eq!(
        o.trace.events.len() as u64,
        3 * (per_frame_io + o.compute_tasks_per_frame())
    );

    // Every output tile is written exactly once.
    assert_eq!(r.write_bytes_per_frame, nn.output_bytes_sum() as f64);
    let ns = 1e-9;
    assert!((r.makespan_sec - o.trace.makespan_ns as f64 * ns).abs() < 1e-9);
    assert!(r.makespan_sec <= o.sequential_sec);
    assert!(r.isolated_latency_sec >= r.compute_only_sec);
    assert!(r.throughput_fps <= r.ideal_throughput_fps + 1e-12);
    assert!(o.energy_wh >= o.in_core_energy_wh);
    assert!(o.first_failure_days.0 <= o.first_failure_days.1);

    let mut csv = Vec::new();
    write_trace_csv(&o.trace, &mut csv).unwrap();
    assert_eq!(
        String::from_utf8(csv).unwrap().lines().count(),
        1 + o.trace.events.len()
    );

    let mut csv = Vec::new();
    write_report_csv(&[report_row(&s, &o), report_row(&s, &o)], &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
}

#[test]
fn more_sram_never_slows_a_pipeline() {
    let nn = swapsim::zoo::mobilenet();
    let mut last = f64::INFINITY;
    for sram in [512 * 1024, 2 << 20, 8 << 20] {
        let s = Scenario::new(nn.clone(), swapsim::zoo::stm32f746(), 128 * 1024, 4).with_sram(sram);
        let makespan = run(&s).unwrap().report.makespan_sec;
        assert!(
            makespan <= last * (1.0 + 1e-9),
            "{sram}: {makespan} > {last}"
        );
        last = makespan;
    }
}
