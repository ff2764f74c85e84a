mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_optimal, random_network, random_pools, unit_hw, validate_trace};
use swapsim::graph::{build_graph, TaskKind};
use swapsim::sim::{
    compute_only_baseline_ns, simulate, simulate_sequential, simulate_with, SimOptions,
};
use swapsim::tiler::{layout_pools, tile_network};
use swapsim::{model::zoo, Error, Scenario};

const BUFFER: u64 = 4;

/// Greedy allocation can starve a pool when several frames interleave on
/// tiny pools; such runs must end in a deadlock report, never a bad trace.
#[test]
fn random_graphs_produce_valid_traces() {
    let hw = unit_hw();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut valid = 0;
    let mut deadlocked = 0;
    let mut case = 0;
    while valid < 1000 {
        case += 1;
        let n_layers = rng.random_range(1..=3);
        let nn = random_network(&mut rng, n_layers, 3, BUFFER);
        let frames = rng.random_range(1..=3);
        let pools = random_pools(&mut rng, BUFFER);
        let tilings = tile_network(&nn.layers, BUFFER).unwrap();
        let graph = build_graph(&nn, &tilings, &hw, frames).unwrap();
        let options = SimOptions {
            arrival_interval_ns: if rng.random_bool(0.3) {
                rng.random_range(1..50) * 1_000_000
            } else {
                0
            },
        };
        let trace = match simulate_with(&graph, &pools, &options) {
            Ok(t) => t,
            Err(Error::Deadlock { .. }) if frames > 1 => {
                deadlocked += 1;
                continue;
            }
            Err(e) => panic!("case {case}: {e}\n{}", graph.dump_string()),
        };
        if let Err(e) = validate_trace(&graph, &pools, &trace) {
            panic!("case {case}: {e}\n{}", graph.dump_string());
        }
        let sequential = simulate_sequential(&graph);
        assert_eq!(sequential.makespan_ns, graph.total_duration_ns());
        if options.arrival_interval_ns == 0 {
            assert!(
                compute_only_baseline_ns(&graph) <= trace.makespan_ns,
                "case {case}"
            );
            assert!(trace.makespan_ns <= sequential.makespan_ns, "case {case}");
        }
        assert_eq!(trace.write_bytes, frames as u64 * nn.output_bytes_sum());
        valid += 1;
    }
    println!("{valid} valid traces, {deadlocked} deadlocked runs");
}

#[test]
fn single_frame_runs_never_deadlock() {
    let hw = unit_hw();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let n_layers = rng.random_range(1..=4);
        let nn = random_network(&mut rng, n_layers, 3, BUFFER);
        let tilings = tile_network(&nn.layers, BUFFER).unwrap();
        let graph = build_graph(&nn, &tilings, &hw, 1).unwrap();
        let pools = swapsim::BufferPoolLayout::new(BUFFER, 1, 2, 1).unwrap();
        let trace = simulate(&graph, &pools).unwrap();
        validate_trace(&graph, &pools, &trace).unwrap();
    }
}

#[test]
fn greedy_makespan_lies_between_optimal_and_sequential() {
    let hw = unit_hw();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 300 {
        attempts += 1;
        assert!(attempts < 100_000, "generator rarely yields small graphs");
        let nn = random_network(&mut rng, 2, 2, BUFFER);
        let tilings = tile_network(&nn.layers, BUFFER).unwrap();
        let graph = build_graph(&nn, &tilings, &hw, 1).unwrap();
        if graph.len() > 12 {
            continue;
        }
        let pools = random_pools(&mut rng, BUFFER);
        let trace = simulate(&graph, &pools).unwrap();
        let optimal = exhaustive_optimal(&graph, &pools).expect("feasible schedule exists");
        let sequential = graph.total_duration_ns();
        assert!(
            optimal <= trace.makespan_ns && trace.makespan_ns <= sequential,
            "optimal {optimal}, greedy {}, sequential {sequential}\n{}",
            trace.makespan_ns,
            graph.dump_string()
        );
        checked += 1;
    }
}

#[test]
fn oracle_finds_perfect_overlap() {
    // Two one-pair layers where the second layer's weight read can hide
    // behind the first layer's compute.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let hw = unit_hw();
    let nn = random_network(&mut rng, 1, 1, BUFFER);
    let tilings = tile_network(&nn.layers, BUFFER).unwrap();
    let graph = build_graph(&nn, &tilings, &hw, 2).unwrap();
    let pools = swapsim::BufferPoolLayout::new(BUFFER, 2, 2, 2).unwrap();
    let optimal = exhaustive_optimal(&graph, &pools).unwrap();
    let sequential = graph.total_duration_ns();
    assert!(optimal < sequential);
}

#[test]
fn simulation_is_deterministic() {
    let hw = unit_hw();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let nn = random_network(&mut rng, 3, 3, BUFFER);
        let pools = random_pools(&mut rng, BUFFER);
        let tilings = tile_network(&nn.layers, BUFFER).unwrap();
        let graph = build_graph(&nn, &tilings, &hw, 2).unwrap();
        let a = simulate(&graph, &pools).map_err(|e| e.to_string());
        let b = simulate(&graph, &pools).map_err(|e| e.to_string());
        assert_eq!(a, b);
    }
}

#[test]
fn pipelining_frames_never_lowers_throughput() {
    // Both networks mix compute-bound and IO-bound layers.
    for nn in [zoo::alexnet(), zoo::mobilenet()] {
        let one =
            swapsim::run(&Scenario::new(nn.clone(), zoo::stm32f746(), 128 * 1024, 1)).unwrap();
        let three =
            swapsim::run(&Scenario::new(nn.clone(), zoo::stm32f746(), 128 * 1024, 3)).unwrap();
        assert!(
            three.report.throughput_fps >= one.report.throughput_fps,
            "{}: {} < {}",
            nn.name,
            three.report.throughput_fps,
            one.report.throughput_fps
        );
    }
}

#[test]
fn shipped_traces_validate() {
    let hw = zoo::stm32f746();
    for nn in [zoo::alexnet(), zoo::mobilenet()] {
        let pools = layout_pools(512 * 1024, 128 * 1024).unwrap();
        let tilings = tile_network(&nn.layers, 128 * 1024).unwrap();
        let graph = build_graph(&nn, &tilings, &hw, 2).unwrap();
        let trace = simulate(&graph, &pools).unwrap();
        validate_trace(&graph, &pools, &trace).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn graph_counts_follow_the_tiling(seed in any::<u64>(), frames in 1u32..4, layers in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nn = random_network(&mut rng, layers, 4, BUFFER);
        let tilings = tile_network(&nn.layers, BUFFER).unwrap();
        let graph = build_graph(&nn, &tilings, &unit_hw(), frames).unwrap();

        let in_degrees: u32 = graph.tasks.iter().map(|t| t.in_degree).sum();
        prop_assert_eq!(in_degrees as usize, graph.edge_count());
        prop_assert!(graph.topological_order().is_ok());

        for (l, t) in tilings.iter().enumerate() {
            let of_layer = |k: TaskKind| graph.tasks.iter()
                .filter(|x| x.frame == 0 && x.layer as usize == l && x.kind == k)
                .collect::<Vec<_>>();
            let computes = of_layer(TaskKind::Compute).len() as u64;
            let io = [TaskKind::ReadInput, TaskKind::ReadWeight, TaskKind::WriteOutput]
                .iter().map(|&k| of_layer(k).len() as u64).sum::<u64>();
            prop_assert_eq!(computes, t.compute_tasks());
            prop_assert_eq!(io, t.io_tasks());
            let read: u64 = of_layer(TaskKind::ReadInput).iter()
                .chain(of_layer(TaskKind::ReadWeight).iter())
                .map(|x| x.bytes).sum();
            prop_assert_eq!(read, t.read_bytes());
            let written: u64 = of_layer(TaskKind::WriteOutput).iter().map(|x| x.bytes).sum();
            prop_assert_eq!(written, t.output_bytes);
            let ops: f64 = of_layer(TaskKind::Compute).iter().map(|x| x.ops).sum();
            prop_assert!((ops - nn.layers[l].ops as f64).abs() < 1e-6);
        }
    }
}
