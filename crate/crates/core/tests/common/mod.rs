#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use swapsim::graph::{Pool, Resource, TaskGraph, TaskId};
use swapsim::model::{HardwareProfile, LayerKind, LayerSpec, NnSpec};
use swapsim::sim::ScheduleTrace;
use swapsim::tiler::BufferPoolLayout;

/// 1 byte or 1 op takes 1 ms, so durations are easy to reason about.
pub fn unit_hw() -> HardwareProfile {
    let mut hw = HardwareProfile::stm32f746().with_rates(1000.0, 1000.0);
    hw.io_fixed_overhead_sec = 0.0;
    hw
}

pub fn capacity(pools: &BufferPoolLayout, pool: Pool) -> usize {
    (match pool {
        Pool::Input => pools.n_input_buffers,
        Pool::Weight => pools.n_weight_buffers,
        Pool::Output => pools.n_output_buffers,
    }) as usize
}

/// The task whose completion frees the buffer that `id` allocates.
pub fn releaser(graph: &TaskGraph, id: TaskId) -> Option<TaskId> {
    let t = graph.task(id);
    let pair = &graph.pairs[t.group as usize];
    match t.demand? {
        Pool::Input => pair.computes.last().copied(),
        Pool::Weight => pair
            .weight_reads
            .iter()
            .position(|&w| w == id)
            .map(|i| pair.computes[i]),
        Pool::Output => Some(pair.write_output),
    }
}

/// Checks every trace property and returns the first violation.
pub fn validate_trace(
    graph: &TaskGraph,
    pools: &BufferPoolLayout,
    trace: &ScheduleTrace,
) -> Result<(), String> {
    let n = graph.len();
    if trace.events.len() != n {
        return Err(format!("{} events for {} tasks", trace.events.len(), n));
    }
    let mut start = vec![u64::MAX; n];
    let mut end = vec![0u64; n];
    for e in &trace.events {
        let i = e.task.index();
        if start[i] != u64::MAX {
            return Err(format!("task {i} ran twice"));
        }
        if e.resource != graph.tasks[i].kind.resource() {
            return Err(format!("task {i} ran on the wrong resource"));
        }
        if e.end_ns - e.start_ns != graph.tasks[i].duration_ns {
            return Err(format!("task {i} has the wrong duration"));
        }
        start[i] = e.start_ns;
        end[i] = e.end_ns;
    }

    // Dependency safety and frame release.
    for (i, preds) in graph.predecessors.iter().enumerate() {
        for p in preds {
            if start[i] < end[p.index()] {
                return Err(format!("task {i} started before predecessor {}", p.0));
            }
        }
        let frame = graph.tasks[i].frame as usize;
        if start[i] < trace.frame_release_ns[frame] {
            return Err(format!("task {i} started before its frame was released"));
        }
    }

    // Resource exclusivity.
    for r in [Resource::Cpu, Resource::Io] {
        let mut spans: Vec<(u64, u64)> = trace
            .events
            .iter()
            .filter(|e| e.resource == r)
            .map(|e| (e.start_ns, e.end_ns))
            .collect();
        spans.sort();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(format!("{r} events overlap: {:?} and {:?}", w[0], w[1]));
            }
        }
    }

    // Allocation intervals [start, release).
    let mut allocs: Vec<(Pool, u64, u64, TaskId)> = Vec::new();
    for t in &graph.tasks {
        if let Some(pool) = t.demand {
            let rel = releaser(graph, t.id).ok_or("allocation without a releaser")?;
            allocs.push((pool, start[t.id.index()], end[rel.index()], t.id));
        }
    }
    // Buffers of `pool` held once every allocation made at `s` has happened.
    let held_at = |pool: Pool, s: u64, except: Option<TaskId>| {
        allocs
            .iter()
            .filter(|a| a.0 == pool && a.1 <= s && a.2 > s && Some(a.3) != except)
            .count()
    };

    // Memory safety, including distinct slots for overlapping allocations.
    for a in &allocs {
        let live = allocs
            .iter()
            .filter(|b| b.0 == a.0 && b.1 <= a.1 && (b.2 > a.1 || b.3 == a.3))
            .count();
        if live > capacity(pools, a.0) {
            return Err(format!(
                "{} pool over capacity at {} ns (task {})",
                a.0, a.1, a.3 .0
            ));
        }
    }
    let slot: HashMap<TaskId, u32> = trace
        .events
        .iter()
        .filter_map(|e| e.buffer.map(|b| (e.task, b.index)))
        .collect();
    for a in &allocs {
        for b in &allocs {
            if a.3 < b.3 && a.0 == b.0 && a.1 < b.2 && b.1 < a.2 && slot.get(&a.3) == slot.get(&b.3)
            {
                return Err(format!("tasks {} and {} share a buffer", a.3 .0, b.3 .0));
            }
        }
    }

    // Priority discipline and work conservation, checked at every event time.
    let ready_at = |i: usize, s: u64| {
        let frame = graph.tasks[i].frame as usize;
        trace.frame_release_ns[frame] <= s
            && graph.predecessors[i].iter().all(|p| end[p.index()] <= s)
            && start[i] >= s
    };
    let schedulable = |i: usize, s: u64, except: Option<TaskId>| match graph.tasks[i].demand {
        None => true,
        Some(pool) => held_at(pool, s, except) < capacity(pools, pool),
    };
    let mut instants: Vec<u64> = trace
        .events
        .iter()
        .flat_map(|e| [e.start_ns, e.end_ns])
        .chain(trace.frame_release_ns.iter().copied())
        .collect();
    instants.sort();
    instants.dedup();
    for r in [Resource::Cpu, Resource::Io] {
        for &s in &instants {
            let busy = trace
                .events
                .iter()
                .find(|e| e.resource == r && e.start_ns <= s && s < e.end_ns);
            // Zero-length tasks that ran at `s` are already done.
            let waiting: Vec<usize> = (0..n)
                .filter(|&i| {
                    graph.tasks[i].kind.resource() == r
                        && ready_at(i, s)
                        && schedulable(i, s, busy.filter(|e| e.start_ns == s).map(|e| e.task))
                })
                .filter(|&i| busy.is_none_or(|e| e.task.index() != i))
                .filter(|&i| !(start[i] == s && end[i] == s))
                .collect();
            match busy {
                None if !waiting.is_empty() => {
                    return Err(format!(
                        "{r} idle at {s} ns with task {} schedulable",
                        waiting[0]
                    ));
                }
                Some(e) if e.start_ns == s => {
                    let p = graph.tasks[e.task.index()].priority;
                    if let Some(&u) = waiting.iter().find(|&&u| graph.tasks[u].priority < p) {
                        return Err(format!(
                            "task {} started at {s} ns ahead of higher-priority task {u}",
                            e.task.0
                        ));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Shortest makespan over every feasible non-preemptive schedule, found by
/// enumerating what each idle resource starts (or deliberately leaves idle)
/// at every completion instant.
pub fn exhaustive_optimal(graph: &TaskGraph, pools: &BufferPoolLayout) -> Option<u64> {
    assert!(graph.len() <= 16, "exhaustive search is for tiny graphs");
    let n = graph.len();
    let frees: Vec<Vec<Pool>> = {
        let mut f = vec![Vec::new(); n];
        for t in &graph.tasks {
            if let (Some(pool), Some(rel)) = (t.demand, releaser(graph, t.id)) {
                f[rel.index()].push(pool);
            }
        }
        f
    };
    let state = Search {
        graph,
        frees,
        pending: graph
            .tasks
            .iter()
            .map(|t| graph.predecessors[t.id.index()].len())
            .collect(),
        started: vec![false; n],
        free: [
            capacity(pools, Pool::Input),
            capacity(pools, Pool::Weight),
            capacity(pools, Pool::Output),
        ],
        running: [None, None],
        done: 0,
        best: u64::MAX,
    };
    let mut s = state;
    s.explore(0);
    (s.best != u64::MAX).then_some(s.best)
}

struct Search<'a> {
    graph: &'a TaskGraph,
    frees: Vec<Vec<Pool>>,
    pending: Vec<usize>,
    started: Vec<bool>,
    free: [usize; 3],
    /// (task, end) per resource: CPU then IO.
    running: [Option<(usize, u64)>; 2],
    done: usize,
    best: u64,
}

impl Search<'_> {
    fn slot(r: Resource) -> usize {
        match r {
            Resource::Cpu => 0,
            Resource::Io => 1,
        }
    }

    fn candidates(&self, r: Resource) -> Vec<Option<usize>> {
        let mut c = vec![None];
        if self.running[Self::slot(r)].is_some() {
            return c;
        }
        for (i, t) in self.graph.tasks.iter().enumerate() {
            if !self.started[i]
                && self.pending[i] == 0
                && t.kind.resource() == r
                && t.demand.is_none_or(|p| self.free[p.index()] > 0)
            {
                c.push(Some(i));
            }
        }
        c
    }

    fn start(&mut self, i: usize, now: u64) {
        let t = &self.graph.tasks[i];
        self.started[i] = true;
        if let Some(p) = t.demand {
            self.free[p.index()] -= 1;
        }
        self.running[Self::slot(t.kind.resource())] = Some((i, now + t.duration_ns));
    }

    fn unstart(&mut self, i: usize) {
        let t = &self.graph.tasks[i];
        self.started[i] = false;
        if let Some(p) = t.demand {
            self.free[p.index()] += 1;
        }
        self.running[Self::slot(t.kind.resource())] = None;
    }

    fn explore(&mut self, now: u64) {
        if now >= self.best {
            return;
        }
        if self.done == self.graph.len() {
            self.best = now;
            return;
        }
        let cpu = self.candidates(Resource::Cpu);
        let io = self.candidates(Resource::Io);
        for &c in &cpu {
            for &o in &io {
                if let Some(i) = c {
                    self.start(i, now);
                }
                if let Some(i) = o {
                    self.start(i, now);
                }
                self.advance();
                if let Some(i) = o {
                    self.unstart(i);
                }
                if let Some(i) = c {
                    self.unstart(i);
                }
            }
        }
    }

    /// Jump to the next completion, finish everything ending then, recurse,
    /// and restore.
    fn advance(&mut self) {
        let Some(next) = self.running.iter().flatten().map(|r| r.1).min() else {
            return; // nothing running and nothing started: a dead branch
        };
        let finishing: Vec<(usize, usize)> = (0..2)
            .filter_map(|s| self.running[s].filter(|r| r.1 == next).map(|r| (s, r.0)))
            .collect();
        for &(s, i) in &finishing {
            self.running[s] = None;
            self.done += 1;
            for p in &self.frees[i] {
                self.free[p.index()] += 1;
            }
            for succ in &self.graph.successors[i] {
                self.pending[succ.index()] -= 1;
            }
        }
        self.explore(next);
        for &(s, i) in finishing.iter().rev() {
            for succ in &self.graph.successors[i] {
                self.pending[succ.index()] += 1;
            }
            for p in &self.frees[i] {
                self.free[p.index()] -= 1;
            }
            self.done -= 1;
            self.running[s] = Some((i, next));
        }
    }
}

/// A random chain of small layers; sizes are whole bytes so durations are
/// whole milliseconds on [`unit_hw`].
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n_layers: usize,
    max_tiles: u64,
    buffer: u64,
) -> NnSpec {
    let mut layers = Vec::with_capacity(n_layers);
    let mut input = rng.random_range(1..=max_tiles * buffer);
    for l in 0..n_layers {
        let weightless = rng.random_bool(0.25);
        let weight = if weightless {
            0
        } else {
            rng.random_range(1..=max_tiles * buffer)
        };
        let output = rng.random_range(1..=max_tiles * buffer);
        layers.push(LayerSpec {
            name: format!("l{l}"),
            kind: if weightless {
                LayerKind::Pool
            } else {
                LayerKind::Conv
            },
            input_bytes: input,
            weight_bytes: weight,
            output_bytes: output,
            ops: rng.random_range(1..=40),
        });
        input = output;
    }
    NnSpec::new("random", layers).unwrap()
}

pub fn random_pools(rng: &mut ChaCha8Rng, buffer: u64) -> BufferPoolLayout {
    BufferPoolLayout::new(
        buffer,
        rng.random_range(1..=3),
        rng.random_range(2..=4),
        rng.random_range(1..=3),
    )
    .unwrap()
}
