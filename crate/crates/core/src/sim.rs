//! Discrete-event simulation of the dual-queue scheduler.
//!
//! One CPU and one IO channel run READY tasks in priority order. A read
//! starts only if its pool has a free buffer, the first compute of a pair
//! only if the output pool does; a blocked task is skipped in favour of the
//! next schedulable one. Writes never allocate. Time is kept in integer
//! nanoseconds so runs are bit-for-bit reproducible.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Pool, Priority, Resource, TaskGraph, TaskId, TaskKind, TaskState};
use crate::tiler::BufferPoolLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BufferSlot {
    pub pool: Pool,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub task: TaskId,
    pub kind: TaskKind,
    pub frame: u32,
    pub layer: u32,
    pub tile: u32,
    pub resource: Resource,
    pub start_ns: u64,
    pub end_ns: u64,
    pub bytes: u64,
    /// Buffer taken when the task started, if any.
    pub buffer: Option<BufferSlot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    /// Ordered by start time; CPU before IO on ties.
    pub events: Vec<TraceEvent>,
    pub frame_release_ns: Vec<u64>,
    pub frame_completion_ns: Vec<u64>,
    pub makespan_ns: u64,
    pub read_bytes: u64,
    pub write_bytes: u64,
    pub io_busy_ns: u64,
    pub cpu_busy_ns: u64,
}

impl ScheduleTrace {
    /// Assemble a trace and its totals from raw events.
    pub fn from_events(mut events: Vec<TraceEvent>, frame_release_ns: Vec<u64>) -> Self {
        events.sort_by_key(|e| (e.start_ns, e.resource == Resource::Io, e.task));
        let n_frames = frame_release_ns.len();
        let mut frame_completion_ns = frame_release_ns.clone();
        let (mut read_bytes, mut write_bytes, mut io_busy_ns, mut cpu_busy_ns) = (0, 0, 0, 0);
        let mut makespan_ns = 0;
        for e in &events {
            let span = e.end_ns - e.start_ns;
            match e.kind {
                TaskKind::ReadInput | TaskKind::ReadWeight => read_bytes += e.bytes,
                TaskKind::WriteOutput => write_bytes += e.bytes,
                TaskKind::Compute => {}
            }
            match e.resource {
                Resource::Cpu => cpu_busy_ns += span,
                Resource::Io => io_busy_ns += span,
            }
            makespan_ns = makespan_ns.max(e.end_ns);
            if let Some(done) = frame_completion_ns.get_mut(e.frame as usize) {
                *done = (*done).max(e.end_ns);
            }
        }
        debug_assert!(events.iter().all(|e| (e.frame as usize) < n_frames));
        Self {
            events,
            frame_release_ns,
            frame_completion_ns,
            makespan_ns,
            read_bytes,
            write_bytes,
            io_busy_ns,
            cpu_busy_ns,
        }
    }

    pub fn n_frames(&self) -> u32 {
        self.frame_release_ns.len() as u32
    }

    pub fn makespan_sec(&self) -> f64 {
        ns_to_sec(self.makespan_ns)
    }

    pub fn io_busy_sec(&self) -> f64 {
        ns_to_sec(self.io_busy_ns)
    }

    pub fn cpu_busy_sec(&self) -> f64 {
        ns_to_sec(self.cpu_busy_ns)
    }

    /// Completion minus release, per frame.
    pub fn frame_latency_ns(&self) -> Vec<u64> {
        self.frame_completion_ns
            .iter()
            .zip(&self.frame_release_ns)
            .map(|(done, rel)| done - rel)
            .collect()
    }
}

pub fn ns_to_sec(ns: u64) -> f64 {
    ns as f64 * 1e-9
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Frame `k` is released at `k * arrival_interval_ns`; zero releases the
    /// whole batch at t = 0.
    pub arrival_interval_ns: u64,
}

pub fn simulate(graph: &TaskGraph, pools: &BufferPoolLayout) -> Result<ScheduleTrace> {
    simulate_with(graph, pools, &SimOptions::default())
}

type ReadySet = BTreeSet<(Priority, TaskId)>;

/// Ready tasks, bucketed so that every member of a bucket has the same
/// buffer demand. The highest-priority head among buckets whose demand can be
/// met is exactly what a priority-order scan with skipping would pick.
#[derive(Default)]
struct ReadyQueues {
    read_input: ReadySet,
    read_weight: ReadySet,
    write: ReadySet,
    compute_alloc: ReadySet,
    compute_free: ReadySet,
}

struct Running {
    task: TaskId,
    end_ns: u64,
}

struct Engine<'g> {
    graph: &'g TaskGraph,
    remaining: Vec<u32>,
    state: Vec<TaskState>,
    ready: ReadyQueues,
    free: [Vec<u32>; 3],
    weight_buffer: Vec<Option<u32>>,
    pair_input: Vec<Option<u32>>,
    pair_output: Vec<Option<u32>>,
    cpu: Option<Running>,
    io: Option<Running>,
    events: Vec<TraceEvent>,
    finished: usize,
}

impl<'g> Engine<'g> {
    fn new(graph: &'g TaskGraph, pools: &BufferPoolLayout) -> Self {
        let free_list = |n: u32| (0..n).rev().collect::<Vec<_>>();
        Self {
            graph,
            remaining: graph.tasks.iter().map(|t| t.in_degree).collect(),
            state: vec![TaskState::Init; graph.len()],
            ready: ReadyQueues::default(),
            free: [
                free_list(pools.n_input_buffers),
                free_list(pools.n_weight_buffers),
                free_list(pools.n_output_buffers),
            ],
            weight_buffer: vec![None; graph.len()],
            pair_input: vec![None; graph.pairs.len()],
            pair_output: vec![None; graph.pairs.len()],
            cpu: None,
            io: None,
            events: Vec::with_capacity(graph.len()),
            finished: 0,
        }
    }

    fn advance(&mut self, id: TaskId, next: TaskState) {
        let cur = &mut self.state[id.index()];
        debug_assert!(cur.can_advance_to(next), "{id}: {cur:?} -> {next:?}");
        *cur = next;
    }

    fn make_ready(&mut self, id: TaskId) {
        self.advance(id, TaskState::Ready);
        let t = self.graph.task(id);
        let key = (t.priority, id);
        let set = match (t.kind, t.demand) {
            (TaskKind::ReadInput, _) => &mut self.ready.read_input,
            (TaskKind::ReadWeight, _) => &mut self.ready.read_weight,
            (TaskKind::WriteOutput, _) => &mut self.ready.write,
            (TaskKind::Compute, Some(_)) => &mut self.ready.compute_alloc,
            (TaskKind::Compute, None) => &mut self.ready.compute_free,
        };
        set.insert(key);
    }

    fn release_frame(&mut self, frame: usize) {
        for &root in &self.graph.roots[frame] {
            self.make_ready(root);
        }
    }

    fn has_free(&self, pool: Pool) -> bool {
        !self.free[pool.index()].is_empty()
    }

    fn pick_io(&self) -> Option<TaskId> {
        let q = &self.ready;
        [
            (&q.read_input, self.has_free(Pool::Input)),
            (&q.read_weight, self.has_free(Pool::Weight)),
            (&q.write, true),
        ]
        .into_iter()
        .filter(|(_, ok)| *ok)
        .filter_map(|(set, _)| set.first())
        .min()
        .map(|&(_, id)| id)
    }

    fn pick_cpu(&self) -> Option<TaskId> {
        let q = &self.ready;
        [
            (&q.compute_alloc, self.has_free(Pool::Output)),
            (&q.compute_free, true),
        ]
        .into_iter()
        .filter(|(_, ok)| *ok)
        .filter_map(|(set, _)| set.first())
        .min()
        .map(|&(_, id)| id)
    }

    fn start(&mut self, id: TaskId, now: u64) {
        let t = self.graph.task(id);
        let key = (t.priority, id);
        let removed = match (t.kind, t.demand) {
            (TaskKind::ReadInput, _) => self.ready.read_input.remove(&key),
            (TaskKind::ReadWeight, _) => self.ready.read_weight.remove(&key),
            (TaskKind::WriteOutput, _) => self.ready.write.remove(&key),
            (TaskKind::Compute, Some(_)) => self.ready.compute_alloc.remove(&key),
            (TaskKind::Compute, None) => self.ready.compute_free.remove(&key),
        };
        debug_assert!(removed);

        let buffer = t.demand.map(|pool| {
            let index = self.free[pool.index()]
                .pop()
                .expect("dispatch checked the pool");
            let group = t.group as usize;
            match t.kind {
                TaskKind::ReadInput => self.pair_input[group] = Some(index),
                TaskKind::ReadWeight => self.weight_buffer[id.index()] = Some(index),
                TaskKind::Compute => self.pair_output[group] = Some(index),
                TaskKind::WriteOutput => unreachable!("writes never allocate"),
            }
            BufferSlot { pool, index }
        });
        self.advance(id, TaskState::Selected);

        let end_ns = now + t.duration_ns;
        self.events.push(TraceEvent {
            task: id,
            kind: t.kind,
            frame: t.frame,
            layer: t.layer,
            tile: t.tile,
            resource: t.kind.resource(),
            start_ns: now,
            end_ns,
            bytes: t.bytes,
            buffer,
        });
        let running = Some(Running { task: id, end_ns });
        match t.kind.resource() {
            Resource::Cpu => self.cpu = running,
            Resource::Io => self.io = running,
        }
    }

    fn finish(&mut self, id: TaskId) {
        let graph = self.graph;
        let t = graph.task(id);
        let group = t.group as usize;
        match t.kind {
            TaskKind::ReadInput | TaskKind::ReadWeight => {}
            TaskKind::Compute => {
                if let Some(rw) = t.weight_read {
                    let buf = self.weight_buffer[rw.index()]
                        .take()
                        .expect("weight buffer held until its compute finishes");
                    self.free[Pool::Weight.index()].push(buf);
                }
                if graph.pairs[group].computes.last() == Some(&id) {
                    let buf = self.pair_input[group]
                        .take()
                        .expect("input buffer held until the pair's last compute");
                    self.free[Pool::Input.index()].push(buf);
                }
            }
            TaskKind::WriteOutput => {
                let buf = self.pair_output[group]
                    .take()
                    .expect("output buffer held until written");
                self.free[Pool::Output.index()].push(buf);
            }
        }
        self.advance(id, TaskState::Finished);
        self.finished += 1;
        for &s in &graph.successors[id.index()] {
            let left = &mut self.remaining[s.index()];
            *left -= 1;
            if *left == 0 {
                self.make_ready(s);
            }
        }
    }

    /// Start what can start at `now`. Zero-length tasks finish on the spot so
    /// that whatever they release competes within the same instant.
    fn dispatch(&mut self, now: u64) {
        loop {
            if self.io.is_none() {
                if let Some(id) = self.pick_io() {
                    self.start(id, now);
                }
            }
            if let Some(r) = self.io.take_if(|r| r.end_ns == now) {
                self.finish(r.task);
                continue;
            }
            if self.cpu.is_none() {
                if let Some(id) = self.pick_cpu() {
                    self.start(id, now);
                }
            }
            if let Some(r) = self.cpu.take_if(|r| r.end_ns == now) {
                self.finish(r.task);
                continue;
            }
            break;
        }
    }

    fn blocked_pool(&self) -> Option<(Pool, usize)> {
        let q = &self.ready;
        let waiting = q.read_input.len() + q.read_weight.len() + q.compute_alloc.len();
        [
            (q.read_input.first(), Pool::Input),
            (q.read_weight.first(), Pool::Weight),
            (q.compute_alloc.first(), Pool::Output),
        ]
        .into_iter()
        .filter_map(|(head, pool)| head.map(|h| (h, pool)))
        .min()
        .map(|(_, pool)| (pool, waiting))
    }
}

pub fn simulate_with(
    graph: &TaskGraph,
    pools: &BufferPoolLayout,
    options: &SimOptions,
) -> Result<ScheduleTrace> {
    let n_frames = graph.n_frames as usize;
    let releases: Vec<u64> = (0..n_frames as u64)
        .map(|k| k * options.arrival_interval_ns)
        .collect();

    let mut engine = Engine::new(graph, pools);
    let mut next_frame = 0;
    let mut now = 0;
    loop {
        while next_frame < n_frames && releases[next_frame] <= now {
            engine.release_frame(next_frame);
            next_frame += 1;
        }
        engine.dispatch(now);

        let next = [
            engine.cpu.as_ref().map(|r| r.end_ns),
            engine.io.as_ref().map(|r| r.end_ns),
            releases.get(next_frame).copied(),
        ]
        .into_iter()
        .flatten()
        .min();
        let Some(next) = next else {
            if engine.finished == graph.len() {
                break;
            }
            return Err(match engine.blocked_pool() {
                Some((starved, ready)) => Error::Deadlock {
                    time_ns: now,
                    starved,
                    ready,
                },
                None => Error::InvalidGraph(format!(
                    "{} task(s) can never become ready",
                    graph.len() - engine.finished
                )),
            });
        };
        now = next;
        if let Some(r) = engine.io.take_if(|r| r.end_ns == now) {
            engine.finish(r.task);
        }
        if let Some(r) = engine.cpu.take_if(|r| r.end_ns == now) {
            engine.finish(r.task);
        }
    }
    Ok(ScheduleTrace::from_events(engine.events, releases))
}

/// One task at a time, in priority order among ready tasks; buffers are not
/// modelled. The makespan is the sum of all durations.
pub fn simulate_sequential(graph: &TaskGraph) -> ScheduleTrace {
    let mut remaining: Vec<u32> = graph.tasks.iter().map(|t| t.in_degree).collect();
    let mut ready: ReadySet = graph
        .roots
        .iter()
        .flatten()
        .map(|&id| (graph.task(id).priority, id))
        .collect();
    let mut events = Vec::with_capacity(graph.len());
    let mut now = 0;
    while let Some((_, id)) = ready.pop_first() {
        let t = graph.task(id);
        events.push(TraceEvent {
            task: id,
            kind: t.kind,
            frame: t.frame,
            layer: t.layer,
            tile: t.tile,
            resource: t.kind.resource(),
            start_ns: now,
            end_ns: now + t.duration_ns,
            bytes: t.bytes,
            buffer: None,
        });
        now += t.duration_ns;
        for &s in &graph.successors[id.index()] {
            remaining[s.index()] -= 1;
            if remaining[s.index()] == 0 {
                ready.insert((graph.task(s).priority, s));
            }
        }
    }
    ScheduleTrace::from_events(events, vec![0; graph.n_frames as usize])
}

/// Σ compute durations: the run time on an MCU that never swaps.
pub fn compute_only_baseline_ns(graph: &TaskGraph) -> u64 {
    graph.compute_time_ns()
}

pub fn compute_only_baseline(graph: &TaskGraph) -> f64 {
    ns_to_sec(compute_only_baseline_ns(graph))
}
