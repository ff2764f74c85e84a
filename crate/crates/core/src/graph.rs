//! IO/compute task DAG for one or more frames of a tiled network.
//!
//! Per layer and per input/output pair the graph holds one input read, one
//! weight read plus one compute per weight tile, and one output write:
//!
//! ```text
//! RI ─┬─> RW0 ─> C0 ─> C1 ─> ... ─> Cn ─> WO
//!     ├─> RW1 ───────^
//!     └─> ...
//! ```
//!
//! Compute tasks within a pair accumulate into the same output tile and are
//! chained. Every input read of layer `l + 1` waits on every output write of
//! layer `l` in the same frame. Frames are independent.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HardwareProfile, NnSpec};
use crate::tiler::LayerTiling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub u32);

impl TaskId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    ReadInput,
    ReadWeight,
    Compute,
    WriteOutput,
}

impl TaskKind {
    pub fn resource(self) -> Resource {
        match self {
            TaskKind::Compute => Resource::Cpu,
            _ => Resource::Io,
        }
    }

    pub fn is_read(self) -> bool {
        matches!(self, TaskKind::ReadInput | TaskKind::ReadWeight)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            TaskKind::ReadInput => "RI",
            TaskKind::ReadWeight => "RW",
            TaskKind::Compute => "C",
            TaskKind::WriteOutput => "WO",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::ReadInput => "read_input",
            TaskKind::ReadWeight => "read_weight",
            TaskKind::Compute => "compute",
            TaskKind::WriteOutput => "write_output",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resource {
    Cpu,
    Io,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Cpu => "CPU",
            Resource::Io => "IO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pool {
    Input,
    Weight,
    Output,
}

impl Pool {
    pub const ALL: [Pool; 3] = [Pool::Input, Pool::Weight, Pool::Output];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pool::Input => "input",
            Pool::Weight => "weight",
            Pool::Output => "output",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskState {
    Init,
    Ready,
    Selected,
    Finished,
}

impl TaskState {
    /// Whether `self -> next` is one step along INIT -> READY -> SELECTED -> FINISHED.
    pub fn can_advance_to(self, next: TaskState) -> bool {
        matches!(
            (self, next),
            (TaskState::Init, TaskState::Ready)
                | (TaskState::Ready, TaskState::Selected)
                | (TaskState::Selected, TaskState::Finished)
        )
    }
}

/// Lexicographic scheduling key; smaller runs first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Priority {
    pub frame: u32,
    pub layer: u32,
    pub pair: u32,
    pub ordinal: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub kind: TaskKind,
    pub frame: u32,
    pub layer: u32,
    pub pair: u32,
    /// Weight-tile index for reads of weights and computes, else the pair.
    pub tile: u32,
    /// Position within the pair in insertion order.
    pub ordinal: u32,
    /// Index into [`TaskGraph::pairs`].
    pub group: u32,
    pub bytes: u64,
    pub ops: f64,
    pub duration_ns: u64,
    /// Pool a buffer is taken from when the task starts.
    pub demand: Option<Pool>,
    /// Weight read consumed by a compute task; its buffer is freed when the
    /// compute finishes.
    pub weight_read: Option<TaskId>,
    pub in_degree: u32,
    pub state: TaskState,
    pub priority: Priority,
}

/// The tasks belonging to one input/output tile pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGroup {
    pub frame: u32,
    pub layer: u32,
    pub pair: u32,
    pub read_input: TaskId,
    pub weight_reads: Vec<TaskId>,
    /// Accumulation chain, in order.
    pub computes: Vec<TaskId>,
    pub write_output: TaskId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph {
    pub tasks: Vec<Task>,
    pub successors: Vec<Vec<TaskId>>,
    pub predecessors: Vec<Vec<TaskId>>,
    pub pairs: Vec<PairGroup>,
    /// Tasks with no predecessors, per frame.
    pub roots: Vec<Vec<TaskId>>,
    pub n_frames: u32,
    pub n_layers: u32,
}

fn secs_to_ns(secs: f64) -> u64 {
    (secs * 1e9).round() as u64
}

struct Builder {
    tasks: Vec<Task>,
    successors: Vec<Vec<TaskId>>,
    predecessors: Vec<Vec<TaskId>>,
}

impl Builder {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        kind: TaskKind,
        (frame, layer, pair): (u32, u32, u32),
        tile: u32,
        ordinal: u32,
        group: u32,
        bytes: u64,
        ops: f64,
        duration_ns: u64,
        demand: Option<Pool>,
    ) -> TaskId {
        let id = TaskId(self.tasks.len() as u32);
        self.tasks.push(Task {
            id,
            kind,
            frame,
            layer,
            pair,
            tile,
            ordinal,
            group,
            bytes,
            ops,
            duration_ns,
            demand,
            weight_read: None,
            in_degree: 0,
            state: TaskState::Init,
            priority: Priority {
                frame,
                layer,
                pair,
                ordinal,
            },
        });
        self.successors.push(Vec::new());
        self.predecessors.push(Vec::new());
        id
    }

    fn edge(&mut self, from: TaskId, to: TaskId) {
        self.successors[from.index()].push(to);
        self.predecessors[to.index()].push(from);
        self.tasks[to.index()].in_degree += 1;
    }
}

/// Expand a tiled network into the task DAG for `n_frames` frames.
pub fn build_graph(
    nn: &NnSpec,
    tilings: &[LayerTiling],
    hw: &HardwareProfile,
    n_frames: u32,
) -> Result<TaskGraph> {
    if tilings.is_empty() {
        return Err(Error::InvalidGraph("no layer tilings".into()));
    }
    if n_frames == 0 {
        return Err(Error::InvalidGraph("at least one frame is required".into()));
    }
    if tilings.len() != nn.layers.len() {
        return Err(Error::InvalidGraph(format!(
            "{} tilings for {} layers",
            tilings.len(),
            nn.layers.len()
        )));
    }
    for (t, l) in tilings.iter().zip(&nn.layers) {
        if t.layer != l.name {
            return Err(Error::InvalidGraph(format!(
                "tiling for `{}` given in place of `{}`",
                t.layer, l.name
            )));
        }
        if t.n_pairs == 0 {
            return Err(Error::InvalidGraph(format!(
                "layer `{}` has no tiles",
                l.name
            )));
        }
    }

    let mut b = Builder {
        tasks: Vec::new(),
        successors: Vec::new(),
        predecessors: Vec::new(),
    };
    let mut pairs = Vec::new();

    for frame in 0..n_frames {
        let mut prev_writes: Vec<TaskId> = Vec::new();
        for (li, (layer, tiling)) in nn.layers.iter().zip(tilings).enumerate() {
            let li = li as u32;
            let chain_len = tiling.n_weight_tiles.max(1);
            let ops_per_task = layer.ops as f64 / tiling.compute_tasks() as f64;
            let compute_ns = secs_to_ns(hw.compute_seconds(ops_per_task));
            let mut writes = Vec::with_capacity(tiling.n_pairs as usize);

            for pair in 0..tiling.n_pairs {
                let at = (frame, li, pair);
                let group = pairs.len() as u32;
                let in_bytes = tiling.input_tile(pair);
                let ri = b.push(
                    TaskKind::ReadInput,
                    at,
                    pair,
                    0,
                    group,
                    in_bytes,
                    0.0,
                    secs_to_ns(hw.io_seconds(in_bytes)),
                    Some(Pool::Input),
                );
                for &w in &prev_writes {
                    b.edge(w, ri);
                }

                let mut weight_reads = Vec::with_capacity(tiling.n_weight_tiles as usize);
                let mut computes = Vec::with_capacity(chain_len as usize);
                let mut ordinal = 1;
                for w in 0..chain_len {
                    let rw = if tiling.n_weight_tiles > 0 {
                        let w_bytes = tiling.weight_tile(w);
                        let rw = b.push(
                            TaskKind::ReadWeight,
                            at,
                            w,
                            ordinal,
                            group,
                            w_bytes,
                            0.0,
                            secs_to_ns(hw.io_seconds(w_bytes)),
                            Some(Pool::Weight),
                        );
                        ordinal += 1;
                        b.edge(ri, rw);
                        weight_reads.push(rw);
                        Some(rw)
                    } else {
                        None
                    };
                    let c = b.push(
                        TaskKind::Compute,
                        at,
                        w,
                        ordinal,
                        group,
                        0,
                        ops_per_task,
                        compute_ns,
                        (w == 0).then_some(Pool::Output),
                    );
                    ordinal += 1;
                    b.tasks[c.index()].weight_read = rw;
                    match rw {
                        Some(rw) => b.edge(rw, c),
                        None => b.edge(ri, c),
                    }
                    if let Some(&prev) = computes.last() {
                        b.edge(prev, c);
                    }
                    computes.push(c);
                }

                let out_bytes = tiling.output_tile(pair);
                let wo = b.push(
                    TaskKind::WriteOutput,
                    at,
                    pair,
                    ordinal,
                    group,
                    out_bytes,
                    0.0,
                    secs_to_ns(hw.io_seconds(out_bytes)),
                    None,
                );
                b.edge(*computes.last().expect("chain is non-empty"), wo);
                writes.push(wo);
                pairs.push(PairGroup {
                    frame,
                    layer: li,
                    pair,
                    read_input: ri,
                    weight_reads,
                    computes,
                    write_output: wo,
                });
            }
            prev_writes = writes;
        }
    }

    let mut roots = vec![Vec::new(); n_frames as usize];
    for t in &mut b.tasks {
        if t.in_degree == 0 {
            t.state = TaskState::Ready;
            roots[t.frame as usize].push(t.id);
        }
    }

    let mut graph = TaskGraph {
        tasks: b.tasks,
        successors: b.successors,
        predecessors: b.predecessors,
        pairs,
        roots,
        n_frames,
        n_layers: nn.layers.len() as u32,
    };
    assign_priorities(&mut graph);
    graph.topological_order()?;
    Ok(graph)
}

/// Order tasks by (frame, layer, pair, position within the pair).
pub fn assign_priorities(graph: &mut TaskGraph) {
    for t in &mut graph.tasks {
        t.priority = Priority {
            frame: t.frame,
            layer: t.layer,
            pair: t.pair,
            ordinal: t.ordinal,
        };
    }
}

impl TaskGraph {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.index()]
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn io_task_count(&self) -> usize {
        self.tasks
            .iter()
            .filter(|t| t.kind != TaskKind::Compute)
            .count()
    }

    pub fn compute_task_count(&self) -> usize {
        self.tasks.len() - self.io_task_count()
    }

    /// Σ IO durations: the IO time of a fully sequential run.
    pub fn io_time_ns(&self) -> u64 {
        self.tasks
            .iter()
            .filter(|t| t.kind != TaskKind::Compute)
            .map(|t| t.duration_ns)
            .sum()
    }

    pub fn compute_time_ns(&self) -> u64 {
        self.tasks
            .iter()
            .filter(|t| t.kind == TaskKind::Compute)
            .map(|t| t.duration_ns)
            .sum()
    }

    pub fn total_duration_ns(&self) -> u64 {
        self.tasks.iter().map(|t| t.duration_ns).sum()
    }

    /// Kahn's algorithm; fails if the graph has a cycle.
    pub fn topological_order(&self) -> Result<Vec<TaskId>> {
        let mut degree: Vec<u32> = self.predecessors.iter().map(|p| p.len() as u32).collect();
        let mut queue: VecDeque<TaskId> = self
            .tasks
            .iter()
            .filter(|t| degree[t.id.index()] == 0)
            .map(|t| t.id)
            .collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for &s in &self.successors[id.index()] {
                degree[s.index()] -= 1;
                if degree[s.index()] == 0 {
                    queue.push_back(s);
                }
            }
        }
        if order.len() != self.tasks.len() {
            return Err(Error::InvalidGraph(format!(
                "cycle detected: {} of {} tasks unreachable in topological order",
                self.tasks.len() - order.len(),
                self.tasks.len()
            )));
        }
        Ok(order)
    }

    /// One record per task: id, kind, frame, layer, pair, tile, duration,
    /// buffer demand and the space-separated predecessor ids.
    pub fn write_dump<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "id",
            "kind",
            "frame",
            "layer",
            "pair",
            "tile",
            "duration_ns",
            "demand",
            "predecessors",
        ])?;
        for t in &self.tasks {
            let preds = self.predecessors[t.id.index()]
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let demand = t
                .demand
                .map(|p| p.to_string())
                .unwrap_or_else(|| "none".into());
            w.write_record([
                t.id.to_string(),
                t.kind.to_string(),
                t.frame.to_string(),
                t.layer.to_string(),
                t.pair.to_string(),
                t.tile.to_string(),
                t.duration_ns.to_string(),
                demand,
                preds,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("dump is ASCII")
    }
}
