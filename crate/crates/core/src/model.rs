//! Multi-typed DAG task sets and the heterogeneous processing-unit catalog.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::{TaskId, Ticks};

/// A processing-unit type: an architecture plus a capability class within it
/// (`CPU.0` for a fast core, `CPU.1` for a low-power core, ...).
///
/// Ordering is by architecture name, then type index; this is the "type id"
/// order used for every tie-break in the crate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcTypeId {
    pub arch: String,
    pub index: u32,
}

impl ProcTypeId {
    pub fn new(arch: impl Into<String>, index: u32) -> Self {
        Self {
            arch: arch.into(),
            index,
        }
    }
}

impl fmt::Display for ProcTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.arch, self.index)
    }
}

impl FromStr for ProcTypeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (arch, index) = s
            .rsplit_once('.')
            .ok_or_else(|| Error::InvalidArgument(format!("bad processing-unit type `{s}`, expected ARCH.N")))?;
        let index = index
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad type index in `{s}`")))?;
        if arch.is_empty() {
            return Err(Error::InvalidArgument(format!("empty architecture in `{s}`")));
        }
        Ok(Self::new(arch, index))
    }
}

/// Available processing-unit types and their instance counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcCatalog {
    entries: BTreeMap<ProcTypeId, u32>,
}

impl ProcCatalog {
    pub fn new(entries: impl IntoIterator<Item = (ProcTypeId, u32)>) -> Result<Self> {
        let entries: BTreeMap<_, _> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::InvalidArgument("catalog has no processing-unit types".into()));
        }
        if let Some((ty, _)) = entries.iter().find(|(_, n)| **n == 0) {
            return Err(Error::InvalidArgument(format!("catalog type {ty} has zero instances")));
        }
        Ok(Self { entries })
    }

    /// Types in type-id order.
    pub fn types(&self) -> impl Iterator<Item = &ProcTypeId> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ProcTypeId, u32)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn count(&self, ty: &ProcTypeId) -> Option<u32> {
        self.entries.get(ty).copied()
    }

    pub fn contains(&self, ty: &ProcTypeId) -> bool {
        self.entries.contains_key(ty)
    }

    pub fn total_units(&self) -> u32 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Closed execution-time interval `[bcet, wcet]` in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub bcet: Ticks,
    pub wcet: Ticks,
}

impl Interval {
    pub const ZERO: Interval = Interval { bcet: 0, wcet: 0 };

    pub fn new(bcet: Ticks, wcet: Ticks) -> Self {
        Self { bcet, wcet }
    }

    pub fn contains(&self, d: Ticks) -> bool {
        self.bcet <= d && d <= self.wcet
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskNode {
    pub id: TaskId,
    /// Eligible processing-unit types, in type-id order.
    pub eligible: Vec<ProcTypeId>,
    pub intervals: BTreeMap<ProcTypeId, Interval>,
    pub is_virtual: bool,
}

impl TaskNode {
    pub fn new(id: TaskId, intervals: impl IntoIterator<Item = (ProcTypeId, Interval)>) -> Self {
        let intervals: BTreeMap<_, _> = intervals.into_iter().collect();
        Self {
            id,
            eligible: intervals.keys().cloned().collect(),
            intervals,
            is_virtual: false,
        }
    }

    pub fn wcet(&self, ty: &ProcTypeId) -> Option<Ticks> {
        self.intervals.get(ty).map(|i| i.wcet)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiTypedDag {
    pub nodes: Vec<TaskNode>,
    pub edges: Vec<(TaskId, TaskId)>,
}

impl MultiTypedDag {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Predecessor and successor lists, ignoring edges with unknown endpoints.
    pub fn adjacency(&self) -> (Vec<Vec<TaskId>>, Vec<Vec<TaskId>>) {
        let n = self.nodes.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            if u < n && v < n {
                succs[u].push(v);
                preds[v].push(u);
            }
        }
        for l in preds.iter_mut().chain(succs.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        (preds, succs)
    }

    /// Topological order (Kahn, smallest id first), or `None` on a cycle.
    pub fn topo_order(&self) -> Option<Vec<TaskId>> {
        let (preds, succs) = self.adjacency();
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<TaskId> = (0..self.len()).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(u) = ready.pop_first() {
            order.push(u);
            for &v in &succs[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    pub fn sources(&self) -> Vec<TaskId> {
        let (preds, _) = self.adjacency();
        (0..self.len()).filter(|&v| preds[v].is_empty()).collect()
    }

    pub fn sinks(&self) -> Vec<TaskId> {
        let (_, succs) = self.adjacency();
        (0..self.len()).filter(|&v| succs[v].is_empty()).collect()
    }

    /// Every processing-unit type used by some node, in type-id order.
    pub fn used_types(&self) -> Vec<ProcTypeId> {
        let set: BTreeSet<_> = self.nodes.iter().flat_map(|n| n.eligible.iter().cloned()).collect();
        set.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Issue {
    Empty,
    IdMismatch { position: usize, id: TaskId },
    UnknownEdgeEndpoint { from: TaskId, to: TaskId },
    DuplicateEdge { from: TaskId, to: TaskId },
    Cycle,
    EmptyEligible { task: TaskId },
    ReversedInterval { task: TaskId, ty: ProcTypeId, bcet: Ticks, wcet: Ticks },
    TypeNotInCatalog { task: TaskId, ty: ProcTypeId },
    IntervalMismatch { task: TaskId },
    VirtualWithTime { task: TaskId },
    MissingTask { task: TaskId },
    OrderViolatesDependency { from: TaskId, to: TaskId },
    IllegalResource { task: TaskId, ty: ProcTypeId },
    DuplicateInOrder { task: TaskId },
    UnknownTask { task: TaskId },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Empty => write!(f, "dag has no nodes"),
            Issue::IdMismatch { position, id } => {
                write!(f, "node at position {position} has id {id}; ids must be 0..N-1 in order")
            }
            Issue::UnknownEdgeEndpoint { from, to } => write!(f, "edge ({from},{to}) references an unknown node"),
            Issue::DuplicateEdge { from, to } => write!(f, "duplicate edge ({from},{to})"),
            Issue::Cycle => write!(f, "cycle in edge relation"),
            Issue::EmptyEligible { task } => write!(f, "task {task}: empty eligible set"),
            Issue::ReversedInterval { task, ty, bcet, wcet } => {
                write!(f, "task {task} on {ty}: bcet > wcet ({bcet} > {wcet})")
            }
            Issue::TypeNotInCatalog { task, ty } => write!(f, "task {task}: eligible type {ty} not in catalog"),
            Issue::IntervalMismatch { task } => {
                write!(f, "task {task}: intervals must be defined exactly on the eligible set")
            }
            Issue::VirtualWithTime { task } => write!(f, "virtual task {task} must have zero execution time"),
            Issue::MissingTask { task } => write!(f, "task {task} missing from constraint"),
            Issue::OrderViolatesDependency { from, to } => {
                write!(f, "order violates dependency ({from},{to})")
            }
            Issue::IllegalResource { task, ty } => write!(f, "task {task}: illegal resource {ty}"),
            Issue::DuplicateInOrder { task } => write!(f, "task {task} appears more than once in order"),
            Issue::UnknownTask { task } => write!(f, "task {task} does not exist"),
        }
    }
}

/// Every problem found while checking a DAG or constraint. Empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.to_string().contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(Issue::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate_dag(dag: &MultiTypedDag, catalog: &ProcCatalog) -> ValidationReport {
    let mut issues = Vec::new();
    let n = dag.len();
    if n == 0 {
        issues.push(Issue::Empty);
    }
    for (position, node) in dag.nodes.iter().enumerate() {
        if node.id != position {
            issues.push(Issue::IdMismatch { position, id: node.id });
        }
    }
    let mut seen = BTreeSet::new();
    for &(u, v) in &dag.edges {
        if u >= n || v >= n {
            issues.push(Issue::UnknownEdgeEndpoint { from: u, to: v });
        } else if !seen.insert((u, v)) {
            issues.push(Issue::DuplicateEdge { from: u, to: v });
        }
    }
    if n > 0 && dag.topo_order().is_none() {
        issues.push(Issue::Cycle);
    }
    for node in &dag.nodes {
        let task = node.id;
        if node.eligible.is_empty() {
            issues.push(Issue::EmptyEligible { task });
        }
        let eligible: BTreeSet<_> = node.eligible.iter().collect();
        let keyed: BTreeSet<_> = node.intervals.keys().collect();
        if eligible != keyed || eligible.len() != node.eligible.len() {
            issues.push(Issue::IntervalMismatch { task });
        }
        for ty in &node.eligible {
            if !catalog.contains(ty) {
                issues.push(Issue::TypeNotInCatalog { task, ty: ty.clone() });
            }
        }
        for (ty, iv) in &node.intervals {
            if iv.bcet > iv.wcet {
                issues.push(Issue::ReversedInterval {
                    task,
                    ty: ty.clone(),
                    bcet: iv.bcet,
                    wcet: iv.wcet,
                });
            }
        }
        if node.is_virtual && node.intervals.values().any(|iv| *iv != Interval::ZERO) {
            issues.push(Issue::VirtualWithTime { task });
        }
    }
    ValidationReport { issues }
}

/// Adds a zero-time virtual source (sink) when the DAG has several sources
/// (sinks). A DAG that already has a single source and sink is returned
/// unchanged, so the operation is idempotent.
pub fn add_virtual_endpoints(dag: &MultiTypedDag) -> Result<MultiTypedDag> {
    if dag.is_empty() {
        return Err(Error::InvalidDag(ValidationReport { issues: vec![Issue::Empty] }));
    }
    if dag.topo_order().is_none() {
        return Err(Error::InvalidDag(ValidationReport { issues: vec![Issue::Cycle] }));
    }
    let sources = dag.sources();
    let sinks = dag.sinks();
    let mut out = dag.clone();
    let types = dag.used_types();
    let virtual_node = |out: &mut MultiTypedDag| {
        let id = out.nodes.len();
        let mut node = TaskNode::new(id, types.iter().map(|t| (t.clone(), Interval::ZERO)));
        node.is_virtual = true;
        out.nodes.push(node);
        id
    };
    if sources.len() > 1 {
        let v = virtual_node(&mut out);
        out.edges.extend(sources.iter().map(|&s| (v, s)));
    }
    if sinks.len() > 1 {
        let v = virtual_node(&mut out);
        out.edges.extend(sinks.iter().map(|&s| (s, v)));
    }
    Ok(out)
}

/// Shortest directed path length (in edges) from the unique source to every
/// node. Nodes unreachable from the source get `u32::MAX`.
pub fn bfs_depths(dag: &MultiTypedDag) -> Vec<u32> {
    let (_, succs) = dag.adjacency();
    let mut depth = vec![u32::MAX; dag.len()];
    let mut queue: VecDeque<TaskId> = dag.sources().into_iter().collect();
    for &s in &queue {
        depth[s] = 0;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &succs[u] {
            if depth[v] == u32::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    depth
}

pub fn bfs_depth(dag: &MultiTypedDag, task: TaskId) -> Result<u32> {
    if task >= dag.len() {
        return Err(Error::UnknownTask(task));
    }
    Ok(bfs_depths(dag)[task])
}

/// One eligible processing-unit type of a bound task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TypeOption {
    /// Index into [`System::types`].
    pub ty: usize,
    pub interval: Interval,
}

#[derive(Clone, Debug)]
pub struct TaskInfo {
    pub preds: Vec<TaskId>,
    pub succs: Vec<TaskId>,
    /// Eligible types in type-id order.
    pub options: Vec<TypeOption>,
    pub is_virtual: bool,
}

impl TaskInfo {
    pub fn option(&self, ty: usize) -> Option<&TypeOption> {
        self.options.iter().find(|o| o.ty == ty)
    }
}

/// A validated, normalized DAG bound to a catalog, with dense type indices
/// and precomputed adjacency. All simulation runs against a `System`.
#[derive(Clone, Debug)]
pub struct System {
    dag: MultiTypedDag,
    catalog: ProcCatalog,
    types: Vec<ProcTypeId>,
    counts: Vec<usize>,
    tasks: Vec<TaskInfo>,
    topo: Vec<TaskId>,
    depths: Vec<u32>,
    src: TaskId,
    sink: TaskId,
}

impl System {
    /// Validates `dag` against `catalog` and adds virtual endpoints if needed.
    pub fn new(dag: &MultiTypedDag, catalog: &ProcCatalog) -> Result<Self> {
        let report = validate_dag(dag, catalog);
        if !report.is_empty() {
            return Err(Error::InvalidDag(report));
        }
        let dag = add_virtual_endpoints(dag)?;
        let types: Vec<ProcTypeId> = catalog.types().cloned().collect();
        let counts = types
            .iter()
            .map(|t| catalog.count(t).unwrap_or(0) as usize)
            .collect();
        let (preds, succs) = dag.adjacency();
        let tasks = dag
            .nodes
            .iter()
            .zip(preds.into_iter().zip(succs))
            .map(|(node, (preds, succs))| TaskInfo {
                preds,
                succs,
                options: node
                    .intervals
                    .iter()
                    .map(|(ty, iv)| TypeOption {
                        ty: types.binary_search(ty).expect("validated type"),
                        interval: *iv,
                    })
                    .collect(),
                is_virtual: node.is_virtual,
            })
            .collect();
        let topo = dag.topo_order().expect("validated acyclic");
        let src = dag.sources()[0];
        let sink = dag.sinks()[0];
        let depths = bfs_depths(&dag);
        Ok(Self {
            dag,
            catalog: catalog.clone(),
            types,
            counts,
            tasks,
            topo,
            depths,
            src,
            sink,
        })
    }

    pub fn dag(&self) -> &MultiTypedDag {
        &self.dag
    }

    pub fn catalog(&self) -> &ProcCatalog {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, t: TaskId) -> &TaskInfo {
        &self.tasks[t]
    }

    pub fn tasks(&self) -> &[TaskInfo] {
        &self.tasks
    }

    pub fn types(&self) -> &[ProcTypeId] {
        &self.types
    }

    pub fn type_index(&self, ty: &ProcTypeId) -> Option<usize> {
        self.types.binary_search(ty).ok()
    }

    /// Instance count of the type at dense index `ty`.
    pub fn res_num(&self, ty: usize) -> usize {
        self.counts[ty]
    }

    pub fn topo(&self) -> &[TaskId] {
        &self.topo
    }

    pub fn depth(&self, t: TaskId) -> u32 {
        self.depths[t]
    }

    pub fn src(&self) -> TaskId {
        self.src
    }

    pub fn sink(&self) -> TaskId {
        self.sink
    }

    /// Same topology and catalog, with replaced intervals.
    pub fn with_intervals(&self, f: impl Fn(TaskId, &ProcTypeId, Interval) -> Interval) -> Result<Self> {
        let mut dag = self.dag.clone();
        for node in &mut dag.nodes {
            let id = node.id;
            for (ty, iv) in node.intervals.iter_mut() {
                *iv = f(id, ty, *iv);
            }
        }
        Self::new(&dag, &self.catalog)
    }
}
