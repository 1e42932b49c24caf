//! File formats: DAG, catalog and constraint JSON; trace, metrics and
//! manifest CSV.
//!
//! ```text
//! dag:        {"nodes":[{"id":0,"eligible":[{"arch":"CPU","type":0}],"intervals":{"CPU.0":[3,7]}}],"edges":[[0,1]]}
//! catalog:    {"CPU.0":1,"CPU.1":1,"GPU.0":1,"GPU.1":1}
//! constraint: {"order":[0,1,3,2],"alloc":{"0":"CPU.0","1":"GPU.1"}}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{CampaignMetrics, Rational};
use crate::constraint::ExecutionConstraint;
use crate::error::{Error, Result};
use crate::model::{Interval, MultiTypedDag, ProcCatalog, ProcTypeId, System, TaskNode};
use crate::progress::ScheduleTrace;
use crate::{TaskId, Ticks};

#[derive(Serialize, Deserialize)]
struct TypeRef {
    arch: String,
    #[serde(rename = "type")]
    index: u32,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: TaskId,
    eligible: Vec<TypeRef>,
    intervals: BTreeMap<String, [Ticks; 2]>,
    #[serde(rename = "virtual", default, skip_serializing_if = "std::ops::Not::not")]
    is_virtual: bool,
}

#[derive(Serialize, Deserialize)]
struct DagFile {
    nodes: Vec<NodeFile>,
    edges: Vec<[TaskId; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintFile {
    order: Vec<TaskId>,
    alloc: BTreeMap<String, String>,
}

fn json_err(path: &str) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json { path: path.to_string(), source }
}

fn parse_type(s: &str) -> Result<ProcTypeId> {
    s.parse()
}

pub fn dag_from_json(text: &str, origin: &str) -> Result<MultiTypedDag> {
    let file: DagFile = serde_json::from_str(text).map_err(json_err(origin))?;
    let nodes = file
        .nodes
        .into_iter()
        .map(|n| {
            let intervals = n
                .intervals
                .iter()
                .map(|(k, [b, w])| Ok((parse_type(k)?, Interval::new(*b, *w))))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(TaskNode {
                id: n.id,
                eligible: n.eligible.into_iter().map(|t| ProcTypeId::new(t.arch, t.index)).collect(),
                intervals,
                is_virtual: n.is_virtual,
            })
        })
        .collect::<Result<_>>()?;
    let edges = file.edges.into_iter().map(|[u, v]| (u, v)).collect();
    Ok(MultiTypedDag { nodes, edges })
}

pub fn dag_to_json(dag: &MultiTypedDag) -> String {
    let file = DagFile {
        nodes: dag
            .nodes
            .iter()
            .map(|n| NodeFile {
                id: n.id,
                eligible: n.eligible.iter().map(|t| TypeRef { arch: t.arch.clone(), index: t.index }).collect(),
                intervals: n.intervals.iter().map(|(k, iv)| (k.to_string(), [iv.bcet, iv.wcet])).collect(),
                is_virtual: n.is_virtual,
            })
            .collect(),
        edges: dag.edges.iter().map(|&(u, v)| [u, v]).collect(),
    };
    serde_json::to_string_pretty(&file).expect("dag serializes")
}

pub fn catalog_from_json(text: &str, origin: &str) -> Result<ProcCatalog> {
    let map: BTreeMap<String, u32> = serde_json::from_str(text).map_err(json_err(origin))?;
    ProcCatalog::new(map.iter().map(|(k, v)| Ok((parse_type(k)?, *v))).collect::<Result<Vec<_>>>()?)
}

pub fn catalog_to_json(catalog: &ProcCatalog) -> String {
    let map: BTreeMap<String, u32> = catalog.entries().map(|(k, v)| (k.to_string(), v)).collect();
    serde_json::to_string_pretty(&map).expect("catalog serializes")
}

pub fn constraint_from_json(text: &str, origin: &str) -> Result<ExecutionConstraint> {
    let file: ConstraintFile = serde_json::from_str(text).map_err(json_err(origin))?;
    let alloc = file
        .alloc
        .iter()
        .map(|(k, v)| {
            let t = k
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{origin}: alloc key `{k}` is not a task id")))?;
            Ok((t, parse_type(v)?))
        })
        .collect::<Result<_>>()?;
    Ok(ExecutionConstraint { order: file.order, alloc })
}

pub fn constraint_to_json(c: &ExecutionConstraint) -> String {
    let file = ConstraintFile {
        order: c.order.clone(),
        alloc: c.alloc.iter().map(|(t, ty)| (t.to_string(), ty.to_string())).collect(),
    };
    serde_json::to_string_pretty(&file).expect("constraint serializes")
}

/// Task id to duration, as JSON `{"0": 5, "3": 12}`.
pub fn assignment_from_json(text: &str, origin: &str) -> Result<BTreeMap<TaskId, Ticks>> {
    let map: BTreeMap<String, Ticks> = serde_json::from_str(text).map_err(json_err(origin))?;
    map.into_iter()
        .map(|(k, v)| {
            let t = k
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{origin}: key `{k}` is not a task id")))?;
            Ok((t, v))
        })
        .collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn read_dag(path: &Path) -> Result<MultiTypedDag> {
    dag_from_json(&read_text(path)?, &path.display().to_string())
}

pub fn read_catalog(path: &Path) -> Result<ProcCatalog> {
    catalog_from_json(&read_text(path)?, &path.display().to_string())
}

pub fn read_constraint(path: &Path) -> Result<ExecutionConstraint> {
    constraint_from_json(&read_text(path)?, &path.display().to_string())
}

/// Multiplies every interval by `scale`, for inputs given in fractional
/// time units.
pub fn scale_ticks(dag: &mut MultiTypedDag, scale: Ticks) {
    for iv in dag.nodes.iter_mut().flat_map(|n| n.intervals.values_mut()) {
        iv.bcet *= scale;
        iv.wcet *= scale;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub task_id: TaskId,
    pub start_tick: Ticks,
    pub finish_tick: Ticks,
    pub arch: Option<String>,
    pub type_index: Option<u32>,
    pub instance_index: Option<usize>,
    pub alloc_es_time: Option<Ticks>,
}

pub fn trace_rows(sys: &System, trace: &ScheduleTrace) -> Vec<TraceRow> {
    trace
        .entries
        .iter()
        .enumerate()
        .map(|(t, e)| {
            let ty = e.unit.map(|u| &sys.types()[u.ty]);
            TraceRow {
                task_id: t,
                start_tick: e.start,
                finish_tick: e.finish,
                arch: ty.map(|ty| ty.arch.clone()),
                type_index: ty.map(|ty| ty.index),
                instance_index: e.unit.map(|u| u.index),
                alloc_es_time: e.alloc_es_time,
            }
        })
        .collect()
}

/// One campaign result, as a metrics CSV row. Rationals are written `p/q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dag_id: String,
    pub policy: String,
    pub constraint_source: String,
    pub n_runs: u64,
    pub seed: u64,
    pub wcrt: Ticks,
    pub mswcrt: Ticks,
    pub msbcrt: Ticks,
    pub avrt: String,
    pub jitter: String,
    pub ta_detected: bool,
}

impl MetricsRow {
    pub fn new(dag_id: &str, policy: &str, constraint_source: &str, seed: u64, m: &CampaignMetrics) -> Self {
        Self {
            dag_id: dag_id.to_string(),
            policy: policy.to_string(),
            constraint_source: constraint_source.to_string(),
            n_runs: m.n_runs,
            seed,
            wcrt: m.wcrt,
            mswcrt: m.mswcrt,
            msbcrt: m.msbcrt,
            avrt: m.avrt.to_string(),
            jitter: m.jitter.to_string(),
            ta_detected: m.ta_detected,
        }
    }

    pub fn avrt(&self) -> Result<Rational> {
        self.avrt
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad avrt `{}` for dag {}", self.avrt, self.dag_id)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub dag_id: String,
    pub seed: u64,
    pub n_nodes: usize,
    pub p: f64,
    pub config: u32,
}

pub fn write_csv<T: Serialize>(out: impl Write, rows: &[T], origin: &str) -> Result<()> {
    let csv_err = |source| Error::Csv { path: origin.to_string(), source };
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: origin.to_string(), source })
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let origin = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: origin.clone(), source })?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|source| Error::Csv { path: origin, source })
}
