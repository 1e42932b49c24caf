//! Execution constraints for delayed-deterministic execution: a legal start
//! order over all tasks plus a fixed processing-unit type per task.
//!
//! Two sources: extraction from a recorded all-WCETs trace, and the HACPA
//! list scheduler (rank by mean WCET over eligible types plus the largest
//! successor rank, then place each task on the instance that finishes it
//! earliest).

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use num::rational::Ratio;
use num::Zero;

use crate::error::{Error, Result};
use crate::model::{Issue, ProcTypeId, System, ValidationReport};
use crate::progress::{ScheduleTrace, TraceEntry, UnitRef};
use crate::{TaskId, Ticks};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionConstraint {
    /// Every task exactly once; a task may start only after all earlier ones.
    pub order: Vec<TaskId>,
    /// Mandated processing-unit type per task.
    pub alloc: BTreeMap<TaskId, ProcTypeId>,
}

pub type Rank = Ratio<u128>;

/// Topological order that picks, among ready tasks, the one with the
/// smallest key. Keeps the key order wherever it is already consistent with
/// the edges and repairs it where ties (zero-time tasks) would break it.
fn priority_topo<K: Ord>(sys: &System, key: impl Fn(TaskId) -> K) -> Vec<TaskId> {
    let mut indeg: Vec<usize> = sys.tasks().iter().map(|t| t.preds.len()).collect();
    let mut heap: BinaryHeap<Reverse<(K, TaskId)>> = (0..sys.len())
        .filter(|&t| indeg[t] == 0)
        .map(|t| Reverse((key(t), t)))
        .collect();
    let mut order = Vec::with_capacity(sys.len());
    while let Some(Reverse((_, u))) = heap.pop() {
        order.push(u);
        for &v in &sys.task(u).succs {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                heap.push(Reverse((key(v), v)));
            }
        }
    }
    order
}

/// Order by (start tick, task id); alloc from the type each task ran on.
/// Virtual tasks take their first eligible type.
pub fn extract_constraint(sys: &System, trace: &ScheduleTrace) -> Result<ExecutionConstraint> {
    if trace.entries.len() != sys.len() {
        return Err(Error::IncompleteTrace(trace.entries.len().min(sys.len())));
    }
    let mut alloc = BTreeMap::new();
    for (t, e) in trace.entries.iter().enumerate() {
        let info = sys.task(t);
        let ty = match (e.unit, info.is_virtual) {
            (Some(u), _) => u.ty,
            (None, true) => info.options[0].ty,
            (None, false) => return Err(Error::IncompleteTrace(t)),
        };
        alloc.insert(t, sys.types()[ty].clone());
    }
    let order = priority_topo(sys, |t| trace.entries[t].start);
    Ok(ExecutionConstraint { order, alloc })
}

pub fn validate_constraint(c: &ExecutionConstraint, sys: &System) -> ValidationReport {
    let n = sys.len();
    let mut issues = Vec::new();
    let mut pos = vec![None; n];
    for (i, &t) in c.order.iter().enumerate() {
        if t >= n {
            issues.push(Issue::UnknownTask { task: t });
        } else if pos[t].is_some() {
            issues.push(Issue::DuplicateInOrder { task: t });
        } else {
            pos[t] = Some(i);
        }
    }
    for (t, p) in pos.iter().enumerate() {
        if p.is_none() || !c.alloc.contains_key(&t) {
            issues.push(Issue::MissingTask { task: t });
        }
    }
    for &(from, to) in &sys.dag().edges {
        if let (Some(a), Some(b)) = (pos[from], pos[to]) {
            if b < a {
                issues.push(Issue::OrderViolatesDependency { from, to });
            }
        }
    }
    for (&t, ty) in &c.alloc {
        if t >= n {
            issues.push(Issue::UnknownTask { task: t });
            continue;
        }
        let legal = sys.type_index(ty).is_some_and(|r| sys.task(t).option(r).is_some());
        if !legal {
            issues.push(Issue::IllegalResource { task: t, ty: ty.clone() });
        }
    }
    ValidationReport { issues }
}

/// Mean WCET over the eligible types plus the largest successor rank.
pub fn hacpa_rank(sys: &System) -> Vec<Rank> {
    let mut rank = vec![Rank::zero(); sys.len()];
    for &t in sys.topo().iter().rev() {
        let info = sys.task(t);
        let total: u128 = info.options.iter().map(|o| u128::from(o.interval.wcet)).sum();
        let mean = Rank::new(total, info.options.len() as u128);
        let tail = info.succs.iter().map(|&s| rank[s]).max().unwrap_or_else(Rank::zero);
        rank[t] = mean + tail;
    }
    rank
}

#[derive(Clone, Debug)]
pub struct HacpaSchedule {
    /// Offline list schedule, times starting at 0.
    pub trace: ScheduleTrace,
    pub constraint: ExecutionConstraint,
    /// Largest finish time in the list schedule.
    pub wcrt: Ticks,
}

/// List-schedules tasks in descending rank (ties to the smaller id, never
/// ahead of a predecessor) onto the instance giving the earliest finish.
/// A real task occupies its instance for at least one tick.
pub fn hacpa_schedule(sys: &System) -> Result<HacpaSchedule> {
    let rank = hacpa_rank(sys);
    let order = priority_topo(sys, |t| Reverse(rank[t]));
    let mut avail: Vec<Vec<Ticks>> = (0..sys.types().len()).map(|r| vec![0; sys.res_num(r)]).collect();
    let mut entries = vec![TraceEntry::default(); sys.len()];
    for &t in &order {
        let info = sys.task(t);
        let ready = info.preds.iter().map(|&u| entries[u].finish).max().unwrap_or(0);
        if info.is_virtual {
            entries[t] = TraceEntry { start: ready, finish: ready, unit: None, alloc_es_time: None };
            continue;
        }
        let mut best: Option<(Ticks, UnitRef, Ticks, Ticks)> = None;
        for opt in &info.options {
            for (index, &free) in avail[opt.ty].iter().enumerate() {
                let start = free.max(ready);
                let finish = start + opt.interval.wcet.max(1);
                if best.is_none_or(|(f, ..)| finish < f) {
                    best = Some((finish, UnitRef { ty: opt.ty, index }, start, opt.interval.wcet));
                }
            }
        }
        let (finish, unit, start, wcet) = best.ok_or(Error::IncompleteTrace(t))?;
        avail[unit.ty][unit.index] = finish;
        entries[t] = TraceEntry { start, finish, unit: Some(unit), alloc_es_time: Some(wcet) };
    }
    let trace = ScheduleTrace { entries };
    let wcrt = trace.entries.iter().map(|e| e.finish).max().unwrap_or(0);
    let constraint = extract_constraint(sys, &trace)?;
    Ok(HacpaSchedule { trace, constraint, wcrt })
}
