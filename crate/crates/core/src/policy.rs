//! Scheduling policies: the priority relation among dispatch-eligible tasks
//! and the dispatch rule for picking a processing unit.
//!
//! * HFCFS: earliest cycle at which the task became dispatch-eligible, ties
//!   to the smaller task id.
//! * HBFS: smaller BFS depth from the source, ties to the smaller task id.
//! * DDE: position in the execution constraint's order; a task may only
//!   start once every task before it has started, and only on its mandated
//!   processing-unit type.
//!
//! The baselines dispatch to the eligible type with the smallest WCET that
//! has a free instance (ties to the smaller type id), lowest instance first.

use std::fmt;

use crate::constraint::{validate_constraint, ExecutionConstraint};
use crate::error::{Error, Result};
use crate::model::System;
use crate::{TaskId, Ticks};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Hfcfs,
    Hbfs,
    Dde,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Hfcfs => "hfcfs",
            PolicyKind::Hbfs => "hbfs",
            PolicyKind::Dde => "dde",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    Hfcfs,
    Hbfs,
    Dde(ExecutionConstraint),
}

pub fn hfcfs_policy() -> SchedulerPolicy {
    SchedulerPolicy::Hfcfs
}

pub fn hbfs_policy() -> SchedulerPolicy {
    SchedulerPolicy::Hbfs
}

pub fn dde_policy(constraint: ExecutionConstraint) -> SchedulerPolicy {
    SchedulerPolicy::Dde(constraint)
}

impl SchedulerPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            SchedulerPolicy::Hfcfs => PolicyKind::Hfcfs,
            SchedulerPolicy::Hbfs => PolicyKind::Hbfs,
            SchedulerPolicy::Dde(_) => PolicyKind::Dde,
        }
    }

    /// Resolves the policy against a system into dense lookup tables.
    pub fn bind(&self, sys: &System) -> Result<PolicyPlan> {
        let n = sys.len();
        match self {
            SchedulerPolicy::Hfcfs | SchedulerPolicy::Hbfs => {
                let eligible = (0..n)
                    .map(|t| {
                        let mut opts = sys.task(t).options.clone();
                        opts.sort_by_key(|o| (o.interval.wcet, o.ty));
                        opts.into_iter().map(|o| o.ty).collect()
                    })
                    .collect();
                let static_key = match self.kind() {
                    PolicyKind::Hbfs => (0..n).map(|t| Ticks::from(sys.depth(t))).collect(),
                    _ => vec![0; n],
                };
                Ok(PolicyPlan {
                    kind: self.kind(),
                    eligible,
                    static_key,
                    order: Vec::new(),
                })
            }
            SchedulerPolicy::Dde(c) => {
                let report = validate_constraint(c, sys);
                if !report.is_empty() {
                    return Err(Error::InvalidConstraint(report));
                }
                let mut pos = vec![0; n];
                for (i, &t) in c.order.iter().enumerate() {
                    pos[t] = i as Ticks;
                }
                let eligible = (0..n)
                    .map(|t| vec![sys.type_index(&c.alloc[&t]).expect("validated type")])
                    .collect();
                Ok(PolicyPlan {
                    kind: PolicyKind::Dde,
                    eligible,
                    static_key: pos,
                    order: c.order.clone(),
                })
            }
        }
    }
}

/// A policy bound to one system.
#[derive(Clone, Debug)]
pub struct PolicyPlan {
    kind: PolicyKind,
    /// Per task: dense type indices in dispatch preference order.
    eligible: Vec<Vec<usize>>,
    /// HBFS depth or DDE position; unused by HFCFS.
    static_key: Vec<Ticks>,
    /// DDE start order; empty for the baselines.
    order: Vec<TaskId>,
}

impl PolicyPlan {
    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn eligible(&self, t: TaskId) -> &[usize] {
        &self.eligible[t]
    }

    pub fn order(&self) -> &[TaskId] {
        &self.order
    }

    /// Position of `t` in the DDE order.
    pub fn position(&self, t: TaskId) -> usize {
        self.static_key[t] as usize
    }

    /// Sort key: smaller means higher priority. `first_ready` holds, per
    /// task, the cycle it first became dispatch-eligible.
    pub fn key(&self, t: TaskId, first_ready: &[Ticks]) -> (Ticks, TaskId) {
        match self.kind {
            PolicyKind::Hfcfs => (first_ready[t], t),
            PolicyKind::Hbfs | PolicyKind::Dde => (self.static_key[t], t),
        }
    }

    /// `a` has strictly higher priority than `b`.
    pub fn higher(&self, a: TaskId, b: TaskId, first_ready: &[Ticks]) -> bool {
        self.key(a, first_ready) < self.key(b, first_ready)
    }
}
