//! Non-preemptive dynamic scheduling of multi-typed DAG task sets on
//! heterogeneous processing units.
//!
//! The crate is organised around a tick-driven execution-progress model
//! ([`progress`]): every task carries a stage (`Block`, `Ready`, `Exec`,
//! `Finish`) and a remaining tick count, and one application of the
//! transition function advances the whole system by one scheduling cycle.
//! On top of it sit
//!
//! * [`model`]: the DAG / processing-unit catalog data model and validation,
//! * [`policy`]: the HFCFS and HBFS baselines and the anomaly-free
//!   deterministic dynamic execution (DDE) policy,
//! * [`constraint`]: derivation of DDE execution constraints from traces and
//!   from the HACPA list-scheduling heuristic,
//! * [`analysis`]: WCRT estimation, Monte-Carlo campaigns, dominance checks
//!   and exhaustive oracles,
//! * [`gen`]: seeded G(n, p) multi-typed DAG generation.

pub mod analysis;
pub mod constraint;
pub mod error;
pub mod gen;
pub mod io;
pub mod model;
pub mod policy;
pub mod progress;
pub mod rng;

/// Simulated time, in scheduling cycles.
pub type Ticks = u64;

/// Dense task identifier (index into the node list of a DAG).
pub type TaskId = usize;

pub use analysis::{
    conservative_wcrt, dominance_check, dominance_check_policy, exhaustive_oracle,
    monte_carlo_campaign, ratio_summary, wcrt_all_wcets, CampaignMetrics, Dominance, Grid,
    OracleResult, RatioSummary,
};
pub use constraint::{
    extract_constraint, hacpa_rank, hacpa_schedule, validate_constraint, ExecutionConstraint,
    HacpaSchedule,
};
pub use error::{Error, Result};
pub use gen::{generate_dag, resource_config, EligibilityMode, GenParams};
pub use model::{
    add_virtual_endpoints, bfs_depth, validate_dag, Interval, MultiTypedDag, ProcCatalog,
    ProcTypeId, System, TaskNode, ValidationReport,
};
pub use policy::{dde_policy, hbfs_policy, hfcfs_policy, PolicyKind, PolicyPlan, SchedulerPolicy};
pub use progress::{
    cmp_progress, cmp_state, run_to_completion, DepSemantics, Engine, Quantile, RunOutcome,
    ScheduleTrace, Stage, StateOrder, SystemState, TaskProgress, TimeSource, TraceEntry, UnitRef,
};
