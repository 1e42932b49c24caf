use crate::model::ValidationReport;
use crate::{TaskId, Ticks};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid DAG: {0}")]
    InvalidDag(ValidationReport),

    #[error("invalid execution constraint: {0}")]
    InvalidConstraint(ValidationReport),

    #[error("unknown task id {0}")]
    UnknownTask(TaskId),

    #[error("task {task}: duration {duration} outside [{bcet}, {wcet}] for the dispatched type")]
    DurationOutOfRange {
        task: TaskId,
        duration: Ticks,
        bcet: Ticks,
        wcet: Ticks,
    },

    #[error("task {0}: fixed time source has no duration for this task")]
    MissingDuration(TaskId),

    #[error("tick limit {0} exceeded before all tasks finished")]
    TickLimit(Ticks),

    #[error("no task can make progress at tick {0} (policy livelock)")]
    Stalled(Ticks),

    #[error("model invariant violated at tick {tick}: {what}")]
    InvariantViolation { tick: Ticks, what: String },

    #[error("incomplete trace: task {0} has no start/finish record")]
    IncompleteTrace(TaskId),

    #[error("oracle budget exceeded: {needed} runs needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
