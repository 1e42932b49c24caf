//! Execution-progress state machine.
//!
//! A system state maps every task to a stage and the ticks remaining in that
//! stage. One call to [`Engine::step`] is one scheduling cycle (`upd`): every
//! task whose transition predicate holds moves to its next stage, every other
//! task has its remaining time decremented.
//!
//! Timing convention: a task dispatched during cycle `n` appears in `Exec`
//! in state `n + 1` with `tick = d` (its drawn execution time, at least 1) and
//! appears in `Finish` in state `n + 1 + d`. Its trace interval is
//! `[n + 1, n + 1 + d)`. Dependency completion and instance release both look
//! one tick ahead (a task in `Exec` with `tick <= 1` is done by the next
//! state), so successors and the next user of an instance start in exactly
//! the state in which the predecessor shows up as `Finish`. Virtual tasks
//! take no time and no resources: they are done as soon as all their
//! predecessors are.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Interval, System, TypeOption};
use crate::policy::{PolicyKind, PolicyPlan};
use crate::rng;
use crate::{TaskId, Ticks};

/// One processing-unit instance: type index into [`System::types`] plus the
/// instance index within that type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitRef {
    pub ty: usize,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Block,
    Ready,
    Exec(UnitRef),
    Finish,
}

impl Stage {
    /// Position in the stage order `Block < Ready < Exec < Finish`. All
    /// `Exec` values share one rank regardless of the instance.
    pub fn rank(self) -> u8 {
        match self {
            Stage::Block => 0,
            Stage::Ready => 1,
            Stage::Exec(_) => 2,
            Stage::Finish => 3,
        }
    }

    pub fn is_exec(self) -> bool {
        matches!(self, Stage::Exec(_))
    }

    /// Started means `Exec` or later.
    pub fn has_started(self) -> bool {
        self.rank() >= 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskProgress {
    pub stage: Stage,
    /// Remaining ticks in the current stage; always 0 outside `Exec`.
    pub tick: Ticks,
    /// Execution time drawn when the task entered `Exec`.
    pub alloc_es_time: Option<Ticks>,
}

impl TaskProgress {
    pub const BLOCK: TaskProgress = TaskProgress {
        stage: Stage::Block,
        tick: 0,
        alloc_es_time: None,
    };

    pub fn new(stage: Stage, tick: Ticks) -> Self {
        Self {
            stage,
            tick,
            alloc_es_time: stage.is_exec().then_some(tick),
        }
    }
}

/// Total order on task progress: a later stage is more progress; within a
/// stage, fewer remaining ticks is more progress.
pub fn cmp_progress(a: &TaskProgress, b: &TaskProgress) -> Ordering {
    a.stage.rank().cmp(&b.stage.rank()).then(b.tick.cmp(&a.tick))
}

/// Result of comparing two system states under the product order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateOrder {
    Equal,
    /// Every task is at most as far in the first state, and at least one is
    /// strictly behind.
    LessOrEqual,
    GreaterOrEqual,
    Incomparable,
}

impl StateOrder {
    /// The first state is dominated by (`⊑`) the second.
    pub fn is_le(self) -> bool {
        matches!(self, StateOrder::Equal | StateOrder::LessOrEqual)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemState {
    pub progress: Vec<TaskProgress>,
    /// Number of cycles applied since the initial state.
    pub elapsed: Ticks,
}

impl SystemState {
    /// Source `Ready`, everything else `Block`.
    pub fn initial(sys: &System) -> Self {
        let mut progress = vec![TaskProgress::BLOCK; sys.len()];
        progress[sys.src()].stage = Stage::Ready;
        Self { progress, elapsed: 0 }
    }

    pub fn stage(&self, t: TaskId) -> Stage {
        self.progress[t].stage
    }

    pub fn all_finished(&self) -> bool {
        self.progress.iter().all(|p| p.stage == Stage::Finish)
    }
}

pub fn cmp_state(a: &SystemState, b: &SystemState) -> Result<StateOrder> {
    if a.progress.len() != b.progress.len() {
        return Err(Error::InvalidArgument(format!(
            "states cover different task sets ({} vs {} tasks)",
            a.progress.len(),
            b.progress.len()
        )));
    }
    Ok(fold_order(a.progress.iter().zip(&b.progress).map(|(x, y)| cmp_progress(x, y))))
}

fn fold_order(it: impl Iterator<Item = Ordering>) -> StateOrder {
    let (mut less, mut greater) = (false, false);
    for o in it {
        match o {
            Ordering::Less => less = true,
            Ordering::Greater => greater = true,
            Ordering::Equal => {}
        }
    }
    match (less, greater) {
        (false, false) => StateOrder::Equal,
        (true, false) => StateOrder::LessOrEqual,
        (false, true) => StateOrder::GreaterOrEqual,
        (true, true) => StateOrder::Incomparable,
    }
}

/// A point inside an execution-time interval:
/// `bcet + floor((wcet - bcet) * num / den)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Quantile {
    pub num: u32,
    pub den: u32,
}

impl Quantile {
    pub const BCET: Quantile = Quantile { num: 0, den: 1 };
    pub const MID: Quantile = Quantile { num: 1, den: 2 };
    pub const WCET: Quantile = Quantile { num: 1, den: 1 };

    pub fn apply(self, iv: Interval) -> Ticks {
        let span = u128::from(iv.wcet - iv.bcet);
        iv.bcet + (span * u128::from(self.num) / u128::from(self.den)) as Ticks
    }
}

/// Where execution times come from when a task enters `Exec`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimeSource {
    AllWcet,
    AllBcet,
    /// Explicit durations; each must lie in the interval of the type the
    /// task is dispatched to.
    Fixed(BTreeMap<TaskId, Ticks>),
    /// Uniform integer draw from the dispatched type's interval, keyed by
    /// `(seed, task)` so the draw does not depend on dispatch order.
    SeededUniform(u64),
    /// One interval position per task, resolved against the dispatched type.
    Quantiles(Vec<Quantile>),
}

const EXEC_TIME_KEY: u64 = rng::fnv1a64(rng::LABEL_EXEC_TIME);

impl TimeSource {
    pub fn duration(&self, task: TaskId, opt: &TypeOption) -> Result<Ticks> {
        let iv = opt.interval;
        match self {
            TimeSource::AllWcet => Ok(iv.wcet),
            TimeSource::AllBcet => Ok(iv.bcet),
            TimeSource::Fixed(map) => {
                let d = *map.get(&task).ok_or(Error::MissingDuration(task))?;
                if iv.contains(d) {
                    Ok(d)
                } else {
                    Err(Error::DurationOutOfRange {
                        task,
                        duration: d,
                        bcet: iv.bcet,
                        wcet: iv.wcet,
                    })
                }
            }
            TimeSource::SeededUniform(seed) => {
                let key = rng::mix64(seed ^ EXEC_TIME_KEY);
                let x = rng::mix64(key.wrapping_add(rng::GAMMA.wrapping_mul(task as u64 + 1)));
                Ok(rng::uniform_inclusive(x, iv.bcet, iv.wcet))
            }
            TimeSource::Quantiles(qs) => {
                let q = qs.get(task).ok_or(Error::MissingDuration(task))?;
                Ok(q.apply(iv))
            }
        }
    }
}

/// How a predecessor counts as complete for its successors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DepSemantics {
    /// Done when `Finish`, or `Exec` with `tick <= 1` (finishes this cycle).
    #[default]
    Lookahead,
    /// Done only once `Finish` is visible; inserts a one-tick gap at every
    /// precedence hand-off.
    PresentTense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Decision {
    Stay,
    ToReady,
    Dispatch(UnitRef),
    VirtualFinish,
}

/// Per-task record of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceEntry {
    pub start: Ticks,
    pub finish: Ticks,
    /// `None` for virtual tasks.
    pub unit: Option<UnitRef>,
    pub alloc_es_time: Option<Ticks>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScheduleTrace {
    pub entries: Vec<TraceEntry>,
}

impl ScheduleTrace {
    pub fn response_time(&self, sys: &System) -> Ticks {
        self.entries[sys.sink()].finish - self.entries[sys.src()].start
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: ScheduleTrace,
    pub response_time: Ticks,
    pub elapsed: Ticks,
}

/// Default guard against livelocked policies.
pub const DEFAULT_TICK_LIMIT: Ticks = 1 << 40;

/// Reusable simulator for one system and policy.
pub struct Engine<'a> {
    sys: &'a System,
    plan: &'a PolicyPlan,
    semantics: DepSemantics,
    checked: bool,
    state: SystemState,
    first_ready: Vec<Ticks>,
    start: Vec<Ticks>,
    finish: Vec<Ticks>,
    unit: Vec<Option<UnitRef>>,
    holders: Vec<Vec<Option<TaskId>>>,
    running: Vec<TaskId>,
    unfinished: usize,
    cursor: usize,
    // per-cycle scratch
    analyzed_at: Option<Ticks>,
    done_next: Vec<bool>,
    contenders: Vec<TaskId>,
    decision: Vec<Decision>,
    res_able: Vec<bool>,
    started_now: Vec<bool>,
    still: Vec<usize>,
    hi: Vec<usize>,
    taken: Vec<Vec<bool>>,
    prev: Vec<TaskProgress>,
    occupancy: Vec<usize>,
}

const UNSET: Ticks = Ticks::MAX;

impl<'a> Engine<'a> {
    pub fn new(sys: &'a System, plan: &'a PolicyPlan) -> Self {
        let n = sys.len();
        let types = sys.types().len();
        let mut e = Self {
            sys,
            plan,
            semantics: DepSemantics::default(),
            checked: cfg!(debug_assertions),
            state: SystemState::initial(sys),
            first_ready: vec![UNSET; n],
            start: vec![UNSET; n],
            finish: vec![UNSET; n],
            unit: vec![None; n],
            holders: (0..types).map(|r| vec![None; sys.res_num(r)]).collect(),
            running: Vec::with_capacity(n),
            unfinished: n,
            cursor: 0,
            analyzed_at: None,
            done_next: vec![false; n],
            contenders: Vec::with_capacity(n),
            decision: vec![Decision::Stay; n],
            res_able: vec![false; n],
            started_now: vec![false; n],
            still: vec![0; types],
            hi: vec![0; types],
            taken: (0..types).map(|r| vec![false; sys.res_num(r)]).collect(),
            prev: Vec::with_capacity(n),
            occupancy: vec![0; types],
        };
        e.reset();
        e
    }

    /// Starts from an arbitrary state. The HFCFS ready-tick memo starts empty,
    /// so every currently dispatch-eligible task counts as ready now.
    pub fn from_state(sys: &'a System, plan: &'a PolicyPlan, state: SystemState) -> Result<Self> {
        if state.progress.len() != sys.len() {
            return Err(Error::InvalidArgument("state does not match the system".into()));
        }
        let mut e = Self::new(sys, plan);
        e.load(state)?;
        Ok(e)
    }

    pub fn with_semantics(mut self, semantics: DepSemantics) -> Self {
        self.semantics = semantics;
        self
    }

    /// Verify capacity, tick and forward-progress invariants after every
    /// cycle, failing the run on the first violation. On by default in
    /// builds with debug assertions.
    pub fn checked(mut self, on: bool) -> Self {
        self.checked = on;
        self
    }

    pub fn reset(&mut self) {
        let init = SystemState::initial(self.sys);
        self.load(init).expect("initial state is valid");
    }

    fn load(&mut self, state: SystemState) -> Result<()> {
        for h in self.holders.iter_mut() {
            h.fill(None);
        }
        self.running.clear();
        self.first_ready.fill(UNSET);
        self.start.fill(UNSET);
        self.finish.fill(UNSET);
        self.unit.fill(None);
        self.unfinished = 0;
        for (t, p) in state.progress.iter().enumerate() {
            match p.stage {
                Stage::Exec(u) => {
                    let slot = self
                        .holders
                        .get_mut(u.ty)
                        .and_then(|h| h.get_mut(u.index))
                        .ok_or_else(|| Error::InvalidArgument(format!("task {t} runs on unknown unit")))?;
                    if slot.is_some() {
                        return Err(Error::InvalidArgument(format!("two tasks share unit {u:?}")));
                    }
                    *slot = Some(t);
                    self.unit[t] = Some(u);
                    self.running.push(t);
                    self.unfinished += 1;
                }
                Stage::Finish => {}
                _ => self.unfinished += 1,
            }
        }
        self.state = state;
        self.analyzed_at = None;
        self.prev.clear();
        self.cursor = 0;
        self.advance_cursor();
        Ok(())
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn system(&self) -> &System {
        self.sys
    }

    pub fn is_finished(&self) -> bool {
        self.unfinished == 0
    }

    fn advance_cursor(&mut self) {
        let order = self.plan.order();
        while self.cursor < order.len() && self.state.progress[order[self.cursor]].stage.has_started() {
            self.cursor += 1;
        }
    }

    fn pred_done(&self, t: TaskId) -> bool {
        self.sys.task(t).preds.iter().all(|&u| self.done_next[u])
    }

    /// Evaluates every transition predicate against the current state.
    fn analyze(&mut self) {
        let now = self.state.elapsed;
        if self.analyzed_at == Some(now) {
            return;
        }
        let sys = self.sys;
        let lookahead = self.semantics == DepSemantics::Lookahead;
        for &u in sys.topo() {
            let p = &self.state.progress[u];
            self.done_next[u] = match p.stage {
                Stage::Finish => true,
                Stage::Exec(_) => lookahead && p.tick <= 1,
                Stage::Block | Stage::Ready => sys.task(u).is_virtual && self.pred_done(u),
            };
        }

        self.contenders.clear();
        for t in 0..sys.len() {
            self.decision[t] = Decision::Stay;
            self.res_able[t] = false;
            self.started_now[t] = false;
            let stage = self.state.progress[t].stage;
            if matches!(stage, Stage::Block | Stage::Ready) && self.pred_done(t) {
                self.contenders.push(t);
                if self.first_ready[t] == UNSET {
                    self.first_ready[t] = now;
                }
            }
        }
        let plan = self.plan;
        let first_ready = &self.first_ready;
        self.contenders.sort_unstable_by_key(|&t| plan.key(t, first_ready));

        self.still.fill(0);
        for (r, h) in self.holders.iter().enumerate() {
            for (i, slot) in h.iter().enumerate() {
                let busy = slot.is_some_and(|t| self.state.progress[t].tick > 1);
                self.taken[r][i] = busy;
                self.still[r] += usize::from(busy);
            }
        }
        self.hi.fill(0);

        let gated = plan.kind() == PolicyKind::Dde;
        let order = plan.order();
        let mut cursor = self.cursor;
        for ci in 0..self.contenders.len() {
            let t = self.contenders[ci];
            let is_block = self.state.progress[t].stage == Stage::Block;
            if sys.task(t).is_virtual {
                self.decision[t] = Decision::VirtualFinish;
                self.started_now[t] = true;
            } else if !gated || plan.position(t) == cursor {
                let elig = plan.eligible(t);
                let able = elig.iter().any(|&r| sys.res_num(r) > self.hi[r] + self.still[r]);
                for &r in elig {
                    self.hi[r] += 1;
                }
                self.res_able[t] = able;
                if able {
                    let unit = elig
                        .iter()
                        .find_map(|&r| {
                            self.taken[r].iter().position(|b| !b).map(|index| UnitRef { ty: r, index })
                        })
                        .expect("resAble guarantees a free eligible instance");
                    self.taken[unit.ty][unit.index] = true;
                    self.decision[t] = Decision::Dispatch(unit);
                    self.started_now[t] = true;
                } else if is_block {
                    self.decision[t] = Decision::ToReady;
                }
            } else if is_block {
                self.decision[t] = Decision::ToReady;
            }
            if gated {
                while cursor < order.len() {
                    let o = order[cursor];
                    if self.state.progress[o].stage.has_started() || self.started_now[o] {
                        cursor += 1;
                    } else {
                        break;
                    }
                }
            }
        }
        self.analyzed_at = Some(now);
    }

    /// All predecessors of `t` are complete (with the configured semantics).
    pub fn dep_comp(&mut self, t: TaskId) -> bool {
        self.analyze();
        self.pred_done(t)
    }

    /// Whether `t` has an eligible type with more instances than
    /// higher-priority contenders plus instances still busy next state.
    /// False for tasks that are not dispatch-eligible this cycle.
    pub fn res_able(&mut self, t: TaskId) -> bool {
        self.analyze();
        self.res_able[t]
    }

    /// Whether `t` leaves its current stage in this cycle (`Finish` maps to
    /// itself and always reports true).
    pub fn tran(&mut self, t: TaskId) -> bool {
        self.analyze();
        let p = self.state.progress[t];
        match p.stage {
            Stage::Finish => true,
            Stage::Exec(_) => p.tick <= 1,
            Stage::Block => self.pred_done(t),
            Stage::Ready => matches!(self.decision[t], Decision::Dispatch(_) | Decision::VirtualFinish),
        }
    }

    /// Priority order of the dispatch-eligible tasks this cycle.
    pub fn contenders(&mut self) -> &[TaskId] {
        self.analyze();
        &self.contenders
    }

    /// One scheduling cycle. Returns the number of tasks that changed stage.
    pub fn step(&mut self, ts: &TimeSource) -> Result<usize> {
        self.analyze();
        if self.checked {
            self.prev.clone_from(&self.state.progress);
        }
        let next = self.state.elapsed + 1;
        let mut transitions = 0;

        let mut i = 0;
        while i < self.running.len() {
            let t = self.running[i];
            let p = &mut self.state.progress[t];
            if p.tick <= 1 {
                if let Stage::Exec(u) = p.stage {
                    self.holders[u.ty][u.index] = None;
                }
                p.stage = Stage::Finish;
                p.tick = 0;
                self.finish[t] = next;
                self.unfinished -= 1;
                transitions += 1;
                self.running.swap_remove(i);
            } else {
                p.tick -= 1;
                i += 1;
            }
        }

        for ci in 0..self.contenders.len() {
            let t = self.contenders[ci];
            match self.decision[t] {
                Decision::Stay => {}
                Decision::ToReady => {
                    self.state.progress[t].stage = Stage::Ready;
                    transitions += 1;
                }
                Decision::VirtualFinish => {
                    self.state.progress[t] = TaskProgress {
                        stage: Stage::Finish,
                        tick: 0,
                        alloc_es_time: None,
                    };
                    self.start[t] = next;
                    self.finish[t] = next;
                    self.unfinished -= 1;
                    transitions += 1;
                }
                Decision::Dispatch(unit) => {
                    let opt = self
                        .sys
                        .task(t)
                        .option(unit.ty)
                        .expect("dispatch picks an eligible type");
                    let d = ts.duration(t, opt)?;
                    self.state.progress[t] = TaskProgress {
                        stage: Stage::Exec(unit),
                        tick: d.max(1),
                        alloc_es_time: Some(d),
                    };
                    self.holders[unit.ty][unit.index] = Some(t);
                    self.unit[t] = Some(unit);
                    self.running.push(t);
                    self.start[t] = next;
                    transitions += 1;
                }
            }
        }
        self.state.elapsed = next;
        self.analyzed_at = None;
        self.advance_cursor();
        if self.checked {
            self.check_invariants()?;
        }
        Ok(transitions)
    }

    /// Smallest remaining tick among running tasks.
    pub fn min_running_tick(&self) -> Option<Ticks> {
        self.running.iter().map(|&t| self.state.progress[t].tick).min()
    }

    /// Number of upcoming cycles guaranteed to change nothing but running
    /// ticks, given that the last cycle made no transitions.
    pub fn idle_span(&self) -> Ticks {
        self.min_running_tick().map_or(0, |m| m.saturating_sub(1))
    }

    /// Applies `k` transition-free cycles at once. Only valid for
    /// `k <= idle_span()` right after a cycle without transitions; a
    /// finished engine accepts any `k`.
    pub fn skip(&mut self, k: Ticks) -> Result<()> {
        if k == 0 {
            return Ok(());
        }
        if self.is_finished() {
            self.state.elapsed += k;
            return Ok(());
        }
        if k > self.idle_span() {
            return Err(Error::InvariantViolation {
                tick: self.state.elapsed,
                what: format!("skip of {k} cycles crosses a transition"),
            });
        }
        if self.checked {
            self.prev.clone_from(&self.state.progress);
        }
        for &t in &self.running {
            self.state.progress[t].tick -= k;
        }
        self.state.elapsed += k;
        self.analyzed_at = None;
        if self.checked {
            self.check_invariants()?;
        }
        Ok(())
    }

    /// Capacity, tick bounds, and strict progress relative to the state
    /// before the last cycle.
    fn check_invariants(&mut self) -> Result<()> {
        let tick = self.state.elapsed;
        let fail = |what: String| Err(Error::InvariantViolation { tick, what });
        self.occupancy.fill(0);
        for (t, p) in self.state.progress.iter().enumerate() {
            match p.stage {
                Stage::Exec(u) => {
                    if self.holders.get(u.ty).and_then(|h| h.get(u.index)) != Some(&Some(t)) {
                        return fail(format!("task {t} runs on {u:?} which it does not hold"));
                    }
                    self.occupancy[u.ty] += 1;
                    if p.tick == 0 || p.tick > p.alloc_es_time.unwrap_or(0).max(1) {
                        return fail(format!("task {t} has tick {} outside its allocation", p.tick));
                    }
                }
                _ if p.tick != 0 => return fail(format!("task {t} has nonzero tick outside Exec")),
                _ => {}
            }
        }
        for (r, &n) in self.occupancy.iter().enumerate() {
            if n > self.sys.res_num(r) {
                return fail(format!("type {} over capacity: {n} running", self.sys.types()[r]));
            }
        }
        if !self.prev.is_empty() && self.prev.iter().any(|p| p.stage != Stage::Finish) {
            let order = fold_order(self.prev.iter().zip(&self.state.progress).map(|(x, y)| cmp_progress(x, y)));
            if order != StateOrder::LessOrEqual {
                return fail(format!("state did not strictly advance ({order:?})"));
            }
        }
        Ok(())
    }

    /// Runs until every task is finished.
    pub fn run(&mut self, ts: &TimeSource, tick_limit: Ticks) -> Result<()> {
        while !self.is_finished() {
            let moved = self.step(ts)?;
            if moved == 0 && !self.is_finished() {
                if self.running.is_empty() {
                    return Err(Error::Stalled(self.state.elapsed));
                }
                self.skip(self.idle_span())?;
            }
            if self.state.elapsed > tick_limit {
                return Err(Error::TickLimit(tick_limit));
            }
        }
        Ok(())
    }

    /// Finish of the sink minus start of the source, once finished.
    pub fn response_time(&self) -> Option<Ticks> {
        let (src, sink) = (self.sys.src(), self.sys.sink());
        (self.finish[sink] != UNSET && self.start[src] != UNSET).then(|| self.finish[sink] - self.start[src])
    }

    /// Runs from the initial state and returns only the response time.
    pub fn run_rt(&mut self, ts: &TimeSource) -> Result<Ticks> {
        self.reset();
        self.run(ts, DEFAULT_TICK_LIMIT)?;
        Ok(self.response_time().expect("finished run"))
    }

    pub fn trace(&self) -> Result<ScheduleTrace> {
        let entries = (0..self.sys.len())
            .map(|t| {
                if self.start[t] == UNSET || self.finish[t] == UNSET {
                    return Err(Error::IncompleteTrace(t));
                }
                Ok(TraceEntry {
                    start: self.start[t],
                    finish: self.finish[t],
                    unit: self.unit[t],
                    alloc_es_time: self.state.progress[t].alloc_es_time,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ScheduleTrace { entries })
    }
}

/// Stepwise `upd` on a detached state (fresh HFCFS memo).
pub fn upd(sys: &System, plan: &PolicyPlan, state: &SystemState, ts: &TimeSource) -> Result<SystemState> {
    let mut e = Engine::from_state(sys, plan, state.clone())?;
    e.step(ts)?;
    Ok(e.state.clone())
}

/// Predecessor-completion predicate on a detached state.
pub fn dep_comp(sys: &System, plan: &PolicyPlan, state: &SystemState, t: TaskId, semantics: DepSemantics) -> Result<bool> {
    if t >= sys.len() {
        return Err(Error::UnknownTask(t));
    }
    let mut e = Engine::from_state(sys, plan, state.clone())?.with_semantics(semantics);
    Ok(e.dep_comp(t))
}

pub fn run_to_completion(sys: &System, plan: &PolicyPlan, ts: &TimeSource, tick_limit: Ticks) -> Result<RunOutcome> {
    let mut e = Engine::new(sys, plan);
    e.run(ts, tick_limit)?;
    let trace = e.trace()?;
    Ok(RunOutcome {
        response_time: trace.response_time(sys),
        trace,
        elapsed: e.state.elapsed,
    })
}
