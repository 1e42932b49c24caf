//! Response-time analysis: all-WCETs estimates, Monte-Carlo campaigns,
//! state-dominance checks and brute-force grid oracles.

use num::rational::Ratio;
use num::{BigInt, BigRational, One, Zero};
use rayon::prelude::*;

use crate::constraint::ExecutionConstraint;
use crate::error::{Error, Result};
use crate::model::{Interval, System};
use crate::policy::{dde_policy, PolicyPlan, SchedulerPolicy};
use crate::progress::{cmp_progress, cmp_state, Engine, Quantile, ScheduleTrace, TimeSource, DEFAULT_TICK_LIMIT};
use crate::rng;
use crate::{TaskId, Ticks};

/// One all-WCETs run. For DDE this is the WCRT; for the baselines it is
/// the conventional estimate, which timing anomalies can exceed.
pub fn wcrt_all_wcets(sys: &System, policy: &SchedulerPolicy) -> Result<(Ticks, ScheduleTrace)> {
    let plan = policy.bind(sys)?;
    let mut e = Engine::new(sys, &plan);
    e.run(&TimeSource::AllWcet, DEFAULT_TICK_LIMIT)?;
    let trace = e.trace()?;
    Ok((trace.response_time(sys), trace))
}

/// The same system with every task's intervals on an architecture replaced
/// by those of its slowest (largest-WCET) eligible type on that architecture.
pub fn conservative_system(sys: &System) -> Result<System> {
    let dag = sys.dag();
    sys.with_intervals(|t, ty, iv| {
        dag.nodes[t]
            .intervals
            .iter()
            .filter(|(other, _)| other.arch == ty.arch)
            .map(|(_, other)| *other)
            .max_by_key(|other| (other.wcet, other.bcet))
            .unwrap_or(iv)
    })
}

pub fn conservative_wcrt(sys: &System, policy: &SchedulerPolicy) -> Result<Ticks> {
    wcrt_all_wcets(&conservative_system(sys)?, policy).map(|(w, _)| w)
}

pub type Rational = Ratio<u128>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CampaignMetrics {
    /// All-WCETs response time under the same policy.
    pub wcrt: Ticks,
    /// Largest observed online response time.
    pub mswcrt: Ticks,
    /// Smallest observed online response time.
    pub msbcrt: Ticks,
    pub avrt: Rational,
    /// `(mswcrt - msbcrt) / mswcrt`, or 0 when `mswcrt` is 0.
    pub jitter: Rational,
    pub n_runs: u64,
    /// Some online run took strictly longer than the all-WCETs run.
    pub ta_detected: bool,
}

/// Response time of each seeded run, in run-index order. Run `i` draws
/// every execution time uniformly from its interval with a seed derived
/// from `(seed, i)`. `checked` verifies the model invariants on every cycle.
pub fn campaign_response_times(sys: &System, plan: &PolicyPlan, n_runs: u64, seed: u64, checked: bool) -> Result<Vec<Ticks>> {
    (0..n_runs)
        .into_par_iter()
        .map_init(
            || Engine::new(sys, plan).checked(checked),
            |e, i| {
                let ts = TimeSource::SeededUniform(rng::stream(seed, rng::LABEL_MC_RUN, i));
                e.run_rt(&ts)
            },
        )
        .collect()
}

pub fn monte_carlo_campaign(sys: &System, policy: &SchedulerPolicy, n_runs: u64, seed: u64) -> Result<CampaignMetrics> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("a campaign needs at least one run".into()));
    }
    let plan = policy.bind(sys)?;
    let wcrt = Engine::new(sys, &plan).run_rt(&TimeSource::AllWcet)?;
    let rts = campaign_response_times(sys, &plan, n_runs, seed, cfg!(debug_assertions))?;
    Ok(metrics(wcrt, &rts))
}

/// Aggregates response times against an all-WCETs reference.
pub fn metrics(wcrt: Ticks, rts: &[Ticks]) -> CampaignMetrics {
    let mswcrt = rts.iter().copied().max().unwrap_or(0);
    let msbcrt = rts.iter().copied().min().unwrap_or(0);
    let sum: u128 = rts.iter().map(|&r| u128::from(r)).sum();
    let n = rts.len() as u128;
    let avrt = if n == 0 { Rational::zero() } else { Rational::new(sum, n) };
    let jitter = if mswcrt == 0 {
        Rational::zero()
    } else {
        Rational::new(u128::from(mswcrt - msbcrt), u128::from(mswcrt))
    };
    CampaignMetrics {
        wcrt,
        mswcrt,
        msbcrt,
        avrt,
        jitter,
        n_runs: rts.len() as u64,
        ta_detected: mswcrt > wcrt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    Dominated,
    /// First state (by elapsed cycles) where `task` is strictly further
    /// along in the all-WCETs run than in the assignment run.
    ViolationAt { tick: Ticks, task: TaskId },
}

/// Runs the all-WCETs and the given-assignment executions of a DDE system in
/// lockstep and checks that the all-WCETs state never leads in any task.
pub fn dominance_check(sys: &System, constraint: &ExecutionConstraint, assignment: &TimeSource) -> Result<Dominance> {
    dominance_check_policy(sys, &dde_policy(constraint.clone()), assignment)
}

/// Same lockstep comparison under any policy. Baselines may fail it.
pub fn dominance_check_policy(sys: &System, policy: &SchedulerPolicy, assignment: &TimeSource) -> Result<Dominance> {
    let plan = policy.bind(sys)?;
    let mut worst = Engine::new(sys, &plan);
    let mut other = Engine::new(sys, &plan);
    let wcet = TimeSource::AllWcet;
    loop {
        if let Some(v) = first_violation(&worst, &other)? {
            return Ok(v);
        }
        if worst.is_finished() && other.is_finished() {
            return Ok(Dominance::Dominated);
        }
        let moved = worst.step(&wcet)? + other.step(assignment)?;
        if let Some(v) = first_violation(&worst, &other)? {
            return Ok(v);
        }
        if moved == 0 {
            for e in [&worst, &other] {
                if !e.is_finished() && e.min_running_tick().is_none() {
                    return Err(Error::Stalled(e.state().elapsed));
                }
            }
            let k = idle(&worst).min(idle(&other));
            worst.skip(k)?;
            other.skip(k)?;
        }
        if worst.state().elapsed > DEFAULT_TICK_LIMIT {
            return Err(Error::TickLimit(DEFAULT_TICK_LIMIT));
        }
    }
}

fn idle(e: &Engine) -> Ticks {
    if e.is_finished() {
        Ticks::MAX
    } else {
        e.idle_span()
    }
}

fn first_violation(worst: &Engine, other: &Engine) -> Result<Option<Dominance>> {
    let (a, b) = (worst.state(), other.state());
    if cmp_state(a, b)?.is_le() {
        return Ok(None);
    }
    let task = a
        .progress
        .iter()
        .zip(&b.progress)
        .position(|(x, y)| cmp_progress(x, y).is_gt())
        .expect("a non-dominated state has a leading task");
    Ok(Some(Dominance::ViolationAt { tick: a.elapsed, task }))
}

/// Per-task sample positions inside each execution interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Grid {
    Endpoints,
    EndpointsMid,
    /// `k + 1` evenly spaced positions `0, 1/k, .., 1`.
    Uniform(u32),
    Custom(Vec<Quantile>),
}

impl Grid {
    pub fn quantiles(&self) -> Vec<Quantile> {
        match self {
            Grid::Endpoints => vec![Quantile::BCET, Quantile::WCET],
            Grid::EndpointsMid => vec![Quantile::BCET, Quantile::MID, Quantile::WCET],
            Grid::Uniform(k) => {
                let k = (*k).max(1);
                (0..=k).map(|num| Quantile { num, den: k }).collect()
            }
            Grid::Custom(qs) => qs.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub max_rt: Ticks,
    pub min_rt: Ticks,
    pub run_count: u64,
}

/// Distinct grid positions of each task, where two positions are the same if
/// they give identical durations on every type the policy may use.
pub fn oracle_samples(sys: &System, plan: &PolicyPlan, grid: &Grid) -> Vec<Vec<Quantile>> {
    let qs = grid.quantiles();
    (0..sys.len())
        .map(|t| {
            let intervals: Vec<Interval> = plan
                .eligible(t)
                .iter()
                .filter_map(|&r| sys.task(t).option(r))
                .map(|o| o.interval)
                .collect();
            let mut seen: Vec<Vec<Ticks>> = Vec::new();
            let mut out = Vec::new();
            for &q in &qs {
                let key: Vec<Ticks> = intervals.iter().map(|&iv| q.apply(iv)).collect();
                if !seen.contains(&key) {
                    seen.push(key);
                    out.push(q);
                }
            }
            out
        })
        .collect()
}

/// Runs every combination of per-task grid positions and returns the
/// extreme response times. Fails without running if the combination count
/// exceeds `budget`.
pub fn exhaustive_oracle(sys: &System, policy: &SchedulerPolicy, grid: &Grid, budget: u64) -> Result<OracleResult> {
    let plan = policy.bind(sys)?;
    let samples = oracle_samples(sys, &plan, grid);
    if samples.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("oracle grid has no positions".into()));
    }
    let needed = samples
        .iter()
        .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
        .unwrap_or(u128::MAX);
    if needed > u128::from(budget) {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let count = needed as u64;
    let (max_rt, min_rt) = (0..count)
        .into_par_iter()
        .map_init(
            || (Engine::new(sys, &plan), vec![Quantile::BCET; sys.len()]),
            |(e, qs), mut idx| {
                for (t, s) in samples.iter().enumerate() {
                    let base = s.len() as u64;
                    qs[t] = s[(idx % base) as usize];
                    idx /= base;
                }
                e.run_rt(&TimeSource::Quantiles(qs.clone())).map(|rt| (rt, rt))
            },
        )
        .try_reduce(|| (Ticks::MIN, Ticks::MAX), |a, b| Ok((a.0.max(b.0), a.1.min(b.1))))?;
    Ok(OracleResult { max_rt, min_rt, run_count: count })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioSummary {
    /// Mean of the per-system ratios.
    pub ara: BigRational,
    /// Smallest per-system ratio.
    pub sra: BigRational,
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Element-wise ratios `x[i] / y[i]`, summarized by mean and minimum.
pub fn ratio_summary(x: &[Rational], y: &[Rational]) -> Result<RatioSummary> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("no ratios to summarize".into()));
    }
    let mut sum = BigRational::zero();
    let mut sra: Option<BigRational> = None;
    for (a, b) in x.iter().zip(y) {
        if b.is_zero() {
            return Err(Error::InvalidArgument("zero denominator in ratio".into()));
        }
        let r = to_big(a) / to_big(b);
        sum += &r;
        if sra.as_ref().is_none_or(|s| r < *s) {
            sra = Some(r);
        }
    }
    let ara = sum / BigRational::from_integer(BigInt::from(x.len()));
    Ok(RatioSummary { ara, sra: sra.unwrap_or_else(BigRational::one) })
}
