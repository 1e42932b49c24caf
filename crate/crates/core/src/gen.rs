//! Seeded G(n, p) generation of multi-typed DAGs and the three standard
//! resource configurations (1, 2 or 4 instances of CPU.0, CPU.1, GPU.0,
//! GPU.1).
//!
//! Draw order for one DAG, all from a ChaCha8 stream keyed by the seed:
//! node count, node permutation, one Bernoulli(p) per ordered pair, then per
//! node in id order the wide/narrow flag, the eligible subset (subset mode
//! only), and per eligible type in type-id order `bcet` and the multiplier.
//! Multipliers are integer percentages, so `wcet = round(m * bcet / 100)`
//! needs no floating point.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{add_virtual_endpoints, Interval, MultiTypedDag, ProcCatalog, ProcTypeId, TaskNode};
use crate::rng;

/// How non-endpoint tasks choose their eligible types.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EligibilityMode {
    /// Every type in the generator's catalog.
    #[default]
    All,
    /// A uniformly drawn non-empty subset of the types.
    RandomSubset,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    /// Inclusive node-count range.
    pub n_min: usize,
    pub n_max: usize,
    /// Edge probability for each ordered node pair.
    pub p: f64,
    /// Inclusive range for `bcet`.
    pub bcet_min: u64,
    pub bcet_max: u64,
    /// Fraction of nodes drawing their WCET/BCET multiplier from the wide
    /// range.
    pub wide_ratio: f64,
    /// Multiplier ranges in percent, inclusive.
    pub wide_pct: (u64, u64),
    pub narrow_pct: (u64, u64),
    pub eligibility: EligibilityMode,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_min: 10,
            n_max: 40,
            p: 0.1,
            bcet_min: 1,
            bcet_max: 1000,
            wide_ratio: 0.8,
            wide_pct: (1000, 3000),
            narrow_pct: (100, 120),
            eligibility: EligibilityMode::All,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad("node range must satisfy 1 <= min <= max");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("edge probability must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.wide_ratio) {
            return bad("wide ratio must lie in [0, 1]");
        }
        if self.bcet_min == 0 || self.bcet_min > self.bcet_max {
            return bad("bcet range must satisfy 1 <= min <= max");
        }
        for (lo, hi) in [self.wide_pct, self.narrow_pct] {
            if lo < 100 || lo > hi {
                return bad("multiplier ranges must satisfy 100 <= min <= max");
            }
        }
        Ok(())
    }
}

pub fn gen_types() -> Vec<ProcTypeId> {
    vec![
        ProcTypeId::new("CPU", 0),
        ProcTypeId::new("CPU", 1),
        ProcTypeId::new("GPU", 0),
        ProcTypeId::new("GPU", 1),
    ]
}

/// Configuration `k` in 1..=3: 1, 2 or 4 instances of each generator type.
pub fn resource_config(k: u32) -> Result<ProcCatalog> {
    let count = match k {
        1 => 1,
        2 => 2,
        3 => 4,
        _ => return Err(Error::InvalidArgument(format!("resource config must be 1, 2 or 3, got {k}"))),
    };
    ProcCatalog::new(gen_types().into_iter().map(|t| (t, count)))
}

/// One DAG, with virtual endpoints added when there are several real
/// sources or sinks. Real sources and sinks run on CPU types only.
pub fn generate_dag(params: &GenParams) -> Result<MultiTypedDag> {
    params.validate()?;
    let mut r = rng::chacha(params.seed, rng::LABEL_GEN, 0);
    let n = r.gen_range(params.n_min..=params.n_max);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut r);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(params.p) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    edges.sort_unstable();

    let mut has_pred = vec![false; n];
    let mut has_succ = vec![false; n];
    for &(u, v) in &edges {
        has_succ[u] = true;
        has_pred[v] = true;
    }
    let types = gen_types();
    let cpus: Vec<ProcTypeId> = types.iter().filter(|t| t.arch == "CPU").cloned().collect();
    let nodes = (0..n)
        .map(|id| {
            let wide = r.gen_bool(params.wide_ratio);
            let (lo, hi) = if wide { params.wide_pct } else { params.narrow_pct };
            let eligible: Vec<ProcTypeId> = if !has_pred[id] || !has_succ[id] {
                cpus.clone()
            } else {
                match params.eligibility {
                    EligibilityMode::All => types.clone(),
                    EligibilityMode::RandomSubset => {
                        let mask = r.gen_range(1u32..(1 << types.len()));
                        types.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| t.clone()).collect()
                    }
                }
            };
            let intervals = eligible.into_iter().map(|ty| {
                let bcet = r.gen_range(params.bcet_min..=params.bcet_max);
                let pct = r.gen_range(lo..=hi);
                (ty, Interval::new(bcet, (pct * bcet + 50) / 100))
            });
            TaskNode::new(id, intervals.collect::<Vec<_>>())
        })
        .collect();
    add_virtual_endpoints(&MultiTypedDag { nodes, edges })
}
