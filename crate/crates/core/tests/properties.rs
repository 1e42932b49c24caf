use std::collections::BTreeMap;

use num::rational::Ratio;
use proptest::prelude::*;
use tasched_core::analysis::{exhaustive_oracle, Grid};
use tasched_core::io::{dag_from_json, dag_to_json};
use tasched_core::progress::{Engine, Stage, TimeSource};
use tasched_core::*;

fn system(seed: u64, n_max: usize, p: f64, config: u32) -> System {
    let dag = generate_dag(&GenParams { n_min: 3, n_max, p, bcet_min: 1, bcet_max: 40, seed, ..GenParams::default() }).unwrap();
    System::new(&dag, &resource_config(config).unwrap()).unwrap()
}

fn arb_system() -> impl Strategy<Value = System> {
    (any::<u64>(), 4usize..14, prop::sample::select(vec![0.1, 0.3, 0.5, 0.8]), 1u32..=3)
        .prop_map(|(seed, n, p, k)| system(seed, n, p, k))
}

/// Durations drawn from the interval of each task's constrained type.
fn assignment(sys: &System, c: &ExecutionConstraint, seed: u64) -> BTreeMap<TaskId, Ticks> {
    (0..sys.len())
        .map(|t| {
            let ty = sys.type_index(&c.alloc[&t]).unwrap();
            let iv = sys.task(t).option(ty).unwrap().interval;
            let x = tasched_core::rng::stream(seed, "test-assignment", t as u64);
            (t, tasched_core::rng::uniform_inclusive(x, iv.bcet, iv.wcet))
        })
        .collect()
}

/// Replayed `(start, finish, (type, instance))` per task.
type Replay = Vec<(Ticks, Ticks, Option<(usize, usize)>)>;

/// In-order list replay of a DDE constraint: each task starts at the latest
/// of its order predecessor's start, its DAG predecessors' finishes and the
/// earliest free instance of its type, taking the lowest free instance.
/// Zero-time tasks ignore the order and instances.
fn dde_replay(sys: &System, c: &ExecutionConstraint, durations: &BTreeMap<TaskId, Ticks>) -> Replay {
    let mut free: Vec<Vec<Ticks>> = (0..sys.types().len()).map(|r| vec![0; sys.res_num(r)]).collect();
    let mut out = vec![(0, 0, None); sys.len()];
    let mut gate = 1;
    for &t in &c.order {
        let ready = sys.task(t).preds.iter().map(|&u| out[u].1).max().unwrap_or(1);
        if sys.task(t).is_virtual {
            out[t] = (ready, ready, None);
            continue;
        }
        let r = sys.type_index(&c.alloc[&t]).unwrap();
        let earliest = *free[r].iter().min().unwrap();
        let start = gate.max(ready).max(earliest);
        let index = free[r].iter().position(|&f| f <= start).unwrap();
        let finish = start + durations[&t].max(1);
        free[r][index] = finish;
        out[t] = (start, finish, Some((r, index)));
        gate = start;
    }
    out
}

fn naive_rank(sys: &System, t: TaskId) -> Ratio<u128> {
    let info = sys.task(t);
    let sum: u128 = info.options.iter().map(|o| o.interval.wcet as u128).sum();
    let own = Ratio::new(sum, info.options.len() as u128);
    own + info.succs.iter().map(|&s| naive_rank(sys, s)).max().unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn every_policy_runs_checked_to_completion(sys in arb_system(), seed in any::<u64>()) {
        let trace_c = extract_constraint(&sys, &wcrt_all_wcets(&sys, &hfcfs_policy()).unwrap().1).unwrap();
        let hacpa_c = hacpa_schedule(&sys).unwrap().constraint;
        for policy in [hfcfs_policy(), hbfs_policy(), dde_policy(trace_c), dde_policy(hacpa_c)] {
            let plan = policy.bind(&sys).unwrap();
            for ts in [TimeSource::AllWcet, TimeSource::AllBcet, TimeSource::SeededUniform(seed)] {
                let mut e = Engine::new(&sys, &plan).checked(true);
                e.run(&ts, 1 << 30).unwrap();
                let trace = e.trace().unwrap();
                for (t, entry) in trace.entries.iter().enumerate() {
                    prop_assert!(entry.start <= entry.finish);
                    for &u in &sys.task(t).preds {
                        prop_assert!(trace.entries[u].finish <= entry.start);
                    }
                    if let Some(unit) = entry.unit {
                        prop_assert!(sys.task(t).option(unit.ty).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn dde_matches_list_replay(sys in arb_system(), seed in any::<u64>()) {
        for c in [
            extract_constraint(&sys, &wcrt_all_wcets(&sys, &hbfs_policy()).unwrap().1).unwrap(),
            hacpa_schedule(&sys).unwrap().constraint,
        ] {
            let durations = assignment(&sys, &c, seed);
            let plan = dde_policy(c.clone()).bind(&sys).unwrap();
            let out = run_to_completion(&sys, &plan, &TimeSource::Fixed(durations.clone()), 1 << 30).unwrap();
            let expected = dde_replay(&sys, &c, &durations);
            for (t, e) in out.trace.entries.iter().enumerate() {
                prop_assert_eq!((e.start, e.finish, e.unit.map(|u| (u.ty, u.index))), expected[t], "task {}", t);
            }
            // start order and resource conformance
            for w in c.order.windows(2) {
                prop_assert!(out.trace.entries[w[0]].start <= out.trace.entries[w[1]].start || sys.task(w[1]).is_virtual || sys.task(w[0]).is_virtual);
            }
            for (t, e) in out.trace.entries.iter().enumerate() {
                if let Some(u) = e.unit {
                    prop_assert_eq!(&sys.types()[u.ty], &c.alloc[&t]);
                }
            }
        }
    }

    #[test]
    fn dde_assignments_are_dominated(sys in arb_system(), seed in any::<u64>()) {
        let c = hacpa_schedule(&sys).unwrap().constraint;
        let (wcrt, _) = wcrt_all_wcets(&sys, &dde_policy(c.clone())).unwrap();
        let durations = assignment(&sys, &c, seed);
        prop_assert_eq!(dominance_check(&sys, &c, &TimeSource::Fixed(durations.clone())).unwrap(), Dominance::Dominated);
        let plan = dde_policy(c).bind(&sys).unwrap();
        prop_assert!(run_to_completion(&sys, &plan, &TimeSource::Fixed(durations), 1 << 30).unwrap().response_time <= wcrt);
    }

    #[test]
    fn extracted_constraints_are_valid(sys in arb_system()) {
        for policy in [hfcfs_policy(), hbfs_policy()] {
            let (_, trace) = wcrt_all_wcets(&sys, &policy).unwrap();
            let c = extract_constraint(&sys, &trace).unwrap();
            prop_assert!(validate_constraint(&c, &sys).is_empty());
        }
    }

    #[test]
    fn hacpa_ranks_follow_reverse_topology(sys in arb_system()) {
        let rank = hacpa_rank(&sys);
        for (t, r) in rank.iter().enumerate() {
            prop_assert_eq!(*r, naive_rank(&sys, t));
        }
        for &(u, v) in &sys.dag().edges {
            if !sys.task(u).is_virtual {
                prop_assert!(rank[u] > rank[v]);
            }
        }
    }

    #[test]
    fn hacpa_list_schedule_bounds_its_dde_replay(sys in arb_system()) {
        let h = hacpa_schedule(&sys).unwrap();
        prop_assert!(validate_constraint(&h.constraint, &sys).is_empty());
        let (dde, _) = wcrt_all_wcets(&sys, &dde_policy(h.constraint)).unwrap();
        // the list schedule counts from 0, the simulation from the first dispatch
        prop_assert!(dde <= h.wcrt);
    }

    #[test]
    fn normalization_is_idempotent_and_json_round_trips(seed in any::<u64>(), p in 0.0f64..1.0) {
        let dag = generate_dag(&GenParams { p, seed, ..GenParams::default() }).unwrap();
        prop_assert_eq!(add_virtual_endpoints(&dag).unwrap(), dag.clone());
        prop_assert_eq!(dag_from_json(&dag_to_json(&dag), "mem").unwrap(), dag);
    }

    #[test]
    fn depth_is_shortest_path(sys in arb_system()) {
        for &(u, v) in &sys.dag().edges {
            prop_assert!(sys.depth(v) <= sys.depth(u) + 1);
        }
        for t in 0..sys.len() {
            if t != sys.src() {
                prop_assert!(sys.task(t).preds.iter().any(|&u| sys.depth(u) + 1 == sys.depth(t)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn campaigns_are_deterministic(seed in any::<u64>()) {
        let sys = system(seed, 10, 0.3, 2);
        let a = monte_carlo_campaign(&sys, &hfcfs_policy(), 200, seed).unwrap();
        let b = monte_carlo_campaign(&sys, &hfcfs_policy(), 200, seed).unwrap();
        prop_assert!(a.msbcrt <= a.mswcrt);
        prop_assert!(Ratio::from_integer(a.msbcrt as u128) <= a.avrt && a.avrt <= Ratio::from_integer(a.mswcrt as u128));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn finer_grids_never_narrow_the_range(seed in any::<u64>()) {
        let sys = system(seed, 4, 0.3, 1);
        for policy in [hfcfs_policy(), hbfs_policy()] {
            let coarse = exhaustive_oracle(&sys, &policy, &Grid::Endpoints, 100_000).unwrap();
            let fine = exhaustive_oracle(&sys, &policy, &Grid::EndpointsMid, 100_000).unwrap();
            let finer = exhaustive_oracle(&sys, &policy, &Grid::Uniform(4), 1_000_000).unwrap();
            prop_assert!(coarse.max_rt <= fine.max_rt && fine.max_rt <= finer.max_rt);
            prop_assert!(coarse.min_rt >= fine.min_rt && fine.min_rt >= finer.min_rt);
        }
    }
}

#[test]
fn dde_delays_a_ready_task_until_its_order_predecessor_starts() {
    // 0 -> {1, 2}; task 2 is ready with task 1 but ordered after a long
    // chain head 1 -> 3, and may only use GPU.0
    use tasched_core::model::Interval;
    let cpu = ProcTypeId::new("CPU", 0);
    let gpu = ProcTypeId::new("GPU", 0);
    let n = |id, ivs: &[(ProcTypeId, Ticks)]| TaskNode::new(id, ivs.iter().map(|(t, w)| (t.clone(), Interval::new(*w, *w))));
    let dag = MultiTypedDag {
        nodes: vec![
            n(0, &[(cpu.clone(), 2)]),
            n(1, &[(cpu.clone(), 5)]),
            n(2, &[(cpu.clone(), 1), (gpu.clone(), 1)]),
            n(3, &[(cpu.clone(), 1), (gpu.clone(), 3)]),
            n(4, &[(cpu.clone(), 1)]),
        ],
        edges: vec![(0, 1), (0, 2), (1, 3), (2, 4), (3, 4)],
    };
    let sys = System::new(&dag, &ProcCatalog::new([(cpu.clone(), 1), (gpu.clone(), 2)]).unwrap()).unwrap();
    let c = ExecutionConstraint {
        order: vec![0, 1, 3, 2, 4],
        alloc: [(0, cpu.clone()), (1, cpu.clone()), (2, gpu.clone()), (3, gpu.clone()), (4, cpu.clone())].into(),
    };
    let out = run_to_completion(&sys, &dde_policy(c).bind(&sys).unwrap(), &TimeSource::AllWcet, 100).unwrap();
    let e = &out.trace.entries;
    // task 2 is dependency-free at tick 3 but waits for task 3 (starts at 8)
    assert_eq!(e[3].start, 8);
    assert_eq!(e[2].start, 8);
    // both on GPU.0 instances: the second takes the other free instance
    let (u2, u3) = (e[2].unit.unwrap(), e[3].unit.unwrap());
    assert_eq!((u2.ty, u3.ty), (sys.type_index(&gpu).unwrap(), sys.type_index(&gpu).unwrap()));
    assert_ne!(u2.index, u3.index);
    assert_eq!((e[4].finish, out.response_time), (12, 11));
}

#[test]
fn hfcfs_dispatches_to_the_faster_type() {
    use tasched_core::model::Interval;
    let cpu = ProcTypeId::new("CPU", 0);
    let gpu = ProcTypeId::new("GPU", 0);
    let dag = MultiTypedDag {
        nodes: vec![TaskNode::new(0, [(cpu.clone(), Interval::new(9, 9)), (gpu.clone(), Interval::new(4, 4))])],
        edges: vec![],
    };
    let sys = System::new(&dag, &ProcCatalog::new([(cpu, 1), (gpu.clone(), 1)]).unwrap()).unwrap();
    let out = run_to_completion(&sys, &hfcfs_policy().bind(&sys).unwrap(), &TimeSource::AllWcet, 100).unwrap();
    assert_eq!(out.trace.entries[0].unit.unwrap().ty, sys.type_index(&gpu).unwrap());
    assert_eq!(out.response_time, 4);
}

#[test]
fn finished_tasks_stay_finished() {
    let sys = system(3, 12, 0.3, 1);
    let plan = hbfs_policy().bind(&sys).unwrap();
    let mut e = Engine::new(&sys, &plan).checked(true);
    let mut finished = vec![false; sys.len()];
    while !e.is_finished() {
        e.step(&TimeSource::SeededUniform(5)).unwrap();
        for (t, p) in e.state().progress.iter().enumerate() {
            assert!(!finished[t] || p.stage == Stage::Finish);
            finished[t] = p.stage == Stage::Finish;
        }
    }
}
