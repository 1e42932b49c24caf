//! Searches small random systems for an HFCFS timing anomaly that beats both
//! the all-WCETs estimate and the conservative slowest-type estimate, and
//! writes the smallest one found as a JSON fixture.
//!
//! cargo run --release -p tasched-core --example ta_witness_search -- OUT.json [SEEDS]

use std::collections::BTreeMap;

use serde_json::json;
use tasched_core::analysis::{conservative_wcrt, oracle_samples, wcrt_all_wcets, Grid};
use tasched_core::io::{catalog_to_json, dag_to_json};
use tasched_core::progress::{Engine, TimeSource};
use tasched_core::{generate_dag, hfcfs_policy, resource_config, GenParams, System, Ticks};

fn worst_case(sys: &System) -> Option<(Ticks, BTreeMap<usize, Ticks>)> {
    let plan = hfcfs_policy().bind(sys).ok()?;
    let samples = oracle_samples(sys, &plan, &Grid::EndpointsMid);
    let count: u64 = samples.iter().map(|s| s.len() as u64).product();
    if count > 200_000 {
        return None;
    }
    let mut engine = Engine::new(sys, &plan);
    let mut best: Option<(Ticks, BTreeMap<usize, Ticks>)> = None;
    for mut idx in 0..count {
        let qs = samples
            .iter()
            .map(|s| {
                let q = s[(idx % s.len() as u64) as usize];
                idx /= s.len() as u64;
                q
            })
            .collect();
        let rt = engine.run_rt(&TimeSource::Quantiles(qs)).ok()?;
        if best.as_ref().is_none_or(|(b, _)| rt > *b) {
            let trace = engine.trace().ok()?;
            let durations = trace
                .entries
                .iter()
                .enumerate()
                .filter_map(|(t, e)| e.alloc_es_time.map(|d| (t, d)))
                .collect();
            best = Some((rt, durations));
        }
    }
    best
}

fn main() {
    let mut args = std::env::args().skip(1);
    let out = args.next().expect("usage: ta_witness_search OUT.json [SEEDS]");
    let seeds: u64 = args.next().map_or(20_000, |s| s.parse().expect("seed count"));
    let catalog = resource_config(1).expect("config 1");
    let mut found: Option<(usize, serde_json::Value)> = None;
    for seed in 0..seeds {
        let params = GenParams { n_min: 4, n_max: 7, p: 0.3, bcet_min: 1, bcet_max: 10, seed, ..GenParams::default() };
        let dag = generate_dag(&params).expect("valid params");
        let Ok(sys) = System::new(&dag, &catalog) else { continue };
        let Ok((wcrt, _)) = wcrt_all_wcets(&sys, &hfcfs_policy()) else { continue };
        let Ok(conservative) = conservative_wcrt(&sys, &hfcfs_policy()) else { continue };
        let Some((max_rt, witness)) = worst_case(&sys) else { continue };
        if max_rt > wcrt && max_rt > conservative && found.as_ref().is_none_or(|(n, _)| dag.len() < *n) {
            println!("seed {seed}: {} nodes, wcrt {wcrt}, conservative {conservative}, oracle max {max_rt}", dag.len());
            let fixture = json!({
                "seed": seed,
                "dag": serde_json::from_str::<serde_json::Value>(&dag_to_json(&dag)).expect("json"),
                "catalog": serde_json::from_str::<serde_json::Value>(&catalog_to_json(&catalog)).expect("json"),
                "grid": "endpoints+mid",
                "hfcfs_wcrt": wcrt,
                "conservative_wcrt": conservative,
                "oracle_max_rt": max_rt,
                "witness": witness.iter().map(|(t, d)| (t.to_string(), *d)).collect::<BTreeMap<_, _>>(),
            });
            found = Some((dag.len(), fixture));
        }
    }
    let (_, fixture) = found.expect("no witness found; raise SEEDS");
    std::fs::write(&out, serde_json::to_string_pretty(&fixture).expect("json")).expect("write fixture");
}
