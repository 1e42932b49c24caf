//! `tasched`: generate multi-typed DAGs, schedule them under HFCFS, HBFS or
//! DDE, derive execution constraints, and run seeded campaigns and oracles.
//!
//! Exit codes: 0 on success, 1 when an input fails validation or a run
//! fails, 2 on usage errors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num::ToPrimitive;
use serde::Serialize;
use tasched_core::analysis::{monte_carlo_campaign, Rational};
use tasched_core::io::{self, ManifestRow, MetricsRow};
use tasched_core::progress::TimeSource;
use tasched_core::rng::stream;
use tasched_core::*;

#[derive(Parser)]
#[command(name = "tasched", version, about = "Timing-anomaly-free scheduling experiments on multi-typed DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format of reporting commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Multiply every input execution time by this factor at load time.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    tick_scale: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random DAGs plus a manifest.csv.
    Gen(GenArgs),
    /// All-WCETs response time, optionally the conservative estimate.
    Wcrt {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Also report the estimate with every task on its slowest type.
        #[arg(long)]
        conservative: bool,
        /// Write the all-WCETs trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Derive a DDE execution constraint.
    Constraints {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, value_enum)]
        method: Method,
        /// Baseline whose all-WCETs trace is frozen (`--method trace`).
        #[arg(long, value_enum, default_value_t = Baseline::Hfcfs)]
        baseline: Baseline,
        /// Constraint JSON destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo campaign with uniformly drawn execution times.
    Mc {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, env = "TASCHED_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive grid enumeration of execution times.
    Oracle {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, value_enum, default_value_t = GridArg::EndpointsMid)]
        grid: GridArg,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Lockstep check of one assignment against the all-WCETs run.
    Dominance {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// JSON object mapping task id to execution time.
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Aggregate metrics CSVs into ARA/SRA tables.
    Report {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Write per-DAG AVRT ratios for plotting.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 10)]
    n_min: usize,
    #[arg(long, default_value_t = 40)]
    n_max: usize,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Resource configuration 1, 2 or 3.
    #[arg(long, default_value_t = 2)]
    config: u32,
    #[arg(long, default_value_t = 0.8)]
    wide_ratio: f64,
    /// Draw a random non-empty subset of eligible types per task.
    #[arg(long)]
    subset: bool,
    #[arg(long, env = "TASCHED_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long)]
    dag: PathBuf,
    /// Catalog JSON; defaults to resource configuration `--config`.
    #[arg(long, conflicts_with = "config")]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    config: u32,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value_t = PolicyName::Hfcfs)]
    policy: PolicyName,
    /// DDE constraint: `hacpa`, `trace:hfcfs`, `trace:hbfs` or a JSON file.
    #[arg(long)]
    constraint: Option<String>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum PolicyName {
    Hfcfs,
    Hbfs,
    Dde,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Hfcfs,
    Hbfs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Trace,
    Hacpa,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Endpoints,
    #[value(name = "endpoints+mid")]
    EndpointsMid,
}

struct Loaded {
    dag_id: String,
    sys: System,
}

fn load(args: &SystemArgs, scale: u64) -> Result<Loaded> {
    let mut dag = io::read_dag(&args.dag)?;
    io::scale_ticks(&mut dag, scale);
    let catalog = match &args.catalog {
        Some(path) => io::read_catalog(path)?,
        None => resource_config(args.config)?,
    };
    let sys = System::new(&dag, &catalog).with_context(|| args.dag.display().to_string())?;
    Ok(Loaded { dag_id: stem(&args.dag), sys })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn baseline(b: Baseline) -> SchedulerPolicy {
    match b {
        Baseline::Hfcfs => hfcfs_policy(),
        Baseline::Hbfs => hbfs_policy(),
    }
}

fn usage_error(msg: String) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

/// Loads the system and resolves the policy plus a label naming its
/// constraint source. Flag combinations are checked before any file is read.
fn load_with_policy(sys: &SystemArgs, args: &PolicyArgs, scale: u64) -> Result<(Loaded, SchedulerPolicy, String)> {
    match (args.policy, &args.constraint) {
        (PolicyName::Dde, None) => usage_error("--policy dde requires --constraint".into()),
        (PolicyName::Hfcfs | PolicyName::Hbfs, Some(_)) => usage_error("--constraint only applies to --policy dde".into()),
        _ => {}
    }
    let l = load(sys, scale)?;
    let (p, source) = resolve_policy(args, &l.sys)?;
    Ok((l, p, source))
}

fn resolve_policy(args: &PolicyArgs, sys: &System) -> Result<(SchedulerPolicy, String)> {
    let src = match (args.policy, args.constraint.as_deref()) {
        (PolicyName::Hfcfs, _) => return Ok((hfcfs_policy(), "none".into())),
        (PolicyName::Hbfs, _) => return Ok((hbfs_policy(), "none".into())),
        (PolicyName::Dde, src) => src.expect("checked in load_with_policy"),
    };
    let c = match src {
        "hacpa" => hacpa_schedule(sys)?.constraint,
        "trace:hfcfs" => extract_constraint(sys, &wcrt_all_wcets(sys, &hfcfs_policy())?.1)?,
        "trace:hbfs" => extract_constraint(sys, &wcrt_all_wcets(sys, &hbfs_policy())?.1)?,
        path => return Ok((dde_policy(io::read_constraint(Path::new(path))?), format!("file:{}", stem(Path::new(path))))),
    };
    Ok((dde_policy(c), src.to_string()))
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?)
}

fn emit<T: Serialize>(format: Format, rows: &[T], out: Option<&Path>) -> Result<()> {
    let origin = out.map_or_else(|| "stdout".to_string(), |p| p.display().to_string());
    let mut w: Box<dyn Write> = match out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| origin.clone())?),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => io::write_csv(&mut w, rows, &origin)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(w.flush()?)
}

#[derive(Serialize)]
struct WcrtRow {
    dag_id: String,
    policy: String,
    constraint_source: String,
    wcrt: Ticks,
    conservative_wcrt: Option<Ticks>,
}

#[derive(Serialize)]
struct OracleRow {
    dag_id: String,
    policy: String,
    constraint_source: String,
    grid: String,
    run_count: u64,
    max_rt: Ticks,
    min_rt: Ticks,
    wcrt: Ticks,
    ta_witnessed: bool,
}

#[derive(Serialize)]
struct DominanceRow {
    dag_id: String,
    policy: String,
    constraint_source: String,
    dominated: bool,
    violation_tick: Option<Ticks>,
    violation_task: Option<TaskId>,
}

#[derive(Serialize)]
struct RatioRow {
    x: String,
    y: String,
    n_dags: usize,
    ara: f64,
    sra: f64,
    ara_exact: String,
    sra_exact: String,
}

#[derive(Serialize)]
struct PlotRow {
    dag_id: String,
    x: String,
    y: String,
    ratio: f64,
}

fn gen(args: &GenArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out).with_context(|| args.out.display().to_string())?;
    let catalog = resource_config(args.config)?;
    io::write_text(&args.out.join("catalog.json"), &io::catalog_to_json(&catalog))?;
    let mut manifest = Vec::new();
    for i in 0..args.count {
        let seed = stream(args.seed, "dag", i);
        let params = GenParams {
            n_min: args.n_min,
            n_max: args.n_max,
            p: args.p,
            wide_ratio: args.wide_ratio,
            eligibility: if args.subset { EligibilityMode::RandomSubset } else { EligibilityMode::All },
            seed,
            ..GenParams::default()
        };
        let dag = generate_dag(&params)?;
        let dag_id = format!("dag_{i:04}");
        io::write_text(&args.out.join(format!("{dag_id}.json")), &io::dag_to_json(&dag))?;
        manifest.push(ManifestRow { dag_id, seed, n_nodes: dag.len(), p: args.p, config: args.config });
    }
    let path = args.out.join("manifest.csv");
    let file = std::fs::File::create(&path).with_context(|| path.display().to_string())?;
    Ok(io::write_csv(file, &manifest, &path.display().to_string())?)
}

/// Groups rows by `policy/constraint_source`, then compares the AVRT of
/// every ordered pair of groups over the DAGs both contain.
fn report(inputs: &[PathBuf], plot: Option<&Path>, format: Format) -> Result<()> {
    let mut groups: BTreeMap<String, BTreeMap<String, Rational>> = BTreeMap::new();
    for path in inputs {
        for row in io::read_csv::<MetricsRow>(path)? {
            let label = format!("{}/{}", row.policy, row.constraint_source);
            groups.entry(label).or_default().insert(row.dag_id.clone(), row.avrt()?);
        }
    }
    if groups.len() < 2 {
        bail!("need rows from at least two policy/constraint groups, found {}", groups.len());
    }
    let (mut table, mut points) = (Vec::new(), Vec::new());
    for (x, xs) in &groups {
        for (y, ys) in &groups {
            let shared: BTreeSet<&String> = xs.keys().filter(|d| ys.contains_key(*d)).collect();
            if x == y || shared.is_empty() {
                continue;
            }
            let a: Vec<Rational> = shared.iter().map(|d| xs[*d]).collect();
            let b: Vec<Rational> = shared.iter().map(|d| ys[*d]).collect();
            let s = ratio_summary(&a, &b)?;
            let f = |r: &num::BigRational| r.to_f64().unwrap_or(f64::NAN);
            table.push(RatioRow {
                x: x.clone(),
                y: y.clone(),
                n_dags: shared.len(),
                ara: f(&s.ara),
                sra: f(&s.sra),
                ara_exact: s.ara.to_string(),
                sra_exact: s.sra.to_string(),
            });
            for (d, (p, q)) in shared.iter().zip(a.iter().zip(&b)) {
                let ratio = (p / q).to_f64().unwrap_or(f64::NAN);
                points.push(PlotRow { dag_id: (*d).clone(), x: x.clone(), y: y.clone(), ratio });
            }
        }
    }
    if table.is_empty() {
        bail!("no DAG appears in two different groups");
    }
    if let Some(path) = plot {
        emit(Format::Csv, &points, Some(path))?;
    }
    emit(format, &table, None)
}

fn run(cli: Cli) -> Result<()> {
    let (format, scale) = (cli.format, cli.tick_scale);
    match cli.command {
        Command::Gen(args) => gen(&args),
        Command::Wcrt { sys, policy, conservative, trace } => {
            let (l, p, source) = load_with_policy(&sys, &policy, scale)?;
            let (wcrt, tr) = wcrt_all_wcets(&l.sys, &p)?;
            if let Some(path) = trace {
                emit(format, &io::trace_rows(&l.sys, &tr), Some(&path))?;
            }
            let conservative_wcrt = if conservative { Some(conservative_wcrt(&l.sys, &p)?) } else { None };
            let row = WcrtRow { dag_id: l.dag_id, policy: p.kind().to_string(), constraint_source: source, wcrt, conservative_wcrt };
            emit(format, &[row], None)
        }
        Command::Constraints { sys, method, baseline: b, out } => {
            let l = load(&sys, scale)?;
            let c = match method {
                Method::Hacpa => hacpa_schedule(&l.sys)?.constraint,
                Method::Trace => extract_constraint(&l.sys, &wcrt_all_wcets(&l.sys, &baseline(b))?.1)?,
            };
            let json = io::constraint_to_json(&c);
            match out {
                Some(path) => Ok(io::write_text(&path, &json)?),
                None => {
                    println!("{json}");
                    Ok(())
                }
            }
        }
        Command::Mc { sys, policy, runs, seed, jobs, out } => {
            let (l, p, source) = load_with_policy(&sys, &policy, scale)?;
            let m = pool(jobs)?.install(|| monte_carlo_campaign(&l.sys, &p, runs, seed))?;
            let row = MetricsRow::new(&l.dag_id, &p.kind().to_string(), &source, seed, &m);
            emit(format, &[row], out.as_deref())
        }
        Command::Oracle { sys, policy, grid, budget, jobs } => {
            let (l, p, source) = load_with_policy(&sys, &policy, scale)?;
            let (g, name) = match grid {
                GridArg::Endpoints => (Grid::Endpoints, "endpoints"),
                GridArg::EndpointsMid => (Grid::EndpointsMid, "endpoints+mid"),
            };
            let o = pool(jobs)?.install(|| exhaustive_oracle(&l.sys, &p, &g, budget))?;
            let (wcrt, _) = wcrt_all_wcets(&l.sys, &p)?;
            let row = OracleRow {
                dag_id: l.dag_id,
                policy: p.kind().to_string(),
                constraint_source: source,
                grid: name.into(),
                run_count: o.run_count,
                max_rt: o.max_rt,
                min_rt: o.min_rt,
                wcrt,
                ta_witnessed: o.max_rt > wcrt,
            };
            emit(format, &[row], None)
        }
        Command::Dominance { sys, policy, assignment } => {
            let (l, p, source) = load_with_policy(&sys, &policy, scale)?;
            let mut durations = io::assignment_from_json(&io::read_text(&assignment)?, &assignment.display().to_string())?;
            durations.values_mut().for_each(|d| *d *= scale);
            let verdict = dominance_check_policy(&l.sys, &p, &TimeSource::Fixed(durations))?;
            let (violation_tick, violation_task) = match verdict {
                Dominance::Dominated => (None, None),
                Dominance::ViolationAt { tick, task } => (Some(tick), Some(task)),
            };
            let row = DominanceRow {
                dag_id: l.dag_id,
                policy: p.kind().to_string(),
                constraint_source: source,
                dominated: verdict == Dominance::Dominated,
                violation_tick,
                violation_task,
            };
            emit(format, &[row], None)
        }
        Command::Report { inputs, plot } => report(&inputs, plot.as_deref(), format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
