//! `waiterplan` command-line front end.
//!
//! Exit codes: 0 goal reached / clean verification, 1 error (including usage
//! errors), 2 safe stop or iteration cap, 3 verification violations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use waiterplan::controller::tracking_bounds;
use waiterplan::dump::{self, NamedSet};
use waiterplan::planlog::{Outcome, PlanLog};
use waiterplan::planner::{reach_sets, receding_horizon, tracking_inflation};
use waiterplan::scenario::Scenario;
use waiterplan::traj::{InitialCondition, TimePartition};
use waiterplan::verify::{
    audit_initial_conditions, audit_report, closed_loop_sim, containment_audit, exit_code, sample_params, verify_plan, SimConfig,
    Stage,
};

const EXIT_ERROR: u8 = 1;
const EXIT_SAFE_STOP: u8 = 2;

#[derive(Parser)]
#[command(name = "waiterplan", version, about = "Plan and verify arm motions that carry an unsecured object on a tray")]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the time-subinterval width of the scenario.
    #[arg(long, global = true)]
    dt: Option<f64>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run receding-horizon planning and write the plan log.
    Plan {
        scenario: PathBuf,
        /// Write the plan log here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Cap on planning iterations.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Verify a plan log: certificates, dense sampling and closed-loop simulation.
    Verify {
        scenario: PathBuf,
        plan_log: PathBuf,
        /// Dense-sampling budget (defaults to the scenario value).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
        /// Also run the reachable-set containment audit with this many samples.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        containment: Option<u64>,
        /// Number of closed-loop simulations with sampled true parameters.
        #[arg(long, default_value_t = 1)]
        sims: usize,
        /// Write the first simulation's time series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the controller's tracking-error bounds.
    Bounds { scenario: PathBuf },
    /// Compute the reachable sets of one time subinterval from rest at the start.
    Reach {
        scenario: PathBuf,
        #[arg(long)]
        interval: usize,
        /// Write the sets as a WPZ1 dump.
        #[arg(long)]
        dump_reach: Option<PathBuf>,
    },
}

fn load(path: &Path, cli: &Cli) -> Result<Scenario> {
    let mut scn = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        scn.solver.seed = seed;
    }
    if let Some(dt) = cli.dt {
        scn.partition = TimePartition::new(dt, scn.partition.t_p, scn.partition.t_fin)?;
    }
    Ok(scn)
}

fn progress(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn cmd_plan(cli: &Cli, scenario: &Path, output: Option<&Path>, max_iters: Option<usize>) -> Result<u8> {
    let mut scn = load(scenario, cli)?;
    if let Some(n) = max_iters {
        if n == 0 {
            bail!("--max-iters must be at least 1");
        }
        scn.solver.max_iters = n;
    }
    let run = receding_horizon(&scn)?;
    for (e, (r, b)) in run.log.entries.iter().zip(run.results.iter().zip(&run.build_times)) {
        progress(
            cli,
            format!(
                "iteration {:>3} {:?} max constraint {:.3e} (build {:.2?}, solve {:.2?}{})",
                e.iteration,
                e.status,
                e.max_constraint,
                b,
                r.elapsed,
                if r.overrun { ", over budget" } else { "" }
            ),
        );
    }
    progress(cli, format!("outcome: {}", run.log.outcome));
    let text = run.log.to_text();
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(match run.log.outcome {
        Outcome::GoalReached => 0,
        Outcome::SafeStop | Outcome::IterationCap => EXIT_SAFE_STOP,
    })
}

fn cmd_verify(
    cli: &Cli,
    scenario: &Path,
    plan_log: &Path,
    samples: Option<u64>,
    containment: Option<u64>,
    sims: usize,
    csv: Option<&Path>,
) -> Result<u8> {
    let scn = load(scenario, cli)?;
    let text = std::fs::read_to_string(plan_log).with_context(|| format!("reading {}", plan_log.display()))?;
    let log = PlanLog::parse(&text)?;
    let seed = cli.seed.unwrap_or(scn.solver.seed);
    let n = samples.map_or(scn.verify_samples, |s| s as usize);
    let mut reports = vec![verify_plan(&scn, &log, n, seed)?];
    for s in 0..sims {
        let params = sample_params(&scn, seed.wrapping_add(s as u64));
        let cfg = SimConfig { record_every: if s == 0 && csv.is_some() { 10 } else { 0 }, ..SimConfig::default() };
        let sim = closed_loop_sim(&scn, &log, &params, &cfg)?;
        if s == 0 {
            if let Some(p) = csv {
                std::fs::write(p, sim.trace_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        progress(cli, format!("simulation {s}: max |e| {:?}, max |ed| {:?}", sim.max_abs_e, sim.max_abs_ed));
        reports.push(sim.report);
    }
    if let Some(m) = containment {
        let ics = audit_initial_conditions(&scn, seed);
        reports.push(containment_audit(&scn, &Stage::ALL, &ics, m as usize, seed)?);
    }
    print!("{}", audit_report(&reports));
    Ok(exit_code(&reports) as u8)
}

fn cmd_bounds(cli: &Cli, scenario: &Path) -> Result<u8> {
    let scn = load(scenario, cli)?;
    let b = tracking_bounds(&scn.controller)?;
    let c = &scn.controller;
    let source = |est: bool| if est { format!("estimated from {} samples", scn.eigen.samples) } else { "given".to_string() };
    println!("sigma_m      {:.6} ({})", c.sigma_m, source(scn.eigen.sigma_m_estimated));
    println!("sigma_M      {:.6} ({})", c.sigma_big_m, source(scn.eigen.sigma_big_m_estimated));
    println!("V_M          {}", c.v_m);
    println!("|r| bound    {:.4}", b.eps);
    let joined = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    println!("eps_p [rad]  {}", joined(&b.eps_p));
    println!("eps_v [rad/s] {:.4}", b.eps_v);
    Ok(0)
}

fn cmd_reach(cli: &Cli, scenario: &Path, interval: usize, dump_reach: Option<&Path>) -> Result<u8> {
    let scn = load(scenario, cli)?;
    let ic = InitialCondition::at_rest(scn.q_start.clone());
    let sets = reach_sets(&scn, &ic, &tracking_inflation(&scn)?, interval)?;
    let mut named = Vec::new();
    for (j, fo) in sets.fo.iter().enumerate() {
        named.push(NamedSet::new(format!("fo{j}"), fo.clone()));
    }
    for (j, w) in sets.rnea.wrenches.iter().enumerate() {
        named.push(NamedSet::new(format!("force{j}"), w.f.clone()));
        named.push(NamedSet::new(format!("moment{j}"), w.n.clone()));
    }
    let [sep, slip, tip] = sets.contact.as_array();
    named.push(NamedSet::new("separation", sep.clone()));
    named.push(NamedSet::new("slip", slip.clone()));
    named.push(NamedSet::new("tip", tip.clone()));
    for s in &named {
        let b = s.set.bounds();
        let iv = b.data.iter().map(|iv| format!("[{:.6}, {:.6}]", iv.lo, iv.hi)).collect::<Vec<_>>().join(" ");
        println!("{:<12} terms={:<4} {iv}", s.name, s.set.n_terms());
    }
    if let Some(p) = dump_reach {
        dump::write_file(p, &named).with_context(|| format!("writing {}", p.display()))?;
        progress(cli, format!("wrote {} sets to {}", named.len(), p.display()));
    }
    Ok(0)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("WAITERPLAN_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("WAITERPLAN_THREADS={v:?} is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8> {
    configure_threads()?;
    match &cli.cmd {
        Command::Plan { scenario, output, max_iters } => cmd_plan(cli, scenario, output.as_deref(), *max_iters),
        Command::Verify { scenario, plan_log, samples, containment, sims, csv } => {
            cmd_verify(cli, scenario, plan_log, *samples, *containment, *sims, csv.as_deref())
        }
        Command::Bounds { scenario } => cmd_bounds(cli, scenario),
        Command::Reach { scenario, interval, dump_reach } => cmd_reach(cli, scenario, *interval, dump_reach.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet { "error" } else { "warn" })).init();
    info!("waiterplan {}", env!("CARGO_PKG_VERSION"));
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
