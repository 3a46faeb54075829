//! Subcommands: `plan`, `track`, `sweep1`, `sweep2` and `audit`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rendezvous_core::optimizer::{plan, PlanError, PlannedTrajectory};
use rendezvous_core::sim::{audit_safety, run as simulate, SimResult};

use crate::config::RunConfig;
use crate::formats::{self, Document};
use crate::sweep;

#[derive(Debug, Parser)]
#[command(name = "rendezvous", version, about = "Plan and track a rendezvous with a spinning target")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for plant perturbation and disturbances (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimise a trajectory and write `trajectory.csv`.
    Plan(Common),
    /// Track a planned trajectory with PWM thrusters and write `run.csv` and `firing.csv`.
    Track {
        #[command(flatten)]
        common: Common,
        /// Trajectory file written by `plan`.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Spin rate × thrust sweep.
    Sweep1(Common),
    /// Arrival attitude × spin rate sweep.
    Sweep2(Common),
    /// Re-check the keep-out constraint along a run record.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Run record written by `track`.
        #[arg(long)]
        run: PathBuf,
        /// Report a violation when the minimum distance drops below `-tolerance` [m].
        #[arg(long, default_value_t = 0.005)]
        tolerance: f64,
    },
}

pub fn resolve_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_doc(dir: &Path, name: &str, doc: &Document) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    doc.write(std::io::BufWriter::new(file))?;
    Ok(path)
}

/// Plans the configured scenario.
pub fn plan_scenario(cfg: &RunConfig) -> anyhow::Result<Result<PlannedTrajectory, PlanError>> {
    let setup = cfg.plan_setup()?;
    Ok(plan(cfg.theta_approach_deg.to_radians(), &setup, cfg.opt_max_candidates as usize, cfg.opt_search))
}

/// Tracks `trajectory` under the configured simulator.
pub fn track_scenario(cfg: &RunConfig, trajectory: &PlannedTrajectory) -> anyhow::Result<SimResult> {
    Ok(simulate(trajectory, &cfg.sim_config()?, &cfg.target()?)?)
}

pub fn plan_summary(cfg: &RunConfig, t: &PlannedTrajectory) -> anyhow::Result<String> {
    let b = t.objective_breakdown;
    let target = cfg.target()?;
    let kos = cfg.kos();
    let g = t.kos_distances(&target, &kos).into_iter().fold(f64::INFINITY, f64::min);
    let mut s = String::new();
    s += &format!("duration            {:.3} s ({} knots)\n", t.duration(), t.states.len());
    s += &format!("objective           {:.6e}\n", t.objective_value);
    let total = b.total();
    for (name, v) in [("goal", b.goal), ("kinetic", b.kinetic), ("effort", b.effort)] {
        s += &format!("  {name:<17} {v:.6e} ({:.1}%)\n", 100.0 * v / total);
    }
    s += &format!("terminal pos error  {:.6} m\n", t.terminal_position_error());
    s += &format!("attitude residual   {:.3e} rad\n", t.terminal_attitude_residual());
    s += &format!("min keep-out g      {:.6} m\n", g);
    match t.kos_switch_time() {
        Some(ts) => s += &format!("State II from       {ts:.1} s ({:.1}% of horizon)\n", 100.0 * ts / t.duration()),
        None => s += "State II from       never\n",
    }
    let st = t.solver_stats;
    s += &format!(
        "solver              {} outer / {} inner, violation {:.2e}, kkt {:.2e}\n",
        st.outer_iterations, st.inner_iterations, st.constraint_violation, st.kkt_residual
    );
    Ok(s)
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Plan(common) => {
            let cfg = resolve_config(&common)?;
            let start = Instant::now();
            match plan_scenario(&cfg)? {
                Ok(t) => {
                    let doc = formats::trajectory_document(&t, &cfg, &cfg.target()?, &cfg.kos());
                    let path = write_doc(Path::new(&cfg.out_dir), "trajectory.csv", &doc)?;
                    print!("{}", plan_summary(&cfg, &t)?);
                    println!("solve time          {:.2} s", start.elapsed().as_secs_f64());
                    println!("wrote {}", path.display());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ PlanError::AllCandidatesFailed { .. }) => {
                    eprintln!("planning failed: {e}");
                    let PlanError::AllCandidatesFailed { attempts } = &e;
                    for a in attempts {
                        eprintln!("  T = {:.2} s: {}", a.duration, a.error);
                    }
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Track { common, trajectory } => {
            let cfg = resolve_config(&common)?;
            let file = fs::File::open(&trajectory).with_context(|| format!("opening {}", trajectory.display()))?;
            let doc = Document::read(file).with_context(|| format!("reading {}", trajectory.display()))?;
            let t = formats::read_trajectory(&doc)?;
            if !t.converged {
                anyhow::bail!("trajectory in {} did not converge", trajectory.display());
            }
            let r = track_scenario(&cfg, &t)?;
            let (target, kos) = (cfg.target()?, cfg.kos());
            let dir = Path::new(&cfg.out_dir);
            let run_path = write_doc(dir, "run.csv", &formats::run_document(&r, &cfg, &target, &kos))?;
            let fire_path = write_doc(dir, "firing.csv", &formats::firing_document(&r, &cfg))?;
            println!(
                "terminal pos error  {:.6} m (planned {:.6} m)",
                r.terminal_position_error,
                t.terminal_position_error()
            );
            println!("terminal att error  {:.6} rad", r.terminal_attitude_error);
            println!("terminal rel speed  {:.6} m/s", r.terminal_relative_velocity);
            println!("min keep-out g      {:.6} m", r.min_kos_distance);
            println!("tracking rms        {:.6} m", r.tracking_rms());
            println!("wrote {} and {}", run_path.display(), fire_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep1(common) => {
            let cfg = resolve_config(&common)?;
            let points = sweep::sweep1_points(&cfg);
            let start = Instant::now();
            let records = sweep::run_points(&cfg, &points, common.parallel)?;
            let summary = sweep::summarize_sweep1(&records);
            let dir = Path::new(&cfg.out_dir);
            write_doc(dir, "sweep1_points.csv", &sweep::points_document("sweep1_points", &cfg, &records))?;
            let path = write_doc(dir, "sweep1_summary.csv", &sweep::sweep1_summary_document(&cfg, &summary))?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "{:>7} {:>10} {:>10} {:>6} {:>8}", "omega", "err_mean", "err_std", "conv", "dominant")?;
            for s in &summary {
                writeln!(
                    out,
                    "{:>7.3} {:>10.5} {:>10.5} {:>3}/{:<2} {:>8}",
                    s.omega,
                    s.error_mean,
                    s.error_std,
                    s.n_converged,
                    s.n_points,
                    s.breakdown_mean.dominant()
                )?;
            }
            writeln!(
                out,
                "{} points in {:.1} s; wrote {}",
                records.len(),
                start.elapsed().as_secs_f64(),
                path.display()
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep2(common) => {
            let cfg = resolve_config(&common)?;
            let points = sweep::sweep2_points(&cfg);
            let start = Instant::now();
            let records = sweep::run_points(&cfg, &points, common.parallel)?;
            let summary = sweep::summarize_sweep2(&records);
            let dir = Path::new(&cfg.out_dir);
            write_doc(dir, "sweep2_points.csv", &sweep::points_document("sweep2_points", &cfg, &records))?;
            let path = write_doc(dir, "sweep2_polar.csv", &sweep::sweep2_summary_document(&cfg, &summary))?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "{:>7} {:>10} {:>10} {:>10} {:>6}", "theta", "err_mean", "err_std", "err_max", "conv")?;
            for s in &summary {
                writeln!(
                    out,
                    "{:>7.1} {:>10.5} {:>10.5} {:>10.5} {:>3}/{:<2}",
                    s.theta_approach_deg, s.error_mean, s.error_std, s.error_max, s.n_converged, s.n_points
                )?;
            }
            writeln!(
                out,
                "{} points in {:.1} s; wrote {}",
                records.len(),
                start.elapsed().as_secs_f64(),
                path.display()
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit { common, run, tolerance } => {
            let file = fs::File::open(&run).with_context(|| format!("opening {}", run.display()))?;
            let doc = Document::read(file).with_context(|| format!("reading {}", run.display()))?;
            let cfg = match &common.config {
                Some(_) => resolve_config(&common)?,
                None => doc.config()?,
            };
            let (times, states) = formats::read_run(&doc)?;
            let target = cfg.target()?;
            let kos = cfg.kos();
            let min_g = audit_safety(&times, &states, &target, &kos);
            let below = times
                .iter()
                .zip(&states)
                .filter(|(t, s)| audit_safety(&[**t], std::slice::from_ref(*s), &target, &kos) < -tolerance)
                .count();
            println!("steps audited       {}", times.len());
            println!("min keep-out g      {min_g:.6} m");
            println!("steps below -{tolerance}  {below}");
            Ok(if below == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
