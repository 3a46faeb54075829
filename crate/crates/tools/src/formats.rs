//! Delimited-text outputs. Every file starts with a `#` header block holding
//! the format version, file kind, a SHA-256 digest of the resolved config,
//! the config itself, optional metadata and the column manifest. The body is
//! plain CSV with a header row.

use std::io::{BufRead, BufReader, Read, Write};

use anyhow::{anyhow, bail, Context};
use rendezvous_core::dynamics::{BodyState, TargetState, Wrench};
use rendezvous_core::kos::{build_region, signed_distance, KosConfig, KosState};
use rendezvous_core::optimizer::{ObjectiveBreakdown, PlannedTrajectory, SolverStats};
use rendezvous_core::sim::SimResult;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const FORMAT_VERSION: u32 = 1;

pub const TRAJECTORY_COLUMNS: [&str; 12] =
    ["t", "x", "y", "theta", "vx", "vy", "omega", "Fx", "Fy", "tau", "kos_state", "g_min"];
pub const RUN_COLUMNS: [&str; 12] =
    ["t", "x", "y", "theta", "vx", "vy", "omega", "vrel_x", "vrel_y", "kos_state", "g", "thrusters_on"];
pub const FIRING_COLUMNS: [&str; 9] = ["t_slot", "u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8"];

pub fn config_digest(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Header block and parsed body of a file.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub kind: String,
    pub version: u32,
    pub digest: String,
    pub config_text: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Document {
    pub fn new(kind: &str, cfg: &RunConfig, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            version: FORMAT_VERSION,
            digest: config_digest(cfg),
            config_text: cfg.to_text(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get_meta(&self, key: &str) -> anyhow::Result<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| anyhow!("missing metadata `{key}`"))
    }

    pub fn meta_f64(&self, key: &str) -> anyhow::Result<f64> {
        self.get_meta(key)?.parse().with_context(|| format!("metadata `{key}`"))
    }

    pub fn config(&self) -> anyhow::Result<RunConfig> {
        Ok(RunConfig::parse(&self.config_text)?)
    }

    pub fn write(&self, mut w: impl Write) -> anyhow::Result<()> {
        writeln!(w, "# rendezvous-format: {}", self.version)?;
        writeln!(w, "# kind: {}", self.kind)?;
        writeln!(w, "# config-sha256: {}", self.digest)?;
        for line in self.config_text.lines() {
            writeln!(w, "# config: {line}")?;
        }
        for (k, v) in &self.meta {
            writeln!(w, "# meta: {k} = {v}")?;
        }
        writeln!(w, "# columns: {}", self.columns.join(","))?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn read(r: impl Read) -> anyhow::Result<Self> {
        let mut reader = BufReader::new(r);
        let mut doc = Document {
            kind: String::new(),
            version: 0,
            digest: String::new(),
            config_text: String::new(),
            meta: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        };
        let mut body = String::new();
        let mut line = String::new();
        while reader.read_line(&mut line)? > 0 {
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(v) = h.strip_prefix("rendezvous-format:") {
                    doc.version = v.trim().parse().context("format version")?;
                } else if let Some(v) = h.strip_prefix("kind:") {
                    doc.kind = v.trim().to_string();
                } else if let Some(v) = h.strip_prefix("config-sha256:") {
                    doc.digest = v.trim().to_string();
                } else if let Some(v) = h.strip_prefix("config:") {
                    doc.config_text.push_str(v.trim());
                    doc.config_text.push('\n');
                } else if let Some(v) = h.strip_prefix("meta:") {
                    let (k, v) = v.split_once('=').ok_or_else(|| anyhow!("malformed metadata line `{h}`"))?;
                    doc.meta.push((k.trim().to_string(), v.trim().to_string()));
                } else if let Some(v) = h.strip_prefix("columns:") {
                    doc.columns = v.trim().split(',').map(str::to_string).collect();
                }
            } else {
                body.push_str(&line);
            }
            line.clear();
        }
        if doc.version != FORMAT_VERSION {
            bail!("unsupported format version {} (expected {FORMAT_VERSION})", doc.version);
        }
        let mut csv = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        if header != doc.columns {
            bail!("column row {:?} does not match the manifest {:?}", header, doc.columns);
        }
        for rec in csv.records() {
            doc.rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(doc)
    }

    pub fn expect(&self, kind: &str, columns: &[&str]) -> anyhow::Result<()> {
        if self.kind != kind {
            bail!("expected a {kind} file, found {}", self.kind);
        }
        if self.columns != columns {
            bail!("schema mismatch: columns {:?}, expected {:?}", self.columns, columns);
        }
        Ok(())
    }
}

fn kos_label(s: KosState) -> String {
    s.as_index().to_string()
}

fn parse_f(s: &str) -> anyhow::Result<f64> {
    s.parse().with_context(|| format!("bad number `{s}`"))
}

pub fn trajectory_document(
    plan: &PlannedTrajectory,
    cfg: &RunConfig,
    target: &TargetState,
    kos: &KosConfig,
) -> Document {
    let mut doc = Document::new("trajectory", cfg, &TRAJECTORY_COLUMNS);
    let b = plan.objective_breakdown;
    doc.meta("dt", num(plan.dt))
        .meta("theta_finish", num(plan.theta_finish))
        .meta("theta_approach", num(plan.theta_approach))
        .meta("x_goal", plan.x_goal.to_array().map(num).join(" "))
        .meta("objective", num(plan.objective_value))
        .meta("objective_goal", num(b.goal))
        .meta("objective_kinetic", num(b.kinetic))
        .meta("objective_effort", num(b.effort))
        .meta("converged", plan.converged)
        .meta("outer_iterations", plan.solver_stats.outer_iterations)
        .meta("inner_iterations", plan.solver_stats.inner_iterations)
        .meta("constraint_violation", num(plan.solver_stats.constraint_violation))
        .meta("kkt_residual", num(plan.solver_stats.kkt_residual))
        .meta("final_rho", num(plan.solver_stats.final_rho));
    let g = plan.kos_distances(target, kos);
    for k in 0..plan.states.len() {
        let s = plan.states[k].to_array();
        let w = plan.wrenches.get(k).copied().unwrap_or(Wrench::ZERO).to_array();
        let mut row = vec![num(plan.times[k])];
        row.extend(s.iter().map(|&v| num(v)));
        row.extend(w.iter().map(|&v| num(v)));
        row.push(kos_label(plan.kos_states[k]));
        row.push(num(g[k]));
        doc.rows.push(row);
    }
    doc
}

/// Rebuilds the planned trajectory from a trajectory document.
pub fn read_trajectory(doc: &Document) -> anyhow::Result<PlannedTrajectory> {
    doc.expect("trajectory", &TRAJECTORY_COLUMNS)?;
    if doc.rows.len() < 2 {
        bail!("trajectory needs at least two knots");
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut wrenches = Vec::new();
    let mut kos_states = Vec::new();
    for (k, row) in doc.rows.iter().enumerate() {
        let v: Vec<f64> = row[..10].iter().map(|s| parse_f(s)).collect::<anyhow::Result<_>>()?;
        times.push(v[0]);
        states.push(BodyState::from_slice(&v[1..7]));
        if k + 1 < doc.rows.len() {
            wrenches.push(Wrench::new(v[7], v[8], v[9]));
        }
        let idx: u8 = row[10].parse().context("kos_state")?;
        kos_states.push(KosState::from_index(idx).ok_or_else(|| anyhow!("bad kos_state {idx}"))?);
    }
    let goal: Vec<f64> = doc.get_meta("x_goal")?.split_whitespace().map(parse_f).collect::<anyhow::Result<_>>()?;
    if goal.len() != 6 {
        bail!("x_goal must have 6 entries");
    }
    Ok(PlannedTrajectory {
        times,
        states,
        wrenches,
        objective_value: doc.meta_f64("objective")?,
        objective_breakdown: ObjectiveBreakdown {
            goal: doc.meta_f64("objective_goal")?,
            kinetic: doc.meta_f64("objective_kinetic")?,
            effort: doc.meta_f64("objective_effort")?,
        },
        kos_states,
        converged: doc.get_meta("converged")? == "true",
        solver_stats: SolverStats {
            outer_iterations: doc.get_meta("outer_iterations")?.parse()?,
            inner_iterations: doc.get_meta("inner_iterations")?.parse()?,
            constraint_violation: doc.meta_f64("constraint_violation")?,
            kkt_residual: doc.meta_f64("kkt_residual")?,
            final_rho: doc.meta_f64("final_rho")?,
        },
        dt: doc.meta_f64("dt")?,
        x_goal: BodyState::from_slice(&goal),
        theta_finish: doc.meta_f64("theta_finish")?,
        theta_approach: doc.meta_f64("theta_approach")?,
    })
}

/// Physics-rate run record with the per-step audit.
pub fn run_document(run: &SimResult, cfg: &RunConfig, target: &TargetState, kos: &KosConfig) -> Document {
    let mut doc = Document::new("run", cfg, &RUN_COLUMNS);
    doc.meta("terminal_position_error", num(run.terminal_position_error))
        .meta("terminal_attitude_error", num(run.terminal_attitude_error))
        .meta("terminal_relative_velocity", num(run.terminal_relative_velocity))
        .meta("min_kos_distance", num(run.min_kos_distance))
        .meta("tracking_rms", num(run.tracking_rms()))
        .meta("plant_mass", num(run.plant.body.mass()))
        .meta("plant_inertia", num(run.plant.body.inertia()))
        .meta("plant_f_max", num(run.plant.layout.f_max()));
    let slots_per_step = run.firings.len() as f64 / (run.states.len() - 1).max(1) as f64;
    for (i, (s, &t)) in run.states.iter().zip(&run.times).enumerate() {
        let theta_t = target.theta_at(t);
        let state = rendezvous_core::kos::classify(s, theta_t, target.position, kos);
        let g = signed_distance(s.position(), &build_region(state, theta_t, target.position, kos));
        let v = run.relative_velocity[i];
        // thrusters on during the step that starts here
        let slot = ((i as f64) * slots_per_step).floor() as usize;
        let on = run.firings.get(slot).map(|f| f.iter().filter(|&&b| b).count()).unwrap_or(0);
        let mut row = vec![num(t)];
        row.extend(s.to_array().iter().map(|&x| num(x)));
        row.extend([num(v[0]), num(v[1]), kos_label(state), num(g), on.to_string()]);
        doc.rows.push(row);
    }
    doc
}

pub fn firing_document(run: &SimResult, cfg: &RunConfig) -> Document {
    let mut doc = Document::new("firing", cfg, &FIRING_COLUMNS);
    for (t, f) in run.firing_times.iter().zip(&run.firings) {
        let mut row = vec![num(*t)];
        row.extend(f.iter().map(|&b| if b { "1".to_string() } else { "0".to_string() }));
        doc.rows.push(row);
    }
    doc
}

/// Times and states from a run record.
pub fn read_run(doc: &Document) -> anyhow::Result<(Vec<f64>, Vec<BodyState>)> {
    doc.expect("run", &RUN_COLUMNS)?;
    let mut times = Vec::with_capacity(doc.rows.len());
    let mut states = Vec::with_capacity(doc.rows.len());
    for row in &doc.rows {
        let v: Vec<f64> = row[..7].iter().map(|s| parse_f(s)).collect::<anyhow::Result<_>>()?;
        times.push(v[0]);
        states.push(BodyState::from_slice(&v[1..7]));
    }
    Ok((times, states))
}
