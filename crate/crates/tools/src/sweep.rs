//! Parameter sweeps over spin rate, thrust level and arrival attitude.
//!
//! Each grid point is an independent plan; points run on a rayon pool and are
//! re-sorted by grid index, so results do not depend on scheduling.

use std::time::Instant;

use rayon::prelude::*;
use rendezvous_core::optimizer::{plan, ObjectiveBreakdown, PlanError};

use crate::config::RunConfig;
use crate::formats::{num, Document};

/// Outcome of planning one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// Grid indices `(i, j)` along the two sweep axes.
    pub index: (usize, usize),
    pub omega: f64,
    pub f_thr: f64,
    pub theta_approach_deg: f64,
    pub converged: bool,
    /// Empty on success.
    pub reason: String,
    pub breakdown: ObjectiveBreakdown,
    pub terminal_position_error: f64,
    pub terminal_attitude_error: f64,
    pub duration: f64,
    pub wall_time: f64,
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: (usize, usize),
    pub omega: f64,
    pub f_thr: f64,
    pub theta_approach_deg: f64,
}

pub fn run_point(cfg: &RunConfig, p: SweepPoint) -> SweepRecord {
    let start = Instant::now();
    let mut rec = SweepRecord {
        index: p.index,
        omega: p.omega,
        f_thr: p.f_thr,
        theta_approach_deg: p.theta_approach_deg,
        converged: false,
        reason: String::new(),
        breakdown: ObjectiveBreakdown::default(),
        terminal_position_error: f64::NAN,
        terminal_attitude_error: f64::NAN,
        duration: f64::NAN,
        wall_time: 0.0,
    };
    let setup = match cfg.plan_setup_with(p.omega, p.f_thr) {
        Ok(s) => s,
        Err(e) => {
            rec.reason = format!("setup: {e}");
            return rec;
        }
    };
    match plan(p.theta_approach_deg.to_radians(), &setup, cfg.opt_max_candidates as usize, cfg.opt_search) {
        Ok(t) => {
            rec.converged = true;
            rec.breakdown = t.objective_breakdown;
            rec.terminal_position_error = t.terminal_position_error();
            rec.terminal_attitude_error = t.terminal_attitude_residual();
            rec.duration = t.duration();
        }
        Err(PlanError::AllCandidatesFailed { attempts }) => {
            rec.reason =
                attempts.iter().map(|a| format!("T={:.2}: {}", a.duration, a.error)).collect::<Vec<_>>().join("; ");
            if rec.reason.is_empty() {
                rec.reason = "no duration candidates".into();
            }
        }
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

/// Runs all points on a pool with `threads` workers (0 = rayon default).
pub fn run_points(cfg: &RunConfig, points: &[SweepPoint], threads: usize) -> anyhow::Result<Vec<SweepRecord>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let mut out: Vec<SweepRecord> = pool.install(|| points.par_iter().map(|&p| run_point(cfg, p)).collect());
    out.sort_by_key(|r| r.index);
    Ok(out)
}

/// ω × F_thr grid at the configured arrival attitude.
pub fn sweep1_points(cfg: &RunConfig) -> Vec<SweepPoint> {
    let mut pts = Vec::new();
    for i in 0..cfg.sweep1_omega.len() {
        for j in 0..cfg.sweep1_f_thr.len() {
            pts.push(SweepPoint {
                index: (i, j),
                omega: cfg.sweep1_omega.value(i),
                f_thr: cfg.sweep1_f_thr.value(j),
                theta_approach_deg: cfg.sweep1_theta_deg,
            });
        }
    }
    pts
}

/// θ_approach × ω grid at the configured thrust level.
pub fn sweep2_points(cfg: &RunConfig) -> Vec<SweepPoint> {
    let mut pts = Vec::new();
    for i in 0..cfg.sweep2_theta_deg.len() {
        for j in 0..cfg.sweep2_omega.len() {
            pts.push(SweepPoint {
                index: (i, j),
                omega: cfg.sweep2_omega.value(j),
                f_thr: cfg.sweep2_f_thr,
                theta_approach_deg: cfg.sweep2_theta_deg.value(i),
            });
        }
    }
    pts
}

/// Mean and population standard deviation; `NaN` for an empty input.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-ω aggregate of a spin-rate × thrust sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSummary {
    pub index: usize,
    pub omega: f64,
    pub n_points: usize,
    pub n_converged: usize,
    pub error_mean: f64,
    pub error_std: f64,
    pub breakdown_mean: ObjectiveBreakdown,
}

impl OmegaSummary {
    /// `(goal, kinetic, effort)` as fractions of their sum.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let b = self.breakdown_mean;
        let t = b.total();
        (b.goal / t, b.kinetic / t, b.effort / t)
    }
}

pub fn summarize_sweep1(records: &[SweepRecord]) -> Vec<OmegaSummary> {
    let mut idx: Vec<usize> = records.iter().map(|r| r.index.0).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter()
        .map(|i| {
            let mut group: Vec<&SweepRecord> = records.iter().filter(|r| r.index.0 == i).collect();
            group.sort_by_key(|r| r.index);
            let ok: Vec<&&SweepRecord> = group.iter().filter(|r| r.converged).collect();
            let errors: Vec<f64> = ok.iter().map(|r| r.terminal_position_error).collect();
            let (error_mean, error_std) = mean_std(&errors);
            let term =
                |f: fn(&ObjectiveBreakdown) -> f64| mean_std(&ok.iter().map(|r| f(&r.breakdown)).collect::<Vec<_>>()).0;
            OmegaSummary {
                index: i,
                omega: group[0].omega,
                n_points: group.len(),
                n_converged: ok.len(),
                error_mean,
                error_std,
                breakdown_mean: ObjectiveBreakdown {
                    goal: term(|b| b.goal),
                    kinetic: term(|b| b.kinetic),
                    effort: term(|b| b.effort),
                },
            }
        })
        .collect()
}

/// Per-θ error distribution of an attitude × spin-rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSummary {
    pub index: usize,
    pub theta_approach_deg: f64,
    pub n_points: usize,
    pub n_converged: usize,
    pub error_mean: f64,
    pub error_std: f64,
    pub error_min: f64,
    pub error_max: f64,
}

pub fn summarize_sweep2(records: &[SweepRecord]) -> Vec<ThetaSummary> {
    let mut idx: Vec<usize> = records.iter().map(|r| r.index.0).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter()
        .map(|i| {
            let mut group: Vec<&SweepRecord> = records.iter().filter(|r| r.index.0 == i).collect();
            group.sort_by_key(|r| r.index);
            let errors: Vec<f64> = group.iter().filter(|r| r.converged).map(|r| r.terminal_position_error).collect();
            let (error_mean, error_std) = mean_std(&errors);
            ThetaSummary {
                index: i,
                theta_approach_deg: group[0].theta_approach_deg,
                n_points: group.len(),
                n_converged: errors.len(),
                error_mean,
                error_std,
                error_min: errors.iter().copied().fold(f64::NAN, f64::min),
                error_max: errors.iter().copied().fold(f64::NAN, f64::max),
            }
        })
        .collect()
}

pub const POINT_COLUMNS: [&str; 14] = [
    "i",
    "j",
    "omega",
    "f_thr",
    "theta_approach_deg",
    "converged",
    "objective_goal",
    "objective_kinetic",
    "objective_effort",
    "terminal_position_error",
    "terminal_attitude_error",
    "duration",
    "wall_time",
    "reason",
];

pub fn points_document(kind: &str, cfg: &RunConfig, records: &[SweepRecord]) -> Document {
    let mut doc = Document::new(kind, cfg, &POINT_COLUMNS);
    for r in records {
        doc.rows.push(vec![
            r.index.0.to_string(),
            r.index.1.to_string(),
            num(r.omega),
            num(r.f_thr),
            num(r.theta_approach_deg),
            r.converged.to_string(),
            num(r.breakdown.goal),
            num(r.breakdown.kinetic),
            num(r.breakdown.effort),
            num(r.terminal_position_error),
            num(r.terminal_attitude_error),
            num(r.duration),
            format!("{:.3}", r.wall_time),
            r.reason.clone(),
        ]);
    }
    doc
}

pub const SWEEP1_SUMMARY_COLUMNS: [&str; 14] = [
    "i",
    "omega",
    "n_points",
    "n_converged",
    "error_mean",
    "error_std",
    "goal_mean",
    "kinetic_mean",
    "effort_mean",
    "goal_fraction",
    "kinetic_fraction",
    "effort_fraction",
    "dominant",
    "objective_mean",
];

pub fn sweep1_summary_document(cfg: &RunConfig, summary: &[OmegaSummary]) -> Document {
    let mut doc = Document::new("sweep1_summary", cfg, &SWEEP1_SUMMARY_COLUMNS);
    for s in summary {
        let (g, k, e) = s.fractions();
        doc.rows.push(vec![
            s.index.to_string(),
            num(s.omega),
            s.n_points.to_string(),
            s.n_converged.to_string(),
            num(s.error_mean),
            num(s.error_std),
            num(s.breakdown_mean.goal),
            num(s.breakdown_mean.kinetic),
            num(s.breakdown_mean.effort),
            num(g),
            num(k),
            num(e),
            s.breakdown_mean.dominant().to_string(),
            num(s.breakdown_mean.total()),
        ]);
    }
    doc
}

pub const SWEEP2_SUMMARY_COLUMNS: [&str; 10] = [
    "i",
    "theta_approach_deg",
    "theta_approach_rad",
    "n_points",
    "n_converged",
    "error_mean",
    "error_std",
    "error_min",
    "error_max",
    "rear_sector",
];

/// Whether an arrival attitude lies in the rear sector [150°, 210°].
pub fn is_rear(theta_deg: f64) -> bool {
    let t = theta_deg.rem_euclid(360.0);
    (150.0 - 1e-9..=210.0 + 1e-9).contains(&t)
}

pub fn sweep2_summary_document(cfg: &RunConfig, summary: &[ThetaSummary]) -> Document {
    let mut doc = Document::new("sweep2_polar", cfg, &SWEEP2_SUMMARY_COLUMNS);
    for s in summary {
        doc.rows.push(vec![
            s.index.to_string(),
            num(s.theta_approach_deg),
            num(s.theta_approach_deg.to_radians()),
            s.n_points.to_string(),
            s.n_converged.to_string(),
            num(s.error_mean),
            num(s.error_std),
            num(s.error_min),
            num(s.error_max),
            is_rear(s.theta_approach_deg).to_string(),
        ]);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, j: usize, err: f64, goal: f64, kinetic: f64) -> SweepRecord {
        SweepRecord {
            index: (i, j),
            omega: 0.1 * (i + 1) as f64,
            f_thr: 0.03,
            theta_approach_deg: 30.0 * i as f64,
            converged: err.is_finite(),
            reason: String::new(),
            breakdown: ObjectiveBreakdown { goal, kinetic, effort: 0.0 },
            terminal_position_error: err,
            terminal_attitude_error: 0.0,
            duration: 20.0,
            wall_time: 0.0,
        }
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn aggregates_skip_failures_and_ignore_order() {
        let mut records = vec![rec(0, 0, 0.1, 1.0, 2.0), rec(0, 1, f64::NAN, 0.0, 0.0), rec(1, 0, 0.3, 5.0, 1.0)];
        let a = summarize_sweep1(&records);
        records.reverse();
        assert_eq!(a, summarize_sweep1(&records));
        assert_eq!(a[0].n_converged, 1);
        assert_eq!(a[0].error_mean, 0.1);
        assert_eq!(a[0].breakdown_mean.dominant(), "kinetic");
        assert_eq!(a[1].breakdown_mean.dominant(), "goal");
    }

    #[test]
    fn rear_sector_membership() {
        assert!(is_rear(150.0) && is_rear(180.0) && is_rear(210.0));
        assert!(!is_rear(120.0) && !is_rear(240.0) && !is_rear(0.0));
    }
}
