//! Augmented-Lagrangian solver for bound-constrained NLPs with banded Hessians.
//!
//! Equality rows `c(z) = 0` and inequality rows `g(z) ≥ 0` are moved into the
//! merit function
//!
//! ```text
//! φ(z) = f(z) + Σ λᵢcᵢ + ρ/2 Σ cᵢ² + 1/(2ρ) Σ (max(0, μⱼ − ρgⱼ)² − μⱼ²)
//! ```
//!
//! while the variable bounds are kept explicit and handled by a projected
//! Newton inner solve (ε-active set, Armijo search along the projection arc).
//! Multipliers follow the first-order update; `ρ` grows tenfold whenever the
//! constraint measure fails to shrink by a factor of four.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::linalg::BandedSym;

/// One constraint row: value, sparse gradient (up to four entries) and an
/// optional 2×2 curvature block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub value: f64,
    pub idx: [usize; 4],
    pub coef: [f64; 4],
    pub len: usize,
    pub curv: Option<([usize; 2], [[f64; 2]; 2])>,
}

impl Row {
    pub fn new(value: f64, entries: &[(usize, f64)]) -> Self {
        let mut idx = [0; 4];
        let mut coef = [0.0; 4];
        for (k, &(i, c)) in entries.iter().enumerate() {
            idx[k] = i;
            coef[k] = c;
        }
        Self { value, idx, coef, len: entries.len(), curv: None }
    }

    pub fn with_curvature(mut self, idx: [usize; 2], h: [[f64; 2]; 2]) -> Self {
        self.curv = Some((idx, h));
        self
    }

    fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx[..self.len].iter().copied().zip(self.coef[..self.len].iter().copied())
    }
}

/// A bound-constrained NLP whose Lagrangian Hessian fits in a band.
pub trait BandedNlp {
    fn dim(&self) -> usize;
    fn bandwidth(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn objective(&self, z: &[f64]) -> f64;
    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]);
    /// Adds the objective Hessian to `h`.
    fn objective_hessian(&self, z: &[f64], h: &mut BandedSym);
    /// Equality rows; assumed affine (their curvature is ignored).
    fn equalities(&self, z: &[f64], out: &mut Vec<Row>);
    fn inequalities(&self, z: &[f64], out: &mut Vec<Row>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Projected Lagrangian-gradient tolerance.
    pub tol_kkt: f64,
    /// Constraint-violation tolerance.
    pub tol_feas: f64,
    pub rho_init: f64,
    pub rho_max: f64,
    /// Use constraint curvature in the Newton matrix (falls back to
    /// Gauss–Newton when the matrix is indefinite).
    pub exact_curvature: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_outer: 500,
            max_inner: 200,
            tol_kkt: 1e-6,
            tol_feas: 1e-8,
            rho_init: 1e3,
            rho_max: 1e12,
            exact_curvature: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// max(|c|, max(0, −g)) at the returned point.
    pub constraint_violation: f64,
    /// ‖z − P(z − ∇ₓL)‖∞ with the returned multipliers.
    pub kkt_residual: f64,
    pub final_rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationLimit,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct AlOutput {
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub stats: SolverStats,
    pub termination: Termination,
}

struct Workspace {
    eq: Vec<Row>,
    ineq: Vec<Row>,
    grad: Vec<f64>,
    hess: BandedSym,
    dir: Vec<f64>,
    trial: Vec<f64>,
    fixed: Vec<bool>,
}

/// Runs the augmented-Lagrangian method from `z0` (projected onto the bounds).
pub fn solve<P: BandedNlp>(nlp: &P, z0: &[f64], settings: &SolverSettings) -> AlOutput {
    let n = nlp.dim();
    let lo = nlp.lower();
    let hi = nlp.upper();
    let mut z: Vec<f64> = z0.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &h))| v.max(l).min(h)).collect();

    let mut ws = Workspace {
        eq: Vec::new(),
        ineq: Vec::new(),
        grad: vec![0.0; n],
        hess: BandedSym::zeros(n, nlp.bandwidth()),
        dir: vec![0.0; n],
        trial: vec![0.0; n],
        fixed: lo.iter().zip(hi).map(|(l, h)| l == h).collect(),
    };
    nlp.equalities(&z, &mut ws.eq);
    nlp.inequalities(&z, &mut ws.ineq);
    let mut lambda = vec![0.0; ws.eq.len()];
    let mut mu = vec![0.0; ws.ineq.len()];
    let mut rho = settings.rho_init;
    let mut stats = SolverStats::default();
    let mut measure_prev = f64::INFINITY;
    let mut best_violation = f64::INFINITY;
    let mut stalled = 0usize;
    let mut termination = Termination::IterationLimit;

    for outer in 0..settings.max_outer {
        stats.outer_iterations = outer + 1;
        let inner_tol = 0.5 * settings.tol_kkt;
        stats.inner_iterations += inner_solve(nlp, &mut z, &lambda, &mu, rho, inner_tol, settings, &mut ws);

        nlp.equalities(&z, &mut ws.eq);
        nlp.inequalities(&z, &mut ws.ineq);
        let mut violation: f64 = 0.0;
        let mut measure: f64 = 0.0;
        for (l, row) in lambda.iter_mut().zip(&ws.eq) {
            violation = violation.max(row.value.abs());
            *l += rho * row.value;
        }
        measure = measure.max(violation);
        for (m, row) in mu.iter_mut().zip(&ws.ineq) {
            violation = violation.max((-row.value).max(0.0));
            measure = measure.max(row.value.min(*m / rho).abs());
            *m = (*m - rho * row.value).max(0.0);
        }
        // With the updated multipliers the Lagrangian gradient equals the merit
        // gradient at the old ones.
        let kkt = lagrangian_residual(nlp, &z, &lambda, &mu, &mut ws);
        stats.constraint_violation = violation;
        stats.kkt_residual = kkt;
        stats.final_rho = rho;

        if violation <= settings.tol_feas && kkt <= settings.tol_kkt && measure <= settings.tol_kkt {
            termination = Termination::Converged;
            break;
        }
        if measure > 0.25 * measure_prev {
            rho = (10.0 * rho).min(settings.rho_max);
        }
        measure_prev = measure;

        if violation < 0.99 * best_violation {
            best_violation = violation;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if rho >= settings.rho_max && stalled >= 10 && violation > settings.tol_feas {
            termination = Termination::Infeasible;
            break;
        }
    }
    AlOutput { z, lambda, mu, stats, termination }
}

fn lagrangian_residual<P: BandedNlp>(nlp: &P, z: &[f64], lambda: &[f64], mu: &[f64], ws: &mut Workspace) -> f64 {
    nlp.objective_gradient(z, &mut ws.grad);
    for (l, row) in lambda.iter().zip(&ws.eq) {
        for (i, c) in row.entries() {
            ws.grad[i] += l * c;
        }
    }
    for (m, row) in mu.iter().zip(&ws.ineq) {
        for (i, c) in row.entries() {
            ws.grad[i] -= m * c;
        }
    }
    projected_gradient_norm(z, &ws.grad, nlp.lower(), nlp.upper())
}

fn projected_gradient_norm(z: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..z.len() {
        let p = (z[i] - g[i]).max(lo[i]).min(hi[i]);
        r = r.max((z[i] - p).abs());
    }
    r
}

fn merit<P: BandedNlp>(nlp: &P, z: &[f64], lambda: &[f64], mu: &[f64], rho: f64, ws: &mut Workspace) -> f64 {
    nlp.equalities(z, &mut ws.eq);
    nlp.inequalities(z, &mut ws.ineq);
    let mut phi = nlp.objective(z);
    for (l, row) in lambda.iter().zip(&ws.eq) {
        phi += l * row.value + 0.5 * rho * row.value * row.value;
    }
    for (m, row) in mu.iter().zip(&ws.ineq) {
        let s = (m - rho * row.value).max(0.0);
        phi += (s * s - m * m) / (2.0 * rho);
    }
    phi
}

// Assumes ws.eq / ws.ineq hold rows evaluated at z.
fn merit_gradient<P: BandedNlp>(nlp: &P, z: &[f64], lambda: &[f64], mu: &[f64], rho: f64, ws: &mut Workspace) {
    nlp.objective_gradient(z, &mut ws.grad);
    for (l, row) in lambda.iter().zip(&ws.eq) {
        let w = l + rho * row.value;
        for (i, c) in row.entries() {
            ws.grad[i] += w * c;
        }
    }
    for (m, row) in mu.iter().zip(&ws.ineq) {
        let s = (m - rho * row.value).max(0.0);
        if s > 0.0 {
            for (i, c) in row.entries() {
                ws.grad[i] -= s * c;
            }
        }
    }
}

fn assemble_hessian<P: BandedNlp>(nlp: &P, z: &[f64], mu: &[f64], rho: f64, curvature: bool, ws: &mut Workspace) {
    ws.hess.clear();
    nlp.objective_hessian(z, &mut ws.hess);
    for row in &ws.eq {
        add_outer(&mut ws.hess, row, rho);
    }
    for (m, row) in mu.iter().zip(&ws.ineq) {
        let s = m - rho * row.value;
        if s > 0.0 {
            add_outer(&mut ws.hess, row, rho);
            if curvature {
                if let Some((idx, h)) = row.curv {
                    for a in 0..2 {
                        for b in 0..=a {
                            ws.hess.add(idx[a], idx[b], -s * h[a][b]);
                        }
                    }
                }
            }
        }
    }
}

fn add_outer(h: &mut BandedSym, row: &Row, scale: f64) {
    for a in 0..row.len {
        for b in 0..=a {
            h.add(row.idx[a], row.idx[b], scale * row.coef[a] * row.coef[b]);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn inner_solve<P: BandedNlp>(
    nlp: &P,
    z: &mut Vec<f64>,
    lambda: &[f64],
    mu: &[f64],
    rho: f64,
    tol: f64,
    settings: &SolverSettings,
    ws: &mut Workspace,
) -> usize {
    let n = z.len();
    let lo = nlp.lower();
    let hi = nlp.upper();
    let mut phi = merit(nlp, z, lambda, mu, rho, ws);
    let mut iters = 0;
    while iters < settings.max_inner {
        merit_gradient(nlp, z, lambda, mu, rho, ws);
        let pg = projected_gradient_norm(z, &ws.grad, lo, hi);
        if pg <= tol {
            break;
        }
        iters += 1;
        let eps = pg.min(1e-6);

        let mut factored = false;
        let mut shift = 0.0;
        let mut curvature = settings.exact_curvature;
        for _attempt in 0..12 {
            assemble_hessian(nlp, z, mu, rho, curvature, ws);
            let scale = ws.hess.max_diag().max(1.0);
            for i in 0..n {
                let active = ws.fixed[i]
                    || (z[i] - lo[i] <= eps && ws.grad[i] > 0.0)
                    || (hi[i] - z[i] <= eps && ws.grad[i] < 0.0);
                if active {
                    let d = ws.hess.get(i, i).max(1e-12 * scale);
                    ws.hess.pin(i, d);
                    ws.dir[i] = if ws.fixed[i] { 0.0 } else { -ws.grad[i] };
                } else {
                    if shift > 0.0 {
                        ws.hess.add(i, i, shift);
                    }
                    ws.dir[i] = -ws.grad[i];
                }
            }
            if ws.hess.factor().is_ok() {
                factored = true;
                break;
            }
            if curvature {
                curvature = false;
            } else {
                shift = if shift == 0.0 { 1e-10 * scale } else { shift * 100.0 };
            }
        }
        if !factored {
            // steepest descent fallback
            for i in 0..n {
                ws.dir[i] = if ws.fixed[i] { 0.0 } else { -ws.grad[i] };
            }
        } else {
            ws.hess.solve_in_place(&mut ws.dir);
        }

        // Armijo search along the projection arc.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let mut decrease = 0.0;
            for i in 0..n {
                let t = (z[i] + alpha * ws.dir[i]).max(lo[i]).min(hi[i]);
                ws.trial[i] = t;
                decrease += ws.grad[i] * (t - z[i]);
            }
            if decrease >= 0.0 {
                alpha *= 0.5;
                continue;
            }
            let trial = core::mem::take(&mut ws.trial);
            let phi_trial = merit(nlp, &trial, lambda, mu, rho, ws);
            ws.trial = trial;
            if phi_trial <= phi + 1e-4 * decrease {
                core::mem::swap(z, &mut ws.trial);
                phi = phi_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // restore rows at z for the caller
            nlp.equalities(z, &mut ws.eq);
            nlp.inequalities(z, &mut ws.ineq);
            break;
        }
    }
    iters
}
