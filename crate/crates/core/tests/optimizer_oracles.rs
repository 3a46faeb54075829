use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rendezvous_core::dynamics::{BodyParams, BodyState, TargetState, ThrusterLayout, Wrench};
use rendezvous_core::kos::KosState;
use rendezvous_core::optimizer::{
    build_objective, duration_candidates, objective_gradient, plan, select_best, solve, solve_candidate, OptError,
    OptProblem, PlanError, PlanSetup, SearchMode,
};

fn setup(omega: f64) -> PlanSetup {
    let body = BodyParams::default();
    let layout = ThrusterLayout::square(0.3, 0.4, 0.3).unwrap();
    let target = TargetState { omega, ..TargetState::default() };
    PlanSetup::new(body, &layout, target, BodyState::at_rest(1.0, 0.0, 0.0), 0.8)
}

fn short_problem(n: usize) -> OptProblem {
    let mut p = setup(0.1).problem_for(n as f64 * 0.1, 135f64.to_radians());
    p.kos_enabled = false;
    p.wrench_min = Wrench::new(-1e3, -1e3, -1e3);
    p.wrench_max = Wrench::new(1e3, 1e3, 1e3);
    p
}

fn random_trajectory(n: usize, seed: u64) -> (Vec<BodyState>, Vec<Wrench>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = || rng.random_range(-1.0..1.0);
    let states = (0..=n).map(|_| BodyState::new(s(), s(), s(), s(), s(), s())).collect();
    let wrenches = (0..n).map(|_| Wrench::new(s(), s(), s())).collect();
    (states, wrenches)
}

fn flatten(states: &[BodyState], wrenches: &[Wrench]) -> Vec<f64> {
    let mut z = Vec::new();
    for (k, s) in states.iter().enumerate() {
        z.extend(s.to_array());
        if k < wrenches.len() {
            z.extend(wrenches[k].to_array());
        }
    }
    z
}

fn unflatten(z: &[f64]) -> (Vec<BodyState>, Vec<Wrench>) {
    let n = (z.len() - 6) / 9;
    let states = (0..=n).map(|k| BodyState::from_slice(&z[9 * k..])).collect();
    let wrenches = (0..n).map(|k| Wrench::new(z[9 * k + 6], z[9 * k + 7], z[9 * k + 8])).collect();
    (states, wrenches)
}

fn objective(z: &[f64], p: &OptProblem) -> f64 {
    let (s, w) = unflatten(z);
    build_objective(&s, &w, p).total()
}

#[test]
fn gradient_matches_central_differences() {
    let p = setup(0.1).problem_for(3.0, 1.0);
    let (states, wrenches) = random_trajectory(p.n, 5);
    let g = objective_gradient(&states, &wrenches, &p);
    let z = flatten(&states, &wrenches);
    assert_eq!(g.len(), z.len());
    let h = 1e-6;
    for i in 0..z.len() {
        let (mut a, mut b) = (z.clone(), z.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (objective(&a, &p) - objective(&b, &p)) / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + fd.abs()), "component {i}: {fd} vs {}", g[i]);
    }
}

/// Equality-constrained QP solved through its dense KKT system.
fn lq_oracle(p: &OptProblem) -> Vec<f64> {
    let n = p.n;
    let nz = 9 * n + 6;
    let (m, inertia) = (p.body.mass(), p.body.inertia());
    let mut h = DMatrix::<f64>::zeros(nz, nz);
    let mut c = DVector::<f64>::zeros(nz);
    for k in 0..n {
        let b = 9 * k;
        h[(b + 3, b + 3)] = p.dt * m;
        h[(b + 4, b + 4)] = p.dt * m;
        h[(b + 5, b + 5)] = p.dt * inertia;
        for j in 6..9 {
            h[(b + j, b + j)] = 2.0 * p.w_u * p.dt;
        }
    }
    let goal = p.x_goal.to_array();
    for j in 0..6 {
        h[(9 * n + j, 9 * n + j)] = 2.0 * p.w_goal;
        c[9 * n + j] = -2.0 * p.w_goal * goal[j];
    }
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let init = p.x_init.to_array();
    for j in 0..6 {
        rows.push((vec![(j, 1.0)], init[j]));
    }
    rows.push((vec![(9 * n + 2, 1.0)], p.theta_finish));
    let inv = [1.0 / m, 1.0 / m, 1.0 / inertia];
    for k in 0..n {
        let (b, nb) = (9 * k, 9 * (k + 1));
        for j in 0..3 {
            rows.push((vec![(nb + j, 1.0), (b + j, -1.0), (b + 3 + j, -p.dt)], 0.0));
            rows.push((vec![(nb + 3 + j, 1.0), (b + 3 + j, -1.0), (b + 6 + j, -p.dt * inv[j])], 0.0));
        }
    }
    let nc = rows.len();
    let mut kkt = DMatrix::<f64>::zeros(nz + nc, nz + nc);
    let mut rhs = DVector::<f64>::zeros(nz + nc);
    kkt.view_mut((0, 0), (nz, nz)).copy_from(&h);
    rhs.rows_mut(0, nz).copy_from(&(-&c));
    for (r, (entries, value)) in rows.iter().enumerate() {
        for &(i, a) in entries {
            kkt[(nz + r, i)] = a;
            kkt[(i, nz + r)] = a;
        }
        rhs[nz + r] = *value;
    }
    let sol = kkt.lu().solve(&rhs).expect("KKT system is nonsingular");
    sol.rows(0, nz).iter().copied().collect()
}

#[test]
fn unconstrained_lq_matches_dense_kkt() {
    let mut p = short_problem(30);
    p.settings.tol_kkt = 1e-9;
    p.settings.tol_feas = 1e-11;
    let t = solve(&p, None).expect("LQ problem converges");
    let z = flatten(&t.states, &t.wrenches);
    let oracle = lq_oracle(&p);
    let diff = z.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-5, "max deviation from KKT solution {diff}");
    let j_oracle = objective(&oracle, &p);
    assert!((t.objective_value - j_oracle).abs() <= 1e-7 * (1.0 + j_oracle), "{} vs {j_oracle}", t.objective_value);
}

#[test]
fn converged_plan_satisfies_dynamics_and_bounds() {
    let s = setup(0.3);
    let c = duration_candidates(&s.target, 135f64.to_radians(), 1, s.min_duration, &s.static_ladder)[0];
    let t = solve_candidate(&s, 135f64.to_radians(), c.t_total, None).expect("nominal candidate converges");
    assert!(t.converged);
    assert!(t.max_defect(&s.body) <= 1e-8, "{}", t.max_defect(&s.body));
    assert_eq!(t.states[0], s.x_init);
    assert!((t.final_state().theta - t.theta_finish).abs() < 1e-12);
    let (lo, hi) = (s.wrench_min.to_array(), s.wrench_max.to_array());
    for w in &t.wrenches {
        for (i, v) in w.to_array().into_iter().enumerate() {
            assert!(v >= lo[i] - 1e-9 && v <= hi[i] + 1e-9);
        }
    }
    let g_min = t.kos_distances(&s.target, &s.kos_cfg).into_iter().fold(f64::INFINITY, f64::min);
    assert!(g_min >= -1e-6, "{g_min}");
    let labels = &t.kos_states;
    if let Some(k) = labels.iter().position(|&l| l == KosState::StateII) {
        assert!(labels[k..].iter().all(|&l| l == KosState::StateII), "State II is latched");
    }
}

#[test]
fn plan_matches_exhaustive_candidate_search() {
    let s = setup(0.5);
    let th = 135f64.to_radians();
    let candidates = duration_candidates(&s.target, th, 2, s.min_duration, &s.static_ladder);
    let exhaustive: Vec<_> = candidates.iter().map(|c| (c.t_total, solve_candidate(&s, th, c.t_total, None))).collect();
    let oracle = exhaustive
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .min_by(|a, b| a.objective_value.total_cmp(&b.objective_value))
        .expect("some candidate converges")
        .clone();
    let best = plan(th, &s, 2, SearchMode::ColdStart).unwrap();
    assert_eq!(best.duration(), oracle.duration());
    assert_eq!(best.objective_value, oracle.objective_value);
    assert_eq!(select_best(exhaustive).unwrap().objective_value, oracle.objective_value);
}

#[test]
fn candidates_are_phase_consistent() {
    let target = TargetState { omega: 0.1, theta0: 0.2, ..TargetState::default() };
    let th = 2.0;
    for c in duration_candidates(&target, th, 4, 20.0, &[]) {
        assert!(c.t_total >= 20.0);
        let phase = (target.theta_at(c.t_total) - th).rem_euclid(std::f64::consts::TAU);
        assert!(phase < 1e-9 || std::f64::consts::TAU - phase < 1e-9);
    }
    let backwards = TargetState { omega: -0.3, ..TargetState::default() };
    let c = duration_candidates(&backwards, 1.0, 3, 0.0, &[]);
    assert!(c.windows(2).all(|w| w[1].t_total > w[0].t_total));
    let still = TargetState { omega: 0.0, ..TargetState::default() };
    let ladder: Vec<f64> = duration_candidates(&still, 1.0, 2, 20.0, &[20.0, 40.0]).iter().map(|c| c.t_total).collect();
    assert_eq!(ladder, [20.0, 40.0]);
}

#[test]
fn zero_wrench_box_fails_every_candidate() {
    let mut s = setup(0.5);
    s.wrench_min = Wrench::ZERO;
    s.wrench_max = Wrench::ZERO;
    s.settings.max_outer = 40;
    match plan(135f64.to_radians(), &s, 2, SearchMode::ColdStart) {
        Err(PlanError::AllCandidatesFailed { attempts }) => {
            assert_eq!(attempts.len(), 2);
            assert!(attempts
                .iter()
                .all(|a| matches!(a.error, OptError::Infeasible { .. } | OptError::NotConverged { .. })));
        }
        other => panic!("expected every candidate to fail, got {:?}", other.map(|t| t.duration())),
    }
}

#[test]
fn invalid_problems_rejected() {
    let mut p = short_problem(5);
    p.kos_schedule.pop();
    assert!(matches!(solve(&p, None), Err(OptError::InvalidProblem(_))));
    let mut p = short_problem(5);
    p.wrench_min = Wrench::new(0.1, -1.0, -1.0);
    assert!(matches!(solve(&p, None), Err(OptError::InvalidProblem(_))));
}
