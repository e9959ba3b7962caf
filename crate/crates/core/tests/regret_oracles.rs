mod support;

use nalgebra::{DMatrix, DVector};
use pmhe::design::*;
use pmhe::model::*;
use pmhe::regret::*;
use pmhe::simulation::{Scenario, Simulation};
use pmhe::solver::*;
use pmhe::{reactor, BregmanGeometry};
use support::*;

fn scalar_sim(steps: usize) -> Simulation {
    let mut sc = Scenario::reactor();
    sc.system = LtiSystem::new(
        DMatrix::from_element(1, 1, 0.5),
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
    )
    .unwrap();
    sc.horizon = 1;
    sc.weights = StageWeights::output_only(DMatrix::identity(1, 1), 1);
    sc.constraints = StateConstraints::none(1);
    sc.x0 = DVector::from_element(1, 1.0);
    sc.steps = steps;
    Simulation::run(&sc).unwrap()
}

fn scalar_trace(sim: &Simulation, it: usize) -> EstimateTrace {
    let geom = BregmanGeometry::quadratic(DMatrix::identity(1, 1), DMatrix::zeros(0, 0)).unwrap();
    let schedule = StepSchedule::new(StepKind::Constant, 0.5, Budget::Constant(it)).unwrap();
    let x0 = DVector::zeros(1);
    let mut est = AnytimePmhe::new(sim.system.clone(), DMatrix::zeros(1, 1), geom, schedule, x0.clone()).unwrap();
    EstimateTrace::collect(&mut est, sim, &x0).unwrap()
}

#[test]
fn hand_computed_three_step_instance() {
    let sim = scalar_sim(3);
    let trace = scalar_trace(&sim, 0);
    let comp = ComparatorSequence::true_states(&sim).unwrap();
    let geom = BregmanGeometry::quadratic(DMatrix::identity(1, 1), DMatrix::zeros(0, 0)).unwrap();
    let gain = DMatrix::zeros(1, 1);
    let rep = regret(&trace, &comp, &sim, &geom, &gain).unwrap();
    assert_eq!(rep.regret, vec![0.5, 0.625, 0.65625]);
    assert_eq!(rep.average, vec![0.5, 0.3125, 0.21875]);
    assert_eq!(rep.variation, vec![0.0, 0.0, 0.0]);
    assert_eq!(rep.constants.gf, 1.0);
    assert_eq!(rep.constants.m, 1.5);
    assert_eq!(rep.constants.dmax, 0.5);
    assert_eq!(rep.final_regret(), Some(0.65625));
    let csv = rep.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("T,R,R/T,C_T,bound2,bound3,bound4"));
    assert_eq!(
        lines.next(),
        Some("1,5.0000000000000000e-1,5.0000000000000000e-1,0.0000000000000000e0,,,")
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn comparing_against_own_iterates_gives_zero() {
    let (sim, trace) = reactor_run(StepKind::Constant, 5);
    let cert = reactor_certificate();
    let mut values: Vec<StackedVector> = trace
        .records
        .iter()
        .map(|r| r.step.iterates[r.step.min_loss_index].clone())
        .collect();
    values.push(sim.true_stacked(sim.steps + 1).unwrap());
    let comp = ComparatorSequence::custom(values);
    let rep = regret(&trace, &comp, &sim, &cert.geometry().unwrap(), &cert.gain).unwrap();
    assert!(rep.regret.iter().all(|r| *r == 0.0));
}

#[test]
fn true_state_comparator_sums_the_minimum_losses() {
    let (sim, trace) = reactor_run(StepKind::InverseSqrt, 3);
    let cert = reactor_certificate();
    let comp = ComparatorSequence::true_states(&sim).unwrap();
    let rep = regret(&trace, &comp, &sim, &cert.geometry().unwrap(), &cert.gain).unwrap();
    let mut acc = 0.0;
    for (r, rec) in rep.regret.iter().zip(&trace.records) {
        acc += rec.step.losses.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(rel_close(*r, acc, 1e-12));
    }
    assert!(rep.variation.iter().all(|c| c.abs() < 1e-12));
}

#[test]
fn variation_counts_deviations_from_the_transition() {
    let sim = Simulation::run(&Scenario::reactor()).unwrap();
    let cert = reactor_certificate();
    let mut r = rng(20);
    let mut clean = vec![StackedVector::from_head(sim.context(1).polytope.layout(), &reactor::initial_state()).unwrap()];
    let mut perturbed = clean.clone();
    let mut deltas = Vec::new();
    for k in 1..=sim.steps {
        let (ctx, next) = (sim.context(k), sim.context(k + 1));
        let step = transition(&sim.system, &cert.gain, &clean[k - 1], ctx, next).unwrap();
        clean.push(step);
        let moved = transition(&sim.system, &cert.gain, &perturbed[k - 1], ctx, next).unwrap();
        let delta = vector(&mut r, 3, 0.1);
        deltas.push(delta.norm());
        perturbed.push(StackedVector::new(moved.layout(), moved.data() + delta).unwrap());
    }
    let c0 = comparator_variation(&ComparatorSequence::custom(clean), &sim, &cert.gain).unwrap();
    assert!(c0.iter().all(|c| *c == 0.0));
    let c1 = comparator_variation(&ComparatorSequence::custom(perturbed), &sim, &cert.gain).unwrap();
    let mut acc = 0.0;
    for (c, d) in c1.iter().zip(&deltas) {
        acc += d;
        assert!(rel_close(*c, acc, 1e-12));
    }
}

#[test]
fn empirical_constants_match_a_direct_scan() {
    let (sim, trace) = reactor_run(StepKind::Constant, 5);
    let cert = reactor_certificate();
    let geom = cert.geometry().unwrap();
    let comp = ComparatorSequence::true_states(&sim).unwrap();
    let got = empirical_constants(&trace, Some(&comp), &geom, &sim, &cert.gain).unwrap();
    let p = &cert.p;
    let (mut gf, mut m1, mut m2, mut dmax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for rec in &trace.records {
        let k = rec.step.k;
        let ctx = sim.context(k);
        let mut pts: Vec<DVector<f64>> = rec.step.iterates.iter().map(|z| z.data().clone()).collect();
        pts.push(comp.at(k).data().clone());
        for z in &pts {
            let h = ctx.window.len();
            let pred: Vec<f64> = (0..h).map(|l| (reactor::system().c() * reactor::system().a().pow(l as u32) * z)[0]).collect();
            let ys: Vec<f64> = ctx.window.ys().map(|y| y[0]).collect();
            let g: DVector<f64> = (0..h)
                .map(|l| (reactor::system().c() * reactor::system().a().pow(l as u32)).transpose() * (0.01 * (pred[l] - ys[l])))
                .fold(DVector::zeros(3), |a, b| a + b);
            gf = gf.max(g.norm());
            m1 = m1.max((p * z).norm());
            let phi = if ctx.window.is_full() {
                let s = reactor::system();
                s.a() * z + &cert.gain * (ctx.window.y(0) - s.c() * z)
            } else {
                z.clone()
            };
            m2 = m2.max((p * phi).norm());
        }
        for a in &pts {
            for b in &pts {
                let d = a - b;
                dmax = dmax.max(0.5 * d.dot(&(p * &d)));
            }
        }
    }
    assert!(rel_close(got.gf, gf, 1e-12));
    assert!(rel_close(got.m, m1 + m2, 1e-12));
    assert!(rel_close(got.dmax, dmax, 1e-12));
}

#[test]
fn bound_formulas_on_small_cases() {
    let cert = reactor_certificate();
    let consts = EmpiricalConstants { gf: 2.0, m: 3.0, dmax: 5.0 };
    let s = make_schedule(&cert, StepKind::Constant, Budget::Constant(4), true).unwrap();
    let eta = s.eta(1, 0);
    let want = 5.0 / (4.0 * eta) + 4.0 / (2.0 * cert.sigma) * eta + 3.0 * 0.7 / (4.0 * eta);
    assert!(rel_close(bound_theorem2(&s, cert.sigma, &consts, 0.7, 1).unwrap(), want, 1e-14));
    let zero = EmpiricalConstants { gf: 0.0, m: 3.0, dmax: 5.0 };
    for t in [1, 7, 40] {
        let b = bound_theorem2(&s, cert.sigma, &zero, 0.0, t).unwrap();
        assert!(rel_close(b, 5.0 / s.step_sum(t), 1e-14));
    }
    assert!(bound_theorem2(&s, cert.sigma, &consts, 0.0, 0).is_err());
    let grow = StepSchedule::new(StepKind::Constant, eta, Budget::Sequence(vec![1, 2])).unwrap();
    assert!(matches!(
        bound_theorem2(&grow, cert.sigma, &consts, 0.0, 2),
        Err(pmhe::Error::NotApplicable(_))
    ));

    let one = make_schedule(&cert, StepKind::InverseSqrt, Budget::Constant(1), true).unwrap();
    let twenty = make_schedule(&cert, StepKind::InverseSqrt, Budget::Constant(20), true).unwrap();
    for t in [1, 10, 100] {
        let b1 = bound_theorem3(&cert, &one, &consts, 0.3, t).unwrap();
        let b20 = bound_theorem3(&cert, &twenty, &consts, 0.3, t).unwrap();
        assert!(rel_close(b20, b1 / 20.0, 1e-14));
        let want = (t as f64).sqrt() * cert.lf / cert.sigma * (5.0 + 3.0 * 0.3);
        assert!(rel_close(b1, want, 1e-14));
    }
    assert!(bound_theorem3(&cert, &s, &consts, 0.3, 10).is_err());
}

#[test]
fn stable_comparator_bound_edge_cases() {
    let cert = reactor_certificate();
    let x = reactor::initial_state();
    let comp = |beta: f64, initial: DVector<f64>| ComparatorSequence {
        kind: ComparatorKind::Ges { alpha: 2.0, beta, initial },
        values: Vec::new(),
    };
    assert_eq!(bound_theorem4(&cert, &comp(0.5, x.clone()), &x, &x).unwrap(), 0.0);
    let zbar = DVector::zeros(3);
    let own = cert.alpha.powi(2) * cert.beta_e / (1.0 - cert.beta_e) * x.norm_squared();
    let b = bound_theorem4(&cert, &comp(0.0, x.clone()), &x, &zbar).unwrap();
    assert!(rel_close(b, 0.5 * cert.lf * own, 1e-12));
    let other = 4.0 * 0.25 / 0.75 * x.norm_squared();
    let b = bound_theorem4(&cert, &comp(0.5, zbar.clone()), &x, &zbar).unwrap();
    assert!(rel_close(b, 0.5 * cert.lf * (own + other), 1e-12));
    assert!(bound_theorem4(&cert, &comp(1.0, zbar.clone()), &x, &zbar).is_err());
    let truth = ComparatorSequence::custom(Vec::new());
    assert!(bound_theorem4(&cert, &truth, &x, &zbar).is_err());
}

#[test]
fn rmse_cases() {
    let cert = reactor_certificate();
    let sim = Simulation::run(&Scenario::reactor()).unwrap();
    let x0 = reactor::initial_state();
    let mut obs = LuenbergerObserver::new(reactor::system(), cert.gain.clone(), x0.clone()).unwrap();
    let exact = EstimateTrace::collect(&mut obs, &sim, &x0).unwrap();
    assert!(rmse(&exact, 2, 100).unwrap() < 1e-12);

    let mut unit = exact.clone();
    for rec in &mut unit.records {
        rec.error = Some(DVector::from_vec(vec![0.6, 0.8, 0.0]));
    }
    assert!(rel_close(rmse(&unit, 2, 100).unwrap(), 1.0, 1e-15));
    unit.initial_error = Some(DVector::from_vec(vec![3.0, 0.0, 0.0]));
    assert!(rel_close(rmse(&unit, 0, 1).unwrap(), 5.0f64.sqrt(), 1e-15));
    assert!(rmse(&unit, 2, 101).is_err());
    assert!(rmse(&unit, 3, 2).is_err());

    let (_, trace) = reactor_run(StepKind::Constant, 5);
    assert!(rel_close(rmse(&trace, 2, 100).unwrap(), 0.74727613932, 1e-9));
}

#[test]
fn reactor_regret_is_pinned() {
    let cert = reactor_certificate();
    let comp_of = |sim: &Simulation| ComparatorSequence::true_states(sim).unwrap();
    for (kind, it, want) in [
        (StepKind::Constant, 1, 24.5135),
        (StepKind::Constant, 5, 0.37902),
        (StepKind::Constant, 20, 0.032171),
        (StepKind::Constant, 200, 0.020280),
        (StepKind::InverseSqrt, 1, 32.2978),
        (StepKind::InverseSqrt, 5, 0.40111),
        (StepKind::InverseSqrt, 20, 0.033510),
        (StepKind::InverseSqrt, 200, 0.027090),
    ] {
        let (sim, trace) = reactor_run(kind, it);
        let rep = regret(&trace, &comp_of(&sim), &sim, &cert.geometry().unwrap(), &cert.gain).unwrap();
        let got = rep.final_regret().unwrap();
        assert!((got - want).abs() < 5e-5 * want.max(1.0) , "{kind:?} it={it}: {got}");
    }
}

#[test]
fn average_regret_shrinks_and_stays_under_the_bounds() {
    let cert = reactor_certificate();
    let geom = cert.geometry().unwrap();
    for it in [5, 20] {
        let (sim, trace) = reactor_run(StepKind::InverseSqrt, it);
        let comp = ComparatorSequence::true_states(&sim).unwrap();
        let rep = regret(&trace, &comp, &sim, &geom, &cert.gain).unwrap();
        assert!(rep.average[99] < rep.average[49] && rep.average[49] < rep.average[9]);
        let schedule = make_schedule(&cert, StepKind::InverseSqrt, Budget::Constant(it), true).unwrap();
        for t in 1..=100 {
            let b2 = bound_theorem2(&schedule, cert.sigma, &rep.constants, rep.variation[t - 1], t).unwrap();
            let b3 = bound_theorem3(&cert, &schedule, &rep.constants, rep.variation[t - 1], t).unwrap();
            assert!(rep.regret[t - 1] <= b2 && rep.regret[t - 1] <= b3, "it={it} T={t}");
        }
    }
}

#[test]
fn observer_comparator_is_feasible_and_enveloped() {
    let sim = Simulation::run(&Scenario::reactor()).unwrap();
    let sys = reactor::system();
    let gain = place_gain(&sys, &[0.3, 0.4, 0.5].map(|p| nalgebra::Complex::new(p, 0.0))).unwrap();
    let x0 = reactor::initial_estimate();
    let comp = ComparatorSequence::observer(&sim, &gain, &x0).unwrap();
    comp.validate(&sim).unwrap();
    let ComparatorKind::Ges { alpha, beta, .. } = comp.kind.clone() else { panic!() };
    assert!(alpha >= 1.0 && beta < 1.0);
    let e0 = (reactor::initial_state() - &x0).norm();
    for k in 1..=sim.steps {
        let e = sim.true_stacked(k).unwrap().distance(comp.at(k));
        assert!(e <= alpha * beta.powi(k as i32) * e0 * (1.0 + 1e-12) + 1e-12 * e0);
    }
    let cert = reactor_certificate();
    let c = comparator_variation(&comp, &sim, &cert.gain).unwrap();
    assert!(c[99] - c[49] < 1e-8, "{} {}", c[49], c[99]);
}
