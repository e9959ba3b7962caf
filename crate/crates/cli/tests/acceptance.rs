#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Complex, DMatrix, DVector};
use oracle::enumerate_qp;
use pmhe::design::horizon_problem;
use pmhe::model::{Layout, PolytopeSet, ResidualMode, StackedVector, StageWeights, StateConstraints};
use pmhe::regret::{bound_theorem3, bound_theorem4, regret, ComparatorKind};
use pmhe::simulation::{Scenario, Simulation, StepContext};
use pmhe::solver::apriori_operator;
use pmhe::{
    certify, linalg, make_schedule, place_gain, reactor, solve_lmi, AnytimePmhe, BregmanGeometry, Budget,
    ComparatorSequence, EstimateTrace, Estimator, Gmhe, LtiSystem, MeasurementWindow, OptimalPmhe,
    SmoothnessMode, StabilityCertificate, StepKind, StepSchedule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);
type Check<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn certificate() -> StabilityCertificate {
    let sys = reactor::system();
    let gain = place_gain(&sys, &reactor::poles()).unwrap();
    let q = DMatrix::identity(3, 3);
    let p = solve_lmi(&sys, &gain, &q).unwrap();
    let prob = horizon_problem(&sys, reactor::HORIZON, &reactor::weights()).unwrap();
    certify(&sys, &gain, &p, None, &q, &prob, SmoothnessMode::Formula).unwrap()
}

fn anytime(cert: &StabilityCertificate, sim: &Simulation, kind: StepKind, it: usize) -> EstimateTrace {
    let schedule = make_schedule(cert, kind, Budget::Constant(it), true).unwrap();
    let x0 = reactor::initial_estimate();
    let mut est = AnytimePmhe::from_certificate(reactor::system(), cert, schedule, x0.clone()).unwrap();
    EstimateTrace::collect(&mut est, sim, &x0).unwrap()
}

fn true_regret(cert: &StabilityCertificate, sim: &Simulation, trace: &EstimateTrace) -> pmhe::RegretReport {
    let comp = ComparatorSequence::true_states(sim).unwrap();
    regret(trace, &comp, sim, &cert.geometry().unwrap(), &cert.gain).unwrap()
}

fn ges_envelope(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let start = Instant::now();
    let e0 = (reactor::initial_state() - reactor::initial_estimate()).norm_squared();
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for it in [1, 5, 20, 200] {
        let trace = anytime(cert, sim, StepKind::Constant, it);
        for rec in &trace.records {
            let k = rec.step.k;
            let zk = sim.true_stacked(k).unwrap();
            let env = cert.gamma / cert.sigma * cert.beta_e.powi(k as i32) * e0;
            for z in &rec.step.iterates {
                worst = worst.max(zk.distance(z).powi(2) - env);
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-8 && secs < 5.0,
        format!("{checked} iterates, max |z_k - z|^2 - envelope = {worst:.3e}, {secs:.2} s"),
    )
}

fn descent_lemma(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let geom = cert.geometry().unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for it in [1, 5, 20, 200] {
        let trace = anytime(cert, sim, StepKind::Constant, it);
        for rec in &trace.records {
            let zk = sim.true_stacked(rec.step.k).unwrap();
            for (i, eta) in rec.step.step_sizes.iter().enumerate() {
                let (a, b) = (&rec.step.iterates[i], &rec.step.iterates[i + 1]);
                let rhs = geom.distance(&zk, a).unwrap()
                    + 0.5 * (eta * cert.lf - cert.sigma) * (b.data() - a.data()).norm_squared();
                worst = worst.max(geom.distance(&zk, b).unwrap() - rhs);
                steps += 1;
            }
        }
    }
    (worst <= 1e-8, format!("{steps} mirror steps, max violation {worst:.3e}"))
}

fn regret_dominance(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut finals = Vec::new();
    let mut max_c: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for it in [1, 5, 20] {
        let trace = anytime(cert, sim, StepKind::InverseSqrt, it);
        let rep = true_regret(cert, sim, &trace);
        let schedule = make_schedule(cert, StepKind::InverseSqrt, Budget::Constant(it), true).unwrap();
        for t in 1..=100 {
            let c = rep.variation[t - 1];
            max_c = max_c.max(c.abs());
            let factor = (t as f64).sqrt() / it as f64 * cert.lf / cert.sigma;
            let direct = factor * rep.constants.dmax;
            let b3 = bound_theorem3(cert, &schedule, &rep.constants, c, t).unwrap();
            ok &= (b3 - factor * (rep.constants.dmax + rep.constants.m * c)).abs() <= 1e-12 * b3;
            ok &= rep.regret[t - 1] <= direct;
            ratio = ratio.max(rep.regret[t - 1] / direct);
        }
        finals.push(rep.final_regret().unwrap());
    }
    ok &= max_c <= 1e-9;
    let decreasing = finals.windows(2).all(|w| w[1] < w[0]);
    let secs = start.elapsed().as_secs_f64();
    (
        ok && decreasing && secs < 10.0,
        format!(
            "C_T max {max_c:.1e}, max R/bound {ratio:.3}, R(100) for it=1,5,20: {:.5}, {:.5}, {:.5}, {secs:.2} s",
            finals[0], finals[1], finals[2]
        ),
    )
}

fn anytime_beats_optimal(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let r20 = true_regret(cert, sim, &anytime(cert, sim, StepKind::Constant, 20)).final_regret().unwrap();
    let x0 = reactor::initial_estimate();
    let mut opt = OptimalPmhe::from_certificate(reactor::system(), cert, x0.clone()).unwrap();
    let trace = EstimateTrace::collect(&mut opt, sim, &x0).unwrap();
    let ropt = true_regret(cert, sim, &trace).final_regret().unwrap();
    (r20 < ropt, format!("R(100) anytime it=20 {r20:.6} < exact {ropt:.6}"))
}

fn random_instance(r: &mut ChaCha8Rng) -> (LtiSystem, MeasurementWindow, StateConstraints, BregmanGeometry, usize) {
    let n = r.random_range(1..=3);
    let horizon = r.random_range(1..=2);
    let mat = |r: &mut ChaCha8Rng, a: usize, b: usize| DMatrix::from_fn(a, b, |_, _| r.random_range(-1.0..1.0));
    let spd = |r: &mut ChaCha8Rng, d: usize| {
        let m = mat(r, d, d);
        &m * m.transpose() + DMatrix::identity(d, d) * 0.3
    };
    let sys = LtiSystem::new(mat(r, n, n), mat(r, n, 1), mat(r, 1, n)).unwrap();
    let mut window = MeasurementWindow::new(horizon);
    let mut x = DVector::from_fn(n, |_, _| r.random_range(-2.0..2.0));
    for _ in 0..horizon {
        let u = DVector::from_fn(1, |_, _| r.random_range(-1.0..1.0));
        window.push(sys.output(&x), u.clone());
        x = sys.step(&x, &u);
    }
    let rows = 6 / (horizon + 1);
    let cons = StateConstraints::new(
        mat(r, rows, n),
        DVector::from_fn(rows, |_, _| r.random_range(0.05..0.5)),
    )
    .unwrap();
    let geom = BregmanGeometry::quadratic(spd(r, n), spd(r, n * horizon)).unwrap();
    (sys, window, cons, geom, n)
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    let (mut dm, mut da, mut dp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let (sys, window, cons, geom, n) = random_instance(&mut r);
        let weights = StageWeights::new(DMatrix::identity(1, 1), DMatrix::identity(n, n), ResidualMode::Free);
        let ctx = StepContext::build(&sys, &cons, &weights, &window).unwrap();
        let set: &PolytopeSet = &ctx.polytope;
        let layout = set.layout();
        let m = geom.metric(layout).unwrap();
        let d = layout.dim();
        let rand_z = |r: &mut ChaCha8Rng| {
            StackedVector::new(layout, DVector::from_fn(d, |_, _| r.random_range(-3.0..3.0))).unwrap()
        };

        let zbar = rand_z(&mut r);
        let proj = geom.project(&zbar, set).unwrap();
        let want = enumerate_qp(&m, zbar.data(), set.gmat(), set.ek()).unwrap();
        dp = dp.max((proj.data() - want).amax());

        let center = rand_z(&mut r);
        let grad = StackedVector::new(layout, ctx.problem.gradient(center.data())).unwrap();
        let eta = r.random_range(0.01..1.0);
        let got = geom.mirror_subproblem(&grad, eta, &center, set).unwrap();
        let shifted = center.data() - m.clone().cholesky().unwrap().solve(grad.data()) * eta;
        let want = enumerate_qp(&m, &shifted, set.gmat(), set.ek()).unwrap();
        dm = dm.max((got.data() - want).amax());

        let initial = DVector::from_fn(n, |_, _| r.random_range(-2.0..2.0));
        let mut opt = OptimalPmhe::new(sys.clone(), DMatrix::zeros(n, 1), geom.clone(), initial.clone()).unwrap();
        let got = opt.step(&ctx).unwrap();
        let zbar = StackedVector::from_head(layout, &initial).unwrap();
        let h = ctx.problem.hessian() + &m;
        let c = h.clone().cholesky().unwrap().solve(&(ctx.problem.linear_term() + &m * zbar.data()));
        let want = enumerate_qp(&h, &c, set.gmat(), set.ek()).unwrap();
        da = da.max((got.iterates[0].data() - want).amax());
    }
    let secs = start.elapsed().as_secs_f64();
    (
        dm <= 1e-7 && da <= 1e-7 && dp <= 1e-7 && secs < 10.0,
        format!("50 instances, max deviation mirror {dm:.1e}, exact {da:.1e}, projection {dp:.1e}, {secs:.2} s"),
    )
}

fn certificate_correctness(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let sys = reactor::system();
    let x = sys.a() - &cert.gain * sys.c();
    let lmi = x.transpose() * &cert.p * &x - &cert.p + &cert.q;
    let lmax = linalg::lambda_max(&linalg::symmetrize(&lmi));
    let mut ev: Vec<f64> = linalg::eigenvalues(&x).iter().map(|c: &Complex<f64>| c.re).collect();
    ev.sort_by(f64::total_cmp);
    let pole_err = ev.iter().zip(reactor::POLES).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let geom = cert.geometry().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000 {
        let ctx = sim.context(reactor::HORIZON + i % 90);
        let layout = ctx.polytope.layout();
        let z = |r: &mut ChaCha8Rng| {
            StackedVector::new(layout, DVector::from_fn(3, |_, _| r.random_range(-5.0..5.0))).unwrap()
        };
        let (a, b) = (z(&mut r), z(&mut r));
        let pa = apriori_operator(&sys, &cert.gain, &a, &ctx.window).unwrap();
        let pb = apriori_operator(&sys, &cert.gain, &b, &ctx.window).unwrap();
        let lhs = geom.distance(&pa, &pb).unwrap() - geom.distance(&a, &b).unwrap();
        worst = worst.max(lhs + cert.c * a.distance(&b).powi(2));
    }
    (
        lmax <= 1e-9 && pole_err <= 1e-6 && worst <= 1e-8,
        format!("LMI lambda_max {lmax:.3e}, pole error {pole_err:.1e}, 1000 pairs worst slack {worst:.1e}"),
    )
}

fn identities(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let geom = cert.geometry().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let layout = Layout::new(3, 2, ResidualMode::FixedZero);
    let mut gap: f64 = 0.0;
    for _ in 0..1000 {
        let mut z = || StackedVector::new(layout, DVector::from_fn(3, |_, _| r.random_range(-10.0..10.0))).unwrap();
        let (a, b, c) = (z(), z(), z());
        gap = gap.max(geom.three_points_gap(&a, &b, &c).unwrap().abs());
    }
    let mut truth_loss: f64 = 0.0;
    for k in 1..=sim.steps {
        let zk = sim.true_stacked(k).unwrap();
        truth_loss = truth_loss.max(sim.context(k).problem.loss(zk.data()));
    }
    let x0 = reactor::initial_estimate();
    let step = 1.0 / cert.lf;
    let schedule = StepSchedule::new(StepKind::Constant, step, Budget::Constant(1)).unwrap();
    let mut any = AnytimePmhe::new(reactor::system(), cert.gain.clone(), BregmanGeometry::euclidean(3, 0), schedule, x0.clone()).unwrap();
    let mut gd = Gmhe::new(reactor::system(), Some(cert.gain.clone()), step, Budget::Constant(1), 2, x0.clone()).unwrap();
    let a = EstimateTrace::collect(&mut any, sim, &x0).unwrap();
    let b = EstimateTrace::collect(&mut gd, sim, &x0).unwrap();
    let diff = a
        .records
        .iter()
        .zip(&b.records)
        .map(|(x, y)| (&x.step.estimate - &y.step.estimate).amax())
        .fold(0.0, f64::max);
    (
        gap <= 1e-9 && truth_loss <= 1e-9 && diff <= 1e-12,
        format!("three-points gap {gap:.1e}, f_k(truth) max {truth_loss:.1e}, GMHE vs anytime(P = I) {diff:.1e}"),
    )
}

struct Plateau {
    ok: bool,
    relative: f64,
    absolute: f64,
    bound: f64,
    final_regret: f64,
}

fn plateau_for(cert: &StabilityCertificate, sim: &Simulation, poles: [f64; 3], it: usize) -> Plateau {
    let sys = reactor::system();
    let gain = place_gain(&sys, &poles.map(|p| Complex::new(p, 0.0))).unwrap();
    let x0 = reactor::initial_estimate();
    let comp = ComparatorSequence::observer(sim, &gain, &x0).unwrap();
    let trace = anytime(cert, sim, StepKind::Constant, it);
    let rep = regret(&trace, &comp, sim, &cert.geometry().unwrap(), &cert.gain).unwrap();
    let tail = &rep.regret[49..100];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let relative = (hi - lo) / rep.regret[99].abs();
    let bound = bound_theorem4(cert, &comp, &reactor::initial_state(), &x0).unwrap();
    let ComparatorKind::Ges { beta, .. } = comp.kind else { unreachable!() };
    let below = rep.regret.iter().all(|r| *r <= bound);
    Plateau {
        ok: relative < 1e-6 && below && beta < 1.0,
        relative,
        absolute: hi - lo,
        bound,
        final_regret: rep.regret[99],
    }
}

fn constant_regret(cert: &StabilityCertificate, sim: &Simulation) -> Verdict {
    let fast = plateau_for(cert, sim, [0.3, 0.4, 0.5], 20);
    let same = plateau_for(cert, sim, reactor::POLES, 20);
    (
        fast.ok,
        format!(
            "observer comparator with poles 0.3, 0.4, 0.5, it=20: R(T) over T in [50, 100] varies {:.1e} relative ({:.1e} absolute), R(100) = {:.6e} <= bound {:.3e}\n    info: comparator with the estimator's own poles varies {:.1e} relative ({:.1e} absolute)",
            fast.relative, fast.absolute, fast.final_regret, fast.bound, same.relative, same.absolute
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noisy.toml");
    fs::write(&cfg, "[scenario]\nnoise_std = 0.02\ninput_std = 0.0\n[estimator]\nbudget = 5\nschedule = \"inverseSqrt\"\n").unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let run = Command::new(env!("CARGO_BIN_EXE_pmhe"))
            .args(["run", cfg.to_str().unwrap(), "--seed", "11", "--out-dir", out.to_str().unwrap()])
            .output()
            .unwrap();
        if !run.status.success() {
            return (false, format!("run exited with {}", run.status));
        }
        let trace = fs::read(out.join("noisy_trace.csv")).unwrap();
        let regret = fs::read(out.join("noisy_regret.csv")).unwrap();
        outputs.push((trace, regret));
    }
    let same = outputs[0] == outputs[1];
    (
        same,
        format!("two runs with seed 11: {} + {} bytes, identical = {same}", outputs[0].0.len(), outputs[0].1.len()),
    )
}

fn main() -> ExitCode {
    let total = Instant::now();
    let cert = certificate();
    let sim = Simulation::run(&Scenario::reactor()).unwrap();
    let checks: Vec<Check> = vec![
        ("GES envelope", Box::new(|| ges_envelope(&cert, &sim))),
        ("per-iteration descent lemma", Box::new(|| descent_lemma(&cert, &sim))),
        ("regret bound dominance", Box::new(|| regret_dominance(&cert, &sim))),
        ("anytime vs exact ordering", Box::new(|| anytime_beats_optimal(&cert, &sim))),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("certificate correctness", Box::new(|| certificate_correctness(&cert, &sim))),
        ("identity reproductions", Box::new(|| identities(&cert, &sim))),
        ("constant regret plateau", Box::new(|| constant_regret(&cert, &sim))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!("criterion {}: {} {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    let elapsed: Duration = total.elapsed();
    println!("acceptance: {} of {} passed in {:.1} s", checks.len() - failed, checks.len(), elapsed.as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
