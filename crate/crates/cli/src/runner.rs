use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use nalgebra::{Complex, DMatrix, DVector};
use pmhe::design::horizon_problem;
use pmhe::regret::{bound_theorem2, bound_theorem3, bound_theorem4, regret, rmse};
use pmhe::simulation::InputSignal;
use pmhe::{
    certify, make_schedule, place_gain, smoothness_constant, solve_lmi, AnytimePmhe, BregmanGeometry,
    ComparatorSequence, EstimateTrace, Estimator, Gmhe, LuenbergerObserver, OptimalPmhe, RegretReport,
    Scenario, Simulation, StabilityCertificate, StepSchedule,
};
use pmhe::solver::Centering;

use crate::config::{ComparatorChoice, EstimatorKind, GainSpec, MeasurementSource, Metric, OutputFormat, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::plot::polyline_svg;

/// Overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
}

impl RunOptions {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
    }
}

/// Everything a run produced before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub estimator: EstimatorKind,
    pub certificate: StabilityCertificate,
    pub simulation: Simulation,
    pub trace: EstimateTrace,
    /// Absent for estimators without losses or without a usable comparator.
    pub report: Option<RegretReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

pub fn observer_gain(sys: &pmhe::LtiSystem, poles: &[f64]) -> Result<DMatrix<f64>> {
    let poles: Vec<Complex<f64>> = poles.iter().map(|p| Complex::new(*p, 0.0)).collect();
    Ok(place_gain(sys, &poles)?)
}

/// Gain, Stein solution and constants for the scenario. The result may be
/// invalid; callers that need a valid certificate check `valid`.
pub fn design(cfg: &ScenarioConfig) -> Result<StabilityCertificate> {
    let gain = match &cfg.gain {
        GainSpec::Poles(p) => observer_gain(&cfg.system, p)?,
        GainSpec::Explicit(l) => l.clone(),
    };
    let p = solve_lmi(&cfg.system, &gain, &cfg.q)?;
    let prob = horizon_problem(&cfg.system, cfg.horizon, &cfg.weights)?;
    Ok(certify(
        &cfg.system,
        &gain,
        &p,
        cfg.w.as_ref(),
        &cfg.q,
        &prob,
        cfg.smoothness,
    )?)
}

fn require_valid(cert: &StabilityCertificate) -> Result<()> {
    if cert.valid {
        Ok(())
    } else {
        Err(CliError::Design {
            margin: cert.lmi_margin,
            radius: cert.spectral_radius,
        })
    }
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation> {
    let sc = Scenario {
        system: cfg.system.clone(),
        horizon: cfg.horizon,
        weights: cfg.weights.clone(),
        constraints: cfg.constraints.clone(),
        x0: cfg.x0_true.clone(),
        steps: cfg.steps,
        inputs: if cfg.input_std > 0.0 {
            InputSignal::Gaussian(cfg.input_std)
        } else {
            InputSignal::Zero
        },
        noise_std: cfg.noise_std,
        seed: cfg.seed,
    };
    match &cfg.measurements {
        MeasurementSource::Simulate => Ok(Simulation::run(&sc)?),
        MeasurementSource::Csv(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let streams = parse_streams(&text, &cfg.system)
                .map_err(|e| CliError::config("measurements.path", format!("{}: {e}", path.display())))?;
            Ok(Simulation::from_streams(&sc, streams.outputs, streams.inputs, streams.states)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Streams {
    pub outputs: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub states: Option<Vec<DVector<f64>>>,
}

/// Reads a measurement file whose header names columns `y1..yp`, optionally
/// `u1..um` (zero when absent) and `x1..xn` (true states, when known).
pub fn parse_streams(text: &str, sys: &pmhe::LtiSystem) -> std::result::Result<Streams, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or("empty file")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let find = |prefix: &str, count: usize| -> std::result::Result<Option<Vec<usize>>, String> {
        let cols: Vec<Option<usize>> = (1..=count)
            .map(|i| header.iter().position(|h| *h == format!("{prefix}{i}")))
            .collect();
        if cols.iter().all(Option::is_some) {
            Ok(Some(cols.into_iter().flatten().collect()))
        } else if cols.iter().all(Option::is_none) {
            Ok(None)
        } else {
            Err(format!("columns {prefix}1..{prefix}{count} are incomplete"))
        }
    };
    let ycols = find("y", sys.p())?.ok_or("missing output columns y1..")?;
    let ucols = find("u", sys.m())?;
    let xcols = find("x", sys.n())?;
    let mut streams = Streams {
        outputs: Vec::new(),
        inputs: Vec::new(),
        states: xcols.as_ref().map(|_| Vec::new()),
    };
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |cols: &[usize]| -> std::result::Result<DVector<f64>, String> {
            cols.iter()
                .map(|c| {
                    fields
                        .get(*c)
                        .ok_or_else(|| format!("row {} is short", row + 2))?
                        .parse::<f64>()
                        .map_err(|_| format!("row {}: `{}` is not a number", row + 2, fields[*c]))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(DVector::from_vec)
        };
        streams.outputs.push(get(&ycols)?);
        streams.inputs.push(match &ucols {
            Some(c) => get(c)?,
            None => DVector::zeros(sys.m()),
        });
        if let (Some(c), Some(xs)) = (&xcols, streams.states.as_mut()) {
            xs.push(get(c)?);
        }
    }
    Ok(streams)
}

/// The estimator a scenario describes, with its geometry and schedule.
pub fn build_estimator(cfg: &ScenarioConfig, cert: &StabilityCertificate) -> Result<Box<dyn Estimator>> {
    let sys = cfg.system.clone();
    let x0 = cfg.x0_hat.clone();
    let euclid_step = || cfg.step.unwrap_or(1.0 / cert.lf);
    let schedule = |base: Option<f64>| -> Result<StepSchedule> {
        Ok(match base {
            Some(b) => StepSchedule::new(cfg.schedule, b, cfg.budget.clone())?,
            None => make_schedule(cert, cfg.schedule, cfg.budget.clone(), cfg.budget.is_non_increasing())?,
        })
    };
    let residual_horizon = match cfg.residual_mode() {
        pmhe::ResidualMode::Free => cfg.horizon,
        pmhe::ResidualMode::FixedZero => 0,
    };
    Ok(match cfg.estimator {
        EstimatorKind::Anytime | EstimatorKind::WarmConstant => {
            let centering = if cfg.estimator == EstimatorKind::Anytime {
                Centering::PreviousIterate
            } else {
                Centering::Apriori
            };
            let est = match cfg.metric {
                Metric::Certificate => {
                    require_valid(cert)?;
                    AnytimePmhe::from_certificate(sys, cert, schedule(cfg.step)?, x0)?
                }
                Metric::Euclidean => AnytimePmhe::new(
                    sys,
                    cert.gain.clone(),
                    BregmanGeometry::euclidean(cfg.n(), residual_horizon),
                    schedule(Some(euclid_step()))?,
                    x0,
                )?,
            };
            Box::new(est.with_centering(centering).with_selection(cfg.selection))
        }
        EstimatorKind::Optimal => match cfg.metric {
            Metric::Certificate => {
                require_valid(cert)?;
                Box::new(OptimalPmhe::from_certificate(sys, cert, x0)?)
            }
            Metric::Euclidean => Box::new(OptimalPmhe::new(
                sys,
                cert.gain.clone(),
                BregmanGeometry::euclidean(cfg.n(), residual_horizon),
                x0,
            )?),
        },
        EstimatorKind::Gmhe => {
            let gain = cfg.luenberger_prior.then(|| cert.gain.clone());
            Box::new(
                Gmhe::new(sys, gain, euclid_step(), cfg.budget.clone(), cfg.horizon, x0)?
                    .with_selection(cfg.selection),
            )
        }
        EstimatorKind::Luenberger => Box::new(LuenbergerObserver::new(sys, cert.gain.clone(), x0)?),
    })
}

fn comparator(cfg: &ScenarioConfig, sim: &Simulation) -> Result<Option<ComparatorSequence>> {
    if sim.states.is_none() {
        return Ok(None);
    }
    Ok(match &cfg.comparator {
        ComparatorChoice::None => None,
        ComparatorChoice::TrueStates => Some(ComparatorSequence::true_states(sim)?),
        ComparatorChoice::Observer(poles) => {
            let gain = observer_gain(&cfg.system, poles)?;
            Some(ComparatorSequence::observer(sim, &gain, &cfg.x0_hat)?)
        }
    })
}

/// Regret with every bound whose assumptions the scenario meets.
pub fn regret_report(
    cfg: &ScenarioConfig,
    cert: &StabilityCertificate,
    sim: &Simulation,
    trace: &EstimateTrace,
    est: &dyn Estimator,
) -> Result<Option<RegretReport>> {
    let (Some(comp), Some(geom)) = (comparator(cfg, sim)?, est.geometry()) else {
        return Ok(None);
    };
    if trace.records.iter().any(|r| r.step.losses.is_empty()) {
        return Ok(None);
    }
    let mut rep = regret(trace, &comp, sim, geom, &cert.gain)?;
    if cfg.estimator == EstimatorKind::Anytime && cfg.metric == Metric::Certificate && cfg.step.is_none() {
        let schedule = make_schedule(cert, cfg.schedule, cfg.budget.clone(), false)?;
        let z0 = cfg.x0_true.clone();
        let b4 = bound_theorem4(cert, &comp, &z0, &cfg.x0_hat).ok();
        for t in 1..=rep.len() {
            let c = rep.variation[t - 1];
            rep.bound2[t - 1] = bound_theorem2(&schedule, cert.sigma, &rep.constants, c, t).ok();
            rep.bound3[t - 1] = bound_theorem3(cert, &schedule, &rep.constants, c, t).ok();
            rep.bound4[t - 1] = b4;
        }
    }
    Ok(Some(rep))
}

/// Runs the scenario without writing anything.
pub fn execute(cfg: &ScenarioConfig) -> Result<Outcome> {
    let cert = design(cfg)?;
    let sim = simulate(cfg)?;
    let mut est = build_estimator(cfg, &cert)?;
    let trace = EstimateTrace::collect(est.as_mut(), &sim, &cfg.x0_hat)?;
    let report = regret_report(cfg, &cert, &sim, &trace, est.as_ref())?;
    Ok(Outcome {
        name: cfg.name.clone(),
        estimator: cfg.estimator,
        certificate: cert,
        simulation: sim,
        trace,
        report,
    })
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per time instant: estimate, truth, error norm, smallest loss,
/// selected iterate and Bregman distance to the true stacked state.
pub fn trace_csv(trace: &EstimateTrace, n: usize) -> String {
    let mut s = String::from("k");
    for i in 1..=n {
        write!(s, ",xhat{i}").unwrap();
    }
    for i in 1..=n {
        write!(s, ",x{i}").unwrap();
    }
    s.push_str(",error_norm,min_loss,selected,lyapunov\n");
    let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
    for r in &trace.records {
        write!(s, "{}", r.step.k).unwrap();
        for v in r.step.estimate.iter() {
            write!(s, ",{}", sci(*v)).unwrap();
        }
        for i in 0..n {
            write!(s, ",{}", opt(r.truth.as_ref().map(|x| x[i]))).unwrap();
        }
        let selected = if r.step.iterates.is_empty() {
            String::new()
        } else {
            r.step.selected.to_string()
        };
        writeln!(
            s,
            ",{},{},{},{}",
            opt(r.error.as_ref().map(|e| e.norm())),
            opt(r.step.min_loss()),
            selected,
            opt(r.lyapunov)
        )
        .unwrap();
    }
    s
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn write_outcome(out: &Outcome, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    let n = out.simulation.system.n();
    write(dir.join(format!("{}_trace.csv", out.name)), &trace_csv(&out.trace, n), &mut files)?;
    if let Some(rep) = &out.report {
        write(dir.join(format!("{}_regret.csv", out.name)), &rep.to_csv(), &mut files)?;
    }
    if format == OutputFormat::CsvSvg {
        if let Ok(errors) = out.trace.error_norms() {
            let pts: Vec<(f64, f64)> = errors.iter().enumerate().map(|(i, e)| ((i + 1) as f64, *e)).collect();
            let svg = polyline_svg(&format!("{}: |e_k|", out.name), "k", &pts);
            write(dir.join(format!("{}_error.svg", out.name)), &svg, &mut files)?;
        }
        if let Some(rep) = &out.report {
            let pts: Vec<(f64, f64)> = rep.regret.iter().enumerate().map(|(i, r)| ((i + 1) as f64, *r)).collect();
            let svg = polyline_svg(&format!("{}: R(T)", out.name), "T", &pts);
            write(dir.join(format!("{}_regret.svg", out.name)), &svg, &mut files)?;
        }
    }
    Ok(files)
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput> {
    let mut cfg = cfg.clone();
    opts.apply(&mut cfg);
    let outcome = execute(&cfg)?;
    let files = write_outcome(&outcome, &opts.out_dir, cfg.format)?;
    Ok(RunOutput { outcome, files })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub estimator: String,
    pub rmse: Option<f64>,
    pub final_error: Option<f64>,
    pub regret: Option<f64>,
    pub bound2: Option<f64>,
    pub bound3: Option<f64>,
    pub bound4: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub outcomes: Vec<Outcome>,
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,estimator,rmse,final_error,regret,bound2,bound3,bound4\n");
        let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.name,
                r.estimator,
                opt(r.rmse),
                opt(r.final_error),
                opt(r.regret),
                opt(r.bound2),
                opt(r.bound3),
                opt(r.bound4)
            )
            .unwrap();
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<20} {:<13} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "name", "estimator", "rmse", "final_err", "R(T)", "bound2", "bound3", "bound4"
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.5e}")).unwrap_or_else(|| "-".into());
        for r in &self.rows {
            writeln!(
                s,
                "{:<20} {:<13} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
                r.name,
                r.estimator,
                opt(r.rmse),
                opt(r.final_error),
                opt(r.regret),
                opt(r.bound2),
                opt(r.bound3),
                opt(r.bound4)
            )
            .unwrap();
        }
        s
    }
}

fn summarize(out: &Outcome, horizon: usize) -> SummaryRow {
    let t = out.trace.len();
    let last = |v: &Vec<Option<f64>>| v.last().copied().flatten();
    SummaryRow {
        name: out.name.clone(),
        estimator: out.estimator.label().into(),
        rmse: rmse(&out.trace, horizon, t).ok(),
        final_error: out.trace.error_norms().ok().and_then(|e| e.last().copied()),
        regret: out.report.as_ref().and_then(|r| r.final_regret()),
        bound2: out.report.as_ref().and_then(|r| last(&r.bound2)),
        bound3: out.report.as_ref().and_then(|r| last(&r.bound3)),
        bound4: out.report.as_ref().and_then(|r| last(&r.bound4)),
    }
}

/// Runs every scenario on its own thread and checks they saw the same
/// measurements.
pub fn compare_estimators(cfgs: &[ScenarioConfig], opts: &RunOptions) -> Result<Summary> {
    let cfgs: Vec<ScenarioConfig> = cfgs
        .iter()
        .map(|c| {
            let mut c = c.clone();
            opts.apply(&mut c);
            c
        })
        .collect();
    let mut names: Vec<&str> = Vec::new();
    for c in &cfgs {
        if names.contains(&c.name.as_str()) {
            return Err(CliError::config("scenario.name", format!("`{}` appears twice", c.name)));
        }
        names.push(&c.name);
    }
    let outcomes: Vec<Outcome> = thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || execute(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    if let Some(first) = outcomes.first() {
        for other in &outcomes[1..] {
            let (a, b) = (&first.simulation, &other.simulation);
            if a.outputs != b.outputs || a.inputs != b.inputs {
                return Err(CliError::Mismatch {
                    first: first.name.clone(),
                    second: other.name.clone(),
                });
            }
        }
    }
    for (out, cfg) in outcomes.iter().zip(&cfgs) {
        write_outcome(out, &opts.out_dir, cfg.format)?;
    }
    let rows = outcomes.iter().zip(&cfgs).map(|(o, c)| summarize(o, c.horizon)).collect();
    let summary = Summary { rows, outcomes };
    let path = opts.out_dir.join("summary.csv");
    fs::write(&path, summary.to_csv()).map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

/// Writes `<name>_certificate.txt` and returns the certificate.
pub fn certify_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<(StabilityCertificate, PathBuf)> {
    let cert = design(cfg)?;
    fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::io(&opts.out_dir, e))?;
    let path = opts.out_dir.join(format!("{}_certificate.txt", cfg.name));
    fs::write(&path, cert.report()).map_err(|e| CliError::io(&path, e))?;
    Ok((cert, path))
}

/// `L_f` of the scenario's full window problem.
pub fn smoothness(cfg: &ScenarioConfig) -> Result<f64> {
    let prob = horizon_problem(&cfg.system, cfg.horizon, &cfg.weights)?;
    Ok(smoothness_constant(&prob, cfg.smoothness))
}
