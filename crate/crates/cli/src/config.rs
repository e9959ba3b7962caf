use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use pmhe::{reactor, Budget, JSelect, LtiSystem, ResidualMode, SmoothnessMode, StageWeights, StateConstraints, StepKind};
use toml::{Table, Value};

use crate::error::{CliError, Problem, Result};
use crate::matrix::{column, parse_matrix};

pub const BUILTIN_REACTOR: &str = "builtin:reactor";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Anytime,
    Optimal,
    WarmConstant,
    Gmhe,
    Luenberger,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Anytime => "anytime",
            Self::Optimal => "optimal",
            Self::WarmConstant => "warmConstant",
            Self::Gmhe => "gmhe",
            Self::Luenberger => "luenberger",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GainSpec {
    Poles(Vec<f64>),
    Explicit(DMatrix<f64>),
}

/// Geometry of the proximity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `P` from the Stein equation and the configured `W`.
    Certificate,
    /// Identity weights; the certificate only supplies the gain and `L_f`.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementSource {
    Simulate,
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComparatorChoice {
    TrueStates,
    /// Luenberger observer with these poles.
    Observer(Vec<f64>),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    CsvSvg,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Self::Csv),
            "csv+svg" => Some(Self::CsvSvg),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: LtiSystem,
    pub horizon: usize,
    pub weights: StageWeights,
    pub constraints: StateConstraints,
    pub gain: GainSpec,
    pub q: DMatrix<f64>,
    /// Residual weight of the proximity term; `None` with pinned residuals.
    pub w: Option<DMatrix<f64>>,
    pub smoothness: SmoothnessMode,
    pub metric: Metric,
    pub estimator: EstimatorKind,
    pub budget: Budget,
    pub schedule: StepKind,
    pub selection: JSelect,
    /// Overrides the admissible step.
    pub step: Option<f64>,
    /// Gradient method only: correct the prediction with the observer gain.
    pub luenberger_prior: bool,
    pub x0_true: DVector<f64>,
    pub x0_hat: DVector<f64>,
    pub steps: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub input_std: f64,
    pub measurements: MeasurementSource,
    pub comparator: ComparatorChoice,
    pub format: OutputFormat,
}

impl ScenarioConfig {
    /// Reactor defaults with the anytime estimator and one iteration.
    pub fn reactor() -> Self {
        Self {
            name: "reactor".into(),
            system: reactor::system(),
            horizon: reactor::HORIZON,
            weights: reactor::weights(),
            constraints: reactor::constraints(),
            gain: GainSpec::Poles(reactor::POLES.to_vec()),
            q: DMatrix::identity(3, 3),
            w: None,
            smoothness: SmoothnessMode::Formula,
            metric: Metric::Certificate,
            estimator: EstimatorKind::Anytime,
            budget: Budget::Constant(1),
            schedule: StepKind::Constant,
            selection: JSelect::LastIterate,
            step: None,
            luenberger_prior: true,
            x0_true: reactor::initial_state(),
            x0_hat: reactor::initial_estimate(),
            steps: reactor::SIM_STEPS,
            seed: 0,
            noise_std: 0.0,
            input_std: 0.0,
            measurements: MeasurementSource::Simulate,
            comparator: ComparatorChoice::TrueStates,
            format: OutputFormat::Csv,
        }
    }

    /// `builtin:reactor` or a path to a TOML file.
    pub fn load(source: &str) -> Result<Self> {
        if source == BUILTIN_REACTOR {
            return Ok(Self::reactor());
        }
        let path = Path::new(source);
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario")
            .to_string();
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &name)
    }

    /// Relative paths inside the file are resolved against `base`.
    pub fn parse(text: &str, base: &Path, default_name: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::config("<file>", e.message().to_string()))?;
        let mut rd = Reader::new(&table);
        let cfg = rd.scenario(base, default_name);
        rd.finish(cfg)
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn residual_mode(&self) -> ResidualMode {
        self.weights.residuals
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    (
        "scenario",
        &["name", "horizon", "steps", "seed", "noise_std", "input_std", "x0_true", "x0_hat"],
    ),
    (
        "system",
        &["source", "path", "A", "B", "C", "R", "Qw", "residuals", "constraints", "Cx", "dx"],
    ),
    ("design", &["poles", "L", "Q", "W", "smoothness", "metric"]),
    ("estimator", &["kind", "budget", "schedule", "jSelect", "step", "prior"]),
    ("measurements", &["source", "path"]),
    ("comparator", &["kind", "poles"]),
    ("output", &["format"]),
];

struct Reader<'a> {
    table: &'a Table,
    seen: BTreeSet<String>,
    problems: Vec<Problem>,
}

impl<'a> Reader<'a> {
    fn new(table: &'a Table) -> Self {
        Self {
            table,
            seen: BTreeSet::new(),
            problems: Vec::new(),
        }
    }

    fn bad(&mut self, key: &str, message: impl Into<String>) {
        self.problems.push(Problem::new(key, message));
    }

    fn value(&mut self, section: &str, key: &str) -> Option<&'a Value> {
        let v = self.table.get(section)?.as_table()?.get(key)?;
        self.seen.insert(format!("{section}.{key}"));
        Some(v)
    }

    fn string(&mut self, section: &str, key: &str) -> Option<String> {
        match self.value(section, key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.bad(&format!("{section}.{key}"), "expected a string");
                None
            }
        }
    }

    fn float(&mut self, section: &str, key: &str) -> Option<f64> {
        match self.value(section, key)? {
            Value::Float(v) if v.is_finite() => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            _ => {
                self.bad(&format!("{section}.{key}"), "expected a finite number");
                None
            }
        }
    }

    fn count(&mut self, section: &str, key: &str) -> Option<usize> {
        match self.value(section, key)? {
            Value::Integer(v) if *v >= 0 => Some(*v as usize),
            _ => {
                self.bad(&format!("{section}.{key}"), "expected a nonnegative integer");
                None
            }
        }
    }

    fn floats(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.value(section, key)?;
        let parsed = v.as_array().and_then(|a| {
            a.iter()
                .map(|x| match x {
                    Value::Float(f) if f.is_finite() => Some(*f),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect::<Option<Vec<f64>>>()
        });
        if parsed.is_none() {
            self.bad(&format!("{section}.{key}"), "expected an array of numbers");
        }
        parsed
    }

    fn matrix(&mut self, section: &str, key: &str) -> Option<DMatrix<f64>> {
        let text = self.string(section, key)?;
        match parse_matrix(&text) {
            Ok(m) => Some(m),
            Err(e) => {
                self.bad(&format!("{section}.{key}"), e);
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, section: &str, key: &str, options: &[(&str, T)]) -> Option<T> {
        let s = self.string(section, key)?;
        match options.iter().find(|(name, _)| *name == s) {
            Some((_, v)) => Some(*v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.bad(
                    &format!("{section}.{key}"),
                    format!("`{s}` is not one of {}", names.join(", ")),
                );
                None
            }
        }
    }

    fn shape(&mut self, key: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> bool {
        if m.shape() != (rows, cols) {
            self.bad(
                key,
                format!("expected {rows}x{cols}, found {}x{}", m.nrows(), m.ncols()),
            );
            return false;
        }
        true
    }

    fn scenario(&mut self, base: &Path, default_name: &str) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::reactor();
        cfg.name = self.string("scenario", "name").unwrap_or_else(|| default_name.to_string());

        let source = self.string("system", "source").unwrap_or_else(|| BUILTIN_REACTOR.into());
        let mut sys_table: Option<Table> = None;
        let builtin = match source.as_str() {
            BUILTIN_REACTOR => true,
            "inline" => false,
            "file" => {
                match self.string("system", "path") {
                    Some(p) => {
                        let path = base.join(p);
                        match fs::read_to_string(&path).map(|t| t.parse::<Table>()) {
                            Ok(Ok(t)) => sys_table = Some(t),
                            Ok(Err(e)) => self.bad("system.path", format!("{}: {}", path.display(), e.message())),
                            Err(e) => self.bad("system.path", format!("{}: {e}", path.display())),
                        }
                    }
                    None => self.bad("system.path", "required when system.source = \"file\""),
                }
                false
            }
            other => {
                self.bad("system.source", format!("`{other}` is not builtin:reactor, inline or file"));
                true
            }
        };

        if !builtin {
            let read = |rd: &mut Self, key: &str| -> Option<DMatrix<f64>> {
                match &sys_table {
                    Some(t) => match t.get(key) {
                        Some(Value::String(s)) => parse_matrix(s)
                            .map_err(|e| rd.bad(&format!("system.path:{key}"), e))
                            .ok(),
                        Some(_) => {
                            rd.bad(&format!("system.path:{key}"), "expected a matrix string");
                            None
                        }
                        None => None,
                    },
                    None => rd.matrix("system", key),
                }
            };
            let a = read(self, "A");
            let c = read(self, "C");
            let b = read(self, "B");
            match (a, c) {
                (Some(a), Some(c)) => {
                    let n = a.nrows();
                    let b = b.unwrap_or_else(|| DMatrix::zeros(n, 1));
                    let ok = self.shape("system.A", &a, n, n)
                        & self.shape("system.B", &b, n, b.ncols())
                        & self.shape("system.C", &c, c.nrows(), n);
                    if ok {
                        match LtiSystem::new(a, b, c) {
                            Ok(s) => cfg.system = s,
                            Err(e) => self.bad("system.A", e.to_string()),
                        }
                    }
                }
                _ => {
                    self.bad("system.A", "A and C are required for non-builtin systems");
                }
            }
            let n = cfg.system.n();
            cfg.x0_true = DVector::zeros(n);
            cfg.x0_hat = DVector::zeros(n);
            cfg.q = DMatrix::identity(n, n);
            cfg.constraints = StateConstraints::none(n);
            cfg.weights = StageWeights::output_only(DMatrix::identity(cfg.system.p(), cfg.system.p()), n);
            cfg.gain = GainSpec::Poles(Vec::new());
        } else {
            for key in ["path", "A", "B", "C"] {
                if self.value("system", key).is_some() {
                    self.bad(&format!("system.{key}"), "not allowed with the builtin system");
                }
            }
        }
        let (n, p) = (cfg.system.n(), cfg.system.p());

        if let Some(h) = self.count("scenario", "horizon") {
            if h == 0 {
                self.bad("scenario.horizon", "must be positive");
            } else {
                cfg.horizon = h;
            }
        }
        if let Some(t) = self.count("scenario", "steps") {
            if t == 0 {
                self.bad("scenario.steps", "must be positive");
            } else {
                cfg.steps = t;
            }
        }
        if let Some(v) = self.value("scenario", "seed") {
            match v.as_integer() {
                Some(s) if s >= 0 => cfg.seed = s as u64,
                _ => self.bad("scenario.seed", "expected a nonnegative integer"),
            }
        }
        for (key, slot) in [("noise_std", &mut cfg.noise_std), ("input_std", &mut cfg.input_std)] {
            if let Some(v) = self.float("scenario", key) {
                if v < 0.0 {
                    self.bad(&format!("scenario.{key}"), "must be nonnegative");
                } else {
                    *slot = v;
                }
            }
        }
        for (key, slot) in [("x0_true", &mut cfg.x0_true), ("x0_hat", &mut cfg.x0_hat)] {
            if let Some(v) = self.floats("scenario", key) {
                if v.len() != n {
                    self.bad(&format!("scenario.{key}"), format!("expected {n} entries, found {}", v.len()));
                } else {
                    *slot = column(&v);
                }
            }
        }

        let residuals = self
            .choice("system", "residuals", &[("fixed", ResidualMode::FixedZero), ("free", ResidualMode::Free)])
            .unwrap_or(cfg.weights.residuals);
        let r = self.matrix("system", "R").unwrap_or_else(|| cfg.weights.r.clone());
        let qw = self.matrix("system", "Qw").unwrap_or_else(|| DMatrix::identity(n, n));
        if self.shape("system.R", &r, p, p) & self.shape("system.Qw", &qw, n, n) {
            cfg.weights = StageWeights::new(r, qw, residuals);
        }
        if residuals == ResidualMode::Free {
            cfg.w = Some(DMatrix::identity(n * cfg.horizon, n * cfg.horizon));
        }

        let kind = self.choice(
            "system",
            "constraints",
            &[("nonnegative", 0), ("none", 1), ("inline", 2)],
        );
        match kind {
            Some(0) => cfg.constraints = StateConstraints::nonnegative(n),
            Some(1) => cfg.constraints = StateConstraints::none(n),
            Some(2) => {
                let cx = self.matrix("system", "Cx");
                let dx = self.floats("system", "dx");
                match (cx, dx) {
                    (Some(cx), Some(dx)) => {
                        if self.shape("system.Cx", &cx, dx.len(), n) {
                            match StateConstraints::new(cx, column(&dx)) {
                                Ok(c) => cfg.constraints = c,
                                Err(e) => self.bad("system.Cx", e.to_string()),
                            }
                        }
                    }
                    _ => self.bad("system.Cx", "Cx and dx are required with inline constraints"),
                }
            }
            _ => {}
        }

        let poles = self.floats("design", "poles");
        let gain = self.matrix("design", "L");
        match (poles, gain) {
            (Some(_), Some(_)) => self.bad("design.L", "give either design.poles or design.L"),
            (Some(poles), None) => {
                if poles.len() != n {
                    self.bad("design.poles", format!("expected {n} poles, found {}", poles.len()));
                }
                cfg.gain = GainSpec::Poles(poles);
            }
            (None, Some(l)) => {
                if self.shape("design.L", &l, n, p) {
                    cfg.gain = GainSpec::Explicit(l);
                }
            }
            (None, None) => {
                if let GainSpec::Poles(v) = &cfg.gain {
                    if v.is_empty() {
                        self.bad("design.poles", "design.poles or design.L is required");
                    }
                }
            }
        }
        if let Some(q) = self.matrix("design", "Q") {
            if self.shape("design.Q", &q, n, n) {
                cfg.q = q;
            }
        }
        if let Some(w) = self.matrix("design", "W") {
            if residuals == ResidualMode::FixedZero {
                self.bad("design.W", "only used with system.residuals = \"free\"");
            } else if self.shape("design.W", &w, n * cfg.horizon, n * cfg.horizon) {
                cfg.w = Some(w);
            }
        }
        if let Some(m) = self.choice(
            "design",
            "smoothness",
            &[("formula", SmoothnessMode::Formula), ("hessian", SmoothnessMode::Hessian)],
        ) {
            cfg.smoothness = m;
        }
        if let Some(m) = self.choice(
            "design",
            "metric",
            &[("certificate", Metric::Certificate), ("euclidean", Metric::Euclidean)],
        ) {
            cfg.metric = m;
        }

        if let Some(k) = self.choice(
            "estimator",
            "kind",
            &[
                ("anytime", EstimatorKind::Anytime),
                ("optimal", EstimatorKind::Optimal),
                ("warmConstant", EstimatorKind::WarmConstant),
                ("gmhe", EstimatorKind::Gmhe),
                ("luenberger", EstimatorKind::Luenberger),
            ],
        ) {
            cfg.estimator = k;
        }
        if let Some(v) = self.value("estimator", "budget") {
            match v {
                Value::Integer(i) if *i >= 0 => cfg.budget = Budget::Constant(*i as usize),
                Value::Array(a) if !a.is_empty() => {
                    let seq: Option<Vec<usize>> = a
                        .iter()
                        .map(|x| x.as_integer().filter(|i| *i >= 0).map(|i| i as usize))
                        .collect();
                    match seq {
                        Some(seq) => cfg.budget = Budget::Sequence(seq),
                        None => self.bad("estimator.budget", "expected nonnegative integers"),
                    }
                }
                _ => self.bad(
                    "estimator.budget",
                    "expected a nonnegative integer or a nonempty array of them",
                ),
            }
        }
        if let Some(s) = self.choice(
            "estimator",
            "schedule",
            &[("constant", StepKind::Constant), ("inverseSqrt", StepKind::InverseSqrt)],
        ) {
            cfg.schedule = s;
        }
        if let Some(j) = self.choice(
            "estimator",
            "jSelect",
            &[("lastIterate", JSelect::LastIterate), ("minLoss", JSelect::MinLoss)],
        ) {
            cfg.selection = j;
        }
        if let Some(s) = self.float("estimator", "step") {
            if s < 0.0 {
                self.bad("estimator.step", "must be nonnegative");
            } else {
                cfg.step = Some(s);
            }
        }
        if let Some(p) = self.choice("estimator", "prior", &[("luenberger", true), ("plain", false)]) {
            cfg.luenberger_prior = p;
        }

        match self.string("measurements", "source").as_deref() {
            None | Some("simulate") => {}
            Some("csv") => match self.string("measurements", "path") {
                Some(p) => cfg.measurements = MeasurementSource::Csv(base.join(p)),
                None => self.bad("measurements.path", "required when measurements.source = \"csv\""),
            },
            Some(other) => self.bad("measurements.source", format!("`{other}` is not simulate or csv")),
        }

        match self.string("comparator", "kind").as_deref() {
            None | Some("trueStates") => {}
            Some("none") => cfg.comparator = ComparatorChoice::None,
            Some("observer") => match self.floats("comparator", "poles") {
                Some(poles) if poles.len() == n => cfg.comparator = ComparatorChoice::Observer(poles),
                Some(poles) => self.bad("comparator.poles", format!("expected {n} poles, found {}", poles.len())),
                None => self.bad("comparator.poles", "required for the observer comparator"),
            },
            Some(other) => self.bad(
                "comparator.kind",
                format!("`{other}` is not trueStates, observer or none"),
            ),
        }
        if cfg.comparator != ComparatorChoice::None
            && !matches!(cfg.comparator, ComparatorChoice::Observer(_))
            && self.value("comparator", "poles").is_some()
        {
            self.bad("comparator.poles", "only used with comparator.kind = \"observer\"");
        }

        if let Some(s) = self.string("output", "format") {
            match OutputFormat::parse(&s) {
                Some(f) => cfg.format = f,
                None => self.bad("output.format", format!("`{s}` is not csv or csv+svg")),
            }
        }
        cfg
    }

    fn finish(mut self, cfg: ScenarioConfig) -> Result<ScenarioConfig> {
        let known: BTreeSet<String> = KNOWN
            .iter()
            .flat_map(|(s, keys)| keys.iter().map(move |k| format!("{s}.{k}")))
            .collect();
        for (section, value) in self.table {
            let Some(inner) = value.as_table() else {
                self.problems.push(Problem::new(section.clone(), "unknown top-level key"));
                continue;
            };
            if !KNOWN.iter().any(|(s, _)| s == section) {
                self.problems.push(Problem::new(section.clone(), "unknown section"));
                continue;
            }
            for key in inner.keys() {
                let full = format!("{section}.{key}");
                if !known.contains(&full) {
                    self.problems.push(Problem::new(full, "unknown key"));
                }
            }
        }
        if self.problems.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Config(self.problems))
        }
    }
}
