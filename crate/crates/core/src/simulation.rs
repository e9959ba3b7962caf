//! Noiseless or noisy roll-outs of the plant and the per-time problem data
//! every estimator and the regret accounting consume.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{
    build_condensed, build_polytope, CondensedProblem, LtiSystem, MeasurementWindow, PolytopeSet,
    StackedVector, StageWeights, StateConstraints,
};

/// Window, loss and constraint set at one time instant.
#[derive(Debug, Clone)]
pub struct StepContext {
    pub k: usize,
    pub window: MeasurementWindow,
    pub problem: CondensedProblem,
    pub polytope: PolytopeSet,
}

impl StepContext {
    pub fn build(
        sys: &LtiSystem,
        constraints: &StateConstraints,
        weights: &StageWeights,
        window: &MeasurementWindow,
    ) -> Result<Self> {
        let problem = build_condensed(sys, window, weights)?;
        let polytope = build_polytope(constraints, sys, window, weights.residuals)?;
        Ok(Self {
            k: window.k(),
            window: window.clone(),
            problem,
            polytope,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InputSignal {
    #[default]
    Zero,
    /// Independent Gaussian entries with the given standard deviation.
    Gaussian(f64),
    /// `u_0, u_1, ...`; must cover every simulated step.
    Given(Vec<DVector<f64>>),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: LtiSystem,
    pub horizon: usize,
    pub weights: StageWeights,
    pub constraints: StateConstraints,
    pub x0: DVector<f64>,
    pub steps: usize,
    pub inputs: InputSignal,
    /// Standard deviation of additive Gaussian output noise.
    pub noise_std: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn reactor() -> Self {
        use crate::reactor;
        Self {
            system: reactor::system(),
            horizon: reactor::HORIZON,
            weights: reactor::weights(),
            constraints: reactor::constraints(),
            x0: reactor::initial_state(),
            steps: reactor::SIM_STEPS,
            inputs: InputSignal::Zero,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

/// Recorded streams plus one [`StepContext`] for each `k = 1..=steps + 1`.
/// The extra instant lets comparator variation be evaluated up to `steps`.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub system: LtiSystem,
    pub horizon: usize,
    pub weights: StageWeights,
    pub constraints: StateConstraints,
    pub steps: usize,
    /// `x_0, ..., x_{steps+1}` when known.
    pub states: Option<Vec<DVector<f64>>>,
    /// `y_0, ..., y_steps`.
    pub outputs: Vec<DVector<f64>>,
    /// `u_0, ..., u_steps`.
    pub inputs: Vec<DVector<f64>>,
    contexts: Vec<StepContext>,
}

impl Simulation {
    pub fn run(sc: &Scenario) -> Result<Self> {
        let sys = &sc.system;
        if sc.x0.len() != sys.n() {
            return Err(Error::dim("initial state", sys.n(), sc.x0.len()));
        }
        if !(sc.noise_std >= 0.0) {
            return Err(Error::Config("noise standard deviation must be nonnegative".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
        let count = sc.steps + 1;
        let inputs: Vec<DVector<f64>> = match &sc.inputs {
            InputSignal::Zero => vec![DVector::zeros(sys.m()); count],
            InputSignal::Gaussian(std) => {
                let dist = Normal::new(0.0, *std)
                    .map_err(|e| Error::Config(format!("input distribution: {e}")))?;
                (0..count)
                    .map(|_| DVector::from_fn(sys.m(), |_, _| dist.sample(&mut rng)))
                    .collect()
            }
            InputSignal::Given(us) => {
                if us.len() < count {
                    return Err(Error::Range(format!(
                        "input sequence has {} entries, {count} required",
                        us.len()
                    )));
                }
                us[..count].to_vec()
            }
        };
        let noise = if sc.noise_std > 0.0 {
            Some(Normal::new(0.0, sc.noise_std).map_err(|e| Error::Config(format!("noise: {e}")))?)
        } else {
            None
        };

        let mut states = Vec::with_capacity(count + 1);
        let mut outputs = Vec::with_capacity(count);
        states.push(sc.x0.clone());
        for u in &inputs {
            let x = states.last().expect("nonempty");
            if u.len() != sys.m() {
                return Err(Error::dim("input", sys.m(), u.len()));
            }
            let mut y = sys.output(x);
            if let Some(d) = &noise {
                y.iter_mut().for_each(|v| *v += d.sample(&mut rng));
            }
            outputs.push(y);
            states.push(sys.step(x, u));
        }
        Self::assemble(sc, Some(states), outputs, inputs)
    }

    /// Builds the contexts from externally recorded streams.
    pub fn from_streams(
        sc: &Scenario,
        outputs: Vec<DVector<f64>>,
        inputs: Vec<DVector<f64>>,
        states: Option<Vec<DVector<f64>>>,
    ) -> Result<Self> {
        if outputs.len() < sc.steps + 1 || inputs.len() < sc.steps + 1 {
            return Err(Error::Range(format!(
                "{} measurements and {} inputs recorded, {} of each required",
                outputs.len(),
                inputs.len(),
                sc.steps + 1
            )));
        }
        if let Some(xs) = &states {
            if xs.len() < sc.steps + 2 {
                return Err(Error::Range(format!(
                    "{} states recorded, {} required",
                    xs.len(),
                    sc.steps + 2
                )));
            }
        }
        Self::assemble(sc, states, outputs, inputs)
    }

    fn assemble(
        sc: &Scenario,
        states: Option<Vec<DVector<f64>>>,
        outputs: Vec<DVector<f64>>,
        inputs: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let mut window = MeasurementWindow::new(sc.horizon);
        let mut contexts = Vec::with_capacity(sc.steps + 1);
        for (y, u) in outputs.iter().zip(&inputs).take(sc.steps + 1) {
            window.push(y.clone(), u.clone());
            contexts.push(StepContext::build(
                &sc.system,
                &sc.constraints,
                &sc.weights,
                &window,
            )?);
        }
        Ok(Self {
            system: sc.system.clone(),
            horizon: sc.horizon,
            weights: sc.weights.clone(),
            constraints: sc.constraints.clone(),
            steps: sc.steps,
            states,
            outputs,
            inputs,
            contexts,
        })
    }

    /// Context at time `k`, `1 <= k <= steps + 1`.
    pub fn context(&self, k: usize) -> &StepContext {
        &self.contexts[k - 1]
    }

    pub fn contexts(&self) -> &[StepContext] {
        &self.contexts[..self.steps]
    }

    pub fn true_state(&self, k: usize) -> Option<&DVector<f64>> {
        self.states.as_ref().map(|xs| &xs[k])
    }

    /// `[x_{k-h}; 0; ...; 0]` in the layout used at time `k`.
    pub fn true_stacked(&self, k: usize) -> Option<StackedVector> {
        let ctx = self.context(k);
        let head = self.true_state(ctx.window.head_time())?;
        StackedVector::from_head(ctx.polytope.layout(), head).ok()
    }
}
