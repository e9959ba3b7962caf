//! Shared reactor fixtures for the benchmarks.

use nalgebra::DMatrix;
use pmhe::design::horizon_problem;
use pmhe::{
    certify, make_schedule, place_gain, reactor, solve_lmi, AnytimePmhe, Budget, Scenario, Simulation,
    SmoothnessMode, StabilityCertificate, StepKind,
};

pub struct Fixture {
    pub cert: StabilityCertificate,
    pub sim: Simulation,
}

impl Fixture {
    pub fn reactor() -> Self {
        let sys = reactor::system();
        let gain = place_gain(&sys, &reactor::poles()).expect("reactor poles are placeable");
        let q = DMatrix::identity(3, 3);
        let p = solve_lmi(&sys, &gain, &q).expect("closed loop is stable");
        let prob = horizon_problem(&sys, reactor::HORIZON, &reactor::weights()).expect("reactor window");
        let cert = certify(&sys, &gain, &p, None, &q, &prob, SmoothnessMode::Formula).expect("certificate");
        let sim = Simulation::run(&Scenario::reactor()).expect("simulation");
        Self { cert, sim }
    }

    pub fn anytime(&self, it: usize) -> AnytimePmhe {
        let schedule = make_schedule(&self.cert, StepKind::Constant, Budget::Constant(it), true)
            .expect("valid schedule");
        AnytimePmhe::from_certificate(reactor::system(), &self.cert, schedule, reactor::initial_estimate())
            .expect("valid certificate")
    }
}
