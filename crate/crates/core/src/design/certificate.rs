use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::smoothness::{smoothness_constant, SmoothnessMode};
use crate::bregman::BregmanGeometry;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CondensedProblem, LtiSystem, ResidualMode};

const LMI_TOL: f64 = 1e-9;

/// Every constant the stability and regret guarantees depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub gain: DMatrix<f64>,
    pub p: DMatrix<f64>,
    /// Empty when residuals are pinned to zero.
    pub w: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub c: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub lf: f64,
    pub lf_mode: SmoothnessMode,
    pub beta_e: f64,
    pub beta: f64,
    pub alpha: f64,
    /// `lambda_max((A-LC)' P (A-LC) - P + Q)`.
    pub lmi_margin: f64,
    pub spectral_radius: f64,
    pub valid: bool,
}

impl StabilityCertificate {
    /// Admissible step size `sigma / L_f`.
    pub fn step_bound(&self) -> f64 {
        if self.lf > 0.0 {
            self.sigma / self.lf
        } else {
            f64::INFINITY
        }
    }

    pub fn geometry(&self) -> Result<BregmanGeometry> {
        BregmanGeometry::quadratic(self.p.clone(), self.w.clone())
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "valid                {}", self.valid);
        let _ = writeln!(s, "lmi_max_eigenvalue   {:.16e}", self.lmi_margin);
        let _ = writeln!(s, "spectral_radius      {:.16e}", self.spectral_radius);
        let _ = writeln!(s, "c                    {:.16e}", self.c);
        let _ = writeln!(s, "sigma                {:.16e}", self.sigma);
        let _ = writeln!(s, "gamma                {:.16e}", self.gamma);
        let _ = writeln!(s, "lf                   {:.16e}", self.lf);
        let _ = writeln!(s, "lf_mode              {:?}", self.lf_mode);
        let _ = writeln!(s, "beta_e               {:.16e}", self.beta_e);
        let _ = writeln!(s, "beta                 {:.16e}", self.beta);
        let _ = writeln!(s, "alpha                {:.16e}", self.alpha);
        let _ = writeln!(s, "step_bound           {:.16e}", self.step_bound());
        write_matrix(&mut s, "L", &self.gain);
        write_matrix(&mut s, "P", &self.p);
        write_matrix(&mut s, "Q", &self.q);
        if self.w.nrows() > 0 {
            write_matrix(&mut s, "W", &self.w);
        }
        s
    }
}

fn write_matrix(s: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(s, "{name}");
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(s, "  {}", row.join(" "));
    }
}

/// Evaluates the certificate. A violated LMI is reported through
/// `valid = false` and `lmi_margin`, not as an error.
#[allow(clippy::too_many_arguments)]
pub fn certify(
    sys: &LtiSystem,
    gain: &DMatrix<f64>,
    p: &DMatrix<f64>,
    w: Option<&DMatrix<f64>>,
    q: &DMatrix<f64>,
    prob: &CondensedProblem,
    lf_mode: SmoothnessMode,
) -> Result<StabilityCertificate> {
    let n = sys.n();
    if gain.nrows() != n || gain.ncols() != sys.p() {
        return Err(Error::dim("observer gain", n, gain.nrows()));
    }
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::dim("Bregman weight P", n, p.nrows()));
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::dim("LMI slack Q", n, q.nrows()));
    }
    if prob.layout().n != n {
        return Err(Error::dim("problem state dimension", n, prob.layout().n));
    }
    let w = match prob.layout().residuals {
        ResidualMode::FixedZero => DMatrix::zeros(0, 0),
        ResidualMode::Free => {
            let w = w.ok_or_else(|| {
                Error::Config("residual weight W is required when residuals are free".into())
            })?;
            let rd = prob.layout().residual_dim();
            if w.nrows() != rd || w.ncols() != rd {
                return Err(Error::dim("residual weight W", rd, w.nrows()));
            }
            linalg::symmetrize(w)
        }
    };
    let p = linalg::symmetrize(p);
    let q = linalg::symmetrize(q);

    let closed = sys.a() - gain * sys.c();
    let spectral_radius = linalg::spectral_radius(&closed);
    let lmi = closed.transpose() * &p * &closed - &p + &q;
    let lmi_margin = linalg::lambda_max(&lmi);

    let full = linalg::block_diag(&[&p, &w]);
    let ev = linalg::sym_eigenvalues(&full);
    let (sigma, gamma) = (ev[0], ev[ev.len() - 1]);
    let qmin = linalg::lambda_min(&q);
    let c = if w.nrows() == 0 {
        0.5 * qmin
    } else {
        0.5 * qmin.min(linalg::lambda_min(&w))
    };
    let lf = smoothness_constant(prob, lf_mode);

    let valid = lmi_margin <= LMI_TOL
        && spectral_radius < 1.0
        && c > 0.0
        && sigma > 0.0
        && sigma <= gamma;
    let (beta_e, beta, alpha) = if sigma > 0.0 && gamma > 0.0 {
        let be = (1.0 - 2.0 * c / gamma).max(0.0);
        (be, be.sqrt(), (gamma / sigma).sqrt())
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };

    Ok(StabilityCertificate {
        gain: gain.clone(),
        p,
        w,
        q,
        c,
        sigma,
        gamma,
        lf,
        lf_mode,
        beta_e,
        beta,
        alpha,
        lmi_margin,
        spectral_radius,
        valid,
    })
}
