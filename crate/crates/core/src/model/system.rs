use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Discrete-time plant `x+ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    detectable: bool,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        if a.ncols() != n {
            return Err(Error::dim("A columns", n, a.ncols()));
        }
        if b.nrows() != n {
            return Err(Error::dim("B rows", n, b.nrows()));
        }
        if b.ncols() == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        if c.ncols() != n {
            return Err(Error::dim("C columns", n, c.ncols()));
        }
        if c.nrows() == 0 {
            return Err(Error::Config("output dimension must be positive".into()));
        }
        let detectable = pbh_detectable(&a, &c);
        Ok(Self { a, b, c, detectable })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Result of the Hautus test on every mode with modulus >= 1.
    pub fn is_detectable(&self) -> bool {
        self.detectable
    }

    pub fn is_observable(&self) -> bool {
        linalg::rank(&self.observability_matrix(), 1e-10) == self.n()
    }

    /// `[C; CA; ...; CA^{n-1}]`.
    pub fn observability_matrix(&self) -> DMatrix<f64> {
        let (n, p) = (self.n(), self.p());
        let mut out = DMatrix::zeros(n * p, n);
        for (i, ap) in linalg::powers(&self.a, n).iter().enumerate() {
            out.view_mut((i * p, 0), (p, n)).copy_from(&(&self.c * ap));
        }
        out
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

fn pbh_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let p = c.nrows();
    for lambda in linalg::eigenvalues(a) {
        if lambda.norm() < 1.0 - 1e-9 {
            continue;
        }
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n + p, n);
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { lambda } else { Complex::new(0.0, 0.0) };
                pencil[(i, j)] = diag - Complex::new(a[(i, j)], 0.0);
            }
        }
        for i in 0..p {
            for j in 0..n {
                pencil[(n + i, j)] = Complex::new(c[(i, j)], 0.0);
            }
        }
        let sv = pencil.singular_values();
        let top = sv.max().max(1.0);
        if sv.iter().filter(|s| **s > 1e-10 * top).count() < n {
            return false;
        }
    }
    true
}
