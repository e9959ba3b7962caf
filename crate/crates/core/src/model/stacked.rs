use nalgebra::{DVector, DVectorView};

use crate::error::{Error, Result};

/// Whether the model residuals are decision variables or pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResidualMode {
    Free,
    FixedZero,
}

/// Shape of a decision vector: state dimension, effective horizon and
/// whether residual blocks are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    pub n: usize,
    pub horizon: usize,
    pub residuals: ResidualMode,
}

impl Layout {
    pub fn new(n: usize, horizon: usize, residuals: ResidualMode) -> Self {
        Self {
            n,
            horizon,
            residuals,
        }
    }

    /// `(horizon + 1) n` with free residuals, `n` otherwise.
    pub fn dim(&self) -> usize {
        self.n + self.residual_dim()
    }

    pub fn residual_dim(&self) -> usize {
        match self.residuals {
            ResidualMode::Free => self.horizon * self.n,
            ResidualMode::FixedZero => 0,
        }
    }

    pub fn with_horizon(self, horizon: usize) -> Self {
        Self { horizon, ..self }
    }
}

/// `z = [x_{k-h}; w_{k-h}; ...; w_{k-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedVector {
    layout: Layout,
    data: DVector<f64>,
}

impl StackedVector {
    pub fn new(layout: Layout, data: DVector<f64>) -> Result<Self> {
        if data.len() != layout.dim() {
            return Err(Error::dim("stacked vector length", layout.dim(), data.len()));
        }
        Ok(Self { layout, data })
    }

    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            data: DVector::zeros(layout.dim()),
        }
    }

    /// Head state `x` followed by zero residuals.
    pub fn from_head(layout: Layout, x: &DVector<f64>) -> Result<Self> {
        if x.len() != layout.n {
            return Err(Error::dim("head state", layout.n, x.len()));
        }
        let mut z = Self::zeros(layout);
        z.data.rows_mut(0, layout.n).copy_from(x);
        Ok(z)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DVector<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> DVector<f64> {
        self.data
    }

    pub fn head(&self) -> DVectorView<'_, f64> {
        self.data.rows(0, self.layout.n)
    }

    /// Residual `w_{k-h+j}`; zero when residuals are pinned.
    pub fn residual(&self, j: usize) -> DVector<f64> {
        let n = self.layout.n;
        match self.layout.residuals {
            ResidualMode::Free => self.data.rows(n * (j + 1), n).into_owned(),
            ResidualMode::FixedZero => DVector::zeros(n),
        }
    }

    /// Same head, zero residuals, new layout.
    pub fn reshaped(&self, layout: Layout) -> Self {
        let mut z = Self::zeros(layout);
        z.data.rows_mut(0, layout.n).copy_from(&self.head());
        z
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.data - &other.data).norm()
    }
}
