use std::collections::VecDeque;

use nalgebra::DVector;

/// The last `horizon` measurement/input pairs. After `k` pushes the window
/// holds `y_{k-h}, ..., y_{k-1}` with `h = min(k, horizon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementWindow {
    horizon: usize,
    ys: VecDeque<DVector<f64>>,
    us: VecDeque<DVector<f64>>,
    k: usize,
}

impl MeasurementWindow {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            ys: VecDeque::with_capacity(horizon + 1),
            us: VecDeque::with_capacity(horizon + 1),
            k: 0,
        }
    }

    /// Appends `(y_k, u_k)` and advances the clock to `k + 1`.
    pub fn push(&mut self, y: DVector<f64>, u: DVector<f64>) {
        self.ys.push_back(y);
        self.us.push_back(u);
        while self.ys.len() > self.horizon {
            self.ys.pop_front();
            self.us.pop_front();
        }
        self.k += 1;
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.horizon > 0 && self.ys.len() == self.horizon
    }

    /// Time index of the oldest stored measurement.
    pub fn head_time(&self) -> usize {
        self.k - self.ys.len()
    }

    pub fn ys(&self) -> impl ExactSizeIterator<Item = &DVector<f64>> {
        self.ys.iter()
    }

    pub fn us(&self) -> impl ExactSizeIterator<Item = &DVector<f64>> {
        self.us.iter()
    }

    pub fn y(&self, l: usize) -> &DVector<f64> {
        &self.ys[l]
    }

    pub fn u(&self, l: usize) -> &DVector<f64> {
        &self.us[l]
    }
}
