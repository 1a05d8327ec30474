use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sampled rotor-angle trajectory `(t, delta, delta_dot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub delta: Vec<T>,
    pub delta_dot: Vec<T>,
    /// Free-form provenance (solver, tolerances, truncation).
    pub metadata: Vec<(String, String)>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(times: Vec<T>, delta: Vec<T>, delta_dot: Vec<T>) -> Result<Self> {
        if times.len() != delta.len() || times.len() != delta_dot.len() {
            return Err(Error::InvalidInput("trajectory columns differ in length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("trajectory times must be strictly increasing".into()));
        }
        Ok(Self { times, delta, delta_dot, metadata: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    /// Largest pointwise deviation of `delta` from another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Trajectory<T>) -> T {
        assert_eq!(self.len(), other.len(), "trajectories sampled on different grids");
        self.delta
            .iter()
            .zip(&other.delta)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// `n` equally spaced samples on `[0, t_max]` (inclusive).
pub fn uniform_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "need at least two samples");
    let step = t_max / T::from_usize(n - 1).unwrap();
    (0..n).map(|i| T::from_usize(i).unwrap() * step).collect()
}

/// `n` logarithmically spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
