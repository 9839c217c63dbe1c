use serde::{Deserialize, Serialize};

use crate::error::{PfdeError, Result};

/// Equispaced nodes `x_0 = 0 < ... < x_N = length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    length: f64,
    intervals: usize,
}

impl Mesh1D {
    pub const MIN_INTERVALS: usize = 8;

    pub fn new(length: f64, intervals: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(PfdeError::InvalidProblem(format!(
                "mesh length must be positive, got {length}"
            )));
        }
        if intervals < Self::MIN_INTERVALS {
            return Err(PfdeError::InvalidProblem(format!(
                "mesh needs at least {} intervals, got {intervals}",
                Self::MIN_INTERVALS
            )));
        }
        Ok(Self { length, intervals })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// N, the number of intervals.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// N + 1.
    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.length
        } else {
            self.length * k as f64 / self.intervals as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nodes()).map(|k| self.x(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_increasing_and_end_at_length() {
        let m = Mesh1D::new(std::f64::consts::PI, 200).unwrap();
        let xs = m.points();
        assert_eq!(xs.len(), 201);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(xs[200], std::f64::consts::PI);
        assert!((m.spacing() * 200.0 - m.length()).abs() < 1e-15);
    }

    #[test]
    fn rejects_coarse_mesh() {
        assert!(Mesh1D::new(1.0, 7).is_err());
        assert!(Mesh1D::new(-1.0, 16).is_err());
    }
}
