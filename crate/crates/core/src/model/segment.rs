//! Delay-history states `phi in C([-1, 0], E)` sampled on the delay grid.

use ndarray::Array2;

use crate::error::{PfdeError, Result};
use crate::model::Mesh1D;

/// Order relation between two segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentOrder {
    Leq,
    Geq,
    Equal,
    Incomparable,
}

/// `M + 1` spatial profiles at `s_m = -1 + m / M`, oldest first.
///
/// Each profile is an `n x (N + 1)` array (species by node).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    history: Vec<Array2<f64>>,
}

impl Segment {
    pub const MIN_DELAY_STEPS: usize = 4;

    pub fn new(history: Vec<Array2<f64>>) -> Result<Self> {
        if history.len() < Self::MIN_DELAY_STEPS + 1 {
            return Err(PfdeError::ShapeMismatch(format!(
                "segment needs at least {} profiles, got {}",
                Self::MIN_DELAY_STEPS + 1,
                history.len()
            )));
        }
        let shape = history[0].dim();
        if history.iter().any(|p| p.dim() != shape) {
            return Err(PfdeError::ShapeMismatch(
                "segment profiles differ in shape".into(),
            ));
        }
        if history.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PfdeError::InvalidProblem(
                "segment contains non-finite values".into(),
            ));
        }
        Ok(Self { history })
    }

    /// `phi(s, x) = f(species, s, x)`.
    pub fn from_fn(
        species: usize,
        mesh: &Mesh1D,
        delay_steps: usize,
        f: impl Fn(usize, f64, f64) -> f64,
    ) -> Result<Self> {
        let xs = mesh.points();
        let history = (0..=delay_steps)
            .map(|m| {
                let s = -1.0 + m as f64 / delay_steps as f64;
                Array2::from_shape_fn((species, xs.len()), |(i, k)| f(i, s, xs[k]))
            })
            .collect();
        Self::new(history)
    }

    /// Every profile equal to `values[i]` on species `i`.
    pub fn constant(values: &[f64], nodes: usize, delay_steps: usize) -> Result<Self> {
        let p = Array2::from_shape_fn((values.len(), nodes), |(i, _)| values[i]);
        Self::new(vec![p; delay_steps + 1])
    }

    pub fn zeros(species: usize, nodes: usize, delay_steps: usize) -> Self {
        Self {
            history: vec![Array2::zeros((species, nodes)); delay_steps + 1],
        }
    }

    pub fn species(&self) -> usize {
        self.history[0].nrows()
    }

    pub fn nodes(&self) -> usize {
        self.history[0].ncols()
    }

    /// M.
    pub fn delay_steps(&self) -> usize {
        self.history.len() - 1
    }

    pub fn history(&self) -> &[Array2<f64>] {
        &self.history
    }

    pub fn into_history(self) -> Vec<Array2<f64>> {
        self.history
    }

    pub fn profile(&self, m: usize) -> &Array2<f64> {
        &self.history[m]
    }

    /// `phi(0)`.
    pub fn newest(&self) -> &Array2<f64> {
        self.history.last().expect("non-empty")
    }

    /// `phi(-1)`.
    pub fn oldest(&self) -> &Array2<f64> {
        &self.history[0]
    }

    /// Sup-norm over species, nodes and delay-grid times.
    pub fn norm(&self) -> f64 {
        self.history
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn same_shape(&self, other: &Segment) -> bool {
        self.history.len() == other.history.len() && self.history[0].dim() == other.history[0].dim()
    }

    fn check_shape(&self, other: &Segment) -> Result<()> {
        if !self.same_shape(other) {
            return Err(PfdeError::ShapeMismatch(format!(
                "segments with {} x {:?} and {} x {:?} profiles",
                self.history.len(),
                self.history[0].dim(),
                other.history.len(),
                other.history[0].dim()
            )));
        }
        Ok(())
    }

    /// Nodewise order over all stored profiles.
    pub fn compare(&self, other: &Segment) -> Result<SegmentOrder> {
        self.check_shape(other)?;
        let (mut le, mut ge) = (true, true);
        for (a, b) in self
            .history
            .iter()
            .flatten()
            .zip(other.history.iter().flatten())
        {
            le &= a <= b;
            ge &= a >= b;
            if !le && !ge {
                return Ok(SegmentOrder::Incomparable);
            }
        }
        Ok(match (le, ge) {
            (true, true) => SegmentOrder::Equal,
            (true, false) => SegmentOrder::Leq,
            (false, true) => SegmentOrder::Geq,
            (false, false) => SegmentOrder::Incomparable,
        })
    }

    /// `max(self - other)` over all entries; `<= 0` means `self <= other`.
    pub fn max_excess_over(&self, other: &Segment) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .history
            .iter()
            .flatten()
            .zip(other.history.iter().flatten())
            .fold(f64::NEG_INFINITY, |acc, (a, b)| acc.max(a - b)))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Segment) -> Result<Segment> {
        self.check_shape(other)?;
        let history = self
            .history
            .iter()
            .zip(&other.history)
            .map(|(a, b)| a + &(b * c))
            .collect();
        Ok(Segment { history })
    }

    pub fn scaled(&self, c: f64) -> Segment {
        Segment {
            history: self.history.iter().map(|p| p * c).collect(),
        }
    }

    /// Sup-norm of `self - other`.
    pub fn distance(&self, other: &Segment) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .history
            .iter()
            .flatten()
            .zip(other.history.iter().flatten())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Rows `species` of every profile.
    pub fn restrict(&self, species: &[usize]) -> Segment {
        let history = self
            .history
            .iter()
            .map(|p| Array2::from_shape_fn((species.len(), p.ncols()), |(r, k)| p[[species[r], k]]))
            .collect();
        Segment { history }
    }
}

/// Nodewise order of two segments.
pub fn segment_compare(phi: &Segment, psi: &Segment) -> Result<SegmentOrder> {
    phi.compare(psi)
}

pub fn segment_norm(phi: &Segment) -> f64 {
    phi.norm()
}
