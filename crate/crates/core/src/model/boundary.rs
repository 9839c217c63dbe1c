use serde::{Deserialize, Serialize};

use crate::error::{PfdeError, Result};

/// Boundary closure of one species on `[0, length]`.
///
/// Robin reads `alpha * y + dy/dn = 0` with `alpha >= 0` given at the two end
/// nodes; Neumann is Robin with `alpha = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin { alpha_left: f64, alpha_right: f64 },
}

impl BoundaryKind {
    pub fn robin(alpha_left: f64, alpha_right: f64) -> Result<Self> {
        if !(alpha_left >= 0.0 && alpha_right >= 0.0) {
            return Err(PfdeError::InvalidProblem(format!(
                "Robin coefficients must be nonnegative, got ({alpha_left}, {alpha_right})"
            )));
        }
        Ok(BoundaryKind::Robin {
            alpha_left,
            alpha_right,
        })
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryKind::Dirichlet)
    }

    /// `(alpha_left, alpha_right)` for the ghost-node closure, `None` for Dirichlet.
    pub fn flux_alphas(&self) -> Option<(f64, f64)> {
        match *self {
            BoundaryKind::Dirichlet => None,
            BoundaryKind::Neumann => Some((0.0, 0.0)),
            BoundaryKind::Robin {
                alpha_left,
                alpha_right,
            } => Some((alpha_left, alpha_right)),
        }
    }
}

/// Per-species boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    kinds: Vec<BoundaryKind>,
}

impl BoundarySpec {
    pub fn new(kinds: Vec<BoundaryKind>) -> Result<Self> {
        for k in &kinds {
            if let BoundaryKind::Robin {
                alpha_left,
                alpha_right,
            } = *k
            {
                BoundaryKind::robin(alpha_left, alpha_right)?;
            }
        }
        Ok(Self { kinds })
    }

    pub fn uniform(kind: BoundaryKind, n: usize) -> Result<Self> {
        Self::new(vec![kind; n])
    }

    pub fn kind(&self, species: usize) -> BoundaryKind {
        self.kinds[species]
    }

    pub fn kinds(&self) -> &[BoundaryKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}
