//! Second-order finite-difference Laplacian with boundary closures and the
//! cached implicit-stage factorizations.
//!
//! Interior rows are `d (u[k-1] - 2 u[k] + u[k+1]) / dx^2`. Neumann and Robin
//! ends eliminate a ghost node through `alpha u + du/dn = 0`, which gives the
//! left row `d (2 (u[1] - u[0]) / dx^2 - 2 alpha u[0] / dx)` and its mirror on
//! the right. Dirichlet end rows are zero and the end values are pinned.

use ndarray::{Array2, ArrayView1, ArrayViewMut1};

use crate::model::{BoundaryKind, ProblemSpec};

/// Row `k` holds `lower[k] u[k-1] + diag[k] u[k] + upper[k] u[k+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: ArrayView1<f64>, mut out: ArrayViewMut1<f64>) {
        let n = self.len();
        for k in 0..n {
            let mut acc = self.diag[k] * u[k];
            if k > 0 {
                acc += self.lower[k] * u[k - 1];
            }
            if k + 1 < n {
                acc += self.upper[k] * u[k + 1];
            }
            out[k] = acc;
        }
    }

    /// `I + c * self`.
    pub fn shifted_identity(&self, c: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|v| c * v).collect(),
            diag: self.diag.iter().map(|v| 1.0 + c * v).collect(),
            upper: self.upper.iter().map(|v| c * v).collect(),
        }
    }

    /// Thomas factorization; the matrices used here are strictly diagonally
    /// dominant so no pivoting is needed.
    pub fn factor(&self) -> TridiagonalLu {
        let n = self.len();
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_upper = 0.0;
        for k in 0..n {
            let pivot = self.diag[k]
                - if k > 0 {
                    self.lower[k] * prev_upper
                } else {
                    0.0
                };
            inv_pivot[k] = 1.0 / pivot;
            upper_mod[k] = if k + 1 < n {
                self.upper[k] * inv_pivot[k]
            } else {
                0.0
            };
            prev_upper = upper_mod[k];
        }
        TridiagonalLu {
            lower: self.lower.clone(),
            upper_mod,
            inv_pivot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalLu {
    pub fn solve_in_place(&self, mut rhs: ArrayViewMut1<f64>) {
        let n = self.inv_pivot.len();
        rhs[0] *= self.inv_pivot[0];
        for k in 1..n {
            rhs[k] = (rhs[k] - self.lower[k] * rhs[k - 1]) * self.inv_pivot[k];
        }
        for k in (0..n.saturating_sub(1)).rev() {
            rhs[k] -= self.upper_mod[k] * rhs[k + 1];
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpeciesOperator {
    pub kind: BoundaryKind,
    pub diffusion: f64,
    /// `d Delta` with the boundary closure.
    pub stencil: Tridiagonal,
    /// `I + h (1 - theta) d Delta`.
    explicit: Tridiagonal,
    /// Factorization of `I - h theta d Delta`.
    implicit: TridiagonalLu,
}

/// Per-species diffusion operators for one problem and one time step.
#[derive(Debug, Clone)]
pub struct DiscreteDiffusionOperator {
    species: Vec<SpeciesOperator>,
    theta: f64,
    time_step: f64,
}

pub fn laplacian_stencil(kind: BoundaryKind, diffusion: f64, nodes: usize, dx: f64) -> Tridiagonal {
    let c = diffusion / (dx * dx);
    let mut lower = vec![c; nodes];
    let mut diag = vec![-2.0 * c; nodes];
    let mut upper = vec![c; nodes];
    lower[0] = 0.0;
    upper[nodes - 1] = 0.0;
    let last = nodes - 1;
    match kind.flux_alphas() {
        None => {
            for k in [0, last] {
                lower[k] = 0.0;
                diag[k] = 0.0;
                upper[k] = 0.0;
            }
        }
        Some((alpha_left, alpha_right)) => {
            upper[0] = 2.0 * c;
            diag[0] = -2.0 * c - 2.0 * diffusion * alpha_left / dx;
            lower[last] = 2.0 * c;
            diag[last] = -2.0 * c - 2.0 * diffusion * alpha_right / dx;
        }
    }
    Tridiagonal { lower, diag, upper }
}

impl DiscreteDiffusionOperator {
    pub fn new(p: &ProblemSpec, theta: f64) -> Self {
        assert!(
            (0.5..=1.0).contains(&theta),
            "theta must lie in [1/2, 1], got {theta}"
        );
        let h = p.time_step();
        let dx = p.mesh().spacing();
        let nodes = p.mesh().nodes();
        let species = p
            .diffusion()
            .iter()
            .zip(p.boundary().kinds())
            .map(|(&d, &kind)| {
                let stencil = laplacian_stencil(kind, d, nodes, dx);
                let explicit = stencil.shifted_identity(h * (1.0 - theta));
                let implicit = stencil.shifted_identity(-h * theta).factor();
                SpeciesOperator {
                    kind,
                    diffusion: d,
                    stencil,
                    explicit,
                    implicit,
                }
            })
            .collect();
        Self {
            species,
            theta,
            time_step: h,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species(&self, i: usize) -> &SpeciesOperator {
        &self.species[i]
    }

    /// Operator on the given subset of species, sharing the factorizations.
    pub fn restrict(&self, species: &[usize]) -> Self {
        Self {
            species: species.iter().map(|&i| self.species[i].clone()).collect(),
            theta: self.theta,
            time_step: self.time_step,
        }
    }

    /// `d_i Delta u` for row `u` of species `i`.
    pub fn apply(&self, i: usize, u: ArrayView1<f64>, out: ArrayViewMut1<f64>) {
        self.species[i].stencil.apply(u, out);
    }

    /// One IMEX step:
    /// `out_i = (I - h theta L_i)^{-1} [(I + h (1 - theta) L_i) u_i + h forcing_i]`,
    /// with Dirichlet end values pinned to zero.
    pub fn advance(&self, current: &Array2<f64>, forcing: &Array2<f64>, out: &mut Array2<f64>) {
        let h = self.time_step;
        for (i, sp) in self.species.iter().enumerate() {
            let mut row = out.row_mut(i);
            sp.explicit.apply(current.row(i), row.view_mut());
            row.scaled_add(h, &forcing.row(i));
            if sp.kind.is_dirichlet() {
                let last = row.len() - 1;
                row[0] = 0.0;
                row[last] = 0.0;
            }
            sp.implicit.solve_in_place(row);
        }
    }
}

/// Builds the operator with the Crank-Nicolson weight `theta = 1/2`.
pub fn build_operator(p: &ProblemSpec) -> DiscreteDiffusionOperator {
    DiscreteDiffusionOperator::new(p, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundarySpec, DriverState, Mesh1D, ReactionTerm};
    use ndarray::Array1;
    use std::f64::consts::PI;

    fn problem(kind: BoundaryKind, length: f64, intervals: usize, d: f64) -> ProblemSpec {
        ProblemSpec::new(
            vec![d],
            Mesh1D::new(length, intervals).unwrap(),
            BoundarySpec::uniform(kind, 1).unwrap(),
            ReactionTerm::zero(1),
            DriverState::autonomous(),
            256,
        )
        .unwrap()
    }

    fn apply(op: &DiscreteDiffusionOperator, u: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(u.len());
        op.apply(0, u.view(), out.view_mut());
        out
    }

    #[test]
    fn neumann_annihilates_constants() {
        let p = problem(BoundaryKind::Neumann, 2.0, 40, 0.7);
        let op = build_operator(&p);
        let out = apply(&op, &Array1::from_elem(41, 3.25));
        assert!(out.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn dirichlet_sine_is_an_eigenfunction() {
        let d = 1.3;
        let p = problem(BoundaryKind::Dirichlet, PI, 200, d);
        let op = build_operator(&p);
        let xs = p.mesh().points();
        let mut u = Array1::from_iter(xs.iter().map(|x| x.sin()));
        u[0] = 0.0;
        u[200] = 0.0;
        let out = apply(&op, &u);
        let err = (1..200)
            .map(|k| (out[k] + d * xs[k].sin()).abs())
            .fold(0.0_f64, f64::max);
        assert!(err <= 1e-3, "max error {err}");
    }

    #[test]
    fn robin_ghost_node_rows() {
        let (d, alpha, dx) = (0.8, 1.0, 0.1);
        let s = laplacian_stencil(BoundaryKind::robin(alpha, alpha).unwrap(), d, 11, dx);
        // d * (2 (u1 - u0) / dx^2 - 2 alpha u0 / dx)
        let u0 = 0.3;
        let u1 = 0.7;
        let row0 = s.diag[0] * u0 + s.upper[0] * u1;
        let expected = d * (2.0 * (u1 - u0) / (dx * dx) - 2.0 * alpha * u0 / dx);
        assert!((row0 - expected).abs() < 1e-12);
        let row_last = s.lower[10] * u1 + s.diag[10] * u0;
        assert!((row_last - expected).abs() < 1e-12);
        // Taylor check: for u = exp(alpha x) (satisfying u'(0) = alpha u(0))
        // the row approximates d u''(0) = d alpha^2 to first order in dx.
        let s = laplacian_stencil(BoundaryKind::robin(alpha, 0.0).unwrap(), d, 1001, 1e-3);
        let row0 = s.diag[0] * 1.0 + s.upper[0] * (alpha * 1e-3_f64).exp();
        assert!((row0 - d * alpha * alpha).abs() < 2e-3);
    }

    fn weighted_dot(u: &Array1<f64>, v: &Array1<f64>) -> f64 {
        let n = u.len();
        (0..n)
            .map(|k| {
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                w * u[k] * v[k]
            })
            .sum()
    }

    #[test]
    fn symmetric_and_sign_definite_in_trapezoid_inner_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (kind, strict) in [
            (BoundaryKind::Neumann, false),
            (BoundaryKind::Dirichlet, true),
            (BoundaryKind::robin(1.0, 0.5).unwrap(), true),
        ] {
            let p = problem(kind, 1.5, 30, 0.9);
            let op = build_operator(&p);
            for _ in 0..5 {
                let mut u = Array1::from_iter((0..31).map(|_| rng.random_range(-1.0..1.0)));
                let mut v = Array1::from_iter((0..31).map(|_| rng.random_range(-1.0..1.0)));
                if kind.is_dirichlet() {
                    for w in [&mut u, &mut v] {
                        w[0] = 0.0;
                        w[30] = 0.0;
                    }
                }
                let lu = apply(&op, &u);
                let lv = apply(&op, &v);
                let asym = (weighted_dot(&lu, &v) - weighted_dot(&u, &lv)).abs();
                assert!(asym < 1e-9, "{kind:?} asymmetry {asym}");
                let rq = weighted_dot(&lu, &u) / weighted_dot(&u, &u);
                if strict {
                    assert!(rq < 0.0, "{kind:?} Rayleigh quotient {rq}");
                } else {
                    assert!(rq <= 1e-12, "{kind:?} Rayleigh quotient {rq}");
                }
            }
        }
    }

    #[test]
    fn thomas_solver_matches_dense_product() {
        let t = Tridiagonal {
            lower: vec![0.0, -1.0, -0.5, -2.0],
            diag: vec![4.0, 5.0, 3.0, 6.0],
            upper: vec![1.0, -1.0, 0.5, 0.0],
        };
        let x = Array1::from(vec![1.0, -2.0, 0.5, 3.0]);
        let mut b = Array1::zeros(4);
        t.apply(x.view(), b.view_mut());
        t.factor().solve_in_place(b.view_mut());
        for k in 0..4 {
            assert!((b[k] - x[k]).abs() < 1e-14);
        }
    }
}
