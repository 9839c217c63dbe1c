//! Linearized (variational) systems along a trajectory.
//!
//! Along a base solution `z` the linearization reads
//! `v' = D Delta v + A(t, x) v(t) + B(t, x) v(t - 1)` with
//! `A = D_y f(w.t, x, z(t), z(t - 1))` and `B = D_z f(...)`, optionally
//! restricted to the rows and columns of a diagonal block. Coefficients are
//! frozen at the solver grid times, so the linear scheme is exactly the
//! derivative of the nonlinear one.

use ndarray::{Array2, Axis};

use crate::error::{PfdeError, Result};
use crate::model::{DriverState, ProblemSpec, Segment};
use crate::solver::{
    build_operator, integrate_with, DiscreteDiffusionOperator, History, IntegrateOptions,
    Trajectory,
};

/// Largest magnitude tolerated before a linear propagation counts as overflow.
pub const LINEAR_OVERFLOW: f64 = 1e300;

#[derive(Debug, Clone, Copy)]
enum Base<'a> {
    /// `z == 0`, the zero section.
    Zero,
    /// `profiles[n + M] = z(n h)` for `n >= -M`.
    Stored(&'a [Array2<f64>]),
}

/// Jacobians of the reaction along a base solution, evaluated on demand at
/// every grid time and mesh node.
#[derive(Debug, Clone)]
pub struct CoefficientPath<'a> {
    problem: &'a ProblemSpec,
    driver0: DriverState,
    base: Base<'a>,
    block: Vec<usize>,
}

/// Row-major `d x d` matrices per node at one grid time.
#[derive(Debug, Clone)]
pub struct StepCoefficients {
    pub dim: usize,
    pub current: Vec<f64>,
    pub delayed: Vec<f64>,
}

impl StepCoefficients {
    pub fn new(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            current: vec![0.0; nodes * dim * dim],
            delayed: vec![0.0; nodes * dim * dim],
        }
    }

    pub fn at_node(&self, k: usize) -> (&[f64], &[f64]) {
        let s = self.dim * self.dim;
        (
            &self.current[k * s..(k + 1) * s],
            &self.delayed[k * s..(k + 1) * s],
        )
    }
}

fn full_block(p: &ProblemSpec, block: Option<&[usize]>) -> Result<Vec<usize>> {
    let n = p.species();
    let block = block
        .map(|b| b.to_vec())
        .unwrap_or_else(|| (0..n).collect());
    if block.is_empty() || block.iter().any(|&i| i >= n) {
        return Err(PfdeError::ShapeMismatch(format!(
            "block {block:?} is not a nonempty subset of 0..{n}"
        )));
    }
    Ok(block)
}

impl<'a> CoefficientPath<'a> {
    /// Linearization along `z == 0` starting from driver state `w`.
    pub fn zero_section(
        p: &'a ProblemSpec,
        w: &DriverState,
        block: Option<&[usize]>,
    ) -> Result<Self> {
        Ok(Self {
            problem: p,
            driver0: w.clone(),
            base: Base::Zero,
            block: full_block(p, block)?,
        })
    }

    /// Linearization along stored profiles, `profiles[n + M] = z(n h)`.
    pub fn from_profiles(
        p: &'a ProblemSpec,
        w: &DriverState,
        profiles: &'a [Array2<f64>],
        block: Option<&[usize]>,
    ) -> Result<Self> {
        let m = p.delay_steps();
        if profiles.len() < m + 1 {
            return Err(PfdeError::WindowTooShort {
                needed: m + 1,
                available: profiles.len(),
            });
        }
        Ok(Self {
            problem: p,
            driver0: w.clone(),
            base: Base::Stored(profiles),
            block: full_block(p, block)?,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn driver(&self) -> &DriverState {
        &self.driver0
    }

    /// Species indices of the block, in the order used by the path.
    pub fn block(&self) -> &[usize] {
        &self.block
    }

    pub fn dim(&self) -> usize {
        self.block.len()
    }

    /// Number of steps that can be taken, `None` if unbounded.
    pub fn horizon(&self) -> Option<usize> {
        match self.base {
            Base::Zero => None,
            Base::Stored(p) => Some(p.len() - self.problem.delay_steps() - 1),
        }
    }

    /// Fills the block Jacobians at grid step `n`.
    pub fn coefficients_at(&self, n: usize, out: &mut StepCoefficients) -> Result<()> {
        if let Some(h) = self.horizon() {
            if n > h {
                return Err(PfdeError::WindowTooShort {
                    needed: n,
                    available: h,
                });
            }
        }
        let p = self.problem;
        let full = p.species();
        let m = p.delay_steps();
        let w = self.driver0.advance(n as f64 * p.time_step());
        let xs = p.mesh().points();
        let mut y = vec![0.0; full];
        let mut z = vec![0.0; full];
        let mut ja = vec![0.0; full * full];
        let mut jb = vec![0.0; full * full];
        let d = self.block.len();
        for (k, &x) in xs.iter().enumerate() {
            if let Base::Stored(profiles) = self.base {
                let (cur, del) = (&profiles[n + m], &profiles[n]);
                for i in 0..full {
                    y[i] = cur[[i, k]];
                    z[i] = del[[i, k]];
                }
            }
            p.reaction()
                .jacobians_into(w.angles(), x, &y, &z, &mut ja, &mut jb);
            let off = k * d * d;
            for (r, &i) in self.block.iter().enumerate() {
                for (c, &j) in self.block.iter().enumerate() {
                    out.current[off + r * d + c] = ja[i * full + j];
                    out.delayed[off + r * d + c] = jb[i * full + j];
                }
            }
        }
        Ok(())
    }

    /// `(A, B)` at grid step `n` and node `k`.
    pub fn matrices_at(&self, n: usize, k: usize) -> Result<(Array2<f64>, Array2<f64>)> {
        let mut c = StepCoefficients::new(self.dim(), self.problem.mesh().nodes());
        self.coefficients_at(n, &mut c)?;
        let (a, b) = c.at_node(k);
        let d = self.dim();
        Ok((
            Array2::from_shape_vec((d, d), a.to_vec()).expect("d x d"),
            Array2::from_shape_vec((d, d), b.to_vec()).expect("d x d"),
        ))
    }
}

/// Coefficient path along a trajectory recorded with its full path.
pub fn linearize_along<'a>(
    p: &'a ProblemSpec,
    tr: &'a Trajectory,
    block: Option<&[usize]>,
) -> Result<CoefficientPath<'a>> {
    let profiles = tr.path().ok_or(PfdeError::WindowTooShort {
        needed: tr.steps() + p.delay_steps() + 1,
        available: 0,
    })?;
    CoefficientPath::from_profiles(p, tr.initial_driver(), profiles, block)
}

/// Linear IMEX stepper with frozen coefficients.
#[derive(Debug, Clone)]
pub struct LinearIntegrator<'p, 'a> {
    path: &'p CoefficientPath<'a>,
    op: DiscreteDiffusionOperator,
    step: usize,
    start: usize,
    history: History,
    coeffs: StepCoefficients,
    forcing: Array2<f64>,
    spare: Array2<f64>,
}

impl<'p, 'a> LinearIntegrator<'p, 'a> {
    /// Starts at grid step `start` of the path with history `psi`.
    pub fn new(
        path: &'p CoefficientPath<'a>,
        op: &DiscreteDiffusionOperator,
        start: usize,
        psi: &Segment,
    ) -> Result<Self> {
        let p = path.problem();
        let psi = p.admit_segment_for(psi, path.block())?;
        let op = op.restrict(path.block());
        let shape = psi.newest().dim();
        Ok(Self {
            path,
            op,
            step: start,
            start,
            history: History::from_segment(&psi),
            coeffs: StepCoefficients::new(path.dim(), shape.1),
            forcing: Array2::zeros(shape),
            spare: Array2::zeros(shape),
        })
    }

    /// Time elapsed since the start of this integration.
    pub fn elapsed(&self) -> f64 {
        (self.step - self.start) as f64 * self.path.problem().time_step()
    }

    pub fn steps_taken(&self) -> usize {
        self.step - self.start
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn segment(&self) -> Segment {
        self.history.to_segment()
    }

    pub fn scale(&mut self, c: f64) {
        self.history.scale(c);
    }

    pub fn step(&mut self) -> Result<()> {
        self.path.coefficients_at(self.step, &mut self.coeffs)?;
        let d = self.coeffs.dim;
        let (cur, del) = (self.history.newest(), self.history.delayed());
        for k in 0..cur.ncols() {
            let (a, b) = self.coeffs.at_node(k);
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += a[r * d + c] * cur[[c, k]] + b[r * d + c] * del[[c, k]];
                }
                self.forcing[[r, k]] = acc;
            }
        }
        self.op.advance(cur, &self.forcing, &mut self.spare);
        if self.spare.iter().any(|v| !(v.abs() <= LINEAR_OVERFLOW)) {
            let h = self.path.problem().time_step();
            return Err(PfdeError::NumericalBlowup {
                time: self.elapsed() + h,
                last_valid_time: self.elapsed(),
            });
        }
        let next = std::mem::replace(&mut self.spare, Array2::zeros((0, 0)));
        self.spare = self.history.push(next);
        self.step += 1;
        Ok(())
    }
}

/// Integrates `v` from `psi` over `[0, t_end]` along the path, returning
/// snapshots of `v_t`.
pub fn integrate_variational(
    p: &ProblemSpec,
    path: &CoefficientPath<'_>,
    psi: &Segment,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let op = build_operator(p);
    integrate_variational_from(p, &op, path, 0, psi, t_end, snapshot_times)
}

/// As [`integrate_variational`] starting at grid step `start` of the path.
pub fn integrate_variational_from(
    p: &ProblemSpec,
    op: &DiscreteDiffusionOperator,
    path: &CoefficientPath<'_>,
    start: usize,
    psi: &Segment,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let total = p.step_index(t_end)?;
    let mut snaps: Vec<usize> = snapshot_times
        .iter()
        .map(|&t| p.step_index(t))
        .collect::<Result<_>>()?;
    snaps.sort_unstable();
    let mut integ = LinearIntegrator::new(path, op, start, psi)?;
    let mut snapshots = Vec::with_capacity(snaps.len());
    let mut next = 0;
    loop {
        while next < snaps.len() && snaps[next] == integ.steps_taken() {
            snapshots.push((integ.elapsed(), integ.segment()));
            next += 1;
        }
        if integ.steps_taken() >= total {
            break;
        }
        integ.step()?;
    }
    let w = path.driver().advance(start as f64 * p.time_step());
    Ok(Trajectory::from_parts(
        p.time_step(),
        w,
        snapshots,
        integ.elapsed(),
        integ.segment(),
        None,
    ))
}

/// `|| (z_t(phi + eps psi) - z_t(phi)) / eps - v_t(phi, psi) ||` in the sup-norm.
pub fn directional_derivative_check(
    p: &ProblemSpec,
    w: &DriverState,
    phi: &Segment,
    psi: &Segment,
    t: f64,
    eps: f64,
) -> Result<f64> {
    let op = build_operator(p);
    let opts = IntegrateOptions {
        record_path: true,
        ..Default::default()
    };
    let base = integrate_with(p, &op, w, phi, t, &[], opts)?;
    let bumped = integrate_with(
        p,
        &op,
        w,
        &phi.axpy(eps, psi)?,
        t,
        &[],
        IntegrateOptions::default(),
    )?;
    let path = linearize_along(p, &base, None)?;
    let v = integrate_variational_from(p, &op, &path, 0, psi, t, &[])?;
    let quotient = bumped
        .final_segment()
        .axpy(-1.0, base.final_segment())?
        .scaled(1.0 / eps);
    quotient.distance(v.final_segment())
}

/// Minimum over interior nodes and species of the newest profile.
pub fn interior_minimum(seg: &Segment) -> f64 {
    let p = seg.newest();
    let last = p.ncols() - 1;
    p.slice_axis(Axis(1), (1..last).into())
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v))
}
