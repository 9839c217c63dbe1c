//! Method of steps in time, method of lines in space.
//!
//! The step is `h = 1 / M`, so the delayed profile `z(t - 1)` is always the
//! oldest entry of a ring buffer of `M + 1` profiles and no interpolation is
//! needed.

use std::collections::VecDeque;

use ndarray::{Array1, Array2};

use crate::error::{PfdeError, Result};
use crate::model::{DriverState, ProblemSpec, Segment};
use crate::solver::{build_operator, DiscreteDiffusionOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Implicit weight of the diffusion stage; 1/2 is Crank-Nicolson.
    pub theta: f64,
    /// Any state value above this magnitude is reported as blowup.
    pub blowup_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            blowup_bound: 1e8,
        }
    }
}

/// The last `M + 1` profiles, oldest first.
#[derive(Debug, Clone)]
pub struct History {
    buf: VecDeque<Array2<f64>>,
}

impl History {
    pub fn from_segment(phi: &Segment) -> Self {
        Self {
            buf: phi.history().iter().cloned().collect(),
        }
    }

    pub fn newest(&self) -> &Array2<f64> {
        self.buf.back().expect("non-empty history")
    }

    /// Profile one delay before the newest.
    pub fn delayed(&self) -> &Array2<f64> {
        self.buf.front().expect("non-empty history")
    }

    /// Drops the oldest profile and appends `p`; returns the dropped buffer
    /// for reuse.
    pub fn push(&mut self, p: Array2<f64>) -> Array2<f64> {
        let old = self.buf.pop_front().expect("non-empty history");
        self.buf.push_back(p);
        old
    }

    pub fn to_segment(&self) -> Segment {
        Segment::new(self.buf.iter().cloned().collect()).expect("history keeps segment invariants")
    }

    pub fn scale(&mut self, c: f64) {
        for p in self.buf.iter_mut() {
            p.mapv_inplace(|v| v * c);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.buf.iter()
    }
}

/// Nonlinear stepper for one trajectory.
#[derive(Debug, Clone)]
pub struct Integrator<'a> {
    problem: &'a ProblemSpec,
    op: &'a DiscreteDiffusionOperator,
    driver0: DriverState,
    steps_taken: usize,
    history: History,
    forcing: Array2<f64>,
    spare: Array2<f64>,
    blowup_bound: f64,
    xs: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(
        problem: &'a ProblemSpec,
        op: &'a DiscreteDiffusionOperator,
        driver: &DriverState,
        phi: &Segment,
        blowup_bound: f64,
    ) -> Result<Self> {
        let phi = problem.admit_segment(phi)?;
        let shape = phi.newest().dim();
        Ok(Self {
            problem,
            op,
            driver0: driver.clone(),
            steps_taken: 0,
            history: History::from_segment(&phi),
            forcing: Array2::zeros(shape),
            spare: Array2::zeros(shape),
            blowup_bound,
            xs: problem.mesh().points(),
        })
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.problem.time_step()
    }

    /// `w . t` at the current time.
    pub fn driver(&self) -> DriverState {
        self.driver0.advance(self.time())
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// `z_t` at the current time.
    pub fn segment(&self) -> Segment {
        self.history.to_segment()
    }

    /// Advances all species and the driver by one step `h`.
    pub fn step(&mut self) -> Result<()> {
        let w = self.driver();
        let angles = w.angles();
        let reaction = self.problem.reaction();
        let (current, delayed) = (self.history.newest(), self.history.delayed());
        let n = current.nrows();
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut f = vec![0.0; n];
        for (k, &x) in self.xs.iter().enumerate() {
            for i in 0..n {
                y[i] = current[[i, k]];
                z[i] = delayed[[i, k]];
            }
            reaction.eval_into(angles, x, &y, &z, &mut f);
            for i in 0..n {
                self.forcing[[i, k]] = f[i];
            }
        }
        self.op.advance(current, &self.forcing, &mut self.spare);
        let bound = self.blowup_bound;
        if self.spare.iter().any(|v| !(v.abs() <= bound)) {
            let h = self.problem.time_step();
            return Err(PfdeError::NumericalBlowup {
                time: self.time() + h,
                last_valid_time: self.time(),
            });
        }
        let next = std::mem::replace(&mut self.spare, Array2::zeros((0, 0)));
        self.spare = self.history.push(next);
        self.steps_taken += 1;
        Ok(())
    }
}

/// Segments `z_t(w, phi)` at requested times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    time_step: f64,
    driver0: DriverState,
    snapshots: Vec<(f64, Segment)>,
    final_time: f64,
    final_window: Segment,
    /// Every profile from `t = -1` to `final_time`, if recorded.
    path: Option<Vec<Array2<f64>>>,
}

impl Trajectory {
    pub(crate) fn from_parts(
        time_step: f64,
        driver0: DriverState,
        snapshots: Vec<(f64, Segment)>,
        final_time: f64,
        final_window: Segment,
        path: Option<Vec<Array2<f64>>>,
    ) -> Self {
        Self {
            time_step,
            driver0,
            snapshots,
            final_time,
            final_window,
            path,
        }
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn delay_steps(&self) -> usize {
        self.final_window.delay_steps()
    }

    pub fn initial_driver(&self) -> &DriverState {
        &self.driver0
    }

    pub fn snapshots(&self) -> &[(f64, Segment)] {
        &self.snapshots
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn final_segment(&self) -> &Segment {
        &self.final_window
    }

    pub fn steps(&self) -> usize {
        (self.final_time / self.time_step).round() as usize
    }

    /// Profiles at grid steps `-M ..= steps()`, if recorded.
    pub fn path(&self) -> Option<&[Array2<f64>]> {
        self.path.as_deref()
    }

    /// Profile `z(n h)` for `n >= -M`, if the full path was recorded.
    pub fn profile_at_step(&self, n: isize) -> Option<&Array2<f64>> {
        let m = self.delay_steps() as isize;
        self.path
            .as_ref()
            .and_then(|p| usize::try_from(n + m).ok().and_then(|i| p.get(i)))
    }

    /// Sup-norm range of every value visited, as `(min, max)` per species.
    pub fn value_range(&self) -> Vec<(f64, f64)> {
        let n = self.final_window.species();
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
        let mut visit = |p: &Array2<f64>| {
            for i in 0..n {
                for &v in p.row(i) {
                    out[i].0 = out[i].0.min(v);
                    out[i].1 = out[i].1.max(v);
                }
            }
        };
        match &self.path {
            Some(path) => path.iter().for_each(&mut visit),
            None => {
                for (_, s) in &self.snapshots {
                    s.history().iter().for_each(&mut visit);
                }
                self.final_window.history().iter().for_each(&mut visit);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrateOptions {
    pub solver: SolverOptions,
    /// Keep every profile so the trajectory can be linearized.
    pub record_path: bool,
}

/// Integrates from `(w, phi)` to time `t_end`, storing the requested snapshots.
pub fn integrate(
    p: &ProblemSpec,
    w: &DriverState,
    phi: &Segment,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let op = build_operator(p);
    integrate_with(
        p,
        &op,
        w,
        phi,
        t_end,
        snapshot_times,
        IntegrateOptions::default(),
    )
}

pub fn integrate_with(
    p: &ProblemSpec,
    op: &DiscreteDiffusionOperator,
    w: &DriverState,
    phi: &Segment,
    t_end: f64,
    snapshot_times: &[f64],
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    let total = p.step_index(t_end)?;
    let mut snap_steps = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        let n = p.step_index(t)?;
        if n > total {
            return Err(PfdeError::TimeNotAvailable(t));
        }
        if snap_steps.last().is_some_and(|&last| n < last) {
            return Err(PfdeError::InvalidProblem(
                "snapshot times must be nondecreasing".into(),
            ));
        }
        snap_steps.push(n);
    }
    let mut integ = Integrator::new(p, op, w, phi, opts.solver.blowup_bound)?;
    let mut path = opts
        .record_path
        .then(|| integ.history().iter().cloned().collect::<Vec<_>>());
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut next_snap = 0;
    loop {
        while next_snap < snap_steps.len() && snap_steps[next_snap] == integ.steps_taken() {
            snapshots.push((integ.time(), integ.segment()));
            next_snap += 1;
        }
        if integ.steps_taken() == total {
            break;
        }
        integ.step()?;
        if let Some(path) = path.as_mut() {
            path.push(integ.history().newest().clone());
        }
    }
    Ok(Trajectory::from_parts(
        p.time_step(),
        w.clone(),
        snapshots,
        integ.time(),
        integ.segment(),
        path,
    ))
}

/// Segment `z_t` of a stored trajectory.
pub fn segment_at(tr: &Trajectory, t: f64) -> Result<Segment> {
    let tol = 1e-9 * t.abs().max(1.0);
    if let Some((_, s)) = tr.snapshots.iter().find(|(ts, _)| (ts - t).abs() <= tol) {
        return Ok(s.clone());
    }
    if (t - tr.final_time).abs() <= tol {
        return Ok(tr.final_window.clone());
    }
    if let Some(path) = &tr.path {
        let r = t / tr.time_step;
        let n = r.round();
        if t >= 0.0 && (r - n).abs() <= 1e-9 * r.abs().max(1.0) && t <= tr.final_time + tol {
            let n = n as usize;
            let m = tr.delay_steps();
            return Segment::new(path[n..=n + m].to_vec());
        }
    }
    Err(PfdeError::TimeNotAvailable(t))
}

/// Diffusion-only propagation with an explicit linear decay `-decay * u`,
/// using the same IMEX stage as the nonlinear solver.
pub fn solve_damped_diffusion(
    p: &ProblemSpec,
    op: &DiscreteDiffusionOperator,
    species: usize,
    z0: &Array1<f64>,
    t: f64,
    decay: f64,
) -> Result<Array1<f64>> {
    let steps = p.step_index(t)?;
    if z0.len() != p.mesh().nodes() {
        return Err(PfdeError::ShapeMismatch(format!(
            "profile has {} nodes, mesh has {}",
            z0.len(),
            p.mesh().nodes()
        )));
    }
    let single = op.restrict(&[species]);
    let mut u = z0.clone().insert_axis(ndarray::Axis(0));
    if single.species(0).kind.is_dirichlet() {
        let last = u.ncols() - 1;
        u[[0, 0]] = 0.0;
        u[[0, last]] = 0.0;
    }
    let mut out = u.clone();
    let mut forcing = Array2::zeros(u.dim());
    for _ in 0..steps {
        forcing.assign(&u);
        forcing.mapv_inplace(|v| -decay * v);
        single.advance(&u, &forcing, &mut out);
        std::mem::swap(&mut u, &mut out);
    }
    Ok(u.row(0).to_owned())
}

/// Approximates `e^{t A_i} z0` with the solver's diffusion stage.
pub fn solve_diffusion_only(
    p: &ProblemSpec,
    species: usize,
    z0: &Array1<f64>,
    t: f64,
) -> Result<Array1<f64>> {
    let op = build_operator(p);
    solve_damped_diffusion(p, &op, species, z0, t, 0.0)
}
