use crate::error::{PfdeError, Result};
use crate::model::{BoundarySpec, DriverState, Mesh1D, ReactionTerm, Segment};

/// Tolerance for Dirichlet compatibility of ingested segments.
pub const DIRICHLET_TOL: f64 = 1e-12;

/// The delayed reaction-diffusion family on `[0, length]` with unit delay.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    diffusion: Vec<f64>,
    mesh: Mesh1D,
    boundary: BoundarySpec,
    reaction: ReactionTerm,
    driver: DriverState,
    delay_steps: usize,
}

impl ProblemSpec {
    pub fn new(
        diffusion: Vec<f64>,
        mesh: Mesh1D,
        boundary: BoundarySpec,
        reaction: ReactionTerm,
        driver: DriverState,
        delay_steps: usize,
    ) -> Result<Self> {
        let n = diffusion.len();
        if n == 0 {
            return Err(PfdeError::InvalidProblem(
                "at least one species is required".into(),
            ));
        }
        if let Some(d) = diffusion.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(PfdeError::InvalidProblem(format!(
                "diffusion coefficients must be strictly positive, got {d}"
            )));
        }
        if boundary.len() != n {
            return Err(PfdeError::InvalidProblem(format!(
                "{} boundary conditions for {n} species",
                boundary.len()
            )));
        }
        if reaction.dim() != n {
            return Err(PfdeError::InvalidProblem(format!(
                "reaction has {} components for {n} species",
                reaction.dim()
            )));
        }
        if delay_steps < Segment::MIN_DELAY_STEPS {
            return Err(PfdeError::InvalidProblem(format!(
                "delay_steps must be at least {}, got {delay_steps}",
                Segment::MIN_DELAY_STEPS
            )));
        }
        if driver.frequencies().iter().any(|f| !f.is_finite()) {
            return Err(PfdeError::InvalidProblem(
                "driver frequencies must be finite".into(),
            ));
        }
        reaction.validate(driver.dim())?;
        Ok(Self {
            diffusion,
            mesh,
            boundary,
            reaction,
            driver,
            delay_steps,
        })
    }

    pub fn species(&self) -> usize {
        self.diffusion.len()
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn reaction(&self) -> &ReactionTerm {
        &self.reaction
    }

    pub fn driver(&self) -> &DriverState {
        &self.driver
    }

    /// M; the time step is `1 / M`.
    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn time_step(&self) -> f64 {
        1.0 / self.delay_steps as f64
    }

    /// Grid index of time `t`, or an error if `t` is not a multiple of `h`.
    pub fn step_index(&self, t: f64) -> Result<usize> {
        let r = t * self.delay_steps as f64;
        let n = r.round();
        if !(t.is_finite() && t >= 0.0) || (r - n).abs() > 1e-9 * r.abs().max(1.0) {
            return Err(PfdeError::OffGrid(t));
        }
        Ok(n as usize)
    }

    pub fn with_reaction(&self, reaction: ReactionTerm) -> Result<Self> {
        Self::new(
            self.diffusion.clone(),
            self.mesh.clone(),
            self.boundary.clone(),
            reaction,
            self.driver.clone(),
            self.delay_steps,
        )
    }

    pub fn with_driver(&self, driver: DriverState) -> Result<Self> {
        Self::new(
            self.diffusion.clone(),
            self.mesh.clone(),
            self.boundary.clone(),
            self.reaction.clone(),
            driver,
            self.delay_steps,
        )
    }

    /// Checks shape and Dirichlet compatibility; returns a copy with Dirichlet
    /// boundary values set to exactly zero.
    pub fn admit_segment(&self, phi: &Segment) -> Result<Segment> {
        self.admit_segment_for(phi, &(0..self.species()).collect::<Vec<_>>())
    }

    /// As [`admit_segment`](Self::admit_segment) for a segment whose rows are
    /// the given species.
    pub fn admit_segment_for(&self, phi: &Segment, species: &[usize]) -> Result<Segment> {
        if phi.species() != species.len()
            || phi.nodes() != self.mesh.nodes()
            || phi.delay_steps() != self.delay_steps
        {
            return Err(PfdeError::ShapeMismatch(format!(
                "segment is {} species x {} nodes x {} delay steps, problem needs {} x {} x {}",
                phi.species(),
                phi.nodes(),
                phi.delay_steps(),
                species.len(),
                self.mesh.nodes(),
                self.delay_steps
            )));
        }
        let last = self.mesh.intervals();
        let mut history = phi.history().to_vec();
        for (r, &i) in species.iter().enumerate() {
            if !self.boundary.kind(i).is_dirichlet() {
                continue;
            }
            for p in history.iter_mut() {
                for k in [0, last] {
                    if p[[r, k]].abs() > DIRICHLET_TOL {
                        return Err(PfdeError::InvalidProblem(format!(
                            "species {} has Dirichlet conditions but the initial segment is {} at node {k}",
                            i + 1,
                            p[[r, k]]
                        )));
                    }
                    p[[r, k]] = 0.0;
                }
            }
        }
        Segment::new(history)
    }

    /// Smallest diagonal weight of the explicit half-step
    /// `I + h (1 - theta) L`. The scheme is order preserving (for
    /// quasimonotone reactions and small `h`) when this is positive.
    pub fn explicit_diagonal_weight(&self, theta: f64) -> f64 {
        let dx = self.mesh.spacing();
        let h = self.time_step();
        self.diffusion
            .iter()
            .zip(self.boundary.kinds())
            .map(|(d, kind)| {
                let r = d * h / (dx * dx);
                let robin = kind
                    .flux_alphas()
                    .map(|(l, rr)| l.max(rr) * dx)
                    .unwrap_or(0.0);
                1.0 - 2.0 * (1.0 - theta) * r * (1.0 + robin)
            })
            .fold(f64::INFINITY, f64::min)
    }
}
