//! Nonlinear integrator: IMEX Crank-Nicolson diffusion with explicit,
//! delayed reaction.

mod integrate;
pub mod io;
mod operator;

pub use integrate::{
    integrate, integrate_with, segment_at, solve_damped_diffusion, solve_diffusion_only, History,
    IntegrateOptions, Integrator, SolverOptions, Trajectory,
};
pub use operator::{
    build_operator, laplacian_stencil, DiscreteDiffusionOperator, SpeciesOperator, Tridiagonal,
    TridiagonalLu,
};
