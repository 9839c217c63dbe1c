use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::BlockStructure;
use crate::error::{PfdeError, Result};
use crate::model::{ProblemSpec, Segment};
use crate::solver::{build_operator, integrate_with, IntegrateOptions};
use crate::spectrum::SpectrumEstimate;

pub const DEFAULT_TOL: f64 = 1e-2;
/// Late-time infima at or below this count as extinction.
pub const WITNESS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrumRow {
    /// Counted from 1.
    pub block: usize,
    pub lower: f64,
    pub upper: f64,
    pub in_i: bool,
    pub in_j: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub uniformly_persistent: bool,
    pub strictly_persistent_at_zero: bool,
    pub inconclusive_reason: Option<String>,
    pub spectra: Vec<BlockSpectrumRow>,
    pub tol: f64,
}

/// Applies the block criteria: every block in `I` (resp. `J`) must have its
/// spectrum lower bound above `tol`.
pub fn classify_persistence(
    bs: &BlockStructure,
    spectra: &[SpectrumEstimate],
    tol: f64,
) -> Result<Verdict> {
    let find = |j: usize| spectra.iter().find(|s| s.block == j);
    for &j in bs.i_set.iter().chain(&bs.j_set) {
        if find(j).is_none() {
            return Err(PfdeError::MissingSpectrum(j));
        }
    }
    let lower = |j: usize| find(j).map(|s| s.lower).expect("checked above");
    let uniformly_persistent = bs.i_set.iter().all(|&j| lower(j) > tol);
    let strictly_persistent_at_zero = bs.j_set.iter().all(|&j| lower(j) > tol);
    let near_zero: Vec<usize> = bs
        .i_set
        .iter()
        .chain(&bs.j_set)
        .copied()
        .filter(|&j| lower(j).abs() <= tol)
        .collect();
    let inconclusive_reason = (!near_zero.is_empty()).then(|| {
        let mut blocks = near_zero;
        blocks.sort_unstable();
        blocks.dedup();
        format!("spectrum within tolerance of zero (blocks {blocks:?})")
    });
    let rows = (1..=bs.k())
        .filter_map(|j| {
            find(j).map(|s| BlockSpectrumRow {
                block: j,
                lower: s.lower,
                upper: s.upper,
                in_i: bs.i_set.contains(&j),
                in_j: bs.j_set.contains(&j),
            })
        })
        .collect();
    Ok(Verdict {
        uniformly_persistent,
        strictly_persistent_at_zero,
        inconclusive_reason,
        spectra: rows,
        tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalOptions {
    pub trials: usize,
    pub t_end: f64,
    pub seed: u64,
    /// Initial values are drawn uniformly from `[low, high]`.
    pub low: f64,
    pub high: f64,
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        Self {
            trials: 4,
            t_end: 40.0,
            seed: 0,
            low: 0.01,
            high: 1.0,
        }
    }
}

/// Lower bound observed from a strongly positive start.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformWitness {
    /// Per-species infimum over the second half of the run.
    pub psi0: Vec<f64>,
    /// First time from which the solution stays above `psi0`.
    pub t0: f64,
    pub persistent: bool,
}

/// Late infima from a start supported in one species.
#[derive(Debug, Clone, PartialEq)]
pub struct StrictWitness {
    pub support: usize,
    pub late_infimum: Vec<f64>,
    pub persistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    pub uniform: Vec<UniformWitness>,
    pub strict: Vec<StrictWitness>,
    pub floor: f64,
}

/// Per-step, per-species minimum over nodes, skipping Dirichlet ends.
fn minima_along(p: &ProblemSpec, path: &[Array2<f64>]) -> Vec<Vec<f64>> {
    let n = p.species();
    let nodes = p.mesh().nodes();
    path.iter()
        .map(|prof| {
            (0..n)
                .map(|i| {
                    let skip = p.boundary().kind(i).is_dirichlet();
                    let range = if skip { 1..nodes - 1 } else { 0..nodes };
                    range.map(|k| prof[[i, k]]).fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect()
}

fn random_start(
    p: &ProblemSpec,
    rng: &mut ChaCha8Rng,
    opts: &EmpiricalOptions,
    support: Option<usize>,
) -> Result<Segment> {
    let (n, nodes) = (p.species(), p.mesh().nodes());
    let prof = Array2::from_shape_fn((n, nodes), |(i, _)| {
        let v = if opts.high > opts.low {
            rng.random_range(opts.low..=opts.high)
        } else {
            opts.low
        };
        if support.is_none_or(|s| s == i) {
            v
        } else {
            0.0
        }
    });
    let mut prof = prof;
    for i in 0..n {
        if p.boundary().kind(i).is_dirichlet() {
            prof[[i, 0]] = 0.0;
            prof[[i, nodes - 1]] = 0.0;
        }
    }
    Segment::new(vec![prof; p.delay_steps() + 1])
}

/// Simulates from random starts and checks the claims of `verdict` against
/// late-time lower bounds.
pub fn empirical_persistence(
    p: &ProblemSpec,
    _bs: &BlockStructure,
    verdict: &Verdict,
    opts: &EmpiricalOptions,
) -> Result<EmpiricalReport> {
    let op = build_operator(p);
    let total = p.step_index(opts.t_end)?;
    let m = p.delay_steps();
    let n = p.species();
    let run = |trial: usize, support: Option<usize>| -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(trial as u64 * 2 + u64::from(support.is_some()));
        let phi = random_start(p, &mut rng, opts, support)?;
        let iopts = IntegrateOptions {
            record_path: true,
            ..Default::default()
        };
        let tr = integrate_with(p, &op, p.driver(), &phi, opts.t_end, &[], iopts)?;
        Ok(minima_along(p, &tr.path().expect("recorded")[m..]))
    };
    let late = |mins: &[Vec<f64>]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                mins[total / 2..]
                    .iter()
                    .map(|r| r[i])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    let uniform = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mins = run(t, None)?;
            let psi0 = late(&mins);
            let mut first = mins.len();
            while first > 0 && mins[first - 1].iter().zip(&psi0).all(|(v, b)| v >= b) {
                first -= 1;
            }
            Ok(UniformWitness {
                persistent: psi0.iter().all(|&v| v > WITNESS_FLOOR),
                t0: first as f64 * p.time_step(),
                psi0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strict = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let support = t % n;
            let late_infimum = late(&run(t, Some(support))?);
            Ok(StrictWitness {
                support,
                persistent: late_infimum.iter().any(|&v| v > WITNESS_FLOOR),
                late_infimum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if verdict.uniformly_persistent {
        if let Some(w) = uniform.iter().find(|w| !w.persistent) {
            return Err(PfdeError::FailedWitness(format!(
                "uniform persistence claimed but late infimum is {:?}",
                w.psi0
            )));
        }
    }
    if verdict.strictly_persistent_at_zero {
        if let Some(w) = strict.iter().find(|w| !w.persistent) {
            return Err(PfdeError::FailedWitness(format!(
                "strict persistence claimed but the start supported in species {} dies out: {:?}",
                w.support + 1,
                w.late_infimum
            )));
        }
    }
    Ok(EmpiricalReport {
        uniform,
        strict,
        floor: WITNESS_FLOOR,
    })
}
