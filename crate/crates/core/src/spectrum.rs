//! Lyapunov exponents of the linearized semiflow and principal spectra of
//! diagonal-block subsystems over a sampled minimal set `K`.
//!
//! Exponents are measured in the sup-norm over the whole delay window. The
//! linear propagation is renormalized whenever that norm leaves
//! `[1e-6, 1e6]`; the accumulated logarithm is regressed against time.

use std::collections::VecDeque;
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{PfdeError, Result};
use crate::model::{DriverState, ProblemSpec, Segment};
use crate::solver::{build_operator, integrate_with, DiscreteDiffusionOperator, IntegrateOptions};
use crate::variational::{CoefficientPath, LinearIntegrator};

pub const RENORM_LOW: f64 = 1e-6;
pub const RENORM_HIGH: f64 = 1e6;
pub const COLLAPSE: f64 = 1e-300;
pub const ZERO_SECTION_TOL: f64 = 1e-12;

/// How `K` is sampled.
#[derive(Debug, Clone)]
pub enum KSampler {
    /// `K = Omega x {0}`, sampled at the given base points.
    ZeroSection { drivers: Vec<DriverState> },
    /// Segments of a single trajectory after a transient.
    OmegaLimit {
        driver: DriverState,
        seed: Segment,
        t_skip: f64,
        /// Offsets after `t_skip`, on the solver grid.
        sample_offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMode {
    ZeroSection,
    OmegaLimit,
}

impl KSampler {
    pub const DEFAULT_ANGLES_PER_DIM: usize = 16;
    pub const DEFAULT_T_SKIP: f64 = 50.0;

    /// Equispaced grid of `per_dim` angles per driver dimension.
    pub fn zero_section_grid(p: &ProblemSpec, per_dim: usize) -> Self {
        KSampler::ZeroSection {
            drivers: p.driver().angle_grid(per_dim),
        }
    }

    /// `samples` points spaced `spacing` apart after `t_skip`.
    pub fn omega_limit(
        p: &ProblemSpec,
        seed: Segment,
        t_skip: f64,
        samples: usize,
        spacing: f64,
    ) -> Self {
        KSampler::OmegaLimit {
            driver: p.driver().clone(),
            seed,
            t_skip,
            sample_offsets: (0..samples).map(|i| i as f64 * spacing).collect(),
        }
    }

    pub fn mode(&self) -> KMode {
        match self {
            KSampler::ZeroSection { .. } => KMode::ZeroSection,
            KSampler::OmegaLimit { .. } => KMode::OmegaLimit,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            KSampler::ZeroSection { drivers } => drivers.len(),
            KSampler::OmegaLimit { sample_offsets, .. } => sample_offsets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Zero-section mode requires `f(w, x, 0, 0) = 0` at every sampled base
    /// point and mesh node.
    pub fn validate(&self, p: &ProblemSpec) -> Result<()> {
        if self.is_empty() {
            return Err(PfdeError::InvalidProblem("K sampler has no points".into()));
        }
        if let KSampler::ZeroSection { drivers } = self {
            check_zero_section(p, drivers)?;
        }
        Ok(())
    }

    /// Produces the sampled points, with base paths long enough to take
    /// `horizon` further time units from every point.
    pub fn realize(&self, p: &ProblemSpec, horizon: f64) -> Result<RealizedK> {
        self.validate(p)?;
        match self {
            KSampler::ZeroSection { drivers } => Ok(RealizedK {
                mode: KMode::ZeroSection,
                points: drivers
                    .iter()
                    .map(|d| KPoint {
                        driver: d.clone(),
                        step: None,
                    })
                    .collect(),
                profiles: None,
            }),
            KSampler::OmegaLimit {
                driver,
                seed,
                t_skip,
                sample_offsets,
            } => {
                let steps: Vec<usize> = sample_offsets
                    .iter()
                    .map(|o| p.step_index(t_skip + o))
                    .collect::<Result<_>>()?;
                let last = *steps.iter().max().expect("non-empty");
                let extra = p.step_index(horizon)?;
                let t_end = (last + extra) as f64 * p.time_step();
                let op = build_operator(p);
                let opts = IntegrateOptions {
                    record_path: true,
                    ..Default::default()
                };
                let tr = integrate_with(p, &op, driver, seed, t_end, &[], opts)?;
                let points = steps
                    .iter()
                    .map(|&s| KPoint {
                        driver: driver.advance(s as f64 * p.time_step()),
                        step: Some(s),
                    })
                    .collect();
                Ok(RealizedK {
                    mode: KMode::OmegaLimit,
                    points,
                    profiles: tr.path().map(|p| p.to_vec()),
                })
            }
        }
    }
}

pub fn check_zero_section(p: &ProblemSpec, drivers: &[DriverState]) -> Result<()> {
    let n = p.species();
    let zeros = vec![0.0; n];
    let mut f = vec![0.0; n];
    for w in drivers {
        for x in p.mesh().points() {
            p.reaction()
                .eval_into(w.angles(), x, &zeros, &zeros, &mut f);
            if let Some(v) = f.iter().find(|v| v.abs() > ZERO_SECTION_TOL) {
                return Err(PfdeError::ZeroSectionNotInvariant { x, value: *v });
            }
        }
    }
    Ok(())
}

/// One sampled point `(w, phi)` of `K`.
#[derive(Debug, Clone)]
pub struct KPoint {
    pub driver: DriverState,
    /// Grid step of the point along the stored orbit (omega-limit mode).
    pub step: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RealizedK {
    pub mode: KMode,
    pub points: Vec<KPoint>,
    /// Orbit profiles for omega-limit sampling, `profiles[n + M] = z(n h)`.
    profiles: Option<Vec<Array2<f64>>>,
}

impl RealizedK {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(phi(0), phi(-1))` of sample `i`, or `None` for the zero section.
    pub fn state(&self, p: &ProblemSpec, i: usize) -> Option<(&Array2<f64>, &Array2<f64>)> {
        let s = self.points[i].step?;
        let prof = self.profiles.as_ref()?;
        Some((&prof[s + p.delay_steps()], &prof[s]))
    }

    /// Block coefficient path along the orbit of sample `i`.
    pub fn path<'a>(
        &'a self,
        p: &'a ProblemSpec,
        i: usize,
        block: Option<&[usize]>,
    ) -> Result<CoefficientPath<'a>> {
        let pt = &self.points[i];
        match (pt.step, &self.profiles) {
            (Some(s), Some(prof)) => {
                CoefficientPath::from_profiles(p, &pt.driver, &prof[s..], block)
            }
            _ => CoefficientPath::zero_section(p, &pt.driver, block),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Sup over the whole delay window (the segment norm).
    Window,
    /// Sup of the newest profile only.
    Newest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParams {
    pub t_end: f64,
    pub window: f64,
    pub norm: NormKind,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self {
            t_end: 50.0,
            window: 5.0,
            norm: NormKind::Window,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    /// RMS residual of the final-window fit.
    pub residual: f64,
    pub window: f64,
    /// Extremes of the slopes over consecutive windows in the second half
    /// of the horizon; their spread tracks the gap between the inferior and
    /// superior exponents.
    pub window_min_slope: f64,
    pub window_max_slope: f64,
    pub renormalizations: usize,
}

/// Least-squares slope, intercept and RMS residual.
pub fn linear_fit(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let rss: f64 = ts
        .iter()
        .zip(ys)
        .map(|(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

fn sup(p: &Array2<f64>) -> f64 {
    p.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Exponential growth rate of `||v_t||` for the linearized system from `psi0`.
pub fn lyapunov_exponent(
    p: &ProblemSpec,
    path: &CoefficientPath<'_>,
    psi0: &Segment,
    params: LyapunovParams,
) -> Result<LyapunovEstimate> {
    lyapunov_exponent_with(p, &build_operator(p), path, psi0, params)
}

pub fn lyapunov_exponent_with(
    p: &ProblemSpec,
    op: &DiscreteDiffusionOperator,
    path: &CoefficientPath<'_>,
    psi0: &Segment,
    params: LyapunovParams,
) -> Result<LyapunovEstimate> {
    let h = p.time_step();
    if !(params.window >= 2.0 * h && params.t_end >= 10.0 * params.window) {
        return Err(PfdeError::InvalidProblem(format!(
            "need window >= 2h and T >= 10 window, got T = {} and window = {}",
            params.t_end, params.window
        )));
    }
    let total = p.step_index(params.t_end)?;
    let m = p.delay_steps() as isize;
    let mut integ = LinearIntegrator::new(path, op, 0, psi0)?;
    let mut log_scale = 0.0_f64;
    // (step, absolute log sup) with decreasing values
    let mut window: VecDeque<(isize, f64)> = VecDeque::new();
    let push = |window: &mut VecDeque<(isize, f64)>, n: isize, v: f64| {
        while window.back().is_some_and(|&(_, b)| b <= v) {
            window.pop_back();
        }
        window.push_back((n, v));
        while window.front().is_some_and(|&(i, _)| i < n - m) {
            window.pop_front();
        }
    };
    for (j, prof) in integ.history().iter().enumerate() {
        push(&mut window, j as isize - m, sup(prof).ln());
    }
    let mut ts = Vec::with_capacity(total + 1);
    let mut logs = Vec::with_capacity(total + 1);
    let mut renorms = 0;
    for n in 0..=total {
        if n > 0 {
            integ.step()?;
            let newest = log_scale + sup(integ.history().newest()).ln();
            push(&mut window, n as isize, newest);
        }
        let log_norm = match params.norm {
            NormKind::Window => window.front().expect("non-empty").1,
            NormKind::Newest => log_scale + sup(integ.history().newest()).ln(),
        };
        let t = n as f64 * h;
        let scaled = (log_norm - log_scale).exp();
        if !(scaled >= COLLAPSE) {
            return Err(PfdeError::Degenerate { time: t });
        }
        ts.push(t);
        logs.push(log_norm);
        let window_scaled = (window.front().expect("non-empty").1 - log_scale).exp();
        if !(RENORM_LOW..=RENORM_HIGH).contains(&window_scaled) {
            integ.scale(1.0 / window_scaled);
            log_scale += window_scaled.ln();
            renorms += 1;
        }
    }
    let per_window = p.step_index(params.window)?;
    let fit_range = |end: usize| {
        let start = end - per_window;
        linear_fit(&ts[start..=end], &logs[start..=end])
    };
    let (lambda, _, residual) = fit_range(total);
    let (mut lo, mut hi) = (lambda, lambda);
    let mut end = total;
    while end >= per_window && end - per_window >= total / 2 {
        let (s, _, _) = fit_range(end);
        lo = lo.min(s);
        hi = hi.max(s);
        end -= per_window;
    }
    Ok(LyapunovEstimate {
        lambda,
        residual,
        window: params.window,
        window_min_slope: lo,
        window_max_slope: hi,
        renormalizations: renorms,
    })
}

/// Unique real root of `lambda = -d_mu + a + b exp(-lambda)` for `b >= 0`,
/// by Newton iteration to `1e-10`.
pub fn characteristic_root(a: f64, b: f64, d_mu: f64) -> Result<f64> {
    const MAX_ITER: usize = 200;
    if !(b >= 0.0) {
        return Err(PfdeError::InvalidProblem(format!(
            "characteristic_root needs b >= 0, got {b}"
        )));
    }
    // g is increasing and concave, so iterates started left of the root
    // increase monotonically to it
    let mut lambda = a - d_mu;
    for _ in 0..MAX_ITER {
        let e = b * (-lambda).exp();
        let g = lambda + d_mu - a - e;
        let step = g / (1.0 + e);
        lambda -= step;
        if step.abs() <= 1e-10 * lambda.abs().max(1.0) {
            return Ok(lambda);
        }
    }
    Err(PfdeError::NoConvergence(MAX_ITER))
}

/// Per-sample exponent with regression diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleExponent {
    pub sample_id: usize,
    /// `-inf` when the linear solution collapsed.
    pub lambda: f64,
    pub residual: f64,
    pub window_min_slope: f64,
    pub window_max_slope: f64,
}

/// Estimated principal spectrum `[alpha_K, lambda_K]` of one diagonal block.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Block index, counted from 1.
    pub block: usize,
    /// Species of the block, counted from 0.
    pub species: Vec<usize>,
    pub lower: f64,
    pub upper: f64,
    pub samples: Vec<SampleExponent>,
    pub mode: KMode,
}

/// Strictly positive initial segment: 1 at every node except Dirichlet ends.
pub fn positive_initial_segment(p: &ProblemSpec, species: &[usize]) -> Segment {
    let nodes = p.mesh().nodes();
    let prof = Array2::from_shape_fn((species.len(), nodes), |(r, k)| {
        let dirichlet = p.boundary().kind(species[r]).is_dirichlet();
        if dirichlet && (k == 0 || k == nodes - 1) {
            0.0
        } else {
            1.0
        }
    });
    Segment::new(vec![prof; p.delay_steps() + 1]).expect("valid segment")
}

/// Runs the block exponent at every sampled point of `K` and aggregates.
pub fn principal_spectrum(
    p: &ProblemSpec,
    k: &RealizedK,
    block_index: usize,
    species: &[usize],
    params: LyapunovParams,
) -> Result<SpectrumEstimate> {
    let op = build_operator(p);
    let psi0 = positive_initial_segment(p, species);
    let samples = (0..k.len())
        .into_par_iter()
        .map(|i| {
            let path = k.path(p, i, Some(species))?;
            match lyapunov_exponent_with(p, &op, &path, &psi0, params) {
                Ok(est) => Ok(SampleExponent {
                    sample_id: i,
                    lambda: est.lambda,
                    residual: est.residual,
                    window_min_slope: est.window_min_slope,
                    window_max_slope: est.window_max_slope,
                }),
                Err(PfdeError::Degenerate { .. }) => Ok(SampleExponent {
                    sample_id: i,
                    lambda: f64::NEG_INFINITY,
                    residual: f64::NAN,
                    window_min_slope: f64::NEG_INFINITY,
                    window_max_slope: f64::NEG_INFINITY,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lower = samples
        .iter()
        .map(|s| s.lambda)
        .fold(f64::INFINITY, f64::min);
    let upper = samples
        .iter()
        .map(|s| s.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumEstimate {
        block: block_index,
        species: species.to_vec(),
        lower,
        upper,
        samples,
        mode: k.mode,
    })
}

pub const SPECTRUM_CSV_HEADER: &str =
    "block,sample_id,lambda,residual,window_min_slope,window_max_slope";

pub fn write_spectrum_csv<W: Write>(mut w: W, spectra: &[SpectrumEstimate]) -> Result<()> {
    writeln!(w, "{SPECTRUM_CSV_HEADER}")?;
    for s in spectra {
        for e in &s.samples {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.block, e.sample_id, e.lambda, e.residual, e.window_min_slope, e.window_max_slope
            )?;
        }
    }
    Ok(())
}
