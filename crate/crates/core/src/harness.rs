//! Numerical checks of the structural properties: quasimonotonicity,
//! order preservation, the comparison inequality and linearization
//! consistency.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{PfdeError, Result};
use crate::model::{CatalogId, DriverState, ProblemSpec, Segment, SegmentOrder};
use crate::solver::{
    build_operator, integrate_with, solve_damped_diffusion, IntegrateOptions, Integrator,
    SolverOptions,
};
use crate::variational::directional_derivative_check;

pub const QUASIMONOTONE_TOL: f64 = 1e-12;
pub const ORDER_TOL: f64 = 1e-8;
pub const COMPARISON_REL_TOL: f64 = 1e-6;
pub const LINEAR_EXACT_TOL: f64 = 1e-10;
pub const TAYLOR_RATIO: (f64, f64) = (1.8, 2.2);

/// Axis-aligned box of states, the same for current and delayed values.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StateBox {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }

    /// Per-species `(min, max)` ranges widened by `inflate` times their width.
    pub fn from_ranges(ranges: &[(f64, f64)], inflate: f64) -> Self {
        let (lower, upper) = ranges
            .iter()
            .map(|&(lo, hi)| {
                let pad = inflate * (hi - lo);
                (lo - pad, hi + pad)
            })
            .unzip();
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (i, v) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            *v = if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
        }
    }
}

/// Point at which a sign condition failed.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasimonotoneWitness {
    pub angles: Vec<f64>,
    pub x: f64,
    pub y: Vec<f64>,
    pub y_delayed: Vec<f64>,
    pub row: usize,
    pub col: usize,
    pub delayed: bool,
    pub value: f64,
}

impl fmt::Display for QuasimonotoneWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let which = if self.delayed {
            "df/dy_delayed"
        } else {
            "df/dy"
        };
        write!(
            f,
            "{which}[{}][{}] = {} at angles {:?}, x = {}, y = {:?}, y_delayed = {:?}",
            self.row + 1,
            self.col + 1,
            self.value,
            self.angles,
            self.x,
            self.y,
            self.y_delayed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasimonotoneReport {
    pub pass: bool,
    /// Smallest sampled off-diagonal or delayed Jacobian entry.
    pub worst_margin: f64,
    pub witness: Option<QuasimonotoneWitness>,
    pub samples: usize,
}

fn random_angles(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

/// Samples `(w, x, y, y_delayed)` and checks that off-diagonal `D_y f` and all
/// of `D_{y_delayed} f` are nonnegative.
pub fn check_quasimonotone(
    p: &ProblemSpec,
    samples: usize,
    bx: &StateBox,
    seed: u64,
) -> QuasimonotoneReport {
    assert!(samples >= 1, "need at least one sample");
    let n = p.species();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut y, mut z) = (vec![0.0; n], vec![0.0; n]);
    let (mut ja, mut jb) = (vec![0.0; n * n], vec![0.0; n * n]);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let angles = random_angles(&mut rng, p.driver().dim());
        let x = rng.random_range(0.0..=p.mesh().length());
        bx.sample(&mut rng, &mut y);
        bx.sample(&mut rng, &mut z);
        p.reaction()
            .jacobians_into(&angles, x, &y, &z, &mut ja, &mut jb);
        for i in 0..n {
            for j in 0..n {
                let entries = [(false, ja[i * n + j]), (true, jb[i * n + j])];
                for (delayed, v) in entries {
                    if (!delayed && i == j) || v >= worst {
                        continue;
                    }
                    worst = v;
                    if v < -QUASIMONOTONE_TOL {
                        witness = Some(QuasimonotoneWitness {
                            angles: angles.clone(),
                            x,
                            y: y.clone(),
                            y_delayed: z.clone(),
                            row: i,
                            col: j,
                            delayed,
                            value: v,
                        });
                    }
                }
            }
        }
    }
    QuasimonotoneReport {
        pass: witness.is_none(),
        worst_margin: worst,
        witness,
        samples,
    }
}

fn max_row_norm(ja: &[f64], jb: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ja[i * n + j].abs() + jb[i * n + j].abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Largest row 1-norm of `[D_y f | D_{y_delayed} f]` over the box corners
/// (for up to six species), a grid in `x` and the driver, and `samples`
/// random points.
pub fn lipschitz_bound(p: &ProblemSpec, bx: &StateBox, samples: usize, seed: u64) -> f64 {
    let n = p.species();
    let (mut y, mut z) = (vec![0.0; n], vec![0.0; n]);
    let (mut ja, mut jb) = (vec![0.0; n * n], vec![0.0; n * n]);
    let mut l = 0.0_f64;
    let length = p.mesh().length();
    let xs: Vec<f64> = (0..=8).map(|k| length * k as f64 / 8.0).collect();
    let per_dim = match p.driver().dim() {
        0 => 1,
        1 => 16,
        2 => 6,
        _ => 2,
    };
    let drivers = p.driver().angle_grid(per_dim);
    if n <= 6 {
        for mask in 0u32..(1 << (2 * n)) {
            for i in 0..n {
                y[i] = if mask >> i & 1 == 1 {
                    bx.upper[i]
                } else {
                    bx.lower[i]
                };
                z[i] = if mask >> (n + i) & 1 == 1 {
                    bx.upper[i]
                } else {
                    bx.lower[i]
                };
            }
            for w in &drivers {
                for &x in &xs {
                    p.reaction()
                        .jacobians_into(w.angles(), x, &y, &z, &mut ja, &mut jb);
                    l = l.max(max_row_norm(&ja, &jb, n));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let angles = random_angles(&mut rng, p.driver().dim());
        let x = rng.random_range(0.0..=length);
        bx.sample(&mut rng, &mut y);
        bx.sample(&mut rng, &mut z);
        p.reaction()
            .jacobians_into(&angles, x, &y, &z, &mut ja, &mut jb);
        l = l.max(max_row_norm(&ja, &jb, n));
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOptions {
    /// Spacing of checked times; rounded to whole steps.
    pub check_every: f64,
    pub lipschitz_samples: usize,
    pub seed: u64,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self {
            check_every: 0.25,
            lipschitz_samples: 2000,
            seed: 0,
        }
    }
}

/// Worst signed margin of `z_i(psi) - z_i(phi) - e^{-Lt} e^{t A_i}(psi_i(0) - phi_i(0))`.
///
/// The bound is propagated with the solver's own diffusion stage and the
/// decay `-L u` in the explicit part, which is the exact discrete
/// counterpart of `e^{-Lt} e^{t A_i}` and holds for the scheme whenever it
/// is order preserving. The margin against the continuous form of the
/// bound is reported alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub case_id: usize,
    pub times: Vec<f64>,
    pub worst_margin: f64,
    /// Largest margin; small when the bound is saturated.
    pub max_margin: f64,
    pub continuous_margin: f64,
    /// Smallest margin at interior nodes for times after 0.
    pub interior_margin: f64,
    pub lipschitz: f64,
    pub bounding_box: StateBox,
    pub tolerance: f64,
    pub pass: bool,
}

fn ordered(phi: &Segment, psi: &Segment) -> Result<()> {
    match phi.compare(psi)? {
        SegmentOrder::Leq | SegmentOrder::Equal => Ok(()),
        _ => Err(PfdeError::InvalidProblem(
            "pair is not ordered phi <= psi".into(),
        )),
    }
}

pub fn check_comparison(
    p: &ProblemSpec,
    w: &DriverState,
    phi: &Segment,
    psi: &Segment,
    t_end: f64,
    opts: &ComparisonOptions,
) -> Result<ComparisonReport> {
    let phi = p.admit_segment(phi)?;
    let psi = p.admit_segment(psi)?;
    ordered(&phi, &psi)?;
    let op = build_operator(p);
    let iopts = IntegrateOptions {
        record_path: true,
        ..Default::default()
    };
    let lower = integrate_with(p, &op, w, &phi, t_end, &[], iopts)?;
    let upper = integrate_with(p, &op, w, &psi, t_end, &[], iopts)?;
    let ranges: Vec<(f64, f64)> = lower
        .value_range()
        .into_iter()
        .zip(upper.value_range())
        .map(|((a, b), (c, d))| (a.min(c), b.max(d)))
        .collect();
    let bx = StateBox::from_ranges(&ranges, 0.1);
    let l = lipschitz_bound(p, &bx, opts.lipschitz_samples, opts.seed);
    let h = p.time_step();
    let total = p.step_index(t_end)?;
    let stride = ((opts.check_every / h).round() as usize).clamp(1, total.max(1));
    let n = p.species();
    let nodes = p.mesh().nodes();
    let mut disc: Vec<Array1<f64>> = (0..n)
        .map(|i| &psi.newest().row(i) - &phi.newest().row(i))
        .collect();
    let mut heat = disc.clone();
    let scale = phi.norm().max(psi.norm());
    let tolerance = COMPARISON_REL_TOL * (1.0 + scale);
    let (mut worst, mut cont, mut interior) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut slack = f64::NEG_INFINITY;
    let mut times = Vec::new();
    let mut step = 0;
    loop {
        let t = step as f64 * h;
        times.push(t);
        let a = lower.profile_at_step(step as isize).expect("recorded");
        let b = upper.profile_at_step(step as isize).expect("recorded");
        let decay = (-l * t).exp();
        for i in 0..n {
            for k in 0..nodes {
                let gap = b[[i, k]] - a[[i, k]];
                let m = gap - disc[i][k];
                worst = worst.min(m);
                slack = slack.max(m);
                cont = cont.min(gap - decay * heat[i][k]);
                if step > 0 && k > 0 && k + 1 < nodes {
                    interior = interior.min(m);
                }
            }
        }
        if step >= total {
            break;
        }
        let next = (step + stride).min(total);
        let dt = (next - step) as f64 * h;
        for i in 0..n {
            disc[i] = solve_damped_diffusion(p, &op, i, &disc[i], dt, l)?;
            heat[i] = solve_damped_diffusion(p, &op, i, &heat[i], dt, 0.0)?;
        }
        step = next;
    }
    Ok(ComparisonReport {
        case_id: 0,
        times,
        worst_margin: worst,
        max_margin: slack,
        continuous_margin: cont,
        interior_margin: interior,
        lipschitz: l,
        bounding_box: bx,
        tolerance,
        pass: worst >= -tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityCase {
    pub case_id: usize,
    /// Smallest value of `z(psi) - z(phi)` over all steps, species and nodes.
    pub worst_margin: f64,
    pub pass: bool,
}

/// Integrates every ordered pair to `t_end` and checks the order is kept at
/// every step within [`ORDER_TOL`].
pub fn check_monotonicity(
    p: &ProblemSpec,
    w: &DriverState,
    pairs: &[(Segment, Segment)],
    t_end: f64,
) -> Result<Vec<MonotonicityCase>> {
    let op = build_operator(p);
    let total = p.step_index(t_end)?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(case_id, (phi, psi))| {
            let phi = p.admit_segment(phi)?;
            let psi = p.admit_segment(psi)?;
            ordered(&phi, &psi)?;
            let bound = SolverOptions::default().blowup_bound;
            let mut a = Integrator::new(p, &op, w, &phi, bound)?;
            let mut b = Integrator::new(p, &op, w, &psi, bound)?;
            let gap = |a: &Array2<f64>, b: &Array2<f64>| {
                b.iter()
                    .zip(a)
                    .map(|(u, v)| u - v)
                    .fold(f64::INFINITY, f64::min)
            };
            let mut worst = psi
                .history()
                .iter()
                .zip(phi.history())
                .map(|(u, v)| gap(v, u))
                .fold(f64::INFINITY, f64::min);
            for _ in 0..total {
                a.step()?;
                b.step()?;
                worst = worst.min(gap(a.history().newest(), b.history().newest()));
            }
            Ok(MonotonicityCase {
                case_id,
                worst_margin: worst,
                pass: worst >= -ORDER_TOL,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationCase {
    pub case_id: usize,
    pub residual: f64,
    pub residual_half: f64,
    pub ratio: f64,
    /// Linear reactions are held to exact agreement instead of the ratio.
    pub exact: bool,
    pub pass: bool,
}

pub fn check_linearization(
    p: &ProblemSpec,
    w: &DriverState,
    phi: &Segment,
    psi: &Segment,
    t: f64,
    eps: f64,
) -> Result<LinearizationCase> {
    let r1 = directional_derivative_check(p, w, phi, psi, t, eps)?;
    let r2 = directional_derivative_check(p, w, phi, psi, t, eps / 2.0)?;
    let ratio = r1 / r2;
    let exact = p.reaction().catalog() == CatalogId::Linear;
    let pass = if exact {
        r1 <= LINEAR_EXACT_TOL && r2 <= LINEAR_EXACT_TOL
    } else {
        (TAYLOR_RATIO.0..=TAYLOR_RATIO.1).contains(&ratio)
    };
    Ok(LinearizationCase {
        case_id: 0,
        residual: r1,
        residual_half: r2,
        ratio,
        exact,
        pass,
    })
}

/// Random segment with values in `[0, level]`, smooth in the delay
/// variable, zero at Dirichlet ends.
pub fn random_segment(p: &ProblemSpec, rng: &mut ChaCha8Rng, level: f64) -> Segment {
    random_signed_segment(p, rng, 0.0, level)
}

/// Random segment with values in `[low, high]` (before the delay modulation).
pub fn random_signed_segment(
    p: &ProblemSpec,
    rng: &mut ChaCha8Rng,
    low: f64,
    high: f64,
) -> Segment {
    let (n, nodes, m) = (p.species(), p.mesh().nodes(), p.delay_steps());
    let mut base = Array2::from_shape_fn((n, nodes), |_| rng.random_range(low..=high));
    for i in 0..n {
        if p.boundary().kind(i).is_dirichlet() {
            base[[i, 0]] = 0.0;
            base[[i, nodes - 1]] = 0.0;
        }
    }
    let phase = rng.random_range(0.0..2.0 * PI);
    let history = (0..=m)
        .map(|j| {
            let s = -1.0 + j as f64 / m as f64;
            &base * (0.75 + 0.25 * (2.0 * PI * s + phase).sin())
        })
        .collect();
    Segment::new(history).expect("valid segment")
}

/// `(phi, psi)` with `0 <= phi <= psi`.
pub fn random_ordered_pair(
    p: &ProblemSpec,
    rng: &mut ChaCha8Rng,
    level: f64,
) -> (Segment, Segment) {
    let phi = random_segment(p, rng, level);
    let gap = random_segment(p, rng, 0.5 * level);
    let psi = phi.axpy(1.0, &gap).expect("same shape");
    (phi, psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quasimonotone,
    Monotone,
    Comparison,
    Linearization,
}

impl FromStr for Suite {
    type Err = PfdeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quasimonotone" => Ok(Suite::Quasimonotone),
            "monotone" => Ok(Suite::Monotone),
            "comparison" => Ok(Suite::Comparison),
            "linearization" => Ok(Suite::Linearization),
            other => Err(PfdeError::config(
                "suite",
                format!(
                    "expected quasimonotone, monotone, comparison or linearization, got {other:?}"
                ),
            )),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Quasimonotone => "quasimonotone",
            Suite::Monotone => "monotone",
            Suite::Comparison => "comparison",
            Suite::Linearization => "linearization",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Overrides the default case count of the suite.
    pub cases: Option<usize>,
    /// Overrides the default horizon of the suite.
    pub t_end: Option<f64>,
    /// Upper value of random initial data.
    pub level: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            cases: None,
            t_end: None,
            level: 1.0,
        }
    }
}

/// One line of the check report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub case_id: usize,
    pub pass: bool,
    pub worst_margin: f64,
    pub tolerance: f64,
    /// Human-readable detail such as a witness point; not part of the CSV.
    pub detail: Option<String>,
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

/// Runs a whole suite with its default sizes.
pub fn run_suite(p: &ProblemSpec, suite: Suite, opts: &SuiteOptions) -> Result<Vec<CheckRow>> {
    let name = suite.to_string();
    let w = p.driver();
    match suite {
        Suite::Quasimonotone => {
            let samples = opts.cases.unwrap_or(10_000);
            let bx = StateBox::uniform(p.species(), 0.0, 2.0 * opts.level);
            let r = check_quasimonotone(p, samples, &bx, opts.seed);
            Ok(vec![CheckRow {
                check: name,
                case_id: 0,
                pass: r.pass,
                worst_margin: r.worst_margin,
                tolerance: QUASIMONOTONE_TOL,
                detail: r.witness.map(|w| format!("witness: {w}")),
            }])
        }
        Suite::Monotone => {
            let cases = opts.cases.unwrap_or(100);
            let pairs: Vec<_> = (0..cases)
                .map(|c| random_ordered_pair(p, &mut case_rng(opts.seed, c), opts.level))
                .collect();
            let res = check_monotonicity(p, w, &pairs, opts.t_end.unwrap_or(5.0))?;
            Ok(res
                .into_iter()
                .map(|c| CheckRow {
                    check: name.clone(),
                    case_id: c.case_id,
                    pass: c.pass,
                    worst_margin: c.worst_margin,
                    tolerance: ORDER_TOL,
                    detail: None,
                })
                .collect())
        }
        Suite::Comparison => {
            let cases = opts.cases.unwrap_or(25);
            let t_end = opts.t_end.unwrap_or(3.0);
            (0..cases)
                .into_par_iter()
                .map(|c| {
                    let (phi, psi) =
                        random_ordered_pair(p, &mut case_rng(opts.seed, c), opts.level);
                    let copts = ComparisonOptions {
                        seed: opts.seed.wrapping_add(c as u64),
                        ..Default::default()
                    };
                    let r = check_comparison(p, w, &phi, &psi, t_end, &copts)?;
                    Ok(CheckRow {
                        check: name.clone(),
                        case_id: c,
                        pass: r.pass,
                        worst_margin: r.worst_margin,
                        tolerance: r.tolerance,
                        detail: Some(format!("L = {}", r.lipschitz)),
                    })
                })
                .collect()
        }
        Suite::Linearization => {
            let cases = opts.cases.unwrap_or(20);
            let t_end = opts.t_end.unwrap_or(1.0);
            (0..cases)
                .into_par_iter()
                .map(|c| {
                    let mut rng = case_rng(opts.seed, c);
                    let phi = random_segment(p, &mut rng, opts.level);
                    let psi = random_signed_segment(p, &mut rng, -1.0, 1.0);
                    let r = check_linearization(p, w, &phi, &psi, t_end, 1e-3)?;
                    let (margin, tol) = if r.exact {
                        (r.residual.max(r.residual_half), LINEAR_EXACT_TOL)
                    } else {
                        (r.ratio, TAYLOR_RATIO.1 - TAYLOR_RATIO.0)
                    };
                    Ok(CheckRow {
                        check: name.clone(),
                        case_id: c,
                        pass: r.pass,
                        worst_margin: margin,
                        tolerance: tol,
                        detail: None,
                    })
                })
                .collect()
        }
    }
}

pub const CHECK_CSV_HEADER: &str = "check,case_id,pass,worst_margin,tolerance";

pub fn write_check_csv<W: Write>(mut w: W, rows: &[CheckRow]) -> Result<()> {
    writeln!(w, "{CHECK_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.check, r.case_id, r.pass, r.worst_margin, r.tolerance
        )?;
    }
    Ok(())
}
