//! Reaction catalog `f(w, x, y, y_delayed)` with exact Jacobians.
//!
//! Every scalar coefficient is a finite Fourier sum in the driver angles
//! multiplied by a polynomial in `x` of degree at most four.
//!
//! Catalog entries (`y` current state, `z` state one delay ago):
//!
//! * `Linear`: `f = A y + B z + c`
//! * `DelayedLogistic`: `f_i = y_i (a_i - b_i z_i)`
//! * `CooperativeLv`: `f_i = y_i (r_i - s_i y_i) + sum_{j != i} c_ij y_j + sum_j e_ij z_j`
//! * `Custom`: any [`CustomReaction`] supplied through the library API.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{PfdeError, Result};
use crate::model::DriverState;

pub const MAX_POLY_DEGREE: usize = 4;

/// `cos * cos(k . w) + sin * sin(k . w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTerm {
    pub harmonics: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

impl FourierTerm {
    fn phase(&self, angles: &[f64]) -> f64 {
        self.harmonics
            .iter()
            .zip(angles)
            .map(|(&k, &a)| k as f64 * a)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub mean: f64,
    pub terms: Vec<FourierTerm>,
    /// Polynomial in `x`, lowest degree first. Empty means the constant 1.
    pub poly: Vec<f64>,
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Self {
            mean: value,
            terms: Vec::new(),
            poly: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn with_term(mut self, harmonics: Vec<i32>, cos: f64, sin: f64) -> Self {
        self.terms.push(FourierTerm {
            harmonics,
            cos,
            sin,
        });
        self
    }

    pub fn with_poly(mut self, poly: Vec<f64>) -> Self {
        self.poly = poly;
        self
    }

    pub fn fourier(&self, angles: &[f64]) -> f64 {
        self.terms.iter().fold(self.mean, |acc, t| {
            let p = t.phase(angles);
            acc + t.cos * p.cos() + t.sin * p.sin()
        })
    }

    pub fn poly_at(&self, x: f64) -> f64 {
        if self.poly.is_empty() {
            return 1.0;
        }
        self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn value(&self, angles: &[f64], x: f64) -> f64 {
        self.fourier(angles) * self.poly_at(x)
    }

    pub fn is_identically_zero(&self) -> bool {
        (self.mean == 0.0 && self.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0))
            || (!self.poly.is_empty() && self.poly.iter().all(|&c| c == 0.0))
    }

    /// Depends on the driver angles.
    pub fn is_forced(&self) -> bool {
        self.terms
            .iter()
            .any(|t| (t.cos != 0.0 || t.sin != 0.0) && t.harmonics.iter().any(|&k| k != 0))
    }

    /// Sufficient (not necessary) certificate that the coefficient is `>= 0`
    /// for every driver state and every `x >= 0`.
    pub fn is_structurally_nonnegative(&self) -> bool {
        if self.is_identically_zero() {
            return true;
        }
        let amp: f64 = self.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum();
        let poly_nonneg = self.poly.iter().all(|&c| c >= 0.0);
        let poly_nonpos = !self.poly.is_empty() && self.poly.iter().all(|&c| c <= 0.0);
        (self.mean - amp >= 0.0 && poly_nonneg) || (self.mean + amp <= 0.0 && poly_nonpos)
    }

    fn validate(&self, driver_dim: usize, what: &str) -> Result<()> {
        if self.poly.len() > MAX_POLY_DEGREE + 1 {
            return Err(PfdeError::MalformedCoefficients(format!(
                "{what}: polynomial degree {} exceeds {MAX_POLY_DEGREE}",
                self.poly.len() - 1
            )));
        }
        let finite = self.mean.is_finite()
            && self.poly.iter().all(|c| c.is_finite())
            && self
                .terms
                .iter()
                .all(|t| t.cos.is_finite() && t.sin.is_finite());
        if !finite {
            return Err(PfdeError::MalformedCoefficients(format!(
                "{what}: non-finite value"
            )));
        }
        for t in &self.terms {
            if t.harmonics.len() != driver_dim {
                return Err(PfdeError::MalformedCoefficients(format!(
                    "{what}: harmonic vector has length {} but the driver has {driver_dim} angles",
                    t.harmonics.len()
                )));
            }
        }
        Ok(())
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::constant(v)
    }
}

pub type CoefMatrix = Vec<Vec<Coefficient>>;

pub fn constant_matrix(rows: &[&[f64]]) -> CoefMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&v| Coefficient::constant(v)).collect())
        .collect()
}

pub fn constant_vector(values: &[f64]) -> Vec<Coefficient> {
    values.iter().map(|&v| Coefficient::constant(v)).collect()
}

/// User-supplied reaction, available only through the library API.
pub trait CustomReaction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, angles: &[f64], x: f64, y: &[f64], y_delayed: &[f64], out: &mut [f64]);
    /// Row-major `dim x dim` outputs for `D_y f` and `D_{y_delayed} f`.
    fn jacobians(
        &self,
        angles: &[f64],
        x: f64,
        y: &[f64],
        y_delayed: &[f64],
        d_current: &mut [f64],
        d_delayed: &mut [f64],
    );
    fn is_quasimonotone(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogId {
    Linear,
    DelayedLogistic,
    CooperativeLv,
    Custom,
}

impl FromStr for CatalogId {
    type Err = PfdeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CatalogId::Linear),
            "delayed_logistic" => Ok(CatalogId::DelayedLogistic),
            "cooperative_lv" => Ok(CatalogId::CooperativeLv),
            "custom" => Ok(CatalogId::Custom),
            other => Err(PfdeError::UnknownCatalog(other.to_string())),
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CatalogId::Linear => "linear",
            CatalogId::DelayedLogistic => "delayed_logistic",
            CatalogId::CooperativeLv => "cooperative_lv",
            CatalogId::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub enum ReactionTerm {
    Linear {
        a: CoefMatrix,
        b: CoefMatrix,
        source: Vec<Coefficient>,
    },
    DelayedLogistic {
        growth: Vec<Coefficient>,
        crowding: Vec<Coefficient>,
    },
    CooperativeLv {
        growth: Vec<Coefficient>,
        crowding: Vec<Coefficient>,
        coupling: CoefMatrix,
        delayed_coupling: CoefMatrix,
    },
    Custom(Arc<dyn CustomReaction>),
}

impl ReactionTerm {
    /// `f = A y + B z` with constant matrices.
    pub fn linear_constant(a: &[&[f64]], b: &[&[f64]]) -> Self {
        let n = a.len();
        ReactionTerm::Linear {
            a: constant_matrix(a),
            b: constant_matrix(b),
            source: vec![Coefficient::zero(); n],
        }
    }

    pub fn delayed_logistic(growth: &[f64], crowding: &[f64]) -> Self {
        ReactionTerm::DelayedLogistic {
            growth: constant_vector(growth),
            crowding: constant_vector(crowding),
        }
    }

    /// The zero reaction on `n` species.
    pub fn zero(n: usize) -> Self {
        let z = vec![vec![0.0; n]; n];
        let rows: Vec<&[f64]> = z.iter().map(|r| r.as_slice()).collect();
        Self::linear_constant(&rows, &rows)
    }

    pub fn catalog(&self) -> CatalogId {
        match self {
            ReactionTerm::Linear { .. } => CatalogId::Linear,
            ReactionTerm::DelayedLogistic { .. } => CatalogId::DelayedLogistic,
            ReactionTerm::CooperativeLv { .. } => CatalogId::CooperativeLv,
            ReactionTerm::Custom(_) => CatalogId::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ReactionTerm::Linear { a, .. } => a.len(),
            ReactionTerm::DelayedLogistic { growth, .. } => growth.len(),
            ReactionTerm::CooperativeLv { growth, .. } => growth.len(),
            ReactionTerm::Custom(c) => c.dim(),
        }
    }

    /// Checks table shapes against `n` and the driver dimension.
    pub fn validate(&self, driver_dim: usize) -> Result<()> {
        let n = self.dim();
        let vector = |v: &[Coefficient], name: &str| -> Result<()> {
            if v.len() != n {
                return Err(PfdeError::MalformedCoefficients(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
            for (i, c) in v.iter().enumerate() {
                c.validate(driver_dim, &format!("{name}[{i}]"))?;
            }
            Ok(())
        };
        let matrix = |m: &CoefMatrix, name: &str| -> Result<()> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(PfdeError::MalformedCoefficients(format!(
                    "{name} must be {n} x {n}"
                )));
            }
            for (i, row) in m.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    c.validate(driver_dim, &format!("{name}[{i}][{j}]"))?;
                }
            }
            Ok(())
        };
        match self {
            ReactionTerm::Linear { a, b, source } => {
                matrix(a, "a")?;
                matrix(b, "b")?;
                vector(source, "source")
            }
            ReactionTerm::DelayedLogistic { growth, crowding } => {
                vector(growth, "growth")?;
                vector(crowding, "crowding")
            }
            ReactionTerm::CooperativeLv {
                growth,
                crowding,
                coupling,
                delayed_coupling,
            } => {
                vector(growth, "growth")?;
                vector(crowding, "crowding")?;
                matrix(coupling, "coupling")?;
                matrix(delayed_coupling, "delayed_coupling")?;
                for (i, row) in coupling.iter().enumerate() {
                    if !row[i].is_identically_zero() {
                        return Err(PfdeError::MalformedCoefficients(format!(
                            "coupling[{i}][{i}] must be zero; self-interaction belongs in growth/crowding"
                        )));
                    }
                }
                Ok(())
            }
            ReactionTerm::Custom(_) => Ok(()),
        }
    }

    /// Whether the off-diagonal `D_y f` and all of `D_z f` are certified
    /// nonnegative from the coefficient tables alone.
    pub fn is_quasimonotone(&self) -> bool {
        match self {
            ReactionTerm::Linear { a, b, .. } => {
                off_diagonal_nonneg(a)
                    && b.iter().flatten().all(|c| c.is_structurally_nonnegative())
            }
            // D_z f_i = -b_i y_i changes sign with y_i unless b_i vanishes
            ReactionTerm::DelayedLogistic { crowding, .. } => {
                crowding.iter().all(|c| c.is_identically_zero())
            }
            ReactionTerm::CooperativeLv {
                coupling,
                delayed_coupling,
                ..
            } => {
                off_diagonal_nonneg(coupling)
                    && delayed_coupling
                        .iter()
                        .flatten()
                        .all(|c| c.is_structurally_nonnegative())
            }
            ReactionTerm::Custom(c) => c.is_quasimonotone(),
        }
    }

    /// Whether any coefficient depends on the driver.
    pub fn is_forced(&self) -> bool {
        let any = |v: &[Coefficient]| v.iter().any(|c| c.is_forced());
        match self {
            ReactionTerm::Linear { a, b, source } => {
                a.iter().any(|r| any(r)) || b.iter().any(|r| any(r)) || any(source)
            }
            ReactionTerm::DelayedLogistic { growth, crowding } => any(growth) || any(crowding),
            ReactionTerm::CooperativeLv {
                growth,
                crowding,
                coupling,
                delayed_coupling,
            } => {
                any(growth)
                    || any(crowding)
                    || coupling.iter().any(|r| any(r))
                    || delayed_coupling.iter().any(|r| any(r))
            }
            ReactionTerm::Custom(_) => true,
        }
    }

    /// Writes `f(w, x, y, z)` into `out`. Slices must have length `dim()`.
    pub fn eval_into(&self, angles: &[f64], x: f64, y: &[f64], z: &[f64], out: &mut [f64]) {
        match self {
            ReactionTerm::Linear { a, b, source } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = source[i].value(angles, x);
                    for j in 0..y.len() {
                        acc += a[i][j].value(angles, x) * y[j] + b[i][j].value(angles, x) * z[j];
                    }
                    *o = acc;
                }
            }
            ReactionTerm::DelayedLogistic { growth, crowding } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = y[i] * (growth[i].value(angles, x) - crowding[i].value(angles, x) * z[i]);
                }
            }
            ReactionTerm::CooperativeLv {
                growth,
                crowding,
                coupling,
                delayed_coupling,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc =
                        y[i] * (growth[i].value(angles, x) - crowding[i].value(angles, x) * y[i]);
                    for j in 0..y.len() {
                        if j != i {
                            acc += coupling[i][j].value(angles, x) * y[j];
                        }
                        acc += delayed_coupling[i][j].value(angles, x) * z[j];
                    }
                    *o = acc;
                }
            }
            ReactionTerm::Custom(c) => c.eval(angles, x, y, z, out),
        }
    }

    /// Writes row-major `D_y f` and `D_z f`.
    pub fn jacobians_into(
        &self,
        angles: &[f64],
        x: f64,
        y: &[f64],
        z: &[f64],
        d_current: &mut [f64],
        d_delayed: &mut [f64],
    ) {
        let n = y.len();
        match self {
            ReactionTerm::Linear { a, b, .. } => {
                for i in 0..n {
                    for j in 0..n {
                        d_current[i * n + j] = a[i][j].value(angles, x);
                        d_delayed[i * n + j] = b[i][j].value(angles, x);
                    }
                }
            }
            ReactionTerm::DelayedLogistic { growth, crowding } => {
                d_current.fill(0.0);
                d_delayed.fill(0.0);
                for i in 0..n {
                    let b = crowding[i].value(angles, x);
                    d_current[i * n + i] = growth[i].value(angles, x) - b * z[i];
                    d_delayed[i * n + i] = -b * y[i];
                }
            }
            ReactionTerm::CooperativeLv {
                growth,
                crowding,
                coupling,
                delayed_coupling,
            } => {
                for i in 0..n {
                    for j in 0..n {
                        d_current[i * n + j] = if i == j {
                            growth[i].value(angles, x) - 2.0 * crowding[i].value(angles, x) * y[i]
                        } else {
                            coupling[i][j].value(angles, x)
                        };
                        d_delayed[i * n + j] = delayed_coupling[i][j].value(angles, x);
                    }
                }
            }
            ReactionTerm::Custom(c) => c.jacobians(angles, x, y, z, d_current, d_delayed),
        }
    }
}

fn off_diagonal_nonneg(m: &CoefMatrix) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, c)| i == j || c.is_structurally_nonnegative())
    })
}

fn check_dims(r: &ReactionTerm, y: &[f64], z: &[f64]) -> Result<()> {
    let n = r.dim();
    if y.len() != n || z.len() != n {
        return Err(PfdeError::ShapeMismatch(format!(
            "reaction has {n} species, got state of length {} and delayed state of length {}",
            y.len(),
            z.len()
        )));
    }
    Ok(())
}

/// `f(w, x, y, z)`.
pub fn eval_reaction(
    r: &ReactionTerm,
    w: &DriverState,
    x: f64,
    y: &[f64],
    z: &[f64],
) -> Result<Vec<f64>> {
    check_dims(r, y, z)?;
    let mut out = vec![0.0; r.dim()];
    r.eval_into(w.angles(), x, y, z, &mut out);
    Ok(out)
}

/// `(D_y f, D_z f)` as `n x n` matrices.
pub fn eval_jacobians(
    r: &ReactionTerm,
    w: &DriverState,
    x: f64,
    y: &[f64],
    z: &[f64],
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_dims(r, y, z)?;
    let n = r.dim();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    r.jacobians_into(w.angles(), x, y, z, &mut a, &mut b);
    let a = Array2::from_shape_vec((n, n), a).expect("n x n");
    let b = Array2::from_shape_vec((n, n), b).expect("n x n");
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn origin() -> DriverState {
        DriverState::autonomous()
    }

    #[test]
    fn logistic_at_zero_state() {
        let r = ReactionTerm::delayed_logistic(&[1.0], &[1.0]);
        let f = eval_reaction(&r, &origin(), 0.3, &[0.0], &[7.0]).unwrap();
        assert_eq!(f, vec![0.0]);
        let (a, b) = eval_jacobians(&r, &origin(), 0.3, &[0.0], &[0.0]).unwrap();
        assert_eq!(a[[0, 0]], 1.0);
        assert_eq!(b[[0, 0]], 0.0);
    }

    #[test]
    fn linear_matrix_product() {
        let r =
            ReactionTerm::linear_constant(&[&[0.0, 1.0], &[1.0, 0.0]], &[&[0.0, 0.0], &[0.0, 0.0]]);
        let f = eval_reaction(&r, &origin(), 0.0, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(f, vec![2.0, 1.0]);
    }

    #[test]
    fn logistic_hand_derivative() {
        // y(1 - z) at y = 0.5, z = 0.25
        let r = ReactionTerm::delayed_logistic(&[1.0], &[1.0]);
        let f = eval_reaction(&r, &origin(), 0.0, &[0.5], &[0.25]).unwrap();
        assert!((f[0] - 0.375).abs() < 1e-15);
        let (a, b) = eval_jacobians(&r, &origin(), 0.0, &[0.5], &[0.25]).unwrap();
        assert!((a[[0, 0]] - 0.75).abs() < 1e-15);
        assert!((b[[0, 0]] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let r = ReactionTerm::delayed_logistic(&[1.0], &[1.0]);
        assert!(matches!(
            eval_reaction(&r, &origin(), 0.0, &[0.5, 1.0], &[0.25]),
            Err(PfdeError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn unknown_catalog_id() {
        assert!(matches!(
            "lotka".parse::<CatalogId>(),
            Err(PfdeError::UnknownCatalog(_))
        ));
        assert_eq!(
            "cooperative_lv".parse::<CatalogId>().unwrap(),
            CatalogId::CooperativeLv
        );
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let r = ReactionTerm::DelayedLogistic {
            growth: vec![Coefficient::constant(1.0).with_poly(vec![1.0; 6])],
            crowding: vec![Coefficient::constant(1.0)],
        };
        assert!(matches!(
            r.validate(0),
            Err(PfdeError::MalformedCoefficients(_))
        ));
        let r = ReactionTerm::DelayedLogistic {
            growth: vec![Coefficient::constant(1.0).with_term(vec![1, 1], 1.0, 0.0)],
            crowding: vec![Coefficient::constant(1.0)],
        };
        assert!(r.validate(1).is_err());
        assert!(r.validate(2).is_ok());
    }

    #[test]
    fn coefficient_fourier_and_polynomial() {
        let c = Coefficient::constant(1.0)
            .with_term(vec![1], 1.0, 0.0)
            .with_poly(vec![1.0, 2.0]);
        // (1 + cos 0) * (1 + 2 * 0.5)
        assert!((c.value(&[0.0], 0.5) - 4.0).abs() < 1e-15);
        assert!(c.is_structurally_nonnegative());
        let c = Coefficient::constant(0.5).with_term(vec![1], 1.0, 0.0);
        assert!(!c.is_structurally_nonnegative());
    }

    pub(crate) fn catalog_samples() -> Vec<ReactionTerm> {
        let forced =
            |m: f64, amp: f64| Coefficient::constant(m).with_term(vec![1, 0], amp, 0.3 * amp);
        vec![
            ReactionTerm::Linear {
                a: vec![
                    vec![forced(-1.0, 0.5), forced(1.0, 0.5)],
                    vec![
                        Coefficient::constant(0.3).with_poly(vec![1.0, 0.2]),
                        forced(0.2, 0.1),
                    ],
                ],
                b: vec![
                    vec![forced(0.5, 0.2), Coefficient::zero()],
                    vec![forced(0.4, 0.3), Coefficient::constant(0.1)],
                ],
                source: vec![Coefficient::zero(), forced(0.1, 0.05)],
            },
            ReactionTerm::DelayedLogistic {
                growth: vec![
                    forced(1.0, 0.5),
                    Coefficient::constant(0.7).with_poly(vec![1.0, -0.1]),
                ],
                crowding: vec![forced(1.0, 0.2), Coefficient::constant(2.0)],
            },
            ReactionTerm::CooperativeLv {
                growth: vec![forced(1.0, 0.5), Coefficient::constant(-0.5)],
                crowding: vec![Coefficient::constant(1.0), forced(1.0, 0.5)],
                coupling: vec![
                    vec![Coefficient::zero(), forced(1.0, 0.7)],
                    vec![
                        Coefficient::constant(0.5).with_poly(vec![1.0, 1.0]),
                        Coefficient::zero(),
                    ],
                ],
                delayed_coupling: vec![
                    vec![forced(0.3, 0.2), Coefficient::zero()],
                    vec![Coefficient::constant(0.2), forced(0.4, 0.1)],
                ],
            },
        ]
    }

    #[test]
    fn jacobians_match_centered_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let step = 1e-5;
        for r in catalog_samples() {
            r.validate(2).unwrap();
            let n = r.dim();
            for _ in 0..100 {
                let w = DriverState::new(
                    vec![rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
                    vec![1.0, 2f64.sqrt()],
                );
                let x = rng.random_range(0.0..2.0);
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let (a, b) = eval_jacobians(&r, &w, x, &y, &z).unwrap();
                for j in 0..n {
                    for (delayed, jac) in [(false, &a), (true, &b)] {
                        let (mut yp, mut ym, mut zp, mut zm) =
                            (y.clone(), y.clone(), z.clone(), z.clone());
                        if delayed {
                            zp[j] += step;
                            zm[j] -= step;
                        } else {
                            yp[j] += step;
                            ym[j] -= step;
                        }
                        let fp = eval_reaction(&r, &w, x, &yp, &zp).unwrap();
                        let fm = eval_reaction(&r, &w, x, &ym, &zm).unwrap();
                        for i in 0..n {
                            let fd = (fp[i] - fm[i]) / (2.0 * step);
                            let exact = jac[[i, j]];
                            let rel = (fd - exact).abs() / exact.abs().max(1.0);
                            assert!(
                                rel <= 1e-5,
                                "{:?} entry ({i},{j}) delayed={delayed}: {fd} vs {exact}",
                                r.catalog()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn quasimonotone_flags() {
        let s = catalog_samples();
        assert!(s[0].is_quasimonotone());
        assert!(!s[1].is_quasimonotone());
        assert!(s[2].is_quasimonotone());
        assert!(ReactionTerm::delayed_logistic(&[1.0], &[0.0]).is_quasimonotone());
    }

    #[test]
    fn flagged_entries_have_nonnegative_sampled_jacobians() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in catalog_samples()
            .into_iter()
            .filter(|r| r.is_quasimonotone())
        {
            let n = r.dim();
            for _ in 0..10_000 {
                let w = DriverState::new(
                    vec![rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
                    vec![1.0, 1.0],
                );
                let x = rng.random_range(0.0..3.0);
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let z: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let (a, b) = eval_jacobians(&r, &w, x, &y, &z).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            assert!(a[[i, j]] >= -1e-12);
                        }
                        assert!(b[[i, j]] >= -1e-12);
                    }
                }
            }
        }
    }
}
