//! TOML run configuration.
//!
//! ```toml
//! [problem]
//! n = 1
//! length = 3.141592653589793
//! mesh_points = 65          # nodes, including both ends
//! delay_steps = 64
//!
//! [[species]]
//! diffusion = 1.0
//! bc = "neumann"            # dirichlet | neumann | robin
//!
//! [reaction]
//! catalog = "delayed_logistic"
//! growth = [1.0]
//! crowding = [1.0]
//!
//! [driver]
//! frequencies = [1.0]
//! angles = [0.0]
//!
//! [initial]
//! profile = "constant"      # constant | sine
//! values = [0.5]
//! ```
//!
//! A coefficient is either a number or a table
//! `{ mean = .., terms = [{ harmonics = [..], cos = .., sin = .. }], poly = [..] }`.
//! Unknown keys are rejected.

use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;
use toml::Table;

use crate::error::{PfdeError, Result};
use crate::model::{
    BoundaryKind, BoundarySpec, CatalogId, CoefMatrix, Coefficient, DriverState, FourierTerm,
    Mesh1D, ProblemSpec, ReactionTerm, Segment,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    species: Vec<RawSpecies>,
    reaction: Table,
    #[serde(default)]
    driver: RawDriver,
    initial: Option<RawInitial>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    n: usize,
    length: f64,
    mesh_points: usize,
    delay_steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    diffusion: f64,
    bc: String,
    robin_alpha_left: Option<f64>,
    robin_alpha_right: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDriver {
    #[serde(default)]
    frequencies: Vec<f64>,
    angles: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    profile: String,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCoefficient {
    Number(f64),
    Table(RawCoefficientTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficientTable {
    #[serde(default)]
    mean: f64,
    #[serde(default)]
    terms: Vec<RawTerm>,
    #[serde(default)]
    poly: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    harmonics: Vec<i32>,
    #[serde(default)]
    cos: f64,
    #[serde(default)]
    sin: f64,
}

impl From<RawCoefficient> for Coefficient {
    fn from(r: RawCoefficient) -> Self {
        match r {
            RawCoefficient::Number(v) => Coefficient::constant(v),
            RawCoefficient::Table(t) => Coefficient {
                mean: t.mean,
                terms: t
                    .terms
                    .into_iter()
                    .map(|t| FourierTerm {
                        harmonics: t.harmonics,
                        cos: t.cos,
                        sin: t.sin,
                    })
                    .collect(),
                poly: t.poly,
            },
        }
    }
}

/// Initial history shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialProfile {
    Constant,
    /// `v_i sin(pi x / length)`.
    Sine,
}

/// A parsed configuration: the problem and its initial segment.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub initial: Segment,
}

/// Name of the first backquoted key in a deserializer message.
fn key_in(message: &str) -> String {
    let mut parts = message.split('`');
    parts.next();
    parts.next().unwrap_or("").to_string()
}

fn parse_err(e: toml::de::Error) -> PfdeError {
    let message = e.message().to_string();
    PfdeError::Config {
        key: key_in(&message),
        message: e.to_string(),
    }
}

fn take<T: for<'de> Deserialize<'de>>(table: &mut Table, key: &str) -> Result<Option<T>> {
    match table.remove(key) {
        None => Ok(None),
        Some(v) => v.try_into().map(Some).map_err(|e: toml::de::Error| {
            PfdeError::config(format!("reaction.{key}"), e.to_string())
        }),
    }
}

fn require<T: for<'de> Deserialize<'de>>(table: &mut Table, key: &str) -> Result<T> {
    take(table, key)?.ok_or_else(|| PfdeError::config(format!("reaction.{key}"), "missing key"))
}

fn vector(raw: Vec<RawCoefficient>) -> Vec<Coefficient> {
    raw.into_iter().map(Coefficient::from).collect()
}

fn matrix(raw: Vec<Vec<RawCoefficient>>) -> CoefMatrix {
    raw.into_iter().map(vector).collect()
}

fn zero_matrix(n: usize) -> CoefMatrix {
    vec![vec![Coefficient::zero(); n]; n]
}

fn parse_reaction(mut table: Table, n: usize) -> Result<ReactionTerm> {
    let catalog: String = require(&mut table, "catalog")?;
    let reaction = match catalog.parse::<CatalogId>()? {
        CatalogId::Linear => ReactionTerm::Linear {
            a: take(&mut table, "a")?
                .map(matrix)
                .unwrap_or_else(|| zero_matrix(n)),
            b: take(&mut table, "b")?
                .map(matrix)
                .unwrap_or_else(|| zero_matrix(n)),
            source: take(&mut table, "source")?
                .map(vector)
                .unwrap_or_else(|| vec![Coefficient::zero(); n]),
        },
        CatalogId::DelayedLogistic => ReactionTerm::DelayedLogistic {
            growth: vector(require(&mut table, "growth")?),
            crowding: vector(require(&mut table, "crowding")?),
        },
        CatalogId::CooperativeLv => ReactionTerm::CooperativeLv {
            growth: vector(require(&mut table, "growth")?),
            crowding: vector(require(&mut table, "crowding")?),
            coupling: take(&mut table, "coupling")?
                .map(matrix)
                .unwrap_or_else(|| zero_matrix(n)),
            delayed_coupling: take(&mut table, "delayed_coupling")?
                .map(matrix)
                .unwrap_or_else(|| zero_matrix(n)),
        },
        CatalogId::Custom => {
            return Err(PfdeError::config(
                "reaction.catalog",
                "custom reactions are only available through the library API",
            ))
        }
    };
    if let Some(key) = table.keys().next() {
        return Err(PfdeError::config(
            format!("reaction.{key}"),
            format!("unknown key for catalog {catalog}"),
        ));
    }
    if reaction.dim() != n {
        return Err(PfdeError::MalformedCoefficients(format!(
            "reaction tables describe {} species, problem.n = {n}",
            reaction.dim()
        )));
    }
    Ok(reaction)
}

fn parse_boundary(s: &RawSpecies, i: usize) -> Result<BoundaryKind> {
    let key = |k: &str| format!("species[{i}].{k}");
    let robin_keys = s.robin_alpha_left.is_some() || s.robin_alpha_right.is_some();
    match s.bc.as_str() {
        "dirichlet" | "neumann" if robin_keys => Err(PfdeError::config(
            key("robin_alpha_left"),
            "robin coefficients are only allowed with bc = \"robin\"",
        )),
        "dirichlet" => Ok(BoundaryKind::Dirichlet),
        "neumann" => Ok(BoundaryKind::Neumann),
        "robin" => {
            let left = s
                .robin_alpha_left
                .ok_or_else(|| PfdeError::config(key("robin_alpha_left"), "missing key"))?;
            let right = s
                .robin_alpha_right
                .ok_or_else(|| PfdeError::config(key("robin_alpha_right"), "missing key"))?;
            BoundaryKind::robin(left, right)
                .map_err(|e| PfdeError::config(key("robin_alpha_left"), e.to_string()))
        }
        other => Err(PfdeError::config(
            key("bc"),
            format!("expected dirichlet, neumann or robin, got {other:?}"),
        )),
    }
}

fn initial_segment(p: &ProblemSpec, raw: Option<RawInitial>) -> Result<Segment> {
    let n = p.species();
    let (profile, values) = match raw {
        None => (InitialProfile::Constant, vec![0.0; n]),
        Some(r) => {
            let profile = match r.profile.as_str() {
                "constant" => InitialProfile::Constant,
                "sine" => InitialProfile::Sine,
                other => {
                    return Err(PfdeError::config(
                        "initial.profile",
                        format!("expected constant or sine, got {other:?}"),
                    ))
                }
            };
            if r.values.len() != n {
                return Err(PfdeError::config(
                    "initial.values",
                    format!("{} values for {n} species", r.values.len()),
                ));
            }
            (profile, r.values)
        }
    };
    let mesh = p.mesh();
    let nodes = mesh.nodes();
    let prof = Array2::from_shape_fn((n, nodes), |(i, k)| {
        let x = mesh.x(k);
        let v = match profile {
            InitialProfile::Constant => values[i],
            InitialProfile::Sine => values[i] * (std::f64::consts::PI * x / mesh.length()).sin(),
        };
        let end = k == 0 || k == nodes - 1;
        if end && p.boundary().kind(i).is_dirichlet() {
            0.0
        } else {
            v
        }
    });
    Segment::new(vec![prof; p.delay_steps() + 1])
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(parse_err)?;
    let n = raw.problem.n;
    if n == 0 {
        return Err(PfdeError::config("problem.n", "must be at least 1"));
    }
    if raw.species.len() != n {
        return Err(PfdeError::config(
            "species",
            format!("{} [[species]] entries for n = {n}", raw.species.len()),
        ));
    }
    if raw.problem.mesh_points < 2 {
        return Err(PfdeError::config(
            "problem.mesh_points",
            "need at least 2 nodes",
        ));
    }
    let mesh = Mesh1D::new(raw.problem.length, raw.problem.mesh_points - 1)
        .map_err(|e| PfdeError::config("problem.mesh_points", e.to_string()))?;
    let kinds = raw
        .species
        .iter()
        .enumerate()
        .map(|(i, s)| parse_boundary(s, i))
        .collect::<Result<Vec<_>>>()?;
    let diffusion = raw.species.iter().map(|s| s.diffusion).collect();
    let k = raw.driver.frequencies.len();
    let angles = raw.driver.angles.unwrap_or_else(|| vec![0.0; k]);
    if angles.len() != k {
        return Err(PfdeError::config(
            "driver.angles",
            format!("{} angles for {k} frequencies", angles.len()),
        ));
    }
    let driver = DriverState::new(angles, raw.driver.frequencies);
    let reaction = parse_reaction(raw.reaction, n)?;
    let problem = ProblemSpec::new(
        diffusion,
        mesh,
        BoundarySpec::new(kinds)?,
        reaction,
        driver,
        raw.problem.delay_steps,
    )?;
    let initial = initial_segment(&problem, raw.initial)?;
    Ok(RunConfig { problem, initial })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PfdeError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
