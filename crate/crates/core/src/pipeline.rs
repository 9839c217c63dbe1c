//! Interaction matrix, block form, block spectra and verdict in one pass.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PfdeError, Result};
use crate::model::{ProblemSpec, Segment};
use crate::spectrum::{principal_spectrum, KMode, KSampler, LyapunovParams, SpectrumEstimate};
use crate::structure::{
    block_triangularize, classify_persistence, interaction_matrix, BlockStructure,
    InteractionMatrix, Verdict, DEFAULT_TOL,
};

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub mode: KMode,
    pub tol: f64,
    pub lyapunov: LyapunovParams,
    /// Driver angles per dimension in zero-section mode.
    pub angles_per_dim: usize,
    /// Transient and sample layout in omega-limit mode.
    pub t_skip: f64,
    pub omega_samples: usize,
    pub omega_spacing: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            mode: KMode::ZeroSection,
            tol: DEFAULT_TOL,
            lyapunov: LyapunovParams::default(),
            angles_per_dim: KSampler::DEFAULT_ANGLES_PER_DIM,
            t_skip: KSampler::DEFAULT_T_SKIP,
            omega_samples: 8,
            omega_spacing: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub mode: KMode,
    pub matrix: InteractionMatrix,
    pub blocks: BlockStructure,
    pub spectra: Vec<SpectrumEstimate>,
    pub verdict: Verdict,
    pub assumptions: Vec<String>,
}

/// `seed` is the initial segment of the orbit in omega-limit mode and is
/// ignored for the zero section.
pub fn analyze(p: &ProblemSpec, seed: &Segment, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let sampler = match opts.mode {
        KMode::ZeroSection => KSampler::zero_section_grid(p, opts.angles_per_dim),
        KMode::OmegaLimit => KSampler::omega_limit(
            p,
            seed.clone(),
            opts.t_skip,
            opts.omega_samples,
            opts.omega_spacing,
        ),
    };
    let k = sampler.realize(p, opts.lyapunov.t_end)?;
    let matrix = interaction_matrix(p, &k)?;
    let blocks = block_triangularize(&matrix);
    let mut needed: Vec<usize> = blocks.i_set.iter().chain(&blocks.j_set).copied().collect();
    needed.sort_unstable();
    needed.dedup();
    let spectra = needed
        .par_iter()
        .map(|&j| principal_spectrum(p, &k, j, &blocks.blocks[j - 1], opts.lyapunov))
        .collect::<Result<Vec<_>>>()?;
    let verdict = classify_persistence(&blocks, &spectra, opts.tol)?;
    let mut assumptions = vec!["sup over K approximated from below by sampling".to_string()];
    match opts.mode {
        KMode::ZeroSection => {
            if p.driver().dim() > 0 {
                assumptions.push(
                    "driver hull assumed minimal (rationally independent frequencies)".into(),
                );
            }
        }
        KMode::OmegaLimit => {
            assumptions
                .push("omega-limit set assumed minimal with a flow extension; not verified".into());
        }
    }
    Ok(AnalysisReport {
        mode: opts.mode,
        matrix,
        blocks,
        spectra,
        verdict,
        assumptions,
    })
}

#[derive(Serialize)]
struct ReportDoc {
    mode: String,
    assumptions: Vec<String>,
    matrix: MatrixDoc,
    blocks: BlocksDoc,
    spectra: Vec<SpectrumDoc>,
    verdict: VerdictDoc,
}

#[derive(Serialize)]
struct MatrixDoc {
    n: usize,
    samples: usize,
    nodes_per_sample: usize,
    values: Vec<Vec<f64>>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize)]
struct EntryDoc {
    row: usize,
    col: usize,
    value: f64,
    current_sup: f64,
    delayed_sup: f64,
    argmax_sample: usize,
    argmax_node: usize,
    at_sample_boundary: bool,
}

#[derive(Serialize)]
struct BlocksDoc {
    k: usize,
    permutation: Vec<usize>,
    sizes: Vec<usize>,
    members: Vec<Vec<usize>>,
    i: Vec<usize>,
    j: Vec<usize>,
}

#[derive(Serialize)]
struct SpectrumDoc {
    block: usize,
    lower: f64,
    upper: f64,
    samples: usize,
    max_residual: f64,
    window_spread: f64,
}

#[derive(Serialize)]
struct VerdictDoc {
    uniformly_persistent: bool,
    strictly_persistent_at_zero: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    inconclusive_reason: Option<String>,
    tol: f64,
}

fn mode_name(m: KMode) -> &'static str {
    match m {
        KMode::ZeroSection => "zero-section",
        KMode::OmegaLimit => "omega-limit",
    }
}

impl AnalysisReport {
    fn document(&self) -> ReportDoc {
        let m = &self.matrix;
        let n = m.dim();
        let (samples, nodes) = m.sample_counts();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let pr = m.provenance(i, j);
                let at = if pr.current_sup >= pr.delayed_sup {
                    pr.current_argmax
                } else {
                    pr.delayed_argmax
                };
                entries.push(EntryDoc {
                    row: i + 1,
                    col: j + 1,
                    value: m.get(i, j),
                    current_sup: pr.current_sup,
                    delayed_sup: pr.delayed_sup,
                    argmax_sample: at.sample,
                    argmax_node: at.node,
                    at_sample_boundary: pr.at_sample_boundary,
                });
            }
        }
        let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
        ReportDoc {
            mode: mode_name(self.mode).into(),
            assumptions: self.assumptions.clone(),
            matrix: MatrixDoc {
                n,
                samples,
                nodes_per_sample: nodes,
                values: m.values().outer_iter().map(|r| r.to_vec()).collect(),
                entries,
            },
            blocks: BlocksDoc {
                k: self.blocks.k(),
                permutation: one_based(&self.blocks.permutation),
                sizes: self.blocks.sizes(),
                members: self.blocks.blocks.iter().map(|b| one_based(b)).collect(),
                i: self.blocks.i_set.clone(),
                j: self.blocks.j_set.clone(),
            },
            spectra: self
                .spectra
                .iter()
                .map(|s| SpectrumDoc {
                    block: s.block,
                    lower: s.lower,
                    upper: s.upper,
                    samples: s.samples.len(),
                    max_residual: s.samples.iter().map(|e| e.residual).fold(0.0, f64::max),
                    window_spread: s
                        .samples
                        .iter()
                        .map(|e| e.window_max_slope - e.window_min_slope)
                        .fold(0.0, f64::max),
                })
                .collect(),
            verdict: VerdictDoc {
                uniformly_persistent: self.verdict.uniformly_persistent,
                strictly_persistent_at_zero: self.verdict.strictly_persistent_at_zero,
                inconclusive_reason: self.verdict.inconclusive_reason.clone(),
                tol: self.verdict.tol,
            },
        }
    }

    /// TOML document with sections `matrix`, `blocks`, `spectra` and `verdict`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.document()).map_err(|e| PfdeError::Io(e.to_string()))
    }

    pub fn write_toml<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_toml()?.as_bytes())?;
        Ok(())
    }
}
