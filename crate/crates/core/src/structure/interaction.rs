use std::io::Write;

use ndarray::Array2;

use crate::error::Result;
use crate::model::ProblemSpec;
use crate::spectrum::{KMode, RealizedK};

/// Where a sampled supremum was attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleLocation {
    pub sample: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntryProvenance {
    /// Sup of `d f_i / d y_j`.
    pub current_sup: f64,
    /// Sup of `d f_i / d y_j(t - 1)`.
    pub delayed_sup: f64,
    pub current_argmax: SampleLocation,
    pub delayed_argmax: SampleLocation,
    /// The larger contribution peaked at the first or last sample of an
    /// orbit window, so the sup may be underestimated.
    pub at_sample_boundary: bool,
}

/// `A + B` with entries `sup a_ij + sup b_ij` and zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    values: Array2<f64>,
    provenance: Vec<EntryProvenance>,
    samples: usize,
    nodes: usize,
}

impl InteractionMatrix {
    pub const EDGE_THRESHOLD: f64 = 1e-10;

    /// Wraps given entries; the diagonal is cleared.
    pub fn from_values(mut values: Array2<f64>) -> Self {
        assert_eq!(
            values.nrows(),
            values.ncols(),
            "interaction matrix must be square"
        );
        for i in 0..values.nrows() {
            values[[i, i]] = 0.0;
        }
        let n = values.nrows();
        Self {
            values,
            provenance: vec![EntryProvenance::default(); n * n],
            samples: 0,
            nodes: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn provenance(&self, i: usize, j: usize) -> &EntryProvenance {
        &self.provenance[i * self.dim() + j]
    }

    /// Number of sampled points of `K` and mesh nodes per point.
    pub fn sample_counts(&self) -> (usize, usize) {
        (self.samples, self.nodes)
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, &v| a.max(v))
    }

    /// `i -> j` when species `i` is driven by species `j`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.values[[i, j]] > Self::EDGE_THRESHOLD * (1.0 + self.max_entry())
    }

    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.dim();
        let cut = Self::EDGE_THRESHOLD * (1.0 + self.max_entry());
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| i != j && self.values[[i, j]] > cut)
                    .collect()
            })
            .collect()
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> InteractionMatrix {
        let values = Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| {
            self.values[[idx[r], idx[c]]]
        });
        InteractionMatrix::from_values(values)
    }
}

/// Samples the Jacobians over `K` and every mesh node.
pub fn interaction_matrix(p: &ProblemSpec, k: &RealizedK) -> Result<InteractionMatrix> {
    let n = p.species();
    let nodes = p.mesh().nodes();
    let xs = p.mesh().points();
    let mut cur_sup = Array2::from_elem((n, n), f64::NEG_INFINITY);
    let mut del_sup = Array2::from_elem((n, n), f64::NEG_INFINITY);
    let mut cur_at = vec![SampleLocation::default(); n * n];
    let mut del_at = vec![SampleLocation::default(); n * n];
    let zeros = vec![0.0; n];
    let (mut y, mut z) = (vec![0.0; n], vec![0.0; n]);
    let (mut ja, mut jb) = (vec![0.0; n * n], vec![0.0; n * n]);
    for s in 0..k.len() {
        let state = k.state(p, s);
        let w = &k.points[s].driver;
        for (node, &x) in xs.iter().enumerate() {
            match state {
                Some((cur, del)) => {
                    for i in 0..n {
                        y[i] = cur[[i, node]];
                        z[i] = del[[i, node]];
                    }
                }
                None => {
                    y.copy_from_slice(&zeros);
                    z.copy_from_slice(&zeros);
                }
            }
            p.reaction()
                .jacobians_into(w.angles(), x, &y, &z, &mut ja, &mut jb);
            for i in 0..n {
                for j in 0..n {
                    let at = SampleLocation { sample: s, node };
                    if ja[i * n + j] > cur_sup[[i, j]] {
                        cur_sup[[i, j]] = ja[i * n + j];
                        cur_at[i * n + j] = at;
                    }
                    if jb[i * n + j] > del_sup[[i, j]] {
                        del_sup[[i, j]] = jb[i * n + j];
                        del_at[i * n + j] = at;
                    }
                }
            }
        }
    }
    let last = k.len().saturating_sub(1);
    let windowed = k.mode == KMode::OmegaLimit;
    let mut provenance = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let e = i * n + j;
            let dominant = if cur_sup[[i, j]] >= del_sup[[i, j]] {
                cur_at[e]
            } else {
                del_at[e]
            };
            provenance.push(EntryProvenance {
                current_sup: cur_sup[[i, j]],
                delayed_sup: del_sup[[i, j]],
                current_argmax: cur_at[e],
                delayed_argmax: del_at[e],
                at_sample_boundary: windowed
                    && i != j
                    && (dominant.sample == 0 || dominant.sample == last),
            });
        }
    }
    let mut values = &cur_sup + &del_sup;
    for i in 0..n {
        values[[i, i]] = 0.0;
    }
    Ok(InteractionMatrix {
        values,
        provenance,
        samples: k.len(),
        nodes,
    })
}

pub const MATRIX_CSV_HEADER: &str =
    "row,col,value,current_sup,delayed_sup,argmax_sample,argmax_node,at_sample_boundary";

/// One line per entry; rows and columns counted from 1.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &InteractionMatrix) -> Result<()> {
    writeln!(w, "{MATRIX_CSV_HEADER}")?;
    let n = m.dim();
    for i in 0..n {
        for j in 0..n {
            let pr = m.provenance(i, j);
            let at = if pr.current_sup >= pr.delayed_sup {
                pr.current_argmax
            } else {
                pr.delayed_argmax
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                j + 1,
                m.get(i, j),
                pr.current_sup,
                pr.delayed_sup,
                at.sample,
                at.node,
                pr.at_sample_boundary
            )?;
        }
    }
    Ok(())
}
