//! Interaction matrix, irreducibility, block lower triangular form and the
//! persistence verdict built from diagonal-block spectra.

mod blocks;
mod interaction;
mod persistence;

pub use blocks::{block_triangularize, is_irreducible, BlockStructure};
pub use interaction::{
    interaction_matrix, write_matrix_csv, EntryProvenance, InteractionMatrix, SampleLocation,
};
pub use persistence::{
    classify_persistence, empirical_persistence, BlockSpectrumRow, EmpiricalOptions,
    EmpiricalReport, StrictWitness, UniformWitness, Verdict, DEFAULT_TOL, WITNESS_FLOOR,
};
