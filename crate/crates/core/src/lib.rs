//! Logratio analysis of compositional data.
//!
//! A composition is a row of strictly positive parts summing to one. The
//! crate covers closure and zero replacement, logratio pattern matrices
//! (pairwise, additive, centred, pivot, isometric, graph-based and summated
//! logratios), their inverses, log-contrast regression with a permutation
//! test, logratio distances and total variance, weighted logratio analysis
//! (biplots), and Ward and amalgamation clustering.
//!
//! ```
//! use logratio::{close, RawTable, CLOSURE_TOLERANCE};
//!
//! let raw = RawTable::from_rows(&[vec![2.0, 6.0], vec![1.0, 1.0]]);
//! let x = close(&raw, CLOSURE_TOLERANCE).unwrap();
//! assert_eq!(x.row(0).as_slice(), &[0.25, 0.75]);
//! ```

pub mod cli;
pub mod cluster;
pub mod composition;
pub mod contrast;
mod error;
pub mod geometry;
mod linalg;
pub mod lra;
pub mod patterns;
pub mod transforms;
mod tree;

pub use cluster::{amalgamation_cluster, tree_export, tree_import, ward_cluster, ClusterInput, TreeFormat};
pub use composition::{
    close, marginal_weights, replace_zeros, subcomposition, CompositionMatrix, LogMatrix, RawTable, WeightAxis,
    WeightVector, CLOSURE_TOLERANCE,
};
pub use contrast::{
    fit_logratio_model, fit_ols, permutation_test, to_log_contrast, FitResult, LogContrast, OlsFit, PermutationResult,
};
pub use error::{Error, Result};
pub use geometry::{
    form_matrix, logratio_distances, part_distances, total_variance, DistanceMatrix, FormMatrix, Route,
};
pub use lra::{biplot_coords, link_scores, lra_fit, Biplot, BiplotStyle, LraResult};
pub use patterns::{
    alr_pattern, clr_pattern, dag_pattern, ilr_pattern, lr_pattern, plr_pattern, slr_pattern, PatternKind,
    PatternMatrix, RatioSpec, SlrGroup,
};
pub use transforms::{
    apply_pattern, invert_alr, invert_dag, invert_linear, invert_slr, log_transform, slr_transform, LogratioMatrix,
};
pub use tree::{Merge, MergeTree};
