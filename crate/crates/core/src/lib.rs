//! Bi-level feature propagation for imputing and denoising sparse
//! single-cell count matrices.
//!
//! The pipeline builds a cosine kNN graph over cells, fills unobserved
//! entries by hard propagation (observed entries stay clamped), rebuilds the
//! graph from the warmed matrix, and then smooths every entry by soft
//! propagation anchored to the warmed values.
//!
//! ```
//! use scfp::{run_scfp, ExpressionMatrix, ScfpConfig};
//!
//! let x = ExpressionMatrix::from_rows(&[
//!     vec![1.0, 0.0, 2.0],
//!     vec![1.0, 1.0, 2.0],
//!     vec![0.0, 3.0, 1.0],
//!     vec![0.0, 3.0, 0.0],
//! ])
//! .unwrap();
//! let config = ScfpConfig { k: 2, ..ScfpConfig::default() };
//! let result = run_scfp(&x, &config).unwrap();
//! assert_eq!(result.denoised.shape(), (4, 3));
//! ```

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod propagation;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{
    cosine_knn, graph_change, refine_graph, row_normalize, GraphChange, NeighborGraph,
};
pub use model::{
    derive_known_mask, validate, EvaluationReport, ExpressionMatrix, KnownMask, Mode, ScfpConfig,
    Validation, Violation,
};
pub use pipeline::{preprocess, run_scfp, GraphSummary, ImputationResult, PreprocessOptions};
pub use propagation::{
    closed_form_solution, dirichlet_energy, full_diffusion, hard_feature_propagation,
    soft_feature_propagation, soft_fixed_point_oracle, PropagationTrace,
};
pub use synth::{false_zero_rate, simulate, SimulatedData, SimulationSpec};
