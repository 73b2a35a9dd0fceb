//! Evaluation protocol: dropout masking with held-out RMSE, and
//! PCA + k-means clustering scored by ARI, NMI and clustering accuracy.

pub mod dropout;
pub mod hungarian;
pub mod kmeans;
pub mod metrics;
pub mod pca;

pub use dropout::{apply_dropout, masked_rmse, DropoutExperiment, HeldOut};
pub use hungarian::{hungarian_assign, Assignment};
pub use kmeans::{kmeans, ClusteringResult, DEFAULT_RESTARTS};
pub use metrics::{
    adjusted_rand_index, clustering_accuracy, encode_labels, normalized_mutual_info,
};
pub use pca::{pca_reduce, Embedding};

use crate::error::{Error, Result};
use crate::model::{EvaluationReport, ExpressionMatrix};

/// Upper bound on PCA dimensions before clustering.
pub const PCA_DIMENSIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringScores {
    pub ari: f64,
    pub nmi: f64,
    pub ca: f64,
    pub clustering: ClusteringResult,
    pub embedding: Embedding,
    pub notes: Vec<String>,
}

impl ClusteringScores {
    pub fn fill(&self, report: &mut EvaluationReport) {
        report.ari = Some(self.ari);
        report.nmi = Some(self.nmi);
        report.ca = Some(self.ca);
        report.notes.extend(self.notes.iter().cloned());
    }
}

/// PCA to `min(50, N-1, M)` dimensions, k-means with `c` clusters, then
/// agreement with `truth`.
pub fn evaluate_clustering(
    x: &ExpressionMatrix,
    truth: &[usize],
    c: usize,
    seed: u64,
) -> Result<ClusteringScores> {
    let (n, m) = x.shape();
    if truth.len() != n {
        return Err(Error::Labels(format!(
            "{} labels for {n} cells",
            truth.len()
        )));
    }
    let d = PCA_DIMENSIONS.min(n.saturating_sub(1)).min(m);
    if d == 0 {
        return Err(Error::param("x", "need at least 2 cells to cluster"));
    }
    let embedding = pca_reduce(x, d, seed)?;
    let clustering = kmeans(&embedding, c, seed, DEFAULT_RESTARTS)?;
    let (ari, ari_degenerate) = metrics::adjusted_rand_index_flagged(&clustering.labels, truth)?;
    let (nmi, nmi_degenerate) = metrics::normalized_mutual_info_flagged(&clustering.labels, truth)?;
    let ca = clustering_accuracy(&clustering.labels, truth)?;
    let mut notes = Vec::new();
    if ari_degenerate {
        notes.push("ari: degenerate partition, convention value 1.0".to_string());
    }
    if nmi_degenerate {
        notes.push(format!(
            "nmi: zero-entropy partition, convention value {nmi}"
        ));
    }
    if !clustering.empty_clusters.is_empty() {
        notes.push(format!(
            "kmeans: empty clusters {:?}",
            clustering.empty_clusters
        ));
    }
    Ok(ClusteringScores {
        ari,
        nmi,
        ca,
        clustering,
        embedding,
        notes,
    })
}
