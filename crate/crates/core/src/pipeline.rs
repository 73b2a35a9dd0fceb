//! End-to-end imputation: initial graph, hard propagation, graph
//! refinement, soft propagation, plus the ablation variants.

use crate::error::Result;
use crate::graph::{cosine_knn, graph_change, refine_graph, GraphChange, NeighborGraph};
use crate::model::{derive_known_mask, ExpressionMatrix, KnownMask, Mode, ScfpConfig};
use crate::propagation::{
    full_diffusion, hard_feature_propagation, soft_feature_propagation, PropagationTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSummary {
    pub edges: usize,
    /// Rows whose neighbor set differs from the initial graph (0 for the
    /// initial graph itself).
    pub rows_changed: usize,
    pub edges_added: usize,
}

impl From<GraphChange> for GraphSummary {
    fn from(c: GraphChange) -> Self {
        Self {
            edges: c.edges,
            rows_changed: c.rows_changed,
            edges_added: c.edges_added,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub denoised: ExpressionMatrix,
    /// Output of the first propagation phase (equal to `denoised` when only
    /// one phase runs).
    pub warmed: ExpressionMatrix,
    pub initial_graph: GraphSummary,
    /// `None` in modes that never rebuild the graph.
    pub refined_graph: Option<GraphSummary>,
    pub hard_trace: Option<PropagationTrace>,
    pub soft_trace: Option<PropagationTrace>,
    pub config_echo: ScfpConfig,
}

fn summarize(graph: &NeighborGraph) -> GraphSummary {
    graph_change(graph, graph).into()
}

/// Input where known entries come from `observed` and the rest from `fill`.
fn clamp_to(
    observed: &ExpressionMatrix,
    mask: &KnownMask,
    fill: &ExpressionMatrix,
) -> ExpressionMatrix {
    let values = fill
        .values()
        .iter()
        .zip(observed.values())
        .zip(mask.as_slice())
        .map(|((&f, &o), &k)| if k { o } else { f })
        .collect();
    observed.derived(values)
}

pub fn run_scfp(x: &ExpressionMatrix, config: &ScfpConfig) -> Result<ImputationResult> {
    config.validate()?;
    let mask = derive_known_mask(x);
    let initial = cosine_knn(x, config.k)?;
    let tol = config.convergence_tolerance;

    let hard = |start: &ExpressionMatrix, graph: &NeighborGraph| {
        hard_feature_propagation(start, &mask, graph, config.hard_iterations, tol)
    };
    let soft = |anchor: &ExpressionMatrix, graph: &NeighborGraph| {
        soft_feature_propagation(anchor, graph, config.alpha, config.soft_iterations, tol)
    };

    let mut result = ImputationResult {
        denoised: x.clone(),
        warmed: x.clone(),
        initial_graph: summarize(&initial),
        refined_graph: None,
        hard_trace: None,
        soft_trace: None,
        config_echo: config.clone(),
    };

    match config.mode {
        Mode::Full => {
            let (warmed, hard_trace) = hard(x, &initial)?;
            let refined = refine_graph(&warmed, config.k)?;
            let (denoised, soft_trace) = soft(&warmed, &refined)?;
            result.refined_graph = Some(graph_change(&initial, &refined).into());
            result.hard_trace = Some(hard_trace);
            result.soft_trace = Some(soft_trace);
            result.warmed = warmed;
            result.denoised = denoised;
        }
        Mode::HardOnly => {
            let (warmed, hard_trace) = hard(x, &initial)?;
            result.hard_trace = Some(hard_trace);
            result.denoised = warmed.clone();
            result.warmed = warmed;
        }
        Mode::SoftOnly => {
            let (denoised, soft_trace) = soft(x, &initial)?;
            result.soft_trace = Some(soft_trace);
            result.warmed = denoised.clone();
            result.denoised = denoised;
        }
        Mode::HardSoftNoRefine => {
            let (warmed, hard_trace) = hard(x, &initial)?;
            let (denoised, soft_trace) = soft(&warmed, &initial)?;
            result.hard_trace = Some(hard_trace);
            result.soft_trace = Some(soft_trace);
            result.warmed = warmed;
            result.denoised = denoised;
        }
        Mode::SoftThenHard => {
            let (smoothed, soft_trace) = soft(x, &initial)?;
            let refined = refine_graph(&smoothed, config.k)?;
            let start = clamp_to(x, &mask, &smoothed);
            let (denoised, hard_trace) = hard(&start, &refined)?;
            result.refined_graph = Some(graph_change(&initial, &refined).into());
            result.hard_trace = Some(hard_trace);
            result.soft_trace = Some(soft_trace);
            result.warmed = smoothed;
            result.denoised = denoised;
        }
        Mode::FullDiffusionBaseline => {
            let denoised = full_diffusion(x, &initial, config.diffusion_steps)?;
            result.warmed = denoised.clone();
            result.denoised = denoised;
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessOptions {
    pub library_size_normalize: bool,
    pub log1p: bool,
    pub target_sum: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            library_size_normalize: false,
            log1p: false,
            target_sum: 1e4,
        }
    }
}

impl PreprocessOptions {
    /// Library-size normalization to 1e4 followed by `log1p`.
    pub fn standard() -> Self {
        Self {
            library_size_normalize: true,
            log1p: true,
            target_sum: 1e4,
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.library_size_normalize && !self.log1p
    }
}

/// Optional per-cell scaling to `target_sum` and `log(1 + v)`. Zero entries
/// stay zero and nonzero entries stay nonzero.
pub fn preprocess(x: &ExpressionMatrix, options: &PreprocessOptions) -> Result<ExpressionMatrix> {
    if options.library_size_normalize
        && !(options.target_sum > 0.0 && options.target_sum.is_finite())
    {
        return Err(crate::error::Error::param(
            "target_sum",
            "must be positive and finite",
        ));
    }
    let m = x.n_genes();
    let mut values = x.values().to_vec();
    for row in values.chunks_mut(m) {
        if options.library_size_normalize {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                let scale = options.target_sum / total;
                row.iter_mut().for_each(|v| *v *= scale);
            }
        }
        if options.log1p {
            row.iter_mut().for_each(|v| *v = v.ln_1p());
        }
    }
    Ok(x.derived(values))
}
