//! Gamma-Poisson count simulator with planted groups and controllable
//! false zeros.
//!
//! Ground-truth counts and dropout draws use separate random streams from
//! the same seed, so changing `dropout_rate` leaves the ground truth intact
//! and only ever adds false zeros as the rate grows.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::model::ExpressionMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub n_cells: usize,
    pub n_genes: usize,
    pub n_groups: usize,
    /// Fraction of genes up-regulated in each group.
    pub de_fraction: f64,
    /// Fold change applied to a group's DE genes.
    pub de_strength: f64,
    pub base_mean: f64,
    /// Gamma dispersion of per-gene means (shape = 1 / dispersion).
    pub dispersion: f64,
    /// Probability that a nonzero count is observed as zero.
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            n_cells: 500,
            n_genes: 2000,
            n_groups: 3,
            de_fraction: 0.1,
            de_strength: 6.0,
            base_mean: 1.0,
            dispersion: 0.5,
            dropout_rate: 0.6,
            seed: 0,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 || self.n_genes == 0 {
            return Err(Error::param("n_cells/n_genes", "must be positive"));
        }
        if self.n_groups == 0 || self.n_groups > self.n_cells {
            return Err(Error::param(
                "n_groups",
                format!(
                    "{} must be between 1 and n_cells = {}",
                    self.n_groups, self.n_cells
                ),
            ));
        }
        if !(self.de_fraction > 0.0 && self.de_fraction <= 1.0) {
            return Err(Error::param("de_fraction", "must be in (0, 1]"));
        }
        for (name, v) in [
            ("de_strength", self.de_strength),
            ("base_mean", self.base_mean),
            ("dispersion", self.dispersion),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        if !(self.dropout_rate >= 0.0 && self.dropout_rate < 1.0) {
            return Err(Error::param("dropout_rate", "must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub ground_truth: ExpressionMatrix,
    pub observed: ExpressionMatrix,
    pub labels: Vec<usize>,
}

impl SimulatedData {
    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|g| format!("group{g}")).collect()
    }
}

pub fn simulate(spec: &SimulationSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let (n, m, g) = (spec.n_cells, spec.n_genes, spec.n_groups);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let gamma = Gamma::new(1.0 / spec.dispersion, spec.base_mean * spec.dispersion)
        .map_err(|e| Error::param("dispersion", e.to_string()))?;
    let gene_means: Vec<f64> = (0..m).map(|_| gamma.sample(&mut rng)).collect();

    let n_de = ((spec.de_fraction * m as f64).round() as usize).clamp(1, m);
    let group_means: Vec<Vec<f64>> = (0..g)
        .map(|_| {
            let mut means = gene_means.clone();
            for j in rand::seq::index::sample(&mut rng, m, n_de) {
                means[j] *= spec.de_strength;
            }
            means
        })
        .collect();

    let mut labels: Vec<usize> = (0..n).map(|i| i % g).collect();
    labels.shuffle(&mut rng);

    let mut truth = Vec::with_capacity(n * m);
    for &group in &labels {
        for &mean in &group_means[group] {
            let count = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| Error::param("mean", e.to_string()))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            truth.push(count);
        }
    }

    let mut dropout_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    dropout_rng.set_stream(1);
    let observed = truth
        .iter()
        .map(|&v| {
            let u: f64 = dropout_rng.random();
            if v != 0.0 && u < spec.dropout_rate {
                0.0
            } else {
                v
            }
        })
        .collect();

    Ok(SimulatedData {
        ground_truth: ExpressionMatrix::new(n, m, truth)?,
        observed: ExpressionMatrix::new(n, m, observed)?,
        labels,
    })
}

/// Share of ground-truth nonzeros that are zero in `observed`.
pub fn false_zero_rate(
    ground_truth: &ExpressionMatrix,
    observed: &ExpressionMatrix,
) -> Result<f64> {
    if ground_truth.shape() != observed.shape() {
        return Err(Error::DimensionMismatch(format!(
            "ground truth is {:?} but observed is {:?}",
            ground_truth.shape(),
            observed.shape()
        )));
    }
    let mut nonzero = 0usize;
    let mut lost = 0usize;
    for (&t, &o) in ground_truth.values().iter().zip(observed.values()) {
        if t != 0.0 {
            nonzero += 1;
            if o == 0.0 {
                lost += 1;
            }
        }
    }
    if nonzero == 0 {
        return Err(Error::param("ground_truth", "has no nonzero entries"));
    }
    Ok(lost as f64 / nonzero as f64)
}
