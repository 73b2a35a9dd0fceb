//! Shared data model: expression matrices, known-entry masks and run
//! configuration.
//!
//! Matrices are dense, row-major `f64` with cells as rows and genes as
//! columns. Once constructed through the public API they are guaranteed to
//! be finite and nonnegative.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A single reason an expression matrix is not valid.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative { row: usize, col: usize, value: f64 },
    NonFinite { row: usize, col: usize },
    Dimension(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { row, col, value } => {
                write!(f, "negative entry {value} at ({row},{col})")
            }
            Violation::NonFinite { row, col } => write!(f, "non-finite entry at ({row},{col})"),
            Violation::Dimension(msg) => write!(f, "{msg}"),
        }
    }
}

/// Outcome of [`validate`]: empty when the data is a valid expression matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks raw matrix parts against the expression-matrix invariants.
pub fn validate(
    n_cells: usize,
    n_genes: usize,
    values: &[f64],
    cell_ids: &[String],
    gene_ids: &[String],
) -> Validation {
    let mut violations = Vec::new();
    if n_cells == 0 || n_genes == 0 {
        violations.push(Violation::Dimension(format!(
            "matrix must be at least 1x1, got {n_cells}x{n_genes}"
        )));
    }
    if values.len() != n_cells * n_genes {
        violations.push(Violation::Dimension(format!(
            "{} values for a {n_cells}x{n_genes} matrix",
            values.len()
        )));
    }
    if cell_ids.len() != n_cells {
        violations.push(Violation::Dimension(format!(
            "{} cell ids for {n_cells} cells",
            cell_ids.len()
        )));
    }
    if gene_ids.len() != n_genes {
        violations.push(Violation::Dimension(format!(
            "{} gene ids for {n_genes} genes",
            gene_ids.len()
        )));
    }
    if let Some(width) = std::num::NonZeroUsize::new(n_genes) {
        for (idx, &v) in values.iter().enumerate() {
            let (row, col) = (idx / width, idx % width);
            if !v.is_finite() {
                violations.push(Violation::NonFinite { row, col });
            } else if v < 0.0 {
                violations.push(Violation::Negative { row, col, value: v });
            }
        }
    }
    Validation { violations }
}

pub(crate) fn default_ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Dense cell-by-gene expression matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    n_cells: usize,
    n_genes: usize,
    values: Vec<f64>,
    cell_ids: Vec<String>,
    gene_ids: Vec<String>,
}

impl ExpressionMatrix {
    /// Builds a matrix from row-major values with generated ids
    /// (`cell0..`, `gene0..`).
    pub fn new(n_cells: usize, n_genes: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_ids(
            n_cells,
            n_genes,
            values,
            default_ids("cell", n_cells),
            default_ids("gene", n_genes),
        )
    }

    pub fn with_ids(
        n_cells: usize,
        n_genes: usize,
        values: Vec<f64>,
        cell_ids: Vec<String>,
        gene_ids: Vec<String>,
    ) -> Result<Self> {
        let report = validate(n_cells, n_genes, &values, &cell_ids, &gene_ids);
        if !report.is_ok() {
            return Err(Error::InvalidMatrix(report.violations));
        }
        Ok(Self {
            n_cells,
            n_genes,
            values,
            cell_ids,
            gene_ids,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cells = rows.len();
        let n_genes = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_genes) {
            return Err(Error::InvalidMatrix(vec![Violation::Dimension(format!(
                "row {i} has {} entries, expected {n_genes}",
                r.len()
            ))]));
        }
        Self::new(n_cells, n_genes, rows.concat())
    }

    /// Iterates are produced by nonnegative operators on valid inputs, so
    /// they skip the full validation pass.
    pub(crate) fn derived(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self {
            n_cells: self.n_cells,
            n_genes: self.n_genes,
            values,
            cell_ids: self.cell_ids.clone(),
            gene_ids: self.gene_ids.clone(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_genes(&self) -> usize {
        self.n_genes
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_cells, self.n_genes)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, cell: usize, gene: usize) -> f64 {
        self.values[cell * self.n_genes + gene]
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.n_genes..(cell + 1) * self.n_genes]
    }

    pub fn column(&self, gene: usize) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.get(i, gene)).collect()
    }

    pub fn cell_ids(&self) -> &[String] {
        &self.cell_ids
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn validate(&self) -> Validation {
        validate(
            self.n_cells,
            self.n_genes,
            &self.values,
            &self.cell_ids,
            &self.gene_ids,
        )
    }

    pub fn transpose(&self) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.n_cells {
            for j in 0..self.n_genes {
                values[j * self.n_cells + i] = self.get(i, j);
            }
        }
        Self {
            n_cells: self.n_genes,
            n_genes: self.n_cells,
            values,
            cell_ids: self.gene_ids.clone(),
            gene_ids: self.cell_ids.clone(),
        }
    }
}

/// Frozen record of which entries were observed (nonzero) in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownMask {
    n_cells: usize,
    n_genes: usize,
    known: Vec<bool>,
}

impl KnownMask {
    pub fn from_bools(n_cells: usize, n_genes: usize, known: Vec<bool>) -> Result<Self> {
        if known.len() != n_cells * n_genes {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries for a {n_cells}x{n_genes} matrix",
                known.len()
            )));
        }
        Ok(Self {
            n_cells,
            n_genes,
            known,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_cells, self.n_genes)
    }

    pub fn is_known(&self, cell: usize, gene: usize) -> bool {
        self.known[cell * self.n_genes + gene]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.known
    }

    pub fn count_known(&self) -> usize {
        self.known.iter().filter(|k| **k).count()
    }
}

/// Marks every nonzero input entry as known. Exact zeros are always unknown.
pub fn derive_known_mask(x: &ExpressionMatrix) -> KnownMask {
    KnownMask {
        n_cells: x.n_cells(),
        n_genes: x.n_genes(),
        known: x.values().iter().map(|v| *v != 0.0).collect(),
    }
}

/// Which stages of the pipeline run, and in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Hard propagation, graph refinement, soft propagation.
    #[default]
    Full,
    HardOnly,
    SoftOnly,
    /// Hard then soft propagation, both on the initial graph.
    HardSoftNoRefine,
    /// Order-swapped: soft first, refine, then hard.
    SoftThenHard,
    /// Plain repeated averaging over the initial graph with no clamping.
    FullDiffusionBaseline,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Full,
        Mode::HardOnly,
        Mode::SoftOnly,
        Mode::HardSoftNoRefine,
        Mode::SoftThenHard,
        Mode::FullDiffusionBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::HardOnly => "hard_only",
            Mode::SoftOnly => "soft_only",
            Mode::HardSoftNoRefine => "hard_soft_no_refine",
            Mode::SoftThenHard => "soft_then_hard",
            Mode::FullDiffusionBaseline => "full_diffusion_baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace('-', "_");
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == normalized)
            .ok_or_else(|| {
                let names: Vec<_> = Mode::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown mode `{s}`, expected one of: {}", names.join(", "))
            })
    }
}

pub const DEFAULT_K: usize = 15;
pub const DEFAULT_ALPHA: f64 = 0.99;
pub const DEFAULT_ITERATIONS: usize = 40;
pub const DEFAULT_DIFFUSION_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScfpConfig {
    /// Neighbors per cell, shared by the initial and refined graphs.
    pub k: usize,
    /// Weight on the neighborhood term during soft propagation.
    pub alpha: f64,
    pub hard_iterations: usize,
    pub soft_iterations: usize,
    /// Frobenius residual below which a phase stops early; 0 runs the full
    /// iteration budget.
    pub convergence_tolerance: f64,
    pub mode: Mode,
    /// Steps of plain diffusion used by [`Mode::FullDiffusionBaseline`].
    pub diffusion_steps: usize,
    pub seed: u64,
}

impl Default for ScfpConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            hard_iterations: DEFAULT_ITERATIONS,
            soft_iterations: DEFAULT_ITERATIONS,
            convergence_tolerance: 0.0,
            mode: Mode::Full,
            diffusion_steps: DEFAULT_DIFFUSION_STEPS,
            seed: 0,
        }
    }
}

impl ScfpConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        check_alpha(self.alpha)?;
        if self.hard_iterations == 0 {
            return Err(Error::param("hard_iterations", "must be at least 1"));
        }
        if self.soft_iterations == 0 {
            return Err(Error::param("soft_iterations", "must be at least 1"));
        }
        if self.diffusion_steps == 0 {
            return Err(Error::param("diffusion_steps", "must be at least 1"));
        }
        if !(self.convergence_tolerance >= 0.0 && self.convergence_tolerance.is_finite()) {
            return Err(Error::param(
                "convergence_tolerance",
                "must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} is outside (0, 1)")))
    }
}

/// Metrics gathered for one matrix. A metric that was not evaluated stays
/// `None` and is written out as `NA`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationReport {
    pub label: String,
    pub rmse_masked: Option<f64>,
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub ca: Option<f64>,
    pub wall_time_seconds: f64,
    pub config_echo: Option<ScfpConfig>,
    /// Degenerate-case conventions that were triggered, and similar remarks.
    pub notes: Vec<String>,
}
