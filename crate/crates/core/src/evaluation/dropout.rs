use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::ExpressionMatrix;

/// One entry removed from the matrix, with its original value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOut {
    pub cell: usize,
    pub gene: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutExperiment {
    pub corrupted: ExpressionMatrix,
    /// Sorted by (cell, gene).
    pub held_out: Vec<HeldOut>,
    pub requested_rate: f64,
    /// `held_out.len() / nnz(source)`.
    pub realized_rate: f64,
}

/// Zeroes `floor(rate * nnz)` nonzero entries chosen uniformly without
/// replacement.
pub fn apply_dropout(x: &ExpressionMatrix, rate: f64, seed: u64) -> Result<DropoutExperiment> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::param("rate", format!("{rate} is outside (0, 1)")));
    }
    let nonzero: Vec<usize> = x
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    if nonzero.is_empty() {
        return Err(Error::param("x", "matrix has no nonzero entries"));
    }
    let n_drop = (rate * nonzero.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, nonzero.len(), n_drop)
        .into_iter()
        .map(|p| nonzero[p])
        .collect();
    picked.sort_unstable();

    let m = x.n_genes();
    let mut values = x.values().to_vec();
    let held_out = picked
        .into_iter()
        .map(|flat| {
            let value = values[flat];
            values[flat] = 0.0;
            HeldOut {
                cell: flat / m,
                gene: flat % m,
                value,
            }
        })
        .collect::<Vec<_>>();
    Ok(DropoutExperiment {
        corrupted: x.derived(values),
        realized_rate: held_out.len() as f64 / nonzero.len() as f64,
        held_out,
        requested_rate: rate,
    })
}

/// Root-mean-square error of `imputed` over the held-out entries only.
pub fn masked_rmse(imputed: &ExpressionMatrix, held_out: &[HeldOut]) -> Result<f64> {
    if held_out.is_empty() {
        return Err(Error::EmptyHeldOut);
    }
    let (n, m) = imputed.shape();
    let mut sum = 0.0;
    for h in held_out {
        if h.cell >= n || h.gene >= m {
            return Err(Error::DimensionMismatch(format!(
                "held-out entry ({}, {}) outside a {n}x{m} matrix",
                h.cell, h.gene
            )));
        }
        let diff = imputed.get(h.cell, h.gene) - h.value;
        sum += diff * diff;
    }
    Ok((sum / held_out.len() as f64).sqrt())
}
