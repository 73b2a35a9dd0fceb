//! Truncated PCA.
//!
//! When the requested rank plus oversampling covers the smaller matrix
//! dimension the decomposition is exact; otherwise a seeded randomized
//! range finder with power iterations narrows the problem to a small SVD.
//! Either way the projection basis is orthonormal, so scores are an exact
//! orthogonal projection of the centered data.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::ExpressionMatrix;

const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 4;

/// Row-major `n x dim` point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub n: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {n} points of dimension {dim}",
                values.len()
            )));
        }
        Ok(Self { n, dim, values })
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// `C = op(A) * op(B)` for row-major operands.
#[allow(clippy::too_many_arguments)]
fn gemm(
    a: &[f64],
    a_rows: usize,
    a_cols: usize,
    a_t: bool,
    b: &[f64],
    b_rows: usize,
    b_cols: usize,
    b_t: bool,
) -> Vec<f64> {
    let (m, k) = if a_t {
        (a_cols, a_rows)
    } else {
        (a_rows, a_cols)
    };
    let (k2, n) = if b_t {
        (b_cols, b_rows)
    } else {
        (b_rows, b_cols)
    };
    assert_eq!(k, k2, "inner dimensions differ");
    assert_eq!(a.len(), a_rows * a_cols);
    assert_eq!(b.len(), b_rows * b_cols);
    let (rsa, csa) = if a_t {
        (1, a_cols as isize)
    } else {
        (a_cols as isize, 1)
    };
    let (rsb, csb) = if b_t {
        (1, b_cols as isize)
    } else {
        (b_cols as isize, 1)
    };
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 {
        return c;
    }
    // SAFETY: operand lengths were checked against their declared shapes and
    // the strides describe those row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// Orthonormal basis (row-major `rows x cols`) for the columns of `y`.
fn orthonormalize(y: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let q = DMatrix::from_row_slice(rows, cols, y).qr().q();
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[i * cols + j] = q[(i, j)];
        }
    }
    out
}

/// Projects column-centered `x` onto its top `d` principal axes. Each axis
/// is oriented so its largest-magnitude loading is positive.
pub fn pca_reduce(x: &ExpressionMatrix, d: usize, seed: u64) -> Result<Embedding> {
    let (n, m) = x.shape();
    let rank_cap = n.min(m);
    if d == 0 || d > rank_cap {
        return Err(Error::param(
            "d",
            format!("{d} must be between 1 and min(N, M) = {rank_cap}"),
        ));
    }
    let mut centered = x.values().to_vec();
    for j in 0..m {
        let mean = (0..n).map(|i| centered[i * m + j]).sum::<f64>() / n as f64;
        for i in 0..n {
            centered[i * m + j] -= mean;
        }
    }

    // basis: m x l, orthonormal columns spanning (approximately) the top
    // right singular subspace
    let l = (d + OVERSAMPLE).min(rank_cap);
    let basis = if l >= m {
        let mut eye = vec![0.0; m * m];
        (0..m).for_each(|i| eye[i * m + i] = 1.0);
        eye
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega: Vec<f64> = (0..m * l)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut range = orthonormalize(&gemm(&centered, n, m, false, &omega, m, l, false), n, l);
        for _ in 0..POWER_ITERATIONS {
            let back = orthonormalize(&gemm(&centered, n, m, true, &range, n, l, false), m, l);
            range = orthonormalize(&gemm(&centered, n, m, false, &back, m, l, false), n, l);
        }
        orthonormalize(&gemm(&centered, n, m, true, &range, n, l, false), m, l)
    };
    let width = basis.len() / m;

    let reduced = gemm(&centered, n, m, false, &basis, m, width, false);
    let svd = DMatrix::from_row_slice(n, width, &reduced).svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    // loadings: m x d = basis * W[:, top d]
    let mut w = vec![0.0; width * d];
    for (c, &src) in order.iter().take(d).enumerate() {
        for r in 0..width {
            w[r * d + c] = v_t[(src, r)];
        }
    }
    let mut loadings = gemm(&basis, m, width, false, &w, width, d, false);
    for c in 0..d {
        let mut best = 0;
        for r in 1..m {
            if loadings[r * d + c].abs() > loadings[best * d + c].abs() {
                best = r;
            }
        }
        if loadings[best * d + c] < 0.0 {
            (0..m).for_each(|r| loadings[r * d + c] = -loadings[r * d + c]);
        }
    }
    let scores = gemm(&centered, n, m, false, &loadings, m, d, false);
    Embedding::new(n, d, scores)
}
