//! Cell-cell kNN graphs with cosine similarity and row-stochastic weights.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ExpressionMatrix;

/// Rows evaluated per GEMM call during neighbor search.
const ROW_BLOCK: usize = 64;

/// Sparse row-stochastic adjacency in compressed-row layout.
///
/// Column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    k: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl NeighborGraph {
    /// Builds a graph from raw CSR parts, checking that every row is a
    /// probability distribution over at most `k` in-range columns.
    pub fn from_csr(
        n: usize,
        k: usize,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != cols.len() {
            return Err(Error::InvalidGraph("malformed row pointer".into()));
        }
        if cols.len() != weights.len() {
            return Err(Error::InvalidGraph(
                "column and weight arrays differ in length".into(),
            ));
        }
        let graph = Self {
            n,
            k,
            row_ptr,
            cols,
            weights,
        };
        for i in 0..n {
            if graph.row_ptr[i] > graph.row_ptr[i + 1] {
                return Err(Error::InvalidGraph(format!(
                    "row {i}: decreasing row pointer"
                )));
            }
            let (cols, weights) = graph.row(i);
            if cols.len() > k {
                return Err(Error::InvalidGraph(format!(
                    "row {i} has {} entries, more than k = {k}",
                    cols.len()
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n) {
                return Err(Error::InvalidGraph(format!(
                    "row {i}: columns must be increasing and below {n}"
                )));
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::InvalidGraph(format!(
                    "row {i}: negative or non-finite weight"
                )));
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGraph(format!("row {i} sums to {sum}")));
            }
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Neighbor indices and weights of `cell`.
    pub fn row(&self, cell: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[cell]..self.row_ptr[cell + 1];
        (&self.cols[range.clone()], &self.weights[range])
    }

    pub fn neighbors(&self, cell: usize) -> &[usize] {
        self.row(cell).0
    }

    /// True when `cell` only points at itself (zero-norm fallback row).
    pub fn is_self_loop_row(&self, cell: usize) -> bool {
        self.neighbors(cell) == [cell]
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        let (cols, weights) = self.row(from);
        cols.binary_search(&to).map_or(0.0, |p| weights[p])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            let (cols, weights) = self.row(i);
            for (&j, &w) in cols.iter().zip(weights) {
                row[j] = w;
            }
        }
        dense
    }
}

/// Differences between two graphs over the same cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphChange {
    pub edges: usize,
    pub rows_changed: usize,
    /// Edges present in the second graph but not the first.
    pub edges_added: usize,
}

pub fn graph_change(before: &NeighborGraph, after: &NeighborGraph) -> GraphChange {
    assert_eq!(before.n(), after.n(), "graphs cover different cell counts");
    let mut change = GraphChange {
        edges: after.nnz(),
        ..Default::default()
    };
    for i in 0..before.n() {
        let old = before.neighbors(i);
        let new = after.neighbors(i);
        if before.row(i) != after.row(i) {
            change.rows_changed += 1;
        }
        change.edges_added += new.iter().filter(|j| old.binary_search(j).is_err()).count();
    }
    change
}

/// Row-normalizes a binary adjacency given as per-row neighbor lists.
/// Empty rows become a self-loop of weight 1.
///
/// Panics if a neighbor index is out of range.
pub fn row_normalize(adjacency: &[Vec<usize>]) -> NeighborGraph {
    let n = adjacency.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    let mut k = 1;
    row_ptr.push(0);
    for (i, row) in adjacency.iter().enumerate() {
        let mut row = row.clone();
        row.sort_unstable();
        row.dedup();
        assert!(
            row.iter().all(|&j| j < n),
            "row {i} references a cell outside 0..{n}"
        );
        if row.is_empty() {
            row.push(i);
        }
        let w = 1.0 / row.len() as f64;
        k = k.max(row.len());
        weights.extend(std::iter::repeat_n(w, row.len()));
        cols.extend(row);
        row_ptr.push(cols.len());
    }
    NeighborGraph {
        n,
        k,
        row_ptr,
        cols,
        weights,
    }
}

/// Directed cosine kNN graph over the rows of `x`.
///
/// Each cell links to the `k` other cells with the highest cosine
/// similarity (ties go to the lower index), each with weight `1/k`. When
/// `k >= N - 1` every other cell is a neighbor. A zero-norm cell has
/// similarity 0 to everything and gets a single self-loop.
pub fn cosine_knn(x: &ExpressionMatrix, k: usize) -> Result<NeighborGraph> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::TooFewCells(n));
    }
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    let k_eff = k.min(n - 1);
    let values = x.values();
    let norms: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let blocks: Vec<Vec<Vec<usize>>> = (0..n)
        .step_by(ROW_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let rows = ROW_BLOCK.min(n - start);
            let mut dots = vec![0.0f64; rows * n];
            // SAFETY: `values` holds n*m row-major entries; A is rows x m
            // starting at row `start`, B is the m x n transpose view of all
            // rows, C is a rows x n row-major buffer.
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    m,
                    n,
                    1.0,
                    values.as_ptr().add(start * m),
                    m as isize,
                    1,
                    values.as_ptr(),
                    1,
                    m as isize,
                    0.0,
                    dots.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
            let mut candidates = Vec::with_capacity(n);
            (0..rows)
                .map(|r| {
                    let i = start + r;
                    if norms[i] == 0.0 {
                        return vec![i];
                    }
                    candidates.clear();
                    candidates.extend((0..n).filter(|&j| j != i).map(|j| {
                        let sim = if norms[j] == 0.0 {
                            0.0
                        } else {
                            dots[r * n + j] / (norms[i] * norms[j])
                        };
                        (sim, j)
                    }));
                    top_k(&mut candidates, k_eff)
                })
                .collect()
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n * k_eff);
    let mut weights = Vec::with_capacity(n * k_eff);
    row_ptr.push(0);
    for row in blocks.into_iter().flatten() {
        let w = 1.0 / row.len() as f64;
        weights.extend(std::iter::repeat_n(w, row.len()));
        cols.extend(row);
        row_ptr.push(cols.len());
    }
    Ok(NeighborGraph {
        n,
        k: k_eff,
        row_ptr,
        cols,
        weights,
    })
}

/// Rebuilds the kNN graph from the warmed-up matrix.
pub fn refine_graph(warmed: &ExpressionMatrix, k: usize) -> Result<NeighborGraph> {
    cosine_knn(warmed, k)
}

fn by_similarity(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Indices of the `k` best candidates, returned in ascending index order.
fn top_k(candidates: &mut [(f64, usize)], k: usize) -> Vec<usize> {
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_similarity);
    }
    let mut picked: Vec<usize> = candidates[..k].iter().map(|c| c.1).collect();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> ExpressionMatrix {
        ExpressionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn neighbor_lists(g: &NeighborGraph) -> Vec<Vec<usize>> {
        (0..g.n()).map(|i| g.neighbors(i).to_vec()).collect()
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let g = cosine_knn(&m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]), 1).unwrap();
        assert_eq!(neighbor_lists(&g), vec![vec![2], vec![2], vec![0]]);
        assert_eq!(g.weight(2, 0), 1.0);
    }

    #[test]
    fn identical_rows_point_at_each_other() {
        let g = cosine_knn(&m(&[&[1.0, 1.0], &[1.0, 1.0]]), 1).unwrap();
        assert_eq!(neighbor_lists(&g), vec![vec![1], vec![0]]);
    }

    #[test]
    fn zero_norm_row_gets_self_loop() {
        let g = cosine_knn(&m(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]), 1).unwrap();
        // Rows 0 and 2 are orthogonal and row 1 has similarity 0 by
        // convention, so each picks the lowest-index zero-similarity cell.
        assert_eq!(neighbor_lists(&g), vec![vec![1], vec![1], vec![0]]);
        assert!(g.is_self_loop_row(1));
        assert_eq!(g.weight(1, 1), 1.0);
    }

    #[test]
    fn k_saturates_at_n_minus_one() {
        let g = cosine_knn(&m(&[&[1.0, 0.0], &[3.0, 1.0], &[0.0, 2.0]]), 10).unwrap();
        assert_eq!(g.k(), 2);
        for i in 0..3 {
            assert_eq!(g.neighbors(i).len(), 2);
            assert!(!g.neighbors(i).contains(&i));
            assert!(g.row(i).1.iter().all(|w| *w == 0.5));
        }
    }

    #[test]
    fn single_cell_is_rejected() {
        assert!(matches!(
            cosine_knn(&m(&[&[1.0, 2.0]]), 1),
            Err(Error::TooFewCells(1))
        ));
        assert!(cosine_knn(&m(&[&[1.0], &[2.0]]), 0).is_err());
    }

    #[test]
    fn refine_on_same_input_matches_initial() {
        let x = m(&[
            &[1.0, 0.0, 2.0],
            &[0.0, 1.0, 0.0],
            &[1.0, 1.0, 0.0],
            &[2.0, 0.0, 1.0],
        ]);
        assert_eq!(refine_graph(&x, 2).unwrap(), cosine_knn(&x, 2).unwrap());
    }

    #[test]
    fn refine_after_filling_a_dropout_changes_one_row() {
        // Cell 2 = [1, 0, 0] is closest to cell 0; once its dropout at gene 1
        // is filled it moves next to cell 1.
        let sparse = m(&[&[1.0, 0.0, 0.5], &[0.5, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        let warmed = m(&[&[1.0, 0.0, 0.5], &[0.5, 1.0, 0.0], &[1.0, 1.0, 0.0]]);
        let initial = cosine_knn(&sparse, 1).unwrap();
        let refined = refine_graph(&warmed, 1).unwrap();
        assert_eq!(initial.neighbors(2), &[0]);
        assert_eq!(refined.neighbors(2), &[1]);
        let change = graph_change(&initial, &refined);
        assert_eq!(change.rows_changed, 1);
        assert_eq!(change.edges_added, 1);
    }

    #[test]
    fn row_normalize_examples() {
        let g = row_normalize(&[vec![1], vec![0]]);
        assert_eq!(g.to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let g = row_normalize(&[vec![1, 2], vec![0], vec![0, 1]]);
        assert_eq!(
            g.to_dense(),
            vec![
                vec![0.0, 0.5, 0.5],
                vec![1.0, 0.0, 0.0],
                vec![0.5, 0.5, 0.0]
            ]
        );

        let g = row_normalize(&[vec![1], vec![], vec![1]]);
        assert_eq!(g.to_dense()[1], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn from_csr_checks_rows() {
        assert!(NeighborGraph::from_csr(2, 1, vec![0, 1, 2], vec![1, 0], vec![1.0, 1.0]).is_ok());
        assert!(NeighborGraph::from_csr(2, 1, vec![0, 1, 2], vec![1, 0], vec![0.5, 1.0]).is_err());
        assert!(NeighborGraph::from_csr(2, 1, vec![0, 1, 2], vec![2, 0], vec![1.0, 1.0]).is_err());
        assert!(NeighborGraph::from_csr(2, 1, vec![0, 2, 2], vec![0, 1], vec![0.5, 0.5]).is_err());
    }
}
