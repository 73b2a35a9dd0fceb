//! Feature propagation over a row-stochastic cell graph.
//!
//! Both propagation modes run one sparse-times-dense product per iteration
//! over all genes at once. Each output entry is a fixed-order dot product
//! over one adjacency row, so results are bitwise identical for any thread
//! count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::model::{check_alpha, ExpressionMatrix, KnownMask};

/// Largest system solved densely by the exact oracles.
pub const DENSE_SOLVE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropagationTrace {
    pub iterations_run: usize,
    /// Frobenius norm of the change made by each iteration.
    pub residual_history: Vec<f64>,
    /// Whether the last residual fell to the tolerance or below.
    pub converged: bool,
}

impl PropagationTrace {
    pub fn final_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }
}

fn check_graph(x: &ExpressionMatrix, graph: &NeighborGraph) -> Result<()> {
    if graph.n() != x.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes but the matrix has {} cells",
            graph.n(),
            x.n_cells()
        )));
    }
    Ok(())
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance >= 0.0 && tolerance.is_finite() {
        Ok(())
    } else {
        Err(Error::param("tolerance", "must be finite and nonnegative"))
    }
}

/// Writes `graph * src` into `dst` (both row-major with `m` columns).
pub fn spmm(graph: &NeighborGraph, src: &[f64], dst: &mut [f64], m: usize) {
    dst.par_chunks_mut(m).enumerate().for_each(|(i, out)| {
        accumulate_row(graph, src, out, i, m);
    });
}

#[inline]
fn accumulate_row(graph: &NeighborGraph, src: &[f64], out: &mut [f64], i: usize, m: usize) {
    out.fill(0.0);
    let (cols, weights) = graph.row(i);
    for (&j, &w) in cols.iter().zip(weights) {
        let row = &src[j * m..(j + 1) * m];
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
}

fn sum_squares_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Shared iteration driver: `step` fills `next` from `current` and returns
/// per-row squared residuals; the loop stops after `iterations` steps or
/// once the residual reaches `tolerance` (when positive).
fn iterate<S, F>(
    start: Vec<f64>,
    iterations: usize,
    tolerance: f64,
    step: S,
    mut observe: F,
) -> (Vec<f64>, PropagationTrace)
where
    S: Fn(&[f64], &mut [f64]) -> Vec<f64>,
    F: FnMut(usize, &[f64]),
{
    let mut current = start;
    let mut next = vec![0.0; current.len()];
    let mut trace = PropagationTrace::default();
    for it in 0..iterations {
        let row_residuals = step(&current, &mut next);
        let residual = row_residuals.iter().sum::<f64>().sqrt();
        std::mem::swap(&mut current, &mut next);
        debug_assert!(
            current.iter().all(|v| *v >= 0.0),
            "propagation produced a negative value"
        );
        trace.iterations_run += 1;
        trace.residual_history.push(residual);
        observe(it + 1, &current);
        if tolerance > 0.0 && residual <= tolerance {
            break;
        }
    }
    trace.converged = trace.final_residual().is_some_and(|r| r <= tolerance);
    (current, trace)
}

/// Diffuses observed values into unknown entries while resetting every known
/// entry to its original value after each step.
pub fn hard_feature_propagation(
    x0: &ExpressionMatrix,
    mask: &KnownMask,
    graph: &NeighborGraph,
    iterations: usize,
    tolerance: f64,
) -> Result<(ExpressionMatrix, PropagationTrace)> {
    hard_feature_propagation_observed(x0, mask, graph, iterations, tolerance, |_, _| {})
}

/// [`hard_feature_propagation`] that hands each clamped iterate to
/// `observe(t, values)`, with `t` counting from 1.
pub fn hard_feature_propagation_observed<F>(
    x0: &ExpressionMatrix,
    mask: &KnownMask,
    graph: &NeighborGraph,
    iterations: usize,
    tolerance: f64,
    observe: F,
) -> Result<(ExpressionMatrix, PropagationTrace)>
where
    F: FnMut(usize, &[f64]),
{
    check_graph(x0, graph)?;
    if mask.shape() != x0.shape() {
        return Err(Error::DimensionMismatch(format!(
            "mask is {:?} but the matrix is {:?}",
            mask.shape(),
            x0.shape()
        )));
    }
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    check_tolerance(tolerance)?;

    let m = x0.n_genes();
    let original = x0.values();
    let known = mask.as_slice();
    let step = |current: &[f64], next: &mut [f64]| -> Vec<f64> {
        next.par_chunks_mut(m)
            .enumerate()
            .map(|(i, out)| {
                accumulate_row(graph, current, out, i, m);
                let span = i * m..(i + 1) * m;
                for ((o, &k), &v) in out
                    .iter_mut()
                    .zip(&known[span.clone()])
                    .zip(&original[span.clone()])
                {
                    if k {
                        *o = v;
                    }
                }
                sum_squares_diff(out, &current[span])
            })
            .collect()
    };
    let (values, trace) = iterate(original.to_vec(), iterations, tolerance, step, observe);
    Ok((x0.derived(values), trace))
}

/// Anchored diffusion: `X <- alpha * A X + (1 - alpha) * anchor`, starting
/// from the anchor. The anchor stays fixed for every iteration.
pub fn soft_feature_propagation(
    anchor: &ExpressionMatrix,
    graph: &NeighborGraph,
    alpha: f64,
    iterations: usize,
    tolerance: f64,
) -> Result<(ExpressionMatrix, PropagationTrace)> {
    soft_feature_propagation_observed(anchor, graph, alpha, iterations, tolerance, |_, _| {})
}

/// [`soft_feature_propagation`] that hands each iterate to
/// `observe(t, values)`, with `t` counting from 1.
pub fn soft_feature_propagation_observed<F>(
    anchor: &ExpressionMatrix,
    graph: &NeighborGraph,
    alpha: f64,
    iterations: usize,
    tolerance: f64,
    observe: F,
) -> Result<(ExpressionMatrix, PropagationTrace)>
where
    F: FnMut(usize, &[f64]),
{
    check_alpha(alpha)?;
    check_graph(anchor, graph)?;
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    check_tolerance(tolerance)?;

    let m = anchor.n_genes();
    let fixed = anchor.values();
    let keep = 1.0 - alpha;
    let step = |current: &[f64], next: &mut [f64]| -> Vec<f64> {
        next.par_chunks_mut(m)
            .enumerate()
            .map(|(i, out)| {
                accumulate_row(graph, current, out, i, m);
                let span = i * m..(i + 1) * m;
                for (o, &a) in out.iter_mut().zip(&fixed[span.clone()]) {
                    *o = alpha * *o + keep * a;
                }
                sum_squares_diff(out, &current[span])
            })
            .collect()
    };
    let (values, trace) = iterate(fixed.to_vec(), iterations, tolerance, step, observe);
    Ok((anchor.derived(values), trace))
}

/// `graph^steps * x0` with no clamping and no anchor.
pub fn full_diffusion(
    x0: &ExpressionMatrix,
    graph: &NeighborGraph,
    steps: usize,
) -> Result<ExpressionMatrix> {
    check_graph(x0, graph)?;
    if steps == 0 {
        return Err(Error::param("steps", "must be at least 1"));
    }
    let m = x0.n_genes();
    let mut current = x0.values().to_vec();
    let mut next = vec![0.0; current.len()];
    for _ in 0..steps {
        spmm(graph, &current, &mut next, m);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(x0.derived(current))
}

/// Cells in `unknown` with no directed path to any cell outside it.
fn stranded_cells(graph: &NeighborGraph, unknown: &[bool]) -> Vec<usize> {
    let n = graph.n();
    let mut predecessors = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, weights) = graph.row(i);
        for (&j, &w) in cols.iter().zip(weights) {
            if w > 0.0 && j != i {
                predecessors[j].push(i);
            }
        }
    }
    let mut reaches = unknown.iter().map(|u| !u).collect::<Vec<_>>();
    let mut stack: Vec<usize> = (0..n).filter(|&i| reaches[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &predecessors[j] {
            if !reaches[i] {
                reaches[i] = true;
                stack.push(i);
            }
        }
    }
    (0..n).filter(|&i| !reaches[i]).collect()
}

/// Exact fixed point of hard propagation for one gene column:
/// `x_u = (I - A_uu)^-1 A_uk x_k`, known entries unchanged.
pub fn closed_form_solution(
    x0: &ExpressionMatrix,
    mask: &KnownMask,
    graph: &NeighborGraph,
    gene_index: usize,
) -> Result<Vec<f64>> {
    check_graph(x0, graph)?;
    if mask.shape() != x0.shape() {
        return Err(Error::DimensionMismatch(
            "mask and matrix shapes differ".into(),
        ));
    }
    if gene_index >= x0.n_genes() {
        return Err(Error::param(
            "gene_index",
            format!("{gene_index} out of range for {} genes", x0.n_genes()),
        ));
    }
    let n = x0.n_cells();
    let mut column = x0.column(gene_index);
    let unknown: Vec<bool> = (0..n).map(|i| !mask.is_known(i, gene_index)).collect();
    let unknown_idx: Vec<usize> = (0..n).filter(|&i| unknown[i]).collect();
    if unknown_idx.is_empty() {
        return Ok(column);
    }
    if unknown_idx.len() > DENSE_SOLVE_CAP {
        return Err(Error::SizeCap {
            size: unknown_idx.len(),
            cap: DENSE_SOLVE_CAP,
        });
    }
    let stranded = stranded_cells(graph, &unknown);
    if !stranded.is_empty() {
        return Err(Error::Singular { cells: stranded });
    }

    let mut position = vec![usize::MAX; n];
    for (p, &i) in unknown_idx.iter().enumerate() {
        position[i] = p;
    }
    let size = unknown_idx.len();
    let mut system = DMatrix::<f64>::identity(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for (p, &i) in unknown_idx.iter().enumerate() {
        let (cols, weights) = graph.row(i);
        for (&j, &w) in cols.iter().zip(weights) {
            if unknown[j] {
                system[(p, position[j])] -= w;
            } else {
                rhs[p] += w * column[j];
            }
        }
    }
    let solution = system.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        cells: unknown_idx.clone(),
    })?;
    for (p, &i) in unknown_idx.iter().enumerate() {
        column[i] = solution[p];
    }
    Ok(column)
}

/// Solves `(I - alpha A) X = (1 - alpha) anchor` exactly.
pub fn soft_fixed_point_oracle(
    anchor: &ExpressionMatrix,
    graph: &NeighborGraph,
    alpha: f64,
) -> Result<ExpressionMatrix> {
    check_alpha(alpha)?;
    check_graph(anchor, graph)?;
    let (n, m) = anchor.shape();
    if n > DENSE_SOLVE_CAP {
        return Err(Error::SizeCap {
            size: n,
            cap: DENSE_SOLVE_CAP,
        });
    }
    let mut system = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        let (cols, weights) = graph.row(i);
        for (&j, &w) in cols.iter().zip(weights) {
            system[(i, j)] -= alpha * w;
        }
    }
    let rhs = DMatrix::from_row_slice(n, m, anchor.values()) * (1.0 - alpha);
    let lu = system.lu();
    let solution = lu
        .solve(&rhs)
        .ok_or(Error::Singular { cells: Vec::new() })?;
    let mut values = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            // exact solution is nonnegative; clip rounding noise
            values[i * m + j] = solution[(i, j)].max(0.0);
        }
    }
    Ok(anchor.derived(values))
}

/// `0.5 * x^T (I - A) x` for one gene column. Signed: with a directed
/// graph the form need not be nonnegative.
pub fn dirichlet_energy(
    x: &ExpressionMatrix,
    graph: &NeighborGraph,
    gene_index: usize,
) -> Result<f64> {
    check_graph(x, graph)?;
    if gene_index >= x.n_genes() {
        return Err(Error::param(
            "gene_index",
            format!("{gene_index} out of range for {} genes", x.n_genes()),
        ));
    }
    let column = x.column(gene_index);
    Ok(column_energy(graph, &column))
}

pub(crate) fn column_energy(graph: &NeighborGraph, column: &[f64]) -> f64 {
    let mut energy = 0.0;
    for (i, &xi) in column.iter().enumerate() {
        let (cols, weights) = graph.row(i);
        let smoothed: f64 = cols.iter().zip(weights).map(|(&j, &w)| w * column[j]).sum();
        energy += xi * (xi - smoothed);
    }
    0.5 * energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::row_normalize;
    use crate::model::derive_known_mask;

    fn m(rows: &[&[f64]]) -> ExpressionMatrix {
        ExpressionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn path3() -> NeighborGraph {
        row_normalize(&[vec![1], vec![0, 2], vec![1]])
    }

    fn swap2() -> NeighborGraph {
        row_normalize(&[vec![1], vec![0]])
    }

    #[test]
    fn hard_fills_path_midpoint() {
        let x = m(&[&[1.0], &[0.0], &[3.0]]);
        let mask = derive_known_mask(&x);
        let (out, trace) = hard_feature_propagation(&x, &mask, &path3(), 40, 0.0).unwrap();
        assert_eq!(out.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(trace.iterations_run, 40);
        assert_eq!(trace.residual_history.len(), 40);

        let exact = closed_form_solution(&x, &mask, &path3(), 0).unwrap();
        assert_eq!(exact, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn hard_early_stop() {
        let x = m(&[&[1.0], &[0.0], &[3.0]]);
        let mask = derive_known_mask(&x);
        let (_, trace) = hard_feature_propagation(&x, &mask, &path3(), 100, 1e-9).unwrap();
        // first step fills the midpoint, the second changes nothing
        assert_eq!(trace.iterations_run, 2);
        assert!(trace.converged);
    }

    #[test]
    fn hard_fully_known_is_identity() {
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let mask = derive_known_mask(&x);
        let (out, _) = hard_feature_propagation(&x, &mask, &path3(), 7, 0.0).unwrap();
        assert_eq!(out, x);
        assert_eq!(
            closed_form_solution(&x, &mask, &path3(), 1).unwrap(),
            x.column(1)
        );
    }

    #[test]
    fn hard_zero_column_stays_zero() {
        let x = m(&[&[1.0, 0.0], &[0.0, 0.0], &[3.0, 0.0]]);
        let mask = derive_known_mask(&x);
        let (out, _) = hard_feature_propagation(&x, &mask, &path3(), 40, 0.0).unwrap();
        assert_eq!(out.column(1), vec![0.0; 3]);
    }

    #[test]
    fn hard_checks_dimensions() {
        let x = m(&[&[1.0], &[0.0]]);
        let mask = derive_known_mask(&x);
        assert!(matches!(
            hard_feature_propagation(&x, &mask, &path3(), 1, 0.0),
            Err(Error::DimensionMismatch(_))
        ));
        let other = derive_known_mask(&m(&[&[1.0, 1.0], &[0.0, 0.0]]));
        assert!(hard_feature_propagation(&x, &other, &swap2(), 1, 0.0).is_err());
        assert!(hard_feature_propagation(&x, &mask, &swap2(), 0, 0.0).is_err());
    }

    #[test]
    fn closed_form_flags_stranded_cells() {
        // cell 1 only points at itself and is unknown
        let graph = row_normalize(&[vec![2], vec![], vec![0]]);
        let x = m(&[&[1.0], &[0.0], &[2.0]]);
        let err = closed_form_solution(&x, &derive_known_mask(&x), &graph, 0).unwrap_err();
        assert!(matches!(err, Error::Singular { ref cells } if cells == &[1]));
        assert!(closed_form_solution(&x, &derive_known_mask(&x), &graph, 3).is_err());
    }

    #[test]
    fn soft_two_cell_fixed_point() {
        let anchor = m(&[&[0.0], &[1.0]]);
        let exact = soft_fixed_point_oracle(&anchor, &swap2(), 0.99).unwrap();
        let expected = [0.99 / 1.99, 1.0 / 1.99];
        for (a, b) in exact.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        let (iterated, _) = soft_feature_propagation(&anchor, &swap2(), 0.99, 5000, 0.0).unwrap();
        for (a, b) in iterated.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn soft_constant_rows_stay_constant() {
        let anchor = m(&[&[2.5, 1.0], &[2.5, 1.0], &[2.5, 1.0]]);
        for alpha in [0.1, 0.5, 0.99] {
            let (out, _) = soft_feature_propagation(&anchor, &path3(), alpha, 25, 0.0).unwrap();
            for (a, b) in out.values().iter().zip(anchor.values()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn soft_on_identity_graph_returns_anchor() {
        let identity = row_normalize(&[vec![0], vec![1]]);
        let anchor = m(&[&[0.3, 0.0], &[1.0, 7.0]]);
        let (out, _) = soft_feature_propagation(&anchor, &identity, 0.99, 1, 0.0).unwrap();
        for (a, b) in out.values().iter().zip(anchor.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let exact = soft_fixed_point_oracle(&anchor, &identity, 0.99).unwrap();
        for (a, b) in exact.values().iter().zip(anchor.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn soft_oracle_of_zero_anchor_is_zero() {
        let anchor = m(&[&[0.0], &[0.0], &[0.0]]);
        let exact = soft_fixed_point_oracle(&anchor, &path3(), 0.5).unwrap();
        assert_eq!(exact.values(), &[0.0; 3]);
    }

    #[test]
    fn soft_rejects_bad_alpha() {
        let anchor = m(&[&[0.0], &[1.0]]);
        for alpha in [0.0, 1.0, 1.5] {
            assert!(soft_feature_propagation(&anchor, &swap2(), alpha, 1, 0.0).is_err());
        }
    }

    #[test]
    fn dirichlet_examples() {
        let x = m(&[&[1.0, 4.0], &[0.0, 4.0]]);
        assert_eq!(dirichlet_energy(&x, &swap2(), 0).unwrap(), 0.5);
        assert_eq!(dirichlet_energy(&x, &swap2(), 1).unwrap(), 0.0);
        let ones = m(&[&[1.0], &[1.0], &[1.0]]);
        let lopsided = row_normalize(&[vec![1, 2], vec![2], vec![0, 1]]);
        assert_eq!(dirichlet_energy(&ones, &lopsided, 0).unwrap(), 0.0);
        assert!(dirichlet_energy(&ones, &lopsided, 1).is_err());
    }

    #[test]
    fn full_diffusion_examples() {
        let identity = row_normalize(&[vec![0], vec![1]]);
        let x = m(&[&[0.0], &[2.0]]);
        assert_eq!(full_diffusion(&x, &identity, 1).unwrap(), x);
        assert_eq!(full_diffusion(&x, &swap2(), 2).unwrap(), x);
        assert_eq!(
            full_diffusion(&x, &swap2(), 1).unwrap().values(),
            &[2.0, 0.0]
        );
        assert!(full_diffusion(&x, &swap2(), 0).is_err());
    }

    #[test]
    fn full_diffusion_reaches_consensus() {
        // triangle with a self-loop on one node: strongly connected, aperiodic
        let graph = row_normalize(&[vec![0, 1], vec![2], vec![0, 1]]);
        let x = m(&[&[1.0, 0.0], &[0.0, 5.0], &[3.0, 1.0]]);
        let out = full_diffusion(&x, &graph, 200).unwrap();
        for j in 0..2 {
            let col = out.column(j);
            assert!(col.iter().all(|v| (v - col[0]).abs() < 1e-6), "{col:?}");
        }
        // power-iteration check: the consensus is the stationary average
        let pi = stationary(&graph.to_dense());
        let expected: f64 = (0..3).map(|i| pi[i] * x.get(i, 0)).sum();
        assert!((out.get(0, 0) - expected).abs() < 1e-6);
    }

    fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
        let n = p.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[j] += pi[i] * p[i][j];
                }
            }
            pi = next;
        }
        pi
    }
}
