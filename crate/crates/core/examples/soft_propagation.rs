//! Soft propagation smooths every entry toward its neighborhood while an
//! anchor term keeps it close to the starting values.
//!
//! Run: `cargo run --example soft_propagation -- [alpha]`

use scfp::propagation::{soft_feature_propagation, soft_fixed_point_oracle};
use scfp::{row_normalize, ExpressionMatrix};

fn main() -> scfp::Result<()> {
    let alpha: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.99);
    let graph = row_normalize(&[vec![1, 2], vec![0, 2], vec![0, 1], vec![2]]);
    let anchor = ExpressionMatrix::from_rows(&[
        vec![4.0, 0.0],
        vec![5.0, 1.0],
        vec![3.0, 0.0],
        vec![0.0, 8.0],
    ])?;
    let exact = soft_fixed_point_oracle(&anchor, &graph, alpha)?;
    for iterations in [1, 10, 40, 1000] {
        let (out, _) = soft_feature_propagation(&anchor, &graph, alpha, iterations, 0.0)?;
        let gap = out
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "alpha {alpha}, {iterations:>4} iterations: max distance to fixed point {gap:.3e}"
        );
    }
    for i in 0..exact.n_cells() {
        println!(
            "cell{i}: anchor {:?} -> fixed point {:.4?}",
            anchor.row(i),
            exact.row(i)
        );
    }
    Ok(())
}
