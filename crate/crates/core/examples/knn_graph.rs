//! Builds the cosine kNN cell graph and shows how refinement on a filled-in
//! matrix rewires a neighborhood.
//!
//! Run: `cargo run --example knn_graph`

use scfp::{cosine_knn, graph_change, refine_graph, ExpressionMatrix};

fn main() -> scfp::Result<()> {
    let sparse = ExpressionMatrix::from_rows(&[
        vec![1.0, 0.0, 0.5],
        vec![0.5, 1.0, 0.0],
        vec![1.0, 0.0, 0.0],
    ])?;
    let initial = cosine_knn(&sparse, 1)?;
    for i in 0..initial.n() {
        let (cols, weights) = initial.row(i);
        println!("cell{i} -> {cols:?} weights {weights:?}");
    }

    // a filled-in value for cell2 makes it look like cell1 instead of cell0
    let warmed = ExpressionMatrix::from_rows(&[
        vec![1.0, 0.0, 0.5],
        vec![0.5, 1.0, 0.0],
        vec![1.0, 1.0, 0.0],
    ])?;
    let refined = refine_graph(&warmed, 1)?;
    let change = graph_change(&initial, &refined);
    println!(
        "refined: cell2 -> {:?}; {} row(s) changed, {} edge(s) added",
        refined.neighbors(2),
        change.rows_changed,
        change.edges_added
    );
    Ok(())
}
