//! Hard propagation fills unknown entries while observed entries stay
//! clamped, and converges to the exact harmonic solution.
//!
//! Run: `cargo run --example hard_propagation`

use scfp::propagation::{closed_form_solution, hard_feature_propagation_observed};
use scfp::{derive_known_mask, row_normalize, ExpressionMatrix};

fn main() -> scfp::Result<()> {
    // a 5-cell chain; the middle cells have not been observed
    let graph = row_normalize(&[vec![1], vec![0, 2], vec![1, 3], vec![2, 4], vec![3]]);
    let x = ExpressionMatrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0], vec![0.0], vec![9.0]])?;
    let mask = derive_known_mask(&x);

    let (out, trace) = hard_feature_propagation_observed(&x, &mask, &graph, 500, 1e-12, |t, v| {
        if t <= 3 {
            println!("iteration {t}: {v:?}");
        }
    })?;
    println!(
        "stopped after {} iterations (converged: {}), final residual {:.2e}",
        trace.iterations_run,
        trace.converged,
        trace.final_residual().unwrap_or(0.0)
    );
    println!("iterative:   {:?}", out.column(0));
    println!(
        "closed form: {:?}",
        closed_form_solution(&x, &mask, &graph, 0)?
    );
    Ok(())
}
