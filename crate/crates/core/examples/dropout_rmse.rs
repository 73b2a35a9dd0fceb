//! Masking protocol: hide a share of observed counts, impute, and score
//! recovery of the hidden values at several masking rates.
//!
//! Run: `cargo run --release --example dropout_rmse`

use scfp::evaluation::{apply_dropout, masked_rmse};
use scfp::{run_scfp, simulate, ScfpConfig, SimulationSpec};

fn main() -> scfp::Result<()> {
    let data = simulate(&SimulationSpec {
        n_cells: 400,
        n_genes: 1000,
        dropout_rate: 0.3,
        seed: 1,
        ..SimulationSpec::default()
    })?;
    println!("rate\theld_out\tzeros_rmse\tscfp_rmse");
    for rate in [0.2, 0.4, 0.8] {
        let e = apply_dropout(&data.observed, rate, 7)?;
        let imputed = run_scfp(&e.corrupted, &ScfpConfig::default())?.denoised;
        println!(
            "{rate}\t{}\t{:.4}\t{:.4}",
            e.held_out.len(),
            masked_rmse(&e.corrupted, &e.held_out)?,
            masked_rmse(&imputed, &e.held_out)?
        );
    }
    Ok(())
}
