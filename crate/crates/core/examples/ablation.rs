//! Runs every pipeline variant on one simulated dataset and compares
//! held-out error and clustering agreement.
//!
//! Run: `cargo run --release --example ablation -- [seed]`

use scfp::evaluation::{apply_dropout, evaluate_clustering, masked_rmse};
use scfp::{preprocess, run_scfp, simulate, Mode, PreprocessOptions, ScfpConfig, SimulationSpec};

fn main() -> scfp::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let data = simulate(&SimulationSpec {
        dropout_rate: 0.8,
        de_strength: 3.0,
        seed,
        ..SimulationSpec::default()
    })?;
    let experiment = apply_dropout(&data.observed, 0.2, seed)?;
    let prepared = preprocess(&data.observed, &PreprocessOptions::standard())?;
    let groups = 3;

    println!("mode\trmse_masked\tari");
    let raw_ari = evaluate_clustering(&prepared, &data.labels, groups, seed)?.ari;
    println!(
        "raw\t{:.4}\t{raw_ari:.4}",
        masked_rmse(&experiment.corrupted, &experiment.held_out)?
    );
    for mode in Mode::ALL {
        let config = ScfpConfig {
            seed,
            ..ScfpConfig::default()
        }
        .with_mode(mode);
        let rmse = masked_rmse(
            &run_scfp(&experiment.corrupted, &config)?.denoised,
            &experiment.held_out,
        )?;
        let ari = evaluate_clustering(
            &run_scfp(&prepared, &config)?.denoised,
            &data.labels,
            groups,
            seed,
        )?
        .ari;
        println!("{mode}\t{rmse:.4}\t{ari:.4}");
    }
    Ok(())
}
