//! PCA + k-means clustering scored by ARI, NMI and Hungarian-matched
//! accuracy, before and after imputation.
//!
//! Run: `cargo run --release --example clustering_eval`

use scfp::evaluation::{evaluate_clustering, hungarian_assign};
use scfp::{preprocess, run_scfp, simulate, PreprocessOptions, ScfpConfig, SimulationSpec};

fn main() -> scfp::Result<()> {
    let a = hungarian_assign(&[
        vec![4.0, 1.0, 3.0],
        vec![2.0, 0.0, 5.0],
        vec![3.0, 2.0, 2.0],
    ])?;
    println!("assignment {:?} with cost {}", a.pairs, a.cost);

    let spec = SimulationSpec {
        n_cells: 400,
        n_genes: 1500,
        n_groups: 4,
        de_strength: 2.5,
        dropout_rate: 0.85,
        seed: 3,
        ..SimulationSpec::default()
    };
    let data = simulate(&spec)?;
    let prepared = preprocess(&data.observed, &PreprocessOptions::standard())?;
    let imputed = run_scfp(&prepared, &ScfpConfig::default())?.denoised;
    for (name, x) in [("raw", &prepared), ("scfp", &imputed)] {
        let s = evaluate_clustering(x, &data.labels, spec.n_groups, 0)?;
        println!(
            "{name}: ARI {:.4}  NMI {:.4}  CA {:.4}  inertia {:.2}",
            s.ari, s.nmi, s.ca, s.clustering.inertia
        );
    }
    Ok(())
}
