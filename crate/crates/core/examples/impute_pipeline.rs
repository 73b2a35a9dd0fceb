//! Full pipeline on a matrix file (or a simulated one), writing the
//! denoised matrix and printing the run report.
//!
//! Run: `cargo run --release --example impute_pipeline -- [input.mtx|csv] [output.mtx|csv]`

use std::path::PathBuf;
use std::time::Instant;

use scfp::io::{read_matrix, write_matrix, MatrixFormat, Orientation};
use scfp::{report, run_scfp, simulate, ScfpConfig, SimulationSpec};

fn main() -> scfp::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next().map(PathBuf::from);
    let output = PathBuf::from(args.next().unwrap_or_else(|| "denoised.mtx".into()));

    let x = match &input {
        Some(path) => read_matrix(path, Orientation::CellsAsRows)?,
        None => {
            simulate(&SimulationSpec {
                n_cells: 300,
                n_genes: 1000,
                ..SimulationSpec::default()
            })?
            .observed
        }
    };
    let start = Instant::now();
    let result = run_scfp(&x, &ScfpConfig::default())?;
    let wall = start.elapsed().as_secs_f64();

    write_matrix(&result.denoised, &output, MatrixFormat::from_path(&output)?)?;
    let source = input.map_or_else(|| "simulated".to_string(), |p| p.display().to_string());
    print!("{}", report::format_run(&source, &result, wall));
    println!("wrote {}", output.display());
    Ok(())
}
