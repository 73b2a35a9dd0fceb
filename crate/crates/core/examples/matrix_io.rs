//! Writes a matrix as MatrixMarket and CSV, reads both back, and joins a
//! two-column label file to the cell order.
//!
//! Run: `cargo run --example matrix_io`

use scfp::io::{read_labels, read_matrix, write_matrix, MatrixFormat, Orientation};
use scfp::ExpressionMatrix;

fn main() -> scfp::Result<()> {
    let dir = std::env::temp_dir().join(format!("scfp-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| scfp::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let x = ExpressionMatrix::with_ids(
        2,
        3,
        vec![0.1, 0.0, 3.0, 0.0, 2.5, 0.0],
        vec!["AAAC".into(), "TTGC".into()],
        vec!["Actb".into(), "Gapdh".into(), "Cd3e".into()],
    )?;
    for (name, format) in [("x.mtx", MatrixFormat::Mtx), ("x.csv", MatrixFormat::Csv)] {
        let path = dir.join(name);
        write_matrix(&x, &path, format)?;
        let back = read_matrix(&path, Orientation::CellsAsRows)?;
        println!("{name}: round trip exact = {}", back.values() == x.values());
        print!("{}", std::fs::read_to_string(&path).unwrap_or_default());
    }

    let labels = dir.join("labels.csv");
    std::fs::write(&labels, "cell_id,label\nTTGC,T cell\nAAAC,B cell\n").ok();
    println!(
        "labels in cell order: {:?}",
        read_labels(&labels, Some(x.cell_ids()))?
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
