//! Plain-text matrix and label I/O: MatrixMarket coordinate files and
//! headed CSV tables.
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! `read(write(x)) == x` exactly.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{default_ids, ExpressionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    CellsAsRows,
    GenesAsRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Mtx,
    Csv,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("mtx") => Ok(MatrixFormat::Mtx),
            Some("csv") => Ok(MatrixFormat::Csv),
            _ => Err(Error::param(
                "path",
                format!(
                    "cannot infer format of {} (expected .mtx or .csv)",
                    path.display()
                ),
            )),
        }
    }
}

/// A matrix together with optional per-cell labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub matrix: ExpressionMatrix,
    pub labels: Option<Vec<String>>,
    pub source_path: PathBuf,
}

pub fn load_dataset(
    path: &Path,
    orientation: Orientation,
    labels: Option<&Path>,
) -> Result<DatasetBundle> {
    let matrix = read_matrix(path, orientation)?;
    let labels = labels
        .map(|p| read_labels(p, Some(matrix.cell_ids())))
        .transpose()?;
    if let Some(l) = &labels {
        if l.len() != matrix.n_cells() {
            return Err(Error::Labels(format!(
                "{} labels for {} cells",
                l.len(),
                matrix.n_cells()
            )));
        }
    }
    Ok(DatasetBundle {
        matrix,
        labels,
        source_path: path.to_path_buf(),
    })
}

/// Reads a matrix, picking the format from the file extension.
pub fn read_matrix(path: &Path, orientation: Orientation) -> Result<ExpressionMatrix> {
    let matrix = match MatrixFormat::from_path(path)? {
        MatrixFormat::Mtx => read_matrix_market(path)?,
        MatrixFormat::Csv => return read_csv_matrix(path, orientation),
    };
    Ok(match orientation {
        Orientation::CellsAsRows => matrix,
        Orientation::GenesAsRows => matrix.transpose(),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_value(path: &Path, line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{token}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value `{token}`")));
    }
    if v < 0.0 {
        return Err(parse_err(path, line, format!("negative value {v}")));
    }
    Ok(v)
}

/// Parses `%%MatrixMarket matrix coordinate real|integer general` with
/// 1-based indices. Duplicate coordinates are summed.
pub fn read_matrix_market(path: &Path) -> Result<ExpressionMatrix> {
    let reader = open(path)?;
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    let supported = fields.len() == 5
        && fields[0] == "%%matrixmarket"
        && fields[1] == "matrix"
        && fields[2] == "coordinate"
        && (fields[3] == "real" || fields[3] == "integer")
        && fields[4] == "general";
    if !supported {
        return Err(parse_err(
            path,
            1,
            format!("unsupported header `{header}`; expected coordinate real|integer general"),
        ));
    }

    let mut dims = None;
    let mut values = Vec::new();
    let mut seen = 0usize;
    for (no, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                if tokens.len() != 3 {
                    return Err(parse_err(path, no, "size line must be `rows cols entries`"));
                }
                let parse = |t: &str| {
                    t.parse::<usize>()
                        .map_err(|_| parse_err(path, no, format!("bad size `{t}`")))
                };
                let (r, c, nnz) = (parse(tokens[0])?, parse(tokens[1])?, parse(tokens[2])?);
                values = vec![0.0; r * c];
                dims = Some((r, c, nnz));
            }
            Some((r, c, _)) => {
                if tokens.len() != 3 {
                    return Err(parse_err(path, no, "entry must be `row col value`"));
                }
                let index = |t: &str, bound: usize| -> Result<usize> {
                    match t.parse::<usize>() {
                        Ok(i) if i >= 1 && i <= bound => Ok(i - 1),
                        _ => Err(parse_err(
                            path,
                            no,
                            format!("index `{t}` outside 1..={bound}"),
                        )),
                    }
                };
                let (i, j) = (index(tokens[0], r)?, index(tokens[1], c)?);
                values[i * c + j] += parse_value(path, no, tokens[2])?;
                seen += 1;
            }
        }
    }
    let (r, c, nnz) = dims.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            path,
            0,
            format!("size line declares {nnz} entries but {seen} were found"),
        ));
    }
    ExpressionMatrix::new(r, c, values)
}

/// Reads a table whose first row holds column ids and first column holds
/// row ids. With [`Orientation::GenesAsRows`] the table is transposed so
/// cells end up as rows.
pub fn read_csv_matrix(path: &Path, orientation: Orientation) -> Result<ExpressionMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open(path)?);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_err(path, 1, e.to_string()))?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let col_ids: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let width = header.len();
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in records.enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(parse_err(
                path,
                line,
                format!("row {line} has {} fields, expected {width}", record.len()),
            ));
        }
        row_ids.push(record[0].trim().to_string());
        for (col, field) in record.iter().enumerate().skip(1) {
            let v = parse_value(path, line, field.trim()).map_err(|e| match e {
                Error::Parse {
                    path,
                    line,
                    message,
                } => Error::Parse {
                    path,
                    line,
                    message: format!("column {}: {message}", col + 1),
                },
                other => other,
            })?;
            values.push(v);
        }
    }
    let matrix =
        ExpressionMatrix::with_ids(row_ids.len(), col_ids.len(), values, row_ids, col_ids)?;
    Ok(match orientation {
        Orientation::CellsAsRows => matrix,
        Orientation::GenesAsRows => matrix.transpose(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_matrix(matrix: &ExpressionMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let mut out = create(path)?;
    let (n, m) = matrix.shape();
    let result = (|| -> std::io::Result<()> {
        match format {
            MatrixFormat::Mtx => {
                writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
                writeln!(out, "{n} {m} {}", matrix.nnz())?;
                for i in 0..n {
                    for (j, &v) in matrix.row(i).iter().enumerate() {
                        if v != 0.0 {
                            writeln!(out, "{} {} {v:?}", i + 1, j + 1)?;
                        }
                    }
                }
            }
            MatrixFormat::Csv => {
                let mut writer = csv::Writer::from_writer(&mut out);
                let header =
                    std::iter::once("cell").chain(matrix.gene_ids().iter().map(String::as_str));
                writer.write_record(header)?;
                let mut record = Vec::with_capacity(m + 1);
                for i in 0..n {
                    record.clear();
                    record.push(matrix.cell_ids()[i].clone());
                    record.extend(matrix.row(i).iter().map(|v| format!("{v:?}")));
                    writer.write_record(&record)?;
                }
                writer.flush()?;
            }
        }
        out.flush()
    })();
    result.map_err(|e| Error::io(path, e))
}

/// Reads per-cell labels. Plain files hold one label per line in cell
/// order. Two-column `cell_id,label` files are joined to `cell_ids` when
/// given (and returned in file order otherwise).
pub fn read_labels(path: &Path, cell_ids: Option<&[String]>) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            lines.push((i + 1, trimmed.to_string()));
        }
    }
    let two_column = lines.first().is_some_and(|(_, l)| l.contains(','));
    if !two_column {
        return Ok(lines.into_iter().map(|(_, l)| l).collect());
    }

    let mut pairs = Vec::with_capacity(lines.len());
    for (no, line) in &lines {
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, *no, "expected `cell_id,label`"))?;
        pairs.push((id.trim().to_string(), label.trim().to_string()));
    }
    if matches!(pairs.first(), Some((id, label)) if (id == "cell_id" || id == "cell") && label == "label")
    {
        pairs.remove(0);
    }
    let Some(cell_ids) = cell_ids else {
        return Ok(pairs.into_iter().map(|(_, l)| l).collect());
    };
    let known: HashSet<&String> = cell_ids.iter().collect();
    let mut by_id: HashMap<String, String> = HashMap::with_capacity(pairs.len());
    for (id, label) in pairs {
        if !known.contains(&id) {
            return Err(Error::Labels(format!("unknown cell id `{id}`")));
        }
        by_id.insert(id, label);
    }
    cell_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Labels(format!("no label for cell `{id}`")))
        })
        .collect()
}

pub fn write_labels(labels: &[String], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    (|| -> std::io::Result<()> {
        for l in labels {
            writeln!(out, "{l}")?;
        }
        out.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Ids used when a format carries none.
pub fn generated_ids(n_cells: usize, n_genes: usize) -> (Vec<String>, Vec<String>) {
    (default_ids("cell", n_cells), default_ids("gene", n_genes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn mtx_basic_and_duplicates() {
        let d = tmp();
        let p = write(
            d.path(),
            "a.mtx",
            "%%MatrixMarket matrix coordinate real general\n% note\n2 2 2\n1 1 1.5\n2 2 2.0\n",
        );
        assert_eq!(
            read_matrix_market(&p).unwrap().values(),
            &[1.5, 0.0, 0.0, 2.0]
        );

        let p = write(
            d.path(),
            "b.mtx",
            "%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 1\n1 1 1\n",
        );
        assert_eq!(read_matrix_market(&p).unwrap().get(0, 0), 2.0);
    }

    #[test]
    fn mtx_errors_name_the_line() {
        let d = tmp();
        let p = write(
            d.path(),
            "c.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        );
        match read_matrix_market(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let p = write(
            d.path(),
            "d.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 -1.0\n",
        );
        assert!(matches!(
            read_matrix_market(&p),
            Err(Error::Parse { line: 3, .. })
        ));
        let p = write(
            d.path(),
            "e.mtx",
            "%%MatrixMarket matrix array real general\n1 1\n1\n",
        );
        assert!(matches!(
            read_matrix_market(&p),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_orientations() {
        let d = tmp();
        let p = write(d.path(), "m.csv", ",g1,g2\nc1,1,0\nc2,0,2.5\n");
        let x = read_csv_matrix(&p, Orientation::CellsAsRows).unwrap();
        assert_eq!(x.values(), &[1.0, 0.0, 0.0, 2.5]);
        assert_eq!(x.cell_ids(), &["c1", "c2"]);
        assert_eq!(x.gene_ids(), &["g1", "g2"]);

        let t = read_csv_matrix(&p, Orientation::GenesAsRows).unwrap();
        assert_eq!(t.cell_ids(), &["g1", "g2"]);
        assert_eq!(t.values(), &[1.0, 0.0, 0.0, 2.5]);

        let p = write(d.path(), "r.csv", ",g1,g2\nc1,1,0\nc2,0\n");
        assert!(matches!(
            read_csv_matrix(&p, Orientation::CellsAsRows),
            Err(Error::Parse { line: 3, .. })
        ));
        let p = write(d.path(), "n.csv", ",g1\nc1,abc\n");
        assert!(read_csv_matrix(&p, Orientation::CellsAsRows).is_err());
    }

    #[test]
    fn writes_edge_cases() {
        let d = tmp();
        let one = ExpressionMatrix::new(1, 1, vec![0.0]).unwrap();
        let p = d.path().join("one.csv");
        write_matrix(&one, &p, MatrixFormat::Csv).unwrap();
        assert_eq!(read_csv_matrix(&p, Orientation::CellsAsRows).unwrap(), one);

        let zeros = ExpressionMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        let p = d.path().join("z.mtx");
        write_matrix(&zeros, &p, MatrixFormat::Mtx).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().nth(1) == Some("2 3 0"));
        assert_eq!(read_matrix_market(&p).unwrap().values(), zeros.values());
    }

    #[test]
    fn labels_plain_and_joined() {
        let d = tmp();
        let p = write(d.path(), "l.txt", "a\nb\na\n");
        assert_eq!(read_labels(&p, None).unwrap(), vec!["a", "b", "a"]);

        let ids: Vec<String> = ["c1", "c2", "c3"].iter().map(|s| s.to_string()).collect();
        let p = write(d.path(), "j.csv", "cell_id,label\nc3,z\nc1,x\nc2,y\n");
        assert_eq!(read_labels(&p, Some(&ids)).unwrap(), vec!["x", "y", "z"]);

        let p = write(d.path(), "u.csv", "c1,x\nc9,y\nc2,y\nc3,z\n");
        let err = read_labels(&p, Some(&ids)).unwrap_err();
        assert!(err.to_string().contains("c9"), "{err}");
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            MatrixFormat::from_path(Path::new("x.MTX")).unwrap(),
            MatrixFormat::Mtx
        );
        assert_eq!(
            MatrixFormat::from_path(Path::new("x.csv")).unwrap(),
            MatrixFormat::Csv
        );
        assert!(MatrixFormat::from_path(Path::new("x.h5")).is_err());
    }
}
