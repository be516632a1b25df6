//! Dataset CSV files: one header row, decimal cells, target in the last column.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bcreg_core::Dataset;

use crate::error::{CliError, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a dataset together with its header names.
pub fn read_csv_dataset(path: &Path) -> Result<(Vec<String>, Dataset)> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let format = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err(format(format!(
            "need at least one feature column and a target column, found {} column(s)",
            header.len()
        )));
    }
    let p = header.len() - 1;

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| format(format!("row {row}: {e}")))?;
        for (j, cell) in record.iter().enumerate() {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: j + 1,
                    cell: cell.to_string(),
                })?;
            if j < p {
                features.push(value);
            } else {
                targets.push(value);
            }
        }
    }
    if targets.is_empty() {
        return Err(CliError::Empty {
            path: path.to_path_buf(),
        });
    }
    let n = targets.len();
    let dataset = Dataset::new(
        nalgebra::DMatrix::from_row_slice(n, p, &features),
        nalgebra::DVector::from_vec(targets),
    )?;
    Ok((header, dataset))
}

pub fn parse_csv_dataset(path: &Path) -> Result<Dataset> {
    read_csv_dataset(path).map(|(_, d)| d)
}

/// 17 significant digits: always parses back to the identical `f64`.
pub fn format_exact(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv_dataset(path: &Path, header: &[String], dataset: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        let x = dataset.features();
        for i in 0..dataset.n() {
            let mut cells: Vec<String> = x.row(i).iter().map(|v| format_exact(*v)).collect();
            cells.push(format_exact(dataset.targets()[i]));
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(path))
}

/// Generic header `x1,...,xp,y`.
pub fn default_header(p: usize) -> Vec<String> {
    (1..=p)
        .map(|i| format!("x{i}"))
        .chain(["y".to_string()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn parses_basic_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "a.csv", "x1,x2,y\n1,2,3\n4,5,6\n");
        let d = parse_csv_dataset(&path).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.targets().as_slice(), &[3.0, 6.0]);
        assert_eq!(d.features()[(1, 0)], 4.0);
        assert_eq!(d.features()[(0, 1)], 2.0);
    }

    #[test]
    fn reports_bad_cell_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "b.csv", "x1,x2,y\n1,abc,3\n");
        match parse_csv_dataset(&path).unwrap_err() {
            CliError::Parse {
                row, column, cell, ..
            } => {
                assert_eq!((row, column), (1, 2));
                assert_eq!(cell, "abc");
            }
            e => panic!("unexpected {e}"),
        }
        let path = write(&dir, "c.csv", "x,y\n1,2\nnan,3\n");
        assert!(matches!(
            parse_csv_dataset(&path).unwrap_err(),
            CliError::Parse {
                row: 2,
                column: 1,
                ..
            }
        ));
    }

    #[test]
    fn rejects_header_only_and_single_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "h.csv", "x1,x2,y\n");
        assert!(matches!(
            parse_csv_dataset(&path).unwrap_err(),
            CliError::Empty { .. }
        ));
        let path = write(&dir, "s.csv", "y\n1\n2\n");
        assert!(matches!(
            parse_csv_dataset(&path).unwrap_err(),
            CliError::Format { .. }
        ));
        let path = write(&dir, "r.csv", "x,y\n1,2\n3\n");
        assert!(matches!(
            parse_csv_dataset(&path).unwrap_err(),
            CliError::Format { .. }
        ));
    }

    #[test]
    fn exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vals = [
            0.1,
            -1.0 / 3.0,
            1e-300,
            123_456_789.123_456_79,
            f64::MIN_POSITIVE,
            -0.0,
        ];
        let d = Dataset::from_rows(
            &vals.iter().map(|v| vec![*v, v * 7.0]).collect::<Vec<_>>(),
            vals.iter().map(|v| v.sqrt().max(0.0) + 2.0).collect(),
        )
        .unwrap();
        let path = dir.path().join("rt.csv");
        write_csv_dataset(&path, &default_header(2), &d).unwrap();
        let back = parse_csv_dataset(&path).unwrap();
        assert_eq!(back, d);
    }
}
