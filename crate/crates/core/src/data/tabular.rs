use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{DataSource, Dataset, Preprocessing};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::numfmt::sig12;

/// Reads a headered, comma-separated file into a [`Dataset`].
///
/// A column is numeric when it has at least one non-empty field and every
/// non-empty field parses as a float. Non-numeric columns are dropped, then any
/// row with an empty field in a remaining column is dropped. With
/// `standardize`, constant columns are dropped and the rest are centered and
/// scaled by their population standard deviation. The target is never scaled.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str, standardize: bool) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTargetColumn(target_column.to_owned()))?;

    let raw: Vec<Vec<Option<String>>> = reader
        .records()
        .map(|rec| {
            rec.map(|r| {
                (0..header.len())
                    .map(|j| r.get(j).filter(|s| !s.is_empty()).map(str::to_owned))
                    .collect()
            })
        })
        .collect::<std::result::Result<_, _>>()?;

    let numeric: Vec<bool> = (0..header.len())
        .map(|j| {
            let mut values = raw.iter().filter_map(|row| row[j].as_deref()).peekable();
            values.peek().is_some() && values.all(|s| s.parse::<f64>().is_ok_and(f64::is_finite))
        })
        .collect();
    if !numeric[target_idx] {
        return Err(Error::NonNumericTarget(target_column.to_owned()));
    }
    let non_numeric_columns: Vec<String> = (0..header.len())
        .filter(|&j| !numeric[j])
        .map(|j| header[j].clone())
        .collect();
    let mut feature_cols: Vec<usize> = (0..header.len())
        .filter(|&j| numeric[j] && j != target_idx)
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    let mut targets = Vec::with_capacity(raw.len());
    let mut dropped = 0;
    for row in &raw {
        let parse = |j: usize| row[j].as_deref().and_then(|s| s.parse::<f64>().ok());
        let features: Option<Vec<f64>> = feature_cols.iter().map(|&j| parse(j)).collect();
        match (features, parse(target_idx)) {
            (Some(f), Some(t)) => {
                rows.push(f);
                targets.push(t);
            }
            _ => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterCleaning);
    }

    let mut preprocessing = Preprocessing {
        standardized: standardize,
        rows_dropped_for_missing: dropped,
        non_numeric_columns,
        ..Preprocessing::default()
    };

    if standardize {
        let n = rows.len() as f64;
        let mut keep = Vec::new();
        for (k, &j) in feature_cols.iter().enumerate() {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 * mean.abs().max(1.0) {
                keep.push((k, mean, sd));
            } else {
                preprocessing.constant_columns.push(header[j].clone());
            }
        }
        rows = rows
            .into_iter()
            .map(|r| keep.iter().map(|&(k, mean, sd)| (r[k] - mean) / sd).collect())
            .collect();
        feature_cols = keep.iter().map(|&(k, _, _)| feature_cols[k]).collect();
        preprocessing.column_means = keep.iter().map(|k| k.1).collect();
        preprocessing.column_scales = keep.iter().map(|k| k.2).collect();
    }

    let d = feature_cols.len();
    let x = Matrix::new(rows.len(), d, rows.into_iter().flatten().collect())?;
    Ok(Dataset {
        x,
        y: Vector::new(targets)?,
        feature_names: feature_cols.iter().map(|&j| header[j].clone()).collect(),
        target_name: header[target_idx].clone(),
        source: DataSource::Csv { path: path.to_path_buf() },
        preprocessing,
    })
}

#[derive(Serialize)]
struct CacheMeta<'a> {
    source: &'a DataSource,
    feature_names: &'a [String],
    target_name: &'a str,
    rows: usize,
    preprocessing: &'a Preprocessing,
}

/// Writes `ds` as CSV (features then target, 12 significant digits) and a
/// `<path>.meta.json` sidecar with source, seed and preprocessing. Returns the
/// sidecar path.
pub fn write_dataset_cache(ds: &Dataset, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<&str> = ds
        .feature_names
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(ds.target_name.as_str()))
        .collect();
    w.write_record(&header)?;
    for (row, y) in ds.x.row_iter().zip(ds.y.iter()) {
        w.write_record(row.iter().chain(std::iter::once(y)).map(|&v| sig12(v)))?;
    }
    w.flush()?;

    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let meta_path = PathBuf::from(meta_path);
    let meta = CacheMeta {
        source: &ds.source,
        feature_names: &ds.feature_names,
        target_name: &ds.target_name,
        rows: ds.n_rows(),
        preprocessing: &ds.preprocessing,
    };
    serde_json::to_writer_pretty(File::create(&meta_path)?, &meta)?;
    Ok(meta_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn plain_load() {
        let f = file_with("a,b,y\n1,2,3\n4,5,6\n");
        let ds = load_csv(f.path(), "y", false).unwrap();
        assert_eq!(ds.x, Matrix::from_rows(&[[1.0, 2.0], [4.0, 5.0]]).unwrap());
        assert_eq!(&*ds.y, &[3.0, 6.0]);
        assert_eq!(ds.feature_names, ["a", "b"]);
        assert_eq!(ds.preprocessing.rows_dropped_for_missing, 0);
    }

    #[test]
    fn row_with_missing_value_is_dropped() {
        let f = file_with("a,b,y\n1,2,3\n4,5,6\n7,,8\n");
        let ds = load_csv(f.path(), "y", false).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.preprocessing.rows_dropped_for_missing, 1);
    }

    #[test]
    fn two_point_standardization() {
        let f = file_with("a,b,y\n1,2,3\n4,5,6\n");
        let ds = load_csv(f.path(), "y", true).unwrap();
        for j in 0..2 {
            let col = ds.x.column(j);
            let mean = col.iter().sum::<f64>() / 2.0;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
        assert_eq!(&*ds.y, &[3.0, 6.0]);
        assert_eq!(ds.preprocessing.column_means, [2.5, 3.5]);
        assert_eq!(ds.preprocessing.column_scales, [1.5, 1.5]);
    }

    #[test]
    fn non_numeric_and_constant_columns() {
        let f = file_with("name,a,c,y\nx,1,5,3\nz,2,5,4\nw,3,5,5\n");
        let ds = load_csv(f.path(), "y", true).unwrap();
        assert_eq!(ds.feature_names, ["a"]);
        assert_eq!(ds.preprocessing.non_numeric_columns, ["name"]);
        assert_eq!(ds.preprocessing.constant_columns, ["c"]);
        let raw = load_csv(f.path(), "y", false).unwrap();
        assert_eq!(raw.feature_names, ["a", "c"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            load_csv("/nonexistent/data.csv", "y", false),
            Err(Error::FileNotFound(_))
        ));
        let f = file_with("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), "y", false), Err(Error::MissingTargetColumn(_))));
        let f = file_with("a,y\n1,\n,2\n");
        assert!(matches!(load_csv(f.path(), "y", false), Err(Error::EmptyAfterCleaning)));
        let f = file_with("a,y\n1,low\n2,high\n");
        assert!(matches!(load_csv(f.path(), "y", false), Err(Error::NonNumericTarget(_))));
    }

    #[test]
    fn cache_round_trip() {
        let f = file_with("a,b,y\n0.1,-2.5e-3,3\n123456.789012,5,6.25\n");
        let ds = load_csv(f.path(), "y", false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("cache.csv");
        let meta = write_dataset_cache(&ds, &out).unwrap();
        let back = load_csv(&out, "y", false).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
        assert_eq!(json["source"]["kind"], "csv");
        assert_eq!(json["preprocessing"]["rows_dropped_for_missing"], 0);
    }
}
