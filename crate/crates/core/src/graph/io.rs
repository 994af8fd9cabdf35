use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::nn::DenseMatrix;

/// `manifest.json` of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub n_nodes: usize,
    pub n_features: usize,
    pub n_classes: Option<usize>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.into(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Reads `manifest.json`, `features.csv`, `edges.csv` and optionally
/// `labels.csv` from `dir`.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<GraphDataset<f64>> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_str(&read_text(&dir.join("manifest.json"))?)?;

    let mut values = Vec::with_capacity(manifest.n_nodes * manifest.n_features);
    let mut rows = 0usize;
    for (line, text) in data_lines(&read_text(&dir.join("features.csv"))?) {
        let mut count = 0usize;
        for field in text.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| parse_err("features.csv", line, format!("{field:?}: {e}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("features.csv line {line}")));
            }
            values.push(v);
            count += 1;
        }
        if count != manifest.n_features {
            return Err(Error::DimensionMismatch(format!(
                "features.csv line {line} has {count} values, manifest says {}",
                manifest.n_features
            )));
        }
        rows += 1;
    }
    if rows != manifest.n_nodes {
        return Err(Error::DimensionMismatch(format!(
            "features.csv has {rows} rows, manifest says {} nodes",
            manifest.n_nodes
        )));
    }
    let features = DenseMatrix::from_vec(rows, manifest.n_features, values)?;

    let mut edges = Vec::new();
    for (line, text) in data_lines(&read_text(&dir.join("edges.csv"))?) {
        let mut parts = text.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err("edges.csv", line, "expected `u,v`"));
        };
        let u: usize = a.parse().map_err(|e| parse_err("edges.csv", line, format!("{e}")))?;
        let v: usize = b.parse().map_err(|e| parse_err("edges.csv", line, format!("{e}")))?;
        edges.push((u, v));
    }

    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.exists() {
        let mut labels = Vec::with_capacity(manifest.n_nodes);
        for (line, text) in data_lines(&read_text(&labels_path)?) {
            labels.push(
                text.parse::<usize>()
                    .map_err(|e| parse_err("labels.csv", line, format!("{e}")))?,
            );
        }
        Some(labels)
    } else {
        None
    };

    GraphDataset::new(manifest.name, features, edges, labels, manifest.n_classes)
}

pub fn save_dataset(dir: impl AsRef<Path>, ds: &GraphDataset<f64>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        name: ds.name.clone(),
        n_nodes: ds.n_nodes(),
        n_features: ds.n_features(),
        n_classes: ds.n_classes(),
    };
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(p, e))
    };
    write("manifest.json", serde_json::to_string_pretty(&manifest)? + "\n")?;

    let mut body = String::new();
    for r in 0..ds.n_nodes() {
        let row: Vec<String> = ds.features().row(r).iter().map(|v| v.to_string()).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    write("features.csv", body)?;

    let body: String = ds.edges().iter().map(|(u, v)| format!("{u},{v}\n")).collect();
    write("edges.csv", body)?;

    if let Some(labels) = ds.labels() {
        let body: String = labels.iter().map(|l| format!("{l}\n")).collect();
        write("labels.csv", body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_minimal(dir: &Path, edges: &str) {
        fs::write(
            dir.join("manifest.json"),
            r#"{"name":"tiny","n_nodes":2,"n_features":3,"n_classes":null}"#,
        )
        .unwrap();
        fs::write(dir.join("features.csv"), "1,0,0.5\n0,2,-1\n").unwrap();
        fs::write(dir.join("edges.csv"), edges).unwrap();
    }

    #[test]
    fn loads_minimal_dataset() {
        let tmp = tempfile::tempdir().unwrap();
        write_minimal(tmp.path(), "0,1\n");
        let ds = load_dataset(tmp.path()).unwrap();
        assert_eq!(ds.n_nodes(), 2);
        assert_eq!(ds.edges().len(), 1);
        assert_eq!(ds.n_features(), 3);
        assert!(ds.labels().is_none());
    }

    #[test]
    fn reports_missing_files_and_bad_indices() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_dataset(tmp.path()), Err(Error::MissingFile(_))));
        write_minimal(tmp.path(), "0,7\n");
        assert!(matches!(
            load_dataset(tmp.path()),
            Err(Error::NodeOutOfRange { index: 7, .. })
        ));
    }

    #[test]
    fn dimension_mismatch_and_non_finite() {
        let tmp = tempfile::tempdir().unwrap();
        write_minimal(tmp.path(), "0,1\n");
        fs::write(tmp.path().join("features.csv"), "1,0\n0,2\n").unwrap();
        assert!(matches!(load_dataset(tmp.path()), Err(Error::DimensionMismatch(_))));
        fs::write(tmp.path().join("features.csv"), "1,0,inf\n0,2,1\n").unwrap();
        assert!(matches!(load_dataset(tmp.path()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn save_then_load_preserves_everything() {
        let tmp = tempfile::tempdir().unwrap();
        let x = DenseMatrix::from_fn(4, 2, |r, c| (r as f64) / 3.0 - c as f64 * 1e-7);
        let ds = GraphDataset::new("rt", x, [(0, 1), (2, 3), (1, 3)], Some(vec![0, 1, 1, 0]), Some(2))
            .unwrap();
        save_dataset(tmp.path(), &ds).unwrap();
        assert_eq!(load_dataset(tmp.path()).unwrap(), ds);
    }
}
