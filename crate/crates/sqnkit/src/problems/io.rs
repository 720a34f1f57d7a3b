//! Sparse classification dataset text format.
//!
//! One sample per line: `<label> <index>:<value> ...` with 1-based indices
//! and labels in {-1, +1}. Lines starting with `#` are comments; the
//! optional header `# dim: <n>` pins the feature dimension (the writer
//! always emits it so trailing zero columns survive a round trip). Values
//! are printed with the shortest representation that parses back to the
//! same f64, making parse/serialize round trips exact.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{ParameterVector, SparseVector};
use crate::problems::{LabeledDataset, SparseSample};

fn parse_label(token: &str, line: usize) -> Result<i8> {
    let value: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse label {token:?}"),
    })?;
    if value == 1.0 {
        Ok(1)
    } else if value == -1.0 {
        Ok(-1)
    } else {
        Err(Error::Label {
            line,
            value: token.to_string(),
        })
    }
}

fn parse_line(text: &str, line: usize) -> Result<(i8, Vec<(usize, f64)>)> {
    let mut tokens = text.split_whitespace();
    let label = parse_label(
        tokens.next().ok_or_else(|| Error::Parse {
            line,
            message: "empty sample line".into(),
        })?,
        line,
    )?;
    let mut entries = Vec::new();
    for token in tokens {
        let (idx, val) = token.split_once(':').ok_or_else(|| Error::Parse {
            line,
            message: format!("feature {token:?} is not index:value"),
        })?;
        let index: usize = idx.parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse feature index {idx:?}"),
        })?;
        if index == 0 {
            return Err(Error::Parse {
                line,
                message: "feature indices are 1-based; found 0".into(),
            });
        }
        let value: f64 = val.parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse feature value {val:?}"),
        })?;
        entries.push((index - 1, value));
    }
    entries.sort_by_key(|(i, _)| *i);
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Parse {
                line,
                message: format!("duplicate feature index {}", pair[0].0 + 1),
            });
        }
    }
    Ok((label, entries))
}

/// Parses a dataset from the sparse text format.
pub fn load_sparse_dataset(path: &Path) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path)?;
    let mut declared_dim: Option<usize> = None;
    let mut rows: Vec<(i8, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(dim) = comment.strip_prefix("dim:") {
                let dim: usize = dim.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("cannot parse dimension header {comment:?}"),
                })?;
                declared_dim = Some(dim);
            }
            continue;
        }
        let (label, entries) = parse_line(trimmed, line)?;
        if let Some(&(last, _)) = entries.last() {
            max_index = Some(max_index.map_or(last, |m: usize| m.max(last)));
            if let Some(dim) = declared_dim {
                if last >= dim {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "feature index {} exceeds declared dimension {dim}",
                            last + 1
                        ),
                    });
                }
            }
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "no samples in file".into(),
        });
    }
    let dim = declared_dim.unwrap_or_else(|| max_index.map_or(0, |m| m + 1));
    let samples = rows
        .into_iter()
        .map(|(label, entries)| {
            let (indices, values): (Vec<usize>, Vec<f64>) = entries.into_iter().unzip();
            Ok(SparseSample {
                features: SparseVector::new(indices, values, dim)?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(samples, dim)
}

/// Serializes a dataset to the sparse text format.
pub fn format_sparse_dataset(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    out.push_str(&format!("# dim: {}\n", dataset.dim()));
    for sample in dataset.samples() {
        out.push_str(if sample.label > 0 { "+1" } else { "-1" });
        for (i, v) in sample.features.entries() {
            out.push_str(&format!(" {}:{}", i + 1, v));
        }
        out.push('\n');
    }
    out
}

/// Writes a dataset; bytes are a pure function of the dataset.
pub fn write_sparse_dataset(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(format_sparse_dataset(dataset).as_bytes())?;
    Ok(())
}

/// Metadata describing how a synthetic dataset was produced.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SidecarMetadata {
    pub seed: u64,
    pub n: usize,
    pub density: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub xbar_path: String,
    pub rng: String,
}

pub fn write_sidecar_metadata(path: &Path, meta: &SidecarMetadata) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes a dense vector, one entry per line.
pub fn write_dense_vector(path: &Path, x: &ParameterVector) -> Result<()> {
    let mut out = String::new();
    for v in x.iter() {
        out.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_dense_vector(path: &Path) -> Result<ParameterVector> {
    let text = std::fs::read_to_string(path)?;
    let values = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("cannot parse vector entry {l:?}"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    ParameterVector::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::generate_synthetic;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), content).unwrap();
        file
    }

    #[test]
    fn parses_the_format_definition_example() {
        let file = write_temp("-1 3:0.5 7:1.2\n");
        let ds = load_sparse_dataset(file.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dim(), 7);
        let s = ds.sample(0);
        assert_eq!(s.label, -1);
        let entries: Vec<(usize, f64)> = s.features.entries().collect();
        assert_eq!(entries, vec![(2, 0.5), (6, 1.2)]);
    }

    #[test]
    fn parses_empty_feature_list() {
        let file = write_temp("# dim: 4\n1\n-1 2:3.5\n");
        let ds = load_sparse_dataset(file.path()).unwrap();
        assert_eq!(ds.sample(0).label, 1);
        assert_eq!(ds.sample(0).features.nnz(), 0);
        assert_eq!(ds.dim(), 4);
    }

    #[test]
    fn rejects_bad_labels_and_duplicates() {
        let err = load_sparse_dataset(write_temp("2 1:1.0\n").path()).unwrap_err();
        assert!(matches!(err, Error::Label { line: 1, .. }));

        let err = load_sparse_dataset(write_temp("+1 3:1.0 3:2.0\n").path()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let err = load_sparse_dataset(write_temp("+1 notafeature\n").path()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn reports_line_numbers_past_comments() {
        let err =
            load_sparse_dataset(write_temp("# dim: 3\n+1 1:1.0\nbogus 1:1\n").path()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn unsorted_indices_are_sorted_on_load() {
        let file = write_temp("+1 5:2.0 1:1.0\n");
        let ds = load_sparse_dataset(file.path()).unwrap();
        let entries: Vec<(usize, f64)> = ds.sample(0).features.entries().collect();
        assert_eq!(entries, vec![(0, 1.0), (4, 2.0)]);
    }

    #[test]
    fn declared_dimension_is_enforced() {
        let err = load_sparse_dataset(write_temp("# dim: 3\n+1 4:1.0\n").path()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn round_trip_reproduces_synthetic_dataset_exactly() {
        let (dataset, _) = generate_synthetic(50, 40, 0.1, 99).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_sparse_dataset(file.path(), &dataset).unwrap();
        let reloaded = load_sparse_dataset(file.path()).unwrap();
        assert_eq!(dataset, reloaded);

        // Serialize -> parse -> serialize is byte-stable.
        let once = format_sparse_dataset(&dataset);
        let twice = format_sparse_dataset(&reloaded);
        assert_eq!(once, twice);
    }

    #[test]
    fn dense_vector_round_trip() {
        let x = ParameterVector::new(vec![1.5, -2.25, 1.0e-17, 3.0]).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_dense_vector(file.path(), &x).unwrap();
        assert_eq!(read_dense_vector(file.path()).unwrap(), x);
    }
}
