//! Problem file formats.
//!
//! * Matrix: binary little-endian `f64`, column-major, after an 8-byte header holding the row
//!   and column counts as little-endian `u32`; or CSV with one matrix row per line.
//! * Vector: one value per line, or the binary matrix format with one column.
//! * Groups: one group per line, whitespace-separated 0-based feature indices, optionally
//!   ending in `w=<float>`. Blank lines and lines starting with `#` are skipped.
//!
//! A dataset directory holds `A.bin` (or `A.csv`), `b.txt` and `groups.txt`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{GroupStructure, ModelError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
}

impl IoError {
    /// Line number of a parse error, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            IoError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

const HEADER_LEN: usize = 8;

pub fn write_matrix_bin(path: &Path, a: &DMatrix<f64>) -> Result<(), IoError> {
    let (n, m) = a.shape();
    let dims = [n, m].map(|d| {
        u32::try_from(d).map_err(|_| IoError::Format {
            path: path.to_path_buf(),
            message: format!("dimension {d} does not fit in u32"),
        })
    });
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * n * m);
    for d in dims {
        bytes.extend_from_slice(&d?.to_le_bytes());
    }
    for v in a.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_matrix_bin(path: &Path) -> Result<DMatrix<f64>, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let format = |message: String| IoError::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(format(format!("file too short for header ({} bytes)", bytes.len())));
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
    let m = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * n * m {
        return Err(format(format!(
            "header says {n}x{m} ({} bytes) but payload has {} bytes",
            8 * n * m,
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    Ok(DMatrix::from_iterator(n, m, values))
}

pub fn write_vector_bin(path: &Path, v: &DVector<f64>) -> Result<(), IoError> {
    write_matrix_bin(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

pub fn read_vector_bin(path: &Path) -> Result<DVector<f64>, IoError> {
    let a = read_matrix_bin(path)?;
    if a.ncols() != 1 {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            message: format!("expected a single column, found {}", a.ncols()),
        });
    }
    Ok(DVector::from_column_slice(a.as_slice()))
}

fn parse_float(path: &Path, line: usize, token: &str) -> Result<f64, IoError> {
    token.parse::<f64>().map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("'{token}': {e}"),
    })
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, IoError> {
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        let row = content
            .split(',')
            .map(|t| parse_float(path, line, t.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for row in a.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads a matrix, choosing the format from the extension (`.csv` or binary otherwise).
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_matrix_csv(path),
        _ => read_matrix_bin(path),
    }
}

pub fn read_vector_text(path: &Path) -> Result<DVector<f64>, IoError> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.trim();
        if !content.is_empty() {
            values.push(parse_float(path, idx + 1, content)?);
        }
    }
    Ok(DVector::from_vec(values))
}

pub fn write_vector_text(path: &Path, v: &DVector<f64>) -> Result<(), IoError> {
    let mut text = String::with_capacity(v.len() * 20);
    for value in v.iter() {
        text.push_str(&value.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Parses a groups file against `num_features` features.
pub fn parse_groups(path: &Path, text: &str, num_features: usize) -> Result<GroupStructure, IoError> {
    let mut groups = Vec::new();
    let mut weights = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let err = |message: String| IoError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut group = Vec::new();
        let mut weight = 1.0;
        let mut tokens = content.split_whitespace().peekable();
        while let Some(token) = tokens.next() {
            if let Some(w) = token.strip_prefix("w=") {
                if tokens.peek().is_some() {
                    return Err(err("'w=' must be the last token".into()));
                }
                weight = w
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad weight '{w}': {e}")))?;
                if !(weight >= 0.0 && weight.is_finite()) {
                    return Err(err(format!("weight must be finite and non-negative, got {w}")));
                }
                continue;
            }
            let index = token
                .parse::<usize>()
                .map_err(|e| err(format!("bad index '{token}': {e}")))?;
            if index >= num_features {
                return Err(err(format!("index {index} out of range for {num_features} features")));
            }
            if group.contains(&index) {
                return Err(err(format!("index {index} repeated within the group")));
            }
            group.push(index);
        }
        if group.is_empty() {
            return Err(err("group has no indices".into()));
        }
        groups.push(group);
        weights.push(weight);
    }
    GroupStructure::with_weights(groups, weights, num_features).map_err(|source| IoError::Model {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_groups(path: &Path, num_features: usize) -> Result<GroupStructure, IoError> {
    parse_groups(path, &read_text(path)?, num_features)
}

pub fn write_groups(path: &Path, groups: &GroupStructure) -> Result<(), IoError> {
    let mut text = String::new();
    for (group, &w) in groups.groups().iter().zip(groups.weights()) {
        let line: Vec<String> = group.iter().map(usize::to_string).collect();
        text.push_str(&line.join(" "));
        if w != 1.0 {
            text.push_str(&format!(" w={w}"));
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Raw problem data as stored on disk; `lambda` and the penalty are chosen at solve time.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub groups: GroupStructure,
}

pub const MATRIX_FILE: &str = "A.bin";
pub const MATRIX_CSV_FILE: &str = "A.csv";
pub const RHS_FILE: &str = "b.txt";
pub const GROUPS_FILE: &str = "groups.txt";

pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_matrix_bin(&dir.join(MATRIX_FILE), &data.a)?;
    write_vector_text(&dir.join(RHS_FILE), &data.b)?;
    write_groups(&dir.join(GROUPS_FILE), &data.groups)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, IoError> {
    let bin = dir.join(MATRIX_FILE);
    let a = if bin.exists() {
        read_matrix_bin(&bin)?
    } else {
        read_matrix_csv(&dir.join(MATRIX_CSV_FILE))?
    };
    let b_path = dir.join(RHS_FILE);
    let b = read_vector_text(&b_path)?;
    if b.len() != a.nrows() {
        return Err(IoError::Format {
            path: b_path,
            message: format!("expected {} values to match A, found {}", a.nrows(), b.len()),
        });
    }
    let groups = read_groups(&dir.join(GROUPS_FILE), a.ncols())?;
    Ok(Dataset { a, b, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("ogl-io-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn binary_matrix_round_trip_and_layout() {
        let dir = temp_dir("bin");
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let path = dir.join("a.bin");
        write_matrix_bin(&path, &a).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..8], &[2, 0, 0, 0, 3, 0, 0, 0]);
        // column-major: second stored value is A[1, 0]
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 4.0);
        assert_eq!(read_matrix_bin(&path).unwrap(), a);

        fs::write(&path, &bytes[..20]).unwrap();
        assert!(matches!(read_matrix_bin(&path), Err(IoError::Format { .. })));
    }

    #[test]
    fn text_formats_round_trip() {
        let dir = temp_dir("text");
        let v = DVector::from_vec(vec![0.1, -1e-300, 3.0, f64::MIN_POSITIVE]);
        let path = dir.join("v.txt");
        write_vector_text(&path, &v).unwrap();
        assert_eq!(read_vector_text(&path).unwrap(), v);

        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 1.0 / 3.0, -4.5]);
        let path = dir.join("a.csv");
        write_matrix_csv(&path, &a).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), a);

        let x = DVector::from_vec(vec![1.5, -2.25]);
        let path = dir.join("x.bin");
        write_vector_bin(&path, &x).unwrap();
        assert_eq!(read_vector_bin(&path).unwrap(), x);
    }

    #[test]
    fn groups_file_parsing() {
        let p = Path::new("groups.txt");
        let gs = parse_groups(p, "0 1 2\n# comment\n\n2 3 w=0.5\n", 4).unwrap();
        assert_eq!(gs.groups(), &[vec![0, 1, 2], vec![2, 3]]);
        assert_eq!(gs.weights(), &[1.0, 0.5]);

        for (text, line) in [
            ("0 1\n1 x\n", 2),
            ("0 1\n\n1 7\n", 3),
            ("0 0 1\n", 1),
            ("0 1 w=abc\n", 1),
            ("0 w=1 1\n", 1),
            ("w=2\n", 1),
        ] {
            let err = parse_groups(p, text, 4).unwrap_err();
            assert_eq!(err.line(), Some(line), "{text:?}: {err}");
            assert!(err.to_string().contains(&format!("groups.txt:{line}:")));
        }
        assert!(matches!(parse_groups(p, "0 1\n", 4), Err(IoError::Model { .. })));
    }

    #[test]
    fn dataset_round_trip() {
        let dir = temp_dir("dataset");
        let groups = GroupStructure::with_weights(vec![vec![0, 1], vec![1, 2]], vec![1.0, 2.0], 3).unwrap();
        let data = Dataset {
            a: DMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.1),
            b: DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]),
            groups,
        };
        save_dataset(&dir, &data).unwrap();
        let back = load_dataset(&dir).unwrap();
        assert_eq!(back.a, data.a);
        assert_eq!(back.b, data.b);
        assert_eq!(back.groups, data.groups);
    }
}
