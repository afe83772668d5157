//! Matrix Market I/O (coordinate and array, real general) and plain-text
//! vectors, one value per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use blockaug::{Matrix, Storage};

use crate::CliError;

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: source.to_string(),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Read a `%%MatrixMarket matrix coordinate|array real general` file.
/// Indices in coordinate files are 1-based; array files list the dense
/// values in column-major order.
pub fn read_matrix_market(path: &Path) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if !header.starts_with("%%MatrixMarket") {
        return Err(parse_err(path, 1, "missing %%MatrixMarket banner"));
    }
    let fields: Vec<String> = header
        .split_whitespace()
        .skip(1)
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 4 || fields[0] != "matrix" {
        return Err(parse_err(
            path,
            1,
            "expected 'matrix <format> <field> <symmetry>'",
        ));
    }
    let coordinate = match fields[1].as_str() {
        "coordinate" => true,
        "array" => false,
        other => {
            return Err(CliError::Unsupported {
                path: path.display().to_string(),
                what: format!("format '{other}'"),
            })
        }
    };
    if fields[2] != "real" {
        return Err(CliError::Unsupported {
            path: path.display().to_string(),
            what: format!("field '{}'", fields[2]),
        });
    }
    if fields[3] != "general" {
        return Err(CliError::Unsupported {
            path: path.display().to_string(),
            what: format!("symmetry '{}'", fields[3]),
        });
    }

    // Skip comments and blank lines up to the size line.
    let mut size_line = None;
    for (idx, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, trimmed.to_string()));
        break;
    }
    let (size_lineno, size_text) =
        size_line.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let dims: Vec<&str> = size_text.split_whitespace().collect();

    if coordinate {
        if dims.len() != 3 {
            return Err(parse_err(
                path,
                size_lineno,
                "size line needs 'rows cols nnz'",
            ));
        }
        let rows: usize = parse_num(path, size_lineno, dims[0])?;
        let cols: usize = parse_num(path, size_lineno, dims[1])?;
        let nnz: usize = parse_num(path, size_lineno, dims[2])?;
        let mut triplets = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(path, lineno, "entry needs 'row col value'"));
            }
            let r: usize = parse_num(path, lineno, parts[0])?;
            let c: usize = parse_num(path, lineno, parts[1])?;
            let v: f64 = parse_num(path, lineno, parts[2])?;
            if r < 1 || r > rows || c < 1 || c > cols {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("index ({r}, {c}) outside declared {rows}x{cols}"),
                ));
            }
            triplets.push((r - 1, c - 1, v));
        }
        if triplets.len() != nnz {
            return Err(parse_err(
                path,
                size_lineno,
                format!("declared {nnz} entries, found {}", triplets.len()),
            ));
        }
        Matrix::from_triplets(rows, cols, triplets)
            .map_err(|e| parse_err(path, size_lineno, e.to_string()))
    } else {
        if dims.len() != 2 {
            return Err(parse_err(path, size_lineno, "size line needs 'rows cols'"));
        }
        let rows: usize = parse_num(path, size_lineno, dims[0])?;
        let cols: usize = parse_num(path, size_lineno, dims[1])?;
        let mut values = Vec::with_capacity(rows * cols);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            for tok in trimmed.split_whitespace() {
                values.push(parse_num::<f64>(path, lineno, tok)?);
            }
        }
        if values.len() != rows * cols {
            return Err(parse_err(
                path,
                size_lineno,
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        Matrix::from_dense(rows, cols, values)
            .map_err(|e| parse_err(path, size_lineno, e.to_string()))
    }
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, tok: &str) -> Result<T, CliError> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse '{tok}'")))
}

/// Write a matrix back out: sparse storage becomes coordinate format, dense
/// storage becomes array format. Values print in shortest round-trip form,
/// so read-after-write is entrywise identical.
pub fn write_matrix_market(path: &Path, m: &Matrix) -> Result<(), CliError> {
    let mut out = String::new();
    match m.storage() {
        Storage::Sparse(triplets) => {
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            out.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), triplets.len()));
            for &(r, c, v) in triplets {
                out.push_str(&format!("{} {} {}\n", r + 1, c + 1, v));
            }
        }
        Storage::Dense(values) => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
            for v in values {
                out.push_str(&format!("{v}\n"));
            }
        }
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

/// Plain-text vector, one value per line; blank lines and `#` comments skipped.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_num::<f64>(path, idx + 1, trimmed)?);
    }
    Ok(out)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let mut out = String::new();
    for x in v {
        out.push_str(&format!("{x}\n"));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
