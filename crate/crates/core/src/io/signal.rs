use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::Signal;

/// Writes `N<TAB>d` followed by `N` rows of `d` tab-separated reals, each
/// printed with 17 significant digits.
pub fn save_signal(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let path = path.as_ref();
    if signal.ncols() == 0 {
        return Err(Error::InvalidParameter("signal must have at least one column".into()));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}\t{}", signal.nrows(), signal.ncols())?;
        for row in signal.rows() {
            let line: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
            writeln!(w, "{}", line.join("\t"))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let dims: Vec<&str> = header.split('\t').collect();
    let parse_dim = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::parse(path, 1, format!("bad dimension `{s}`")));
    if dims.len() != 2 {
        return Err(Error::parse(path, 1, "header must be `N<TAB>d`"));
    }
    let (n, d) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    if d == 0 {
        return Err(Error::parse(path, 1, "signal must have at least one column"));
    }
    let mut values = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        if rows == n {
            return Err(Error::parse(path, lineno, format!("more than {n} rows")));
        }
        let before = values.len();
        for field in line.split('\t') {
            let v = parse_real(field).ok_or_else(|| Error::parse(path, lineno, format!("bad real `{field}`")))?;
            values.push(v);
        }
        if values.len() - before != d {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {d} values, found {}", values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(path, rows + 2, format!("expected {n} rows, found {rows}")));
    }
    Ok(Signal::from_shape_vec((n, d), values).expect("length checked"))
}

/// 17 significant digits: enough to round-trip any `f64`.
pub(crate) fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse_real(field: &str) -> Option<f64> {
    let v = field.trim().parse::<f64>().ok()?;
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.sig");
        let mut state = 0x9e3779b97f4a7c15u64;
        let x = Signal::from_shape_fn((10, 3), |_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            f64::from_bits(state >> 2) * if state & 1 == 0 { 1.0 } else { -1.0 }
        });
        save_signal(&path, &x).unwrap();
        let y = load_signal(&path).unwrap();
        assert!(x.iter().zip(y.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn empty_columns_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.sig");
        assert!(save_signal(&path, &Signal::zeros((3, 0))).is_err());
        fs::write(&path, "3\t0\n").unwrap();
        assert!(load_signal(&path).is_err());
    }

    #[test]
    fn header_must_match_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.sig");
        fs::write(&path, "2\t2\n1\t2\n").unwrap();
        assert!(matches!(load_signal(&path), Err(Error::Parse { .. })));
        fs::write(&path, "1\t2\n1\t2\n3\t4\n").unwrap();
        assert!(matches!(load_signal(&path), Err(Error::Parse { line: 3, .. })));
        fs::write(&path, "1\t2\n1\n").unwrap();
        assert!(matches!(load_signal(&path), Err(Error::Parse { line: 2, .. })));
    }
}
