//! The `RFLD 1` text format for fields, and CSV output.
//!
//! ```text
//! RFLD 1
//! N m n L
//! v_0
//! v_1
//! ...
//! ```
//!
//! `m n^N` values follow the header, component-major and row-major within a
//! component. Values are written with 17 significant digits so that a read
//! after a write reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use polsym_core::{GridSpec, MultiField, ScalarField};

use crate::error::{Error, Result};

const MAGIC: &str = "RFLD 1";

pub fn format_field(u: &MultiField) -> String {
    let spec = u.spec();
    let mut s = String::with_capacity(26 * u.m() * spec.len() + 64);
    s.push_str(MAGIC);
    s.push('\n');
    let _ = writeln!(
        s,
        "{} {} {} {}",
        spec.dim(),
        u.m(),
        spec.points_per_axis(),
        spec.half_width()
    );
    for c in u.components() {
        for v in c.values() {
            let _ = writeln!(s, "{v:.16e}");
        }
    }
    s
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_field(text: &str) -> Result<MultiField> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        Some((_, l)) => return Err(parse_err(1, format!("expected magic line '{MAGIC}', found '{l}'"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let (hline, header) = lines.next().ok_or_else(|| parse_err(2, "missing header line"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(hline, "header must be 'N m n L'"));
    }
    let int = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(hline, format!("invalid {what} '{s}'")))
    };
    let dim = int(fields[0], "dimension")?;
    let m = int(fields[1], "component count")?;
    let n = int(fields[2], "point count")?;
    let half_width: f64 = fields[3]
        .parse()
        .map_err(|_| parse_err(hline, format!("invalid half-width '{}'", fields[3])))?;
    if m == 0 {
        return Err(parse_err(hline, "component count must be at least 1"));
    }
    let spec = GridSpec::new(dim, n, half_width).map_err(|e| parse_err(hline, e.to_string()))?;

    let expected = m * spec.len();
    let mut values = Vec::with_capacity(expected);
    let mut last_line = hline;
    for (ln, l) in lines {
        last_line = ln;
        for tok in l.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(ln, format!("invalid number '{tok}'")))?;
            if !v.is_finite() {
                return Err(parse_err(ln, format!("non-finite value '{tok}'")));
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(parse_err(
            last_line,
            format!("expected {expected} values, got {}", values.len()),
        ));
    }
    let comps = values
        .chunks(spec.len())
        .map(|c| ScalarField::new(spec, c.to_vec()))
        .collect::<polsym_core::Result<Vec<_>>>()?;
    Ok(MultiField::new(comps)?)
}

pub fn write_field(path: &Path, u: &MultiField) -> Result<()> {
    fs::write(path, format_field(u)).map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<MultiField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text)
}

/// Writes `body` behind a `#`-prefixed provenance line carrying a timestamp.
/// Tools comparing runs skip lines starting with `#`.
pub fn write_csv(path: &Path, body: &str) -> Result<()> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = format!(
        "# polsym {} unix_time={secs}\n{body}",
        env!("CARGO_PKG_VERSION")
    );
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// File contents without `#` lines.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MultiField {
        let spec = GridSpec::new(2, 3, 1.5).unwrap();
        let a = ScalarField::from_fn(spec, |x| (0.1 + x[0] * x[1]).abs() / 3.0).unwrap();
        let b = ScalarField::from_fn(spec, |x| std::f64::consts::PI * x[0] + 1e-300).unwrap();
        MultiField::new(vec![a, b]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let u = sample();
        let back = parse_field(&format_field(&u)).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn layout() {
        let text = format_field(&sample());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("RFLD 1"));
        assert_eq!(lines.next(), Some("2 2 3 1.5"));
        assert_eq!(lines.count(), 18);
    }

    #[test]
    fn bad_magic() {
        let err = parse_field("RFLD 2\n1 1 3 1\n0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn count_mismatch_message() {
        let err = parse_field("RFLD 1\n1 1 5 2\n0 1 2\n3\n").unwrap_err();
        assert_eq!(err.to_string(), "line 4: expected 5 values, got 4");
    }

    #[test]
    fn non_finite_and_garbage_values() {
        let err = parse_field("RFLD 1\n1 1 3 1\n0\nnan\n0\n").unwrap_err();
        assert_eq!(err.to_string(), "line 4: non-finite value 'nan'");
        let err = parse_field("RFLD 1\n1 1 3 1\n0\nx\n0\n").unwrap_err();
        assert_eq!(err.to_string(), "line 4: invalid number 'x'");
        let err = parse_field("RFLD 1\n4 1 3 1\n").unwrap_err();
        assert!(err.to_string().contains("dim must be 1, 2, or 3"));
    }

    #[test]
    fn csv_header_is_stripped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, "a,b\n1,2\n").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# polsym"));
        assert_eq!(strip_comments(&text), "a,b\n1,2\n");
    }
}
