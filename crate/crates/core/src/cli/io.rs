//! Dataset CSV: header row `x1..xd,y[,split]`, lines starting with `#` are
//! header comments.

use std::fmt::Write as _;
use std::path::Path;

use crate::kernels::{Dataset, Points, Split};
use crate::{Error, Result};

/// Full-precision float formatting used in every output file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses dataset CSV text.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let d = cols.iter().take_while(|c| c.starts_with('x')).count();
    let bad_names: Vec<usize> = (0..d).filter(|&j| cols[j] != format!("x{}", j + 1)).collect();
    if d == 0 || !bad_names.is_empty() || cols.get(d) != Some(&"y") {
        let mut columns = bad_names;
        if columns.is_empty() {
            columns.push(d + 1);
        }
        return Err(Error::SchemaMismatch { columns, message: "expected header x1..xd,y[,split]".into() });
    }
    let has_split = match cols.get(d + 1) {
        None => false,
        Some(&"split") if cols.len() == d + 2 => true,
        Some(_) => {
            return Err(Error::SchemaMismatch {
                columns: (d + 2..=cols.len()).collect(),
                message: "unexpected trailing columns".into(),
            })
        }
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut split = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let want = d + 1 + has_split as usize;
        if rec.len() != want {
            return Err(Error::Parse { line, message: format!("expected {want} fields, found {}", rec.len()) });
        }
        for j in 0..=d {
            let v: f64 = rec[j]
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("column {} is not a number: '{}'", j + 1, &rec[j]) })?;
            if j < d {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
        if has_split {
            split.push(rec[d + 1].parse::<Split>().map_err(|e| Error::Parse { line, message: e.to_string() })?);
        }
    }
    if ys.is_empty() {
        return Err(Error::Parse { line: 1, message: "dataset has no rows".into() });
    }
    Dataset::new(Points::new(d, xs)?, ys, has_split.then_some(split))
}

pub fn read_dataset(path: &Path) -> Result<(Dataset, String)> {
    let text = std::fs::read_to_string(path)?;
    Ok((parse_dataset(&text)?, text))
}

/// Dataset rows as CSV (no header comment block).
pub fn dataset_csv(data: &Dataset) -> String {
    let d = data.x.dim();
    let mut s = String::new();
    let names: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    s.push_str(&names.join(","));
    s.push_str(",y");
    if data.split.is_some() {
        s.push_str(",split");
    }
    s.push('\n');
    for i in 0..data.len() {
        for v in data.x.row(i) {
            s.push_str(&fmt_f64(*v));
            s.push(',');
        }
        s.push_str(&fmt_f64(data.y[i]));
        if let Some(sp) = &data.split {
            let _ = write!(s, ",{}", sp[i].as_str());
        }
        s.push('\n');
    }
    s
}

/// Writes `text` to `path`, or stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x = Points::new(2, vec![0.1, 1.0 / 3.0, -2.5, 7e-12]).unwrap();
        let d = Dataset::new(x, vec![0.5, -1.25], Some(vec![Split::Train, Split::Test])).unwrap();
        let back = parse_dataset(&format!("# a comment\n{}", dataset_csv(&d))).unwrap();
        assert_eq!(back.x, d.x);
        assert_eq!(back.y, d.y);
        assert_eq!(back.split, d.split);
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = parse_dataset("x1,y\n0.5,1\n0.7,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(matches!(parse_dataset("a,b\n1,2\n"), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn split_is_optional() {
        let d = parse_dataset("x1,y\n0.5,1\n").unwrap();
        assert!(d.split.is_none());
    }
}
