//! Raw tabular files to canonical dataset CSV.
//!
//! Schemas:
//! * `abalone`: 9 columns, column 1 is the sex code `M`/`F`/`I` which becomes
//!   the indicator triple `(1,0,0)`/`(0,1,0)`/`(0,0,1)`, columns 2–8 are
//!   features and column 9 (rings) is the response.
//! * `sarcos`: at least 22 columns, features 1–21 and torque in column 22.
//! * `numeric`: every column numeric, response column chosen by the caller
//!   (default last).
//! * `canonical`: an existing `x1..xd,y[,split]` file.

use rand::Rng as _;

use super::io::{fmt_f64, parse_dataset};
use crate::kernels::{Dataset, Points, Split};
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schema {
    Abalone,
    Sarcos,
    Numeric,
    Canonical,
}

impl std::str::FromStr for Schema {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abalone" => Ok(Schema::Abalone),
            "sarcos" => Ok(Schema::Sarcos),
            "numeric" => Ok(Schema::Numeric),
            "canonical" => Ok(Schema::Canonical),
            _ => Err(Error::Config(format!("unknown schema '{s}' (abalone, sarcos, numeric, canonical)"))),
        }
    }
}

impl std::fmt::Display for Schema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Schema::Abalone => "abalone",
            Schema::Sarcos => "sarcos",
            Schema::Numeric => "numeric",
            Schema::Canonical => "canonical",
        })
    }
}

/// Per-feature affine map `z = (x − center) / scale`. Columns outside
/// `columns` (the one-hot indicators) pass through unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub columns: Vec<usize>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Sample mean and standard deviation of each listed column; constant
    /// columns keep scale 1.
    pub fn fit(x: &Points, columns: Vec<usize>) -> Self {
        let n = x.len() as f64;
        let mut center = Vec::with_capacity(columns.len());
        let mut scale = Vec::with_capacity(columns.len());
        for &j in &columns {
            let mu = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            center.push(mu);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardization { columns, center, scale }
    }

    pub fn apply(&self, x: &Points) -> Points {
        self.map(x, |v, c, s| (v - c) / s)
    }

    pub fn invert(&self, x: &Points) -> Points {
        self.map(x, |v, c, s| v * s + c)
    }

    fn map(&self, x: &Points, f: impl Fn(f64, f64, f64) -> f64) -> Points {
        let d = x.dim();
        let mut data = x.as_slice().to_vec();
        for (k, &j) in self.columns.iter().enumerate() {
            for i in 0..x.len() {
                data[i * d + j] = f(data[i * d + j], self.center[k], self.scale[k]);
            }
        }
        Points::new(d, data).expect("same shape")
    }

    /// `key = value` header lines (full precision).
    pub fn header_lines(&self) -> Vec<String> {
        let join = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let cols: Vec<String> = self.columns.iter().map(|j| format!("x{}", j + 1)).collect();
        vec![
            format!("standardized = {}", cols.join(",")),
            format!("center = {}", join(&self.center)),
            format!("scale = {}", join(&self.scale)),
        ]
    }

    /// Inverse of [`Standardization::header_lines`].
    pub fn from_header(h: &std::collections::BTreeMap<String, String>) -> Result<Option<Self>> {
        let Some(cols) = h.get("standardized") else { return Ok(None) };
        let bad = |what: &str| Error::Config(format!("malformed '{what}' header line"));
        let columns = cols
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|c| c.trim().strip_prefix('x').and_then(|j| j.parse::<usize>().ok()).filter(|&j| j > 0).map(|j| j - 1))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("standardized"))?;
        let floats = |key: &str| -> Result<Vec<f64>> {
            h.get(key)
                .ok_or_else(|| bad(key))?
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad(key)))
                .collect()
        };
        let (center, scale) = (floats("center")?, floats("scale")?);
        if center.len() != columns.len() || scale.len() != columns.len() {
            return Err(bad("scale"));
        }
        Ok(Some(Standardization { columns, center, scale }))
    }
}

/// How to pick the test rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestRows {
    /// Keep any split already in the file (canonical), else all train.
    None,
    /// Each row independently with this probability, seeded.
    Fraction(f64, u64),
    /// The final `k` rows.
    Last(usize),
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub schema: Schema,
    /// 1-based response column for the numeric schema (default: last).
    pub response: Option<usize>,
    pub skip_header: bool,
    pub standardize: bool,
    pub test_rows: TestRows,
}

/// Splits raw text into rows of fields; commas if the first data line has
/// one, else runs of whitespace.
fn raw_rows(text: &str, skip_header: bool) -> Vec<(usize, Vec<String>)> {
    let lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut comma = None;
    for (i, l) in lines.skip(skip_header as usize) {
        let c = *comma.get_or_insert_with(|| l.contains(','));
        let fields = if c { l.split(',').map(|f| f.trim().to_string()).collect() } else { l.split_whitespace().map(String::from).collect() };
        rows.push((i + 1, fields));
    }
    rows
}

struct Table {
    n_cols: usize,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn new(text: &str, skip_header: bool, min_cols: usize, exact: bool) -> Result<Self> {
        let rows = raw_rows(text, skip_header);
        if rows.is_empty() {
            return Err(Error::Parse { line: 1, message: "no data rows".into() });
        }
        let n_cols = rows[0].1.len();
        if n_cols < min_cols || (exact && n_cols != min_cols) {
            let columns = if n_cols < min_cols { (n_cols + 1..=min_cols).collect() } else { (min_cols + 1..=n_cols).collect() };
            return Err(Error::SchemaMismatch { columns, message: format!("expected {min_cols} columns, found {n_cols}") });
        }
        if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::Parse { line: *line, message: format!("expected {n_cols} fields, found {}", r.len()) });
        }
        Ok(Table { n_cols, rows })
    }

    /// Parses the listed 0-based columns; every column holding a
    /// non-numeric value is reported at once.
    fn numeric(&self, cols: &[usize]) -> Result<Vec<Vec<f64>>> {
        let mut bad = std::collections::BTreeSet::new();
        let out: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|(_, r)| {
                cols.iter()
                    .map(|&j| {
                        r[j].parse::<f64>().ok().filter(|v| v.is_finite()).unwrap_or_else(|| {
                            bad.insert(j + 1);
                            f64::NAN
                        })
                    })
                    .collect()
            })
            .collect();
        if !bad.is_empty() {
            return Err(Error::SchemaMismatch { columns: bad.into_iter().collect(), message: "non-numeric values".into() });
        }
        Ok(out)
    }
}

/// Abalone sex code to indicator triple.
pub fn one_hot_sex(code: &str) -> Option<[f64; 3]> {
    match code {
        "M" => Some([1.0, 0.0, 0.0]),
        "F" => Some([0.0, 1.0, 0.0]),
        "I" => Some([0.0, 0.0, 1.0]),
        _ => None,
    }
}

/// Parses `text` under `opts.schema`, returning the canonical dataset and
/// the standardization applied (if any).
pub fn ingest(text: &str, opts: &IngestOptions) -> Result<(Dataset, Option<Standardization>)> {
    let (x, y, split, categorical) = match opts.schema {
        Schema::Canonical => {
            let d = parse_dataset(text)?;
            (d.x, d.y, d.split, 0)
        }
        Schema::Abalone => {
            let t = Table::new(text, opts.skip_header, 9, true)?;
            let num = t.numeric(&(1..9).collect::<Vec<_>>())?;
            let mut rows = Vec::with_capacity(num.len());
            for ((line, r), v) in t.rows.iter().zip(&num) {
                let oh = one_hot_sex(&r[0]).ok_or_else(|| Error::SchemaMismatch {
                    columns: vec![1],
                    message: format!("line {line}: sex code '{}' is not M, F or I", r[0]),
                })?;
                let mut row = oh.to_vec();
                row.extend_from_slice(&v[..7]);
                rows.push((row, v[7]));
            }
            let (xs, ys): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            (Points::from_rows(&xs)?, ys, None, 3)
        }
        Schema::Sarcos | Schema::Numeric => {
            let (t, resp, feats) = if opts.schema == Schema::Sarcos {
                (Table::new(text, opts.skip_header, 22, false)?, 21, (0..21).collect::<Vec<_>>())
            } else {
                let t = Table::new(text, opts.skip_header, 2, false)?;
                let resp = match opts.response {
                    None => t.n_cols - 1,
                    Some(c) if c >= 1 && c <= t.n_cols => c - 1,
                    Some(c) => {
                        return Err(Error::SchemaMismatch { columns: vec![c], message: format!("file has {} columns", t.n_cols) })
                    }
                };
                let feats = (0..t.n_cols).filter(|&j| j != resp).collect();
                (t, resp, feats)
            };
            let mut cols = feats.clone();
            cols.push(resp);
            let num = t.numeric(&cols)?;
            let d = feats.len();
            let xs: Vec<Vec<f64>> = num.iter().map(|r| r[..d].to_vec()).collect();
            let ys = num.iter().map(|r| r[d]).collect();
            (Points::from_rows(&xs)?, ys, None, 0)
        }
    };
    let std = opts.standardize.then(|| Standardization::fit(&x, (categorical..x.dim()).collect()));
    let x = match &std {
        Some(s) => s.apply(&x),
        None => x,
    };
    let n = y.len();
    let split = match opts.test_rows {
        TestRows::None => split.or_else(|| Some(vec![Split::Train; n])),
        TestRows::Fraction(p, seed) => {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("test fraction {p} must lie in [0, 1)")));
            }
            let mut g = rng::seeded(seed);
            Some((0..n).map(|_| if g.random::<f64>() < p { Split::Test } else { Split::Train }).collect())
        }
        TestRows::Last(k) => {
            if k >= n {
                return Err(Error::Config(format!("test_last = {k} leaves no training rows out of {n}")));
            }
            Some((0..n).map(|i| if i + k >= n { Split::Test } else { Split::Train }).collect())
        }
    };
    Ok((Dataset::new(x, y, split)?, std))
}
