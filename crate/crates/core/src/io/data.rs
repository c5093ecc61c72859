use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problems::Dataset;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    #[default]
    Libsvm,
    Csv,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "libsvm" => Ok(DataFormat::Libsvm),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::invalid(format!("unknown data format `{other}` (expected libsvm or csv)"))),
        }
    }
}

fn parse_label(token: &str, line: usize, map_zero_one: bool) -> Result<f64> {
    let bad = || Error::Label {
        line,
        label: token.to_string(),
    };
    let v: f64 = token.parse().map_err(|_| bad())?;
    if v == 1.0 || v == -1.0 {
        Ok(v)
    } else if v == 0.0 && map_zero_one {
        Ok(-1.0)
    } else {
        Err(bad())
    }
}

fn parse_real(token: &str, line: usize, what: &str) -> Result<f64> {
    token.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
        line,
        message: format!("bad {what} `{token}`"),
    })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn assemble(rows: Vec<Vec<f64>>, labels: Vec<f64>, d: usize) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no samples in input".into(),
        });
    }
    if d == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "no features in input".into(),
        });
    }
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * d);
    for mut r in rows {
        r.resize(d, 0.0);
        flat.extend(r);
    }
    Dataset::binary(Matrix::from_vec(n, d, flat)?, labels)
}

/// Dense dataset from `label idx:val …` lines with 1-based, strictly
/// increasing indices. With `map_zero_one`, label `0` becomes `−1`.
pub fn parse_libsvm(text: &str, map_zero_one: bool) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut d = 0;
    for (line, content) in data_lines(text) {
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        labels.push(parse_label(label, line, map_zero_one)?);
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected idx:val, found `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad feature index `{idx}`"),
            })?;
            if idx == 0 || idx <= last {
                return Err(Error::Parse {
                    line,
                    message: format!("feature index {idx} is not 1-based and strictly increasing"),
                });
            }
            row.resize(idx, 0.0);
            row[idx - 1] = parse_real(val, line, "feature value")?;
            last = idx;
        }
        d = d.max(last);
        rows.push(row);
    }
    assemble(rows, labels, d)
}

/// One line per sample: `label,x1,…,xd`.
pub fn parse_csv(text: &str, map_zero_one: bool) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut d = None;
    for (line, content) in data_lines(text) {
        let mut fields = content.split(',').map(str::trim);
        let label = fields.next().expect("split yields a first field");
        labels.push(parse_label(label, line, map_zero_one)?);
        let row = fields.map(|f| parse_real(f, line, "feature value")).collect::<Result<Vec<f64>>>()?;
        match d {
            None => d = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} features, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    assemble(rows, labels, d.unwrap_or(0))
}

fn binary_labels(data: &Dataset) -> Result<&[f64]> {
    data.binary_labels()
        .ok_or_else(|| Error::unsupported("only binary datasets can be written"))
}

fn label_text(y: f64) -> &'static str {
    if y > 0.0 {
        "+1"
    } else {
        "-1"
    }
}

/// Zero entries are omitted.
pub fn format_libsvm(data: &Dataset) -> Result<String> {
    let y = binary_labels(data)?;
    let mut out = String::new();
    for (i, yi) in y.iter().enumerate() {
        out.push_str(label_text(*yi));
        for (j, v) in data.row(i).iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{}", j + 1, fmt_real(*v)).expect("writing to a String");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn format_csv(data: &Dataset) -> Result<String> {
    let y = binary_labels(data)?;
    let mut out = String::new();
    for (i, yi) in y.iter().enumerate() {
        out.push_str(label_text(*yi));
        for v in data.row(i) {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read_dataset(path: &Path, format: DataFormat, map_zero_one: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    match format {
        DataFormat::Libsvm => parse_libsvm(&text, map_zero_one),
        DataFormat::Csv => parse_csv(&text, map_zero_one),
    }
}

pub fn write_dataset(data: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let text = match format {
        DataFormat::Libsvm => format_libsvm(data)?,
        DataFormat::Csv => format_csv(data)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}
