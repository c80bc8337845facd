//! Dataset and losses-file formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use pbmin_core::{Dataset64, LossEntry, LossProfile64};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Svmlight,
    Csv,
}

impl Format {
    /// `.csv` means csv, anything else svmlight.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Svmlight,
        }
    }
}

/// Shape constraints imposed by an already-trained model.
#[derive(Debug, Clone, Default)]
pub struct ReadOptions<'a> {
    /// Pad every point to this dimension; indices beyond it are an error.
    pub dim: Option<usize>,
    /// Fixed class list; unknown labels are an error.
    pub classes: Option<&'a [String]>,
}

pub fn parse_dataset(path: &Path, format: Format) -> Result<Dataset64> {
    parse_dataset_with(path, format, &ReadOptions::default())
}

pub fn parse_dataset_with(path: &Path, format: Format, opts: &ReadOptions) -> Result<Dataset64> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (points, names) = match format {
        Format::Svmlight => parse_svmlight(&text, opts.dim).map_err(|m| CliError::data(path, m))?,
        Format::Csv => parse_csv(&text, opts.dim).map_err(|m| CliError::data(path, m))?,
    };
    if points.is_empty() {
        return Err(CliError::data(path, "no data rows"));
    }
    let data = match opts.classes {
        Some(classes) => Dataset64::with_classes(points, &names, classes),
        None => Dataset64::from_named(points, &names),
    };
    data.map_err(|e| CliError::data(path, e.to_string()))
}

fn finite(v: f64, line: usize) -> std::result::Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("line {line}: non-finite feature value {v}"))
    }
}

type Parsed = std::result::Result<(Vec<Vec<f64>>, Vec<String>), String>;

fn parse_svmlight(text: &str, dim: Option<usize>) -> Parsed {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut names = Vec::new();
    let mut max_index = 0;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("nonempty line");
        let mut row = Vec::new();
        let mut prev = 0;
        for tok in tokens {
            let (idx, val) =
                tok.split_once(':').ok_or_else(|| format!("line {line_no}: expected index:value, got {tok:?}"))?;
            if idx == "qid" {
                continue;
            }
            let idx: usize = idx.parse().map_err(|_| format!("line {line_no}: bad feature index {idx:?}"))?;
            if idx == 0 {
                return Err(format!("line {line_no}: feature indices are 1-based"));
            }
            if idx <= prev {
                return Err(format!("line {line_no}: feature indices must be strictly ascending"));
            }
            let val: f64 = val.parse().map_err(|_| format!("line {line_no}: bad feature value {val:?}"))?;
            row.push((idx, finite(val, line_no)?));
            prev = idx;
        }
        if let Some(d) = dim {
            if prev > d {
                return Err(format!("line {line_no}: feature index {prev} exceeds dimension {d}"));
            }
        }
        max_index = max_index.max(prev);
        sparse.push(row);
        names.push(label.to_string());
    }
    let d = dim.unwrap_or(max_index);
    let points = sparse
        .into_iter()
        .map(|row| {
            let mut dense = vec![0.0; d];
            for (i, v) in row {
                dense[i - 1] = v;
            }
            dense
        })
        .collect();
    Ok((points, names))
}

fn parse_csv(text: &str, dim: Option<usize>) -> Parsed {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| format!("header: {e}"))?.clone();
    let label_col =
        header.iter().position(|h| h.eq_ignore_ascii_case("label")).ok_or("header has no \"label\" column")?;
    let d = header.len() - 1;
    if let Some(want) = dim {
        if want != d {
            return Err(format!("{d} feature columns, expected {want}"));
        }
    }
    let mut points = Vec::new();
    let mut names = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line_no = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(format!("line {line_no}: {} fields, header has {}", rec.len(), header.len()));
        }
        let mut row = Vec::with_capacity(d);
        for (j, field) in rec.iter().enumerate() {
            if j == label_col {
                names.push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| format!("line {line_no}: bad feature value {field:?}"))?;
                row.push(finite(v, line_no)?);
            }
        }
        points.push(row);
    }
    Ok((points, names))
}

pub fn write_dataset(path: &Path, format: Format, data: &Dataset64) -> Result<()> {
    let mut out = Vec::new();
    match format {
        Format::Svmlight => write_svmlight(&mut out, data),
        Format::Csv => write_csv(&mut out, data),
    }
    .map_err(|e| CliError::io(path, e))?;
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Zeros are omitted except the last feature, which is always written so the
/// dimension survives a round trip.
pub fn write_svmlight(out: &mut impl Write, data: &Dataset64) -> std::io::Result<()> {
    for (i, p) in data.points().iter().enumerate() {
        write!(out, "{}", data.label_name(i))?;
        for (j, v) in p.iter().enumerate() {
            if *v != 0.0 || j + 1 == p.len() {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_csv(out: &mut impl Write, data: &Dataset64) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string()];
    header.extend((1..=data.d()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (i, p) in data.points().iter().enumerate() {
        let mut row = vec![data.label_name(i).to_string()];
        row.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

/// `loss[,multiplicity[,prior_mass]]` per line; `#` starts a comment. Prior
/// masses are per hypothesis and must be given on every line or none (none
/// means uniform over all hypotheses counting multiplicity).
pub fn parse_losses(path: &Path, n_eff: usize) -> Result<LossProfile64> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_losses_str(&text, n_eff).map_err(|m| CliError::data(path, m))
}

pub fn parse_losses_str(text: &str, n_eff: usize) -> std::result::Result<LossProfile64, String> {
    let mut rows: Vec<(f64, u64, Option<f64>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() > 3 {
            return Err(format!("line {line_no}: expected loss[,multiplicity[,prior_mass]]"));
        }
        let loss: f64 = match fields[0].parse() {
            Ok(v) => v,
            // tolerate a header row
            Err(_) if rows.is_empty() && k == 0 => continue,
            Err(_) => return Err(format!("line {line_no}: bad loss {:?}", fields[0])),
        };
        let mult = match fields.get(1) {
            Some(f) => f.parse().map_err(|_| format!("line {line_no}: bad multiplicity {f:?}"))?,
            None => 1,
        };
        let mass = match fields.get(2) {
            Some(f) => Some(f.parse().map_err(|_| format!("line {line_no}: bad prior mass {f:?}"))?),
            None => None,
        };
        rows.push((loss, mult, mass));
    }
    if rows.is_empty() {
        return Err("no losses".into());
    }
    let explicit = rows.iter().filter(|r| r.2.is_some()).count();
    let profile = if explicit == 0 {
        let pairs: Vec<(f64, u64)> = rows.iter().map(|r| (r.0, r.1)).collect();
        LossProfile64::uniform_compressed(&pairs, n_eff)
    } else if explicit == rows.len() {
        let entries = rows.iter().map(|&(l, m, p)| LossEntry::new(l, p.expect("checked"), m)).collect();
        LossProfile64::new(entries, n_eff)
    } else {
        return Err("prior masses must be given on every line or on none".into());
    };
    profile.map_err(|e| e.to_string())
}
