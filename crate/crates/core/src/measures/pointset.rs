//! Plain-text point-set files.
//!
//! ```text
//! dim=2,domain=unit
//! 0.5,0.3333333333333333
//! 0.25,0.6666666666666666
//! ```
//!
//! Each row holds `dim` coordinates, optionally followed by a weight. Either
//! every row carries a weight or none does (equal weights `1/n`).

use std::io::{BufRead, Write};

use super::{DiscreteMeasure, Domain};
use crate::error::{Error, Result};

pub fn read_pointset<R: BufRead>(reader: R) -> Result<DiscreteMeasure> {
    let mut lines = reader
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.trim_start().starts_with('#')));
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty point-set file".into()))?;
    let (dim, domain) = parse_header(&header?)?;

    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut weighted: Option<bool> = None;
    for (lineno, line) in lines {
        let line = line?;
        let fields = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: `{}`: {e}", lineno + 1, f.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        let has_weight = match fields.len() {
            n if n == dim => false,
            n if n == dim + 1 => true,
            n => {
                return Err(Error::Parse(format!(
                    "line {}: expected {dim} or {} fields, found {n}",
                    lineno + 1,
                    dim + 1
                )))
            }
        };
        match weighted {
            None => weighted = Some(has_weight),
            Some(w) if w != has_weight => {
                return Err(Error::Parse(format!("line {}: inconsistent weight column", lineno + 1)))
            }
            _ => {}
        }
        coords.extend_from_slice(&fields[..dim]);
        if has_weight {
            weights.push(fields[dim]);
        }
    }
    if weighted == Some(true) {
        DiscreteMeasure::from_flat(dim, coords, weights, domain)
    } else {
        DiscreteMeasure::empirical_flat(dim, coords, domain)
    }
}

fn parse_header(line: &str) -> Result<(usize, Domain)> {
    let mut dim = None;
    let mut domain = None;
    for part in line.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field `{part}`")))?;
        match (k.trim(), v.trim()) {
            ("dim", v) => {
                dim = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("dim: {e}")))?)
            }
            ("domain", "unit") => domain = Some(Domain::UnitCube),
            ("domain", "real") => domain = Some(Domain::RealSpace),
            (k, v) => return Err(Error::Parse(format!("bad header field `{k}={v}`"))),
        }
    }
    match (dim, domain) {
        (Some(d), Some(dom)) if d > 0 => Ok((d, dom)),
        _ => Err(Error::Parse(format!("header must be `dim=<d>,domain=<unit|real>`, got `{line}`"))),
    }
}

/// Writes a point set; the weight column is emitted only when weights are not all equal.
pub fn write_pointset<W: Write>(mut w: W, m: &DiscreteMeasure) -> Result<()> {
    let domain = match m.domain() {
        Domain::UnitCube => "unit",
        Domain::RealSpace => "real",
    };
    writeln!(w, "dim={},domain={domain}", m.dim())?;
    let equal = m.weights().windows(2).all(|p| p[0] == p[1]);
    for (x, wt) in m.points().zip(m.weights()) {
        let mut row = x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>();
        if !equal {
            row.push(format!("{wt:?}"));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
