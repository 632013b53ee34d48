//! `PHD1` phase-diagram files: a line-oriented text header followed by the
//! value grid as little-endian `f64`, row-major with T as the slow axis.
//!
//! ```text
//! PHD1
//! version 1
//! n_sites 8
//! w_over_g 1
//! m_over_g 0
//! mu_over_g 0
//! rows 48
//! cols 48
//! generator nniqs-core 0.1.0
//! t_values 0.1 0.15106382978723404 ...
//! mu_values 0 0.029787234042553193 ...
//! end
//! <rows * cols * 8 bytes>
//! ```
//!
//! `mu_over_g` records the baseline chemical potential of the chain; the
//! actual value of each column is given by `mu_values`. Decimal axis values
//! use the shortest representation that round-trips exactly.

use std::fs;
use std::io::{BufRead, Cursor, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::phase::{AxisGrid, PhaseDiagram};
use crate::spin::ModelParams;

pub const MAGIC: &str = "PHD1";
pub const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn encode(diagram: &PhaseDiagram) -> Vec<u8> {
    let p = &diagram.params;
    let (rows, cols) = diagram.values.shape();
    let header = format!(
        "{MAGIC}\nversion {VERSION}\nn_sites {}\nw_over_g {}\nm_over_g {}\nmu_over_g {}\nrows {rows}\ncols {cols}\ngenerator {}\nt_values {}\nmu_values {}\nend\n",
        p.n_sites,
        p.w_over_g,
        p.m_over_g,
        p.mu_over_g,
        diagram.generator_version.replace('\n', " "),
        join(&diagram.axes.t_values),
        join(&diagram.axes.mu_values),
    );
    let mut out = header.into_bytes();
    out.reserve(rows * cols * 8);
    for v in diagram.values.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' ').or(if rest.is_empty() { Some("") } else { None }))
        .ok_or_else(|| Error::Format(format!("expected `{key}`, found `{line}`")))
}

fn parse<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::Format(format!("bad {what}: `{text}`")))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split_whitespace().map(|t| parse(t, what)).collect()
}

pub fn decode(bytes: &[u8]) -> Result<PhaseDiagram> {
    let mut cursor = Cursor::new(bytes);
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        let n = cursor.read_line(&mut line).map_err(|_| Error::Format("header is not valid UTF-8".into()))?;
        if n == 0 {
            return Err(Error::Format("truncated header".into()));
        }
        let line = line.trim_end_matches('\n').to_string();
        if lines.is_empty() && line != MAGIC {
            return Err(Error::Format(format!("unknown magic `{line}`")));
        }
        let done = line == "end";
        lines.push(line);
        if done {
            break;
        }
        if lines.len() > 32 {
            return Err(Error::Format("header has no `end` record".into()));
        }
    }
    if lines.len() != 12 {
        return Err(Error::Format(format!("expected 12 header records, found {}", lines.len())));
    }
    let version: u32 = parse(field(&lines[1], "version")?, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported PHD1 version {version}")));
    }
    let params = ModelParams {
        n_sites: parse(field(&lines[2], "n_sites")?, "n_sites")?,
        w_over_g: parse(field(&lines[3], "w_over_g")?, "w_over_g")?,
        m_over_g: parse(field(&lines[4], "m_over_g")?, "m_over_g")?,
        mu_over_g: parse(field(&lines[5], "mu_over_g")?, "mu_over_g")?,
    };
    params.validate()?;
    let rows: usize = parse(field(&lines[6], "rows")?, "rows")?;
    let cols: usize = parse(field(&lines[7], "cols")?, "cols")?;
    let generator = field(&lines[8], "generator")?.to_string();
    let t_values = parse_list(field(&lines[9], "t_values")?, "t value")?;
    let mu_values = parse_list(field(&lines[10], "mu_values")?, "mu value")?;
    if t_values.len() != rows || mu_values.len() != cols {
        return Err(Error::Format("axis lengths disagree with rows/cols".into()));
    }

    let mut payload = Vec::new();
    cursor.read_to_end(&mut payload).expect("reading from memory");
    if payload.len() != rows * cols * 8 {
        return Err(Error::Format(format!("payload has {} bytes, expected {}", payload.len(), rows * cols * 8)));
    }
    let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let mut diagram =
        PhaseDiagram::new(params, AxisGrid::new(t_values, mu_values)?, Grid::from_vec(rows, cols, data)?)?;
    diagram.generator_version = generator;
    Ok(diagram)
}

pub fn write(path: impl AsRef<Path>, diagram: &PhaseDiagram) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(diagram)).map_err(|e| Error::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<PhaseDiagram> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
