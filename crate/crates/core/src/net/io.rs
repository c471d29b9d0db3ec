//! Plain-text net files.
//!
//! ```text
//! #deltanet v1 group=SL2R delta=3.9062500000000000e-3 n=2
//! SL2R <8 matrix entries, row major, (re, im) pairs>
//! ```

use super::{build_net_from_coords, grid::coords_of, DeltaNet};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupTag, C64};
use nalgebra::Matrix2;
use std::io::{BufRead, Write};

pub fn write_net<W: Write>(net: &DeltaNet, mut out: W) -> Result<()> {
    writeln!(
        out,
        "#deltanet v1 group={} delta={:.16e} n={}",
        net.tag(),
        net.delta(),
        net.len()
    )?;
    for g in net.points() {
        let mut line = net.tag().name().to_string();
        for e in g.entries() {
            line.push_str(&format!(" {e:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn header_field<'a>(fields: &[&'a str], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("net header lacks `{key}`")))
}

/// Reads a net written by [`write_net`]. Points must be separated at the
/// declared scale.
pub fn read_net<R: BufRead>(input: R) -> Result<DeltaNet> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty net file".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&"#deltanet") || fields.get(1) != Some(&"v1") {
        return Err(Error::Parse(format!("bad net header `{header}`")));
    }
    let tag = GroupTag::parse(header_field(&fields, "group")?)?;
    let delta: f64 = header_field(&fields, "delta")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad delta: {e}")))?;
    let n: usize = header_field(&fields, "n")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad count: {e}")))?;
    let mut coords = Vec::with_capacity(n);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 9 || GroupTag::parse(parts[0])? != tag {
            return Err(Error::Parse(format!("line {}: expected tag and 8 entries", lineno + 2)));
        }
        let mut e = [0.0; 8];
        for (k, p) in parts[1..].iter().enumerate() {
            e[k] = p
                .parse()
                .map_err(|err| Error::Parse(format!("line {}: {err}", lineno + 2)))?;
        }
        let m = Matrix2::new(
            C64::new(e[0], e[1]),
            C64::new(e[2], e[3]),
            C64::new(e[4], e[5]),
            C64::new(e[6], e[7]),
        );
        let g = GroupElement::from_matrix(tag, m)?;
        coords.push(coords_of(&g).ok_or(Error::OutsideChart { norm: f64::INFINITY })?);
    }
    if coords.len() != n {
        return Err(Error::Parse(format!("header declares {n} points, found {}", coords.len())));
    }
    // Printing may move points by an ulp, so compare at a hair below delta.
    let net = build_net_from_coords(tag, coords, delta * (1.0 - 1e-9))?;
    if net.len() != n {
        return Err(Error::Parse(format!("points are not {delta}-separated")));
    }
    Ok(DeltaNet { delta, ..net })
}
