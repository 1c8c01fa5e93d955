//! Fixed-column PDB reader for CA coordinates.
//!
//! Only `ATOM` records of the first model are read. When a residue carries
//! several alternate locations the first CA seen wins.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{Metric, PointSample};
use crate::error::{Error, Result};

/// Reads the 3-D coordinates of all CA atoms in file order.
pub fn load_calpha(path: impl AsRef<Path>) -> Result<PointSample> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let coords = parse_calpha(&text)?;
    if coords.is_empty() {
        return Err(Error::EmptyModel(path.display().to_string()));
    }
    PointSample::from_flat(coords, 3, Metric::Euclidean, 0)
}

/// Residue identity: chain, sequence number, insertion code.
type ResidueKey = (char, String, char);

pub(crate) fn parse_calpha(text: &str) -> Result<Vec<f64>> {
    let mut coords = Vec::new();
    let mut seen: HashSet<ResidueKey> = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let record = line.get(0..6).unwrap_or(line);
        if record.starts_with("ENDMDL") {
            break;
        }
        if record != "ATOM  " {
            continue;
        }
        let name = line.get(12..16).map(str::trim).unwrap_or("");
        if name != "CA" {
            continue;
        }
        let col = |i: usize| line.as_bytes().get(i).map(|&b| b as char).unwrap_or(' ');
        let key = (
            col(21),
            line.get(22..26).unwrap_or("").trim().to_string(),
            col(26),
        );
        if !seen.insert(key) {
            continue;
        }
        let field = |lo: usize, hi: usize| -> Result<f64> {
            let raw = line.get(lo..hi).ok_or_else(|| Error::Parse {
                line: lineno + 1,
                reason: "record too short for coordinates".into(),
            })?;
            raw.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                reason: format!("bad coordinate {raw:?}: {e}"),
            })
        };
        coords.push(field(30, 38)?);
        coords.push(field(38, 46)?);
        coords.push(field(46, 54)?);
    }
    Ok(coords)
}

/// Formats a CA record in PDB v3.3 column layout.
pub fn format_calpha_record(serial: usize, residue: usize, chain: char, xyz: [f64; 3]) -> String {
    format!(
        "ATOM  {serial:>5}  CA  ALA {chain}{residue:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C",
        xyz[0], xyz[1], xyz[2]
    )
}
