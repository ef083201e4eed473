//! Tabulated right-hand sides.
//!
//! One node per line, fields separated by whitespace or commas, `#` starts a
//! comment:
//!
//! ```text
//! # theta  phi  value        (full S² grid)
//! 0.0490873852 0.0490873852 3.62686
//! # theta  value             (axisymmetric grid)
//! 0.0061359232 3.62686
//! ```
//!
//! Every grid node must appear exactly once; the angles must match the node
//! centres to `1e-6` rad. Row order is free.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::sphere_grid::{GridMode, ScalarField, SphereGrid};

const ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub line: usize,
    pub theta: f64,
    pub phi: Option<f64>,
    pub value: f64,
}

fn table_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("table line {line}: {msg}"))
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 && fields.len() != 3 {
            return Err(table_err(
                line,
                format!("expected 2 or 3 fields, found {}", fields.len()),
            ));
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(table_err(line, "column count changes"));
        }
        let nums = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| table_err(line, format!("'{f}' is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (theta, phi, value) = match nums[..] {
            [t, v] => (t, None, v),
            [t, p, v] => (t, Some(p), v),
            _ => unreachable!(),
        };
        rows.push(TableRow {
            line,
            theta,
            phi,
            value,
        });
    }
    if rows.is_empty() {
        return Err(Error::Config("table has no data rows".into()));
    }
    Ok(rows)
}

/// Places every row on its grid node.
pub fn table_to_field(rows: &[TableRow], grid: &SphereGrid) -> Result<ScalarField> {
    let (ht, hp) = grid.spacing();
    let mut out: Vec<Option<f64>> = vec![None; grid.len()];
    for row in rows {
        let i = (row.theta / ht - 0.5).round();
        if !(0.0..grid.n_theta() as f64).contains(&i) {
            return Err(table_err(row.line, format!("theta = {} is off the grid", row.theta)));
        }
        let i = i as usize;
        let j = match (grid.mode(), row.phi) {
            (GridMode::Axisymmetric, None) => 0,
            (GridMode::FullS2, Some(phi)) => {
                let jf = (phi.rem_euclid(TAU) / hp).round() as usize % grid.n_phi();
                let centre = grid.phi()[grid.node(i, jf)];
                let d = (phi - centre).rem_euclid(TAU);
                if d.min(TAU - d) > ANGLE_TOL {
                    return Err(table_err(row.line, format!("phi = {phi} is not a node centre")));
                }
                jf
            }
            (GridMode::Axisymmetric, Some(_)) => {
                return Err(table_err(row.line, "axisymmetric tables have no phi column"))
            }
            (GridMode::FullS2, None) => return Err(table_err(row.line, "full S² tables need a phi column")),
        };
        let node = grid.node(i, j);
        if (grid.theta()[node] - row.theta).abs() > ANGLE_TOL {
            return Err(table_err(
                row.line,
                format!("theta = {} is not a node centre", row.theta),
            ));
        }
        if out[node].replace(row.value).is_some() {
            return Err(table_err(row.line, "node listed twice"));
        }
    }
    out.iter()
        .enumerate()
        .map(|(node, v)| {
            v.ok_or_else(|| {
                Error::Config(format!(
                    "table misses node at theta = {}, phi = {}",
                    grid.theta()[node],
                    grid.phi()[node]
                ))
            })
        })
        .collect()
}

/// Serialises a field in the format [`parse_table`] reads.
pub fn write_table(grid: &SphereGrid, values: &[f64]) -> String {
    let mut s = String::new();
    for node in 0..grid.len() {
        match grid.mode() {
            GridMode::FullS2 => s += &format!("{:?} {:?} {:?}\n", grid.theta()[node], grid.phi()[node], values[node]),
            GridMode::Axisymmetric => s += &format!("{:?} {:?}\n", grid.theta()[node], values[node]),
        }
    }
    s
}
