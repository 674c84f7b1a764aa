//! CSV and JSON forms of a [`PathEnsemble`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{PathEnsemble, TimeGrid};
use crate::error::{Error, Result};
use crate::format::{parse_f64, sig17};

/// Generator label given to ensembles read back from CSV, which carries no
/// provenance.
pub const EXTERNAL_GENERATOR: &str = "external";

impl PathEnsemble {
    /// Header `t_0,…,t_N`, then one row per path; 17 significant digits,
    /// LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_row(&mut out, self.grid().points());
        for p in self.paths() {
            write_row(&mut out, p);
        }
        out
    }

    /// Reads the CSV form. Provenance is not part of the format, so the result
    /// has seed 0, generator [`EXTERNAL_GENERATOR`] and no parameters.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, &str)> = text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .collect();
        // trailing blank lines are tolerated, interior ones are not
        while rows.last().is_some_and(|(_, l)| l.trim().is_empty()) {
            rows.pop();
        }
        let Some(&(_, header)) = rows.first() else {
            return Err(Error::parse(1, "empty input: expected a header of grid times"));
        };
        let points = parse_row(1, header)?;
        let grid = TimeGrid::from_points(points).map_err(|e| Error::parse(1, e.to_string()))?;
        let width = grid.len();
        let mut values = Vec::with_capacity((rows.len() - 1) * width);
        for &(line, row) in &rows[1..] {
            let parsed = parse_row(line, row)?;
            if parsed.len() != width {
                return Err(Error::parse(
                    line,
                    format!("expected {width} fields, found {}", parsed.len()),
                ));
            }
            if let Some(j) = parsed.iter().position(|v| !v.is_finite()) {
                return Err(Error::parse(line, format!("non-finite value in field {}", j + 1)));
            }
            values.extend(parsed);
        }
        PathEnsemble::from_parts(grid, values, 0, EXTERNAL_GENERATOR.to_string(), BTreeMap::new())
    }

    /// The envelope `{generator_id, seed, params, grid, values}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble values are finite")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }
}

fn write_row(out: &mut String, row: &[f64]) {
    for (j, x) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}", sig17(*x));
    }
    out.push('\n');
}

fn parse_row(line: usize, row: &str) -> Result<Vec<f64>> {
    row.split(',')
        .enumerate()
        .map(|(j, field)| {
            parse_f64(field)
                .ok_or_else(|| Error::parse(line, format!("field {} is not a number: {field:?}", j + 1)))
        })
        .collect()
}
