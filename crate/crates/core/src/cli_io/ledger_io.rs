//! Ledger serialization: CSV for plotting, JSON for programs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::{EnergyLedger, LedgerRow, LEDGER_COLUMNS};

use super::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LedgerFormat {
    Csv,
    Json,
}

const COLUMN_DOCS: [&str; 9] = [
    "t: time",
    "h2: homogeneous H^2 semi-norm of f",
    "h52: homogeneous H^{5/2} semi-norm of f",
    "lipschitz: K = max |grad f| on the grid",
    "d_of_t: D(t) = int_0^t h52^2 ds (trapezoid over every step)",
    "de_dt: d/dt h2^2 by three-point differences of the reported values",
    "dissipation_budget: 1/2 (1 + K^2)^{-3/2} h52^2",
    "energy_residual: de_dt + h52^2 (1 + K^2)^{-3/2} - C_e h52^2 (h2 + h2^2)",
    "slope_residual: K^2 - K(0)^2 - C_s D(t)",
];

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ledger_csv(ledger: &EnergyLedger) -> String {
    let mut out = String::from("# muskat energy ledger\n");
    for doc in COLUMN_DOCS {
        out.push_str("# ");
        out.push_str(doc);
        out.push('\n');
    }
    out.push_str(&format!("# C_e = {}\n# C_s = {}\n", fmt17(ledger.energy_c_fit), fmt17(ledger.slope_c_fit)));
    if let Some(reason) = &ledger.abort {
        out.push_str(&format!("# aborted: {reason}\n"));
    }
    out.push_str(&LEDGER_COLUMNS.join(","));
    out.push('\n');
    for row in &ledger.rows {
        let cells: Vec<String> = row.values().iter().map(|v| fmt17(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses the rows of [`ledger_csv`] output (comments skipped).
pub fn parse_ledger_csv(text: &str) -> Result<Vec<LedgerRow>> {
    let bad = |line: usize, m: String| Error::LedgerParse(format!("CSV line {line}: {m}"));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let Some((i, header)) = lines.next() else {
        return Err(bad(0, "missing header".into()));
    };
    if header.split(',').ne(LEDGER_COLUMNS) {
        return Err(bad(i + 1, format!("unexpected header `{header}`")));
    }
    lines
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != LEDGER_COLUMNS.len() {
                return Err(bad(i + 1, format!("{} cells", cells.len())));
            }
            let mut v = [0.0; 9];
            for (slot, cell) in v.iter_mut().zip(cells) {
                *slot = cell.trim().parse().map_err(|e| bad(i + 1, format!("`{cell}`: {e}")))?;
            }
            Ok(LedgerRow::from_values(v))
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct LedgerJson {
    columns: Vec<String>,
    energy_c_fit: f64,
    slope_c_fit: f64,
    abort: Option<String>,
    steps: usize,
    rows: Vec<[f64; 9]>,
}

pub fn ledger_json(ledger: &EnergyLedger) -> String {
    let doc = LedgerJson {
        columns: LEDGER_COLUMNS.iter().map(|c| c.to_string()).collect(),
        energy_c_fit: ledger.energy_c_fit,
        slope_c_fit: ledger.slope_c_fit,
        abort: ledger.abort.clone(),
        steps: ledger.dt_history.len(),
        rows: ledger.rows.iter().map(|r| r.values()).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("ledger serializes")
}

pub fn parse_ledger_json(text: &str) -> Result<Vec<LedgerRow>> {
    let doc: LedgerJson = serde_json::from_str(text).map_err(|e| Error::LedgerParse(format!("JSON: {e}")))?;
    Ok(doc.rows.into_iter().map(LedgerRow::from_values).collect())
}

/// Writes `<stem>.csv` and/or `<stem>.json` into `dir`.
pub fn emit_ledger(ledger: &EnergyLedger, dir: &Path, stem: &str, formats: &[LedgerFormat]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for format in formats {
        let (ext, text) = match format {
            LedgerFormat::Csv => ("csv", ledger_csv(ledger)),
            LedgerFormat::Json => ("json", ledger_json(ledger)),
        };
        write_atomic(&dir.join(format!("{stem}.{ext}")), text.as_bytes())?;
    }
    Ok(())
}
