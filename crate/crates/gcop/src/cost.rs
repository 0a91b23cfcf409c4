//! Cost ledgers and the net-utility objective.
//!
//! Charges are exact decimals; a ledger total is the exact sum of its
//! entry charges and is independent of append order. Task values stay in
//! floating point; only billing is decimal.

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One metered charge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub unit_count: u64,
    /// Price per single unit.
    pub unit_price: Decimal,
    pub charge: Decimal,
}

impl LedgerEntry {
    /// Entry whose charge is exactly `unit_count * unit_price`.
    pub fn metered(label: impl Into<String>, unit_count: u64, unit_price: Decimal) -> Self {
        let charge = Decimal::from(unit_count) * unit_price;
        Self { label: label.into(), unit_count, unit_price, charge }
    }
}

/// Append-only ledger with an exact running total.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CostLedger {
    entries: Vec<LedgerEntry>,
    total: Decimal,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, entry: LedgerEntry) {
        self.total += entry.charge;
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> Decimal {
        self.total
    }

    pub fn total_f64(&self) -> f64 {
        self.total.to_f64().unwrap_or(f64::NAN)
    }

    /// Recomputes the total from the entries; equals `total()` exactly.
    pub fn recompute_total(&self) -> Decimal {
        self.entries.iter().map(|e| e.charge).sum()
    }

    /// Writes entries as CSV with the header
    /// `label,unit_count,unit_price,charge` plus a trailing total row.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "label,unit_count,unit_price,charge")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{}", e.label, e.unit_count, e.unit_price, e.charge)?;
        }
        writeln!(w, "total,,,{}", self.total)?;
        Ok(())
    }
}

/// Net utility: `value - lambda * cost`, with the inputs echoed for audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub value: f64,
    pub cost: f64,
    pub lambda: f64,
    pub net_utility: f64,
}

/// Builds a [`UtilityReport`]. `lambda` must be a finite non-negative real.
pub fn net_utility(value: f64, cost: f64, lambda: f64) -> Result<UtilityReport> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(UtilityReport { value, cost, lambda, net_utility: value - lambda * cost })
}
