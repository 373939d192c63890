//! Pass/fail records shared by the certificate checks and theorem verifiers.

use serde::Serialize;

/// One checked quantity. Serializes as `{quantity, value, bound, pass}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl ReportRecord {
    /// Passes when `value <= bound`.
    pub fn at_most(quantity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(quantity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }

    /// Informational value; always passes.
    pub fn info(quantity: impl Into<String>, value: f64) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            bound: f64::INFINITY,
            pass: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Report {
    pub records: Vec<ReportRecord>,
}

impl Report {
    pub fn push(&mut self, record: ReportRecord) {
        self.records.push(record);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn get(&self, quantity: &str) -> Option<&ReportRecord> {
        self.records.iter().find(|r| r.quantity == quantity)
    }
}
