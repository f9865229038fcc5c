//! Column-oriented result tables with provenance metadata.

use serde::Serialize;

use super::config::{Backend, ScenarioConfig};

/// One table column. All quantities are dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
    /// Backend that produced the column, if any.
    pub backend: Option<Backend>,
}

impl Column {
    pub fn new(name: impl Into<String>, backend: Option<Backend>) -> Self {
        Column {
            name: name.into(),
            unit: "dimensionless",
            backend,
        }
    }
}

/// Truncation actually used by a Fock-space backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationRecord {
    pub backend: Backend,
    pub n_matter_max: usize,
    pub n_photon_max: usize,
    pub leak_tolerance: f64,
    pub automatic: bool,
}

/// Named scalar diagnostic such as a norm drift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMetadata {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub truncations: Vec<TruncationRecord>,
    pub tolerances: Vec<Diagnostic>,
    pub diagnostics: Vec<Diagnostic>,
    pub code_version: &'static str,
    pub determinism: &'static str,
}

impl TableMetadata {
    pub fn new(config: &ScenarioConfig) -> Self {
        TableMetadata {
            scenario: config.name.clone(),
            config: config.clone(),
            truncations: Vec::new(),
            tolerances: Vec::new(),
            diagnostics: Vec::new(),
            code_version: env!("CARGO_PKG_VERSION"),
            determinism: "no random numbers are drawn; identical configurations give bit-identical tables",
        }
    }

    pub fn diagnostic(&mut self, name: impl Into<String>, value: f64) {
        self.diagnostics.push(Diagnostic {
            name: name.into(),
            value,
        });
    }

    pub fn tolerance(&mut self, name: impl Into<String>, value: f64) {
        self.tolerances.push(Diagnostic {
            name: name.into(),
            value,
        });
    }
}

/// Row-major numeric data. `None` marks an undefined value, such as a Mandel
/// parameter at zero occupation or a failed sweep row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Option<f64>>>,
    /// Per-row failure messages; present for sweeps only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_errors: Option<Vec<Option<String>>>,
    pub metadata: TableMetadata,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>, metadata: TableMetadata) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
            row_errors: None,
            metadata,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of a column, `None` where undefined.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Values of a column that must be fully defined.
    pub fn column_values(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.into_iter().collect()
    }

    pub fn push_row(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Every cell is finite or explicitly undefined, and row widths match.
    pub fn check_consistent(&self) -> bool {
        self.rows.iter().all(|r| {
            r.len() == self.columns.len() && r.iter().all(|v| v.is_none_or(|x| x.is_finite()))
        }) && self
            .row_errors
            .as_ref()
            .is_none_or(|e| e.len() == self.rows.len())
    }
}
