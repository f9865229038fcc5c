//! CSV and JSON table files with JSON metadata sidecars.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use hopfield_core::experiments::ResultTable;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Name of the per-row failure column in sweep tables.
pub const ERROR_COLUMN: &str = "error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Shortest decimal string that parses back to exactly `x`.
///
/// Magnitudes outside `[1e-5, 1e16)` use exponent notation to keep fields short.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Plain data of a table file: what a reader recovers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableData {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<Vec<Option<String>>>,
}

impl TableData {
    pub fn from_table(t: &ResultTable) -> Self {
        TableData {
            columns: t.columns.iter().map(|c| c.name.clone()).collect(),
            rows: t.rows.clone(),
            errors: t.row_errors.clone(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Undefined values become empty fields.
    pub fn write_csv(&self, w: impl Write) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = self.columns.clone();
        if self.errors.is_some() {
            header.push(ERROR_COLUMN.into());
        }
        out.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.map(format_float).unwrap_or_default()).collect();
            if let Some(errs) = &self.errors {
                rec.push(errs[i].clone().unwrap_or_default());
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read) -> CliResult<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let mut columns: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let has_errors = columns.last().is_some_and(|c| c == ERROR_COLUMN);
        if has_errors {
            columns.pop();
        }
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .take(columns.len())
                .map(|f| match f {
                    "" => Ok(None),
                    s => s
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|e| CliError::Config(format!("bad number `{s}`: {e}"))),
                })
                .collect::<CliResult<Vec<_>>>()?;
            if has_errors {
                errors.push(rec.get(columns.len()).filter(|s| !s.is_empty()).map(str::to_string));
            }
            rows.push(row);
        }
        Ok(TableData {
            columns,
            rows,
            errors: has_errors.then_some(errors),
        })
    }
}

fn io(p: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", p.display()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

/// Sidecar contents: provenance for one written table file.
#[derive(Serialize)]
struct Sidecar<'a> {
    file: String,
    format: &'static str,
    rows: usize,
    columns: &'a [hopfield_core::experiments::Column],
    metadata: &'a hopfield_core::experiments::TableMetadata,
}

/// File stem for a table, restricted to portable characters.
fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() { "table".into() } else { s }
}

/// Writes `<dir>/<name>.<ext>` and `<dir>/<name>.<ext>.meta.json`, returning both paths.
pub fn write_table(table: &ResultTable, dir: &Path, format: Format) -> CliResult<[PathBuf; 2]> {
    if !table.check_consistent() {
        return Err(CliError::Core(hopfield_core::Error::Numerical(format!(
            "table `{}` has non-finite or ragged rows",
            table.metadata.scenario
        ))));
    }
    fs::create_dir_all(dir).map_err(io(dir))?;
    let data_path = dir.join(format!("{}.{}", file_stem(&table.metadata.scenario), format.extension()));
    let data = TableData::from_table(table);
    let file = fs::File::create(&data_path).map_err(io(&data_path))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        Format::Csv => data.write_csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer(&mut w, &data).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(w).map_err(io(&data_path))?;
        }
    }
    w.flush().map_err(io(&data_path))?;

    let mut meta_path = data_path.clone().into_os_string();
    meta_path.push(".meta.json");
    let meta_path = PathBuf::from(meta_path);
    let sidecar = Sidecar {
        file: data_path.file_name().expect("file name").to_string_lossy().into_owned(),
        format: format.extension(),
        rows: table.rows.len(),
        columns: &table.columns,
        metadata: &table.metadata,
    };
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&meta_path, text + "\n").map_err(io(&meta_path))?;
    Ok([data_path, meta_path])
}
