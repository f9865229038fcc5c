//! TOML scenario files: a base table, optional `[[panel]]` variants and
//! `key=value` overrides.

use std::path::{Path, PathBuf};

use hopfield_core::experiments::ScenarioConfig;
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

/// A parsed file before defaults are applied.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    base: Table,
    panels: Vec<Table>,
}

/// One `--set path.to.field=value` override.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl std::str::FromStr for Override {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("override `{s}` must look like section.field=value"));
        let (key, raw) = s.split_once('=').ok_or_else(bad)?;
        let path: Vec<String> = key.trim().split('.').map(|p| p.trim().to_string()).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(bad());
        }
        let raw = raw.trim();
        // Bare words such as `rwa` are taken as strings.
        let value = toml::from_str::<Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        Ok(Override { path, value })
    }
}

impl Override {
    fn apply(&self, table: &mut Table) -> CliResult<()> {
        let (leaf, parents) = self.path.split_last().expect("non-empty path");
        let mut cur = table;
        for p in parents {
            let entry = cur.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
            cur = entry.as_table_mut().ok_or_else(|| {
                CliError::Config(format!("override `{}`: `{p}` is not a section", self.key()))
            })?;
        }
        cur.insert(leaf.clone(), self.value.clone());
        Ok(())
    }

    pub fn key(&self) -> String {
        self.path.join(".")
    }
}

/// Parses TOML text; syntax errors carry line and column.
pub fn parse_file(text: &str) -> CliResult<ScenarioFile> {
    let mut base: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    let panels = match base.remove("panel") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                Value::Table(t) if t.get("name").is_some_and(Value::is_str) => Ok(t),
                _ => Err(CliError::Config(format!("panel[{i}] must be a table with a string `name`"))),
            })
            .collect::<CliResult<_>>()?,
        Some(_) => return Err(CliError::Config("`panel` must be an array of tables ([[panel]])".into())),
    };
    Ok(ScenarioFile { base, panels })
}

impl ScenarioFile {
    pub fn panel_names(&self) -> Vec<String> {
        self.panels
            .iter()
            .filter_map(|p| p.get("name").and_then(Value::as_str).map(str::to_string))
            .collect()
    }

    /// Resolves every panel (or the base alone) with defaults applied, then
    /// validates it. `only` restricts the result to one named panel.
    pub fn resolve(&self, overrides: &[Override], only: Option<&str>) -> CliResult<Vec<ScenarioConfig>> {
        let tables: Vec<Table> = if self.panels.is_empty() {
            vec![self.base.clone()]
        } else {
            self.panels.iter().map(|p| merged(&self.base, p)).collect()
        };
        let mut out = Vec::new();
        for table in tables {
            let name = table.get("name").and_then(Value::as_str).unwrap_or("").to_string();
            if only.is_some_and(|o| o != name) {
                continue;
            }
            let label = if name.is_empty() { "scenario".to_string() } else { format!("scenario `{name}`") };
            let config = decode(table.clone()).map_err(|e| CliError::Config(format!("{label}: {e}")))?;
            let config = if overrides.is_empty() {
                config
            } else {
                let mut t = table;
                for o in overrides {
                    o.apply(&mut t)?;
                }
                let keys: Vec<String> = overrides.iter().map(Override::key).collect();
                decode(t).map_err(|e| CliError::Config(format!("{label}: override {}: {e}", keys.join(", "))))?
            };
            config
                .validate()
                .map_err(|e| CliError::Config(format!("{label}: {e}")))?;
            out.push(config);
        }
        match only {
            Some(o) if out.is_empty() => Err(CliError::Config(format!(
                "no panel named `{o}`; available: {}",
                self.panel_names().join(", ")
            ))),
            _ => Ok(out),
        }
    }
}

/// Parses and validates a file that describes exactly one scenario.
pub fn parse_config(text: &str) -> CliResult<ScenarioConfig> {
    let mut configs = parse_file(text)?.resolve(&[], None)?;
    if configs.len() != 1 {
        return Err(CliError::Config(format!(
            "expected one scenario, found {} panels",
            configs.len()
        )));
    }
    Ok(configs.remove(0))
}

fn decode(table: Table) -> Result<ScenarioConfig, String> {
    serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.into_inner().to_string()
        } else {
            format!("field `{path}`: {}", e.into_inner())
        }
    })
}

/// `over` merged into `base`; nested tables merge, everything else replaces.
fn merged(base: &Table, over: &Table) -> Table {
    let mut out = base.clone();
    for (k, v) in over {
        let slot = match (out.get(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => Value::Table(merged(b, o)),
            _ => v.clone(),
        };
        out.insert(k.clone(), slot);
    }
    out
}

/// Finds a scenario by path, by file stem in `dirs`, or by panel name
/// (`fig03a` in `fig03.toml`). Returns the file and the panel to select.
pub fn locate(name: &str, dirs: &[PathBuf]) -> CliResult<(PathBuf, Option<String>)> {
    let direct = Path::new(name);
    if direct.is_file() {
        return Ok((direct.to_path_buf(), None));
    }
    let stem = name.trim_end_matches(".toml").trim_end_matches(".cfg");
    for dir in dirs {
        let file = dir.join(format!("{stem}.toml"));
        if file.is_file() {
            return Ok((file, None));
        }
        let parent = stem.trim_end_matches(|c: char| c.is_ascii_lowercase());
        if parent != stem && !parent.is_empty() {
            let file = dir.join(format!("{parent}.toml"));
            if file.is_file() {
                return Ok((file, Some(stem.to_string())));
            }
        }
    }
    Err(CliError::Config(format!(
        "scenario `{name}` not found (searched {})",
        dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
scheme = "I"
backends = ["semiclassical"]
outputs = ["mean_x"]

[params]
gamma = 1
lambda = 0.2

[initial]
x0 = 3
w = 0.5
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.average.periods, 5);
        assert_eq!(c.times.samples, 2001);
        let echoed = toml::to_string(&c).unwrap();
        assert!(echoed.contains("leak_tolerance"));
        assert!(echoed.contains("variant = \"full\""));
    }

    #[test]
    fn zero_width_is_rejected() {
        let err = parse_config(&MINIMAL.replace("w = 0.5", "w = 0")).unwrap_err();
        assert!(err.to_string().contains("w must be > 0"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rwa_domain_is_cited() {
        let text = MINIMAL.replace("lambda = 0.2", "lambda = 2.5\nvariant = \"rwa\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("lambda^2 < 4 gamma"), "{err}");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_config(&MINIMAL.replace("x0 = 3", "x0 = 3\nwidth = 1")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("initial") && msg.contains("width"), "{msg}");
    }

    #[test]
    fn syntax_errors_report_line() {
        let err = parse_config("name = \"x\"\nscheme = \n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn overrides_must_name_fields() {
        let file = parse_file(MINIMAL).unwrap();
        let ok: Override = "params.lambda=0.05".parse().unwrap();
        let c = file.resolve(&[ok], None).unwrap();
        assert_eq!(c[0].params.lambda, 0.05);
        let variant: Override = "params.variant=rwa".parse().unwrap();
        assert_eq!(file.resolve(&[variant], None).unwrap()[0].params.variant.as_str(), "rwa");
        let bad: Override = "params.lamda=0.05".parse().unwrap();
        let err = file.resolve(&[bad], None).unwrap_err().to_string();
        assert!(err.contains("lamda"), "{err}");
        assert!("novalue".parse::<Override>().is_err());
    }

    #[test]
    fn panels_inherit_and_override() {
        let text = format!(
            "{MINIMAL}\n[[panel]]\nname = \"p_a\"\n\n[[panel]]\nname = \"p_b\"\nparams = {{ lambda = 0.05 }}\n"
        );
        let file = parse_file(&text).unwrap();
        let all = file.resolve(&[], None).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].params.lambda, 0.2);
        assert_eq!(all[1].params.lambda, 0.05);
        assert_eq!(all[1].params.gamma, 1.0);
        let one = file.resolve(&[], Some("p_b")).unwrap();
        assert_eq!(one[0].name, "p_b");
        assert!(file.resolve(&[], Some("p_c")).is_err());
    }
}
