//! Parameter sweeps over scalar configuration fields.

use rayon::prelude::*;

use super::config::{ScenarioConfig, SweepAxis};
use super::run::{evaluate_point, scalar_columns};
use super::table::{Column, Diagnostic, ResultTable, TableMetadata};
use crate::error::{Error, Result};

/// Sweeps one field of `base` over `values`.
pub fn sweep(base: &ScenarioConfig, field: &str, values: &[f64]) -> Result<ResultTable> {
    sweep_axes(base, &[SweepAxis::new(field, values.to_vec())])
}

/// Table column name of a swept field, without its section prefix.
fn axis_column(field: &str) -> &str {
    field.rsplit('.').next().unwrap_or(field)
}

/// Sweeps the Cartesian product of `axes`, first axis outermost.
///
/// Points run in parallel on the current rayon pool; rows keep the input
/// order. A failing point leaves its outputs undefined and records the error
/// message instead of aborting the sweep.
pub fn sweep_axes(base: &ScenarioConfig, axes: &[SweepAxis]) -> Result<ResultTable> {
    let ctx = |e: Error| e.context(format!("sweep `{}`", base.name));
    if axes.is_empty() {
        return Err(ctx(Error::InvalidScenario("sweep needs at least one axis".into())));
    }
    let mut point_base = base.clone();
    point_base.sweep.clear();
    let mut grids = Vec::with_capacity(axes.len());
    for axis in axes {
        grids.push(axis.resolved_values().map_err(ctx)?);
        // Checks the field name even before any point runs.
        point_base.set_field(&axis.field, grids.last().expect("grid")[0]).map_err(ctx)?;
    }
    let mut full = point_base.clone();
    full.sweep = axes.to_vec();
    full.validate().map_err(ctx)?;

    let points: Vec<Vec<f64>> = grids.iter().fold(vec![Vec::new()], |acc, grid| {
        acc.iter()
            .flat_map(|prefix| {
                grid.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    });
    let results: Vec<(Result<Vec<Option<f64>>>, TableMetadata)> = points
        .par_iter()
        .map(|values| {
            let mut cfg = point_base.clone();
            let mut meta = TableMetadata::new(&cfg);
            let outcome = axes
                .iter()
                .zip(values)
                .try_for_each(|(a, v)| cfg.set_field(&a.field, *v))
                .and_then(|_| cfg.validate())
                .and_then(|_| evaluate_point(&cfg, &mut meta));
            (outcome, meta)
        })
        .collect();

    let columns: Vec<Column> = axes
        .iter()
        .map(|a| Column::new(axis_column(&a.field), None))
        .chain(scalar_columns(&point_base))
        .collect();
    let width = columns.len();
    let mut meta = TableMetadata::new(&full);
    let mut table_rows = Vec::with_capacity(points.len());
    let mut errors = Vec::with_capacity(points.len());
    for (values, (outcome, point_meta)) in points.iter().zip(results) {
        merge_metadata(&mut meta, point_meta);
        let mut row: Vec<Option<f64>> = values.iter().map(|v| Some(*v)).collect();
        match outcome {
            Ok(vals) => {
                row.extend(vals);
                errors.push(None);
            }
            Err(e) => {
                row.resize(width, None);
                errors.push(Some(e.to_string()));
            }
        }
        table_rows.push(row);
    }
    let mut table = ResultTable::new(columns, meta);
    table.rows = table_rows;
    table.row_errors = Some(errors);
    Ok(table)
}

/// Keeps distinct truncations and tolerances and the worst value of each diagnostic.
fn merge_metadata(into: &mut TableMetadata, from: TableMetadata) {
    for t in from.truncations {
        if !into.truncations.contains(&t) {
            into.truncations.push(t);
        }
    }
    for t in from.tolerances {
        if !into.tolerances.contains(&t) {
            into.tolerances.push(t);
        }
    }
    for Diagnostic { name, value } in from.diagnostics {
        match into.diagnostics.iter_mut().find(|d| d.name == name) {
            Some(d) => d.value = d.value.max(value),
            None => into.diagnostics.push(Diagnostic { name, value }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{Observable, Scheme};
    use crate::experiments::test_config;

    #[test]
    fn empty_values_are_rejected() {
        let mut c = test_config();
        c.outputs = vec![Observable::Period];
        assert!(sweep(&c, "params.gamma", &[]).is_err());
    }

    #[test]
    fn resonance_identity_along_lambda() {
        let mut c = test_config();
        c.outputs = vec![Observable::DeltaBar];
        let lambdas = [0.01, 0.05, 0.2, 0.5];
        let t = sweep(&c, "params.lambda", &lambdas).unwrap();
        for (l, d) in lambdas.iter().zip(t.column_values("delta_bar").unwrap()) {
            assert!((l - d).abs() < 1e-12);
        }
        assert!(t.row_errors.unwrap().iter().all(Option::is_none));
    }

    #[test]
    fn failing_points_are_recorded() {
        let mut c = test_config();
        c.outputs = vec![Observable::Period];
        let t = sweep(&c, "params.gamma", &[1.0, -1.0, 1.2]).unwrap();
        let errs = t.row_errors.as_ref().unwrap();
        assert!(errs[0].is_none() && errs[2].is_none());
        assert!(errs[1].as_ref().unwrap().contains("gamma"));
        assert_eq!(t.rows[1][1], None);
        assert!(t.check_consistent());
    }

    #[test]
    fn grid_is_row_major() {
        let mut c = test_config();
        c.scheme = Scheme::DisplacedMatter;
        c.outputs = vec![Observable::QPhotonAvg];
        c.average.samples_per_fast_period = 8;
        c.average.periods = 2;
        let axes = [
            SweepAxis::new("initial.x0", vec![1.0, 2.0]),
            SweepAxis::new("initial.w", vec![0.5, 1.0, 1.5]),
        ];
        let t = sweep_axes(&c, &axes).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.column_values("x0").unwrap(), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(t.column_values("w").unwrap(), vec![0.5, 1.0, 1.5, 0.5, 1.0, 1.5]);
    }
}
