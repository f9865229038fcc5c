//! Execution of a single scenario on one or more backends.

use num_complex::Complex64;

use super::beating::extract_beating_period;
use super::config::{produces, Backend, Observable, ScenarioConfig, Scheme};
use super::sweep::sweep_axes;
use super::table::{Column, ResultTable, TableMetadata, TruncationRecord};
use crate::error::{Error, ErrorClass, Result};
use crate::fock::{
    build_hamiltonian, estimate_occupations, measure, prepare_scheme1, prepare_scheme2, EvolutionMethod,
    FockPropagator, FockState, Truncation,
};
use crate::lindblad::{evolve_density, measure_density, DensityOperator, LindbladOptions, TRACE_TOLERANCE};
use crate::model::{polariton_spectrum, PolaritonSpectrum, SystemParams};
use crate::observables::QuantumObservables;
use crate::semiclassical::{
    delta_n_scheme2, delta_n_time_average, evolve_gaussian, mean_x_closed_form, position_density,
    EllipseSummary, GaussianState,
};
use crate::series::{time_average, time_average_partial, AverageWindow};

/// Growth factor applied to automatic cutoffs after a truncation failure.
pub const TRUNCATION_GROWTH: f64 = 1.25;

/// Retries with grown cutoffs before a truncation failure is reported.
pub const TRUNCATION_RETRIES: usize = 3;

/// Runs `config` and tabulates its outputs.
///
/// Sweeps produce one row per parameter point, scalar outputs without a sweep
/// a single row, and per-time outputs one row per sample.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ResultTable> {
    let ctx = |e: Error| e.context(format!("scenario `{}`", config.name));
    config.validate().map_err(ctx)?;
    if config.has_sweep() {
        return sweep_axes(config, &config.sweep);
    }
    if config.is_scalar() {
        let columns = scalar_columns(config);
        let mut meta = TableMetadata::new(config);
        let row = evaluate_point(config, &mut meta).map_err(ctx)?;
        let mut table = ResultTable::new(columns, meta);
        table.push_row(row);
        return Ok(table);
    }
    if config.outputs == [Observable::PositionDensity] {
        return density_table(config).map_err(ctx);
    }
    time_series_table(config).map_err(ctx)
}

/// Samples of the configured time grid.
pub fn resolve_times(config: &ScenarioConfig, spectrum: &PolaritonSpectrum) -> Result<Vec<f64>> {
    let g = &config.times;
    let end = match (g.end, g.periods) {
        (Some(e), None) => e,
        (None, Some(k)) => g.start + k * spectrum.period_checked()?,
        _ => {
            return Err(Error::InvalidScenario(
                "times needs exactly one of `end` or `periods`".into(),
            ))
        }
    };
    Ok(linspace(g.start, end, g.samples))
}

fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                end
            } else {
                start + (end - start) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Whole-period averaging grid starting at zero.
fn average_times(config: &ScenarioConfig, spectrum: &PolaritonSpectrum) -> Result<(Vec<f64>, f64)> {
    let period = spectrum.period_checked()?;
    let k = config.average.periods as f64;
    let per_fast = config.average.samples_per_fast_period as f64;
    let n = (k * period / spectrum.fast_period() * per_fast).ceil() as usize + 1;
    Ok((linspace(0.0, k * period, n.max(3)), period))
}

/// Moments along one backend's trajectory.
pub struct Trajectory {
    pub backend: Backend,
    pub times: Vec<f64>,
    pub observables: Vec<QuantumObservables>,
    /// Photon number reached from the two-mode vacuum, when requested.
    pub baseline_photons: Option<Vec<f64>>,
}

impl Trajectory {
    fn photons(&self) -> Vec<f64> {
        self.observables.iter().map(|o| o.light.mean_n).collect()
    }

    fn delta_photons(&self) -> Result<Vec<f64>> {
        let base = self
            .baseline_photons
            .as_ref()
            .ok_or_else(|| Error::InvalidState("baseline photon number was not computed".into()))?;
        Ok(self.photons().iter().zip(base).map(|(n, b)| n - b).collect())
    }
}

/// Fock-space initial state for the configured scheme.
fn prepare_state(config: &ScenarioConfig, trunc: Truncation) -> Result<FockState> {
    match config.scheme {
        Scheme::DisplacedMatter => {
            let (x0, w) = config.scheme1_initial()?;
            prepare_scheme1(x0, w, trunc)
        }
        Scheme::CoherentCavity => prepare_scheme2(config.alpha()?, trunc),
    }
}

/// Runs `attempt` on the configured or automatic truncation, growing automatic
/// cutoffs after truncation failures.
fn with_truncation<T>(
    config: &ScenarioConfig,
    params: &SystemParams,
    t_max: f64,
    mut attempt: impl FnMut(Truncation) -> Result<T>,
) -> Result<(T, Truncation, bool)> {
    let tol = config.truncation.leak_tolerance;
    if let (Some(m), Some(l)) = (config.truncation.matter, config.truncation.photon) {
        let trunc = Truncation::with_leak_tolerance(m, l, tol)?;
        return attempt(trunc).map(|v| (v, trunc, false));
    }
    let init = config.gaussian_initial()?;
    let (mu_m, mu_l) = estimate_occupations(params, &init, t_max)?;
    let mut trunc = Truncation::auto(mu_m, mu_l, tol)?;
    for retry in 0..=TRUNCATION_RETRIES {
        match attempt(trunc) {
            Err(e) if e.class() == ErrorClass::Truncation && retry < TRUNCATION_RETRIES => {
                trunc = trunc.grown(TRUNCATION_GROWTH);
            }
            other => return other.map(|v| (v, trunc, true)),
        }
    }
    unreachable!("the final retry always returns")
}

fn leak_error(backend: Backend, leak: f64, trunc: &Truncation) -> Error {
    Error::TruncationTooSmall(format!(
        "{} evolution populated the top levels with {leak:.3e} (tolerance {:.1e}) at cutoffs ({}, {})",
        backend.as_str(),
        trunc.leak_tolerance,
        trunc.n_matter_max,
        trunc.n_photon_max
    ))
}

/// Evolves the configured initial state on one backend.
pub fn run_trajectory(
    config: &ScenarioConfig,
    params: &SystemParams,
    backend: Backend,
    times: &[f64],
    with_baseline: bool,
    meta: &mut TableMetadata,
) -> Result<Trajectory> {
    let t_max = times.last().copied().unwrap_or(0.0);
    let tag = backend.as_str();
    let (observables, baseline_photons) = match backend {
        Backend::Semiclassical => {
            let states = evolve_gaussian(&config.gaussian_initial()?, params, times)?;
            let baseline = if with_baseline {
                let vac = evolve_gaussian(&GaussianState::vacuum(), params, times)?;
                Some(vac.iter().map(|s| s.observables().light.mean_n).collect())
            } else {
                None
            };
            (states.iter().map(|s| s.observables()).collect(), baseline)
        }
        Backend::Fock => {
            let run = |trunc: Truncation| -> Result<_> {
                let ham = build_hamiltonian(params, trunc);
                let psi = prepare_state(config, trunc)?;
                let prop = FockPropagator::new(&ham, EvolutionMethod::Auto)?;
                let mut obs = Vec::with_capacity(times.len());
                let diag = prop.evolve(&psi, times, |_, _, s| {
                    obs.push(measure(s));
                    Ok(())
                })?;
                if diag.max_leak() > trunc.leak_tolerance {
                    return Err(leak_error(backend, diag.max_leak(), &trunc));
                }
                let baseline = if with_baseline {
                    let mut base = Vec::with_capacity(times.len());
                    prop.evolve(&FockState::vacuum(trunc), times, |_, _, s| {
                        base.push(measure(s).light.mean_n);
                        Ok(())
                    })?;
                    Some(base)
                } else {
                    None
                };
                Ok((obs, baseline, diag))
            };
            let ((obs, baseline, diag), trunc, automatic) = with_truncation(config, params, t_max, run)?;
            record_truncation(meta, backend, trunc, automatic);
            meta.diagnostic(format!("{tag}.max_norm_drift"), diag.max_norm_drift);
            meta.diagnostic(format!("{tag}.max_energy_drift"), diag.max_energy_drift);
            meta.diagnostic(format!("{tag}.max_top_population"), diag.max_leak());
            (obs, baseline)
        }
        Backend::Lindblad => {
            let kappa = params.kappa();
            let run = |trunc: Truncation| -> Result<_> {
                let ham = build_hamiltonian(params, trunc);
                let rho0 = DensityOperator::from_pure(&prepare_state(config, trunc)?);
                let mut obs = Vec::with_capacity(times.len());
                let diag = evolve_density(&ham, &rho0, kappa, times, LindbladOptions::default(), |_, _, r| {
                    obs.push(measure_density(r));
                    Ok(())
                })?;
                let leak = diag.max_top_population_matter.max(diag.max_top_population_light);
                if leak > trunc.leak_tolerance {
                    return Err(leak_error(backend, leak, &trunc));
                }
                let baseline = if with_baseline {
                    let mut base = Vec::with_capacity(times.len());
                    let vac = DensityOperator::from_pure(&FockState::vacuum(trunc));
                    evolve_density(&ham, &vac, kappa, times, LindbladOptions::default(), |_, _, r| {
                        base.push(measure_density(r).light.mean_n);
                        Ok(())
                    })?;
                    Some(base)
                } else {
                    None
                };
                Ok((obs, baseline, diag, leak))
            };
            let ((obs, baseline, diag, leak), trunc, automatic) = with_truncation(config, params, t_max, run)?;
            record_truncation(meta, backend, trunc, automatic);
            meta.diagnostic(format!("{tag}.max_trace_drift"), diag.max_trace_drift);
            meta.diagnostic(format!("{tag}.positivity_failures"), diag.positivity_failures as f64);
            meta.diagnostic(format!("{tag}.max_top_population"), leak);
            meta.diagnostic(format!("{tag}.max_step"), diag.max_step_used);
            (obs, baseline)
        }
    };
    Ok(Trajectory {
        backend,
        times: times.to_vec(),
        observables,
        baseline_photons,
    })
}

fn record_truncation(meta: &mut TableMetadata, backend: Backend, trunc: Truncation, automatic: bool) {
    let rec = TruncationRecord {
        backend,
        n_matter_max: trunc.n_matter_max,
        n_photon_max: trunc.n_photon_max,
        leak_tolerance: trunc.leak_tolerance,
        automatic,
    };
    if !meta.truncations.contains(&rec) {
        meta.truncations.push(rec);
    }
}

fn record_tolerances(config: &ScenarioConfig, meta: &mut TableMetadata) {
    if config.backends.iter().any(|b| *b != Backend::Semiclassical) {
        meta.tolerance("truncation.leak_tolerance", config.truncation.leak_tolerance);
    }
    if config.backends.contains(&Backend::Lindblad) {
        meta.tolerance("lindblad.trace_tolerance", TRACE_TOLERANCE);
    }
}

fn column_name(stem: &str, backend: Option<Backend>) -> String {
    match backend {
        Some(b) => format!("{stem}_{}", b.as_str()),
        None => stem.to_string(),
    }
}

/// `(observable, backend)` pairs in column order.
fn column_plan(config: &ScenarioConfig) -> Vec<(Observable, Option<Backend>)> {
    let mut plan = Vec::new();
    for &o in &config.outputs {
        if o.is_backend_free() {
            plan.push((o, None));
        } else {
            for &b in &config.backends {
                if produces(o, b) {
                    plan.push((o, Some(b)));
                }
            }
        }
    }
    plan
}

fn columns_from_plan(plan: &[(Observable, Option<Backend>)]) -> Vec<Column> {
    plan.iter()
        .flat_map(|(o, b)| o.column_stems().iter().map(move |s| Column::new(column_name(s, *b), *b)))
        .collect()
}

/// Columns of a per-point table, without sweep axes.
pub fn scalar_columns(config: &ScenarioConfig) -> Vec<Column> {
    columns_from_plan(&column_plan(config))
}

fn needs_baseline(config: &ScenarioConfig) -> bool {
    config
        .outputs
        .iter()
        .any(|o| matches!(o, Observable::DeltaN | Observable::DeltaNAvg))
}

fn time_series_table(config: &ScenarioConfig) -> Result<ResultTable> {
    let params = config.params.resolve()?;
    let spectrum = polariton_spectrum(&params)?;
    let times = resolve_times(config, &spectrum)?;
    let mut meta = TableMetadata::new(config);
    record_tolerances(config, &mut meta);
    let plan = column_plan(config);
    let mut trajectories = Vec::new();
    for b in config.trajectory_backends() {
        trajectories.push(run_trajectory(config, &params, b, &times, needs_baseline(config), &mut meta)?);
    }
    let columns = columns_from_plan(&plan);
    let mut table = ResultTable::new(
        std::iter::once(Column::new("t", None)).chain(columns).collect(),
        meta,
    );
    let x0 = config.initial.x0.unwrap_or(0.0);
    let kappa = params.kappa();
    let deltas: Vec<Option<Vec<f64>>> = trajectories
        .iter()
        .map(|t| t.baseline_photons.as_ref().map(|_| t.delta_photons()).transpose())
        .collect::<Result<_>>()?;
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![Some(t)];
        for &(o, b) in &plan {
            let Some(b) = b else {
                // Only the closed-form quadrature is per-time and backend-free.
                row.push(Some(mean_x_closed_form(&params, x0, t)?));
                continue;
            };
            let idx = trajectories.iter().position(|tr| tr.backend == b).expect("backend trajectory");
            let obs = &trajectories[idx].observables[k];
            let (m, l) = (&obs.matter, &obs.light);
            match o {
                Observable::MeanX => row.push(Some(m.mean_position)),
                Observable::MeanP => row.push(Some(m.mean_momentum)),
                Observable::MeanQ => row.push(Some(l.mean_position)),
                Observable::MeanPLight => row.push(Some(l.mean_momentum)),
                Observable::VarX => row.push(Some(m.var_position())),
                Observable::NPhoton => row.push(Some(l.mean_n)),
                Observable::NMatter => row.push(Some(m.mean_n)),
                Observable::DeltaN => row.push(deltas[idx].as_ref().map(|d| d[k])),
                Observable::MandelQPhoton => row.push(l.mandel_q()),
                Observable::MandelQMatter => row.push(m.mandel_q()),
                Observable::EllipseMatter | Observable::EllipseLight => {
                    let mode = if o == Observable::EllipseMatter { m } else { l };
                    let e = EllipseSummary::from_moments(mode);
                    row.extend(
                        [e.center[0], e.center[1], e.semi_axes[0], e.semi_axes[1], e.angle].map(Some),
                    );
                }
                Observable::NOut => row.push(Some(kappa * l.mean_n)),
                Observable::QOut => row.push(l.mandel_q().map(|q| kappa * q)),
                other => {
                    return Err(Error::InvalidScenario(format!(
                        "`{}` is not a per-time output",
                        other.column_stems()[0]
                    )))
                }
            }
        }
        table.push_row(row);
    }
    Ok(table)
}

fn density_table(config: &ScenarioConfig) -> Result<ResultTable> {
    let params = config.params.resolve()?;
    let spectrum = polariton_spectrum(&params)?;
    let times = resolve_times(config, &spectrum)?;
    let grid = config
        .density_grid
        .ok_or_else(|| Error::InvalidScenario("position_density requires density_grid".into()))?;
    let xs = linspace(grid.min, grid.max, grid.count);
    let (x0, w) = config.scheme1_initial()?;
    let b = Some(Backend::Semiclassical);
    let columns = vec![
        Column::new("t", None),
        Column::new("X", None),
        Column::new(column_name("density", b), b),
    ];
    let mut table = ResultTable::new(columns, TableMetadata::new(config));
    for &t in &times {
        let p = position_density(&params, x0, w, t, &xs)?;
        for (x, v) in xs.iter().zip(p) {
            table.push_row(vec![Some(t), Some(*x), Some(v)]);
        }
    }
    Ok(table)
}

/// One row of scalar outputs for the configured parameter point.
pub fn evaluate_point(config: &ScenarioConfig, meta: &mut TableMetadata) -> Result<Vec<Option<f64>>> {
    let params = config.params.resolve()?;
    let spectrum = polariton_spectrum(&params)?;
    record_tolerances(config, meta);
    let plan = column_plan(config);
    let needs_trajectory = plan
        .iter()
        .any(|(o, b)| b.is_some() && *o != Observable::DeltaNScheme2);
    let avg_grid = if needs_trajectory || plan.iter().any(|(o, _)| *o == Observable::DeltaNScheme2) {
        Some(average_times(config, &spectrum)?)
    } else {
        None
    };
    let mut trajectories: Vec<Trajectory> = Vec::new();
    if needs_trajectory {
        let (times, _) = avg_grid.as_ref().expect("averaging grid");
        for b in config.trajectory_backends() {
            if plan.iter().any(|(o, pb)| *pb == Some(b) && *o != Observable::DeltaNScheme2) {
                trajectories.push(run_trajectory(config, &params, b, times, needs_baseline(config), meta)?);
            }
        }
    }
    let mut row = Vec::new();
    for &(o, b) in &plan {
        let value = match b {
            None => backend_free_scalar(config, &params, &spectrum, o)?,
            Some(b) => {
                let (times, period) = avg_grid.as_ref().expect("averaging grid");
                let window = AverageWindow::new(*period).with_min_periods(config.average.periods);
                if o == Observable::DeltaNScheme2 {
                    Some(scheme2_difference(config, &params, b, times, window, meta)?)
                } else {
                    let tr = trajectories.iter().find(|t| t.backend == b).expect("trajectory");
                    trajectory_scalar(tr, o, window, &spectrum)?
                }
            }
        };
        row.push(value);
    }
    Ok(row)
}

fn backend_free_scalar(
    config: &ScenarioConfig,
    params: &SystemParams,
    spectrum: &PolaritonSpectrum,
    o: Observable,
) -> Result<Option<f64>> {
    Ok(match o {
        Observable::OmegaPlus => Some(spectrum.omega_plus),
        Observable::OmegaMinus => Some(spectrum.omega_minus),
        Observable::SigmaBar => Some(spectrum.sigma_bar),
        Observable::DeltaBar => Some(spectrum.delta_bar),
        Observable::Period => spectrum.period.value(),
        Observable::Beta => Some(spectrum.beta),
        Observable::DeltaNAvgClosedForm => {
            let (x0, w) = config.scheme1_initial()?;
            Some(delta_n_time_average(params, x0, w)?)
        }
        Observable::DeltaNScheme2ClosedForm => {
            let c = std::f64::consts::SQRT_2 * config.alpha()?.norm();
            Some(delta_n_scheme2(params, c)? / (c * c))
        }
        other => {
            return Err(Error::InvalidScenario(format!(
                "`{}` needs a backend",
                other.column_stems()[0]
            )))
        }
    })
}

fn trajectory_scalar(
    tr: &Trajectory,
    o: Observable,
    window: AverageWindow,
    spectrum: &PolaritonSpectrum,
) -> Result<Option<f64>> {
    let t = &tr.times;
    let matter_q: Vec<Option<f64>> = tr.observables.iter().map(|o| o.matter.mandel_q()).collect();
    Ok(match o {
        Observable::PeriodExtracted => {
            let x: Vec<f64> = tr.observables.iter().map(|o| o.matter.mean_position).collect();
            Some(extract_beating_period(t, &x, spectrum)?)
        }
        Observable::NPhotonAvg => Some(time_average(t, &tr.photons(), window)?.value),
        Observable::DeltaNAvg => Some(time_average(t, &tr.delta_photons()?, window)?.value),
        Observable::QPhotonAvg => {
            let q: Vec<Option<f64>> = tr.observables.iter().map(|o| o.light.mandel_q()).collect();
            partial_average(t, &q, window)?
        }
        Observable::QMatterAvg => partial_average(t, &matter_q, window)?,
        other => {
            return Err(Error::InvalidScenario(format!(
                "`{}` is not a trajectory average",
                other.column_stems()[0]
            )))
        }
    })
}

/// Average of a series with undefined samples; undefined if no sample is defined.
fn partial_average(t: &[f64], v: &[Option<f64>], window: AverageWindow) -> Result<Option<f64>> {
    if v.iter().all(Option::is_none) {
        return Ok(None);
    }
    Ok(Some(time_average_partial(t, v, window)?.value))
}

/// `[n̄(α = C/√2) − n̄(α = iC/√2)]/C²` with `C = √2|α|`.
fn scheme2_difference(
    config: &ScenarioConfig,
    params: &SystemParams,
    backend: Backend,
    times: &[f64],
    window: AverageWindow,
    meta: &mut TableMetadata,
) -> Result<f64> {
    let amp = config.alpha()?.norm();
    if amp == 0.0 {
        return Err(Error::InvalidScenario("delta_n_scheme2 needs alpha != 0".into()));
    }
    let mut averages = [0.0; 2];
    for (slot, alpha) in [Complex64::new(amp, 0.0), Complex64::new(0.0, amp)].into_iter().enumerate() {
        let mut c = config.clone();
        c.initial.alpha_re = Some(alpha.re);
        c.initial.alpha_im = Some(alpha.im);
        let tr = run_trajectory(&c, params, backend, times, false, meta)?;
        averages[slot] = time_average(times, &tr.photons(), window)?.value;
    }
    Ok((averages[0] - averages[1]) / (2.0 * amp * amp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{InitialSpec, SweepAxis, TimeGrid};
    use crate::experiments::test_config;

    #[test]
    fn closed_form_and_gaussian_columns_agree() {
        let mut c = test_config();
        c.outputs = vec![Observable::MeanX, Observable::XClosedForm];
        c.times = TimeGrid {
            start: 0.0,
            end: Some(40.0),
            periods: None,
            samples: 401,
        };
        let t = run_scenario(&c).unwrap();
        let names: Vec<&str> = t.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["t", "X_semiclassical", "X_closed_form"]);
        for r in &t.rows {
            assert!((r[1].unwrap() - r[2].unwrap()).abs() < 1e-10);
        }
        assert!(t.check_consistent());
    }

    #[test]
    fn fock_matches_gaussian_for_short_run() {
        let mut c = test_config();
        c.initial.x0 = Some(1.0);
        c.initial.w = Some(0.8);
        c.backends = vec![Backend::Semiclassical, Backend::Fock];
        c.outputs = vec![Observable::MeanX, Observable::NPhoton, Observable::MandelQPhoton];
        c.times = TimeGrid {
            start: 0.0,
            end: Some(10.0),
            periods: None,
            samples: 51,
        };
        let t = run_scenario(&c).unwrap();
        assert_eq!(t.metadata.truncations.len(), 1);
        for r in &t.rows[1..] {
            assert!((r[1].unwrap() - r[2].unwrap()).abs() < 1e-7);
            assert!((r[3].unwrap() - r[4].unwrap()).abs() < 1e-7);
            assert!((r[5].unwrap() - r[6].unwrap()).abs() < 1e-5);
        }
        // Q is undefined at t = 0 where the cavity is empty.
        assert_eq!(t.rows[0][5], None);
    }

    #[test]
    fn resonant_photon_average_matches_closed_form() {
        let mut c = test_config();
        c.outputs = vec![Observable::DeltaNAvg, Observable::DeltaNAvgClosedForm, Observable::Period];
        let t = run_scenario(&c).unwrap();
        let r = &t.rows[0];
        assert!((r[0].unwrap() - r[1].unwrap()).abs() / r[1].unwrap() < 1e-2, "{r:?}");
        assert!((r[2].unwrap() - 4.0 * std::f64::consts::PI / 0.2).abs() < 1e-9);
    }

    #[test]
    fn scheme2_difference_matches_closed_form() {
        let mut c = test_config();
        c.scheme = Scheme::CoherentCavity;
        c.initial = InitialSpec {
            alpha_re: Some(2.0),
            ..Default::default()
        };
        c.average.periods = 10;
        c.outputs = vec![Observable::DeltaNScheme2, Observable::DeltaNScheme2ClosedForm];
        let t = run_scenario(&c).unwrap();
        let r = &t.rows[0];
        assert!((r[0].unwrap() - r[1].unwrap()).abs() < 0.05 * r[1].unwrap().abs(), "{r:?}");
    }

    #[test]
    fn sweep_rows_follow_input_order() {
        let mut c = test_config();
        c.outputs = vec![Observable::DeltaBar];
        c.sweep = vec![SweepAxis::new("params.lambda", vec![0.3, 0.1, 0.2])];
        let t = run_scenario(&c).unwrap();
        let lam = t.column_values("lambda").unwrap();
        let d = t.column_values("delta_bar").unwrap();
        assert_eq!(lam, vec![0.3, 0.1, 0.2]);
        for (l, d) in lam.iter().zip(d) {
            assert!((l - d).abs() < 1e-12);
        }
    }

    #[test]
    fn density_table_is_long_format() {
        let mut c = test_config();
        c.outputs = vec![Observable::PositionDensity];
        c.density_grid = Some(crate::experiments::config::DensityGrid {
            min: -8.0,
            max: 8.0,
            count: 161,
        });
        c.times = TimeGrid {
            start: 0.0,
            end: Some(5.0),
            periods: None,
            samples: 3,
        };
        let t = run_scenario(&c).unwrap();
        assert_eq!(t.rows.len(), 3 * 161);
        let mass: f64 = t.rows[..161].iter().map(|r| r[2].unwrap() * 0.1).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn determinism() {
        let mut c = test_config();
        c.outputs = vec![Observable::MeanX, Observable::MandelQPhoton];
        assert_eq!(run_scenario(&c).unwrap(), run_scenario(&c).unwrap());
    }
}
