//! Scenario configuration, execution and parameter sweeps.

pub mod beating;
pub mod config;
pub mod run;
pub mod sweep;
pub mod table;
pub mod validation;

pub use beating::extract_beating_period;
pub use config::{
    AverageSpec, Backend, DensityGrid, InitialSpec, Linspace, Observable, ParamsSpec, ScenarioConfig,
    Scheme, SweepAxis, TimeGrid, TruncationSpec, SWEEPABLE_FIELDS,
};
pub use run::run_scenario;
pub use sweep::{sweep, sweep_axes};
pub use table::{Column, Diagnostic, ResultTable, TableMetadata, TruncationRecord};
pub use validation::{validation_suite, CheckOutcome};

/// Scheme I at resonance with a displaced squeezed matter state.
#[cfg(test)]
pub(crate) fn test_config() -> ScenarioConfig {
    ScenarioConfig {
        name: "test".into(),
        description: String::new(),
        scheme: Scheme::DisplacedMatter,
        params: ParamsSpec {
            gamma: 1.0,
            lambda: 0.2,
            variant: crate::model::ModelVariant::Full,
            kappa: 0.0,
        },
        initial: InitialSpec {
            x0: Some(3.0),
            w: Some(0.5),
            ..Default::default()
        },
        times: TimeGrid::default(),
        backends: vec![Backend::Semiclassical],
        outputs: vec![Observable::MeanX],
        truncation: TruncationSpec::default(),
        average: AverageSpec::default(),
        sweep: Vec::new(),
        density_grid: None,
    }
}
