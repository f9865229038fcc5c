//! Declarative description of one simulation scenario.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DEFAULT_LEAK_TOLERANCE;
use crate::model::{ModelVariant, SystemParams};
use crate::semiclassical::GaussianState;

/// Initial-state preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Displaced squeezed matter, cavity vacuum.
    #[serde(rename = "I")]
    DisplacedMatter,
    /// Matter ground state, coherent cavity field.
    #[serde(rename = "II")]
    CoherentCavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Semiclassical,
    Fock,
    Lindblad,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Semiclassical => "semiclassical",
            Backend::Fock => "fock",
            Backend::Lindblad => "lindblad",
        }
    }
}

/// Quantities a scenario can tabulate.
///
/// Time-series observables produce one row per time; scalar observables
/// produce one row per parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    MeanX,
    MeanP,
    MeanQ,
    MeanPLight,
    VarX,
    NPhoton,
    NMatter,
    /// Photon number above the value reached from the matter ground state.
    DeltaN,
    MandelQPhoton,
    MandelQMatter,
    EllipseMatter,
    EllipseLight,
    XClosedForm,
    NOut,
    QOut,
    /// `P(X, t)` on `density_grid`, in long format.
    PositionDensity,
    OmegaPlus,
    OmegaMinus,
    SigmaBar,
    DeltaBar,
    Period,
    Beta,
    PeriodExtracted,
    NPhotonAvg,
    DeltaNAvg,
    DeltaNAvgClosedForm,
    QPhotonAvg,
    QMatterAvg,
    /// `δ⟨n̄⟩/C²` with `C = √2|α|`.
    DeltaNScheme2,
    DeltaNScheme2ClosedForm,
}

impl Observable {
    pub fn is_scalar(self) -> bool {
        use Observable::*;
        matches!(
            self,
            OmegaPlus
                | OmegaMinus
                | SigmaBar
                | DeltaBar
                | Period
                | Beta
                | PeriodExtracted
                | NPhotonAvg
                | DeltaNAvg
                | DeltaNAvgClosedForm
                | QPhotonAvg
                | QMatterAvg
                | DeltaNScheme2
                | DeltaNScheme2ClosedForm
        )
    }

    /// Depends only on the parameters, not on any trajectory.
    pub fn is_backend_free(self) -> bool {
        use Observable::*;
        matches!(
            self,
            OmegaPlus
                | OmegaMinus
                | SigmaBar
                | DeltaBar
                | Period
                | Beta
                | XClosedForm
                | DeltaNAvgClosedForm
                | DeltaNScheme2ClosedForm
        )
    }

    /// Column stems; ellipses expand to five columns.
    pub fn column_stems(self) -> &'static [&'static str] {
        use Observable::*;
        match self {
            MeanX => &["X"],
            MeanP => &["P"],
            MeanQ => &["q"],
            MeanPLight => &["p"],
            VarX => &["var_X"],
            NPhoton => &["n_photon"],
            NMatter => &["n_matter"],
            DeltaN => &["delta_n"],
            MandelQPhoton => &["Q_photon"],
            MandelQMatter => &["Q_matter"],
            EllipseMatter => &[
                "matter_center_X",
                "matter_center_P",
                "matter_major",
                "matter_minor",
                "matter_angle",
            ],
            EllipseLight => &[
                "light_center_q",
                "light_center_p",
                "light_major",
                "light_minor",
                "light_angle",
            ],
            XClosedForm => &["X_closed_form"],
            NOut => &["n_out"],
            QOut => &["Q_out"],
            PositionDensity => &["density"],
            OmegaPlus => &["omega_plus"],
            OmegaMinus => &["omega_minus"],
            SigmaBar => &["sigma_bar"],
            DeltaBar => &["delta_bar"],
            Period => &["T"],
            Beta => &["beta"],
            PeriodExtracted => &["T_extracted"],
            NPhotonAvg => &["n_photon_avg"],
            DeltaNAvg => &["delta_n_avg"],
            DeltaNAvgClosedForm => &["delta_n_avg_closed_form"],
            QPhotonAvg => &["Q_photon_avg"],
            QMatterAvg => &["Q_matter_avg"],
            DeltaNScheme2 => &["delta_n_scheme2_over_C2"],
            DeltaNScheme2ClosedForm => &["delta_n_scheme2_over_C2_closed_form"],
        }
    }
}

fn default_variant() -> ModelVariant {
    ModelVariant::Full
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default = "default_variant")]
    pub variant: ModelVariant,
    #[serde(default)]
    pub kappa: f64,
}

impl ParamsSpec {
    pub fn resolve(&self) -> Result<SystemParams> {
        SystemParams::new(self.gamma, self.lambda, self.variant)?.with_kappa(self.kappa)
    }
}

/// Scheme I uses `x0` and `w`; Scheme II uses `alpha_re` and `alpha_im`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_im: Option<f64>,
}

/// Sampling times, either up to `end` or over `periods` beating periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub start: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
    pub samples: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            start: 0.0,
            end: None,
            periods: Some(2.0),
            samples: 2001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    /// Explicit cutoffs; both absent selects automatic sizing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon: Option<usize>,
    #[serde(default = "default_leak_tolerance")]
    pub leak_tolerance: f64,
}

fn default_leak_tolerance() -> f64 {
    DEFAULT_LEAK_TOLERANCE
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec {
            matter: None,
            photon: None,
            leak_tolerance: DEFAULT_LEAK_TOLERANCE,
        }
    }
}

fn default_average_periods() -> usize {
    5
}

fn default_samples_per_fast_period() -> usize {
    32
}

/// Window for long-time averages, counted in beating periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageSpec {
    #[serde(default = "default_average_periods")]
    pub periods: usize,
    #[serde(default = "default_samples_per_fast_period")]
    pub samples_per_fast_period: usize,
}

impl Default for AverageSpec {
    fn default() -> Self {
        AverageSpec {
            periods: default_average_periods(),
            samples_per_fast_period: default_samples_per_fast_period(),
        }
    }
}

/// Evenly spaced values `start..=stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Linspace {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// One swept scalar field, given as explicit values or a linspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub field: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linspace: Option<Linspace>,
}

impl SweepAxis {
    pub fn new(field: impl Into<String>, values: Vec<f64>) -> Self {
        SweepAxis {
            field: field.into(),
            values: Some(values),
            linspace: None,
        }
    }

    pub fn resolved_values(&self) -> Result<Vec<f64>> {
        let values = match (&self.values, &self.linspace) {
            (Some(v), None) => v.clone(),
            (None, Some(l)) => l.values(),
            _ => {
                return Err(Error::InvalidScenario(format!(
                    "sweep axis `{}` needs exactly one of `values` or `linspace`",
                    self.field
                )))
            }
        };
        if values.is_empty() {
            return Err(Error::InvalidScenario(format!("sweep axis `{}` is empty", self.field)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "sweep axis `{}` has non-finite values",
                self.field
            )));
        }
        Ok(values)
    }
}

/// Uniform position grid for [`Observable::PositionDensity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scheme: Scheme,
    pub params: ParamsSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub times: TimeGrid,
    pub backends: Vec<Backend>,
    pub outputs: Vec<Observable>,
    #[serde(default)]
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub average: AverageSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_grid: Option<DensityGrid>,
}

/// Scalar fields a sweep or override may target.
pub const SWEEPABLE_FIELDS: [&str; 8] = [
    "params.gamma",
    "params.lambda",
    "params.kappa",
    "initial.x0",
    "initial.w",
    "initial.alpha_re",
    "initial.alpha_im",
    "average.periods",
];

impl ScenarioConfig {
    /// Sets one of [`SWEEPABLE_FIELDS`].
    pub fn set_field(&mut self, field: &str, value: f64) -> Result<()> {
        match field {
            "params.gamma" => self.params.gamma = value,
            "params.lambda" => self.params.lambda = value,
            "params.kappa" => self.params.kappa = value,
            "initial.x0" => self.initial.x0 = Some(value),
            "initial.w" => self.initial.w = Some(value),
            "initial.alpha_re" => self.initial.alpha_re = Some(value),
            "initial.alpha_im" => self.initial.alpha_im = Some(value),
            "average.periods" => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidScenario(format!(
                        "average.periods must be a positive integer, got {value}"
                    )));
                }
                self.average.periods = value as usize
            }
            other => {
                return Err(Error::InvalidScenario(format!(
                    "`{other}` is not a sweepable field (expected one of {})",
                    SWEEPABLE_FIELDS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Scheme I `(X₀, w)`.
    pub fn scheme1_initial(&self) -> Result<(f64, f64)> {
        match (self.initial.x0, self.initial.w) {
            (Some(x0), Some(w)) => Ok((x0, w)),
            _ => Err(Error::InvalidScenario(
                "scheme I requires initial.x0 and initial.w".into(),
            )),
        }
    }

    /// Scheme II `α`.
    pub fn alpha(&self) -> Result<Complex64> {
        match (self.initial.alpha_re, self.initial.alpha_im) {
            (None, None) => Err(Error::InvalidScenario(
                "scheme II requires initial.alpha_re and/or initial.alpha_im".into(),
            )),
            (re, im) => Ok(Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))),
        }
    }

    pub fn gaussian_initial(&self) -> Result<GaussianState> {
        match self.scheme {
            Scheme::DisplacedMatter => {
                let (x0, w) = self.scheme1_initial()?;
                GaussianState::scheme1(x0, w)
            }
            Scheme::CoherentCavity => GaussianState::scheme2(self.alpha()?),
        }
    }

    pub fn has_sweep(&self) -> bool {
        !self.sweep.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.outputs.iter().all(|o| o.is_scalar())
    }

    /// Checks everything that does not require running a backend.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        if self.name.trim().is_empty() {
            return fail("name must not be empty".into());
        }
        self.params.resolve()?;
        match self.scheme {
            Scheme::DisplacedMatter => {
                if self.initial.alpha_re.is_some() || self.initial.alpha_im.is_some() {
                    return fail("scheme I does not take initial.alpha_re/alpha_im".into());
                }
                let (x0, w) = self.scheme1_initial()?;
                if !x0.is_finite() {
                    return fail(format!("x0 must be finite, got {x0}"));
                }
                if !(w.is_finite() && w > 0.0) {
                    return fail(format!("w must be > 0, got {w}"));
                }
            }
            Scheme::CoherentCavity => {
                if self.initial.x0.is_some() || self.initial.w.is_some() {
                    return fail("scheme II does not take initial.x0/w".into());
                }
                let a = self.alpha()?;
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return fail(format!("alpha must be finite, got {a}"));
                }
            }
        }
        if self.backends.is_empty() {
            return fail("at least one backend is required".into());
        }
        for (i, b) in self.backends.iter().enumerate() {
            if self.backends[..i].contains(b) {
                return fail(format!("backend `{}` listed twice", b.as_str()));
            }
        }
        if self.outputs.is_empty() {
            return fail("at least one output is required".into());
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if self.outputs[..i].contains(o) {
                return fail(format!("output `{}` listed twice", o.column_stems()[0]));
            }
        }
        let scalar = self.outputs.iter().filter(|o| o.is_scalar()).count();
        if scalar != 0 && scalar != self.outputs.len() {
            return fail("outputs mix per-time and per-point observables".into());
        }
        if self.has_sweep() && scalar == 0 {
            return fail("a sweep requires per-point (scalar) outputs".into());
        }
        if self.sweep.len() > 2 {
            return fail("at most two sweep axes are supported".into());
        }
        for (i, axis) in self.sweep.iter().enumerate() {
            if !SWEEPABLE_FIELDS.contains(&axis.field.as_str()) {
                return fail(format!(
                    "sweep field `{}` is not one of {}",
                    axis.field,
                    SWEEPABLE_FIELDS.join(", ")
                ));
            }
            if self.sweep[..i].iter().any(|a| a.field == axis.field) {
                return fail(format!("sweep field `{}` listed twice", axis.field));
            }
            axis.resolved_values()?;
        }
        if self.outputs.contains(&Observable::PositionDensity) {
            if self.outputs.len() != 1 {
                return fail("position_density must be the only output".into());
            }
            match self.density_grid {
                Some(g) if g.count >= 2 && g.min < g.max && g.min.is_finite() && g.max.is_finite() => {}
                _ => return fail("position_density requires density_grid with min < max and count >= 2".into()),
            }
            if self.scheme != Scheme::DisplacedMatter {
                return fail("position_density is defined for scheme I".into());
            }
        }
        let t = &self.times;
        if scalar == 0 {
            if t.samples < 2 {
                return fail("times.samples must be >= 2".into());
            }
            if t.end.is_some() == t.periods.is_some() {
                return fail("times needs exactly one of `end` or `periods`".into());
            }
            let span_ok = match (t.end, t.periods) {
                (Some(e), _) => e.is_finite() && e > t.start,
                (_, Some(p)) => p.is_finite() && p > 0.0,
                _ => false,
            };
            if !(t.start.is_finite() && t.start >= 0.0 && span_ok) {
                return fail("times must satisfy 0 <= start < end".into());
            }
        }
        if self.average.periods < 2 {
            return fail("average.periods must be >= 2".into());
        }
        if self.average.samples_per_fast_period < 8 {
            return fail("average.samples_per_fast_period must be >= 8".into());
        }
        for o in &self.outputs {
            self.check_output(*o)?;
        }
        let tol = self.truncation.leak_tolerance;
        if !(tol > 0.0 && tol < 1e-3) {
            return fail(format!("truncation.leak_tolerance must be in (0, 1e-3), got {tol}"));
        }
        if self.truncation.matter.is_some() != self.truncation.photon.is_some() {
            return fail("truncation needs both matter and photon cutoffs, or neither".into());
        }
        Ok(())
    }

    fn check_output(&self, o: Observable) -> Result<()> {
        use Observable::*;
        let variant = self.params.variant;
        let need = |b: Backend| {
            if self.backends.contains(&b) {
                Ok(())
            } else {
                Err(Error::InvalidScenario(format!(
                    "output `{}` requires the {} backend",
                    o.column_stems()[0],
                    b.as_str()
                )))
            }
        };
        let scheme = |s: Scheme, label: &str| {
            if self.scheme == s {
                Ok(())
            } else {
                Err(Error::InvalidScenario(format!(
                    "output `{}` is defined for scheme {label}",
                    o.column_stems()[0]
                )))
            }
        };
        let closed = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::UnsupportedVariant {
                    operation: o.column_stems()[0],
                    variant,
                })
            }
        };
        match o {
            NOut | QOut => need(Backend::Lindblad),
            XClosedForm => {
                scheme(Scheme::DisplacedMatter, "I")?;
                closed(variant != ModelVariant::NoDiamagnetic)
            }
            DeltaNAvgClosedForm => {
                scheme(Scheme::DisplacedMatter, "I")?;
                closed(variant != ModelVariant::NoDiamagnetic)
            }
            DeltaNScheme2 => scheme(Scheme::CoherentCavity, "II"),
            DeltaNScheme2ClosedForm => {
                scheme(Scheme::CoherentCavity, "II")?;
                closed(variant != ModelVariant::NoDiamagnetic)
            }
            PositionDensity => need(Backend::Semiclassical),
            _ => Ok(()),
        }
    }

    /// Backends that actually produce a column for some output.
    pub fn trajectory_backends(&self) -> Vec<Backend> {
        let mut out: Vec<Backend> = self
            .backends
            .iter()
            .copied()
            .filter(|b| self.outputs.iter().any(|o| produces(*o, *b)))
            .collect();
        out.sort();
        out
    }
}

/// Whether backend `b` emits a column for `o`.
pub fn produces(o: Observable, b: Backend) -> bool {
    use Observable::*;
    if o.is_backend_free() {
        return false;
    }
    match o {
        NOut | QOut => b == Backend::Lindblad,
        PositionDensity => b == Backend::Semiclassical,
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::test_config;

    #[test]
    fn minimal_config_is_valid() {
        test_config().validate().unwrap();
    }

    #[test]
    fn zero_width_is_rejected() {
        let mut c = test_config();
        c.initial.w = Some(0.0);
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("w must be > 0"), "{err}");
    }

    #[test]
    fn mixed_outputs_are_rejected() {
        let mut c = test_config();
        c.outputs.push(Observable::Period);
        assert!(c.validate().is_err());
    }

    #[test]
    fn scheme_fields_must_match() {
        let mut c = test_config();
        c.scheme = Scheme::CoherentCavity;
        assert!(c.validate().is_err());
        c.initial = InitialSpec {
            alpha_re: Some(1.0),
            ..Default::default()
        };
        c.validate().unwrap();
    }

    #[test]
    fn sweep_fields_are_checked() {
        let mut c = test_config();
        c.outputs = vec![Observable::Period];
        c.sweep = vec![SweepAxis::new("params.gamma", vec![0.8, 1.2])];
        c.validate().unwrap();
        c.sweep = vec![SweepAxis::new("params.variant", vec![1.0])];
        assert!(c.validate().is_err());
        c.sweep = vec![SweepAxis::new("params.gamma", vec![])];
        assert!(c.validate().is_err());
        assert!(c.set_field("times.samples", 3.0).is_err());
    }

    #[test]
    fn lindblad_outputs_need_lindblad() {
        let mut c = test_config();
        c.outputs = vec![Observable::NOut];
        assert!(c.validate().is_err());
        c.backends.push(Backend::Lindblad);
        c.validate().unwrap();
        assert_eq!(c.trajectory_backends(), vec![Backend::Lindblad]);
    }
}
