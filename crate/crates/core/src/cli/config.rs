use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::apseries::{StripParams, DEFAULT_KMAX};
use crate::diophantine::ApproximationFunction;
use crate::homological::DEFAULT_TOL_DIV;
use crate::kam::{GoldenInstance, StepControl};
use crate::oscillator::{Damping, MapGrid, Restoring};
use crate::smalltwist::{AveragingControl, ChartControl};

const GOLDEN_PAIR: [f64; 2] = [1.0, 0.618_033_988_749_894_9];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Homological,
    KamStep,
    KamRun,
    DiophScan,
    SmallTwistAvg,
    SmallTwistSplit,
    SmallTwistChart,
    OscillatorSimulate,
    OscillatorPoincare,
    OscillatorExpansion,
    OscillatorBounded,
    OscillatorResonant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Homological,
    Kam,
    Dioph,
    SmallTwist,
    Oscillator,
}

impl Scenario {
    pub const ALL: [Scenario; 12] = [
        Self::Homological,
        Self::KamStep,
        Self::KamRun,
        Self::DiophScan,
        Self::SmallTwistAvg,
        Self::SmallTwistSplit,
        Self::SmallTwistChart,
        Self::OscillatorSimulate,
        Self::OscillatorPoincare,
        Self::OscillatorExpansion,
        Self::OscillatorBounded,
        Self::OscillatorResonant,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Homological => "homological",
            Self::KamStep => "kam-step",
            Self::KamRun => "kam-run",
            Self::DiophScan => "dioph-scan",
            Self::SmallTwistAvg => "small-twist-avg",
            Self::SmallTwistSplit => "small-twist-split",
            Self::SmallTwistChart => "small-twist-chart",
            Self::OscillatorSimulate => "oscillator-simulate",
            Self::OscillatorPoincare => "oscillator-poincare",
            Self::OscillatorExpansion => "oscillator-expansion",
            Self::OscillatorBounded => "oscillator-bounded",
            Self::OscillatorResonant => "oscillator-resonant",
        }
    }

    fn sections(self) -> &'static [Section] {
        match self {
            Self::Homological => &[Section::Homological],
            Self::KamStep | Self::KamRun => &[Section::Kam],
            Self::DiophScan => &[Section::Dioph],
            Self::SmallTwistAvg | Self::SmallTwistSplit | Self::SmallTwistChart => {
                &[Section::SmallTwist, Section::Oscillator]
            }
            _ => &[Section::Oscillator],
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Random mean-zero right-hand sides for the difference equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomologicalSection {
    pub frequencies: Vec<f64>,
    pub varrho: f64,
    pub kmax: i64,
    pub alpha: f64,
    pub samples: usize,
    pub max_modes: usize,
    pub tol_div: f64,
    pub delta: ApproximationFunction,
}

impl Default for HomologicalSection {
    fn default() -> Self {
        Self {
            frequencies: GOLDEN_PAIR.to_vec(),
            varrho: 3.0,
            kmax: 8,
            alpha: GoldenInstance::default().alpha,
            samples: 50,
            max_modes: 40,
            tol_div: DEFAULT_TOL_DIV,
            delta: ApproximationFunction::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KamSection {
    /// Fit `c₆` on the instance scaled by 1, 1/2, 1/4 when `control.c6` is zero.
    pub calibrate: bool,
    pub instance: GoldenInstance,
    pub control: StepControl,
}

impl Default for KamSection {
    fn default() -> Self {
        Self {
            calibrate: true,
            instance: GoldenInstance::default(),
            control: StepControl::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiophSection {
    pub frequencies: Vec<f64>,
    pub varrho: f64,
    pub kmax: i64,
    pub gamma: f64,
    /// Rotation number to scan as well, if given.
    pub alpha: Option<f64>,
    pub gamma0: f64,
    pub jmax: Option<i64>,
    pub delta: ApproximationFunction,
}

impl Default for DiophSection {
    fn default() -> Self {
        Self {
            frequencies: GOLDEN_PAIR.to_vec(),
            varrho: 3.0,
            kmax: DEFAULT_KMAX,
            gamma: 0.0,
            alpha: None,
            gamma0: 0.0,
            jmax: None,
            delta: ApproximationFunction::default(),
        }
    }
}

/// The small-twist map is the first-order return map of the `[oscillator]` system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallTwistSection {
    pub epsilon: f64,
    pub degree: usize,
    /// `ρ`-interval of the series and of the chart bracket.
    pub outer: (f64, f64),
    pub inner: (f64, f64),
    pub strip: StripParams,
    pub averaging: AveragingControl,
    pub chart: ChartControl,
    pub verify_theta: usize,
    pub verify_rho: usize,
}

impl Default for SmallTwistSection {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            degree: 8,
            outer: (1.0, 2.0),
            inner: (1.3, 1.6),
            strip: StripParams {
                r: 0.1,
                s: 0.5,
                m: 0.1,
            },
            averaging: AveragingControl::default(),
            chart: ChartControl::default(),
            verify_theta: 16,
            verify_rho: 5,
        }
    }
}

/// `a·sin(⟨k,ω⟩t)`, `k` listed densely over the frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub k: Vec<i64>,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub state: [f64; 2],
    pub t_end: f64,
    pub tol: f64,
    pub sample_dt: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            state: [0.0, 5.0],
            t_end: 100.0,
            tol: 1e-12,
            sample_dt: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareParams {
    pub epsilon: f64,
    /// Scales of the order fit; fewer than two skips it.
    pub epsilons: Vec<f64>,
    pub grid: MapGrid,
}

impl Default for PoincareParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            epsilons: vec![1e-2, 1e-3, 1e-4],
            grid: MapGrid::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionParams {
    pub rho0: f64,
    pub t_avg: f64,
    /// Points of the coefficient table over one period `2π/ϖ`.
    pub n_tau: usize,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            t_avg: 1e4,
            n_tau: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundedParams {
    pub radii: Vec<f64>,
    pub t_end: f64,
    pub tol: f64,
}

impl Default for BoundedParams {
    fn default() -> Self {
        Self {
            radii: (1..=10).map(|i| 5.0 * i as f64).collect(),
            t_end: 1e4,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonantParams {
    pub grid: usize,
}

impl Default for ResonantParams {
    fn default() -> Self {
        Self { grid: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSection {
    pub varpi: f64,
    pub frequencies: Vec<f64>,
    pub kmax: i64,
    pub varrho: f64,
    pub phi: Restoring,
    pub damping: Damping,
    pub forcing: Vec<ForcingMode>,
    pub phi_inf: Option<f64>,
    pub simulate: SimulateParams,
    pub poincare: PoincareParams,
    pub expansion: ExpansionParams,
    pub bounded: BoundedParams,
    pub resonant: ResonantParams,
}

impl Default for OscillatorSection {
    fn default() -> Self {
        Self {
            varpi: 1.0,
            frequencies: vec![2f64.sqrt(), 1.0 + GOLDEN_PAIR[1]],
            kmax: 3,
            varrho: 3.0,
            phi: Restoring::arctan(),
            damping: Damping::Gauss { amplitude: 1.0 },
            forcing: vec![
                ForcingMode {
                    k: vec![1, 0],
                    amplitude: 0.3,
                },
                ForcingMode {
                    k: vec![0, 1],
                    amplitude: 0.2,
                },
            ],
            phi_inf: Some(FRAC_PI_2),
            simulate: SimulateParams::default(),
            poincare: PoincareParams::default(),
            expansion: ExpansionParams::default(),
            bounded: BoundedParams::default(),
            resonant: ResonantParams::default(),
        }
    }
}

/// One run: the scenario, its seed and the sections it reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homological: Option<HomologicalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kam: Option<KamSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dioph: Option<DiophSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_twist: Option<SmallTwistSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillator: Option<OscillatorSection>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn interval(name: &str, (a, b): (f64, f64)) -> Result<(), CliError> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(invalid(format!("{name} = [{a}, {b}] is not an interval")))
    }
}

impl RunConfig {
    /// All sections of `scenario` at their defaults.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            seed: 0,
            homological: None,
            kam: None,
            dioph: None,
            small_twist: None,
            oscillator: None,
        };
        c.fill_defaults();
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut c: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        c.fill_defaults();
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    fn fill_defaults(&mut self) {
        for s in self.scenario.sections() {
            match s {
                Section::Homological => {
                    self.homological.get_or_insert_with(Default::default);
                }
                Section::Kam => {
                    self.kam.get_or_insert_with(Default::default);
                }
                Section::Dioph => {
                    self.dioph.get_or_insert_with(Default::default);
                }
                Section::SmallTwist => {
                    self.small_twist.get_or_insert_with(Default::default);
                }
                Section::Oscillator => {
                    self.oscillator.get_or_insert_with(Default::default);
                }
            }
        }
    }

    /// Rejects sections the scenario does not read and out-of-range values in those it does.
    pub fn validate(&self) -> Result<(), CliError> {
        let used = self.scenario.sections();
        let present = [
            (Section::Homological, self.homological.is_some(), "homological"),
            (Section::Kam, self.kam.is_some(), "kam"),
            (Section::Dioph, self.dioph.is_some(), "dioph"),
            (Section::SmallTwist, self.small_twist.is_some(), "small_twist"),
            (Section::Oscillator, self.oscillator.is_some(), "oscillator"),
        ];
        for (s, is, name) in present {
            if is && !used.contains(&s) {
                return Err(invalid(format!(
                    "section [{name}] is not read by scenario {}",
                    self.scenario
                )));
            }
        }
        if let Some(h) = &self.homological {
            positive("homological.alpha", h.alpha.abs())?;
            positive("homological.tol_div", h.tol_div)?;
            if h.samples == 0 || h.max_modes == 0 || h.kmax < 1 {
                return Err(invalid("homological: samples, max_modes and kmax must be at least 1"));
            }
            h.delta.validate().map_err(|e| invalid(e.to_string()))?;
        }
        if let Some(k) = &self.kam {
            positive("kam.instance.eps0", k.instance.eps0)?;
            if k.instance.max_steps == 0 || k.instance.degree == 0 {
                return Err(invalid("kam.instance: max_steps and degree must be at least 1"));
            }
            k.control.delta.validate().map_err(|e| invalid(e.to_string()))?;
        }
        if let Some(d) = &self.dioph {
            if d.frequencies.is_empty() || d.kmax < 1 {
                return Err(invalid("dioph: need frequencies and kmax ≥ 1"));
            }
            d.delta.validate().map_err(|e| invalid(e.to_string()))?;
        }
        if let Some(s) = &self.small_twist {
            positive("small_twist.epsilon", s.epsilon)?;
            interval("small_twist.outer", s.outer)?;
            interval("small_twist.inner", s.inner)?;
            if s.inner.0 < s.outer.0 || s.inner.1 > s.outer.1 {
                return Err(invalid("small_twist.inner must lie inside outer"));
            }
            if s.degree < 2 {
                return Err(invalid("small_twist.degree must be at least 2"));
            }
        }
        if let Some(o) = &self.oscillator {
            positive("oscillator.varpi", o.varpi)?;
            if o.frequencies.is_empty() {
                return Err(invalid("oscillator.frequencies is empty"));
            }
            for m in &o.forcing {
                if m.k.len() != o.frequencies.len() {
                    return Err(invalid(format!(
                        "forcing mode {:?} has {} entries for {} frequencies",
                        m.k,
                        m.k.len(),
                        o.frequencies.len()
                    )));
                }
            }
            positive("oscillator.simulate.t_end", o.simulate.t_end)?;
            positive("oscillator.simulate.sample_dt", o.simulate.sample_dt)?;
            positive("oscillator.expansion.t_avg", o.expansion.t_avg)?;
            positive("oscillator.bounded.t_end", o.bounded.t_end)?;
            if o.expansion.n_tau == 0 || o.resonant.grid == 0 {
                return Err(invalid("oscillator: empty τ grid"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
