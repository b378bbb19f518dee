//! Project configuration: one JSON document, matrices as nested row arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};

use resample::lti::{tf_to_ss, StateSpace, TransferFunctionSiso};
use resample::perf::StandardPlant;
use resample::sim::{SamplingSpec, SignalSpec};
use resample::{pendulum, Mat};

use crate::error::CliError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub plant: PlantSpec,
    #[serde(default)]
    pub weights: Weights,
    pub controller: ControllerSpec,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub curve: CurveParams,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A linear system given as a SISO transfer function or as state-space blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Tf { num: Vec<f64>, den: Vec<f64> },
    Ss { a: Rows, b: Rows, c: Rows, d: Rows },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSpec {
    Tf { num: Vec<f64>, den: Vec<f64> },
    Ss { a: Rows, b: Rows, c: Rows, d: Rows },
    /// Generalized plant with disturbance w, control u, performance z and measurement y.
    Standard { a: Rows, bw: Rows, bu: Rows, cz: Rows, cy: Rows, dzu: Rows, dyw: Rows },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<SystemSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    Given { k0: SystemSpec },
    H2,
    Hinf { gamma: f64 },
    Loopshape { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingConfig {
    /// Continuous-time loop with the analog controller.
    Analog,
    Uniform { h: f64 },
    Periodic { intervals: Vec<f64> },
    Explicit { instants: Vec<f64> },
    Random { h_min: f64, h_max: f64, seed: u64 },
    Event { epsilon: f64, h_max: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    #[default]
    Zero,
    Impulse { channel: usize, t0: f64 },
    Step { amplitude: f64 },
    Square { amplitude: f64, period: f64 },
    Sine { amplitude: f64, frequency: f64 },
    Noise { seed: u64, sigma: f64 },
    Samples { times: Vec<f64>, values: Rows },
    Pulse { t0: f64, t1: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub t_end: f64,
    pub dt: f64,
    /// Seed of the random initial state used by the zero-input decay probe.
    pub probe_seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { t_end: 20.0, dt: 1e-3, probe_seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveParams {
    /// Defaults to γ_opt + 0.05 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    pub gamma_max: f64,
    pub points: usize,
    /// Extra levels merged into the grid.
    pub include: Vec<f64>,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self { gamma_min: None, gamma_max: 6.0, points: 40, include: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub dir: String,
    pub report: String,
    pub trace: String,
    pub curve: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self { dir: "out".into(), report: "report.json".into(), trace: "trace.csv".into(), curve: "curve.csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative bisection tolerance for the standard H∞ optimum.
    pub gamma_opt_bisection: f64,
    /// The admissibility cross-check runs at (1 ∓ margin)·h_sup.
    pub consistency_margin: f64,
    pub gamma_opt_abs: f64,
    pub h_sup_abs: f64,
    pub h_av_rel: f64,
    /// Flat region: finite-difference slope below this fraction of the peak slope.
    pub flat_slope_ratio: f64,
    pub decay_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gamma_opt_bisection: 1e-6,
            consistency_margin: 0.1,
            gamma_opt_abs: 1e-3,
            h_sup_abs: 0.005,
            h_av_rel: 0.10,
            flat_slope_ratio: 0.05,
            decay_ratio: 1e-3,
        }
    }
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|source| CliError::Config { path: path.display().to_string(), source })
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Cart–pendulum loop-shaping preset with event sampling.
    pub fn pendulum() -> Self {
        Self {
            plant: PlantSpec::Tf { num: vec![-42.0, 0.0, 0.0], den: vec![1.0, 18.02, 23.36, 414.0] },
            weights: Weights { input: Some(SystemSpec::Tf { num: vec![5.0], den: vec![1.0, 2.0] }), output: None },
            controller: ControllerSpec::Loopshape { gamma: pendulum::GAMMA },
            sampling: SamplingConfig::Event { epsilon: pendulum::EPSILON, h_max: pendulum::H_MAX },
            signal: SignalConfig::Square { amplitude: 0.5, period: 10.0 },
            sim: SimParams { t_end: pendulum::HORIZON, ..SimParams::default() },
            curve: CurveParams { include: vec![pendulum::GAMMA], ..CurveParams::default() },
            output: OutputPaths::default(),
            tolerances: Tolerances::default(),
        }
    }

    /// Replaces every seed in the config.
    pub fn reseed(&mut self, seed: u64) {
        if let SamplingConfig::Random { seed: s, .. } = &mut self.sampling {
            *s = seed;
        }
        if let SignalConfig::Noise { seed: s, .. } = &mut self.signal {
            *s = seed;
        }
        self.sim.probe_seed = seed;
    }

    /// Replaces γ of an H∞ or loop-shaping controller spec.
    pub fn set_gamma(&mut self, gamma: f64) -> Result<(), CliError> {
        match &mut self.controller {
            ControllerSpec::Hinf { gamma: g } | ControllerSpec::Loopshape { gamma: g } => {
                *g = gamma;
                Ok(())
            }
            _ => Err(CliError::Input("--gamma needs an hinf or loopshape controller".into())),
        }
    }
}

pub fn to_mat(rows: &Rows, name: &str) -> Result<Mat, CliError> {
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(CliError::Input(format!("matrix {name} has rows of different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Input(format!("matrix {name} has non-finite entries")));
    }
    Ok(Mat::from_fn(rows.len(), nc, |i, j| rows[i][j]))
}

pub fn from_mat(m: &Mat) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn build_ss(a: &Rows, b: &Rows, c: &Rows, d: &Rows) -> Result<StateSpace, CliError> {
    let (a, b, c, d) = (to_mat(a, "a")?, to_mat(b, "b")?, to_mat(c, "c")?, to_mat(d, "d")?);
    // an empty A leaves the other block shapes ambiguous; read them off D
    let n = a.nrows();
    let b = if n == 0 { Mat::zeros(0, d.ncols()) } else { b };
    let c = if n == 0 { Mat::zeros(d.nrows(), 0) } else { c };
    Ok(StateSpace::new(a, b, c, d)?)
}

fn build_tf(num: &[f64], den: &[f64]) -> Result<StateSpace, CliError> {
    Ok(tf_to_ss(&TransferFunctionSiso::new(num.to_vec(), den.to_vec())?))
}

impl SystemSpec {
    pub fn build(&self) -> Result<StateSpace, CliError> {
        match self {
            SystemSpec::Tf { num, den } => build_tf(num, den),
            SystemSpec::Ss { a, b, c, d } => build_ss(a, b, c, d),
        }
    }
}

impl PlantSpec {
    /// The plant as an input–output system; `None` for a generalized plant.
    pub fn io_system(&self) -> Result<Option<StateSpace>, CliError> {
        match self {
            PlantSpec::Tf { num, den } => build_tf(num, den).map(Some),
            PlantSpec::Ss { a, b, c, d } => build_ss(a, b, c, d).map(Some),
            PlantSpec::Standard { .. } => Ok(None),
        }
    }

    pub fn standard(&self) -> Result<Option<StandardPlant>, CliError> {
        match self {
            PlantSpec::Standard { a, bw, bu, cz, cy, dzu, dyw } => Ok(Some(StandardPlant::new(
                to_mat(a, "a")?,
                to_mat(bw, "bw")?,
                to_mat(bu, "bu")?,
                to_mat(cz, "cz")?,
                to_mat(cy, "cy")?,
                to_mat(dzu, "dzu")?,
                to_mat(dyw, "dyw")?,
            )?)),
            _ => Ok(None),
        }
    }
}

impl SamplingConfig {
    /// `None` for the analog loop.
    pub fn spec(&self) -> Option<SamplingSpec> {
        Some(match self {
            SamplingConfig::Analog => return None,
            SamplingConfig::Uniform { h } => SamplingSpec::Uniform { h: *h },
            SamplingConfig::Periodic { intervals } => SamplingSpec::Periodic { intervals: intervals.clone() },
            SamplingConfig::Explicit { instants } => SamplingSpec::Explicit { instants: instants.clone() },
            SamplingConfig::Random { h_min, h_max, seed } => SamplingSpec::Random { h_min: *h_min, h_max: *h_max, seed: *seed },
            SamplingConfig::Event { epsilon, h_max } => SamplingSpec::Event { epsilon: *epsilon, h_max: *h_max },
        })
    }
}

impl SignalConfig {
    pub fn spec(&self) -> SignalSpec {
        match self.clone() {
            SignalConfig::Zero => SignalSpec::Zero,
            SignalConfig::Impulse { channel, t0 } => SignalSpec::Impulse { channel, t0 },
            SignalConfig::Step { amplitude } => SignalSpec::Step { amplitude },
            SignalConfig::Square { amplitude, period } => SignalSpec::Square { amplitude, period },
            SignalConfig::Sine { amplitude, frequency } => SignalSpec::Sine { amplitude, frequency },
            SignalConfig::Noise { seed, sigma } => SignalSpec::Noise { seed, sigma },
            SignalConfig::Samples { times, values } => SignalSpec::Samples { times, values },
            SignalConfig::Pulse { t0, t1, amplitude } => SignalSpec::Pulse { t0, t1, amplitude },
        }
    }
}
