//! Sampled-data controllers obtained from a Youla generator: the two-block
//! sensor/actuator form, the sampler/discrete/hold triple, attachment of a
//! sampled-data Youla parameter and sensor-order reduction.

use crate::error::{dim_err, Error, Result};
use crate::lti::{krylov_basis, ResetLinearSystem, StateSpace};
use crate::matfun::{expm, gauss_legendre, hstack, spectral_abscissa, van_loan_integral, Mat, Vector};
use crate::sim::{self, SamplingSpec};
use crate::youla::{q_stat, GeneratorJ0};

/// Strict-causality threshold on the probe energy ratio.
pub const STRICT_CAUSALITY_TOL: f64 = 1e-9;

/// Sampled-data Youla parameter: generalized sampler, discrete update and
/// generalized hold.
///
/// Between instants ẋ_qs = A_qs x_qs + B_qs ε and ẋ_qh = A_qh x_qh with
/// η = C_qh x_qh. At each instant x_qh ← M_q x_qs + N_q ε + P_q x_qh, after
/// which x_qs is zeroed when `sampler_reset` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SdParameter {
    pub sampler_a: Mat,
    pub sampler_b: Mat,
    pub sampler_reset: bool,
    pub hold_a: Mat,
    pub hold_c: Mat,
    pub jump_m: Mat,
    pub jump_n: Mat,
    pub jump_carry: Mat,
}

impl SdParameter {
    /// Ideal sampler followed by the hold x(t_i) = B ε(t_i), ẋ = A x, η = C x.
    pub fn sample_and_hold(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        let ny = b.ncols();
        if !a.is_square() || b.nrows() != n || c.ncols() != n {
            return dim_err("sample-and-hold blocks");
        }
        Ok(Self {
            sampler_a: Mat::zeros(0, 0),
            sampler_b: Mat::zeros(0, ny),
            sampler_reset: true,
            hold_a: a,
            hold_c: c,
            jump_m: Mat::zeros(n, 0),
            jump_n: b,
            jump_carry: Mat::zeros(n, n),
        })
    }

    pub fn inputs(&self) -> usize {
        self.jump_n.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.hold_c.nrows()
    }

    fn validate(&self) -> Result<()> {
        let (ns, nh) = (self.sampler_a.nrows(), self.hold_a.nrows());
        let ny = self.inputs();
        if !self.sampler_a.is_square()
            || self.sampler_b.shape() != (ns, ny)
            || !self.hold_a.is_square()
            || self.hold_c.ncols() != nh
            || self.jump_m.shape() != (nh, ns)
            || self.jump_n.nrows() != nh
            || self.jump_carry.shape() != (nh, nh)
        {
            return dim_err("sampled-data parameter blocks");
        }
        Ok(())
    }
}

/// Youla parameter driven by the innovation ε.
#[derive(Debug, Clone, PartialEq)]
pub enum QSd {
    SampledData(SdParameter),
    /// Continuous-time LTI parameter; not strictly causal in the lifted sense
    /// and therefore only attachable through [`attach_qsd_unchecked`].
    Analog(StateSpace),
}

impl QSd {
    fn channels(&self) -> (usize, usize) {
        match self {
            QSd::SampledData(p) => (p.outputs(), p.inputs()),
            QSd::Analog(s) => (s.outputs(), s.inputs()),
        }
    }
}

/// Sampled-data controller in sensor/actuator form.
///
/// Sensor: ẋ_s = A_s x_s + B_y y + B_u u, innovation ε = y + E x_s.
/// Actuator: ẋ_a = A_a x_a + B_η η, u = C_a x_a + η.
/// Jump at every instant t_i: x_a ← M x_s + N y.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDataController {
    pub sensor_a: Mat,
    pub sensor_by: Mat,
    pub sensor_bu: Mat,
    /// E; absent when the sensor has been reduced and ε is no longer available.
    pub innovation: Option<Mat>,
    pub actuator_a: Mat,
    pub actuator_b: Mat,
    pub actuator_c: Mat,
    pub jump_m: Mat,
    pub jump_n: Mat,
    pub q_sd: Option<QSd>,
    /// Reset system driven by ε whose output energy drives event generation.
    pub monitor: Option<ResetLinearSystem>,
}

impl SampledDataController {
    pub fn ny(&self) -> usize {
        self.sensor_by.ncols()
    }
    pub fn nu(&self) -> usize {
        self.actuator_c.nrows()
    }
    pub fn sensor_order(&self) -> usize {
        self.sensor_a.nrows()
    }
    pub fn actuator_order(&self) -> usize {
        self.actuator_a.nrows()
    }

    /// Sensor block as a system with inputs (y, u) and output ε.
    pub fn sensor(&self) -> StateSpace {
        let (ns, ny, nu) = (self.sensor_order(), self.ny(), self.nu());
        let e = self.innovation.clone().unwrap_or_else(|| Mat::zeros(ny, ns));
        StateSpace::new(
            self.sensor_a.clone(),
            hstack(&[&self.sensor_by, &self.sensor_bu]),
            e,
            hstack(&[&Mat::identity(ny, ny), &Mat::zeros(ny, nu)]),
        )
        .expect("validated controller blocks")
    }

    /// Actuator block as a system from η to u.
    pub fn actuator(&self) -> StateSpace {
        let nu = self.nu();
        StateSpace::new(self.actuator_a.clone(), self.actuator_b.clone(), self.actuator_c.clone(), Mat::identity(nu, nu))
            .expect("validated controller blocks")
    }

    /// Checks block dimensions.
    pub fn validate(&self) -> Result<()> {
        let (ns, na, ny, nu) = (self.sensor_order(), self.actuator_order(), self.ny(), self.nu());
        let ok = self.sensor_a.is_square()
            && self.sensor_by.nrows() == ns
            && self.sensor_bu.shape() == (ns, nu)
            && self.innovation.as_ref().is_none_or(|e| e.shape() == (ny, ns))
            && self.actuator_a.is_square()
            && self.actuator_b.shape() == (na, nu)
            && self.actuator_c.shape() == (nu, na)
            && self.jump_m.shape() == (na, ns)
            && self.jump_n.shape() == (na, ny);
        if !ok {
            return dim_err("sampled-data controller blocks");
        }
        if let Some(q) = &self.q_sd {
            if q.channels() != (nu, ny) {
                return dim_err("parameter channels must map innovations to actuator inputs");
            }
            if let QSd::SampledData(p) = q {
                p.validate()?;
            }
        }
        if let Some(m) = &self.monitor {
            if m.sys.inputs() != ny {
                return dim_err("monitor input must be the innovation");
            }
        }
        Ok(())
    }

    /// Same controller with an event monitor attached.
    pub fn with_monitor(mut self, monitor: ResetLinearSystem) -> Result<Self> {
        if self.innovation.is_none() {
            return Err(Error::Input("controller has no innovation signal to monitor".into()));
        }
        self.monitor = Some(monitor);
        self.validate()?;
        Ok(self)
    }
}

/// Two-block controller with x_a(t_i) = x_s(t_i) and η ≡ 0; the event
/// monitor is the static reset part of J0.
pub fn central_controller(j0: &GeneratorJ0) -> SampledDataController {
    let n = j0.order();
    SampledDataController {
        sensor_a: &j0.a_j - &j0.b_j2 * &j0.c_j1,
        sensor_by: j0.b_j12(),
        sensor_bu: j0.b_j2.clone(),
        innovation: Some(j0.c_j2.clone()),
        actuator_a: &j0.a_j - &j0.b_j1 * &j0.c_j2,
        actuator_b: j0.b_j2.clone(),
        actuator_c: j0.c_j12(),
        jump_m: Mat::identity(n, n),
        jump_n: Mat::zeros(n, j0.ny()),
        q_sd: None,
        monitor: Some(q_stat(j0)),
    }
}

/// Sampler, discrete transition and hold of the lifted central controller.
#[derive(Debug, Clone)]
pub struct LiftedTriple {
    /// A_J − B_J2·C_J1.
    pub sampler_a: Mat,
    /// B_J12.
    pub sampler_b: Mat,
    /// B_J2·C_J12, coupling of the hold into the sampler state.
    pub coupling: Mat,
    /// A_J − B_J1·C_J2.
    pub hold_a: Mat,
    /// C_J12.
    pub hold_c: Mat,
}

pub fn lifted_triple(j0: &GeneratorJ0) -> LiftedTriple {
    LiftedTriple {
        sampler_a: &j0.a_j - &j0.b_j2 * &j0.c_j1,
        sampler_b: j0.b_j12(),
        coupling: &j0.b_j2 * j0.c_j12(),
        hold_a: &j0.a_j - &j0.b_j1 * &j0.c_j2,
        hold_c: j0.c_j12(),
    }
}

impl LiftedTriple {
    /// Λ₁₁(h) + Λ₁₂(h), the map ū[i] ↦ ū[i+1] − ȳ[i+1].
    pub fn transition(&self, h: f64) -> Result<Mat> {
        let l11 = expm(&self.sampler_a, h)?;
        let l12 = van_loan_integral(&self.sampler_a, &self.coupling, &self.hold_a, h)?;
        Ok(l11 + l12)
    }

    /// Hold waveform u(t_i + θ) = C_J12 e^{(A_J − B_J1 C_J2)θ} ū[i].
    pub fn hold(&self, ubar: &Vector, theta: f64) -> Result<Vector> {
        Ok(&self.hold_c * expm(&self.hold_a, theta)? * ubar)
    }

    /// Sampler ȳ[i+1] = ∫₀^h e^{(A_J − B_J2 C_J1)(h−σ)} B_J12 y(t_i + σ) dσ by
    /// 32-node Gauss–Legendre quadrature.
    pub fn sample(&self, y: impl Fn(f64) -> Vector, h: f64) -> Result<Vector> {
        let (nodes, weights) = gauss_legendre(32);
        let mut acc = Vector::zeros(self.sampler_a.nrows());
        for (x, w) in nodes.iter().zip(&weights) {
            let sigma = x * h;
            acc += expm(&self.sampler_a, h - sigma)? * (&self.sampler_b * y(sigma)) * (w * h);
        }
        Ok(acc)
    }

    /// Runs the discrete recursion over consecutive intervals starting from
    /// ū[0] = `u0`; returns ū[0..=len].
    pub fn run(&self, u0: &Vector, intervals: &[(f64, Vector)]) -> Result<Vec<Vector>> {
        let mut out = vec![u0.clone()];
        for (h, ybar) in intervals {
            let next = self.transition(*h)? * out.last().expect("nonempty") + ybar;
            out.push(next);
        }
        Ok(out)
    }
}

/// Attaches a sampled-data parameter after checking strict causality and
/// stability of its continuous parts.
pub fn attach_qsd(ctrl: &SampledDataController, q_sd: QSd) -> Result<SampledDataController> {
    if ctrl.innovation.is_none() {
        return Err(Error::Input("controller has no innovation signal".into()));
    }
    let probe_ctrl = parameter_as_controller(&q_sd, ctrl.nu(), ctrl.ny());
    let ratio = strict_causality_probe(&probe_ctrl, &SamplingSpec::Uniform { h: 1.0 }, 1.0)?;
    if ratio >= STRICT_CAUSALITY_TOL {
        return Err(Error::NotStrictlyCausal { ratio });
    }
    if let QSd::SampledData(p) = &q_sd {
        // state that is reset at every instant stays bounded on bounded patterns
        let carried = [("sampler", &p.sampler_a, !p.sampler_reset), ("hold", &p.hold_a, p.jump_carry.iter().any(|v| *v != 0.0))];
        for (name, a, persists) in carried {
            if persists && a.nrows() > 0 && spectral_abscissa(a) >= 0.0 {
                return Err(Error::Input(format!("parameter {name} dynamics are not stable")));
            }
        }
    }
    attach_qsd_unchecked(ctrl, q_sd)
}

/// Attaches a parameter without the causality and stability checks.
pub fn attach_qsd_unchecked(ctrl: &SampledDataController, q_sd: QSd) -> Result<SampledDataController> {
    let mut out = ctrl.clone();
    out.q_sd = Some(q_sd);
    out.validate()?;
    Ok(out)
}

/// Wraps a parameter as a controller with y as its innovation and u = η
/// (empty sensor and actuator), so that it can be probed or simulated alone.
pub fn parameter_as_controller(q: &QSd, nu: usize, ny: usize) -> SampledDataController {
    SampledDataController {
        sensor_a: Mat::zeros(0, 0),
        sensor_by: Mat::zeros(0, ny),
        sensor_bu: Mat::zeros(0, nu),
        innovation: Some(Mat::zeros(ny, 0)),
        actuator_a: Mat::zeros(0, 0),
        actuator_b: Mat::zeros(0, nu),
        actuator_c: Mat::zeros(nu, 0),
        jump_m: Mat::zeros(0, 0),
        jump_n: Mat::zeros(0, ny),
        q_sd: Some(q.clone()),
        monitor: None,
    }
}

/// Central controller with the jump x_a(t_i) = (I + B_η C_J2) x_s(t_i) + B_η y(t_i)
/// and sensor modes invisible through I + B_η C_J2 removed.
///
/// This is the central controller with the sample-and-hold parameter
/// x_η(t_i) = B_η ε(t_i), ẋ_η = A_J^× x_η, η = C_J12 x_η absorbed into the actuator.
pub fn reduce_order(j0: &GeneratorJ0, b_eta: &Mat) -> Result<SampledDataController> {
    let n = j0.order();
    if b_eta.shape() != (n, j0.ny()) {
        return dim_err(format!("B_eta must be {}x{}", n, j0.ny()));
    }
    let mut ctrl = central_controller(j0);
    let m = Mat::identity(n, n) + b_eta * &j0.c_j2;
    ctrl.jump_n = b_eta.clone();
    ctrl.monitor = None;
    let v = krylov_basis(&ctrl.sensor_a.transpose(), &m.transpose(), 1e-9);
    if v.ncols() == n {
        ctrl.jump_m = m;
        return Ok(ctrl);
    }
    ctrl.sensor_a = v.transpose() * &ctrl.sensor_a * &v;
    ctrl.sensor_by = v.transpose() * &ctrl.sensor_by;
    ctrl.sensor_bu = v.transpose() * &ctrl.sensor_bu;
    ctrl.jump_m = m * &v;
    ctrl.innovation = None;
    Ok(ctrl)
}

/// Energy ratio of the controller output to a smooth probe input supported
/// on one sampling interval, measured on that same interval. Sampled-data
/// controllers give zero up to rounding.
pub fn strict_causality_probe(ctrl: &SampledDataController, pattern: &SamplingSpec, probe_energy: f64) -> Result<f64> {
    sim::causality_ratio(&sim::Controller::SampledData(ctrl.clone()), pattern, probe_energy)
}

/// Realization used by the analog prototype in the probe.
pub fn analog_probe_ratio(k: &StateSpace, pattern: &SamplingSpec, probe_energy: f64) -> Result<f64> {
    sim::causality_ratio(&sim::Controller::Analog(k.clone()), pattern, probe_energy)
}
