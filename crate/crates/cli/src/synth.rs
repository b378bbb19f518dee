//! Turns a config into a plant, a sampled-data controller and a design report.

use serde_json::{json, Value};

use resample::lti::{series, StateSpace};
use resample::matfun::{block2, care, care_residual, hstack, symmetrize, vstack};
use resample::perf::{
    h2_gains, h2_gamma0, h2_sd_performance_with, hinf_design, hinf_gamma_opt, loopshape_design, observer_generator,
    q_stat_norm_check, HinfDesign, HinfMode, StandardPlant,
};
use resample::redesign::{central_controller, SampledDataController};
use resample::sim::{SamplingSpec, SimPlant};
use resample::youla::{build_generator, ControllerStructure, PlantControllerPair};
use resample::{Error, Mat};

use crate::config::{from_mat, ControllerSpec, ProjectConfig, Tolerances};
use crate::error::CliError;

/// Outcome of synthesis: what the simulator needs plus the JSON report.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub controller: SampledDataController,
    /// The continuous-time controller the redesign starts from.
    pub analog: StateSpace,
    pub plant: SimPlant,
    pub report: Value,
}

/// Block-diagonal interconnection: inputs and outputs stacked.
fn append(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace, Error> {
    let (n1, n2) = (g1.order(), g2.order());
    let z = |r, c| Mat::zeros(r, c);
    StateSpace::new(
        block2(g1.a(), &z(n1, n2), &z(n2, n1), g2.a()),
        block2(g1.b(), &z(n1, g2.inputs()), &z(n2, g1.inputs()), g2.b()),
        block2(g1.c(), &z(g1.outputs(), n2), &z(g2.outputs(), n1), g2.c()),
        block2(g1.d(), &z(g1.outputs(), g2.inputs()), &z(g2.outputs(), g1.inputs()), g2.d()),
    )
}

fn identity(n: usize) -> StateSpace {
    StateSpace::static_gain(Mat::identity(n, n))
}

/// The plant with its weights, W_o·P·W_i.
pub fn shaped_plant(cfg: &ProjectConfig) -> Result<Option<StateSpace>, CliError> {
    let Some(p) = cfg.plant.io_system()? else { return Ok(None) };
    let wi = cfg.weights.input.as_ref().map(|w| w.build()).transpose()?;
    let wo = cfg.weights.output.as_ref().map(|w| w.build()).transpose()?;
    let mut g = p;
    if let Some(wi) = &wi {
        g = series(wi, &g)?;
    }
    if let Some(wo) = &wo {
        g = series(&g, wo)?;
    }
    Ok(Some(g))
}

/// Simulation loop for an input–output plant: the controller drives W_i, a
/// load disturbance enters at the plant input, y = W_o·P(d + W_i u) and
/// z = (y, W_i u).
pub fn weighted_sim_plant(cfg: &ProjectConfig) -> Result<SimPlant, CliError> {
    let p = cfg.plant.io_system()?.ok_or_else(|| CliError::Input("expected an input-output plant".into()))?;
    let m = p.inputs();
    let wi = match &cfg.weights.input {
        Some(w) => w.build()?,
        None => identity(m),
    };
    let wo = match &cfg.weights.output {
        Some(w) => w.build()?,
        None => identity(p.outputs()),
    };
    if wi.outputs() != m || wo.inputs() != p.outputs() {
        return Err(CliError::Input("weight dimensions do not match the plant".into()));
    }
    let (nw, nu) = (wi.order(), wi.inputs());
    let mixer = StateSpace::new(
        wi.a().clone(),
        hstack(&[&Mat::zeros(nw, m), wi.b()]),
        vstack(&[wi.c(), wi.c()]),
        block2(&Mat::identity(m, m), wi.d(), &Mat::zeros(m, m), wi.d()),
    )?;
    let g = series(&series(&mixer, &append(&p, &identity(m))?)?, &append(&wo, &identity(m))?)?;
    let ny = wo.outputs();
    let (b, c, d) = (g.b(), g.c(), g.d());
    if d.view((0, m), (ny, nu)).amax() != 0.0 {
        return Err(CliError::Input("the loop u -> y must be strictly proper".into()));
    }
    let cols = |mat: &Mat, j0, nj| mat.columns(j0, nj).into_owned();
    Ok(SimPlant::new(
        g.a().clone(),
        cols(b, 0, m),
        cols(b, m, nu),
        c.clone(),
        cols(d, 0, m),
        cols(d, m, nu),
        c.rows(0, ny).into_owned(),
        d.view((0, 0), (ny, m)).into_owned(),
    )?)
}

/// Normalized generalized plant of P_s: disturbance at the input, unit
/// measurement noise, z = (output, control).
pub fn normalized_plant(p: &StateSpace) -> Result<StandardPlant, CliError> {
    if !p.is_strictly_proper() {
        return Err(CliError::Input("weighted plant must be strictly proper".into()));
    }
    let (n, m, q) = (p.order(), p.inputs(), p.outputs());
    Ok(StandardPlant::new(
        p.a().clone(),
        hstack(&[p.b(), &Mat::zeros(n, q)]),
        p.b().clone(),
        vstack(&[p.c(), &Mat::zeros(m, n)]),
        p.c().clone(),
        vstack(&[&Mat::zeros(q, m), &Mat::identity(m, m)]),
        hstack(&[&Mat::zeros(q, m), &Mat::identity(q, q)]),
    )?)
}

fn standard_or_normalized(cfg: &ProjectConfig) -> Result<(StandardPlant, SimPlant), CliError> {
    if let Some(sp) = cfg.plant.standard()? {
        let sim = sp.to_sim();
        return Ok((sp, sim));
    }
    let shaped = shaped_plant(cfg)?.expect("input-output plant");
    Ok((normalized_plant(&shaped)?, weighted_sim_plant(cfg)?))
}

fn require_shaped(cfg: &ProjectConfig) -> Result<StateSpace, CliError> {
    shaped_plant(cfg)?.ok_or_else(|| CliError::Input("this controller needs a tf or ss plant".into()))
}

pub fn controller_json(c: &SampledDataController) -> Value {
    json!({
        "sensor_a": from_mat(&c.sensor_a),
        "sensor_by": from_mat(&c.sensor_by),
        "sensor_bu": from_mat(&c.sensor_bu),
        "innovation": c.innovation.as_ref().map(from_mat),
        "actuator_a": from_mat(&c.actuator_a),
        "actuator_b": from_mat(&c.actuator_b),
        "actuator_c": from_mat(&c.actuator_c),
        "jump_m": from_mat(&c.jump_m),
        "jump_n": from_mat(&c.jump_n),
    })
}

pub fn system_json(k: &StateSpace) -> Value {
    let mut v = json!({ "a": from_mat(k.a()), "b": from_mat(k.b()), "c": from_mat(k.c()), "d": from_mat(k.d()) });
    if k.inputs() == 1 && k.outputs() == 1 {
        if let Ok(zpk) = k.zpk() {
            v["zeros"] = json!(zpk.zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
            v["poles"] = json!(zpk.poles.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
            v["gain"] = json!(zpk.gain);
        }
    }
    v
}

/// Infinity has no JSON literal; it is written as null.
pub fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Runs the admissibility cross-check just below and just above h_sup.
fn admissibility_check(d: &HinfDesign, tol: &Tolerances) -> Result<Value, CliError> {
    if !d.h_sup.is_finite() {
        return Ok(json!({ "skipped": "every interval is admissible" }));
    }
    let (lo, hi) = ((1.0 - tol.consistency_margin) * d.h_sup, (1.0 + tol.consistency_margin) * d.h_sup);
    let (ok_lo, ok_hi) = (q_stat_norm_check(d, lo)?, q_stat_norm_check(d, hi)?);
    if !ok_lo || ok_hi {
        return Err(Error::Consistency(format!(
            "admissibility verdicts {ok_lo} at h = {lo} and {ok_hi} at h = {hi} contradict h_sup = {}",
            d.h_sup
        ))
        .into());
    }
    Ok(json!({ "h_below": lo, "admissible_below": ok_lo, "h_above": hi, "admissible_above": ok_hi }))
}

fn hinf_report(d: &HinfDesign, residuals: (f64, f64), tol: &Tolerances) -> Result<Value, CliError> {
    let mode = match d.mode {
        HinfMode::Standard => "hinf",
        HinfMode::LoopShaping => "loopshape",
    };
    Ok(json!({
        "mode": mode,
        "gamma": d.gamma,
        "gamma_opt": d.gamma_opt,
        "h_sup": finite_or_null(d.h_sup),
        "rho_yx": d.rho_yx,
        "z_gamma": from_mat(&d.z_gamma),
        "f": from_mat(&d.f),
        "l": from_mat(&d.l),
        "riccati_residuals": { "control": residuals.0, "filter": residuals.1 },
        "admissibility_check": admissibility_check(d, tol)?,
        "controller": controller_json(&d.controller),
        "analog_controller": system_json(&d.analog_controller()),
    }))
}

pub fn loopshape(p_s: &StateSpace, gamma: f64, tol: &Tolerances) -> Result<(HinfDesign, Value), CliError> {
    let d = loopshape_design(p_s, gamma)?;
    let (a, b, c) = (p_s.a(), p_s.b(), p_s.c());
    let (bb, cc) = (symmetrize(&(b * b.transpose())), symmetrize(&(c.transpose() * c)));
    let rx = care_residual(a, &bb, &cc, &d.x).norm();
    let ry = care_residual(&a.transpose(), &cc, &bb, &d.y).norm();
    let report = hinf_report(&d, (rx, ry), tol)?;
    Ok((d, report))
}

fn hinf(sp: &StandardPlant, gamma: f64, tol: &Tolerances) -> Result<(HinfDesign, Value), CliError> {
    let gamma_opt = hinf_gamma_opt(sp, tol.gamma_opt_bisection)?;
    let mut d = hinf_design(sp, gamma)?;
    d.gamma_opt = Some(gamma_opt);
    let g2 = gamma.powi(-2);
    let sx = symmetrize(&(&sp.bu * sp.bu.transpose() - &sp.bw * sp.bw.transpose() * g2));
    let sy = symmetrize(&(sp.cy.transpose() * &sp.cy - sp.cz.transpose() * &sp.cz * g2));
    let rx = care_residual(&sp.a, &sx, &(sp.cz.transpose() * &sp.cz), &d.x).norm();
    let ry = care_residual(&sp.a.transpose(), &sy, &(&sp.bw * sp.bw.transpose()), &d.y).norm();
    let report = hinf_report(&d, (rx, ry), tol)?;
    Ok((d, report))
}

fn h2(sp: &StandardPlant, sampling: Option<&SamplingSpec>) -> Result<(SampledDataController, StateSpace, Value), CliError> {
    let (f, l) = h2_gains(sp)?;
    let j0 = observer_generator(sp, &f, &l)?;
    let gamma0 = h2_gamma0(sp, &f, &l)?;
    let StandardPlant { a, bw, bu, cz, cy, dzu, dyw } = sp;
    let (nz, nw) = (cz.nrows(), bw.ncols());
    let rx = care(
        &(a - bu * dzu.transpose() * cz),
        &(bu * bu.transpose()),
        &symmetrize(&(cz.transpose() * (Mat::identity(nz, nz) - dzu * dzu.transpose()) * cz)),
    )?
    .residual_norm;
    let ry = care(
        &(a - bw * dyw.transpose() * cy).transpose(),
        &(cy.transpose() * cy),
        &symmetrize(&(bw * (Mat::identity(nw, nw) - dyw.transpose() * dyw) * bw.transpose())),
    )?
    .residual_norm;
    let periodic = sampling.filter(|s| matches!(s, SamplingSpec::Uniform { .. } | SamplingSpec::Periodic { .. }));
    let performance = match periodic {
        Some(spec) => {
            let rep = h2_sd_performance_with(&f, &l, a, gamma0, spec)?;
            json!({
                "gamma_pattern": rep.gamma_pattern,
                "per_interval": rep.per_interval.iter().map(|(h, g)| json!({ "h": h, "gamma1": g })).collect::<Vec<_>>(),
            })
        }
        None => json!({ "skipped": "sampled-data performance needs a uniform or periodic pattern" }),
    };
    let controller = central_controller(&j0);
    let analog = j0.central();
    let report = json!({
        "mode": "h2",
        "gamma0": gamma0,
        "sampled_data": performance,
        "f": from_mat(&f),
        "l": from_mat(&l),
        "riccati_residuals": { "control": rx, "filter": ry },
        "controller": controller_json(&controller),
        "analog_controller": system_json(&analog),
    });
    Ok((controller, analog, report))
}

pub fn synthesize(cfg: &ProjectConfig) -> Result<Synthesis, CliError> {
    let tol = &cfg.tolerances;
    match &cfg.controller {
        ControllerSpec::Loopshape { gamma } => {
            let p_s = require_shaped(cfg)?;
            let (d, report) = loopshape(&p_s, *gamma, tol)?;
            let analog = d.analog_controller();
            Ok(Synthesis { controller: d.controller, analog, plant: weighted_sim_plant(cfg)?, report })
        }
        ControllerSpec::Hinf { gamma } => {
            let (sp, plant) = standard_or_normalized(cfg)?;
            let (d, report) = hinf(&sp, *gamma, tol)?;
            let analog = d.analog_controller();
            Ok(Synthesis { controller: d.controller, analog, plant, report })
        }
        ControllerSpec::H2 => {
            let (sp, plant) = standard_or_normalized(cfg)?;
            let (controller, analog, report) = h2(&sp, cfg.sampling.spec().as_ref())?;
            Ok(Synthesis { controller, analog, plant, report })
        }
        ControllerSpec::Given { k0 } => {
            let p_s = require_shaped(cfg)?;
            let k0 = k0.build()?;
            let pair = PlantControllerPair::new(p_s, k0.clone())?;
            let j0 = build_generator(&pair, &ControllerStructure::General { f0: None, l0: None })?;
            let controller = central_controller(&j0);
            let report = json!({
                "mode": "given",
                "generator_order": j0.order(),
                "controller": controller_json(&controller),
                "analog_controller": system_json(&k0),
            });
            Ok(Synthesis { controller, analog: k0, plant: weighted_sim_plant(cfg)?, report })
        }
    }
}

/// Design family swept by the γ–h_sup curve.
pub enum CurveFamily {
    LoopShaping(StateSpace),
    Standard(StandardPlant),
}

impl CurveFamily {
    pub fn from_config(cfg: &ProjectConfig) -> Result<Self, CliError> {
        match &cfg.controller {
            ControllerSpec::Loopshape { .. } => Ok(Self::LoopShaping(require_shaped(cfg)?)),
            ControllerSpec::Hinf { .. } => Ok(Self::Standard(standard_or_normalized(cfg)?.0)),
            _ => Err(CliError::Input("the curve needs an hinf or loopshape controller".into())),
        }
    }

    pub fn gamma_opt(&self, tol: &Tolerances) -> Result<f64, CliError> {
        Ok(match self {
            Self::LoopShaping(p) => resample::perf::loopshape_riccati(p)?.2,
            Self::Standard(sp) => hinf_gamma_opt(sp, tol.gamma_opt_bisection)?,
        })
    }

    pub fn h_sup(&self, gamma: f64) -> Result<f64, Error> {
        match self {
            Self::LoopShaping(p) => loopshape_design(p, gamma).map(|d| d.h_sup),
            Self::Standard(sp) => hinf_design(sp, gamma).map(|d| d.h_sup),
        }
    }
}
