//! The four subcommands. Each returns the JSON report it also writes to disk.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;
use serde_json::{json, Value};

use resample::error::Infeasibility;
use resample::sim::{format_shortest, run, stability_probe, Controller, SamplingSpec, SignalSpec, SimOptions, SimTrace};
use resample::Error;

use crate::config::{ProjectConfig, SamplingConfig};
use crate::error::{io_err, CliError};
use crate::synth::{finite_or_null, synthesize, CurveFamily, Synthesis};

/// Published pendulum values the preset is checked against.
pub const REFERENCE_GAMMA_OPT: f64 = 1.7213;
pub const REFERENCE_H_SUP: f64 = 0.635;
pub const REFERENCE_H_AV: f64 = 0.216;

pub fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("json value serializes");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn out_dir(cfg: &ProjectConfig, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = out.map_or_else(|| PathBuf::from(&cfg.output.dir), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

/// Synthesis report; written to `<out>/report.json` when an output directory is given.
pub fn design(cfg: &ProjectConfig, out: Option<&Path>) -> Result<Value, CliError> {
    let report = synthesize(cfg)?.report;
    if let Some(dir) = out {
        let dir = out_dir(cfg, Some(dir))?;
        write_json(&dir.join(&cfg.output.report), &report)?;
    }
    Ok(report)
}

/// Levels of the sweep: `points` equally spaced values plus the configured extras.
pub fn curve_grid(gamma_min: f64, gamma_max: f64, points: usize, include: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = match points {
        0 => vec![],
        1 => vec![gamma_min],
        n => (0..n).map(|k| gamma_min + (gamma_max - gamma_min) * k as f64 / (n - 1) as f64).collect(),
    };
    g.extend_from_slice(include);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Evaluates h_sup on the grid, spreading the points over the available cores.
pub fn sweep(family: &CurveFamily, gammas: &[f64]) -> Vec<Result<f64, Error>> {
    let workers = std::thread::available_parallelism().map_or(1, usize::from).min(gammas.len().max(1));
    let chunk = gammas.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = gammas
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&g| family.h_sup(g)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("curve worker panicked")).collect()
    })
}

fn write_curve(path: &Path, gammas: &[f64], hs: &[f64]) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["gamma", "h_sup"]).map_err(csv_err)?;
    for (g, h) in gammas.iter().zip(hs) {
        w.write_record([format_shortest(*g), format_shortest(*h)]).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub struct CurveRequest {
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub points: Option<usize>,
}

/// γ–h_sup table over [gamma_min, gamma_max]; fails when gamma_min does not exceed γ_opt.
pub fn curve(cfg: &ProjectConfig, req: &CurveRequest, out: Option<&Path>, file: &str) -> Result<Value, CliError> {
    let family = CurveFamily::from_config(cfg)?;
    let gamma_opt = family.gamma_opt(&cfg.tolerances)?;
    let gamma_min = req.gamma_min.or(cfg.curve.gamma_min).unwrap_or(gamma_opt + 0.05);
    let gamma_max = req.gamma_max.unwrap_or(cfg.curve.gamma_max);
    let points = req.points.unwrap_or(cfg.curve.points);
    if !(gamma_min > gamma_opt) {
        return Err(Error::Infeasible(Infeasibility::BelowOptimum { gamma: gamma_min, gamma_opt }).into());
    }
    if !(gamma_max >= gamma_min) {
        return Err(CliError::Input(format!("gamma_max {gamma_max} is below gamma_min {gamma_min}")));
    }
    // a grid given on the command line is taken exactly as asked
    let from_flags = req.gamma_min.is_some() || req.gamma_max.is_some() || req.points.is_some();
    let include: Vec<f64> = match from_flags {
        true => vec![],
        false => cfg.curve.include.iter().copied().filter(|g| (gamma_min..=gamma_max).contains(g)).collect(),
    };
    let gammas = curve_grid(gamma_min, gamma_max, points, &include);
    info!("sweeping {} levels from {gamma_min} to {gamma_max}", gammas.len());
    let hs = sweep(&family, &gammas).into_iter().collect::<Result<Vec<f64>, Error>>()?;
    let dir = out_dir(cfg, out)?;
    let path = dir.join(file);
    write_curve(&path, &gammas, &hs)?;
    let slopes: Vec<f64> = gammas.windows(2).zip(hs.windows(2)).map(|(g, h)| (h[1] - h[0]) / (g[1] - g[0])).collect();
    Ok(json!({
        "gamma_opt": gamma_opt,
        "rows": gammas.len(),
        "monotone": hs.windows(2).all(|w| w[1] >= w[0]),
        "peak_slope": finite_or_null(slopes.iter().copied().fold(0.0, f64::max)),
        "curve": path.display().to_string(),
    }))
}

fn write_trace(path: &Path, tr: &SimTrace) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(tr.write_csv(BufWriter::new(file))?)
}

/// Runs one loop of the synthesis under `sampling`.
pub fn run_loop(syn: &Synthesis, cfg: &ProjectConfig, sampling: &SamplingConfig, input: &SignalSpec) -> Result<(SimTrace, Value), CliError> {
    let spec = sampling.spec();
    let ctrl = match spec {
        None => Controller::Analog(syn.analog.clone()),
        Some(_) => Controller::SampledData(syn.controller.clone()),
    };
    let opts = SimOptions { t_end: cfg.sim.t_end, dt: cfg.sim.dt, x0: None };
    let tr = run(&syn.plant, &ctrl, input, spec.as_ref(), &opts)?;
    let specs: Vec<SamplingSpec> = spec.into_iter().collect();
    let probe = stability_probe(&syn.plant, &ctrl, &specs, cfg.sim.t_end, cfg.sim.probe_seed)?;
    let probe = &probe[0];
    let peak_state = tr.state_norm.iter().copied().fold(0.0, f64::max);
    let summary = json!({
        "sampling": serde_json::to_value(sampling).expect("sampling serializes"),
        "t_end": cfg.sim.t_end,
        "dt": cfg.sim.dt,
        "sample_count": tr.sample_instants.len(),
        "h_av": tr.average_interval(),
        "peak_abs_z": tr.peak_abs_z(),
        "peak_state_norm": peak_state,
        "final_state_norm": tr.state_norm.last().copied().unwrap_or(0.0),
        "zero_input": {
            "peak": probe.peak,
            "terminal": probe.terminal,
            "decays": probe.terminal < cfg.tolerances.decay_ratio * probe.peak,
        },
    });
    Ok((tr, summary))
}

/// Trace CSV plus summary JSON for the configured loop.
pub fn simulate(cfg: &ProjectConfig, out: Option<&Path>) -> Result<Value, CliError> {
    let syn = synthesize(cfg)?;
    let (tr, mut summary) = run_loop(&syn, cfg, &cfg.sampling, &cfg.signal.spec())?;
    let dir = out_dir(cfg, out)?;
    let trace = dir.join(&cfg.output.trace);
    write_trace(&trace, &tr)?;
    summary["trace"] = json!(trace.display().to_string());
    write_json(&dir.join(&cfg.output.report), &summary)?;
    Ok(summary)
}

fn within(x: Option<f64>, reference: f64, tol: f64) -> bool {
    x.is_some_and(|x| (x - reference).abs() <= tol)
}

/// Design, curve and the analog, event and uniform simulations of the pendulum preset.
pub fn pendulum(out: Option<&Path>) -> Result<Value, CliError> {
    let cfg = ProjectConfig::pendulum();
    let tol = cfg.tolerances.clone();
    let dir = out_dir(&cfg, out)?;
    let syn = synthesize(&cfg)?;
    let design = syn.report.clone();
    write_json(&dir.join("design.json"), &design)?;
    let curve = curve(&cfg, &CurveRequest { gamma_min: None, gamma_max: None, points: None }, Some(&dir), "curve.csv")?;

    let input = cfg.signal.spec();
    let mut sims = serde_json::Map::new();
    let (event_tr, event) = run_loop(&syn, &cfg, &cfg.sampling, &input)?;
    write_trace(&dir.join("event.csv"), &event_tr)?;
    let h_av = event_tr.average_interval();
    let uniform_cfg = SamplingConfig::Uniform { h: h_av.unwrap_or(cfg.sampling.spec().map_or(0.1, |s| s.max_interval())) };
    let (uniform_tr, uniform) = run_loop(&syn, &cfg, &uniform_cfg, &input)?;
    write_trace(&dir.join("uniform.csv"), &uniform_tr)?;
    let (analog_tr, analog) = run_loop(&syn, &cfg, &SamplingConfig::Analog, &input)?;
    write_trace(&dir.join("analog.csv"), &analog_tr)?;
    sims.insert("event".into(), event);
    sims.insert("uniform".into(), uniform);
    sims.insert("analog".into(), analog);

    let gamma_opt = design["gamma_opt"].as_f64();
    let h_sup = design["h_sup"].as_f64();
    let report = json!({
        "gamma": design["gamma"],
        "gamma_opt": gamma_opt,
        "h_sup": h_sup,
        "h_av": h_av,
        "analog_controller": design["analog_controller"],
        "curve": curve,
        "simulations": sims,
        "checks": {
            "gamma_opt": within(gamma_opt, REFERENCE_GAMMA_OPT, tol.gamma_opt_abs),
            "h_sup": within(h_sup, REFERENCE_H_SUP, tol.h_sup_abs),
            "h_av": within(h_av, REFERENCE_H_AV, tol.h_av_rel * REFERENCE_H_AV),
        },
    });
    write_json(&dir.join(&cfg.output.report), &report)?;
    Ok(report)
}
