use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resample::matfun::Mat;
use resample::random::{random_standard_plant, Rng};
use resample_cli::config::{from_mat, ControllerSpec, PlantSpec, SamplingConfig, SignalConfig};
use resample_cli::ProjectConfig;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_resample"));
    c.env_remove("RESAMPLE_LOG");
    c
}

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> (Output, Value) {
    let out = bin().args(args).output().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out, json)
}

fn ok(args: &[&str]) -> Value {
    let (out, json) = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    json
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn write_config(dir: &Path, cfg: &ProjectConfig) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, cfg.to_json()).unwrap();
    p
}

#[test]
fn pendulum_design_report() {
    let r = ok(&["design", "--config", shipped("pendulum.json").to_str().unwrap()]);
    assert_eq!(r["mode"], "loopshape");
    assert!((r["gamma_opt"].as_f64().unwrap() - 1.7213).abs() <= 1e-3);
    assert!((r["h_sup"].as_f64().unwrap() - 0.635).abs() <= 0.005);
    assert!(r["riccati_residuals"]["control"].as_f64().unwrap() < 1e-8);
    assert!(r["riccati_residuals"]["filter"].as_f64().unwrap() < 1e-8);
    assert_eq!(r["admissibility_check"]["admissible_below"], true);
    assert_eq!(r["admissibility_check"]["admissible_above"], false);
    assert_eq!(r["analog_controller"]["zeros"].as_array().unwrap().len(), 3);
    // W_i adds one state to the three of the plant
    assert_eq!(r["controller"]["jump_m"].as_array().unwrap().len(), 4);
}

#[test]
fn design_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(&["design", "--out", dir.path().to_str().unwrap(), "--gamma", "3"]);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(file, r);
    assert_eq!(r["gamma"], 3.0);
}

#[test]
fn gamma_below_optimum_exits_two_with_certificate() {
    let (out, json) = run(&["design", "--gamma", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json["status"], "infeasible");
    assert_eq!(json["certificate"]["kind"], "below_optimum");
    assert!((json["certificate"]["gamma_opt"].as_f64().unwrap() - 1.7213).abs() < 1e-3);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = ProjectConfig::pendulum().to_json();
    text = text.replacen("\"plant\"", "\"plant_typo\"", 1);
    let p = dir.path().join("bad.json");
    std::fs::write(&p, text).unwrap();
    let (out, _) = run(&["design", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("plant_typo") && err.contains("line"), "{err}");

    let mut cfg = ProjectConfig::pendulum();
    cfg.controller = ControllerSpec::H2;
    let p = write_config(dir.path(), &cfg);
    let (out, _) = run(&["design", "--config", p.to_str().unwrap(), "--gamma", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn h2_on_random_plants_respects_the_analog_bound() {
    let mut rng = Rng::seed(4242);
    let dir = tempfile::tempdir().unwrap();
    for _ in 0..3 {
        let p = random_standard_plant(&mut rng, 3, 1, 1);
        let m = |x: &Mat| from_mat(x);
        let mut cfg = ProjectConfig::pendulum();
        cfg.plant = PlantSpec::Standard {
            a: m(&p.a),
            bw: m(&p.bw),
            bu: m(&p.bu),
            cz: m(&p.cz),
            cy: m(&p.cy),
            dzu: m(&p.dzu),
            dyw: m(&p.dyw),
        };
        cfg.weights = Default::default();
        cfg.controller = ControllerSpec::H2;
        cfg.sampling = SamplingConfig::Periodic { intervals: vec![rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)] };
        let path = write_config(dir.path(), &cfg);
        let r = ok(&["design", "--config", path.to_str().unwrap()]);
        let g0 = r["gamma0"].as_f64().unwrap();
        let gp = r["sampled_data"]["gamma_pattern"].as_f64().unwrap();
        assert!(gp >= g0 && g0 > 0.0, "{gp} < {g0}");
        assert_eq!(r["sampled_data"]["per_interval"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn pendulum_curve_passes_through_the_design_point() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(&["curve", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r["monotone"], true);
    let (header, rows) = read_csv(&dir.path().join("curve.csv"));
    assert_eq!(header, ["gamma", "h_sup"]);
    assert_eq!(rows.len(), 41);
    let design = rows.iter().find(|r| r[0] == 3.703).expect("3.703 on the grid");
    assert!((design[1] - 0.635).abs() <= 0.005);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
    assert!(rows[0][1] <= 0.02);
}

#[test]
fn two_point_sweep_gives_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["curve", "--out", d, "--gamma", "2.5", "--gamma-max", "5", "--points", "2"]);
    let (_, rows) = read_csv(&dir.path().join("curve.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0], rows[1][0]), (2.5, 5.0));
    let (out, json) = run(&["curve", "--out", d, "--gamma", "1.7", "--points", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json["certificate"]["kind"], "below_optimum");
}

#[test]
fn slope_flattens_at_the_design_level() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["curve", "--out", dir.path().to_str().unwrap(), "--gamma", "3.5", "--gamma-max", "3.9", "--points", "41"]);
    let (_, rows) = read_csv(&dir.path().join("curve.csv"));
    let slopes: Vec<(f64, f64)> =
        rows.windows(2).map(|w| (0.5 * (w[0][0] + w[1][0]), (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]))).collect();
    let peak = slopes.iter().map(|s| s.1).fold(0.0, f64::max);
    let near = slopes.iter().filter(|s| (s.0 - 3.703).abs() < 0.03).map(|s| s.1).fold(f64::INFINITY, f64::min);
    assert!(near < 0.05 * peak, "slope {near} vs peak {peak}");
}

#[test]
fn event_preset_density() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(&["simulate", "--config", shipped("pendulum.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let h_av = r["h_av"].as_f64().unwrap();
    assert!((h_av - 0.216).abs() <= 0.0216, "h_av = {h_av}");
    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, ["t", "y1", "u1", "z1", "z2", "sample", "eta_energy"]);
    let ticks = rows.iter().filter(|r| r[5] == 1.0).count();
    assert_eq!(ticks as u64, r["sample_count"].as_u64().unwrap());
    assert!(rows.iter().all(|r| r[6] <= 0.025f64.powi(2) * (1.0 + 1e-9)));
}

#[test]
fn zero_input_gives_zero_trace() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(&["simulate", "--config", shipped("zero_input.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r["peak_abs_z"], 0.0);
    let (_, rows) = read_csv(&dir.path().join("trace.csv"));
    assert!(rows.iter().all(|r| r[1..5].iter().all(|v| *v == 0.0) && r[6] == 0.0));
}

#[test]
fn uniform_and_event_loops_at_equal_density() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let event = ok(&["simulate", "--out", d.join("event").to_str().unwrap()]);
    let h_av = event["h_av"].as_f64().unwrap();
    let mut cfg = ProjectConfig::pendulum();
    cfg.sampling = SamplingConfig::Uniform { h: h_av };
    let path = write_config(d, &cfg);
    let uniform = ok(&["simulate", "--config", path.to_str().unwrap(), "--out", d.join("uniform").to_str().unwrap()]);
    for r in [&event, &uniform] {
        assert_eq!(r["zero_input"]["decays"], true);
        let peak = r["peak_abs_z"].as_f64().unwrap();
        assert!(peak.is_finite() && peak > 0.0);
    }
    let count = |r: &Value| r["sample_count"].as_f64().unwrap();
    assert!((count(&event) - count(&uniform)).abs() <= 2.0);
    // the event loop spends its samples where they matter
    assert!(event["peak_abs_z"].as_f64().unwrap() < uniform["peak_abs_z"].as_f64().unwrap());
}

#[test]
fn runs_are_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut cfg = ProjectConfig::pendulum();
    cfg.sampling = SamplingConfig::Random { h_min: 0.05, h_max: 0.4, seed: 1 };
    cfg.signal = SignalConfig::Noise { seed: 1, sigma: 0.1 };
    cfg.sim.t_end = 4.0;
    let path = write_config(d, &cfg);
    let trace = |name: &str, seed: &str| {
        let out = d.join(name);
        ok(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        std::fs::read_to_string(out.join("trace.csv")).unwrap()
    };
    assert_eq!(trace("a", "9"), trace("b", "9"));
    assert_ne!(trace("a", "9"), trace("c", "10"));
}

#[test]
fn pendulum_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(&["pendulum", "--out", dir.path().to_str().unwrap()]);
    for f in ["report.json", "design.json", "curve.csv", "analog.csv", "event.csv", "uniform.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    assert_eq!(r["checks"]["gamma_opt"], true);
    assert_eq!(r["checks"]["h_sup"], true);
    assert_eq!(r["checks"]["h_av"], true);
    for k in ["analog", "event", "uniform"] {
        assert_eq!(r["simulations"][k]["zero_input"]["decays"], true, "{k}");
    }
}
