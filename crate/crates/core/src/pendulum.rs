//! Cart–pendulum example: plant, input weight and the loop-shaping redesign.

use crate::error::Result;
use crate::lti::{series, tf_to_ss, StateSpace, TransferFunctionSiso};
use crate::matfun::{block2, hstack, vstack, Mat};
use crate::perf::{loopshape_design, HinfDesign, StandardPlant};
use crate::sim::{SignalSpec, SimPlant};

pub const GAMMA: f64 = 3.703;
pub const EPSILON: f64 = 0.025;
pub const H_MAX: f64 = 0.635;
pub const HORIZON: f64 = 20.0;

/// P(s) = −42s² / ((s + 18)(s² + 0.02s + 23)), reference to angle.
pub fn plant() -> StateSpace {
    // (s + 18)(s² + 0.02s + 23) = s³ + 18.02s² + 23.36s + 414
    let tf = TransferFunctionSiso::new(vec![-42.0, 0.0, 0.0], vec![1.0, 18.02, 23.36, 414.0]).expect("proper");
    tf_to_ss(&tf)
}

/// W_i(s) = 5 / (s + 2).
pub fn input_weight() -> StateSpace {
    tf_to_ss(&TransferFunctionSiso::new(vec![5.0], vec![1.0, 2.0]).expect("proper"))
}

/// Shaped plant P·W_i.
pub fn shaped_plant() -> StateSpace {
    series(&input_weight(), &plant()).expect("siso series")
}

pub fn design(gamma: f64) -> Result<HinfDesign> {
    loopshape_design(&shaped_plant(), gamma)
}

/// Simulation plant: controller output through W_i, load disturbance added at
/// the plant input, z = (angle, weighted correction).
pub fn sim_plant() -> SimPlant {
    let (p, w) = (plant(), input_weight());
    let (np, nw) = (p.order(), w.order());
    let a = block2(w.a(), &Mat::zeros(nw, np), &(p.b() * w.c()), p.a());
    let bu = vstack(&[w.b(), &Mat::zeros(np, 1)]);
    let bd = vstack(&[&Mat::zeros(nw, 1), p.b()]);
    let cy = hstack(&[&Mat::zeros(1, nw), p.c()]);
    let cz = vstack(&[&cy, &hstack(&[w.c(), &Mat::zeros(1, np)])]);
    SimPlant::new(a, bd, bu, cz, Mat::zeros(2, 1), Mat::zeros(2, 1), cy, Mat::zeros(1, 1)).expect("consistent blocks")
}

/// Square-wave load disturbance of ±0.5 with a 10 s period.
pub fn disturbance() -> SignalSpec {
    SignalSpec::Square { amplitude: 0.5, period: 10.0 }
}

/// Normalized H2 problem on the shaped plant: disturbance at its input,
/// unit measurement noise, z = (output, control).
pub fn h2_plant() -> StandardPlant {
    let p = shaped_plant();
    let n = p.order();
    StandardPlant::new(
        p.a().clone(),
        hstack(&[p.b(), &Mat::zeros(n, 1)]),
        p.b().clone(),
        vstack(&[p.c(), &Mat::zeros(1, n)]),
        p.c().clone(),
        Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        Mat::from_row_slice(1, 2, &[0.0, 1.0]),
    )
    .expect("stabilizable and detectable")
}
