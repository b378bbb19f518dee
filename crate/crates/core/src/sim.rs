//! Hybrid closed-loop simulation with exact inter-sample propagation,
//! sampling-pattern generation, event-based sampling and empirical norms.
//!
//! Between sampling instants the interconnection of plant and controller is
//! LTI, so each step advances the augmented state [x; w] with one matrix
//! exponential while the exogenous input w is held constant. Signal
//! breakpoints, sampling instants and output grid points all terminate steps.

use std::collections::HashMap;
use std::rc::Rc;
use std::io::Write;

use crate::error::{dim_err, Error, Result};
use crate::lti::StateSpace;
use crate::matfun::{block2, expm_sq, gauss_legendre, lyap, Mat, Vector};
use crate::redesign::{QSd, SampledDataController};

// ---------------------------------------------------------------------------
// Sampling patterns
// ---------------------------------------------------------------------------

/// Description of the sampling instants.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingSpec {
    Uniform { h: f64 },
    /// Intervals repeated cyclically.
    Periodic { intervals: Vec<f64> },
    /// Instants starting at 0, strictly increasing.
    Explicit { instants: Vec<f64> },
    /// Independent intervals uniform on [h_min, h_max], from a SplitMix64 stream.
    Random { h_min: f64, h_max: f64, seed: u64 },
    /// Sample when the monitor energy reaches ε² or after h_max, whichever is first.
    Event { epsilon: f64, h_max: f64 },
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Pattern(m));
        match self {
            SamplingSpec::Uniform { h } if !(*h > 0.0 && h.is_finite()) => bad(format!("interval {h} must be positive")),
            SamplingSpec::Periodic { intervals } if intervals.is_empty() || intervals.iter().any(|h| !(*h > 0.0 && h.is_finite())) => {
                bad("periodic intervals must be positive and nonempty".into())
            }
            SamplingSpec::Explicit { instants } => {
                if instants.first() != Some(&0.0) {
                    return bad("explicit instants must start at 0".into());
                }
                if instants.windows(2).any(|w| !(w[1] > w[0])) || instants.iter().any(|t| !t.is_finite()) {
                    return bad("explicit instants must be strictly increasing".into());
                }
                Ok(())
            }
            SamplingSpec::Random { h_min, h_max, .. } if !(*h_min > 0.0 && h_min <= h_max && h_max.is_finite()) => {
                bad(format!("random bounds [{h_min}, {h_max}] invalid"))
            }
            SamplingSpec::Event { epsilon, h_max } if !(*epsilon > 0.0 && *h_max > 0.0 && h_max.is_finite()) => {
                bad(format!("event parameters epsilon={epsilon}, h_max={h_max} must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Smallest possible gap (h_max for event sampling, whose gaps have no lower bound).
    pub fn min_interval(&self) -> f64 {
        match self {
            SamplingSpec::Uniform { h } => *h,
            SamplingSpec::Periodic { intervals } => intervals.iter().copied().fold(f64::INFINITY, f64::min),
            SamplingSpec::Explicit { instants } => {
                instants.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
            }
            SamplingSpec::Random { h_min, .. } => *h_min,
            SamplingSpec::Event { h_max, .. } => *h_max,
        }
    }

    pub fn max_interval(&self) -> f64 {
        match self {
            SamplingSpec::Uniform { h } => *h,
            SamplingSpec::Periodic { intervals } => intervals.iter().copied().fold(0.0, f64::max),
            SamplingSpec::Explicit { instants } => instants.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
            SamplingSpec::Random { h_max, .. } | SamplingSpec::Event { h_max, .. } => *h_max,
        }
    }

    /// One period of intervals for uniform and periodic patterns.
    pub fn period(&self) -> Option<Vec<f64>> {
        match self {
            SamplingSpec::Uniform { h } => Some(vec![*h]),
            SamplingSpec::Periodic { intervals } => Some(intervals.clone()),
            _ => None,
        }
    }
}

/// SplitMix64 output for counter `k` of stream `seed`.
pub fn splitmix64(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on [0, 1) from the 53 high bits.
pub fn unit_uniform(seed: u64, k: u64) -> f64 {
    (splitmix64(seed, k) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal(seed: u64, k: u64) -> f64 {
    // Box–Muller on two counter draws
    let u1 = 1.0 - unit_uniform(seed, 2 * k);
    let u2 = unit_uniform(seed, 2 * k + 1);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Instants 0 = t₀ < t₁ < … covering [0, T].
pub fn generate_pattern(spec: &SamplingSpec, t_end: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::Input(format!("horizon {t_end} must be positive")));
    }
    let slack = 1e-12 * t_end.max(1.0);
    let mut out = vec![0.0];
    match spec {
        SamplingSpec::Event { .. } => {
            return Err(Error::Pattern("event instants are produced by simulation".into()));
        }
        SamplingSpec::Uniform { h } => {
            let mut k = 1u64;
            while (k as f64) * h <= t_end + slack {
                out.push(k as f64 * h);
                k += 1;
            }
        }
        SamplingSpec::Periodic { intervals } => {
            let mut t = 0.0;
            for k in 0.. {
                t += intervals[k % intervals.len()];
                if t > t_end + slack {
                    break;
                }
                out.push(t);
            }
        }
        SamplingSpec::Explicit { instants } => {
            out = instants.iter().copied().filter(|t| *t <= t_end + slack).collect();
        }
        SamplingSpec::Random { h_min, h_max, seed } => {
            let mut t = 0.0;
            for k in 0.. {
                t += h_min + (h_max - h_min) * unit_uniform(*seed, k);
                if t > t_end + slack {
                    break;
                }
                out.push(t);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

/// Exogenous input w(t), applied to every disturbance channel unless noted.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    Zero,
    /// Unit Dirac impulse in one channel at t0.
    Impulse { channel: usize, t0: f64 },
    Step { amplitude: f64 },
    /// +amplitude on the first half of each period, −amplitude on the second.
    Square { amplitude: f64, period: f64 },
    /// amplitude·sin(frequency·t), frequency in rad/s.
    Sine { amplitude: f64, frequency: f64 },
    /// Independent Gaussian values per output grid cell and channel.
    Noise { seed: u64, sigma: f64 },
    /// Piecewise-constant table; `values[k]` holds on [times[k], times[k+1]).
    Samples { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// amplitude·sin²(π(t − t0)/(t1 − t0)) on [t0, t1], zero elsewhere.
    Pulse { t0: f64, t1: f64, amplitude: f64 },
}

impl SignalSpec {
    pub fn validate(&self, nw: usize) -> Result<()> {
        match self {
            SignalSpec::Impulse { channel, .. } if *channel >= nw => {
                Err(Error::Input(format!("impulse channel {channel} out of range ({nw} channels)")))
            }
            SignalSpec::Square { period, .. } if !(*period > 0.0) => Err(Error::Input("square period must be positive".into())),
            SignalSpec::Noise { sigma, .. } if !(*sigma >= 0.0) => Err(Error::Input("noise sigma must be nonnegative".into())),
            SignalSpec::Samples { times, values } => {
                if times.len() != values.len() || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Input("sample table times must increase and match values".into()));
                }
                if values.iter().any(|v| v.len() != nw) {
                    return Err(Error::Input(format!("sample rows must have {nw} entries")));
                }
                Ok(())
            }
            SignalSpec::Pulse { t0, t1, .. } if !(t1 > t0) => Err(Error::Input("pulse needs t1 > t0".into())),
            _ => Ok(()),
        }
    }

    /// Instants in (0, T) where the held value may change.
    fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        let mut b = match self {
            SignalSpec::Impulse { t0, .. } => vec![*t0],
            SignalSpec::Square { period, .. } => {
                let half = period / 2.0;
                (1..).map(|k| k as f64 * half).take_while(|t| *t < t_end).collect()
            }
            SignalSpec::Samples { times, .. } => times.clone(),
            SignalSpec::Pulse { t0, t1, .. } => vec![*t0, *t1],
            _ => vec![],
        };
        b.retain(|t| *t > 0.0 && *t < t_end);
        b
    }

    /// Value held on [t0, t1) (grid index `cell` feeds the noise stream).
    fn held(&self, t0: f64, t1: f64, cell: u64, nw: usize) -> Vector {
        let mid = 0.5 * (t0 + t1);
        let all = |v: f64| Vector::from_element(nw, v);
        match self {
            SignalSpec::Zero | SignalSpec::Impulse { .. } => Vector::zeros(nw),
            SignalSpec::Step { amplitude } => all(*amplitude),
            SignalSpec::Square { amplitude, period } => {
                let phase = (mid / period).rem_euclid(1.0);
                all(if phase < 0.5 { *amplitude } else { -amplitude })
            }
            SignalSpec::Sine { amplitude, frequency } => all(amplitude * (frequency * mid).sin()),
            SignalSpec::Noise { seed, sigma } => {
                Vector::from_fn(nw, |j, _| sigma * standard_normal(*seed, cell * nw as u64 + j as u64))
            }
            SignalSpec::Samples { times, values } => match times.iter().rposition(|t| *t <= mid) {
                Some(k) => Vector::from_vec(values[k].clone()),
                None => Vector::zeros(nw),
            },
            SignalSpec::Pulse { t0: a, t1: b, amplitude } => {
                if mid > *a && mid < *b {
                    all(amplitude * (std::f64::consts::PI * (mid - a) / (b - a)).sin().powi(2))
                } else {
                    Vector::zeros(nw)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Plant and controller
// ---------------------------------------------------------------------------

/// Generalized plant ẋ = Ax + B_w w + B_u u, z = C_z x + D_zw w + D_zu u,
/// y = C_y x + D_yw w.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPlant {
    pub a: Mat,
    pub bw: Mat,
    pub bu: Mat,
    pub cz: Mat,
    pub dzw: Mat,
    pub dzu: Mat,
    pub cy: Mat,
    pub dyw: Mat,
}

impl SimPlant {
    pub fn new(a: Mat, bw: Mat, bu: Mat, cz: Mat, dzw: Mat, dzu: Mat, cy: Mat, dyw: Mat) -> Result<Self> {
        let n = a.nrows();
        let (nw, nu, nz, ny) = (bw.ncols(), bu.ncols(), cz.nrows(), cy.nrows());
        let ok = a.is_square()
            && bw.nrows() == n
            && bu.nrows() == n
            && cz.ncols() == n
            && dzw.shape() == (nz, nw)
            && dzu.shape() == (nz, nu)
            && cy.ncols() == n
            && dyw.shape() == (ny, nw);
        if !ok {
            return dim_err("simulation plant blocks");
        }
        Ok(Self { a, bw, bu, cz, dzw, dzu, cy, dyw })
    }

    /// Plant u → y with the disturbance added to its input and z = y.
    pub fn input_disturbance(p: &StateSpace) -> Self {
        let (nu, ny) = (p.inputs(), p.outputs());
        Self {
            a: p.a().clone(),
            bw: p.b().clone(),
            bu: p.b().clone(),
            cz: p.c().clone(),
            dzw: Mat::zeros(ny, nu),
            dzu: Mat::zeros(ny, nu),
            cy: p.c().clone(),
            dyw: Mat::zeros(ny, nu),
        }
    }

    /// Stateless wiring y = w, z = u, used to drive a controller open loop.
    pub fn wiring(ny: usize, nu: usize) -> Self {
        Self {
            a: Mat::zeros(0, 0),
            bw: Mat::zeros(0, ny),
            bu: Mat::zeros(0, nu),
            cz: Mat::zeros(nu, 0),
            dzw: Mat::zeros(nu, ny),
            dzu: Mat::identity(nu, nu),
            cy: Mat::zeros(ny, 0),
            dyw: Mat::identity(ny, ny),
        }
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nw(&self) -> usize {
        self.bw.ncols()
    }
    pub fn nu(&self) -> usize {
        self.bu.ncols()
    }
    pub fn ny(&self) -> usize {
        self.cy.nrows()
    }
    pub fn nz(&self) -> usize {
        self.cz.nrows()
    }
}

/// Controller in the loop.
#[derive(Debug, Clone)]
pub enum Controller {
    /// Continuous-time LTI controller u = K y.
    Analog(StateSpace),
    SampledData(SampledDataController),
}

impl Controller {
    fn channels(&self) -> (usize, usize) {
        match self {
            Controller::Analog(k) => (k.outputs(), k.inputs()),
            Controller::SampledData(c) => (c.nu(), c.ny()),
        }
    }
}

// ---------------------------------------------------------------------------
// Augmented closed loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
struct Layout {
    p: (usize, usize),
    s: (usize, usize),
    a: (usize, usize),
    qs: (usize, usize),
    qh: (usize, usize),
    qa: (usize, usize),
    k: (usize, usize),
    m: (usize, usize),
    total: usize,
}

/// A linear map (X, w) ↦ Mx·X + Mw·w.
#[derive(Debug, Clone)]
struct Map {
    x: Mat,
    w: Mat,
}

impl Map {
    fn zeros(rows: usize, nx: usize, nw: usize) -> Self {
        Self { x: Mat::zeros(rows, nx), w: Mat::zeros(rows, nw) }
    }
    fn eval(&self, x: &Vector, w: &Vector) -> Vector {
        &self.x * x + &self.w * w
    }
    fn stacked(&self) -> Mat {
        crate::matfun::hstack(&[&self.x, &self.w])
    }
}

/// Closed loop between sampling instants plus the jump map.
#[derive(Debug, Clone)]
pub(crate) struct ClosedLoop {
    layout: Layout,
    nw: usize,
    a: Mat,
    b: Mat,
    y: Map,
    u: Map,
    z: Map,
    monitor: Option<Map>,
    jump: Option<Map>,
}

fn place(dst: &mut Mat, r: usize, c: usize, blk: &Mat) {
    if blk.nrows() > 0 && blk.ncols() > 0 {
        let mut v = dst.view_mut((r, c), blk.shape());
        v += blk;
    }
}

fn put_cols(dst: &mut Mat, c: usize, blk: &Mat) {
    place(dst, 0, c, blk);
}

impl ClosedLoop {
    pub(crate) fn new(plant: &SimPlant, ctrl: &Controller) -> Result<Self> {
        let (nu, ny) = ctrl.channels();
        if nu != plant.nu() || ny != plant.ny() {
            return dim_err(format!(
                "controller maps {ny} measurements to {nu} controls, plant has {} and {}",
                plant.ny(),
                plant.nu()
            ));
        }
        let nw = plant.nw();
        let mut lay = Layout::default();
        let mut off = 0;
        let mut alloc = |n: usize| {
            let r = (off, n);
            off += n;
            r
        };
        lay.p = alloc(plant.nx());
        match ctrl {
            Controller::Analog(k) => lay.k = alloc(k.order()),
            Controller::SampledData(c) => {
                c.validate()?;
                lay.s = alloc(c.sensor_order());
                lay.a = alloc(c.actuator_order());
                match &c.q_sd {
                    Some(QSd::SampledData(q)) => {
                        lay.qs = alloc(q.sampler_a.nrows());
                        lay.qh = alloc(q.hold_a.nrows());
                    }
                    Some(QSd::Analog(q)) => lay.qa = alloc(q.order()),
                    None => {}
                }
                if let Some(m) = &c.monitor {
                    lay.m = alloc(m.sys.order());
                }
            }
        }
        lay.total = off;
        let n = lay.total;

        // y
        let mut y = Map::zeros(ny, n, nw);
        put_cols(&mut y.x, lay.p.0, &plant.cy);
        y.w = plant.dyw.clone();

        let mut a = Mat::zeros(n, n);
        let mut b = Mat::zeros(n, nw);
        // adds coef·map to the derivative rows starting at r
        let add = |a: &mut Mat, b: &mut Mat, r: usize, coef: &Mat, map: &Map| {
            if coef.nrows() == 0 {
                return;
            }
            place(a, r, 0, &(coef * &map.x));
            place(b, r, 0, &(coef * &map.w));
        };

        let mut u = Map::zeros(nu, n, nw);
        let mut eps: Option<Map> = None;
        let mut monitor = None;
        let mut jump = None;
        match ctrl {
            Controller::Analog(k) => {
                put_cols(&mut u.x, lay.k.0, k.c());
                u.x += k.d() * &y.x;
                u.w += k.d() * &y.w;
                place(&mut a, lay.k.0, lay.k.0, k.a());
                add(&mut a, &mut b, lay.k.0, k.b(), &y);
            }
            Controller::SampledData(c) => {
                if let Some(e) = &c.innovation {
                    let mut m = y.clone();
                    put_cols(&mut m.x, lay.s.0, e);
                    eps = Some(m);
                }
                // η
                let mut eta = Map::zeros(nu, n, nw);
                match &c.q_sd {
                    Some(QSd::SampledData(q)) => put_cols(&mut eta.x, lay.qh.0, &q.hold_c),
                    Some(QSd::Analog(q)) => {
                        let e = eps.as_ref().ok_or_else(|| Error::Input("parameter needs the innovation".into()))?;
                        put_cols(&mut eta.x, lay.qa.0, q.c());
                        eta.x += q.d() * &e.x;
                        eta.w += q.d() * &e.w;
                    }
                    None => {}
                }
                u = eta.clone();
                put_cols(&mut u.x, lay.a.0, &c.actuator_c);
                // sensor
                place(&mut a, lay.s.0, lay.s.0, &c.sensor_a);
                add(&mut a, &mut b, lay.s.0, &c.sensor_by, &y);
                add(&mut a, &mut b, lay.s.0, &c.sensor_bu, &u);
                // actuator
                place(&mut a, lay.a.0, lay.a.0, &c.actuator_a);
                add(&mut a, &mut b, lay.a.0, &c.actuator_b, &eta);
                // parameter
                match &c.q_sd {
                    Some(QSd::SampledData(q)) => {
                        let e = eps.as_ref().ok_or_else(|| Error::Input("parameter needs the innovation".into()))?;
                        place(&mut a, lay.qs.0, lay.qs.0, &q.sampler_a);
                        add(&mut a, &mut b, lay.qs.0, &q.sampler_b, e);
                        place(&mut a, lay.qh.0, lay.qh.0, &q.hold_a);
                    }
                    Some(QSd::Analog(q)) => {
                        let e = eps.as_ref().expect("checked above");
                        place(&mut a, lay.qa.0, lay.qa.0, q.a());
                        add(&mut a, &mut b, lay.qa.0, q.b(), e);
                    }
                    None => {}
                }
                // monitor
                if let Some(mon) = &c.monitor {
                    let e = eps.as_ref().ok_or_else(|| Error::Input("monitor needs the innovation".into()))?;
                    let s = &mon.sys;
                    place(&mut a, lay.m.0, lay.m.0, s.a());
                    add(&mut a, &mut b, lay.m.0, s.b(), e);
                    let mut out = Map::zeros(s.outputs(), n, nw);
                    put_cols(&mut out.x, lay.m.0, s.c());
                    out.x += s.d() * &e.x;
                    out.w += s.d() * &e.w;
                    monitor = Some(out);
                }
                // jump
                let mut j = Map { x: Mat::identity(n, n), w: Mat::zeros(n, nw) };
                let zero_rows = |j: &mut Map, (r, len): (usize, usize)| {
                    j.x.rows_mut(r, len).fill(0.0);
                    j.w.rows_mut(r, len).fill(0.0);
                };
                zero_rows(&mut j, lay.a);
                place(&mut j.x, lay.a.0, lay.s.0, &c.jump_m);
                place(&mut j.x, lay.a.0, 0, &(&c.jump_n * &y.x));
                place(&mut j.w, lay.a.0, 0, &(&c.jump_n * &y.w));
                if let Some(QSd::SampledData(q)) = &c.q_sd {
                    let e = eps.as_ref().expect("checked above");
                    zero_rows(&mut j, lay.qh);
                    place(&mut j.x, lay.qh.0, lay.qs.0, &q.jump_m);
                    place(&mut j.x, lay.qh.0, lay.qh.0, &q.jump_carry);
                    place(&mut j.x, lay.qh.0, 0, &(&q.jump_n * &e.x));
                    place(&mut j.w, lay.qh.0, 0, &(&q.jump_n * &e.w));
                    if q.sampler_reset {
                        zero_rows(&mut j, lay.qs);
                    }
                }
                zero_rows(&mut j, lay.m);
                jump = Some(j);
            }
        }
        // plant
        place(&mut a, lay.p.0, lay.p.0, &plant.a);
        place(&mut b, lay.p.0, 0, &plant.bw);
        add(&mut a, &mut b, lay.p.0, &plant.bu, &u);
        let mut z = Map { x: Mat::zeros(plant.nz(), n), w: plant.dzw.clone() };
        put_cols(&mut z.x, lay.p.0, &plant.cz);
        z.x += &plant.dzu * &u.x;
        z.w += &plant.dzu * &u.w;
        Ok(Self { layout: lay, nw, a, b, y, u, z, monitor, jump })
    }

    fn n(&self) -> usize {
        self.layout.total
    }

    /// Generator of the augmented state [X; w] with ẇ = 0.
    fn augmented(&self) -> Mat {
        let (n, nw) = (self.n(), self.nw);
        block2(&self.a, &self.b, &Mat::zeros(nw, n), &Mat::zeros(nw, nw))
    }

    fn apply_jump(&self, x: &Vector, w: &Vector) -> Vector {
        match &self.jump {
            Some(j) => j.eval(x, w),
            None => x.clone(),
        }
    }
}

/// Exponential e^{Fs} and, optionally, the energy Gramians ∫₀ˢ e^{Fᵀt}CᵀCe^{Ft}dt.
struct Propagator {
    f: Mat,
    outputs: Vec<Mat>,
    cache: HashMap<u64, Rc<(Mat, Vec<Mat>)>>,
}

impl Propagator {
    fn new(f: Mat, outputs: Vec<Mat>) -> Self {
        Self { f, outputs, cache: HashMap::new() }
    }

    fn compute(&self, s: f64) -> (Mat, Vec<Mat>) {
        let n = self.f.nrows();
        if self.outputs.is_empty() {
            return (expm_sq(&(&self.f * s)), vec![]);
        }
        let k = self.outputs.len();
        // [[−Fᵀ, Q1, …],[0, F]] blocks handled one output at a time
        let mut grams = Vec::with_capacity(k);
        let mut phi = None;
        for c in &self.outputs {
            let q = c.transpose() * c;
            let big = block2(&(-self.f.transpose()), &q, &Mat::zeros(n, n), &self.f) * s;
            let e = expm_sq(&big);
            let f22 = e.view((n, n), (n, n)).into_owned();
            let f12 = e.view((0, n), (n, n)).into_owned();
            grams.push(crate::matfun::symmetrize(&(f22.transpose() * f12)));
            phi.get_or_insert(f22);
        }
        (phi.expect("at least one output"), grams)
    }

    fn get(&mut self, s: f64, cache: bool) -> Rc<(Mat, Vec<Mat>)> {
        if !cache {
            return Rc::new(self.compute(s));
        }
        let key = s.to_bits();
        if let Some(v) = self.cache.get(&key) {
            return Rc::clone(v);
        }
        let v = Rc::new(self.compute(s));
        if self.cache.len() > 64 {
            self.cache.clear();
        }
        self.cache.insert(key, v.clone());
        v
    }
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// Shortest text that parses back to `x`: plain or exponent notation, whichever is shorter.
pub fn format_shortest(x: f64) -> String {
    let plain = x.to_string();
    let exp = format!("{x:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

/// Uniformly sampled record of a simulation.
#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    pub dt: f64,
    pub times: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub x_s: Vec<Vec<f64>>,
    pub x_a: Vec<Vec<f64>>,
    pub sample_instants: Vec<f64>,
    /// Monitor output energy accumulated since the last instant.
    pub eta_energy: Vec<f64>,
    /// Euclidean norm of the full closed-loop state.
    pub state_norm: Vec<f64>,
}

impl SimTrace {
    /// Mean gap between consecutive sampling instants.
    pub fn average_interval(&self) -> Option<f64> {
        let s = &self.sample_instants;
        (s.len() >= 2).then(|| (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64)
    }

    pub fn peak_abs_z(&self) -> f64 {
        self.z.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// 1 when a sampling instant falls in (t_{k−1}, t_k] (or at t = 0 for k = 0).
    pub fn sample_indicator(&self) -> Vec<u8> {
        let mut flags = vec![0u8; self.times.len()];
        let mut k = 0;
        for &ts in &self.sample_instants {
            while k < self.times.len() && self.times[k] < ts - 1e-12 {
                k += 1;
            }
            if k < flags.len() {
                flags[k] = 1;
            }
        }
        flags
    }

    /// Writes columns t, y*, u*, z*, sample, eta_energy.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Input(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let width = |v: &Vec<Vec<f64>>| v.first().map_or(0, |r| r.len());
        let mut header = vec!["t".to_string()];
        for (name, v) in [("y", &self.y), ("u", &self.u), ("z", &self.z)] {
            header.extend((1..=width(v)).map(|i| format!("{name}{i}")));
        }
        header.push("sample".into());
        header.push("eta_energy".into());
        w.write_record(&header).map_err(io)?;
        let flags = self.sample_indicator();
        for k in 0..self.times.len() {
            let mut row = vec![format_shortest(self.times[k])];
            for v in [&self.y, &self.u, &self.z] {
                row.extend(v[k].iter().map(|x| format_shortest(*x)));
            }
            row.push(flags[k].to_string());
            row.push(format_shortest(self.eta_energy[k]));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Input(format!("csv: {e}")))?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Simulation engine
// ---------------------------------------------------------------------------

/// Options of a simulation run beyond the plant, controller and input.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    pub x0: Option<Vector>,
}

struct Engine<'a> {
    cl: &'a ClosedLoop,
    prop: Propagator,
    has_monitor: bool,
}

impl<'a> Engine<'a> {
    fn new(cl: &'a ClosedLoop) -> Self {
        let outputs: Vec<Mat> = cl.monitor.iter().map(|m| m.stacked()).collect();
        let has_monitor = !outputs.is_empty();
        Self { prop: Propagator::new(cl.augmented(), outputs), cl, has_monitor }
    }

    /// Advances by s with input w; returns new X and the monitor energy increment.
    fn step(&mut self, x: &Vector, w: &Vector, s: f64, cache: bool) -> (Vector, f64) {
        let n = self.cl.n();
        let xi = stack(x, w);
        let pg = self.prop.get(s, cache);
        let (phi, grams) = (&pg.0, &pg.1);
        let next = (phi * &xi).rows(0, n).into_owned();
        let energy = grams.first().map_or(0.0, |g| xi.dot(&(g * &xi)));
        (next, energy)
    }
}

fn stack(x: &Vector, w: &Vector) -> Vector {
    let mut v = Vector::zeros(x.len() + w.len());
    v.rows_mut(0, x.len()).copy_from(x);
    v.rows_mut(x.len(), w.len()).copy_from(w);
    v
}

/// Hybrid simulation of plant and controller over [0, T].
pub fn simulate(
    plant: &SimPlant,
    ctrl: &Controller,
    input: &SignalSpec,
    spec: &SamplingSpec,
    t_end: f64,
    dt: f64,
) -> Result<SimTrace> {
    run(plant, ctrl, input, Some(spec), &SimOptions { t_end, dt, x0: None })
}

/// Simulation of a continuous-time loop (no sampling).
pub fn simulate_analog(plant: &SimPlant, k: &StateSpace, input: &SignalSpec, t_end: f64, dt: f64) -> Result<SimTrace> {
    run(plant, &Controller::Analog(k.clone()), input, None, &SimOptions { t_end, dt, x0: None })
}

/// Event-based sampling: t_{i+1} = t_i + min{θ_i, h_max} with θ_i the time at
/// which the monitor output energy since t_i reaches ε².
pub fn simulate_event(
    plant: &SimPlant,
    ctrl: &SampledDataController,
    input: &SignalSpec,
    epsilon: f64,
    h_max: f64,
    t_end: f64,
    dt: f64,
) -> Result<SimTrace> {
    if ctrl.monitor.is_none() {
        return Err(Error::Input("event sampling needs a controller with a monitor".into()));
    }
    simulate(plant, &Controller::SampledData(ctrl.clone()), input, &SamplingSpec::Event { epsilon, h_max }, t_end, dt)
}

/// General driver; `spec = None` for analog loops.
pub fn run(
    plant: &SimPlant,
    ctrl: &Controller,
    input: &SignalSpec,
    spec: Option<&SamplingSpec>,
    opts: &SimOptions,
) -> Result<SimTrace> {
    let (t_end, dt) = (opts.t_end, opts.dt);
    if !(t_end > 0.0 && dt > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::Input(format!("horizon {t_end} and step {dt} must be positive")));
    }
    input.validate(plant.nw())?;
    let sampled = matches!(ctrl, Controller::SampledData(_));
    let spec = match (sampled, spec) {
        (true, Some(s)) => {
            s.validate()?;
            if dt > s.min_interval() / 50.0 * (1.0 + 1e-12) {
                return Err(Error::Input(format!(
                    "dt = {dt} exceeds the smallest sampling interval / 50 = {}",
                    s.min_interval() / 50.0
                )));
            }
            Some(s)
        }
        (true, None) => return Err(Error::Input("sampled-data controller needs a sampling spec".into())),
        (false, _) => None,
    };
    let cl = ClosedLoop::new(plant, ctrl)?;
    let event = match spec {
        Some(SamplingSpec::Event { epsilon, h_max }) => {
            if cl.monitor.is_none() {
                return Err(Error::Input("event sampling needs a controller with a monitor".into()));
            }
            Some((epsilon * epsilon, *h_max))
        }
        _ => None,
    };
    let mut instants: Vec<f64> = match (spec, event) {
        (Some(s), None) => generate_pattern(s, t_end)?,
        _ => vec![],
    };
    instants.reverse(); // pop from the back

    let nw = plant.nw();
    let n = cl.n();
    let mut engine = Engine::new(&cl);
    let mut x = match &opts.x0 {
        Some(v) if v.len() == n => v.clone(),
        Some(_) => return dim_err(format!("initial state must have {n} entries")),
        None => Vector::zeros(n),
    };
    let mut breaks = input.breakpoints(t_end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut breaks = breaks.into_iter().peekable();
    let impulse = match input {
        SignalSpec::Impulse { channel, t0 } => Some((*channel, *t0)),
        _ => None,
    };
    let mut impulse_done = false;

    let steps = (t_end / dt).round() as usize;
    let grid = |k: usize| if k == steps { t_end } else { k as f64 * dt };
    let tol = 1e-12 * t_end.max(1.0);

    let mut trace = SimTrace { dt, ..Default::default() };
    let mut energy = 0.0;
    let mut t = 0.0;
    let mut last_sample = 0.0;

    let apply_impulse = |x: &mut Vector, t: f64, done: &mut bool| {
        if let Some((ch, t0)) = impulse {
            if !*done && (t0 - t).abs() <= tol {
                *x += cl.b.column(ch);
                *done = true;
            }
        }
    };

    let record = |trace: &mut SimTrace, t: f64, x: &Vector, w: &Vector, energy: f64| {
        let lay = &cl.layout;
        trace.times.push(t);
        trace.y.push(cl.y.eval(x, w).iter().copied().collect());
        trace.u.push(cl.u.eval(x, w).iter().copied().collect());
        trace.z.push(cl.z.eval(x, w).iter().copied().collect());
        trace.x_s.push(x.rows(lay.s.0, lay.s.1).iter().copied().collect());
        trace.x_a.push(x.rows(lay.a.0, lay.a.1).iter().copied().collect());
        trace.eta_energy.push(energy);
        trace.state_norm.push(x.norm());
    };

    // instant at t = 0
    apply_impulse(&mut x, 0.0, &mut impulse_done);
    let w0 = input.held(0.0, dt.min(t_end), 0, nw);
    if sampled {
        if instants.last().is_some_and(|t0| t0.abs() <= tol) {
            instants.pop();
        }
        x = cl.apply_jump(&x, &w0);
        trace.sample_instants.push(0.0);
    }
    record(&mut trace, 0.0, &x, &w0, 0.0);

    for k in 1..=steps {
        let tg = grid(k);
        while t < tg - tol {
            // end of this substep
            let mut end = tg;
            let mut is_sample = false;
            if let Some(&ts) = instants.last() {
                if ts <= end + tol {
                    end = ts.min(end);
                    is_sample = true;
                }
            }
            if let Some((_, h_max)) = event {
                let forced = last_sample + h_max;
                if forced <= end + tol {
                    end = forced.min(end);
                    is_sample = true;
                }
            }
            while breaks.peek().is_some_and(|b| *b <= t + tol) {
                breaks.next();
            }
            if let Some(&b) = breaks.peek() {
                if b < end - tol {
                    end = b;
                    is_sample = false;
                }
            }
            let s = end - t;
            let w = input.held(t, end, (k - 1) as u64, nw);
            let regular = (s - dt).abs() <= 1e-15 * dt.max(1.0);
            let s = if regular { dt } else { s };
            let (mut xn, de) = engine.step(&x, &w, s, regular);
            let mut tn = end;
            if let (Some((thr, _)), true) = (event, engine.has_monitor) {
                if energy + de >= thr {
                    // bisection for the crossing inside (t, end]
                    let (mut lo, mut hi) = (0.0, s);
                    let mut best = (xn.clone(), de);
                    for _ in 0..200 {
                        if hi - lo <= 1e-12 * (t + s).max(1.0) {
                            break;
                        }
                        let mid = 0.5 * (lo + hi);
                        let (xm, em) = engine.step(&x, &w, mid, false);
                        if energy + em >= thr {
                            hi = mid;
                            best = (xm, em);
                        } else {
                            lo = mid;
                        }
                    }
                    if hi < s {
                        let (xm, _) = best;
                        xn = xm;
                        tn = t + hi;
                    }
                    is_sample = true;
                }
            }
            energy += de;
            x = xn;
            t = if (tn - tg).abs() <= tol { tg } else { tn };
            apply_impulse(&mut x, t, &mut impulse_done);
            if is_sample && sampled {
                while instants.last().is_some_and(|ts| *ts <= t + tol) {
                    instants.pop();
                }
                let w_next = input.held(t, (t + dt).min(t_end.max(t + dt)), k as u64, nw);
                x = cl.apply_jump(&x, &w_next);
                energy = 0.0;
                last_sample = t;
                trace.sample_instants.push(t);
            }
        }
        let w_rec = input.held(tg, tg + dt, k as u64, nw);
        record(&mut trace, tg, &x, &w_rec, energy);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Time-averaged H2 semi-norm of w → z for uniform or periodic sampling.
///
/// The response energy to a unit impulse at τ is xᵀ W(τ) x with x the state
/// jump of the impulse and W(τ) the periodic observability Gramian, obtained
/// from the interval exponentials and Van Loan energy Gramians by iterating
/// one period at a time until the increment is below 1e-13 of the total.
/// τ is integrated with `tau_nodes` Gauss–Legendre nodes per interval.
pub fn h2_empirical(plant: &SimPlant, ctrl: &Controller, spec: &SamplingSpec, tau_nodes: usize) -> Result<f64> {
    let cl = ClosedLoop::new(plant, ctrl)?;
    if cl.z.w.iter().any(|v| *v != 0.0) {
        return Err(Error::InfiniteNorm);
    }
    let czt = &cl.z.x;
    let q = czt.transpose() * czt;
    if let Controller::Analog(_) = ctrl {
        if !crate::lti::is_hurwitz(&cl.a) {
            return Err(Error::NotHurwitz { abscissa: crate::matfun::spectral_abscissa(&cl.a) });
        }
        let w = lyap(&cl.a.transpose(), &q)?;
        return Ok((cl.b.transpose() * w * &cl.b).trace().max(0.0).sqrt());
    }
    spec.validate()?;
    let period = spec
        .period()
        .ok_or_else(|| Error::Pattern("empirical H2 norm needs a uniform or periodic pattern".into()))?;
    let n = cl.n();
    let jump = cl.jump.as_ref().map_or_else(|| Mat::identity(n, n), |j| j.x.clone());
    let mut prop = Propagator::new(cl.a.clone(), vec![czt.clone()]);
    let mut parts: Vec<(Mat, Mat)> = period
        .iter()
        .map(|&h| {
            let pg = prop.get(h, true);
            (pg.0.clone(), pg.1[0].clone())
        })
        .collect();
    let np = period.len();
    // w_next[k]: Gramian just before the instant that starts interval k
    let mut w_at = vec![Mat::zeros(n, n); np];
    let mut total_prev = f64::INFINITY;
    for sweep in 0..200_000 {
        for k in (0..np).rev() {
            let next = &w_at[(k + 1) % np];
            let (phi, g) = &parts[k];
            let after = g + phi.transpose() * next * phi;
            w_at[k] = jump.transpose() * after * &jump;
        }
        let total = w_at[0].trace();
        if !total.is_finite() || total > 1e300 {
            return Err(Error::NotHurwitz { abscissa: f64::NAN });
        }
        if sweep > 2 && (total - total_prev).abs() <= 1e-13 * total.abs().max(1e-300) {
            break;
        }
        total_prev = total;
    }
    let (nodes, weights) = gauss_legendre(tau_nodes.max(1));
    let t_period: f64 = period.iter().sum();
    let mut acc = 0.0;
    for k in 0..np {
        let h = period[k];
        let next = &w_at[(k + 1) % np];
        for (xn, wn) in nodes.iter().zip(&weights) {
            let rest = h * (1.0 - xn);
            let pg = prop.get(rest, false);
            let (phi, g) = (&pg.0, &pg.1);
            let wtau = &g[0] + phi.transpose() * next * phi;
            acc += wn * h * (cl.b.transpose() * wtau * &cl.b).trace();
        }
    }
    parts.clear();
    Ok((acc / t_period).max(0.0).sqrt())
}

/// Decay verdict of a zero-input simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub peak: f64,
    pub terminal: f64,
    pub decays: bool,
}

/// Zero-input runs from a random initial closed-loop state for each pattern.
/// Event specs go through the full simulator since their instants depend on the state.
pub fn stability_probe(
    plant: &SimPlant,
    ctrl: &Controller,
    specs: &[SamplingSpec],
    t_end: f64,
    seed: u64,
) -> Result<Vec<DecayReport>> {
    let n = ClosedLoop::new(plant, ctrl)?.n();
    let x0 = Vector::from_fn(n, |i, _| standard_normal(seed, i as u64));
    let run_one = |spec: Option<&SamplingSpec>, dt: f64| -> Result<DecayReport> {
        let tr = run(plant, ctrl, &SignalSpec::Zero, spec, &SimOptions { t_end, dt, x0: Some(x0.clone()) })?;
        let peak = tr.state_norm.iter().copied().fold(0.0, f64::max);
        let terminal = *tr.state_norm.last().unwrap_or(&0.0);
        Ok(DecayReport { peak, terminal, decays: terminal < 1e-3 * peak })
    };
    match ctrl {
        Controller::Analog(_) => Ok(vec![run_one(None, t_end / 2000.0)?]),
        Controller::SampledData(_) => {
            let cl = ClosedLoop::new(plant, ctrl)?;
            let mut prop = Propagator::new(cl.a.clone(), vec![]);
            specs
                .iter()
                .map(|s| match s {
                    SamplingSpec::Event { h_max, .. } => run_one(Some(s), h_max / 100.0),
                    _ => zero_input_decay(&cl, &mut prop, s, &x0, t_end),
                })
                .collect()
        }
    }
}

/// Zero-input sampled-data run recording only the state norm on a grid of
/// min interval / 50, as `run` would.
fn zero_input_decay(cl: &ClosedLoop, prop: &mut Propagator, spec: &SamplingSpec, x0: &Vector, t_end: f64) -> Result<DecayReport> {
    spec.validate()?;
    if matches!(spec, SamplingSpec::Event { .. }) {
        return Err(Error::Input("the decay probe takes pattern specs".into()));
    }
    let dt = spec.min_interval() / 50.0;
    let instants = generate_pattern(spec, t_end)?;
    let w = Vector::zeros(cl.nw);
    let mut x = cl.apply_jump(x0, &w);
    let mut peak = x.norm();
    for win in instants.windows(2) {
        let (t0, t1) = (win[0], win[1].min(t_end));
        let mut t = t0;
        while t1 - t > 1e-12 * t_end.max(1.0) {
            let s = dt.min(t1 - t);
            let cached = s == dt;
            let phi = prop.get(s, cached);
            x = &phi.0 * &x;
            t += s;
            peak = peak.max(x.norm());
        }
        if win[1] <= t_end {
            x = cl.apply_jump(&x, &w);
        }
    }
    let terminal = x.norm();
    Ok(DecayReport { peak, terminal, decays: terminal < 1e-3 * peak })
}

/// Output energy on one sampling interval relative to the energy of a smooth
/// input pulse supported on that interval (controller driven open loop).
pub fn causality_ratio(ctrl: &Controller, spec: &SamplingSpec, probe_energy: f64) -> Result<f64> {
    if !(probe_energy > 0.0) {
        return Err(Error::Input("probe energy must be positive".into()));
    }
    let (nu, ny) = ctrl.channels();
    let plant = SimPlant::wiring(ny, nu);
    // second interval of the pattern, or [h_max, 2 h_max] for event specs
    let (t0, t1) = match spec {
        SamplingSpec::Event { h_max, .. } => (*h_max, 2.0 * h_max),
        _ => {
            let mut horizon = 4.0 * spec.max_interval().max(1e-9);
            loop {
                let p = generate_pattern(spec, horizon)?;
                if p.len() >= 3 {
                    break (p[1], p[2]);
                }
                horizon *= 2.0;
            }
        }
    };
    let h = t1 - t0;
    let spec_eff = match spec {
        SamplingSpec::Event { h_max, .. } => SamplingSpec::Uniform { h: *h_max },
        s => s.clone(),
    };
    let cl = ClosedLoop::new(&plant, ctrl)?;
    let dt = (spec_eff.min_interval() / 50.0).min(h / 400.0);
    // energy ∫ w² of the held pulse: amplitude² · Σ sin⁴ · dt ≈ amplitude² · 3h/8
    let amplitude = (8.0 * probe_energy / (3.0 * h) / ny as f64).sqrt();
    let pulse = SignalSpec::Pulse { t0, t1, amplitude };
    let sampled = matches!(ctrl, Controller::SampledData(_));
    // integrate the output energy exactly while replaying the pattern
    let pattern = generate_pattern(&spec_eff, t1 + h)?;
    let mut x = Vector::zeros(cl.n());
    let mut prop = Propagator::new(cl.augmented(), vec![cl.z.stacked()]);
    let nw = ny;
    let mut cuts: Vec<f64> = pattern.iter().copied().filter(|t| *t <= t1).collect();
    let steps = ((t1 / dt).ceil() as usize).max(1);
    cuts.extend((0..=steps).map(|k| (k as f64 * t1 / steps as f64).min(t1)));
    cuts.push(t0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * t1);
    let is_instant = |t: f64| pattern.iter().any(|p| (p - t).abs() <= 1e-13 * t1.max(1.0));
    if sampled {
        x = cl.apply_jump(&x, &Vector::zeros(nw));
    }
    let (mut out_energy, mut in_energy) = (0.0, 0.0);
    for win in cuts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if sampled && a > 0.0 && is_instant(a) {
            // instantaneous value, which vanishes at the pulse ends
            let wa = pulse.held(a, a, 0, nw);
            x = cl.apply_jump(&x, &wa);
        }
        let w = pulse.held(a, b, 0, nw);
        let pg = prop.get(b - a, false);
        let (phi, g) = (&pg.0, &pg.1);
        let xi = stack(&x, &w);
        if a >= t0 - 1e-13 && b <= t1 + 1e-13 {
            out_energy += xi.dot(&(&g[0] * &xi));
            in_energy += w.norm_squared() * (b - a);
        }
        x = (phi * &xi).rows(0, cl.n()).into_owned();
    }
    if in_energy <= 0.0 {
        return Err(Error::Consistency("probe pulse has no energy".into()));
    }
    Ok(out_energy / in_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::mat;

    #[test]
    fn uniform_and_periodic_patterns() {
        assert_eq!(generate_pattern(&SamplingSpec::Uniform { h: 0.5 }, 2.0).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let p = generate_pattern(&SamplingSpec::Periodic { intervals: vec![0.2, 0.3] }, 1.0).unwrap();
        let gaps: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        for (k, g) in gaps.iter().enumerate() {
            let expected = if k % 2 == 0 { 0.2 } else { 0.3 };
            assert!((g - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn random_pattern_is_reproducible_and_bounded() {
        let spec = SamplingSpec::Random { h_min: 0.1, h_max: 0.4, seed: 42 };
        let a = generate_pattern(&spec, 2500.0).unwrap();
        assert_eq!(a, generate_pattern(&spec, 2500.0).unwrap());
        assert!(a.len() > 9_000);
        assert!(a.windows(2).all(|w| w[1] - w[0] >= 0.1 - 1e-12 && w[1] - w[0] <= 0.4 + 1e-12));
        let other = generate_pattern(&SamplingSpec::Random { h_min: 0.1, h_max: 0.4, seed: 43 }, 10.0).unwrap();
        assert_ne!(a[1], other[1]);
    }

    #[test]
    fn event_spec_has_no_static_pattern() {
        assert!(matches!(
            generate_pattern(&SamplingSpec::Event { epsilon: 0.1, h_max: 1.0 }, 1.0),
            Err(Error::Pattern(_))
        ));
    }

    #[test]
    fn invalid_patterns() {
        assert!(SamplingSpec::Uniform { h: 0.0 }.validate().is_err());
        assert!(SamplingSpec::Explicit { instants: vec![0.1, 0.2] }.validate().is_err());
        assert!(SamplingSpec::Random { h_min: 0.3, h_max: 0.2, seed: 0 }.validate().is_err());
    }

    #[test]
    fn analog_first_order_step_response() {
        // ẋ = −x + w, z = x, no control
        let plant = SimPlant::new(
            mat(&[&[-1.0]]),
            mat(&[&[1.0]]),
            mat(&[&[0.0]]),
            mat(&[&[1.0]]),
            mat(&[&[0.0]]),
            mat(&[&[0.0]]),
            mat(&[&[1.0]]),
            mat(&[&[0.0]]),
        )
        .unwrap();
        let k = StateSpace::static_gain(mat(&[&[0.0]]));
        let tr = simulate_analog(&plant, &k, &SignalSpec::Step { amplitude: 2.0 }, 3.0, 0.01).unwrap();
        for (t, z) in tr.times.iter().zip(&tr.z) {
            assert!((z[0] - 2.0 * (1.0 - (-t).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let plant = SimPlant::input_disturbance(
            &StateSpace::new(mat(&[&[-1.0]]), mat(&[&[1.0]]), mat(&[&[1.0]]), mat(&[&[0.0]])).unwrap(),
        );
        let k = StateSpace::static_gain(mat(&[&[-1.0]]));
        let tr = simulate_analog(&plant, &k, &SignalSpec::Step { amplitude: 1.0 }, 0.1, 0.05).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,y1,u1,z1,sample,eta_energy");
        assert_eq!(lines.len(), 4);
    }
}
