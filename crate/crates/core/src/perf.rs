//! H2 and H∞ synthesis and analysis under intermittent sampling.

use crate::error::{dim_err, Error, Infeasibility, Result};
use crate::lti::{finite_horizon_l2_gain_less, h2_norm_lti, is_hurwitz, lft_lower, StateSpace};
use crate::matfun::{
    block2, care, dre_flow, eigenvalues, expm, inverse, min_sym_eig, spectral_abscissa, spectral_radius, symmetrize,
    uniform_grid, Mat,
};
use crate::redesign::{central_controller, SampledDataController};
use crate::sim::{SamplingSpec, SimPlant};
use crate::youla::{build_generator, q_stat, ControllerStructure, GeneratorJ0, PlantControllerPair};

const NORMALIZATION_TOL: f64 = 1e-10;
const HAUTUS_TOL: f64 = 1e-9;
/// Upper limit of the admissible-interval search.
pub const H_SUP_CAP: f64 = 1e3;
const H_SUP_TOL: f64 = 1e-6;

/// Generalized plant with D_zw = 0 and D_yu = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardPlant {
    pub a: Mat,
    pub bw: Mat,
    pub bu: Mat,
    pub cz: Mat,
    pub cy: Mat,
    pub dzu: Mat,
    pub dyw: Mat,
}

fn hautus_rank_ok(a: &Mat, b: &Mat) -> bool {
    let n = a.nrows();
    let scale = 1.0 + a.norm() + b.norm();
    eigenvalues(a).iter().filter(|l| l.re >= -HAUTUS_TOL).all(|l| {
        let m = crate::matfun::CMat::from_fn(n, n + b.ncols(), |i, j| {
            if j < n {
                num_complex::Complex64::new(a[(i, j)], 0.0) - if i == j { *l } else { 0.0.into() }
            } else {
                b[(i, j - n)].into()
            }
        });
        m.singular_values().min() > HAUTUS_TOL * scale
    })
}

impl StandardPlant {
    /// Validates shapes, the normalizations D_zuᵀD_zu = I, D_ywD_ywᵀ = I and
    /// stabilizability/detectability of (A, B_u, C_y).
    pub fn new(a: Mat, bw: Mat, bu: Mat, cz: Mat, cy: Mat, dzu: Mat, dyw: Mat) -> Result<Self> {
        let n = a.nrows();
        let (nw, nu, nz, ny) = (bw.ncols(), bu.ncols(), cz.nrows(), cy.nrows());
        if !a.is_square()
            || bw.nrows() != n
            || bu.nrows() != n
            || cz.ncols() != n
            || cy.ncols() != n
            || dzu.shape() != (nz, nu)
            || dyw.shape() != (ny, nw)
        {
            return dim_err("standard plant blocks");
        }
        if (dzu.transpose() * &dzu - Mat::identity(nu, nu)).norm() > NORMALIZATION_TOL {
            return Err(Error::Input("D_zu must satisfy D_zuᵀ D_zu = I".into()));
        }
        if (&dyw * dyw.transpose() - Mat::identity(ny, ny)).norm() > NORMALIZATION_TOL {
            return Err(Error::Input("D_yw must satisfy D_yw D_ywᵀ = I".into()));
        }
        if !hautus_rank_ok(&a, &bu) {
            return Err(Error::Input("(A, B_u) is not stabilizable".into()));
        }
        if !hautus_rank_ok(&a.transpose(), &cy.transpose()) {
            return Err(Error::Input("(C_y, A) is not detectable".into()));
        }
        Ok(Self { a, bw, bu, cz, cy, dzu, dyw })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// The measurement channel u ↦ y.
    pub fn p_yu(&self) -> StateSpace {
        let (ny, nu) = (self.cy.nrows(), self.bu.ncols());
        StateSpace::new(self.a.clone(), self.bu.clone(), self.cy.clone(), Mat::zeros(ny, nu)).expect("validated shapes")
    }

    pub fn to_sim(&self) -> SimPlant {
        let (nz, nw, ny) = (self.cz.nrows(), self.bw.ncols(), self.cy.nrows());
        SimPlant::new(
            self.a.clone(),
            self.bw.clone(),
            self.bu.clone(),
            self.cz.clone(),
            Mat::zeros(nz, nw),
            self.dzu.clone(),
            self.cy.clone(),
            self.dyw.clone(),
        )
        .inspect(|p| debug_assert_eq!(p.ny(), ny))
        .expect("validated shapes")
    }
}

// ---------------------------------------------------------------------------
// H2
// ---------------------------------------------------------------------------

/// Gains F (state feedback) and L (filter) of the analog H2 problem.
pub fn h2_gains(plant: &StandardPlant) -> Result<(Mat, Mat)> {
    let StandardPlant { a, bw, bu, cz, cy, dzu, dyw } = plant;
    let (nz, nw) = (cz.nrows(), bw.ncols());
    // cross terms moved into the drift before the Riccati solves
    let ax = a - bu * dzu.transpose() * cz;
    let qx = cz.transpose() * (Mat::identity(nz, nz) - dzu * dzu.transpose()) * cz;
    let x = care(&ax, &(bu * bu.transpose()), &symmetrize(&qx))?.x;
    let f = -(bu.transpose() * &x + dzu.transpose() * cz);
    let ay = a - bw * dyw.transpose() * cy;
    let qy = bw * (Mat::identity(nw, nw) - dyw.transpose() * dyw) * bw.transpose();
    let y = care(&ay.transpose(), &(cy.transpose() * cy), &symmetrize(&qy))?.x;
    let l = -(&y * cy.transpose() + bw * dyw.transpose());
    Ok((f, l))
}

/// Optimal analog H2 performance ‖T₁‖₂.
pub fn h2_gamma0(plant: &StandardPlant, f: &Mat, l: &Mat) -> Result<f64> {
    let StandardPlant { a, bw, bu, cz, cy, dzu, dyw } = plant;
    let n = plant.order();
    let af = a + bu * f;
    let al = a + l * cy;
    let at = block2(&af, &(-(bu * f)), &Mat::zeros(n, n), &al);
    let bt = crate::matfun::vstack(&[bw, &(bw + l * dyw)]);
    let ct = crate::matfun::hstack(&[&(cz + dzu * f), &(-(dzu * f))]);
    let t1 = StateSpace::new(at, bt, ct, Mat::zeros(cz.nrows(), bw.ncols()))?;
    h2_norm_lti(&t1)
}

/// γ₁(h) = ∫₀ʰ∫₀^{h−τ} ‖F e^{At} L‖²_F dt dτ = ∫₀ʰ (h − t) ‖F e^{At} L‖²_F dt,
/// from the (1,3) block of the exponential of
/// [[−Aᵀ, I, 0], [0, −Aᵀ, FᵀF], [0, 0, A]].
pub fn gamma1(f: &Mat, l: &Mat, a: &Mat, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::Input(format!("interval {h} must be nonnegative")));
    }
    let n = a.nrows();
    let mut big = Mat::zeros(3 * n, 3 * n);
    big.view_mut((0, 0), (n, n)).copy_from(&(-a.transpose()));
    big.view_mut((0, n), (n, n)).copy_from(&Mat::identity(n, n));
    big.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    big.view_mut((n, 2 * n), (n, n)).copy_from(&(f.transpose() * f));
    big.view_mut((2 * n, 2 * n), (n, n)).copy_from(a);
    let e = expm(&big, h)?;
    let h13 = e.view((0, 2 * n), (n, n)).into_owned();
    let f33 = e.view((2 * n, 2 * n), (n, n)).into_owned();
    let weighted = symmetrize(&(f33.transpose() * h13));
    Ok((l.transpose() * weighted * l).trace().max(0.0))
}

/// H2 performance of the sampled-data redesign for a periodic pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct H2Report {
    pub gamma0: f64,
    pub gamma_pattern: f64,
    /// (h_j, γ₁(h_j)) for the intervals of one period.
    pub per_interval: Vec<(f64, f64)>,
    pub f: Mat,
    pub l: Mat,
}

/// Pattern performance γ² = γ₀² + Σγ₁(h_j)/Σh_j for one period of intervals.
pub fn pattern_gamma_sq(f: &Mat, l: &Mat, a: &Mat, gamma0: f64, intervals: &[f64]) -> Result<f64> {
    let total: f64 = intervals.iter().sum();
    if intervals.is_empty() || !(total > 0.0) {
        return Err(Error::Pattern("pattern needs positive intervals".into()));
    }
    let mut acc = 0.0;
    for &h in intervals {
        acc += gamma1(f, l, a, h)?;
    }
    Ok(gamma0 * gamma0 + acc / total)
}

/// Attainable H2 performance for a uniform or periodic pattern, with γ₀ given.
pub fn h2_sd_performance_with(f: &Mat, l: &Mat, a: &Mat, gamma0: f64, pattern: &SamplingSpec) -> Result<H2Report> {
    pattern.validate()?;
    let intervals = pattern
        .period()
        .ok_or_else(|| Error::Pattern("limit undefined for aperiodic finite data; use a uniform or periodic pattern".into()))?;
    let per_interval = intervals.iter().map(|&h| gamma1(f, l, a, h).map(|g| (h, g))).collect::<Result<Vec<_>>>()?;
    let g2 = pattern_gamma_sq(f, l, a, gamma0, &intervals)?;
    Ok(H2Report { gamma0, gamma_pattern: g2.sqrt(), per_interval, f: f.clone(), l: l.clone() })
}

/// Attainable H2 performance of the plant for a uniform or periodic pattern.
pub fn h2_sd_performance(plant: &StandardPlant, pattern: &SamplingSpec) -> Result<H2Report> {
    let (f, l) = h2_gains(plant)?;
    let gamma0 = h2_gamma0(plant, &f, &l)?;
    h2_sd_performance_with(&f, &l, &plant.a, gamma0, pattern)
}

/// Observer-based generator with gains (F, L).
pub fn observer_generator(plant: &StandardPlant, f: &Mat, l: &Mat) -> Result<GeneratorJ0> {
    let p = plant.p_yu();
    let (nu, ny) = (p.inputs(), p.outputs());
    let k0 = StateSpace::new(&plant.a + &plant.bu * f + l * &plant.cy, -l, f.clone(), Mat::zeros(nu, ny))?;
    let pair = PlantControllerPair::new(p, k0)?;
    build_generator(&pair, &ControllerStructure::ObserverBased { f: f.clone(), l: l.clone() })
}

/// H2-optimal sampled-data controller (η = 0) and its performance.
pub fn h2_sd_controller(plant: &StandardPlant, pattern: &SamplingSpec) -> Result<(SampledDataController, H2Report)> {
    let report = h2_sd_performance(plant, pattern)?;
    let j0 = observer_generator(plant, &report.f, &report.l)?;
    Ok((central_controller(&j0), report))
}

/// γ² over two-periodic patterns (h − δ, h + δ) padded with h up to N intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityScan {
    pub points: Vec<(f64, f64)>,
    pub argmin: f64,
    /// Central finite difference of γ² at each δ.
    pub derivatives: Vec<(f64, f64)>,
}

pub fn uniform_optimality_scan(
    f: &Mat,
    l: &Mat,
    a: &Mat,
    gamma0: f64,
    h_av: f64,
    n: usize,
    deltas: &[f64],
) -> Result<OptimalityScan> {
    if n < 2 {
        return Err(Error::Input("pattern length must be at least 2".into()));
    }
    let eval = |d: f64| -> Result<f64> {
        let mut hs = vec![h_av; n];
        hs[0] = h_av - d;
        hs[1] = h_av + d;
        pattern_gamma_sq(f, l, a, gamma0, &hs)
    };
    let mut points = Vec::with_capacity(deltas.len());
    let mut derivatives = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if !(d.abs() < h_av) {
            return Err(Error::Input(format!("|delta| = {} must be below h = {h_av}", d.abs())));
        }
        points.push((d, eval(d)?));
        let step = 1e-4 * h_av;
        let lo = (d - step).max(-h_av * (1.0 - 1e-9));
        let hi = (d + step).min(h_av * (1.0 - 1e-9));
        derivatives.push((d, (eval(hi)? - eval(lo)?) / (hi - lo)));
    }
    let argmin = points.iter().min_by(|x, y| x.1.total_cmp(&y.1)).map_or(0.0, |p| p.0);
    Ok(OptimalityScan { points, argmin, derivatives })
}

// ---------------------------------------------------------------------------
// H∞
// ---------------------------------------------------------------------------

/// Which design produced an [`HinfDesign`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HinfMode {
    Standard,
    LoopShaping,
}

/// Data of the differential Riccati equation Ṗ = AP + PAᵀ + W + PRP,
/// P(0) = P0, monitored through ρ(P(t)X) < threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityDre {
    pub a: Mat,
    pub w: Mat,
    pub r: Mat,
    pub p0: Mat,
    pub x: Mat,
    pub threshold: f64,
}

impl AdmissibilityDre {
    /// True iff ρ(P(t)X) stays below the threshold on [0, h].
    pub fn admissible(&self, h: f64) -> Result<bool> {
        if h <= 0.0 {
            return Ok(spectral_radius(&(&self.p0 * &self.x))? < self.threshold);
        }
        let traj = dre_flow(&self.a, &self.w, &self.r, &self.p0, &uniform_grid(h, 200), Some(&self.x))?;
        Ok(traj.escape.is_none() && traj.rho_px.iter().all(|r| *r < self.threshold))
    }

    /// Least upper bound of admissible intervals, bisected to 1e-6;
    /// infinite if no violation occurs up to [`H_SUP_CAP`].
    pub fn h_sup(&self) -> Result<f64> {
        let slowest = eigenvalues(&self.a)
            .iter()
            .map(|l| l.re.abs())
            .filter(|r| *r > 1e-12)
            .fold(f64::INFINITY, f64::min);
        let mut horizon = if slowest.is_finite() { (10.0 / slowest).min(H_SUP_CAP) } else { 1.0 };
        if !self.admissible(0.0)? {
            return Ok(0.0);
        }
        loop {
            let grid = uniform_grid(horizon, 200);
            let traj = dre_flow(&self.a, &self.w, &self.r, &self.p0, &grid, Some(&self.x))?;
            let first_bad = traj.rho_px.iter().position(|r| !(*r < self.threshold));
            let bracket = match (first_bad, traj.escape) {
                (Some(k), esc) => Some((k - 1, esc.map_or(grid[k], |e| e.min(grid[k])))),
                (None, Some(e)) => Some((traj.times.len() - 1, e)),
                (None, None) => None,
            };
            if let Some((k, mut hi)) = bracket {
                // ρ(P(t)X) is non-decreasing, so the endpoint decides admissibility
                let (t0, p0) = (traj.times[k], &traj.p_values[k]);
                let mut lo = t0;
                while hi - lo > H_SUP_TOL {
                    let mid = 0.5 * (lo + hi);
                    let seg = dre_flow(&self.a, &self.w, &self.r, p0, &[0.0, mid - t0], Some(&self.x))?;
                    if seg.escape.is_none() && seg.rho_px.last().is_some_and(|r| *r < self.threshold) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
            if horizon >= H_SUP_CAP {
                return Ok(f64::INFINITY);
            }
            horizon = (2.0 * horizon).min(H_SUP_CAP);
        }
    }
}

/// γ-suboptimal design with its sampled-data redesign.
#[derive(Debug, Clone)]
pub struct HinfDesign {
    pub mode: HinfMode,
    pub gamma: f64,
    pub gamma_opt: Option<f64>,
    pub x: Mat,
    pub y: Mat,
    pub rho_yx: f64,
    pub z_gamma: Mat,
    pub h_sup: f64,
    pub f: Mat,
    pub l: Mat,
    pub controller: SampledDataController,
    pub generator: GeneratorJ0,
    pub dre: AdmissibilityDre,
}

impl HinfDesign {
    /// Norm bound the static part of the parameter must respect.
    pub fn q_bound(&self) -> f64 {
        match self.mode {
            HinfMode::Standard => self.gamma,
            HinfMode::LoopShaping => (self.gamma * self.gamma - 1.0).sqrt(),
        }
    }

    /// Analog central controller lft_lower(J_γ, 0).
    pub fn analog_controller(&self) -> StateSpace {
        self.generator.central()
    }
}

fn stabilizing_psd(
    sol: Result<crate::matfun::RiccatiSolution>,
    closed: impl Fn(&Mat) -> Mat,
    which: fn(String) -> Infeasibility,
) -> Result<Mat> {
    let x = sol.map_err(|e| Error::Infeasible(which(format!("no stabilizing solution ({e})"))))?.x;
    let scale = 1.0 + x.norm();
    let min_eig = min_sym_eig(&x);
    if min_eig < -1e-9 * scale {
        return Err(Error::Infeasible(which(format!("solution has eigenvalue {min_eig:.3e} < 0"))));
    }
    if !is_hurwitz(&closed(&x)) {
        return Err(Error::Infeasible(which("closed-loop matrix is not Hurwitz".into())));
    }
    Ok(x)
}

/// Riccati solutions X, Y and ρ(YX) of the standard H∞ problem at level γ.
pub fn hinf_riccati(plant: &StandardPlant, gamma: f64) -> Result<(Mat, Mat, f64)> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Input(format!("gamma = {gamma} must be positive")));
    }
    let StandardPlant { a, bw, bu, cz, cy, dzu, dyw } = plant;
    let g2 = gamma.powi(-2);
    if (dzu.transpose() * cz).norm() > NORMALIZATION_TOL || (bw * dyw.transpose()).norm() > NORMALIZATION_TOL {
        return Err(Error::Input("H-infinity design requires D_zuᵀC_z = 0 and B_w D_ywᵀ = 0".into()));
    }
    let sx = bu * bu.transpose() - bw * bw.transpose() * g2;
    let x = stabilizing_psd(care(a, &symmetrize(&sx), &(cz.transpose() * cz)), |x| a - &sx * x, Infeasibility::ControlRiccati)?;
    let sy = cy.transpose() * cy - cz.transpose() * cz * g2;
    let y = stabilizing_psd(
        care(&a.transpose(), &symmetrize(&sy), &(bw * bw.transpose())),
        |y| a - y * &sy,
        Infeasibility::FilterRiccati,
    )?;
    let rho = spectral_radius(&(&y * &x))?;
    if rho >= gamma * gamma {
        return Err(Error::Infeasible(Infeasibility::Coupling { rho, bound: gamma * gamma }));
    }
    Ok((x, y, rho))
}

/// Optimal analog H∞ level by bisection on the feasibility of [`hinf_riccati`].
pub fn hinf_gamma_opt(plant: &StandardPlant, rel_tol: f64) -> Result<f64> {
    let mut hi = 1.0;
    let mut tries = 0;
    while hinf_riccati(plant, hi).is_err() {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Infeasible(Infeasibility::ControlRiccati("no feasible level below 2^60".into())));
        }
    }
    let mut lo = 0.0;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if hinf_riccati(plant, mid).is_ok() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Standard H∞ design at level γ with its sampled-data redesign.
pub fn hinf_design(plant: &StandardPlant, gamma: f64) -> Result<HinfDesign> {
    let (x, y, rho_yx) = hinf_riccati(plant, gamma)?;
    let StandardPlant { a, bw, bu, cz, cy, dzu, dyw } = plant;
    let n = plant.order();
    let g2 = gamma.powi(-2);
    let f = -(bu.transpose() * &x + dzu.transpose() * cz);
    let l = -(&y * cy.transpose() + bw * dyw.transpose());
    let z = inverse(&(Mat::identity(n, n) - &y * &x * g2))?;
    let bu_t = bu + &y * cz.transpose() * dzu * g2;
    let cy_t = cy + dyw * bw.transpose() * &x * g2;
    let a_f = a + bw * bw.transpose() * &x * g2 + bu * &f;
    let a_l = a + &y * cz.transpose() * cz * g2 + &l * cy;
    let a_gamma = &a_f + &z * &l * &cy_t;
    let (ny, nu) = (cy.nrows(), bu.ncols());
    let generator = GeneratorJ0::new(a_gamma, -(&z * &l), &z * &bu_t, f.clone(), -cy_t.clone(), Mat::zeros(nu, ny))?;
    let controller = SampledDataController {
        sensor_a: a_l,
        sensor_by: -l.clone(),
        sensor_bu: bu_t.clone(),
        innovation: Some(-(&cy_t * &z)),
        actuator_a: a_f,
        actuator_b: &z * &bu_t,
        actuator_c: f.clone(),
        jump_m: z.clone(),
        jump_n: Mat::zeros(n, ny),
        q_sd: None,
        monitor: Some(q_stat(&generator)),
    };
    let dre = AdmissibilityDre {
        a: a.clone(),
        w: symmetrize(&(bw * bw.transpose())),
        r: symmetrize(&(cz.transpose() * cz * g2)),
        p0: y.clone(),
        x: x.clone(),
        threshold: gamma * gamma,
    };
    let h_sup = dre.h_sup()?;
    Ok(HinfDesign {
        mode: HinfMode::Standard,
        gamma,
        gamma_opt: None,
        x,
        y,
        rho_yx,
        z_gamma: z,
        h_sup,
        f,
        l,
        controller,
        generator,
        dre,
    })
}

/// Normalized-coprime-factor Riccati solutions and γ_opt = √(1 + ρ(YX)).
pub fn loopshape_riccati(p_msh: &StateSpace) -> Result<(Mat, Mat, f64)> {
    if !p_msh.is_strictly_proper() {
        return Err(Error::Input("shaped plant must be strictly proper".into()));
    }
    let (a, b, c) = (p_msh.a(), p_msh.b(), p_msh.c());
    let bb = symmetrize(&(b * b.transpose()));
    let cc = symmetrize(&(c.transpose() * c));
    let x = stabilizing_psd(care(a, &bb, &cc), |x| a - &bb * x, Infeasibility::ControlRiccati)?;
    let y = stabilizing_psd(care(&a.transpose(), &cc, &bb), |y| a - y * &cc, Infeasibility::FilterRiccati)?;
    let rho = spectral_radius(&(&y * &x))?;
    Ok((x, y, (1.0 + rho).sqrt()))
}

/// Loop-shaping design at robustness level γ with its sampled-data redesign.
pub fn loopshape_design(p_msh: &StateSpace, gamma: f64) -> Result<HinfDesign> {
    let (x, y, gamma_opt) = loopshape_riccati(p_msh)?;
    if !(gamma > gamma_opt) {
        return Err(Error::Infeasible(Infeasibility::BelowOptimum { gamma, gamma_opt }));
    }
    let (a, b, c) = (p_msh.a(), p_msh.b(), p_msh.c());
    let n = p_msh.order();
    let g2 = gamma.powi(-2);
    let z = inverse(&(Mat::identity(n, n) * (1.0 - g2) - &y * &x * g2))?;
    // Z_γ is similar to a symmetric matrix, so its spectrum is real
    let z_min = eigenvalues(&z).iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    if !(z_min > 1.0) {
        return Err(Error::Consistency(format!("Z_gamma has eigenvalue {z_min} not above 1")));
    }
    let f = -(b.transpose() * &x);
    let l = -(&y * c.transpose());
    let a_x = a + b * &f;
    let generator = GeneratorJ0::new(
        &a_x + &z * &l * c,
        -(&z * &l),
        &z * b,
        f.clone(),
        -c.clone(),
        Mat::zeros(b.ncols(), c.nrows()),
    )?;
    let controller = SampledDataController {
        sensor_a: a + &l * c,
        sensor_by: -l.clone(),
        sensor_bu: b.clone(),
        innovation: Some(-(c * &z)),
        actuator_a: a_x,
        actuator_b: &z * b,
        actuator_c: f.clone(),
        jump_m: z.clone(),
        jump_n: Mat::zeros(n, c.nrows()),
        q_sd: None,
        monitor: Some(q_stat(&generator)),
    };
    let dre = AdmissibilityDre {
        a: a.clone(),
        w: symmetrize(&(b * b.transpose())),
        r: symmetrize(&(c.transpose() * c / (gamma * gamma - 1.0))),
        p0: y.clone(),
        x: x.clone(),
        threshold: gamma * gamma - 1.0,
    };
    let h_sup = dre.h_sup()?;
    let rho_yx = gamma_opt * gamma_opt - 1.0;
    Ok(HinfDesign {
        mode: HinfMode::LoopShaping,
        gamma,
        gamma_opt: Some(gamma_opt),
        x,
        y,
        rho_yx,
        z_gamma: z,
        h_sup,
        f,
        l,
        controller,
        generator,
        dre,
    })
}

/// One point of the γ–h_sup trade-off; failures are kept, not propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub gamma: f64,
    pub h_sup: std::result::Result<f64, Error>,
}

pub fn gamma_h_curve(p_msh: &StateSpace, gammas: &[f64]) -> Vec<CurvePoint> {
    gammas
        .iter()
        .map(|&gamma| CurvePoint { gamma, h_sup: loopshape_design(p_msh, gamma).map(|d| d.h_sup) })
        .collect()
}

/// Cross-checks the Riccati admissibility verdict at interval h against the
/// finite-horizon L2 gain of the static parameter part; returns the common verdict.
pub fn q_stat_norm_check(design: &HinfDesign, h: f64) -> Result<bool> {
    let dre_verdict = design.dre.admissible(h)?;
    let q = q_stat(&design.generator).sys;
    let lti_verdict = finite_horizon_l2_gain_less(&q, h, design.q_bound())?;
    if dre_verdict != lti_verdict {
        return Err(Error::Consistency(format!(
            "admissibility at h = {h}: Riccati says {dre_verdict}, L2 gain says {lti_verdict}"
        )));
    }
    Ok(dre_verdict)
}

/// Admissibility thresholds in h from the Riccati route and from bisection on
/// the finite-horizon L2 gain of the static parameter part.
pub fn q_stat_flip_points(design: &HinfDesign) -> Result<(f64, f64)> {
    let q = q_stat(&design.generator).sys;
    let bound = design.q_bound();
    let below = |h: f64| finite_horizon_l2_gain_less(&q, h, bound);
    let mut hi = if design.h_sup.is_finite() { 2.0 * design.h_sup.max(1e-3) } else { 1.0 };
    while below(hi)? {
        hi *= 2.0;
        if hi > H_SUP_CAP {
            return Ok((design.h_sup, f64::INFINITY));
        }
    }
    let mut lo = 0.0;
    while hi - lo > H_SUP_TOL {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((design.h_sup, 0.5 * (lo + hi)))
}

/// The analog central controller of a design, as K0 for an LTI loop.
pub fn central_analog(design: &HinfDesign) -> Result<StateSpace> {
    let part = design.generator.to_partitioned();
    lft_lower(&part, &StateSpace::zero(design.generator.nu(), design.generator.ny()))
}

/// Spectral abscissa of the analog closed loop, for diagnostics.
pub fn closed_loop_abscissa(p: &StateSpace, k: &StateSpace) -> Result<f64> {
    Ok(spectral_abscissa(&crate::lti::feedback_a(p, k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::freq_match;
    use crate::matfun::mat;
    use crate::random::{random_standard_plant, Rng};

    fn scalar_plant() -> StandardPlant {
        StandardPlant::new(
            mat(&[&[0.0]]),
            mat(&[&[1.0, 0.0]]),
            mat(&[&[1.0]]),
            mat(&[&[1.0], &[0.0]]),
            mat(&[&[1.0]]),
            mat(&[&[0.0], &[1.0]]),
            mat(&[&[0.0, 1.0]]),
        )
        .unwrap()
    }

    #[test]
    fn scalar_h2_gain() {
        let (f, l) = h2_gains(&scalar_plant()).unwrap();
        assert!((f[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((l[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_enforced() {
        let r = StandardPlant::new(
            mat(&[&[0.0]]),
            mat(&[&[1.0, 0.0]]),
            mat(&[&[1.0]]),
            mat(&[&[1.0], &[0.0]]),
            mat(&[&[1.0]]),
            mat(&[&[0.0], &[2.0]]),
            mat(&[&[0.0, 1.0]]),
        );
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn gamma1_constant_integrand() {
        let one = mat(&[&[1.0]]);
        let zero = mat(&[&[0.0]]);
        for h in [0.1, 0.7, 2.0] {
            assert!((gamma1(&one, &one, &zero, h).unwrap() - h * h / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma1_scalar_exponential() {
        // ∫₀ʰ (h − t) e^{2at} dt in closed form
        let a: f64 = -0.7;
        let h = 1.3;
        let k = 2.0 * a;
        let exact = ((k * h).exp() - 1.0 - k * h) / (k * k);
        let g = gamma1(&mat(&[&[1.0]]), &mat(&[&[1.0]]), &mat(&[&[a]]), h).unwrap();
        assert!((g - exact).abs() < 1e-13);
    }

    #[test]
    fn scalar_loopshape_h_sup_matches_quadrature() {
        // P = 1/(s − 1): every block scalar, so the escape time is an integral
        let p = StateSpace::new(mat(&[&[1.0]]), mat(&[&[1.0]]), mat(&[&[1.0]]), mat(&[&[0.0]])).unwrap();
        let gamma = 3.0;
        let d = loopshape_design(&p, gamma).unwrap();
        let (x, y) = (d.x[(0, 0)], d.y[(0, 0)]);
        assert!((x - (1.0 + 2f64.sqrt())).abs() < 1e-10);
        let r = 1.0 / (gamma * gamma - 1.0);
        let target = (gamma * gamma - 1.0) / x;
        // t = ∫_Y^{target} dP / (rP² + 2P + 1), Simpson with many panels
        let g = |p: f64| 1.0 / (r * p * p + 2.0 * p + 1.0);
        let m = 20_000;
        let hstep = (target - y) / m as f64;
        let mut s = g(y) + g(target);
        for i in 1..m {
            s += g(y + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let t = s * hstep / 3.0;
        assert!((d.h_sup - t).abs() < 2e-6, "{} vs {}", d.h_sup, t);
    }

    #[test]
    fn hinf_recovers_h2_for_large_gamma() {
        let mut rng = Rng::seed(21);
        let plant = random_standard_plant(&mut rng, 3, 1, 1);
        let (f2, l2) = h2_gains(&plant).unwrap();
        let gopt = hinf_gamma_opt(&plant, 1e-6).unwrap();
        let d = hinf_design(&plant, 1e6 * gopt).unwrap();
        assert!((&d.f - &f2).norm() <= 1e-3 * f2.norm());
        assert!((&d.l - &l2).norm() <= 1e-3 * l2.norm());
        assert!((spectral_radius(&(&d.y * &d.x)).unwrap() - d.rho_yx).abs() < 1e-12);
    }

    #[test]
    fn hinf_controller_matches_generator_central() {
        let mut rng = Rng::seed(22);
        let plant = random_standard_plant(&mut rng, 3, 1, 1);
        let gopt = hinf_gamma_opt(&plant, 1e-6).unwrap();
        let d = hinf_design(&plant, 1.5 * gopt).unwrap();
        // the sampled-data blocks are the central form in x̃ = Z⁻¹x coordinates
        let cen = central_controller(&d.generator);
        let zi = inverse(&d.z_gamma).unwrap();
        assert!((&zi * &cen.sensor_a * &d.z_gamma - &d.controller.sensor_a).norm() < 1e-8 * (1.0 + cen.sensor_a.norm()));
        assert!((&cen.actuator_a - &d.controller.actuator_a).norm() < 1e-10 * (1.0 + cen.actuator_a.norm()));
        assert!(freq_match(&central_analog(&d).unwrap(), &d.analog_controller(), 1e-9));
        assert!(d.h_sup > 0.0);
    }

    #[test]
    fn below_optimum_is_reported() {
        let p = StateSpace::new(mat(&[&[1.0]]), mat(&[&[1.0]]), mat(&[&[1.0]]), mat(&[&[0.0]])).unwrap();
        assert!(matches!(loopshape_design(&p, 1.0), Err(Error::Infeasible(Infeasibility::BelowOptimum { .. }))));
    }
}
