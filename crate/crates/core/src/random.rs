//! Seeded generators of random test problems (stable systems, stabilized
//! plant/controller pairs, standard plants).

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lti::{feedback_a, is_hurwitz, StateSpace};
use crate::matfun::{care, hstack, spectral_abscissa, vstack, Mat};
use crate::perf::StandardPlant;
use crate::youla::{build_generator, ControllerStructure, PlantControllerPair};

/// Reproducible random source.
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(rows, cols, |_, _| self.normal())
    }
}

/// Random Hurwitz matrix with spectral abscissa in [−1, −0.2].
pub fn random_stable_matrix(rng: &mut Rng, n: usize) -> Mat {
    let m = rng.matrix(n, n) / (n as f64).sqrt().max(1.0);
    if n == 0 {
        return m;
    }
    let shift = spectral_abscissa(&m) + rng.uniform(0.2, 1.0);
    m - Mat::identity(n, n) * shift
}

/// Random stable system with feedthrough.
pub fn random_stable_system(rng: &mut Rng, n: usize, outputs: usize, inputs: usize) -> StateSpace {
    let a = random_stable_matrix(rng, n);
    StateSpace::new(a, rng.matrix(n, inputs), rng.matrix(outputs, n), rng.matrix(outputs, inputs)).expect("consistent shapes")
}

/// Random stable strictly proper system.
pub fn random_stable_strictly_proper(rng: &mut Rng, n: usize, outputs: usize, inputs: usize) -> StateSpace {
    let a = random_stable_matrix(rng, n);
    StateSpace::new(a, rng.matrix(n, inputs), rng.matrix(outputs, n), Mat::zeros(outputs, inputs)).expect("consistent shapes")
}

/// LQ-type observer gains (F, L) with unit weights for (A, Bu, Cy).
pub fn lq_observer_gains(a: &Mat, bu: &Mat, cy: &Mat) -> (Mat, Mat) {
    let n = a.nrows();
    let x = care(a, &(bu * bu.transpose()), &Mat::identity(n, n)).expect("stabilizable data").x;
    let y = care(&a.transpose(), &(cy.transpose() * cy), &Mat::identity(n, n)).expect("detectable data").x;
    (-(bu.transpose() * x), -(y * cy.transpose()))
}

/// Random plant (possibly unstable) with a generic dynamic stabilizing
/// controller: an observer-based controller perturbed by a random stable
/// first-order Youla parameter with feedthrough.
pub fn random_stabilized_pair(rng: &mut Rng, n: usize, nu: usize, ny: usize) -> PlantControllerPair {
    random_stabilized_pair_with_margin(rng, n, nu, ny, 1e-3)
}

/// As [`random_stabilized_pair`], with closed-loop spectral abscissa below −`margin`.
pub fn random_stabilized_pair_with_margin(rng: &mut Rng, n: usize, nu: usize, ny: usize, margin: f64) -> PlantControllerPair {
    loop {
        let a = rng.matrix(n, n) / (n as f64).sqrt();
        let bu = rng.matrix(n, nu);
        let cy = rng.matrix(ny, n);
        let p = StateSpace::new(a.clone(), bu.clone(), cy.clone(), Mat::zeros(ny, nu)).expect("consistent shapes");
        let (f, l) = lq_observer_gains(&a, &bu, &cy);
        let k_obs = StateSpace::new(&a + &bu * &f + &l * &cy, -&l, f.clone(), Mat::zeros(nu, ny)).expect("shapes");
        let Ok(pair) = PlantControllerPair::new(p.clone(), k_obs) else { continue };
        let j = build_generator(&pair, &ControllerStructure::ObserverBased { f, l }).expect("observer generator");
        let q = random_stable_system(rng, 1, nu, ny).scale_output(0.5);
        let Ok(k) = j.controller(&q) else { continue };
        let Ok(acl) = feedback_a(&p, &k) else { continue };
        if is_hurwitz(&acl) && spectral_abscissa(&acl) < -margin {
            return PlantControllerPair::new(p, k).expect("checked stabilizing");
        }
    }
}

/// Random normalized standard plant with one scalar disturbance and one
/// scalar penalty besides the unit D_zu, D_yw channels, and no cross terms.
pub fn random_standard_plant(rng: &mut Rng, n: usize, nu: usize, ny: usize) -> StandardPlant {
    loop {
        let a = rng.matrix(n, n) / (n as f64).sqrt();
        let bw = hstack(&[&rng.matrix(n, 1), &Mat::zeros(n, ny)]);
        let cz = vstack(&[&rng.matrix(1, n), &Mat::zeros(nu, n)]);
        let dzu = vstack(&[&Mat::zeros(1, nu), &Mat::identity(nu, nu)]);
        let dyw = hstack(&[&Mat::zeros(ny, 1), &Mat::identity(ny, ny)]);
        let (bu, cy) = (rng.matrix(n, nu), rng.matrix(ny, n));
        if let Ok(p) = StandardPlant::new(a, bw, bu, cz, cy, dzu, dyw) {
            // keep the H2 Riccati data well conditioned
            if crate::perf::h2_gains(&p).is_ok() {
                return p;
            }
        }
    }
}
