//! Youla generator J0 built from a plant and a stabilizing controller, its
//! inverse, and the static reset part Q_stat.
//!
//! Conventions: positive feedback u = K y. J0 maps (y, η) to (u, ε) and the
//! controller family is K = F_l(J0, Q) with η = Q ε.

use crate::error::{dim_err, Error, Result};
use crate::lti::{feedback_a, is_hurwitz, minreal, PartitionedSystem, ResetLinearSystem, StateSpace};
use crate::matfun::{block2, care, hstack, spectral_abscissa, vstack, Mat};

/// Strictly proper plant with a controller that stabilizes it internally.
#[derive(Debug, Clone)]
pub struct PlantControllerPair {
    p: StateSpace,
    k0: StateSpace,
}

impl PlantControllerPair {
    pub fn new(p: StateSpace, k0: StateSpace) -> Result<Self> {
        if !p.is_strictly_proper() {
            return Err(Error::Input("plant must be strictly proper (D = 0)".into()));
        }
        if k0.inputs() != p.outputs() || k0.outputs() != p.inputs() {
            return dim_err(format!(
                "controller is {}x{}, plant is {}x{}",
                k0.outputs(),
                k0.inputs(),
                p.outputs(),
                p.inputs()
            ));
        }
        let acl = feedback_a(&p, &k0)?;
        if !is_hurwitz(&acl) {
            return Err(Error::NotStabilizing { abscissa: spectral_abscissa(&acl) });
        }
        Ok(Self { p, k0 })
    }

    pub fn plant(&self) -> &StateSpace {
        &self.p
    }
    pub fn controller(&self) -> &StateSpace {
        &self.k0
    }
}

/// Structure of K0 declared by the caller.
#[derive(Debug, Clone)]
pub enum ControllerStructure {
    /// Any dynamic realization; the general generator with coprime-factor gains is used.
    General { f0: Option<Mat>, l0: Option<Mat> },
    /// K0 is a static gain D0.
    Static,
    /// K0 is the observer-based controller with state-feedback gain F and injection gain L.
    ObserverBased { f: Mat, l: Mat },
}

/// Realization [A_J | B_J1 B_J2 ; C_J1 | D0 I ; C_J2 | I 0].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorJ0 {
    pub a_j: Mat,
    pub b_j1: Mat,
    pub b_j2: Mat,
    pub c_j1: Mat,
    pub c_j2: Mat,
    pub d0: Mat,
}

impl GeneratorJ0 {
    /// Validates block dimensions.
    pub fn new(a_j: Mat, b_j1: Mat, b_j2: Mat, c_j1: Mat, c_j2: Mat, d0: Mat) -> Result<Self> {
        let n = a_j.nrows();
        let (nu, ny) = d0.shape();
        if a_j.ncols() != n
            || b_j1.shape() != (n, ny)
            || b_j2.shape() != (n, nu)
            || c_j1.shape() != (nu, n)
            || c_j2.shape() != (ny, n)
        {
            return dim_err(format!(
                "generator blocks A{:?} B1{:?} B2{:?} C1{:?} C2{:?} D0{:?}",
                a_j.shape(),
                b_j1.shape(),
                b_j2.shape(),
                c_j1.shape(),
                c_j2.shape(),
                d0.shape()
            ));
        }
        Ok(Self { a_j, b_j1, b_j2, c_j1, c_j2, d0 })
    }

    pub fn order(&self) -> usize {
        self.a_j.nrows()
    }
    /// Number of measurements y (and innovations ε).
    pub fn ny(&self) -> usize {
        self.d0.ncols()
    }
    /// Number of controls u (and parameter outputs η).
    pub fn nu(&self) -> usize {
        self.d0.nrows()
    }

    /// B_J12 = B_J1 − B_J2·D0.
    pub fn b_j12(&self) -> Mat {
        &self.b_j1 - &self.b_j2 * &self.d0
    }

    /// C_J12 = C_J1 − D0·C_J2.
    pub fn c_j12(&self) -> Mat {
        &self.c_j1 - &self.d0 * &self.c_j2
    }

    /// A_J^× = A_J − B_J1·C_J2 − B_J2·C_J1 + B_J2·D0·C_J2.
    pub fn a_cross(&self) -> Mat {
        &self.a_j - &self.b_j1 * &self.c_j2 - &self.b_j2 * &self.c_j1 + &self.b_j2 * &self.d0 * &self.c_j2
    }

    /// Two-port system with inputs (y, η) and outputs (u, ε).
    pub fn to_partitioned(&self) -> PartitionedSystem {
        let (nu, ny) = (self.nu(), self.ny());
        let d = block2(&self.d0, &Mat::identity(nu, nu), &Mat::identity(ny, ny), &Mat::zeros(ny, nu));
        let sys = StateSpace::new(
            self.a_j.clone(),
            hstack(&[&self.b_j1, &self.b_j2]),
            vstack(&[&self.c_j1, &self.c_j2]),
            d,
        )
        .expect("generator blocks are consistent");
        PartitionedSystem::new(sys, nu, ny).expect("split within range")
    }

    /// Controller F_l(J0, Q).
    pub fn controller(&self, q: &StateSpace) -> Result<StateSpace> {
        crate::lti::lft_lower(&self.to_partitioned(), q)
    }

    /// Central controller F_l(J0, 0).
    pub fn central(&self) -> StateSpace {
        self.controller(&StateSpace::zero(self.nu(), self.ny())).expect("zero parameter is well posed")
    }
}

/// LQ gain F with A + B·F Hurwitz (identity weights); zero when A is
/// already Hurwitz and the LQ problem is degenerate.
fn lq_gain(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.nrows();
    match care(a, &(b * b.transpose()), &Mat::identity(n, n)) {
        Ok(sol) => Ok(-(b.transpose() * sol.x)),
        Err(_) if is_hurwitz(a) => Ok(Mat::zeros(b.ncols(), n)),
        Err(e) => Err(e),
    }
}

fn require_hurwitz(a: &Mat) -> Result<()> {
    if is_hurwitz(a) {
        Ok(())
    } else {
        Err(Error::NotHurwitz { abscissa: spectral_abscissa(a) })
    }
}

/// Builds the generator for the declared controller structure.
pub fn build_generator(pair: &PlantControllerPair, structure: &ControllerStructure) -> Result<GeneratorJ0> {
    let (a, bu, cy, _) = pair.p.clone().into_parts();
    let k0 = &pair.k0;
    let (nu, ny) = (bu.ncols(), cy.nrows());
    match structure {
        ControllerStructure::Static => {
            if k0.order() != 0 {
                return Err(Error::Input(format!("declared static K0 has order {}", k0.order())));
            }
            let d0 = k0.d().clone();
            let n = a.nrows();
            GeneratorJ0::new(&a + &bu * &d0 * &cy, Mat::zeros(n, ny), bu, Mat::zeros(nu, n), -cy, d0)
        }
        ControllerStructure::ObserverBased { f, l } => {
            let n = a.nrows();
            if f.shape() != (nu, n) || l.shape() != (n, ny) {
                return dim_err("observer gains F (nu x n) and L (n x ny)");
            }
            require_hurwitz(&(&a + &bu * f))?;
            require_hurwitz(&(&a + l * &cy))?;
            let j = GeneratorJ0::new(&a + &bu * f + l * &cy, -l, bu.clone(), f.clone(), -cy.clone(), Mat::zeros(nu, ny))?;
            if !crate::lti::freq_match(&j.central(), k0, 1e-6) {
                return Err(Error::Input("K0 is not the observer-based controller for the given (F, L)".into()));
            }
            Ok(j)
        }
        ControllerStructure::General { f0, l0 } => {
            if k0.order() == 0 {
                return build_generator(pair, &ControllerStructure::Static);
            }
            let (a0, b0, c0, d0) = k0.clone().into_parts();
            let n0 = a0.nrows();
            let f0 = match f0 {
                Some(f) => f.clone(),
                None => lq_gain(&a0, &b0)?,
            };
            let l0 = match l0 {
                Some(l) => l.clone(),
                None => lq_gain(&a0.transpose(), &c0.transpose())?.transpose(),
            };
            if f0.shape() != (ny, n0) || l0.shape() != (n0, nu) {
                return dim_err("coprime gains F0 (ny x n0) and L0 (n0 x nu)");
            }
            require_hurwitz(&(&a0 + &b0 * &f0))?;
            require_hurwitz(&(&a0 + &l0 * &c0))?;
            let n = a.nrows();
            let z = |r, c| Mat::zeros(r, c);
            let a_j = vstack(&[
                &hstack(&[&a0, &z(n0, n0), &z(n0, n)]),
                &hstack(&[&z(n0, n0), &a0, &(&b0 * &cy)]),
                &hstack(&[&z(n, n0), &(&bu * &c0), &(&a + &bu * &d0 * &cy)]),
            ]);
            let b_j1 = vstack(&[&b0, &z(n0, ny), &z(n, ny)]);
            let b_j2 = vstack(&[&(-&l0), &(-&l0), &bu]);
            let c_j1 = hstack(&[&c0, &z(nu, n0), &z(nu, n)]);
            let c_j2 = hstack(&[&(-&f0), &f0, &(-&cy)]);
            let full = GeneratorJ0::new(a_j, b_j1, b_j2, c_j1, c_j2, d0)?;
            Ok(cancel_modes(full))
        }
    }
}

/// Removes modes of J0 that are uncontrollable or unobservable from its ports.
pub fn cancel_modes(j: GeneratorJ0) -> GeneratorJ0 {
    let part = j.to_partitioned();
    let red = minreal(&part.base, 1e-9);
    if red.order() == j.order() {
        return j;
    }
    let (nu, ny) = (j.nu(), j.ny());
    let (a, b, c, _) = red.into_parts();
    GeneratorJ0 {
        a_j: a,
        b_j1: b.columns(0, ny).into_owned(),
        b_j2: b.columns(ny, nu).into_owned(),
        c_j1: c.rows(0, nu).into_owned(),
        c_j2: c.rows(nu, ny).into_owned(),
        d0: j.d0,
    }
}

/// J0⁻¹ with inputs (u, ε) and outputs (y, η):
/// [A_J^× | B_J2 B_J12 ; −C_J2 | 0 I ; −C_J12 | I −D0].
pub fn generator_inverse(j0: &GeneratorJ0, p: &StateSpace) -> Result<PartitionedSystem> {
    if !p.is_strictly_proper() {
        return Err(Error::Input("plant must be strictly proper".into()));
    }
    if p.inputs() != j0.nu() || p.outputs() != j0.ny() {
        return dim_err("plant channels do not match the generator");
    }
    let (nu, ny) = (j0.nu(), j0.ny());
    let d = block2(&Mat::zeros(ny, nu), &Mat::identity(ny, ny), &Mat::identity(nu, nu), &(-&j0.d0));
    let sys = StateSpace::new(
        j0.a_cross(),
        hstack(&[&j0.b_j2, &j0.b_j12()]),
        vstack(&[&(-&j0.c_j2), &(-j0.c_j12())]),
        d,
    )?;
    PartitionedSystem::new(sys, ny, nu)
}

/// Static part of the lower-right block of J0⁻¹ as a reset system:
/// (A_J^×, −B_J12, C_J12, −D0), state zeroed at every sampling instant.
pub fn q_stat(j0: &GeneratorJ0) -> ResetLinearSystem {
    let sys = StateSpace::new(j0.a_cross(), -j0.b_j12(), j0.c_j12(), -&j0.d0).expect("generator blocks are consistent");
    ResetLinearSystem { sys }
}
