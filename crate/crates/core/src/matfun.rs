//! Dense matrix functions: exponential, Van Loan block integrals, algebraic and
//! differential Riccati equations, Lyapunov equations.
//!
//! All routines are pure functions of their inputs. Matrices are `nalgebra`
//! dynamic matrices; symmetric inputs are checked to a relative tolerance of
//! 1e-10 and symmetrized before use.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMat = DMatrix<Complex64>;

const SYM_TOL: f64 = 1e-10;

/// Builds a matrix from nested rows. Panics on ragged input; intended for
/// literals in code and tests.
pub fn mat(rows: &[&[f64]]) -> Mat {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == nc), "ragged matrix literal");
    Mat::from_fn(nr, nc, |i, j| rows[i][j])
}

pub fn one_norm(a: &Mat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn asymmetry(a: &Mat) -> f64 {
    (a - a.transpose()).norm()
}

pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

fn check_symmetric(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return dim_err(format!("expected square symmetric matrix, got {}x{}", a.nrows(), a.ncols()));
    }
    let asym = asymmetry(a);
    if asym > SYM_TOL * (1.0 + a.norm()) {
        return Err(Error::NotSymmetric { asym });
    }
    Ok(symmetrize(a))
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &Mat) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest real part of the spectrum (−∞ for an empty matrix).
pub fn spectral_abscissa(a: &Mat) -> f64 {
    eigenvalues(a).iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}

/// max |λᵢ(M)|.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    if !m.is_square() {
        return dim_err(format!("spectral radius of a {}x{} matrix", m.nrows(), m.ncols()));
    }
    Ok(eigenvalues(m).iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_sym_eig(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(a).symmetric_eigenvalues().min()
}

pub fn block2(a11: &Mat, a12: &Mat, a21: &Mat, a22: &Mat) -> Mat {
    let (r1, c1) = a11.shape();
    let (r2, c2) = a22.shape();
    debug_assert_eq!(a12.shape(), (r1, c2));
    debug_assert_eq!(a21.shape(), (r2, c1));
    let mut m = Mat::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a11);
    m.view_mut((0, c1), (r1, c2)).copy_from(a12);
    m.view_mut((r1, 0), (r2, c1)).copy_from(a21);
    m.view_mut((r1, c1), (r2, c2)).copy_from(a22);
    m
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        m.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    m
}

pub fn vstack(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        m.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    m
}

/// Solves `a x = b`, reporting singularity as an error.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    a.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(format!("{}x{} linear system", a.nrows(), a.ncols())))
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    solve(a, &Mat::identity(a.nrows(), a.nrows()))
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Backward-error bounds for the diagonal Padé approximants of degree 3, 5, 7, 9, 13.
const THETA: [f64; 4] = [1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1, 2.097847961257068];
const THETA13: f64 = 5.371920351148152;

/// e^{At} by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &Mat, t: f64) -> Result<Mat> {
    if !a.is_square() {
        return dim_err(format!("expm of a {}x{} matrix", a.nrows(), a.ncols()));
    }
    if !t.is_finite() {
        return Err(Error::Input(format!("expm time {t} is not finite")));
    }
    Ok(expm_sq(&(a * t)))
}

/// e^{A} for square `a` (no dimension check).
pub(crate) fn expm_sq(a: &Mat) -> Mat {
    let n = a.nrows();
    let ident = Mat::identity(n, n);
    if n == 0 {
        return ident;
    }
    let norm = one_norm(a);
    if norm == 0.0 {
        return ident;
    }
    let a2 = a * a;
    let coeffs: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    for (theta, b) in THETA.iter().zip(coeffs) {
        if norm <= *theta {
            // U = A Σ b_{2k+1} A^{2k},  V = Σ b_{2k} A^{2k}
            let mut u = &ident * b[1];
            let mut v = &ident * b[0];
            let mut pow = ident.clone();
            for k in 1..b.len() / 2 {
                pow = &pow * &a2;
                u += &pow * b[2 * k + 1];
                v += &pow * b[2 * k];
            }
            let u = a * u;
            return pade_quotient(&u, &v);
        }
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = a / 2f64.powi(s);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let mut r = pade_quotient(&u, &v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn pade_quotient(u: &Mat, v: &Mat) -> Mat {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).expect("Pade denominator is nonsingular for scaled arguments")
}

/// Λ₁₂(θ) = ∫₀^θ e^{Au(θ−σ)} Bc e^{Al σ} dσ, read off the exponential of the
/// block-upper-triangular matrix [[Au, Bc], [0, Al]]·θ.
pub fn van_loan_integral(au: &Mat, bc: &Mat, al: &Mat, theta: f64) -> Result<Mat> {
    let n = au.nrows();
    let m = al.nrows();
    if !au.is_square() || !al.is_square() || bc.shape() != (n, m) {
        return dim_err(format!(
            "van Loan blocks {:?}, {:?}, {:?}",
            au.shape(),
            bc.shape(),
            al.shape()
        ));
    }
    if theta < 0.0 {
        return Err(Error::Input(format!("negative integration length {theta}")));
    }
    let big = block2(au, bc, &Mat::zeros(m, n), al);
    let e = expm_sq(&(big * theta));
    Ok(e.view((0, n), (n, m)).into_owned())
}

// ---------------------------------------------------------------------------
// Ordered complex Schur decomposition
// ---------------------------------------------------------------------------

fn to_complex(a: &Mat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Rotation (c, s) with c real such that [c s; −s̄ c]·[f; g] = [r; 0].
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let fa = f.norm();
    let d = fa.hypot(g.norm());
    (fa / d, (f / fa) * g.conj() / d)
}

/// Applies x ← c·x + s·y, y ← c·y − s̄·x to two sequences.
fn rotate(x: &mut [Complex64], y: &mut [Complex64], c: f64, s: Complex64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let t = *xi * c + s * *yi;
        *yi = *yi * c - s.conj() * *xi;
        *xi = t;
    }
}

/// Complex Schur form Q·T·Qᴴ of `a`, reordered so that the eigenvalues for
/// which `select` holds lead the diagonal. Returns (Q, T, count selected).
pub(crate) fn ordered_schur(a: &Mat, select: impl Fn(Complex64) -> bool) -> Result<(CMat, CMat, usize)> {
    let n = a.nrows();
    // Spectra symmetric about the imaginary axis can stall the shifted QR
    // iteration; a complex diagonal shift leaves the Schur vectors unchanged
    // and breaks the symmetry.
    let scale = 1.0 + a.norm();
    let shifts = [Complex64::new(0.0, 0.0), Complex64::new(0.137, 0.071), Complex64::new(-0.291, 0.113)];
    let (mut q, mut t) = shifts
        .iter()
        .find_map(|&sigma| {
            let sigma = sigma * scale;
            let shifted = to_complex(a) + CMat::identity(n, n) * sigma;
            nalgebra::linalg::Schur::try_new(shifted, 1e-15 * scale, 200 * n.max(10)).map(|s| {
                let (q, mut t) = s.unpack();
                for i in 0..n {
                    t[(i, i)] -= sigma;
                }
                (q, t)
            })
        })
        .ok_or_else(|| Error::NoStabilizingSolution("Schur iteration did not converge".into()))?;
    // Clean strictly-lower entries left by the iteration.
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    // Bubble selected eigenvalues upward with adjacent swaps.
    let mut placed = 0;
    for k in 0..n {
        if select(t[(k, k)]) {
            let mut pos = k;
            while pos > placed {
                swap_adjacent(&mut t, &mut q, pos - 1);
                pos -= 1;
            }
            placed += 1;
        }
    }
    Ok((q, t, placed))
}

fn swap_adjacent(t: &mut CMat, q: &mut CMat, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let (c, s) = givens(t[(k, k + 1)], t22 - t11);
    if k + 2 < n {
        let mut rk: Vec<Complex64> = (k + 2..n).map(|j| t[(k, j)]).collect();
        let mut rk1: Vec<Complex64> = (k + 2..n).map(|j| t[(k + 1, j)]).collect();
        rotate(&mut rk, &mut rk1, c, s);
        for (idx, j) in (k + 2..n).enumerate() {
            t[(k, j)] = rk[idx];
            t[(k + 1, j)] = rk1[idx];
        }
    }
    if k > 0 {
        let mut ck: Vec<Complex64> = (0..k).map(|i| t[(i, k)]).collect();
        let mut ck1: Vec<Complex64> = (0..k).map(|i| t[(i, k + 1)]).collect();
        rotate(&mut ck, &mut ck1, c, s.conj());
        for i in 0..k {
            t[(i, k)] = ck[i];
            t[(i, k + 1)] = ck1[i];
        }
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    let mut qk: Vec<Complex64> = q.column(k).iter().copied().collect();
    let mut qk1: Vec<Complex64> = q.column(k + 1).iter().copied().collect();
    rotate(&mut qk, &mut qk1, c, s.conj());
    for i in 0..n {
        q[(i, k)] = qk[i];
        q[(i, k + 1)] = qk1[i];
    }
}

// ---------------------------------------------------------------------------
// Algebraic Riccati equation
// ---------------------------------------------------------------------------

/// Stabilizing solution of an algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub x: Mat,
    pub residual_norm: f64,
    pub closed_loop_eigs: Vec<Complex64>,
}

/// AᵀX + XA − XSX + Q.
pub fn care_residual(a: &Mat, s: &Mat, q: &Mat, x: &Mat) -> Mat {
    a.transpose() * x + x * a - x * s * x + q
}

/// Stabilizing X of AᵀX + XA − XSX + Q = 0 (A − SX Hurwitz), from the stable
/// invariant subspace of the Hamiltonian [[A, −S], [−Q, −Aᵀ]]. `S` may be
/// sign-indefinite.
pub fn care(a: &Mat, s: &Mat, q: &Mat) -> Result<RiccatiSolution> {
    let n = a.nrows();
    if !a.is_square() || s.shape() != (n, n) || q.shape() != (n, n) {
        return dim_err(format!("care blocks {:?}, {:?}, {:?}", a.shape(), s.shape(), q.shape()));
    }
    let s = check_symmetric(s)?;
    let q = check_symmetric(q)?;
    if n == 0 {
        return Ok(RiccatiSolution { x: Mat::zeros(0, 0), residual_norm: 0.0, closed_loop_eigs: vec![] });
    }
    let h = block2(a, &(-&s), &(-&q), &(-a.transpose()));
    let hnorm = h.norm();
    let axis_tol = 1e-10 * (1.0 + hnorm);
    let (qs, t, stable) = ordered_schur(&h, |l| l.re < 0.0)?;
    let eigs: Vec<Complex64> = (0..2 * n).map(|i| t[(i, i)]).collect();
    if let Some(l) = eigs.iter().find(|l| l.re.abs() <= axis_tol) {
        return Err(Error::NoStabilizingSolution(format!(
            "Hamiltonian eigenvalue {:.3e}{:+.3e}i on the imaginary axis",
            l.re, l.im
        )));
    }
    if stable != n {
        return Err(Error::NoStabilizingSolution(format!("{stable} stable Hamiltonian eigenvalues, expected {n}")));
    }
    let u11 = qs.view((0, 0), (n, n)).into_owned();
    let u21 = qs.view((n, 0), (n, n)).into_owned();
    // X = U21 U11⁻¹  ⇔  U11ᵀ Xᵀ = U21ᵀ
    let xt = u11
        .transpose()
        .lu()
        .solve(&u21.transpose())
        .ok_or_else(|| Error::NoStabilizingSolution("stable subspace is not a graph".into()))?;
    let x = symmetrize(&xt.transpose().map(|z| z.re));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoStabilizingSolution("stable subspace is not a graph".into()));
    }
    let x = newton_refine(a, &s, &q, x);
    let residual_norm = care_residual(a, &s, &q, &x).norm();
    let acl = a - &s * &x;
    let closed_loop_eigs = eigenvalues(&acl);
    if closed_loop_eigs.iter().any(|l| l.re >= 0.0) {
        return Err(Error::NoStabilizingSolution("closed loop A − SX is not Hurwitz".into()));
    }
    Ok(RiccatiSolution { x, residual_norm, closed_loop_eigs })
}

/// One Newton–Kleinman correction, kept only if it lowers the residual.
fn newton_refine(a: &Mat, s: &Mat, q: &Mat, x: Mat) -> Mat {
    let res = care_residual(a, s, q, &x);
    let r0 = res.norm();
    if r0 <= 1e-14 * (1.0 + x.norm()).powi(2) {
        return x;
    }
    let acl = a - s * &x;
    match lyap(&acl.transpose(), &symmetrize(&res)) {
        Ok(delta) => {
            let x1 = symmetrize(&(&x + delta));
            if care_residual(a, s, q, &x1).norm() < r0 {
                x1
            } else {
                x
            }
        }
        Err(_) => x,
    }
}

// ---------------------------------------------------------------------------
// Lyapunov equation
// ---------------------------------------------------------------------------

/// P solving AP + PAᵀ + Q = 0 for Hurwitz A (Bartels–Stewart on the complex Schur form).
pub fn lyap(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return dim_err(format!("lyap blocks {:?}, {:?}", a.shape(), q.shape()));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let abscissa = spectral_abscissa(a);
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let (u, t, _) = ordered_schur(a, |_| false)?;
    let c = -(u.adjoint() * to_complex(q) * &u);
    // T Y + Y Tᴴ = C, T upper triangular.
    let mut y = CMat::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = c[(i, j)];
            for k in i + 1..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            y[(i, j)] = rhs / (t[(i, i)] + t[(j, j)].conj());
        }
    }
    let p = (&u * y * u.adjoint()).map(|z| z.re);
    if asymmetry(q) <= SYM_TOL * (1.0 + q.norm()) {
        Ok(symmetrize(&p))
    } else {
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Differential Riccati equation
// ---------------------------------------------------------------------------

/// Solution of Ṗ = AP + PAᵀ + W + PRP on a time grid.
#[derive(Debug, Clone)]
pub struct DreTrajectory {
    pub times: Vec<f64>,
    pub p_values: Vec<Mat>,
    /// ρ(P(t)·X) at each grid point when a monitor matrix X was supplied.
    pub rho_px: Vec<f64>,
    /// Finite escape time, when the solution ceases to exist inside the grid.
    pub escape: Option<f64>,
}

impl DreTrajectory {
    pub fn last(&self) -> &Mat {
        self.p_values.last().expect("trajectory holds the initial condition")
    }
}

struct DreFlow {
    h: Mat,
    n: usize,
    /// Spectral radius of the Hamiltonian.
    hrad: f64,
    r: Mat,
    cache: Vec<(f64, Mat)>,
}

enum Step {
    Ok(Mat),
    Escape(f64),
}

impl DreFlow {
    fn exp(&mut self, delta: f64) -> Mat {
        if let Some((_, e)) = self.cache.iter().find(|(d, _)| *d == delta) {
            return e.clone();
        }
        let e = expm_sq(&(&self.h * delta));
        if self.cache.len() >= 8 {
            self.cache.remove(0);
        }
        self.cache.push((delta, e.clone()));
        e
    }

    /// Blocks (U, V) of e^{Hδ}[I; P].
    fn uv(e: &Mat, p: &Mat, n: usize) -> (Mat, Mat) {
        let u = e.view((0, 0), (n, n)) + e.view((0, n), (n, n)) * p;
        let v = e.view((n, 0), (n, n)) + e.view((n, n), (n, n)) * p;
        (u, v)
    }

    fn regular(u: &Mat) -> bool {
        let d = u.determinant();
        d.is_finite() && d > 0.0 && {
            // reject numerically singular U even if the determinant sign survived
            let sv = u.clone().singular_values();
            let (mx, mn) = (sv.max(), sv.min());
            mn > 1e-13 * mx
        }
    }

    fn advance(&mut self, p: &Mat, delta: f64, t0: f64) -> Step {
        let n = self.n;
        let e = self.exp(delta);
        let (u, v) = Self::uv(&e, p, n);
        if Self::regular(&u) {
            let pn = u.transpose().lu().solve(&v.transpose()).map(|m| symmetrize(&m.transpose()));
            if let Some(pn) = pn.filter(|m| m.iter().all(|x| x.is_finite())) {
                return Step::Ok(pn);
            }
        }
        // Escape inside (0, δ]: bisect on regularity of U(s).
        let (mut lo, mut hi) = (0.0, delta);
        let tol = 1e-9 * (t0 + delta).max(1e-300) * 1e-3;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let e = expm_sq(&(&self.h * mid));
            let (u, _) = Self::uv(&e, p, n);
            if Self::regular(&u) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Step::Escape(t0 + 0.5 * (lo + hi))
    }
}

/// Propagates Ṗ = AP + PAᵀ + W + PRP, P(0) = P0 through the linear-fractional
/// flow of H = [[−Aᵀ, −R], [W, A]]: [U; V] = e^{Ht}[I; P0], P = VU⁻¹.
///
/// The flow restarts from the current P at every substep; substeps are kept
/// below 0.5/(ρ(H) + ρ(RP)) so that the singularity of U (finite escape) is
/// bracketed and then located by bisection. When `monitor` is given, ρ(P(t)X)
/// is recorded at each grid point.
pub fn dre_flow(a: &Mat, w: &Mat, r: &Mat, p0: &Mat, grid: &[f64], monitor: Option<&Mat>) -> Result<DreTrajectory> {
    let n = a.nrows();
    if !a.is_square() || w.shape() != (n, n) || r.shape() != (n, n) || p0.shape() != (n, n) {
        return dim_err(format!("dre blocks {:?} {:?} {:?} {:?}", a.shape(), w.shape(), r.shape(), p0.shape()));
    }
    if let Some(x) = monitor {
        if x.shape() != (n, n) {
            return dim_err("dre monitor matrix");
        }
    }
    let w = check_symmetric(w)?;
    let r = check_symmetric(r)?;
    let p0 = check_symmetric(p0)?;
    if grid.first() != Some(&0.0) {
        return Err(Error::Input("dre grid must start at 0".into()));
    }
    if grid.windows(2).any(|g| g[1] <= g[0]) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Input("dre grid must be strictly increasing".into()));
    }
    let h = block2(&(-a.transpose()), &(-&r), &w, a);
    let hrad = eigenvalues(&h).iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut flow = DreFlow { hrad, r: r.clone(), h, n, cache: Vec::new() };
    let rho = |p: &Mat| monitor.map(|x| spectral_radius(&(p * x)).unwrap_or(f64::NAN));

    let mut traj = DreTrajectory { times: vec![0.0], p_values: vec![p0.clone()], rho_px: vec![], escape: None };
    if let Some(v) = rho(&p0) {
        traj.rho_px.push(v);
    }
    let blowup = 1e14 * (1.0 + p0.norm());
    let mut p = p0;
    let mut t = 0.0;
    for &tg in &grid[1..] {
        while t < tg {
            // similarity-invariant rates, so badly scaled realizations do not shrink the step
            let rp = spectral_radius(&(&flow.r * &p)).unwrap_or(f64::INFINITY);
            let max_step = 0.5 / (flow.hrad + rp).max(1e-300);
            let gap = tg - t;
            // use whole fractions of the gap so that repeated steps hit the exponential cache
            let pieces = (gap / max_step).ceil().max(1.0);
            let delta = if pieces == 1.0 { gap } else { gap / pieces };
            match flow.advance(&p, delta, t) {
                Step::Ok(pn) => {
                    p = pn;
                    t = if pieces == 1.0 { tg } else { t + delta };
                    if p.norm() > blowup {
                        traj.escape = Some(t);
                        return Ok(traj);
                    }
                }
                Step::Escape(te) => {
                    traj.escape = Some(te);
                    return Ok(traj);
                }
            }
        }
        traj.times.push(tg);
        if let Some(v) = rho(&p) {
            traj.rho_px.push(v);
        }
        traj.p_values.push(p.clone());
    }
    Ok(traj)
}

/// Uniform grid of `points` values on [0, t_end] (at least the two endpoints).
pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|k| t_end * k as f64 / (points - 1) as f64).collect()
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::*;

    mod approx_eq {
        pub fn rel(a: f64, b: f64) -> f64 {
            (a - b).abs() / (1.0 + b.abs())
        }
    }

    #[test]
    fn expm_identity_and_diagonal() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(expm(&a, 0.0).unwrap(), Mat::identity(2, 2));
        let d = mat(&[&[0.3, 0.0], &[0.0, -2.0]]);
        let e = expm(&d, 1.0).unwrap();
        assert!(rel(e[(0, 0)], 0.3f64.exp()) < 1e-14);
        assert!(rel(e[(1, 1)], (-2.0f64).exp()) < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-16 && e[(1, 0)].abs() < 1e-16);
    }

    #[test]
    fn expm_nilpotent() {
        let a = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = expm(&a, 1.0).unwrap();
        assert!((e - mat(&[&[1.0, 1.0], &[0.0, 1.0]])).norm() < 1e-15);
    }

    #[test]
    fn expm_rejects_non_square() {
        assert!(matches!(expm(&Mat::zeros(2, 3), 1.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn expm_large_argument_matches_eigen_route() {
        // rotation generator scaled far beyond the Padé-13 threshold
        let a = mat(&[&[-1.0, 30.0], &[-30.0, -1.0]]);
        let e = expm(&a, 3.0).unwrap();
        let decay = (-3.0f64).exp();
        let expected = mat(&[&[decay * (90.0f64).cos(), decay * (90.0f64).sin()], &[-decay * (90.0f64).sin(), decay * (90.0f64).cos()]]);
        assert!((e - &expected).norm() <= 1e-12 * expected.norm().max(decay));
    }

    #[test]
    fn van_loan_trivial_cases() {
        let z = van_loan_integral(&mat(&[&[1.0]]), &mat(&[&[1.0]]), &mat(&[&[2.0]]), 0.0).unwrap();
        assert_eq!(z[(0, 0)], 0.0);
        let c = van_loan_integral(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &mat(&[&[0.0]]), 0.37).unwrap();
        assert!((c[(0, 0)] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn van_loan_dimension_mismatch() {
        let r = van_loan_integral(&Mat::zeros(2, 2), &Mat::zeros(3, 2), &Mat::zeros(2, 2), 1.0);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn care_scalar_cases() {
        let sol = care(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &mat(&[&[1.0]])).unwrap();
        assert!((sol.x[(0, 0)] - 1.0).abs() < 1e-12);
        let sol = care(&mat(&[&[-1.0]]), &mat(&[&[0.0]]), &mat(&[&[0.0]])).unwrap();
        assert!(sol.x[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn care_imaginary_axis_is_rejected() {
        // A = 0, S = 0, Q = 0: Hamiltonian is zero
        let r = care(&mat(&[&[0.0]]), &mat(&[&[0.0]]), &mat(&[&[1.0]]));
        assert!(matches!(r, Err(Error::NoStabilizingSolution(_))));
    }

    #[test]
    fn care_rejects_asymmetric_weight() {
        let r = care(&Mat::zeros(2, 2), &mat(&[&[1.0, 0.5], &[0.0, 1.0]]), &Mat::identity(2, 2));
        assert!(matches!(r, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn care_indefinite_quadratic_term() {
        // H∞-type: S = 1 − γ⁻², γ = 2 → scalar x² (0.75) = 1 with a = 0
        let sol = care(&mat(&[&[0.0]]), &mat(&[&[0.75]]), &mat(&[&[1.0]])).unwrap();
        assert!((sol.x[(0, 0)] - (1.0 / 0.75f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lyap_scalar_and_zero() {
        let p = lyap(&mat(&[&[-1.0]]), &mat(&[&[2.0]])).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-15);
        let p = lyap(&mat(&[&[-1.0, 2.0], &[0.0, -3.0]]), &Mat::zeros(2, 2)).unwrap();
        assert_eq!(p.norm(), 0.0);
    }

    #[test]
    fn lyap_rejects_unstable() {
        assert!(matches!(lyap(&mat(&[&[0.5]]), &mat(&[&[1.0]])), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn spectral_radius_cases() {
        assert!((spectral_radius(&Mat::identity(4, 4)).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_radius(&mat(&[&[2.0, 0.0], &[0.0, -3.0]])).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn dre_initial_condition_only() {
        let p0 = mat(&[&[2.0]]);
        let tr = dre_flow(&mat(&[&[1.0]]), &mat(&[&[1.0]]), &mat(&[&[0.0]]), &p0, &[0.0], None).unwrap();
        assert_eq!(tr.p_values, vec![p0]);
        assert!(tr.escape.is_none());
    }

    #[test]
    fn dre_linear_growth() {
        let grid = uniform_grid(3.0, 7);
        let tr = dre_flow(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &mat(&[&[0.0]]), &mat(&[&[0.4]]), &grid, None).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.p_values) {
            assert!((p[(0, 0)] - (0.4 + t)).abs() < 1e-12);
        }
    }

    #[test]
    fn dre_tangent_escape_is_reported() {
        // Ṗ = 1 + P²/γ², P(0) = 0 → P = γ tan(t/γ), escape at γπ/2
        let gamma: f64 = 0.8;
        let grid = uniform_grid(3.0, 31);
        let tr = dre_flow(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &mat(&[&[gamma.powi(-2)]]), &mat(&[&[0.0]]), &grid, None).unwrap();
        let te = tr.escape.expect("escape inside grid");
        let exact = gamma * std::f64::consts::FRAC_PI_2;
        assert!((te - exact).abs() <= 1e-9 * exact, "escape {te} vs {exact}");
        assert!(*tr.times.last().unwrap() < exact);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // exact for degree 15: ∫₀¹ t¹⁵ dt = 1/16
        let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(15)).sum();
        assert!((q - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn dre_grid_validation() {
        let one = mat(&[&[1.0]]);
        assert!(dre_flow(&one, &one, &one, &one, &[0.1, 0.2], None).is_err());
        assert!(dre_flow(&one, &one, &one, &one, &[0.0, 0.2, 0.2], None).is_err());
    }
}
