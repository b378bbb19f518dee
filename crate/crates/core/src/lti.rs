//! Continuous-time LTI systems: realizations, interconnections and norms.

use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::matfun::{self, block2, dre_flow, eigenvalues, hstack, lyap, solve, vstack, CMat, Mat};

/// Hurwitz classification margin.
pub const HURWITZ_MARGIN: f64 = 1e-12;

/// Dense realization (A, B, C, D). The order may be zero (static gain).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Mat,
    b: Mat,
    c: Mat,
    d: Mat,
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        let (p, m) = d.shape();
        if a.ncols() != n || b.shape() != (n, m) || c.shape() != (p, n) {
            return dim_err(format!(
                "realization blocks A{:?} B{:?} C{:?} D{:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            ));
        }
        for (name, blk) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if blk.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn static_gain(d: Mat) -> Self {
        let (p, m) = d.shape();
        Self { a: Mat::zeros(0, 0), b: Mat::zeros(0, m), c: Mat::zeros(p, 0), d }
    }

    pub fn zero(outputs: usize, inputs: usize) -> Self {
        Self::static_gain(Mat::zeros(outputs, inputs))
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn d(&self) -> &Mat {
        &self.d
    }
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.d.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.d.nrows()
    }

    pub fn into_parts(self) -> (Mat, Mat, Mat, Mat) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|v| *v == 0.0)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        eigenvalues(&self.a)
    }

    pub fn is_stable(&self) -> bool {
        is_hurwitz(&self.a)
    }

    /// Realization after the change of coordinates x = T·x̃.
    pub fn similarity(&self, t: &Mat) -> Result<Self> {
        let ti = matfun::inverse(t)?;
        Self::new(&ti * &self.a * t, &ti * &self.b, &self.c * t, self.d.clone())
    }

    /// Transfer matrix D + C(sI − A)⁻¹B at a complex frequency.
    pub fn eval(&self, s: Complex64) -> CMat {
        let n = self.order();
        let d = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return d;
        }
        let a = self.a.map(|v| Complex64::new(v, 0.0));
        let b = self.b.map(|v| Complex64::new(v, 0.0));
        let c = self.c.map(|v| Complex64::new(v, 0.0));
        let pencil = CMat::identity(n, n) * s - a;
        match pencil.lu().solve(&b) {
            Some(x) => c * x + d,
            None => CMat::from_element(self.outputs(), self.inputs(), Complex64::new(f64::INFINITY, 0.0)),
        }
    }

    pub fn freq_response(&self, omegas: &[f64]) -> Vec<CMat> {
        omegas.iter().map(|w| self.eval(Complex64::new(0.0, *w))).collect()
    }

    pub fn scale_output(&self, k: f64) -> Self {
        Self { a: self.a.clone(), b: self.b.clone(), c: &self.c * k, d: &self.d * k }
    }

    /// Keeps the listed outputs and inputs.
    pub fn select(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        if outputs.iter().any(|&i| i >= self.outputs()) || inputs.iter().any(|&j| j >= self.inputs()) {
            return dim_err("channel index out of range");
        }
        let n = self.order();
        let b = Mat::from_fn(n, inputs.len(), |i, j| self.b[(i, inputs[j])]);
        let c = Mat::from_fn(outputs.len(), n, |i, j| self.c[(outputs[i], j)]);
        let d = Mat::from_fn(outputs.len(), inputs.len(), |i, j| self.d[(outputs[i], inputs[j])]);
        Self::new(self.a.clone(), b, c, d)
    }

    /// Poles and transmission zeros with the high-frequency gain, for SISO systems.
    pub fn zpk(&self) -> Result<Zpk> {
        if self.inputs() != 1 || self.outputs() != 1 {
            return dim_err("zeros are provided for SISO systems only");
        }
        let n = self.order();
        let poles = self.poles();
        let d = self.d[(0, 0)];
        if d != 0.0 {
            let az = &self.a - &self.b * (&self.c / d);
            return Ok(Zpk { zeros: eigenvalues(&az), poles, gain: d });
        }
        // relative degree r: first k with C A^k B ≠ 0
        let mut row = self.c.clone();
        let mut obs_rows = Vec::new();
        for _ in 0..n {
            let markov = (&row * &self.b)[(0, 0)];
            obs_rows.push(row.clone());
            let tol = 1e-12 * row.norm() * self.b.norm();
            if markov.abs() > tol.max(f64::MIN_POSITIVE) {
                let r = obs_rows.len();
                let next = &row * &self.a;
                let az = &self.a - &self.b * (&next / markov);
                let o = vstack(&obs_rows.iter().collect::<Vec<_>>());
                let v = null_space(&o, 1e-12 * o.norm().max(1e-300));
                let zeros = if v.ncols() == n - r {
                    eigenvalues(&(v.transpose() * az * &v))
                } else {
                    Vec::new()
                };
                return Ok(Zpk { zeros, poles, gain: markov });
            }
            row = &row * &self.a;
        }
        Ok(Zpk { zeros: Vec::new(), poles, gain: 0.0 })
    }
}

/// Zero–pole–gain data of a SISO system; `gain` is the leading coefficient
/// ratio of numerator to denominator.
#[derive(Debug, Clone)]
pub struct Zpk {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
}

/// Orthonormal basis for the null space of `m`.
pub fn null_space(m: &Mat, tol: f64) -> Mat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return Mat::identity(n, n);
    }
    // row space from the thin SVD, complement from the projector I − VVᵀ
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let rows: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let mut proj = Mat::identity(n, n);
    for &i in &rows {
        let v = vt.row(i).transpose();
        proj -= &v * v.transpose();
    }
    let eig = proj.symmetric_eigen();
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    Mat::from_fn(n, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])])
}

/// Real coefficients (descending powers) of Π(s − rᵢ).
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

/// SISO rational function num(s)/den(s), coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunctionSiso {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunctionSiso {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let strip = |v: Vec<f64>| -> Vec<f64> {
            let first = v.iter().position(|x| *x != 0.0).unwrap_or(v.len());
            v[first..].to_vec()
        };
        let num = strip(num);
        let den = strip(den);
        if den.is_empty() {
            return Err(Error::Input("denominator is zero".into()));
        }
        if num.iter().chain(&den).any(|x| !x.is_finite()) {
            return Err(Error::Input("non-finite coefficient".into()));
        }
        if num.len() > den.len() {
            return Err(Error::Input(format!(
                "improper transfer function: numerator degree {} exceeds denominator degree {}",
                num.len() - 1,
                den.len() - 1
            )));
        }
        let num = if num.is_empty() { vec![0.0] } else { num };
        Ok(Self { num, den })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }
    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let horner = |c: &[f64]| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * s + v);
        horner(&self.num) / horner(&self.den)
    }
}

/// Controllable canonical realization followed by diagonal balancing of A.
pub fn tf_to_ss(tf: &TransferFunctionSiso) -> StateSpace {
    let lead = tf.den[0];
    let den: Vec<f64> = tf.den.iter().map(|v| v / lead).collect();
    let n = den.len() - 1;
    let mut num = vec![0.0; n + 1 - tf.num.len()];
    num.extend(tf.num.iter().map(|v| v / lead));
    let d0 = num[0];
    let mut a = Mat::zeros(n, n);
    let mut b = Mat::zeros(n, 1);
    let mut c = Mat::zeros(1, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
        c[(0, j)] = num[j + 1] - d0 * den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    if n > 0 {
        b[(0, 0)] = 1.0;
    }
    let d = Mat::from_element(1, 1, d0);
    let (a, scale) = balance(&a);
    let b = Mat::from_fn(n, 1, |i, j| b[(i, j)] / scale[i]);
    let c = Mat::from_fn(1, n, |i, j| c[(i, j)] * scale[j]);
    StateSpace { a, b, c, d }
}

/// Parlett–Reinsch diagonal scaling D⁻¹AD with powers of two.
/// Returns the balanced matrix and the diagonal of D.
pub fn balance(a: &Mat) -> (Mat, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut a = a.clone();
    let mut scale = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            while cc < r / RADIX {
                f *= RADIX;
                cc *= RADIX * RADIX;
            }
            while cc > r * RADIX {
                f /= RADIX;
                cc /= RADIX * RADIX;
            }
            if (cc + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, scale)
}

/// Cascade g2∘g1 (output of g1 drives g2).
pub fn series(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.outputs() != g2.inputs() {
        return dim_err(format!("series: {} outputs feed {} inputs", g1.outputs(), g2.inputs()));
    }
    let (n1, n2) = (g1.order(), g2.order());
    let a = block2(&g1.a, &Mat::zeros(n1, n2), &(&g2.b * &g1.c), &g2.a);
    let b = vstack(&[&g1.b, &(&g2.b * &g1.d)]);
    let c = hstack(&[&(&g2.d * &g1.c), &g2.c]);
    StateSpace::new(a, b, c, &g2.d * &g1.d)
}

/// Sum g1 + g2 (shared input, added outputs).
pub fn parallel(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs() {
        return dim_err("parallel: channel dimensions differ");
    }
    let (n1, n2) = (g1.order(), g2.order());
    let a = block2(&g1.a, &Mat::zeros(n1, n2), &Mat::zeros(n2, n1), &g2.a);
    StateSpace::new(a, vstack(&[&g1.b, &g2.b]), hstack(&[&g1.c, &g2.c]), &g1.d + &g2.d)
}

/// Two-port partition of a system: inputs (w, u) with w of size `col_split`,
/// outputs (z, y) with z of size `row_split`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedSystem {
    pub base: StateSpace,
    pub row_split: usize,
    pub col_split: usize,
}

struct Blocks {
    b1: Mat,
    b2: Mat,
    c1: Mat,
    c2: Mat,
    d11: Mat,
    d12: Mat,
    d21: Mat,
    d22: Mat,
}

impl PartitionedSystem {
    pub fn new(base: StateSpace, row_split: usize, col_split: usize) -> Result<Self> {
        if row_split > base.outputs() || col_split > base.inputs() {
            return dim_err(format!(
                "partition ({row_split}, {col_split}) of a {}x{} system",
                base.outputs(),
                base.inputs()
            ));
        }
        Ok(Self { base, row_split, col_split })
    }

    fn blocks(&self) -> Blocks {
        let s = &self.base;
        let (p1, m1) = (self.row_split, self.col_split);
        let (p2, m2) = (s.outputs() - p1, s.inputs() - m1);
        let n = s.order();
        Blocks {
            b1: s.b.view((0, 0), (n, m1)).into_owned(),
            b2: s.b.view((0, m1), (n, m2)).into_owned(),
            c1: s.c.view((0, 0), (p1, n)).into_owned(),
            c2: s.c.view((p1, 0), (p2, n)).into_owned(),
            d11: s.d.view((0, 0), (p1, m1)).into_owned(),
            d12: s.d.view((0, m1), (p1, m2)).into_owned(),
            d21: s.d.view((p1, 0), (p2, m1)).into_owned(),
            d22: s.d.view((p1, m1), (p2, m2)).into_owned(),
        }
    }

    /// Subsystem from inputs block `col` (0 or 1) to outputs block `row`.
    pub fn block(&self, row: usize, col: usize) -> StateSpace {
        let k = self.blocks();
        let (b, c, d) = match (row, col) {
            (0, 0) => (k.b1, k.c1, k.d11),
            (0, _) => (k.b2, k.c1, k.d12),
            (_, 0) => (k.b1, k.c2, k.d21),
            _ => (k.b2, k.c2, k.d22),
        };
        StateSpace { a: self.base.a.clone(), b, c, d }
    }

    /// Same system with the roles of the two channel pairs exchanged.
    pub fn swapped(&self) -> Self {
        let s = &self.base;
        let (p1, m1) = (self.row_split, self.col_split);
        let (p, m) = (s.outputs(), s.inputs());
        let outs: Vec<usize> = (p1..p).chain(0..p1).collect();
        let ins: Vec<usize> = (m1..m).chain(0..m1).collect();
        let base = s.select(&outs, &ins).expect("permutation indices are in range");
        Self { base, row_split: p - p1, col_split: m - m1 }
    }
}

/// F_l(Φ, Ω): closes u = Ω y around the lower channel.
pub fn lft_lower(phi: &PartitionedSystem, omega: &StateSpace) -> Result<StateSpace> {
    let k = phi.blocks();
    let (p2, m2) = k.d22.shape();
    if omega.inputs() != p2 || omega.outputs() != m2 {
        return dim_err(format!(
            "lower LFT: parameter is {}x{}, loop channel needs {}x{}",
            omega.outputs(),
            omega.inputs(),
            m2,
            p2
        ));
    }
    let loop_mat = Mat::identity(p2, p2) - &k.d22 * &omega.d;
    let e = solve(&loop_mat, &Mat::identity(p2, p2))
        .map_err(|_| Error::AlgebraicLoop("I − D22·DΩ is singular".into()))?;
    if matfun::one_norm(&e) * matfun::one_norm(&loop_mat) > 1e12 {
        return Err(Error::AlgebraicLoop("I − D22·DΩ is numerically singular".into()));
    }
    // y = Yx x + Yo xΩ + Yw w ; u = Ux x + Uo xΩ + Uw w
    let yx = &e * &k.c2;
    let yo = &e * &k.d22 * &omega.c;
    let yw = &e * &k.d21;
    let ux = &omega.d * &yx;
    let uo = &omega.c + &omega.d * &yo;
    let uw = &omega.d * &yw;
    let a = block2(
        &(&phi.base.a + &k.b2 * &ux),
        &(&k.b2 * &uo),
        &(&omega.b * &yx),
        &(&omega.a + &omega.b * &yo),
    );
    let b = vstack(&[&(&k.b1 + &k.b2 * &uw), &(&omega.b * &yw)]);
    let c = hstack(&[&(&k.c1 + &k.d12 * &ux), &(&k.d12 * &uo)]);
    let d = &k.d11 + &k.d12 * &uw;
    StateSpace::new(a, b, c, d)
}

/// F_u(Φ, Ω): closes w = Ω z around the upper channel.
pub fn lft_upper(phi: &PartitionedSystem, omega: &StateSpace) -> Result<StateSpace> {
    lft_lower(&phi.swapped(), omega)
}

/// Closed-loop A matrix of plant P with positive feedback u = K y.
pub fn feedback_a(p: &StateSpace, k: &StateSpace) -> Result<Mat> {
    if k.inputs() != p.outputs() || k.outputs() != p.inputs() {
        return dim_err("feedback: controller channels do not match plant");
    }
    if !p.is_strictly_proper() {
        return Err(Error::Input("plant must be strictly proper".into()));
    }
    Ok(block2(&(&p.a + &p.b * &k.d * &p.c), &(&p.b * &k.c), &(&k.b * &p.c), &k.a))
}

pub fn is_hurwitz(a: &Mat) -> bool {
    eigenvalues(a).iter().all(|l| l.re < -HURWITZ_MARGIN)
}

/// H2 norm via the observability Gramian.
pub fn h2_norm_lti(sys: &StateSpace) -> Result<f64> {
    if !sys.is_strictly_proper() {
        return Err(Error::InfiniteNorm);
    }
    if sys.order() == 0 {
        return Ok(0.0);
    }
    if !sys.is_stable() {
        return Err(Error::NotHurwitz { abscissa: matfun::spectral_abscissa(&sys.a) });
    }
    let wo = lyap(&sys.a.transpose(), &(sys.c.transpose() * &sys.c))?;
    Ok((sys.b.transpose() * wo * &sys.b).trace().max(0.0).sqrt())
}

fn sigma_max(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// L∞ (H∞ for stable systems) gain by the two-step Hamiltonian iteration.
pub fn linf_gain(sys: &StateSpace) -> Result<f64> {
    if !sys.is_stable() {
        return Err(Error::NotHurwitz { abscissa: matfun::spectral_abscissa(&sys.a) });
    }
    let dnorm = if sys.d.is_empty() { 0.0 } else { sys.d.clone().singular_values().max() };
    if sys.order() == 0 || sys.inputs() == 0 || sys.outputs() == 0 {
        return Ok(dnorm);
    }
    // initial lower bound: DC, infinity and pole-based frequencies
    let mut cands: Vec<f64> = vec![0.0];
    for p in sys.poles() {
        cands.push(p.norm());
        cands.push(p.im.abs());
    }
    let mut lb = dnorm;
    for w in cands {
        lb = lb.max(sigma_max(&sys.eval(Complex64::new(0.0, w))));
    }
    let tol = 1e-8;
    for _ in 0..100 {
        let gamma = (1.0 + 2.0 * tol) * lb;
        let crossings = imaginary_crossings(sys, gamma)?;
        if crossings.len() < 2 {
            return Ok(lb);
        }
        let mut improved = lb;
        for pair in crossings.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            improved = improved.max(sigma_max(&sys.eval(Complex64::new(0.0, mid))));
        }
        if improved <= lb * (1.0 + tol) {
            return Ok(improved);
        }
        lb = improved;
    }
    Ok(lb)
}

/// Sorted nonnegative frequencies where σmax(G(jω)) = γ.
fn imaginary_crossings(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let m = sys.inputs();
    let rd = Mat::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let rinv = matfun::inverse(&rd)?;
    let ah = a + b * &rinv * d.transpose() * c;
    let p = sys.outputs();
    let h = block2(
        &ah,
        &(b * &rinv * b.transpose()),
        &(-(c.transpose() * (Mat::identity(p, p) + d * &rinv * d.transpose()) * c)),
        &(-ah.transpose()),
    );
    let scale = 1.0 + h.norm();
    let mut ws: Vec<f64> = eigenvalues(&h)
        .iter()
        .filter(|l| l.re.abs() <= 1e-7 * scale.max(l.norm()))
        .map(|l| l.im.abs())
        .collect();
    ws.sort_by(|x, y| x.total_cmp(y));
    ws.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * (1.0 + y.abs()));
    // a crossing at ω > 0 pairs with the DC side when it is the only one
    if ws.len() == 1 {
        ws.insert(0, 0.0);
    }
    Ok(ws)
}

/// True iff the L²[0, h)-induced norm of `sys` (zero initial state) is below γ.
///
/// Decided by the absence of finite escape on [0, h] of the time-reversed
/// cost Riccati equation of the finite-horizon bounded-real lemma.
pub fn finite_horizon_l2_gain_less(sys: &StateSpace, h: f64, gamma: f64) -> Result<bool> {
    if !(h > 0.0) || !(gamma > 0.0) {
        return Err(Error::Input(format!("horizon {h} and level {gamma} must be positive")));
    }
    let m = sys.inputs();
    let p = sys.outputs();
    let rd = Mat::identity(m, m) * (gamma * gamma) - sys.d.transpose() * &sys.d;
    if matfun::min_sym_eig(&rd) <= 0.0 {
        return Ok(false);
    }
    if sys.order() == 0 {
        return Ok(true);
    }
    let rinv = matfun::inverse(&rd)?;
    let at = (&sys.a + &sys.b * &rinv * sys.d.transpose() * &sys.c).transpose();
    let w = sys.c.transpose() * (Mat::identity(p, p) + &sys.d * &rinv * sys.d.transpose()) * &sys.c;
    let r = &sys.b * &rinv * sys.b.transpose();
    let n = sys.order();
    let traj = dre_flow(&at, &matfun::symmetrize(&w), &matfun::symmetrize(&r), &Mat::zeros(n, n), &[0.0, h], None)?;
    Ok(traj.escape.is_none())
}

/// Orthonormal basis of the Krylov space span{M, AM, A²M, …}.
pub fn krylov_basis(a: &Mat, m: &Mat, rel_tol: f64) -> Mat {
    let n = a.nrows();
    let tol = rel_tol * (1.0 + a.norm()).max(1.0) * m.norm().max(f64::MIN_POSITIVE);
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut frontier: Vec<nalgebra::DVector<f64>> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    while !frontier.is_empty() && basis.len() < n {
        let mut added = Vec::new();
        for mut v in frontier {
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dot(&v);
                    v -= q * proj;
                }
            }
            let nv = v.norm();
            if nv > tol && basis.len() < n {
                let q = v / nv;
                basis.push(q.clone());
                added.push(q);
            }
        }
        frontier = added.iter().map(|q| a * q).collect();
    }
    if basis.is_empty() {
        return Mat::zeros(n, 0);
    }
    Mat::from_columns(&basis)
}

/// Observable part (VᵀAV, VᵀB, CV, D) with V an orthonormal basis of the
/// observable subspace.
pub fn observable_part(sys: &StateSpace, rel_tol: f64) -> StateSpace {
    let v = krylov_basis(&sys.a.transpose(), &sys.c.transpose(), rel_tol);
    project(sys, &v)
}

pub fn controllable_part(sys: &StateSpace, rel_tol: f64) -> StateSpace {
    let v = krylov_basis(&sys.a, &sys.b, rel_tol);
    project(sys, &v)
}

fn project(sys: &StateSpace, v: &Mat) -> StateSpace {
    StateSpace { a: v.transpose() * &sys.a * v, b: v.transpose() * &sys.b, c: &sys.c * v, d: sys.d.clone() }
}

/// Removes uncontrollable and unobservable modes.
pub fn minreal(sys: &StateSpace, rel_tol: f64) -> StateSpace {
    observable_part(&controllable_part(sys, rel_tol), rel_tol)
}

/// 50 logarithmically spaced frequencies on [1e-3, 1e3] rad/s.
pub fn default_freq_grid() -> Vec<f64> {
    (0..50).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 49.0)).collect()
}

/// Largest relative mismatch of two frequency responses on a grid.
pub fn freq_mismatch(g1: &StateSpace, g2: &StateSpace, omegas: &[f64]) -> f64 {
    if g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs() {
        return f64::INFINITY;
    }
    omegas
        .iter()
        .map(|&w| {
            let s = Complex64::new(0.0, w);
            let (r1, r2) = (g1.eval(s), g2.eval(s));
            let scale = r1.norm().max(r2.norm()).max(1e-10);
            (r1 - r2).norm() / scale
        })
        .fold(0.0, f64::max)
}

/// System-equality predicate: frequency responses agree on the default grid.
pub fn freq_match(g1: &StateSpace, g2: &StateSpace, rel_tol: f64) -> bool {
    freq_mismatch(g1, g2, &default_freq_grid()) <= rel_tol
}

/// LTI system whose state is zeroed at every sampling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetLinearSystem {
    pub sys: StateSpace,
}

/// Convenience for building small dense matrices from row slices.
pub fn dmat(rows: &[&[f64]]) -> Mat {
    matfun::mat(rows)
}
