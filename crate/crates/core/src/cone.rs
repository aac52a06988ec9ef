//! The generalised Kahler cone in the global chart C^(m+1) \ {0}: contact
//! form, complex structure, metric, the functions f and G, Christoffel
//! symbols and the Riemann tensor.
//!
//! Chart conventions: real coordinates zeta_{2k}, zeta_{2k+1} are the real
//! and imaginary parts of z_k; r = |zeta|; u = z/r; w = e_0 + u is the null
//! representative. The radial field V is the position vector zeta, the Reeb
//! realization is T = r (c_sp - c_0 u) with c = i B_r w, and every tangent
//! vector splits as Z = Z_h + p V + q T with p = Re<Z, u>/r and q = theta(Z).
//! The metric is assembled algebraically from this splitting,
//!
//!   g(Z, Z') = Re<Z_h, Z'_h> / (B_r w, w) + r^2 f (p p' + q q'),
//!
//! so curvature needs only second-order jets of the chart functions.

use crate::curvature::Curv4;
use crate::families::OperatorFamily;
use crate::jets::{Cx, Jet2, Smooth, MAX_VARS};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::OnceLock;

/// A point of the global chart C^(m+1) \ {0}, stored as the real vector of
/// coordinates.
#[derive(Clone, Debug)]
pub struct ConeChartPoint {
    pub zeta: DVector<f64>,
}

impl ConeChartPoint {
    pub fn new(zeta: DVector<f64>) -> Result<Self> {
        if zeta.len() % 2 != 0 || zeta.len() < 4 {
            return Err(Error::BadParams(format!(
                "chart vectors have even length >= 4, got {}",
                zeta.len()
            )));
        }
        if zeta.norm() < 1e-12 {
            return Err(Error::OutsideDomain("the chart excludes the origin".into()));
        }
        Ok(ConeChartPoint { zeta })
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    pub fn r(&self) -> f64 {
        self.zeta.norm()
    }

    /// Complex coordinates z_k = zeta_{2k} + i zeta_{2k+1}.
    pub fn z(&self) -> Vec<Complex64> {
        (0..self.dim() / 2)
            .map(|k| Complex64::new(self.zeta[2 * k], self.zeta[2 * k + 1]))
            .collect()
    }

    pub fn u(&self) -> Vec<Complex64> {
        let r = self.r();
        self.z().into_iter().map(|z| z / r).collect()
    }

    /// The null representative w = e_0 + u in C^(m+2).
    pub fn w(&self) -> DVector<Complex64> {
        let u = self.u();
        let mut w = DVector::<Complex64>::zeros(u.len() + 1);
        w[0] = Complex64::new(1.0, 0.0);
        for (k, uk) in u.into_iter().enumerate() {
            w[k + 1] = uk;
        }
        w
    }
}

/// All pointwise chart data over a smooth scalar; instantiating with `f64`
/// gives values, with [`Jet2`] exact first and second derivatives.
pub struct Basics<S: Smooth> {
    pub r: S,
    /// u = z/r in C^(m+1).
    pub u: Vec<Cx<S>>,
    /// (B_r w, w) and (A_r w, w).
    pub pair_bw: S,
    pub pair_aw: S,
    /// (B_r^2 w, w).
    pub pair_b2w: S,
    pub f: S,
    /// Complex components of the Reeb realization T.
    pub t_cx: Vec<Cx<S>>,
    /// Covector components of p = dr/r and q = theta on the real basis.
    pub p_cov: Vec<S>,
    pub q_cov: Vec<S>,
}

fn matvec<S: Smooth>(m: &DMatrix<Complex64>, w: &[Cx<S>]) -> Vec<Cx<S>> {
    let n = w.len();
    let mut out = vec![Cx::<S>::zero(); n];
    for i in 0..n {
        let mut acc = Cx::<S>::zero();
        for j in 0..n {
            let c = m[(i, j)];
            if c.re != 0.0 || c.im != 0.0 {
                acc = acc + w[j].scale_c(c);
            }
        }
        out[i] = acc;
    }
    out
}

/// Indefinite pairing (v, w) = -v_0 conj(w_0) + sum v_j conj(w_j).
fn eta_pair<S: Smooth>(v: &[Cx<S>], w: &[Cx<S>]) -> Cx<S> {
    let mut acc = -(v[0] * w[0].conj());
    for i in 1..v.len() {
        acc = acc + v[i] * w[i].conj();
    }
    acc
}

/// Standard positive pairing sum a_k conj(b_k) on C^(m+1).
fn herm_dot<S: Smooth>(a: &[Cx<S>], b: &[Cx<S>]) -> Cx<S> {
    let mut acc = Cx::<S>::zero();
    for i in 0..a.len() {
        acc = acc + a[i] * b[i].conj();
    }
    acc
}

/// Compute the pointwise chart data at the given coordinates.
pub fn chart_basics<S: Smooth>(fam: &OperatorFamily, zeta: &[S]) -> Basics<S> {
    let mp1 = zeta.len() / 2;
    let mut r2 = S::cst(0.0);
    for z in zeta {
        r2 = r2 + *z * *z;
    }
    let r = r2.sqrt();
    let rinv = r.recip();
    let u: Vec<Cx<S>> = (0..mp1)
        .map(|k| Cx::new(zeta[2 * k] * rinv, zeta[2 * k + 1] * rinv))
        .collect();
    // w = e_0 + u
    let mut w = Vec::with_capacity(mp1 + 1);
    w.push(Cx::real(S::cst(1.0)));
    w.extend(u.iter().copied());
    let aw = matvec(&fam.a_mat, &w);
    let bw = matvec(&fam.b_mat, &w);
    let pair_a = eta_pair(&aw, &w).re;
    let pair_b = eta_pair(&bw, &w).re;
    let c = fam.coeffs(r);
    let pair_bw = c.bb * pair_b + c.ba * pair_a;
    let pair_aw = c.aa * pair_a;
    let f = pair_aw / pair_bw;
    // (B_r^2 w, w) = bb^2 (B^2 w, w) + 2 bb ba (A B w, w) + ba^2 (A^2 w, w)
    let pair_bb = eta_pair(&bw, &bw);
    let pair_ab = eta_pair(&aw, &bw);
    let pair_aa = eta_pair(&aw, &aw);
    let pair_b2w = c.bb * c.bb * pair_bb.re
        + (c.bb * c.ba * pair_ab.re).scale(2.0)
        + c.ba * c.ba * pair_aa.re;
    // T = r (c_sp - c_0 u), c = i B_r w
    let mut t_cx = Vec::with_capacity(mp1);
    for k in 0..mp1 {
        let ck = (bw[k + 1].scale_s(c.bb) + aw[k + 1].scale_s(c.ba)).mul_i();
        let c0 = (bw[0].scale_s(c.bb) + aw[0].scale_s(c.ba)).mul_i();
        let tk = (ck - c0 * u[k]).scale_s(r);
        t_cx.push(tk);
    }
    // covectors: p_i = Re<E_i, u>/r, q_i = Im<E_i, u>/(r (B_r w, w))
    let qden = (r * pair_bw).recip();
    let mut p_cov = Vec::with_capacity(2 * mp1);
    let mut q_cov = Vec::with_capacity(2 * mp1);
    for k in 0..mp1 {
        p_cov.push(u[k].re * rinv);
        p_cov.push(u[k].im * rinv);
        q_cov.push(-(u[k].im * qden));
        q_cov.push(u[k].re * qden);
    }
    Basics {
        r,
        u,
        pair_bw,
        pair_aw,
        pair_b2w,
        f,
        t_cx,
        p_cov,
        q_cov,
    }
}

/// Complex form of the i-th real basis vector in C^(m+1).
fn basis_cx<S: Smooth>(mp1: usize, i: usize) -> Vec<Cx<S>> {
    let mut v = vec![Cx::<S>::zero(); mp1];
    if i % 2 == 0 {
        v[i / 2] = Cx::real(S::cst(1.0));
    } else {
        v[i / 2] = Cx::new(S::cst(0.0), S::cst(1.0));
    }
    v
}

/// The pairwise metric components from the chart data.
pub fn metric_from_basics<S: Smooth>(b: &Basics<S>) -> Vec<Vec<S>> {
    let mp1 = b.u.len();
    let n = 2 * mp1;
    // z = r u as a complex vector; Z_h^{(i)} = E_i - p_i z - q_i T
    let z: Vec<Cx<S>> = b.u.iter().map(|uk| uk.scale_s(b.r)).collect();
    let mut zh: Vec<Vec<Cx<S>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = basis_cx::<S>(mp1, i);
        for k in 0..mp1 {
            v[k] = v[k] - z[k].scale_s(b.p_cov[i]) - b.t_cx[k].scale_s(b.q_cov[i]);
        }
        zh.push(v);
    }
    let binv = b.pair_bw.recip();
    let r2f = b.r * b.r * b.f;
    let mut g = vec![vec![S::cst(0.0); n]; n];
    for i in 0..n {
        for jj in i..n {
            let hij = herm_dot(&zh[i], &zh[jj]).re;
            let val = hij * binv + r2f * (b.p_cov[i] * b.p_cov[jj] + b.q_cov[i] * b.q_cov[jj]);
            g[i][jj] = val;
            g[jj][i] = val;
        }
    }
    g
}

/// The frame data at a chart point: radial and Reeb realizations, the
/// complex structure matrix, and the splitting covectors.
#[derive(Clone, Debug)]
pub struct FramePoint {
    pub v: DVector<f64>,
    pub t: DVector<f64>,
    pub jmat: DMatrix<f64>,
    /// theta as a covector on the chart basis.
    pub theta: DVector<f64>,
    /// p = dr/r as a covector.
    pub p: DVector<f64>,
    pub r: f64,
    pub pair_bw: f64,
    pub pair_aw: f64,
    pub f: f64,
}

impl FramePoint {
    /// Split a tangent vector into (p, q, Z_h).
    pub fn split(&self, zv: &DVector<f64>) -> (f64, f64, DVector<f64>) {
        let p = self.p.dot(zv);
        let q = self.theta.dot(zv);
        let zh = zv - &self.v * p - &self.t * q;
        (p, q, zh)
    }
}

fn realify_cx(v: &[Cx<f64>]) -> DVector<f64> {
    let mut out = DVector::<f64>::zeros(2 * v.len());
    for (k, c) in v.iter().enumerate() {
        out[2 * k] = c.re;
        out[2 * k + 1] = c.im;
    }
    out
}

/// Check membership in the cone domain M: r interior to J with margin,
/// (B_r w, w) > margin, f > margin, and r^2 clear of the mu-branch poles.
pub fn domain_contains(fam: &OperatorFamily, z: &ConeChartPoint, margin: f64) -> bool {
    if z.dim() != 2 * (fam.mdim() + 1) {
        return false;
    }
    let r = z.r();
    let (lo, hi) = fam.interval;
    let pad = margin * (hi - lo);
    if !(r > lo + pad && r < hi - pad) {
        return false;
    }
    if !fam.pole_free(r, 1e-3) {
        return false;
    }
    let b = chart_basics::<f64>(fam, z.zeta.as_slice());
    b.pair_bw > margin && b.f > margin
}

/// The contact form theta at z applied to a tangent vector.
pub fn contact_theta(fam: &OperatorFamily, z: &ConeChartPoint, zv: &DVector<f64>) -> Result<f64> {
    if !domain_contains(fam, z, 0.0) {
        return Err(Error::OutsideDomain(format!("r = {}", z.r())));
    }
    let b = chart_basics::<f64>(fam, z.zeta.as_slice());
    Ok(DVector::from_vec(b.q_cov.clone()).dot(zv))
}

/// The frame at a chart point.
pub fn frame(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<FramePoint> {
    if !domain_contains(fam, z, 0.0) {
        return Err(Error::OutsideDomain(format!("r = {}", z.r())));
    }
    let b = chart_basics::<f64>(fam, z.zeta.as_slice());
    let n = z.dim();
    let mp1 = n / 2;
    let t = realify_cx(&b.t_cx);
    let v = z.zeta.clone();
    let theta = DVector::from_vec(b.q_cov.clone());
    let p = DVector::from_vec(b.p_cov.clone());
    // J(E_i) = realify(i Z_h^(i)) + p_i T - q_i V
    let zvec: Vec<Cx<f64>> = b.u.iter().map(|uk| uk.scale_s(b.r)).collect();
    let mut jmat = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut zh = basis_cx::<f64>(mp1, i);
        for k in 0..mp1 {
            zh[k] = zh[k] - zvec[k].scale_s(b.p_cov[i]) - b.t_cx[k].scale_s(b.q_cov[i]);
        }
        let izh: Vec<Cx<f64>> = zh.iter().map(|c| c.mul_i()).collect();
        let col = realify_cx(&izh) + &t * b.p_cov[i] - &v * b.q_cov[i];
        jmat.set_column(i, &col);
    }
    Ok(FramePoint {
        v,
        t,
        jmat,
        theta,
        p,
        r: b.r,
        pair_bw: b.pair_bw,
        pair_aw: b.pair_aw,
        f: b.f,
    })
}

/// The metric in chart coordinates, assembled algebraically.
pub fn metric(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<DMatrix<f64>> {
    if !domain_contains(fam, z, 0.0) {
        return Err(Error::OutsideDomain(format!("r = {}", z.r())));
    }
    let b = chart_basics::<f64>(fam, z.zeta.as_slice());
    let gm = metric_from_basics(&b);
    let n = z.dim();
    let g = DMatrix::from_fn(n, n, |i, jj| gm[i][jj]);
    if g.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(format!("at r = {}", z.r())));
    }
    Ok(g)
}

/// The functions f = (A_r w, w)/(B_r w, w) and G = r (Adot_r w, w)/(2 (A_r w, w)).
pub fn f_and_g(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<(f64, f64)> {
    if !domain_contains(fam, z, 0.0) {
        return Err(Error::OutsideDomain(format!("r = {}", z.r())));
    }
    let b = chart_basics::<f64>(fam, z.zeta.as_slice());
    let r = z.r();
    let adot = fam.adot_r(r);
    let w = z.w();
    let pair_adot = fam.form.pair(&(&adot * &w), &w).re;
    Ok((b.f, r * pair_adot / (2.0 * b.pair_aw)))
}

/// Seed the chart coordinates as jet variables.
pub fn seed_vars(zeta: &DVector<f64>) -> Vec<Jet2> {
    assert!(zeta.len() <= MAX_VARS);
    zeta.iter()
        .enumerate()
        .map(|(i, &x)| Jet2::var(x, i))
        .collect()
}

/// Metric components as second-order jets in the chart coordinates.
pub fn metric_jets(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Vec<Vec<Jet2>>> {
    if !domain_contains(fam, z, 0.0) {
        return Err(Error::OutsideDomain(format!("r = {}", z.r())));
    }
    let vars = seed_vars(&z.zeta);
    let b = chart_basics::<Jet2>(fam, &vars);
    Ok(metric_from_basics(&b))
}

/// f as a jet field at z.
pub fn f_jet(fam: &OperatorFamily, z: &ConeChartPoint) -> Jet2 {
    let vars = seed_vars(&z.zeta);
    chart_basics::<Jet2>(fam, &vars).f
}

/// G = r (Adot_r w, w) / (2 (A_r w, w)) as a jet field at z.
pub fn g_fun_jet(fam: &OperatorFamily, z: &ConeChartPoint) -> Jet2 {
    let vars = seed_vars(&z.zeta);
    let mp1 = z.dim() / 2;
    let mut r2 = Jet2::cst(0.0);
    for v in &vars {
        r2 = r2 + *v * *v;
    }
    let r = r2.sqrt();
    let rinv = r.recip();
    let u: Vec<Cx<Jet2>> = (0..mp1)
        .map(|k| Cx::new(vars[2 * k] * rinv, vars[2 * k + 1] * rinv))
        .collect();
    let mut w = Vec::with_capacity(mp1 + 1);
    w.push(Cx::real(Jet2::cst(1.0)));
    w.extend(u.iter().copied());
    let aw = matvec(&fam.a_mat, &w);
    let pair_a = eta_pair(&aw, &w).re;
    let c = fam.coeffs(r);
    let cdot = fam.coeffs_dot(r);
    r * cdot.aa * pair_a / ((c.aa * pair_a).scale(2.0))
}

/// The primitive alpha = r^2 theta / 2 as jet fields (component i is
/// alpha(E_i)); omega = d alpha is the Kahler form.
pub fn alpha_jets(fam: &OperatorFamily, z: &ConeChartPoint) -> Vec<Jet2> {
    let vars = seed_vars(&z.zeta);
    let b = chart_basics::<Jet2>(fam, &vars);
    // alpha_i = Im<E_i, z> / (2 (B_r w, w)); Im<E_{2k}, z> = -zeta_{2k+1},
    // Im<E_{2k+1}, z> = zeta_{2k}
    let den = (b.pair_bw).scale(2.0).recip();
    let mp1 = z.dim() / 2;
    let mut out = Vec::with_capacity(z.dim());
    for k in 0..mp1 {
        out.push(-(vars[2 * k + 1] * den));
        out.push(vars[2 * k] * den);
    }
    out
}

/// Global curvature sign calibration: +1 keeps the convention
/// R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_{[X,Y]}; -1 flips the
/// tensor. Decided once on a flat-perturbed test family by the first
/// curvature component identity, and echoed in reports.
pub fn curvature_sign() -> f64 {
    static SIGN: OnceLock<f64> = OnceLock::new();
    *SIGN.get_or_init(|| {
        let spec = crate::families::example_spec(
            2,
            crate::families::ExampleName::Bryant { ks: vec![0.1, 0.2, 0.3] },
        )
        .expect("calibration spec");
        let fam = crate::families::build_family(&spec).expect("calibration family");
        let pts = crate::families::sample_domain(&fam, 3, 12345).expect("calibration points");
        let mut plus = 0.0f64;
        let mut minus = 0.0f64;
        for pt in &pts {
            let r = riemann_raw(&fam, pt).expect("calibration curvature");
            plus += curb_residuals(&fam, pt, &r, 7).expect("curb").a;
            minus += curb_residuals(&fam, pt, &r.scale(-1.0), 7).expect("curb").a;
        }
        if minus < plus {
            -1.0
        } else {
            1.0
        }
    })
}

/// Riemann tensor in the fixed derivation convention, before the global
/// sign calibration.
pub fn riemann_raw(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Curv4> {
    let n = z.dim();
    let gj = metric_jets(fam, z)?;
    let g0 = DMatrix::from_fn(n, n, |i, jj| gj[i][jj].v);
    let ginv = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("metric not invertible".into()))?;
    // D[i][j][l] = d_i g_{jl}
    let d = |i: usize, jj: usize, l: usize| gj[jj][l].g[i];
    // D2[a][i][j][l] = d_a d_i g_{jl}
    let d2 = |a: usize, i: usize, jj: usize, l: usize| gj[jj][l].h[a][i];
    // Christoffels
    let mut gamma = vec![0.0; n * n * n];
    let gid = |k: usize, i: usize, jj: usize| (k * n + i) * n + jj;
    for k in 0..n {
        for i in 0..n {
            for jj in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (d(i, jj, l) + d(jj, i, l) - d(l, i, jj));
                }
                gamma[gid(k, i, jj)] = 0.5 * acc;
            }
        }
    }
    // d_a ginv = -ginv (d_a g) ginv
    let mut dginv = Vec::with_capacity(n);
    for a in 0..n {
        let dga = DMatrix::from_fn(n, n, |i, jj| d(a, i, jj));
        dginv.push(-(&ginv * dga * &ginv));
    }
    // d_a Gamma^k_{ij}
    let mut dgamma = vec![0.0; n * n * n * n];
    let dgid = |a: usize, k: usize, i: usize, jj: usize| ((a * n + k) * n + i) * n + jj;
    for a in 0..n {
        for k in 0..n {
            for i in 0..n {
                for jj in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += dginv[a][(k, l)] * (d(i, jj, l) + d(jj, i, l) - d(l, i, jj))
                            + ginv[(k, l)]
                                * (d2(a, i, jj, l) + d2(a, jj, i, l) - d2(a, l, i, jj));
                    }
                    dgamma[dgid(a, k, i, jj)] = 0.5 * acc;
                }
            }
        }
    }
    // R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
    //           + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}
    let fr = frame(fam, z)?;
    let mut out = Curv4::zeros(n, g0.clone(), fr.jmat.clone());
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut rl = dgamma[dgid(i, l, jj, k)] - dgamma[dgid(jj, l, i, k)];
                    for m in 0..n {
                        rl += gamma[gid(l, i, m)] * gamma[gid(m, jj, k)]
                            - gamma[gid(l, jj, m)] * gamma[gid(m, i, k)];
                    }
                    // upper-index storage R^l_{ijk}, lowered below
                    let id = out.idx(i, jj, k, l);
                    out.data[id] = rl;
                }
            }
        }
    }
    // lower: R_{ijkl} = g_{lm} R^m_{ijk}; do it out of place
    let mut lowered = Curv4::zeros(n, g0.clone(), fr.jmat);
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += g0[(l, m)] * out.get(i, jj, k, m);
                    }
                    lowered.set(i, jj, k, l, acc);
                }
            }
        }
    }
    Ok(lowered)
}

/// The Riemann tensor with the calibrated global sign applied.
pub fn riemann(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Curv4> {
    let r = riemann_raw(fam, z)?;
    let s = curvature_sign();
    Ok(if s < 0.0 { r.scale(-1.0) } else { r })
}

/// Deterministic g-orthonormal basis of the contact distribution H at z.
pub fn h_basis(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Vec<DVector<f64>>> {
    let fr = frame(fam, z)?;
    let g = metric(fam, z)?;
    let n = z.dim();
    let gdot = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &g * b)[(0, 0)];
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(n - 2);
    for i in 0..n {
        if out.len() == n - 2 {
            break;
        }
        let mut e = DVector::<f64>::zeros(n);
        e[i] = 1.0;
        let (_, _, mut zh) = fr.split(&e);
        for b in &out {
            let c = gdot(&zh, b);
            zh -= b * c;
        }
        let nrm = gdot(&zh, &zh).sqrt();
        if nrm > 1e-6 {
            out.push(zh / nrm);
        }
    }
    if out.len() != n - 2 {
        return Err(Error::SingularSystem(format!(
            "H basis has {} of {} vectors",
            out.len(),
            n - 2
        )));
    }
    Ok(out)
}

/// Residuals of the four verified curvature component identities of the
/// generalised cone, relative to ||R|| times the g-norms of the arguments.
#[derive(Clone, Copy, Debug)]
pub struct CurbResiduals {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CurbResiduals {
    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.c).max(self.d)
    }
}

/// Evaluate the curvature component identities at z with `n_vec` random
/// g-orthonormalized H-vector triples (seeded deterministically).
pub fn curb_residuals(
    fam: &OperatorFamily,
    z: &ConeChartPoint,
    curv: &Curv4,
    seed: u64,
) -> Result<CurbResiduals> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let fr = frame(fam, z)?;
    let g = &curv.g;
    let n = z.dim();
    let omega = fr.jmat.transpose() * g;
    let fj = f_jet(fam, z);
    let gj = g_fun_jet(fam, z);
    let df = fj.grad_vec(n);
    let dg_fun = gj.grad_vec(n);
    let hess_f = fj.hess_mat(n);
    let r = fr.r;
    // fdot = df(V)/r and its differential:
    // d(fdot)_j = -zeta_j/r^3 sum_i zeta_i df_i + (df_j + sum_i zeta_i H_{ij})/r
    let vdotdf = z.zeta.dot(&df);
    let fdot_grad = DVector::from_fn(n, |jj, _| {
        -z.zeta[jj] / (r * r * r) * vdotdf
            + (df[jj] + z.zeta.dot(&hess_f.column(jj).into_owned())) / r
    });
    let gdot = dg_fun.dot(&z.zeta) / r;
    let bigg = gj.v;
    let f = fr.f;
    // v is the g_r-dual of df on H; the cone metric restricted to H is
    // r^2 g_r, so g(v, v) = r^4 |df|^2 in the g-orthonormal H components
    let hb = h_basis(fam, z)?;
    let dfh = DVector::from_fn(hb.len(), |a, _| df.dot(&hb[a]));
    let gvv = r.powi(4) * dfh.dot(&dfh);
    let gnorm = |v: &DVector<f64>| (v.transpose() * g * v)[(0, 0)].sqrt();
    let gpair = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * g * b)[(0, 0)];
    let wpair = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &omega * b)[(0, 0)];
    let rnorm = crate::curvature::tensor_norm(curv)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut res_a = 0.0f64;
    let mut res_d = 0.0f64;
    let tn = gnorm(&fr.t);
    let vn = gnorm(&fr.v);
    for _ in 0..4 {
        // random orthonormal-ish H vectors from the basis
        let mut pick = || {
            let mut acc = DVector::<f64>::zeros(n);
            for b in &hb {
                let c: f64 = StandardNormal.sample(&mut rng);
                acc += b * c;
            }
            let nn = gnorm(&acc);
            acc / nn
        };
        let x = pick();
        let y = pick();
        let zz = pick();
        let jx = &fr.jmat * &x;
        let jy = &fr.jmat * &y;
        let jz = &fr.jmat * &zz;
        let xf = df.dot(&x);
        let yf = df.dot(&y);
        let zf = df.dot(&zz);
        let jxf = df.dot(&jx);
        let jyf = df.dot(&jy);
        let jzf = df.dot(&jz);
        // (a): g(R_{X,T} Y, Z)
        let lha = curv.apply(x.as_slice(), fr.t.as_slice(), y.as_slice(), zz.as_slice());
        let rhs = -yf / 2.0 * wpair(&x, &zz) - jyf / 2.0 * gpair(&x, &zz)
            + zf / 2.0 * wpair(&x, &y)
            + jzf / 2.0 * gpair(&x, &y)
            - xf * wpair(&y, &zz);
        let scale_a = (rnorm * tn).max(1.0);
        res_a = res_a.max((lha - rhs).abs() / scale_a);
        // (d): g(R_{X,V} Y, Z)
        let lhd = curv.apply(x.as_slice(), fr.v.as_slice(), y.as_slice(), zz.as_slice());
        let rhd = yf * gpair(&x, &zz) / 2.0 - zf * gpair(&x, &y) / 2.0
            - jyf * wpair(&x, &zz) / 2.0
            + jzf * wpair(&x, &y) / 2.0
            - jxf * wpair(&y, &zz);
        let scale_d = (rnorm * vn).max(1.0);
        res_d = res_d.max((lhd - rhd).abs() / scale_d);
    }
    // (b): g(R_{T,V} V, T)
    let lhb = curv.apply(
        fr.t.as_slice(),
        fr.v.as_slice(),
        fr.v.as_slice(),
        fr.t.as_slice(),
    );
    let rhb = gvv
        + r * r * f * ((bigg - 2.0) * (8.0 * f - 2.0) + r * gdot + 12.0 * f * f);
    let scale_b = (rnorm * tn * tn * vn * vn).max(1.0);
    let res_b = (lhb - rhb).abs() / scale_b;
    // (c): g(R_{T,V} V, Z) over the H basis
    let mut res_c = 0.0f64;
    for zz in &hb {
        let jz = &fr.jmat * zz;
        let lhc = curv.apply(
            fr.t.as_slice(),
            fr.v.as_slice(),
            fr.v.as_slice(),
            zz.as_slice(),
        );
        let rhc = -r * r * r / 2.0 * fdot_grad.dot(&jz) + r * r * (bigg - 1.0) * df.dot(&jz);
        let scale_c = (rnorm * tn * vn * vn).max(1.0);
        res_c = res_c.max((lhc - rhc).abs() / scale_c);
    }
    Ok(CurbResiduals {
        a: res_a,
        b: res_b,
        c: res_c,
        d: res_d,
    })
}

/// Realize a Hom(x, W/x) tangent homomorphism value c = X(w) as a chart
/// vector: r (c_sp - c_0 u).
pub fn hom_to_chart(z: &ConeChartPoint, cvec: &DVector<Complex64>) -> DVector<f64> {
    let u = z.u();
    let r = z.r();
    let mp1 = u.len();
    let mut out = DVector::<f64>::zeros(2 * mp1);
    for k in 0..mp1 {
        let t = (cvec[k + 1] - cvec[0] * u[k]) * r;
        out[2 * k] = t.re;
        out[2 * k + 1] = t.im;
    }
    out
}
