//! Spectral verification of the polynomial machinery for the parabolic
//! families (cases 3/4): the level polynomials p-hat, the combined
//! polynomial P_1 whose roots are the non-constant Bryant eigenvalues, the
//! radial derivative and gradient identities, and the constant-root
//! predicate.
//!
//! Everything here hangs on B-hat_r = B + delta(r) A with A nilpotent
//! (A^2 = 0) commuting with B, so powers expand exactly as
//! B-hat^p = B^p + p delta B^{p-1} A and all pairings against a null line
//! are affine in delta. Radial derivatives are therefore closed forms.

use crate::cone::{self, ConeChartPoint};
use crate::curvature;
use crate::families::{self, OperatorFamily};
use crate::herm::{self, NullPoint};
use crate::jets::{Jet1r, Jet2, Smooth};
use crate::poly::RealPoly;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Spectral data tracked at one sample point.
#[derive(Clone, Debug)]
pub struct SpectralTrack {
    /// Roots of p-hat_{r,x} (the non-constant level eigenvalues).
    pub etas: Vec<f64>,
    /// xi_j = r^2 eta_j.
    pub xis: Vec<f64>,
    /// Numeric eigenvalues of the Bryant operator of the cone.
    pub theta_eigs: Vec<f64>,
    /// Roots of P_1 at the point.
    pub p1_roots: Vec<f64>,
}

fn null_point_at(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<NullPoint> {
    let u = DVector::from_vec(z.u());
    NullPoint::new(fam.form, u)
}

/// Pairings (B^p w, w) and (B^{p-1} A w, w) for p = 0..=deg; these make
/// every p-hat coefficient affine in delta.
fn power_pairings(fam: &OperatorFamily, w: &DVector<Complex64>, deg: usize) -> (Vec<f64>, Vec<f64>) {
    let n = fam.form.dim();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut pb = Vec::with_capacity(deg + 1);
    let mut pba = vec![0.0];
    let mut power = id;
    for p in 0..=deg {
        pb.push(fam.form.pair(&(&power * w), w).re);
        if p >= 1 {
            // (B^{p-1} A w, w) for the NEXT exponent is built below
        }
        if p < deg {
            let ba = &power * &fam.a_mat;
            pba.push(fam.form.pair(&(&ba * w), w).re);
            power = &fam.b_mat * power;
        }
    }
    (pb, pba)
}

/// Coefficients of p-hat_{r,x}(t), ascending, over any smooth scalar; the
/// scalar carries the delta(r) dependence (and through w the chart
/// dependence when instantiated with jets).
fn phat_coeffs_from_pairings<S: Smooth>(
    qhat: &RealPoly,
    pb: &[S],
    pba: &[S],
    delta: S,
) -> Vec<S> {
    let deg = qhat.degree();
    let lead = qhat.leading();
    // c_k = coefficient of t^{deg-k}
    let c: Vec<f64> = (0..=deg).map(|k| qhat.coeffs()[deg - k] / lead).collect();
    // (a_k w, w) = sum_j c_j [(B^{k-j} w, w) + (k-j) delta (B^{k-j-1} A w, w)]
    let pair_k = |k: usize| -> S {
        let mut acc = S::cst(0.0);
        for j in 0..=k {
            let p = k - j;
            let mut term = pb[p];
            if p >= 1 {
                term = term + delta * pba[p].scale(p as f64);
            }
            acc = acc + term.scale(c[j]);
        }
        acc
    };
    let den = (pair_k(1) - pb[1].scale(c[1]) - S::cst(0.0)).recip();
    // denominator is (B-hat w, w) = pb[1] + delta pba[1]
    let den = {
        let d = pb[1] + delta * pba[1];
        let _ = den;
        d.recip()
    };
    // numerator coefficient of t^{deg-1-k} is (a_k w, w)
    let mut coeffs = vec![S::cst(0.0); deg];
    for k in 0..deg {
        coeffs[deg - 1 - k] = pair_k(k) * den;
    }
    coeffs
}

/// p-hat_{r,x} as a polynomial with f64 coefficients.
pub fn phat_poly(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<RealPoly> {
    let p = fam.parab()?;
    let x = null_point_at(fam, z)?;
    let qhat = p.qhat();
    let (pb, pba) = power_pairings(fam, &x.w, qhat.degree());
    let delta: f64 = fam.delta(z.r())?;
    let coeffs = phat_coeffs_from_pairings(&qhat, &pb, &pba, delta);
    Ok(RealPoly::new(coeffs))
}

/// p-hat_{r,x}(t) and its radial derivative at fixed x.
pub fn phat_radial(fam: &OperatorFamily, z: &ConeChartPoint, t: f64) -> Result<Jet1r> {
    let p = fam.parab()?;
    let x = null_point_at(fam, z)?;
    let qhat = p.qhat();
    let (pb, pba) = power_pairings(fam, &x.w, qhat.degree());
    let pbj: Vec<Jet1r> = pb.iter().map(|&v| Jet1r::cst(v)).collect();
    let pbaj: Vec<Jet1r> = pba.iter().map(|&v| Jet1r::cst(v)).collect();
    let delta = fam.delta(Jet1r::var(z.r()))?;
    let coeffs = phat_coeffs_from_pairings(&qhat, &pbj, &pbaj, delta);
    let tt = Jet1r::cst(t);
    Ok(coeffs.iter().rev().fold(Jet1r::cst(0.0), |acc, &c| acc * tt + c))
}

/// p-hat coefficients as jet fields over the chart coordinates.
fn phat_coeffs_jets(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Vec<Jet2>> {
    let p = fam.parab()?;
    let qhat = p.qhat();
    let deg = qhat.degree();
    let vars = cone::seed_vars(&z.zeta);
    let mp1 = z.dim() / 2;
    let mut r2 = Jet2::cst(0.0);
    for v in &vars {
        r2 = r2 + *v * *v;
    }
    let r = r2.sqrt();
    let rinv = r.recip();
    let u: Vec<crate::jets::Cx<Jet2>> = (0..mp1)
        .map(|k| crate::jets::Cx::new(vars[2 * k] * rinv, vars[2 * k + 1] * rinv))
        .collect();
    let mut w = Vec::with_capacity(mp1 + 1);
    w.push(crate::jets::Cx::real(Jet2::cst(1.0)));
    w.extend(u.iter().copied());
    // eta pairings of powers, as jets: (B^p w, w), (B^{p-1} A w, w)
    let dim = fam.form.dim();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let mut pb: Vec<Jet2> = Vec::with_capacity(deg + 1);
    let mut pba: Vec<Jet2> = vec![Jet2::cst(0.0)];
    let mut power = id;
    let pair_jet = |m: &DMatrix<Complex64>, w: &[crate::jets::Cx<Jet2>]| -> Jet2 {
        let mut acc = crate::jets::Cx::<Jet2>::zero();
        for i in 0..dim {
            let mut mw = crate::jets::Cx::<Jet2>::zero();
            for jj in 0..dim {
                let c = m[(i, jj)];
                if c.re != 0.0 || c.im != 0.0 {
                    mw = mw + w[jj].scale_c(c);
                }
            }
            let term = mw * w[i].conj();
            acc = if i == 0 { acc - term } else { acc + term };
        }
        acc.re
    };
    for p in 0..=deg {
        pb.push(pair_jet(&power, &w));
        if p < deg {
            let ba = &power * &fam.a_mat;
            pba.push(pair_jet(&ba, &w));
            power = &fam.b_mat * power;
        }
    }
    let delta = fam.delta(r)?;
    Ok(phat_coeffs_from_pairings(&qhat, &pb, &pba, delta))
}

/// Shift a polynomial with scalar coefficients: q(t) = p(t + s).
fn shift_coeffs<S: Smooth>(coeffs: &[S], s: f64) -> Vec<S> {
    let mut out: Vec<S> = vec![S::cst(0.0)];
    for &c in coeffs.iter().rev() {
        // out = out * (t + s) + c
        let mut next = vec![S::cst(0.0); out.len() + 1];
        for (i, &o) in out.iter().enumerate() {
            next[i + 1] = next[i + 1] + o;
            next[i] = next[i] + o.scale(s);
        }
        next[0] = next[0] + c;
        out = next;
    }
    while out.len() > 1 {
        let last = out.last().unwrap().value();
        if last == 0.0 {
            out.pop();
        } else {
            break;
        }
    }
    out
}

/// P_1(t) = (t - (m+2)c/(m+3)) p-hat(t + c/(m+3)) + (f/r^2) q-hat_1(t + c/(m+3)).
pub fn p1_poly(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<RealPoly> {
    let p = fam.parab()?;
    if !cone::domain_contains(fam, z, 0.0) {
        return Err(Error::OutsideDomain(format!("r = {}", z.r())));
    }
    let m = fam.mdim() as f64;
    let c = p.c();
    let s = c / (m + 3.0);
    let sigma = (m + 2.0) * c / (m + 3.0);
    let phat = phat_poly(fam, z)?;
    let b = cone::chart_basics::<f64>(fam, z.zeta.as_slice());
    let f_over_r2 = b.f / (z.r() * z.r());
    let shifted = phat.compose_shift(s);
    let q1s = p.qhat1().compose_shift(s);
    Ok(RealPoly::linear(sigma)
        .mul(&shifted)
        .add(&q1s.scale(f_over_r2)))
}

/// P_1 coefficients as jet fields (for implicit differentiation of roots).
fn p1_coeffs_jets(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Vec<Jet2>> {
    let p = fam.parab()?;
    let m = fam.mdim() as f64;
    let c = p.c();
    let s = c / (m + 3.0);
    let sigma = (m + 2.0) * c / (m + 3.0);
    let phat_c = phat_coeffs_jets(fam, z)?;
    let shifted = shift_coeffs(&phat_c, s);
    // multiply by (t - sigma)
    let mut out = vec![Jet2::cst(0.0); shifted.len() + 1];
    for (i, &co) in shifted.iter().enumerate() {
        out[i + 1] = out[i + 1] + co;
        out[i] = out[i] - co.scale(sigma);
    }
    // + (f / r^2) qhat1(t + s)
    let vars = cone::seed_vars(&z.zeta);
    let basics = cone::chart_basics::<Jet2>(fam, &vars);
    let mut r2 = Jet2::cst(0.0);
    for v in &vars {
        r2 = r2 + *v * *v;
    }
    let fr2 = basics.f / r2;
    let q1s = p.qhat1().compose_shift(s);
    for (i, &qc) in q1s.coeffs().iter().enumerate() {
        out[i] = out[i] + fr2.scale(qc);
    }
    Ok(out)
}

/// Residual of the radial derivative identity
/// d/dr p-hat_r(t) = (2f/r)(p-hat_r(t) - q-hat_1(t)), relative.
pub fn check_dr(fam: &OperatorFamily, z: &ConeChartPoint, t: f64) -> Result<f64> {
    let p = fam.parab()?;
    let jet = phat_radial(fam, z, t)?;
    let b = cone::chart_basics::<f64>(fam, z.zeta.as_slice());
    let r = z.r();
    let rhs = 2.0 * b.f / r * (jet.v - p.qhat1().eval(t));
    let scale = jet.v.abs().max(rhs.abs()).max(1.0);
    Ok((jet.d1 - rhs).abs() / scale)
}

/// Residual of the root-velocity identity
/// etadot_j = (2f/r) q-hat_1(eta_j) / p-hat'(eta_j).
pub fn check_dot(fam: &OperatorFamily, z: &ConeChartPoint, j: usize) -> Result<f64> {
    let p = fam.parab()?;
    let track = etas_at(fam, z)?;
    let eta = *track
        .get(j)
        .ok_or_else(|| Error::BadParams(format!("eta index {j} of {}", track.len())))?;
    let phat = phat_poly(fam, z)?;
    let dphat = phat.derivative();
    let sep = dphat.eval(eta).abs();
    if sep < 1e-4 {
        return Err(Error::NearCollision(format!("p-hat'(eta_{j}) = {sep:.3e}")));
    }
    // implicit differentiation: etadot = -(d/dr p-hat)(eta) / p-hat'(eta)
    let jet = phat_radial(fam, z, eta)?;
    let etadot = -jet.d1 / dphat.eval(eta);
    let b = cone::chart_basics::<f64>(fam, z.zeta.as_slice());
    let rhs = 2.0 * b.f / z.r() * p.qhat1().eval(eta) / dphat.eval(eta);
    let scale = etadot.abs().max(rhs.abs()).max(1.0);
    Ok((etadot - rhs).abs() / scale)
}

/// The real simple roots of p-hat at a point.
pub fn etas_at(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<Vec<f64>> {
    let phat = phat_poly(fam, z)?;
    if phat.degree() == 0 {
        return Ok(Vec::new());
    }
    phat.real_roots(1e-6)
}

/// Residuals of the three horizontal-gradient identities at (z, t), plus
/// the closed-form gradient field cross-check.
pub fn check_hori(fam: &OperatorFamily, z: &ConeChartPoint, t: f64) -> Result<(f64, f64, f64)> {
    let p = fam.parab()?;
    let hb = cone::h_basis(fam, z)?;
    let n = z.dim();
    let r = z.r();
    let b = cone::chart_basics::<f64>(fam, z.zeta.as_slice());
    // d^H of the two scalar fields on the g-orthonormal H basis
    let phat_c = phat_coeffs_jets(fam, z)?;
    let tt = Jet2::cst(t);
    let phat_field = phat_c.iter().rev().fold(Jet2::cst(0.0), |acc, &c| acc * tt + c);
    let fj = cone::f_jet(fam, z);
    let vars = cone::seed_vars(&z.zeta);
    let mut r2j = Jet2::cst(0.0);
    for v in &vars {
        r2j = r2j + *v * *v;
    }
    let f_over_r2 = fj / r2j;
    let dphat_h = DVector::from_fn(hb.len(), |a, _| phat_field.grad_vec(n).dot(&hb[a]));
    let dfr2_h = DVector::from_fn(hb.len(), |a, _| f_over_r2.grad_vec(n).dot(&hb[a]));
    let g11 = dphat_h.dot(&dphat_h);
    let g22 = dfr2_h.dot(&dfr2_h);
    let g12 = dfr2_h.dot(&dphat_h);
    // right-hand sides
    let qhat = p.qhat();
    let qhat1 = p.qhat1();
    let phat = phat_poly(fam, z)?;
    let dphat = phat.derivative();
    let pv = phat.eval(t);
    let dpv = dphat.eval(t);
    let b2_ratio = b.pair_b2w / (r * r * b.pair_bw);
    let rhs1 = 4.0
        * (qhat.derivative().eval(t) * pv - qhat.eval(t) * dpv - 2.0 * t * pv * pv
            + pv * pv * b2_ratio);
    let rhs2 = 4.0 * b.f * b.f / r.powi(6) * (b.pair_b2w / b.pair_bw - 2.0 * r * r * p.gamma);
    let rhs3 = 4.0 * b.f / (r * r)
        * ((t - p.gamma) * qhat1.eval(t) - (t + p.gamma) * pv + pv * b2_ratio);
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
    // closed-form gradient field cross-check:
    // L-hat_t(w) = 2 (a~_{B-hat}(t) w - p-hat(t) B-hat w) realized in the chart
    let x = null_point_at(fam, z)?;
    let delta: f64 = fam.delta(r)?;
    let bhat = &fam.b_mat + &fam.a_mat * Complex64::new(delta, 0.0);
    let atilde = herm::reduced_adjoint_with_q(&bhat, &qhat);
    let cvec = (atilde.eval(t) * &x.w - (&bhat * &x.w) * Complex64::new(pv, 0.0))
        * Complex64::new(2.0, 0.0);
    let lt_chart = cone::hom_to_chart(z, &cvec);
    let g = cone::metric(fam, z)?;
    let mut cross = 0.0f64;
    for (a, h) in hb.iter().enumerate() {
        let lhs = (lt_chart.transpose() * &g * h)[(0, 0)];
        cross = cross.max((lhs - dphat_h[a]).abs() / dphat_h.norm().max(1.0));
    }
    if cross > 1e-6 {
        return Err(Error::NearCollision(format!(
            "closed-form gradient field disagrees with AD (residual {cross:.3e})"
        )));
    }
    Ok((rel(g11, rhs1), rel(g22, rhs2), rel(g12, rhs3)))
}

/// Predicted constant roots of P_1 per the constant-root classification.
#[derive(Clone, Debug)]
pub struct ConstantRoots {
    pub roots: Vec<f64>,
    pub q1_at_c: f64,
    /// lambda != 0, alpha = 0 and all mu_j = 0.
    pub exceptional: bool,
}

pub fn constante_predicate(fam: &OperatorFamily) -> Result<ConstantRoots> {
    let p = fam.parab()?;
    let m = fam.mdim() as f64;
    let c = p.c();
    let sigma = (m + 2.0) * c / (m + 3.0);
    let q1c = p.qhat1().eval(c);
    let scale = p
        .qhat1()
        .coeffs()
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1.0);
    let exceptional = p.lambda != 0.0 && p.alpha.abs() < 1e-12 && !p.two_step();
    let mut roots = Vec::new();
    if q1c.abs() < 1e-10 * scale {
        roots.push(sigma);
    }
    if exceptional {
        roots.push(p.lambda + sigma);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ConstantRoots {
        roots,
        q1_at_c: q1c,
        exceptional,
    })
}

/// Compare the predicate against numeric root tracking of P_1 at two
/// distinct sample points; roots stationary within `stat_tol` count as
/// constant. Returns the worst mismatch between predicted and observed
/// constant-root sets (a large value when the sets differ in size).
pub fn constante_check(
    fam: &OperatorFamily,
    z1: &ConeChartPoint,
    z2: &ConeChartPoint,
    stat_tol: f64,
) -> Result<f64> {
    let pred = constante_predicate(fam)?;
    let r1 = p1_poly(fam, z1)?.real_roots(1e-6)?;
    let r2 = p1_poly(fam, z2)?.real_roots(1e-6)?;
    // nearest-neighbor matching with a collision guard
    let mut stationary: Vec<f64> = Vec::new();
    for &a in &r1 {
        let mut best = f64::INFINITY;
        for &b in &r2 {
            best = best.min((a - b).abs());
        }
        if best < stat_tol {
            stationary.push(a);
        }
    }
    stationary.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if stationary.len() != pred.roots.len() {
        return Ok(1.0 + (stationary.len() as f64 - pred.roots.len() as f64).abs());
    }
    let mut worst = 0.0f64;
    for (a, b) in stationary.iter().zip(&pred.roots) {
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Residual of the gradient identity |grad xi_j|^2 = -4 p_m(xi_j)/P_n'(xi_j)
/// for the j-th non-constant root of P_1, by implicit differentiation of the
/// P_1 coefficient fields.
pub fn check_grad(fam: &OperatorFamily, z: &ConeChartPoint, j: usize) -> Result<f64> {
    let pred = constante_predicate(fam)?;
    let p1 = p1_poly(fam, z)?;
    let mut roots = p1.real_roots(1e-6)?;
    roots.retain(|r| !pred.roots.iter().any(|c| (c - r).abs() < 1e-6));
    let xi = *roots
        .get(j)
        .ok_or_else(|| Error::BadParams(format!("non-constant root index {j} of {}", roots.len())))?;
    // separation guard
    for (i, &a) in roots.iter().enumerate() {
        for &b in roots.iter().skip(i + 1) {
            if (a - b).abs() < 1e-4 {
                return Err(Error::NearCollision(format!("roots {a} and {b}")));
            }
        }
    }
    let dp1 = p1.derivative();
    if dp1.eval(xi).abs() < 1e-6 {
        return Err(Error::NearCollision(format!("P_1'({xi}) nearly zero")));
    }
    // grad xi = -(grad coefficients)(xi) / P_1'(xi)
    let cj = p1_coeffs_jets(fam, z)?;
    let n = z.dim();
    let mut gradp = DVector::<f64>::zeros(n);
    let mut xpow = 1.0;
    for c in cj.iter() {
        for i in 0..n {
            gradp[i] += c.g[i] * xpow;
        }
        xpow *= xi;
    }
    let gradxi = -gradp / dp1.eval(xi);
    let g = cone::metric(fam, z)?;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("metric".into()))?;
    let lhs = (gradxi.transpose() * &ginv * &gradxi)[(0, 0)];
    // deflate P_1 by its constant roots to get P_n
    let mut pn = p1.clone();
    for &c in &pred.roots {
        let (q, _res) = pn.div_exact(&RealPoly::linear(c));
        pn = q;
    }
    let (pm, _pc) = families::predicted_polys(&fam.spec)?;
    let rhs = -4.0 * pm.eval(xi) / pn.derivative().eval(xi);
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12))
}

/// Coefficientwise residual of the Lagrange identity
/// sum_j qhat1(eta_j)/phat'(eta_j) prod_{i != j}(t - eta_i + c/(m+3))
///   = qhat1(t + c/(m+3)) - phat(t + c/(m+3)).
pub fn check_lagrange_identity(fam: &OperatorFamily, z: &ConeChartPoint) -> Result<f64> {
    let p = fam.parab()?;
    let m = fam.mdim() as f64;
    let s = p.c() / (m + 3.0);
    let etas = etas_at(fam, z)?;
    let phat = phat_poly(fam, z)?;
    let dphat = phat.derivative();
    let qhat1 = p.qhat1();
    let mut lhs = RealPoly::zero();
    for (j, &ej) in etas.iter().enumerate() {
        let mut prod = RealPoly::one();
        for (i, &ei) in etas.iter().enumerate() {
            if i != j {
                prod = prod.mul(&RealPoly::linear(ei - s));
            }
        }
        lhs = lhs.add(&prod.scale(qhat1.eval(ej) / dphat.eval(ej)));
    }
    let rhs = qhat1.compose_shift(s).sub(&phat.compose_shift(s));
    let diff = lhs.sub(&rhs);
    let scale = rhs
        .coeffs()
        .iter()
        .fold(0.0f64, |a, c| a.max(c.abs()))
        .max(1.0);
    Ok(diff.coeffs().iter().fold(0.0f64, |a, c| a.max(c.abs())) / scale)
}

/// Numeric Theta spectrum against the predicted multiset
/// {roots of P_1} U {roots of Qhat(t + c/(m+3)) / qhat(t + c/(m+3))}.
pub fn theta_spectrum_residual(
    fam: &OperatorFamily,
    z: &ConeChartPoint,
    theta: &curvature::Sym11,
) -> Result<f64> {
    let p = fam.parab()?;
    let m = fam.mdim() as f64;
    let s = p.c() / (m + 3.0);
    let mut predicted: Vec<f64> = p1_poly(fam, z)?.real_roots(1e-6)?;
    // Qhat/qhat = (t-gamma)^{n+1-k} prod (t-beta_j)^{n_j-1}, shifted by -s
    let k = if p.two_step() { 3 } else { 2 };
    for _ in 0..(p.n + 1 - k) {
        predicted.push(p.gamma - s);
    }
    for &(b, mult) in &p.beta_blocks {
        for _ in 0..(mult - 1) {
            predicted.push(b - s);
        }
    }
    predicted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let numeric = curvature::theta_eigenvalues(theta, 1e-6)?;
    if numeric.len() != predicted.len() {
        return Err(Error::AmbiguousSpectrum(format!(
            "{} numeric vs {} predicted eigenvalues",
            numeric.len(),
            predicted.len()
        )));
    }
    let mut worst = 0.0f64;
    for (a, b) in numeric.iter().zip(&predicted) {
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Residuals of the Bryant operator eigen-relations on the parabolic
/// families: the action on the non-constant eigenfields L_j, the action on
/// V, and the modified scalar-curvature trace.
pub fn theta_relation_residuals(
    fam: &OperatorFamily,
    z: &ConeChartPoint,
    theta: &curvature::Sym11,
) -> Result<f64> {
    let p = fam.parab()?;
    let m = fam.mdim() as f64;
    let c = p.c();
    let r = z.r();
    let x = null_point_at(fam, z)?;
    let b = cone::chart_basics::<f64>(fam, z.zeta.as_slice());
    let endo = theta.endo()?;
    let etas = etas_at(fam, z)?;
    let xis: Vec<f64> = etas.iter().map(|e| e * r * r).collect();
    // q_r(t) = r^{2 deg} qhat(t / r^2), the minimal polynomial of B_r
    let qhat = p.qhat();
    let deg = qhat.degree();
    let q_r = |t: f64| r.powi(2 * deg as i32) * qhat.eval(t / (r * r));
    let br = fam.b_r(r);
    let qr_poly = {
        // roots of q_r are r^2 * (roots of qhat): gamma r^2 (multiplicity
        // 2 or 3) and beta_j r^2
        let mut roots = Vec::new();
        let kpow = if p.two_step() { 3 } else { 2 };
        for _ in 0..kpow {
            roots.push(p.gamma * r * r);
        }
        for &(bv, _) in &p.beta_blocks {
            roots.push(bv * r * r);
        }
        RealPoly::from_real_roots(&roots)
    };
    let btilde = herm::reduced_adjoint_with_q(&br, &qr_poly);
    let mut worst = 0.0f64;
    let mut l_chart: Vec<DVector<f64>> = Vec::new();
    for (j, (&eta, &xi)) in etas.iter().zip(&xis).enumerate() {
        let cvec = btilde.eval(xi) * &x.w;
        let lj = cone::hom_to_chart(z, &cvec);
        l_chart.push(lj.clone());
        let lhs = &endo * &lj;
        let coeff = eta - c / (m + 3.0);
        let vcoeff = -q_r(xi) / (r.powi(4) * (eta - p.gamma));
        let rhs = &lj * coeff + &z.zeta * vcoeff;
        let scale = endo.norm() * lj.norm() + rhs.norm() + 1.0;
        let res = (lhs - rhs).norm() / scale;
        worst = worst.max(res);
        let _ = j;
    }
    // Theta(V) = f/r^4 sum_j L_j / (p_r'(xi_j)(eta_j - gamma))
    //          - (f/r^2 - (m+2)c/(m+3)) V
    let lhs_v = &endo * &z.zeta;
    let mut rhs_v = -(&z.zeta * (b.f / (r * r) - (m + 2.0) * c / (m + 3.0)));
    for (j, lj) in l_chart.iter().enumerate() {
        let mut dprod = 1.0;
        for (i, &xi) in xis.iter().enumerate() {
            if i != j {
                dprod *= xis[j] - xi;
            }
        }
        rhs_v += lj * (b.f / (r.powi(4) * dprod * (etas[j] - p.gamma)));
    }
    let scale_v = endo.norm() * z.zeta.norm() + rhs_v.norm() + 1.0;
    worst = worst.max((lhs_v - rhs_v).norm() / scale_v);
    // trace consistency: trace_R(Theta) = trace_R(S)/(2(m+3)) with the
    // closed-form trace_R(S) = -(4/r^2)[(m+3)((B_r^2 w,w)/(B_r w,w) + f) - 2 r^2 c]
    let trace_s = -(4.0 / (r * r))
        * ((m + 3.0) * (b.pair_b2w / b.pair_bw + b.f) - 2.0 * r * r * c);
    let want = trace_s / (2.0 * (m + 3.0));
    let got = endo.trace();
    worst = worst.max((got - want).abs() / want.abs().max(1.0));
    Ok(worst)
}

/// Sample points whose spectral data is generic: real simple etas separated
/// by 1e-4 and away from gamma.
pub fn sample_generic(fam: &OperatorFamily, n: usize, seed: u64) -> Result<Vec<ConeChartPoint>> {
    let p = fam.parab()?;
    let mut out = Vec::with_capacity(n);
    let mut batch_seed = seed;
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 50 {
            return Err(Error::EmptyDomain(
                "could not find generic spectral sample points".into(),
            ));
        }
        let pts = families::sample_domain(fam, n, batch_seed)?;
        batch_seed = batch_seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for z in pts {
            if out.len() == n {
                break;
            }
            let etas = match etas_at(fam, &z) {
                Ok(e) => e,
                Err(_) => continue,
            };
            let mut ok = true;
            for (i, &a) in etas.iter().enumerate() {
                if (a - p.gamma).abs() < 1e-3 {
                    ok = false;
                }
                for &b in etas.iter().skip(i + 1) {
                    if (a - b).abs() < 1e-4 {
                        ok = false;
                    }
                }
            }
            if ok {
                out.push(z);
            }
        }
    }
    Ok(out)
}

/// Full spectral track at a point (etas, xis, Theta spectrum, P_1 roots).
pub fn spectral_track(
    fam: &OperatorFamily,
    z: &ConeChartPoint,
    theta: &curvature::Sym11,
) -> Result<SpectralTrack> {
    let etas = etas_at(fam, z)?;
    let r = z.r();
    let xis = etas.iter().map(|e| e * r * r).collect();
    let theta_eigs = curvature::theta_eigenvalues(theta, 1e-6)?;
    let p1_roots = p1_poly(fam, z)?.real_roots(1e-6)?;
    Ok(SpectralTrack {
        etas,
        xis,
        theta_eigs,
        p1_roots,
    })
}
