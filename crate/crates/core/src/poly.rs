//! Real and complex polynomial arithmetic, companion-matrix root finding,
//! and matrix minimal/characteristic polynomials from clustered spectra.
//!
//! The characteristic polynomial is always assembled from clustered
//! eigenvalues, never from a determinant expansion; roots are polished by
//! Newton with fallback to the raw companion eigenvalue.

use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

const TRIM_REL: f64 = 1e-12;

/// Real-coefficient polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

impl RealPoly {
    /// Build from ascending coefficients, trimming trailing near-zeros
    /// (threshold 1e-12 relative to the largest coefficient).
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = RealPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        RealPoly { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        RealPoly { coeffs: vec![1.0] }
    }

    pub fn constant(a: f64) -> Self {
        RealPoly::new(vec![a])
    }

    /// The monomial t.
    pub fn x() -> Self {
        RealPoly { coeffs: vec![0.0, 1.0] }
    }

    /// Monic linear factor t - root.
    pub fn linear(root: f64) -> Self {
        RealPoly { coeffs: vec![-root, 1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    fn trim(&mut self) {
        let maxc = self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let thr = TRIM_REL * maxc;
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().abs() <= thr {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn eval_complex(&self, t: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c)
    }

    /// Horner evaluation over any smooth scalar (used by jet-valued fields).
    pub fn eval_smooth<S: crate::jets::Smooth>(&self, t: S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::cst(0.0), |acc, &c| acc * t + S::cst(c))
    }

    pub fn derivative(&self) -> RealPoly {
        if self.coeffs.len() == 1 {
            return RealPoly::zero();
        }
        RealPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &RealPoly) -> RealPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut c = vec![0.0; n];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = self.coeffs.get(i).copied().unwrap_or(0.0)
                + other.coeffs.get(i).copied().unwrap_or(0.0);
        }
        RealPoly::new(c)
    }

    pub fn sub(&self, other: &RealPoly) -> RealPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> RealPoly {
        RealPoly::new(self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn mul(&self, other: &RealPoly) -> RealPoly {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        RealPoly::new(c)
    }

    /// p(t + s), expanded.
    pub fn compose_shift(&self, s: f64) -> RealPoly {
        let mut out = RealPoly::zero();
        let shift = RealPoly { coeffs: vec![s, 1.0] };
        for &c in self.coeffs.iter().rev() {
            out = out.mul(&shift).add(&RealPoly::constant(c));
        }
        out
    }

    /// Long division by `divisor`; returns (quotient, max |remainder coeff|).
    pub fn div_exact(&self, divisor: &RealPoly) -> (RealPoly, f64) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let dn = divisor.coeffs.len();
        if rem.len() < dn {
            return (RealPoly::zero(), rem.iter().fold(0.0f64, |a, c| a.max(c.abs())));
        }
        let mut quot = vec![0.0; rem.len() - dn + 1];
        let lead = divisor.leading();
        for k in (0..quot.len()).rev() {
            let q = rem[k + dn - 1] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
        }
        let resid = rem.iter().take(dn - 1).fold(0.0f64, |a, c| a.max(c.abs()));
        (RealPoly::new(quot), resid)
    }

    /// Build a real polynomial from a conjugation-closed multiset of roots.
    pub fn from_complex_roots(roots: &[Complex64]) -> Result<RealPoly> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * r;
            }
            c = next;
        }
        let scale = c.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let max_im = c.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
        if max_im > 1e-9 * scale.max(1.0) {
            return Err(Error::AmbiguousSpectrum(format!(
                "root multiset is not conjugation-closed (imag residual {max_im:.3e})"
            )));
        }
        Ok(RealPoly::new(c.into_iter().map(|z| z.re).collect()))
    }

    pub fn from_real_roots(roots: &[f64]) -> RealPoly {
        let mut p = RealPoly::one();
        for &r in roots {
            p = p.mul(&RealPoly::linear(r));
        }
        p
    }

    /// All complex roots via companion-matrix eigenvalues, polished by
    /// Newton (at most 10 steps, falling back to the raw eigenvalue).
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.degree() < 1 {
            return Err(Error::ZeroPolynomial);
        }
        let n = self.degree();
        let lead = self.leading();
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let raw = comp.complex_eigenvalues();
        let dp = self.derivative();
        let maxc = self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let mut out = Vec::with_capacity(n);
        for &r0 in raw.iter() {
            let mut r = r0;
            let mut best = r0;
            let mut best_val = self.eval_complex(r0).norm();
            for _ in 0..10 {
                let f = self.eval_complex(r);
                let d = dp.eval_complex(r);
                if d.norm() < 1e-300 {
                    break;
                }
                let step = f / d;
                r -= step;
                let v = self.eval_complex(r).norm();
                if v < best_val {
                    best_val = v;
                    best = r;
                }
                if step.norm() < 1e-16 * (1.0 + r.norm()) {
                    break;
                }
            }
            if !best.re.is_finite() || !best.im.is_finite() || best_val > self.eval_complex(r0).norm() {
                best = r0;
            }
            let _ = maxc;
            out.push(best);
        }
        Ok(out)
    }

    /// Real roots with an imaginary-part guard; errors if any root strays
    /// from the real axis beyond `im_tol`.
    pub fn real_roots(&self, im_tol: f64) -> Result<Vec<f64>> {
        let rts = self.roots()?;
        let mut out: Vec<f64> = Vec::with_capacity(rts.len());
        for r in rts {
            if r.im.abs() > im_tol {
                return Err(Error::AmbiguousSpectrum(format!(
                    "expected real root, got {r}"
                )));
            }
            out.push(r.re);
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }
}

impl std::fmt::Display for RealPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 && !(first && i == 0) {
                continue;
            }
            let sign = if c < 0.0 { "-" } else if first { "" } else { "+" };
            let a = c.abs();
            match i {
                0 => write!(f, " {sign} {a:.6}")?,
                1 => write!(f, " {sign} {a:.6} t")?,
                _ => write!(f, " {sign} {a:.6} t^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}

/// Polynomial with complex-matrix coefficients, ascending degree.
/// Houses the reduced adjoint operator of an eta-hermitian matrix.
#[derive(Clone, Debug)]
pub struct MatrixPoly {
    pub coeffs: Vec<DMatrix<Complex64>>,
}

impl MatrixPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.coeffs[0].nrows();
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc * Complex64::new(t, 0.0) + c;
        }
        acc
    }

    /// Product with a scalar real polynomial.
    pub fn mul_scalar_poly(&self, p: &RealPoly) -> MatrixPoly {
        let n = self.coeffs[0].nrows();
        let mut out = vec![DMatrix::<Complex64>::zeros(n, n); self.coeffs.len() + p.degree()];
        for (i, m) in self.coeffs.iter().enumerate() {
            for (j, &c) in p.coeffs().iter().enumerate() {
                out[i + j] += m * Complex64::new(c, 0.0);
            }
        }
        MatrixPoly { coeffs: out }
    }
}

/// A cluster of numerically coincident eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenCluster {
    pub value: Complex64,
    /// Algebraic multiplicity.
    pub multiplicity: usize,
    /// Size of the largest Jordan block (filled by `jordan_structure`).
    pub block: usize,
}

/// Operator 2-norm (largest singular value).
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values[0]
}

/// Realification of a complex matrix: [[X, -Y], [Y, X]]. Its spectrum is
/// spec(A) together with its conjugate, each singular value doubled.
pub fn realify(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
            out[(i + n, j + n)] = z.re;
        }
    }
    out
}

/// Rank of a complex matrix with singular values below `thr` treated as zero.
pub fn rank_with_threshold(m: &DMatrix<Complex64>, thr: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().filter(|&&s| s > thr).count()
}

/// Greedy single-linkage clustering of complex values.
pub fn cluster(vals: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &v in vals {
        let mut placed = false;
        for (c, m) in clusters.iter_mut() {
            if (v - *c).norm() <= radius {
                // running mean keeps the center stable
                *c = (*c * (*m as f64) + v) / (*m as f64 + 1.0);
                *m += 1;
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push((v, 1));
        }
    }
    // snap near-real centers to the real axis
    for (c, _) in clusters.iter_mut() {
        if c.im.abs() <= radius {
            c.im = 0.0;
        }
    }
    clusters.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    clusters
}

/// Clustered spectrum of a complex matrix with a real characteristic
/// polynomial (e.g. eta-hermitian). Multiplicities are exact integers;
/// `AmbiguousSpectrum` is raised when clusters are marginally separated
/// or the doubling structure of the realified spectrum is inconsistent.
pub fn spectrum(m: &DMatrix<Complex64>, tol: f64) -> Result<Vec<EigenCluster>> {
    let n = m.nrows();
    let scale = op_norm(m).max(1.0);
    let radius = 10.0 * tol * scale;
    let eigs = realify(m).complex_eigenvalues();
    let clusters = cluster(eigs.as_slice(), radius);
    // marginally separated clusters signal the caller to perturb or raise tol
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            let d = (clusters[i].0 - clusters[j].0).norm();
            if d < 10.0 * radius {
                return Err(Error::AmbiguousSpectrum(format!(
                    "clusters at {} and {} separated by only {d:.3e}",
                    clusters[i].0, clusters[j].0
                )));
            }
        }
    }
    let mut out = Vec::new();
    let mut total = 0;
    for (c, mult) in clusters {
        if mult % 2 != 0 {
            return Err(Error::AmbiguousSpectrum(format!(
                "odd realified multiplicity {mult} at {c}; characteristic polynomial not real?"
            )));
        }
        total += mult / 2;
        out.push(EigenCluster {
            value: c,
            multiplicity: mult / 2,
            block: 1,
        });
    }
    if total != n {
        return Err(Error::AmbiguousSpectrum(format!(
            "clustered multiplicities sum to {total}, expected {n}"
        )));
    }
    Ok(out)
}

/// Fill the largest Jordan block size of each cluster from rank deficiencies
/// of (A - lambda I)^k, singular values below `tol * ||A||` treated as zero.
pub fn jordan_structure(m: &DMatrix<Complex64>, clusters: &mut [EigenCluster], tol: f64) {
    let n = m.nrows();
    let thr = tol * op_norm(m).max(1.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    for cl in clusters.iter_mut() {
        let shifted = m - &id * cl.value;
        let mut power = id.clone();
        let mut prev_rank = n;
        let target = n - cl.multiplicity;
        let mut largest = 0;
        for k in 1..=cl.multiplicity {
            power = &power * &shifted;
            let rk = rank_with_threshold(&power, thr);
            if prev_rank > rk {
                largest = k;
            }
            prev_rank = rk;
            if rk <= target {
                break;
            }
        }
        cl.block = largest.max(1);
    }
}

/// Clustered spectrum with Jordan block data.
pub fn spectrum_with_blocks(m: &DMatrix<Complex64>, tol: f64) -> Result<Vec<EigenCluster>> {
    let mut cl = spectrum(m, tol)?;
    jordan_structure(m, &mut cl, tol);
    Ok(cl)
}

/// Monic minimal polynomial built as prod (t - lambda_i)^{b_i} with b_i the
/// largest Jordan block of cluster i.
pub fn minimal_polynomial(m: &DMatrix<Complex64>, tol: f64) -> Result<RealPoly> {
    let clusters = spectrum_with_blocks(m, tol)?;
    let mut roots = Vec::new();
    for cl in &clusters {
        for _ in 0..cl.block {
            roots.push(cl.value);
        }
    }
    RealPoly::from_complex_roots(&roots)
}

/// Monic characteristic polynomial prod (t - lambda_i)^{m_i}; degree equals
/// the matrix size.
pub fn characteristic_polynomial(m: &DMatrix<Complex64>, tol: f64) -> Result<RealPoly> {
    let clusters = spectrum(m, tol)?;
    let mut roots = Vec::new();
    for cl in &clusters {
        for _ in 0..cl.multiplicity {
            roots.push(cl.value);
        }
    }
    RealPoly::from_complex_roots(&roots)
}

/// Evaluate a real polynomial at a complex matrix.
pub fn eval_at_matrix(p: &RealPoly, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for &c in p.coeffs().iter().rev() {
        acc = &acc * m + DMatrix::<Complex64>::identity(n, n) * Complex64::new(c, 0.0);
    }
    acc
}
