//! Forward-mode automatic differentiation: second-order multivariate jets
//! over chart coordinates, and first/second derivatives in a single radial
//! variable.
//!
//! A [`Jet2`] carries a value, a gradient and a symmetric Hessian through
//! arithmetic and the elementary transcendental functions, with the exact
//! chain rule at second order. Jets are lane-blind: every jet owns `MAX_VARS`
//! derivative lanes and constants simply have zero in all of them, so no
//! dimension bookkeeping is needed in compound expressions. Seeding decides
//! which lanes are active.

use nalgebra::{DMatrix, DVector};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Maximum number of chart coordinates a jet can differentiate against.
/// The chart has real dimension 2(mdim+1); this bound supports mdim <= 5.
pub const MAX_VARS: usize = 12;

/// Scalar abstraction shared by `f64`, [`Jet1r`] and [`Jet2`].
///
/// Geometry code is written once against this trait; instantiating with
/// `f64` gives plain values, with a jet type exact derivatives.
pub trait Smooth:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn tanh(self) -> Self;
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    fn scale(self, c: f64) -> Self {
        self * Self::cst(c)
    }
    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Smooth for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
}

/// Second-order multivariate jet: value, gradient and symmetric Hessian.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; MAX_VARS],
    pub h: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 {
            v,
            g: [0.0; MAX_VARS],
            h: [[0.0; MAX_VARS]; MAX_VARS],
        }
    }

    /// Seed the i-th chart variable.
    pub fn var(v: f64, i: usize) -> Self {
        let mut j = Jet2::constant(v);
        j.g[i] = 1.0;
        j
    }

    pub fn grad_vec(&self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |i, _| self.g[i])
    }

    pub fn hess_mat(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| self.h[i][j])
    }

    /// Chain rule for a unary map with derivatives f', f'' at self.v.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Jet2::constant(f0);
        for i in 0..MAX_VARS {
            out.g[i] = f1 * self.g[i];
        }
        for i in 0..MAX_VARS {
            for j in 0..MAX_VARS {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        let mut out = self;
        out.v += rhs.v;
        for i in 0..MAX_VARS {
            out.g[i] += rhs.g[i];
        }
        for i in 0..MAX_VARS {
            for j in 0..MAX_VARS {
                out.h[i][j] += rhs.h[i][j];
            }
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        let mut out = self;
        out.v -= rhs.v;
        for i in 0..MAX_VARS {
            out.g[i] -= rhs.g[i];
        }
        for i in 0..MAX_VARS {
            for j in 0..MAX_VARS {
                out.h[i][j] -= rhs.h[i][j];
            }
        }
        out
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.v * rhs.v);
        for i in 0..MAX_VARS {
            out.g[i] = self.g[i] * rhs.v + rhs.g[i] * self.v;
        }
        for i in 0..MAX_VARS {
            for j in 0..MAX_VARS {
                out.h[i][j] = self.h[i][j] * rhs.v
                    + rhs.h[i][j] * self.v
                    + self.g[i] * rhs.g[j]
                    + self.g[j] * rhs.g[i];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        let mut out = self;
        out.v = -out.v;
        for i in 0..MAX_VARS {
            out.g[i] = -out.g[i];
        }
        for i in 0..MAX_VARS {
            for j in 0..MAX_VARS {
                out.h[i][j] = -out.h[i][j];
            }
        }
        out
    }
}

impl Smooth for Jet2 {
    fn cst(x: f64) -> Self {
        Jet2::constant(x)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        let d = 1.0 + t * t;
        self.chain(t, d, 2.0 * t * d)
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }
    fn recip(self) -> Self {
        let iv = 1.0 / self.v;
        self.chain(iv, -iv * iv, 2.0 * iv * iv * iv)
    }
}

/// Jet in the single radial variable r: value, d/dr, d^2/dr^2.
#[derive(Clone, Copy, Debug)]
pub struct Jet1r {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet1r {
    pub fn constant(v: f64) -> Self {
        Jet1r { v, d1: 0.0, d2: 0.0 }
    }

    /// Seed the radial variable itself.
    pub fn var(v: f64) -> Self {
        Jet1r { v, d1: 1.0, d2: 0.0 }
    }

    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet1r {
            v: f0,
            d1: f1 * self.d1,
            d2: f1 * self.d2 + f2 * self.d1 * self.d1,
        }
    }
}

impl Add for Jet1r {
    type Output = Jet1r;
    fn add(self, rhs: Jet1r) -> Jet1r {
        Jet1r {
            v: self.v + rhs.v,
            d1: self.d1 + rhs.d1,
            d2: self.d2 + rhs.d2,
        }
    }
}

impl Sub for Jet1r {
    type Output = Jet1r;
    fn sub(self, rhs: Jet1r) -> Jet1r {
        Jet1r {
            v: self.v - rhs.v,
            d1: self.d1 - rhs.d1,
            d2: self.d2 - rhs.d2,
        }
    }
}

impl Mul for Jet1r {
    type Output = Jet1r;
    fn mul(self, rhs: Jet1r) -> Jet1r {
        Jet1r {
            v: self.v * rhs.v,
            d1: self.d1 * rhs.v + rhs.d1 * self.v,
            d2: self.d2 * rhs.v + rhs.d2 * self.v + 2.0 * self.d1 * rhs.d1,
        }
    }
}

impl Div for Jet1r {
    type Output = Jet1r;
    fn div(self, rhs: Jet1r) -> Jet1r {
        self * rhs.recip()
    }
}

impl Neg for Jet1r {
    type Output = Jet1r;
    fn neg(self) -> Jet1r {
        Jet1r {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl Smooth for Jet1r {
    fn cst(x: f64) -> Self {
        Jet1r::constant(x)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        let d = 1.0 + t * t;
        self.chain(t, d, 2.0 * t * d)
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }
    fn recip(self) -> Self {
        let iv = 1.0 / self.v;
        self.chain(iv, -iv * iv, 2.0 * iv * iv * iv)
    }
}

/// Complex number over a smooth scalar, carried as two real components.
#[derive(Clone, Copy, Debug)]
pub struct Cx<S: Smooth> {
    pub re: S,
    pub im: S,
}

impl<S: Smooth> Cx<S> {
    pub fn new(re: S, im: S) -> Self {
        Cx { re, im }
    }

    pub fn real(re: S) -> Self {
        Cx { re, im: S::cst(0.0) }
    }

    pub fn zero() -> Self {
        Cx {
            re: S::cst(0.0),
            im: S::cst(0.0),
        }
    }

    pub fn from_c64(c: num_complex::Complex64) -> Self {
        Cx {
            re: S::cst(c.re),
            im: S::cst(c.im),
        }
    }

    pub fn conj(self) -> Self {
        Cx {
            re: self.re,
            im: -self.im,
        }
    }

    /// Multiplication by i.
    pub fn mul_i(self) -> Self {
        Cx {
            re: -self.im,
            im: self.re,
        }
    }

    pub fn norm_sqr(self) -> S {
        self.re * self.re + self.im * self.im
    }

    pub fn scale_s(self, s: S) -> Self {
        Cx {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn scale_c(self, c: num_complex::Complex64) -> Self {
        Cx {
            re: self.re.scale(c.re) - self.im.scale(c.im),
            im: self.re.scale(c.im) + self.im.scale(c.re),
        }
    }

    pub fn value(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.value(), self.im.value())
    }
}

impl<S: Smooth> Add for Cx<S> {
    type Output = Cx<S>;
    fn add(self, rhs: Cx<S>) -> Cx<S> {
        Cx {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<S: Smooth> Sub for Cx<S> {
    type Output = Cx<S>;
    fn sub(self, rhs: Cx<S>) -> Cx<S> {
        Cx {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl<S: Smooth> Mul for Cx<S> {
    type Output = Cx<S>;
    fn mul(self, rhs: Cx<S>) -> Cx<S> {
        Cx {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl<S: Smooth> Neg for Cx<S> {
    type Output = Cx<S>;
    fn neg(self) -> Cx<S> {
        Cx {
            re: -self.re,
            im: -self.im,
        }
    }
}

/// Value, gradient and Hessian of a scalar field at a point, by seeding
/// every coordinate as a jet variable. Exact to second order.
pub fn hessian<F>(f: F, point: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>)
where
    F: Fn(&[Jet2]) -> Jet2,
{
    let n = point.len();
    assert!(n <= MAX_VARS, "hessian: dimension exceeds MAX_VARS");
    let vars: Vec<Jet2> = point.iter().enumerate().map(|(i, &x)| Jet2::var(x, i)).collect();
    let out = f(&vars);
    (out.v, out.grad_vec(n), out.hess_mat(n))
}

/// First and second derivative in a single variable.
pub fn deriv_r<F>(f: F, r0: f64) -> Jet1r
where
    F: Fn(Jet1r) -> Jet1r,
{
    f(Jet1r::var(r0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_hessian<F>(f: &F, x: &[f64], h: f64) -> (DVector<f64>, DMatrix<f64>)
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = x.len();
        let mut xs = x.to_vec();
        let grad = DVector::from_fn(n, |i, _| {
            xs[i] = x[i] + h;
            let fp = f(&xs);
            xs[i] = x[i] - h;
            let fm = f(&xs);
            xs[i] = x[i];
            (fp - fm) / (2.0 * h)
        });
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                xs[i] += h;
                xs[j] += h;
                let fpp = f(&xs);
                xs[j] -= 2.0 * h;
                let fpm = f(&xs);
                xs[i] -= 2.0 * h;
                let fmm = f(&xs);
                xs[j] += 2.0 * h;
                let fmp = f(&xs);
                xs[i] = x[i];
                xs[j] = x[j];
                hess[(i, j)] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            }
        }
        (grad, hess)
    }

    #[test]
    fn square_at_three() {
        let (v, g, h) = hessian(|x| x[0] * x[0], &[3.0]);
        assert_eq!(v, 9.0);
        assert_eq!(g[0], 6.0);
        assert_eq!(h[(0, 0)], 2.0);
    }

    #[test]
    fn product_xy() {
        let (v, g, h) = hessian(|x| x[0] * x[1], &[1.0, 2.0]);
        assert_eq!(v, 2.0);
        assert_eq!((g[0], g[1]), (2.0, 1.0));
        assert_eq!((h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]), (0.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn exp_tan_vs_finite_differences() {
        let f_jet = |x: &[Jet2]| x[0].exp() * x[1].tan();
        let f_val = |x: &[f64]| x[0].exp() * x[1].tan();
        let p = [0.3, 0.2];
        let (_, g, h) = hessian(f_jet, &p);
        let (gfd, hfd) = fd_hessian(&f_val, &p, 1e-4);
        for i in 0..2 {
            assert!((g[i] - gfd[i]).abs() / gfd[i].abs().max(1.0) < 1e-6);
            for j in 0..2 {
                assert!((h[(i, j)] - hfd[(i, j)]).abs() / hfd[(i, j)].abs().max(1.0) < 1e-6);
            }
        }
    }

    #[test]
    fn radial_cubic() {
        let j = deriv_r(|r| r * r * r, 2.0);
        assert_eq!((j.v, j.d1, j.d2), (8.0, 12.0, 12.0));
    }

    #[test]
    fn radial_mu_flat_branch() {
        // mu(t) = -2/t at t = 1
        let j = deriv_r(|t| Jet1r::cst(-2.0) / t, 1.0);
        assert!((j.v + 2.0).abs() < 1e-15);
        assert!((j.d1 - 2.0).abs() < 1e-15);
        assert!((j.d2 + 4.0).abs() < 1e-14);
    }

    #[test]
    fn radial_tan_vs_finite_differences() {
        let f = |r: f64| (0.7 * r).tan() + r.sqrt();
        let j = deriv_r(|r| (r.scale(0.7)).tan() + r.sqrt(), 1.3);
        let h = 1e-5;
        let d1 = (f(1.3 + h) - f(1.3 - h)) / (2.0 * h);
        let d2 = (f(1.3 + h) - 2.0 * f(1.3) + f(1.3 - h)) / (h * h);
        assert!((j.d1 - d1).abs() < 1e-6);
        assert!((j.d2 - d2).abs() < 1e-4);
    }

    #[test]
    fn linearity_exact() {
        let p = [0.4, 1.7];
        let f = |x: &[Jet2]| x[0].sin() * x[1].exp();
        let g = |x: &[Jet2]| (x[0] * x[1]).cos();
        let combo = |x: &[Jet2]| f(x).scale(2.5) + g(x).scale(-1.25);
        let (va, ga, ha) = hessian(f, &p);
        let (vb, gb, hb) = hessian(g, &p);
        let (vc, gc, hc) = hessian(combo, &p);
        assert_eq!(vc, 2.5 * va - 1.25 * vb);
        for i in 0..2 {
            assert_eq!(gc[i], 2.5 * ga[i] - 1.25 * gb[i]);
            for j in 0..2 {
                assert_eq!(hc[(i, j)], 2.5 * ha[(i, j)] - 1.25 * hb[(i, j)]);
            }
        }
    }

    #[test]
    fn composition_chain_rule_exact() {
        // jet of f(g(x)) where g(x) = x^2 + 1 and f(y) = ln(y), against the
        // closed-form derivatives of ln(x^2+1).
        let p = [0.8];
        let (_, g1, h1) = hessian(|x| (x[0] * x[0] + Jet2::cst(1.0)).ln(), &p);
        let x = p[0];
        let d1 = 2.0 * x / (x * x + 1.0);
        let d2 = (2.0 * (x * x + 1.0) - 2.0 * x * 2.0 * x) / (x * x + 1.0_f64).powi(2);
        assert!((g1[0] - d1).abs() < 1e-15);
        assert!((h1[(0, 0)] - d2).abs() < 1e-15);
    }

    #[test]
    fn complex_pair_arithmetic() {
        use num_complex::Complex64;
        let a = Cx::<f64>::from_c64(Complex64::new(1.5, -0.5));
        let b = Cx::<f64>::from_c64(Complex64::new(-0.25, 2.0));
        let prod = (a * b).value();
        let expect = Complex64::new(1.5, -0.5) * Complex64::new(-0.25, 2.0);
        assert!((prod - expect).norm() < 1e-15);
        assert!((a.mul_i().value() - Complex64::new(0.5, 1.5)).norm() < 1e-15);
    }
}
