//! The pointwise Kahler curvature algebra: Ricci contraction, its adjoint,
//! the Bochner decomposition R = c*(S) + W, and the Bryant modified Ricci
//! operator.
//!
//! Tensor inner products are evaluated in a g-orthonormal frame built by
//! Cholesky; curvature tensors are paired as symmetric forms on 2-vectors
//! (a factor 1/4 relative to the plain component contraction), which is the
//! normalization that makes c* the exact adjoint of the Ricci contraction.

use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A pointwise (0,4) curvature tensor with the metric and complex structure
/// of its point attached. Component order: R[i][j][k][l] = g(R(e_i,e_j)e_k, e_l).
#[derive(Clone, Debug)]
pub struct Curv4 {
    pub n: usize,
    pub data: Vec<f64>,
    pub g: DMatrix<f64>,
    pub j: DMatrix<f64>,
}

impl Curv4 {
    pub fn zeros(n: usize, g: DMatrix<f64>, j: DMatrix<f64>) -> Self {
        Curv4 {
            n,
            data: vec![0.0; n * n * n * n],
            g,
            j,
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, jj: usize, k: usize, l: usize) -> usize {
        ((i * self.n + jj) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, jj: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, jj, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, jj: usize, k: usize, l: usize, v: f64) {
        let id = self.idx(i, jj, k, l);
        self.data[id] = v;
    }

    pub fn scale(&self, a: f64) -> Curv4 {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= a;
        }
        out
    }

    pub fn sub(&self, other: &Curv4) -> Curv4 {
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= w;
        }
        out
    }

    pub fn add(&self, other: &Curv4) -> Curv4 {
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    /// Apply to four vectors.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for jj in 0..n {
                if y[jj] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if z[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += self.get(i, jj, k, l) * x[i] * y[jj] * z[k] * w[l];
                    }
                }
            }
        }
        acc
    }

    /// Plain Frobenius norm of the raw components (normalization helper for
    /// residuals; see [`tensor_norm`] for the frame-invariant norm).
    pub fn component_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A J-invariant symmetric bilinear form with its point data attached.
#[derive(Clone, Debug)]
pub struct Sym11 {
    pub mat: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub j: DMatrix<f64>,
}

impl Sym11 {
    /// The associated endomorphism g^{-1} S.
    pub fn endo(&self) -> Result<DMatrix<f64>> {
        let ginv = self
            .g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("metric not invertible".into()))?;
        Ok(ginv * &self.mat)
    }

    pub fn j_invariance_residual(&self) -> f64 {
        (self.j.transpose() * &self.mat * &self.j - &self.mat).norm()
    }
}

/// Residuals of the Kahler curvature symmetries, relative to the component
/// norm of the tensor.
#[derive(Clone, Copy, Debug)]
pub struct KahlerResiduals {
    pub antisym_first: f64,
    pub antisym_second: f64,
    pub pair_exchange: f64,
    pub bianchi: f64,
    pub j_invariance: f64,
}

impl KahlerResiduals {
    pub fn max(&self) -> f64 {
        self.antisym_first
            .max(self.antisym_second)
            .max(self.pair_exchange)
            .max(self.bianchi)
            .max(self.j_invariance)
    }
}

pub fn kahler_residuals(r: &Curv4) -> KahlerResiduals {
    let n = r.n;
    // absolute floor keeps the residuals meaningful at vanishing curvature
    let scale = r.component_norm().max(1.0);
    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    let mut pe = 0.0f64;
    let mut bi = 0.0f64;
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(i, jj, k, l);
                    a1 = a1.max((v + r.get(jj, i, k, l)).abs());
                    a2 = a2.max((v + r.get(i, jj, l, k)).abs());
                    pe = pe.max((v - r.get(k, l, i, jj)).abs());
                    bi = bi.max((v + r.get(jj, k, i, l) + r.get(k, i, jj, l)).abs());
                }
            }
        }
    }
    // R(J., J., ., .) = R
    let mut ji = 0.0f64;
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        if r.j[(a, i)] == 0.0 {
                            continue;
                        }
                        for b in 0..n {
                            acc += r.j[(a, i)] * r.j[(b, jj)] * r.get(a, b, k, l);
                        }
                    }
                    ji = ji.max((acc - r.get(i, jj, k, l)).abs());
                }
            }
        }
    }
    let nf = (n * n) as f64;
    KahlerResiduals {
        antisym_first: a1 * nf / scale,
        antisym_second: a2 * nf / scale,
        pair_exchange: pe * nf / scale,
        bianchi: bi * nf / scale,
        j_invariance: ji * nf / scale,
    }
}

/// Residual of the annihilation of J-anti-invariant 2-forms, probed with
/// random anti-invariant forms. The form indices are raised with the
/// inverse metric: the invariant/anti-invariant split is only orthogonal
/// under the metric pairing.
pub fn anti_invariant_residual<R: Rng>(r: &Curv4, rng: &mut R, probes: usize) -> f64 {
    let n = r.n;
    let scale = r.component_norm().max(1.0);
    let ginv = match r.g.clone().try_inverse() {
        Some(g) => g,
        None => return f64::INFINITY,
    };
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let mut psi = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for jj in (i + 1)..n {
                let v: f64 = StandardNormal.sample(rng);
                psi[(i, jj)] = v;
                psi[(jj, i)] = -v;
            }
        }
        // anti-invariant part: (psi - J^T psi J)/2, then raise both indices
        let phi = (&psi - r.j.transpose() * &psi * &r.j) * 0.5;
        let phi_up = &ginv * &phi * &ginv;
        let pn = phi_up.norm();
        if pn < 1e-12 {
            continue;
        }
        let mut res = 0.0f64;
        for i in 0..n {
            for jj in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        acc += r.get(i, jj, k, l) * phi_up[(k, l)];
                    }
                }
                res = res.max(acc.abs());
            }
        }
        worst = worst.max(res / (scale * pn));
    }
    worst
}

/// The Ricci contraction c_K(R)(v, w) = trace R(v, ., w, .), taken with the
/// inverse metric over the middle slots.
pub fn ricci_contract(r: &Curv4) -> Result<Sym11> {
    let n = r.n;
    let ginv = r
        .g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("metric not invertible".into()))?;
    let mut s = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        for w in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += r.get(v, k, w, l) * ginv[(k, l)];
                }
            }
            s[(v, w)] = acc;
        }
    }
    Ok(Sym11 {
        mat: s,
        g: r.g.clone(),
        j: r.j.clone(),
    })
}

/// The adjoint of the Ricci contraction:
/// c*(S) = 1/2 [ (S ^ Id + (J S) ^ J)/2 + omega (x) S + beta (x) J ],
/// with beta(v, w) = g(S J v, w) and omega = g(J., .).
pub fn adjoint_ck(s: &Sym11) -> Result<Curv4> {
    let n = s.mat.nrows();
    let jres = s.j_invariance_residual();
    if jres > 1e-8 * s.mat.norm().max(1.0) {
        return Err(Error::NotInvariant(jres));
    }
    let endo = s.endo()?;
    let m1 = &s.mat;
    let m2 = (&s.j * &endo).transpose() * &s.g;
    let beta = (&endo * &s.j).transpose() * &s.g;
    let omega = s.j.transpose() * &s.g;
    let mut out = Curv4::zeros(n, s.g.clone(), s.j.clone());
    for v in 0..n {
        for w in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let wedge1 = m1[(v, a)] * s.g[(w, b)] - m1[(v, b)] * s.g[(w, a)]
                        - m1[(w, a)] * s.g[(v, b)]
                        + m1[(w, b)] * s.g[(v, a)];
                    let wedge2 = m2[(v, a)] * omega[(w, b)] - m2[(v, b)] * omega[(w, a)]
                        - m2[(w, a)] * omega[(v, b)]
                        + m2[(w, b)] * omega[(v, a)];
                    let tens = omega[(v, w)] * beta[(a, b)] + beta[(v, w)] * omega[(a, b)];
                    out.set(v, w, a, b, 0.25 * (wedge1 + wedge2) + 0.5 * tens);
                }
            }
        }
    }
    Ok(out)
}

/// g-orthonormal frame from the Cholesky factor: columns of (L^-1)^T.
pub fn cholesky_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky failed".into()))?;
    let l = chol.l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("Cholesky factor not invertible".into()))?;
    Ok(linv.transpose())
}

/// Transform the tensor components into the columns-of-f frame:
/// R_f[a,b,c,d] = R(f_a, f_b, f_c, f_d).
pub fn to_frame(r: &Curv4, f: &DMatrix<f64>) -> Vec<f64> {
    let n = r.n;
    // contract one slot at a time
    let mut cur = r.data.clone();
    for _slot in 0..4 {
        // cur indexed [x, rest]; produce [rest, a] = sum_x cur[x, rest] f[x][a]
        let mut next = vec![0.0; n * n * n * n];
        let stride = n * n * n;
        for x in 0..n {
            for rest in 0..stride {
                let v = cur[x * stride + rest];
                if v == 0.0 {
                    continue;
                }
                for a in 0..n {
                    next[rest * n + a] += v * f[(x, a)];
                }
            }
        }
        cur = next;
    }
    cur
}

/// Frobenius norm of the components in a g-orthonormal frame.
pub fn tensor_norm(r: &Curv4) -> Result<f64> {
    let f = cholesky_frame(&r.g)?;
    let fr = to_frame(r, &f);
    Ok(fr.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Inner product of curvature tensors as symmetric forms on 2-vectors
/// (1/4 of the plain frame contraction).
pub fn inner_k(r1: &Curv4, r2: &Curv4) -> Result<f64> {
    let f = cholesky_frame(&r1.g)?;
    let a = to_frame(r1, &f);
    let b = to_frame(r2, &f);
    Ok(0.25 * a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>())
}

/// Inner product of symmetric forms in the g-orthonormal frame.
pub fn inner_sym(s1: &Sym11, s2: &Sym11) -> Result<f64> {
    let f = cholesky_frame(&s1.g)?;
    let a = f.transpose() * &s1.mat * &f;
    let b = f.transpose() * &s2.mat * &f;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x * y).sum())
}

/// Basis of the J-invariant symmetric forms for the standard structure
/// (identity metric, block J); dimension (n/2)^2.
fn sym11_basis_standard(n: usize) -> Vec<DMatrix<f64>> {
    let (_, j0) = standard_structure(n);
    let target = (n / 2) * (n / 2);
    let mut basis: Vec<DMatrix<f64>> = Vec::with_capacity(target);
    'outer: for i in 0..n {
        for k in i..n {
            let mut s = DMatrix::<f64>::zeros(n, n);
            s[(i, k)] += 1.0;
            s[(k, i)] += 1.0;
            // project onto the J-invariant subspace
            let mut p = (&s + j0.transpose() * &s * &j0) * 0.5;
            // Gram-Schmidt against the accumulated basis
            for b in &basis {
                let coef = p.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>();
                p -= b * coef;
            }
            let nrm = p.norm();
            if nrm > 1e-8 {
                basis.push(p / nrm);
                if basis.len() == target {
                    break 'outer;
                }
            }
        }
    }
    basis
}

/// Basis of the J-invariant symmetric forms at (g, J), pulled back from a
/// g-orthonormal J-adapted frame; this keeps the decomposition system
/// O(1)-conditioned even for ill-conditioned metrics.
pub fn sym11_basis(g: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n = g.nrows();
    let f = unitary_frame(g, j)?;
    let c = f
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("frame not invertible".into()))?;
    let out = sym11_basis_standard(n)
        .into_iter()
        .map(|s| c.transpose() * s * &c)
        .collect();
    Ok(out)
}

/// Decompose a Kahler curvature tensor into R = c*(S) + W with S solving
/// the linear system (c_K o c*_K)(S) = c_K(R) on the J-invariant symmetric
/// forms; W is the Ricci-traceless (Bochner) part.
pub fn decompose(r: &Curv4) -> Result<(Sym11, Curv4)> {
    let basis = sym11_basis(&r.g, &r.j)?;
    let dim = basis.len();
    let ck_r = ricci_contract(r)?;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = nalgebra::DVector::<f64>::zeros(dim);
    let mut images: Vec<Sym11> = Vec::with_capacity(dim);
    for b in &basis {
        let s = Sym11 {
            mat: b.clone(),
            g: r.g.clone(),
            j: r.j.clone(),
        };
        let cstar = adjoint_ck(&s)?;
        images.push(ricci_contract(&cstar)?);
    }
    for k in 0..dim {
        rhs[k] = basis[k]
            .iter()
            .zip(ck_r.mat.iter())
            .map(|(x, y)| x * y)
            .sum();
        for l in 0..dim {
            m[(k, l)] = basis[k]
                .iter()
                .zip(images[l].mat.iter())
                .map(|(x, y)| x * y)
                .sum();
        }
    }
    let lu = m.lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("c_K o c*_K is singular".into()))?;
    let mut smat = DMatrix::<f64>::zeros(r.n, r.n);
    for (k, b) in basis.iter().enumerate() {
        smat += b * x[k];
    }
    // scrub the roundoff outside the J-invariant subspace
    smat = (&smat + r.j.transpose() * &smat * &r.j) * 0.5;
    let s = Sym11 {
        mat: smat,
        g: r.g.clone(),
        j: r.j.clone(),
    };
    let w = r.sub(&adjoint_ck(&s)?);
    Ok((s, w))
}

/// The Bryant modified Ricci form Theta = (S - trace_R(S)/(2(dimC+2)) g)/4,
/// with S the modified Ricci form of R and dimC the complex dimension.
pub fn theta_op(r: &Curv4, dim_c: usize) -> Result<Sym11> {
    let (s, _w) = decompose(r)?;
    theta_from_s(&s, dim_c)
}

pub fn theta_from_s(s: &Sym11, dim_c: usize) -> Result<Sym11> {
    let endo = s.endo()?;
    let tr = endo.trace();
    let mat = (&s.mat - &s.g * (tr / (2.0 * (dim_c as f64 + 2.0)))) * 0.25;
    Ok(Sym11 {
        mat,
        g: s.g.clone(),
        j: s.j.clone(),
    })
}

/// Eigenvalues of Theta as a complex-linear operator: the real spectrum of
/// the g-raised endomorphism comes in pairs; one representative per pair.
///
/// The endomorphism is self-adjoint for g, so its spectrum equals that of
/// the symmetric matrix L^-1 Theta L^-T with g = L L^T; the symmetric
/// eigensolver is unconditionally convergent (the general Schur iteration
/// can stall on exactly repeated eigenvalues).
pub fn theta_eigenvalues(theta: &Sym11, tol: f64) -> Result<Vec<f64>> {
    let chol = theta
        .g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky failed".into()))?;
    let l = chol.l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("Cholesky factor not invertible".into()))?;
    let sym = &linv * &theta.mat * linv.transpose();
    let scale = sym.norm().max(1.0);
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(vals.len() / 2);
    let mut i = 0;
    while i + 1 < vals.len() {
        if (vals[i + 1] - vals[i]).abs() > tol * scale {
            return Err(Error::AmbiguousSpectrum(format!(
                "real eigenvalues of the complex-linear Theta do not pair: {} vs {}",
                vals[i],
                vals[i + 1]
            )));
        }
        out.push(0.5 * (vals[i] + vals[i + 1]));
        i += 2;
    }
    Ok(out)
}

/// g-orthonormal frame adapted to J: columns (f_1, J f_1, f_2, J f_2, ...).
pub fn unitary_frame(g: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    let gnorm = |v: &nalgebra::DVector<f64>| (v.transpose() * g * v)[(0, 0)].sqrt();
    let gdot = |a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>| (a.transpose() * g * b)[(0, 0)];
    let mut seed = 0usize;
    while cols.len() < n {
        if seed >= n {
            return Err(Error::SingularSystem("unitary frame construction failed".into()));
        }
        let mut v = nalgebra::DVector::<f64>::zeros(n);
        v[seed] = 1.0;
        seed += 1;
        for c in &cols {
            let coef = gdot(&v, c);
            v -= c * coef;
        }
        let nrm = gnorm(&v);
        if nrm < 1e-8 {
            continue;
        }
        v /= nrm;
        let jv = j * &v;
        cols.push(v);
        cols.push(jv);
    }
    let mut f = DMatrix::<f64>::zeros(n, n);
    for (a, c) in cols.iter().enumerate() {
        f.set_column(a, c);
    }
    Ok(f)
}

/// Random element of the Kahler curvature space K(V) at (g, J), built from
/// a hermitian-symmetric coefficient tensor in a unitary frame. Independent
/// of the adjoint formula; this is the oracle generator for adjointness and
/// decomposition tests.
pub fn random_kahler<R: Rng>(g: &DMatrix<f64>, j: &DMatrix<f64>, rng: &mut R) -> Result<Curv4> {
    let n = g.nrows();
    let mc = n / 2;
    // K[a][b][c][d], symmetric under a<->c and b<->d, hermitian under
    // conj + (ab)(cd) swap
    let mut kt = vec![Complex64::new(0.0, 0.0); mc * mc * mc * mc];
    let id = |a: usize, b: usize, c: usize, d: usize| ((a * mc + b) * mc + c) * mc + d;
    for a in 0..mc {
        for b in 0..mc {
            for c in 0..mc {
                for d in 0..mc {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    kt[id(a, b, c, d)] = Complex64::new(re, im);
                }
            }
        }
    }
    let sym = |kt: &[Complex64], a: usize, b: usize, c: usize, d: usize| {
        (kt[id(a, b, c, d)] + kt[id(c, b, a, d)] + kt[id(a, d, c, b)] + kt[id(c, d, a, b)]) * 0.25
    };
    let mut k2 = vec![Complex64::new(0.0, 0.0); kt.len()];
    for a in 0..mc {
        for b in 0..mc {
            for c in 0..mc {
                for d in 0..mc {
                    k2[id(a, b, c, d)] = sym(&kt, a, b, c, d);
                }
            }
        }
    }
    let mut k3 = vec![Complex64::new(0.0, 0.0); kt.len()];
    for a in 0..mc {
        for b in 0..mc {
            for c in 0..mc {
                for d in 0..mc {
                    k3[id(a, b, c, d)] =
                        (k2[id(a, b, c, d)] + k2[id(b, a, d, c)].conj()) * 0.5;
                }
            }
        }
    }
    // frame components via the mixed pairing M(X,Y)_{ab} = chi_a(X) conj(chi_b(Y))
    // - chi_a(Y) conj(chi_b(X)); in the unitary frame chi_a(f_{2k}) = delta_{ak},
    // chi_a(f_{2k+1}) = i delta_{ak}
    let chi = |i: usize| -> (usize, Complex64) {
        if i % 2 == 0 {
            (i / 2, Complex64::new(1.0, 0.0))
        } else {
            (i / 2, Complex64::new(0.0, 1.0))
        }
    };
    let mut rf = vec![0.0f64; n * n * n * n];
    let mixed = |i: usize, jj: usize| -> Vec<Complex64> {
        let (ai, ci) = chi(i);
        let (aj, cj) = chi(jj);
        let mut m = vec![Complex64::new(0.0, 0.0); mc * mc];
        m[ai * mc + aj] += ci * cj.conj();
        m[aj * mc + ai] -= cj * ci.conj();
        m
    };
    for i in 0..n {
        for jj in 0..n {
            let mij = mixed(i, jj);
            for k in 0..n {
                for l in 0..n {
                    let mkl = mixed(k, l);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..mc {
                        for b in 0..mc {
                            let x = mij[a * mc + b];
                            if x.norm_sqr() == 0.0 {
                                continue;
                            }
                            for c in 0..mc {
                                for d in 0..mc {
                                    let y = mkl[c * mc + d];
                                    if y.norm_sqr() == 0.0 {
                                        continue;
                                    }
                                    acc += k3[id(a, b, c, d)] * x * y;
                                }
                            }
                        }
                    }
                    rf[((i * n + jj) * n + k) * n + l] = acc.re;
                }
            }
        }
    }
    // push from the frame to coordinates: E_i = sum_a C[a][i] f_a, C = F^{-1}
    let f = unitary_frame(g, j)?;
    let c = f
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("frame not invertible".into()))?;
    let mut out = Curv4::zeros(n, g.clone(), j.clone());
    let mut cur = rf;
    for _slot in 0..4 {
        let stride = n * n * n;
        let mut next = vec![0.0; n * n * n * n];
        for x in 0..n {
            for rest in 0..stride {
                let v = cur[x * stride + rest];
                if v == 0.0 {
                    continue;
                }
                for i in 0..n {
                    next[rest * n + i] += v * c[(x, i)];
                }
            }
        }
        cur = next;
    }
    out.data = cur;
    Ok(out)
}

/// Random J-invariant symmetric form at (g, J).
pub fn random_sym11<R: Rng>(g: &DMatrix<f64>, j: &DMatrix<f64>, rng: &mut R) -> Sym11 {
    let n = g.nrows();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for k in i..n {
            let v: f64 = StandardNormal.sample(rng);
            s[(i, k)] = v;
            s[(k, i)] = v;
        }
    }
    let p = (&s + j.transpose() * &s * j) * 0.5;
    Sym11 {
        mat: p,
        g: g.clone(),
        j: j.clone(),
    }
}

/// Standard flat structure: g = Id, J the block rotation on coordinate pairs.
pub fn standard_structure(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = DMatrix::<f64>::identity(n, n);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n / 2 {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    (g, j)
}

/// Random J-compatible positive definite metric for frame-independence
/// tests: g = Q^T Q averaged to be J-invariant.
pub fn random_compatible_metric<R: Rng>(n: usize, j: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let v: f64 = StandardNormal.sample(rng);
            q[(i, k)] = 0.3 * v;
        }
        q[(i, i)] += 1.0;
    }
    let g0 = q.transpose() * &q;
    (&g0 + j.transpose() * &g0 * j) * 0.5
}
