//! Symmetric-cone kernels for the interior-point iteration: Nesterov–Todd scaling,
//! Jordan products, and maximal step lengths.
//!
//! Every routine works on the slice of the slack/dual vector owned by one block.
//! Vectors in "λ-space" are expressed in the scaled coordinates where `W z = W⁻ᵀ s = λ`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::conic::{smat, svec};

#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    Nonneg { w: Vec<f64> },
    Soc { eta: f64, wbar: Vec<f64> },
    /// `r` maps λ-space to the original coordinates: `W(Z) = rᵀ Z r`.
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

#[derive(Debug, Clone)]
pub(crate) struct ConeBlock {
    pub kind: Kind,
    pub offset: usize,
    pub dim: usize,
    pub scaling: Scaling,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Nonneg,
    Soc,
    Psd(usize),
}

/// Raised when an iterate leaves the cone interior.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NotInterior;

fn soc_det_sqrt(x: &[f64]) -> Option<f64> {
    let nb = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let d = (x[0] - nb) * (x[0] + nb);
    (x[0] > 0.0 && d > 0.0).then(|| d.sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_mat(m: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(m, m, &smat(m, v))
}

fn from_mat(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    // nalgebra is column-major; for symmetric input transposition is harmless
    let sym = (m + m.transpose()) * 0.5;
    svec(n, sym.as_slice())
}

impl ConeBlock {
    pub fn with_dim(kind: Kind, offset: usize, dim: usize) -> Self {
        let scaling = match kind {
            Kind::Nonneg => Scaling::Nonneg { w: vec![1.0; dim] },
            Kind::Soc => {
                let mut wbar = vec![0.0; dim];
                wbar[0] = 1.0;
                Scaling::Soc { eta: 1.0, wbar }
            }
            Kind::Psd(m) => Scaling::Psd { r: DMatrix::identity(m, m), rinv: DMatrix::identity(m, m) },
        };
        let mut lambda = vec![0.0; dim];
        add_identity(kind, &mut lambda, 1.0);
        Self { kind, offset, dim, scaling, lambda }
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            Kind::Nonneg => self.dim,
            Kind::Soc => 1,
            Kind::Psd(m) => m,
        }
    }

    /// Recomputes the NT scaling point from interior `s`, `z` (block slices).
    pub fn update_scaling(&mut self, s: &[f64], z: &[f64]) -> Result<(), NotInterior> {
        match self.kind {
            Kind::Nonneg => {
                let mut w = Vec::with_capacity(self.dim);
                for i in 0..self.dim {
                    if !(s[i] > 0.0 && z[i] > 0.0) {
                        return Err(NotInterior);
                    }
                    w.push((s[i] / z[i]).sqrt());
                    self.lambda[i] = (s[i] * z[i]).sqrt();
                }
                self.scaling = Scaling::Nonneg { w };
            }
            Kind::Soc => {
                let sn = soc_det_sqrt(s).ok_or(NotInterior)?;
                let zn = soc_det_sqrt(z).ok_or(NotInterior)?;
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                let mut wbar = Vec::with_capacity(self.dim);
                wbar.push((sb[0] + zb[0]) / (2.0 * gamma));
                for i in 1..self.dim {
                    wbar.push((sb[i] - zb[i]) / (2.0 * gamma));
                }
                let eta = (sn / zn).sqrt();
                self.scaling = Scaling::Soc { eta, wbar };
                let mut lam = vec![0.0; self.dim];
                self.apply_w(z, &mut lam);
                self.lambda = lam;
            }
            Kind::Psd(m) => {
                let sm = to_mat(m, s);
                let zm = to_mat(m, z);
                let ls = sm.cholesky().ok_or(NotInterior)?.l();
                let lz = zm.cholesky().ok_or(NotInterior)?.l();
                let prod = lz.transpose() * &ls;
                let svd = prod.svd(true, true);
                let u = svd.u.ok_or(NotInterior)?;
                let vt = svd.v_t.ok_or(NotInterior)?;
                let sig = svd.singular_values;
                if sig.iter().any(|&x| !(x > 0.0)) {
                    return Err(NotInterior);
                }
                let isq = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
                let r = &ls * vt.transpose() * &isq;
                let rinv = &isq * u.transpose() * lz.transpose();
                let mut lam = vec![0.0; self.dim];
                let mut diag = DMatrix::zeros(m, m);
                for i in 0..m {
                    diag[(i, i)] = sig[i];
                }
                lam.copy_from_slice(&from_mat(&diag));
                self.lambda = lam;
                self.scaling = Scaling::Psd { r, rinv };
            }
        }
        Ok(())
    }

    /// Eigenvalues of the (diagonal) PSD scaling point.
    fn psd_lambda_diag(&self, m: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(m);
        let mut k = 0;
        for c in 0..m {
            out.push(self.lambda[k]);
            k += m - c;
        }
        out
    }

    pub fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        match (&self.scaling, self.kind) {
            (Scaling::Nonneg { w }, _) => {
                for i in 0..self.dim {
                    out[i] = w[i] * v[i];
                }
            }
            (Scaling::Soc { eta, wbar }, _) => soc_wbar(*eta, wbar, v, out, false),
            (Scaling::Psd { r, .. }, Kind::Psd(m)) => {
                let x = to_mat(m, v);
                out.copy_from_slice(&from_mat(&(r.transpose() * x * r)));
            }
            _ => unreachable!(),
        }
    }

    /// `Wᵀ v`; every scaling used here is symmetric except the PSD congruence.
    pub fn apply_wt(&self, v: &[f64], out: &mut [f64]) {
        match (&self.scaling, self.kind) {
            (Scaling::Psd { r, .. }, Kind::Psd(m)) => {
                let x = to_mat(m, v);
                out.copy_from_slice(&from_mat(&(r * x * r.transpose())));
            }
            _ => self.apply_w(v, out),
        }
    }

    pub fn apply_winv(&self, v: &[f64], out: &mut [f64]) {
        match (&self.scaling, self.kind) {
            (Scaling::Nonneg { w }, _) => {
                for i in 0..self.dim {
                    out[i] = v[i] / w[i];
                }
            }
            (Scaling::Soc { eta, wbar }, _) => soc_wbar(1.0 / eta, wbar, v, out, true),
            (Scaling::Psd { rinv, .. }, Kind::Psd(m)) => {
                let x = to_mat(m, v);
                out.copy_from_slice(&from_mat(&(rinv.transpose() * x * rinv)));
            }
            _ => unreachable!(),
        }
    }

    pub fn apply_wtinv(&self, v: &[f64], out: &mut [f64]) {
        match (&self.scaling, self.kind) {
            (Scaling::Psd { rinv, .. }, Kind::Psd(m)) => {
                let x = to_mat(m, v);
                out.copy_from_slice(&from_mat(&(rinv * x * rinv.transpose())));
            }
            _ => self.apply_winv(v, out),
        }
    }

    /// Dense (row-major, `dim × dim`) matrix of `(WᵀW)⁻¹`, or its diagonal for the orthant.
    pub fn hinv(&self, out: &mut Vec<f64>) {
        out.clear();
        match (&self.scaling, self.kind) {
            (Scaling::Nonneg { w }, _) => out.extend(w.iter().map(|x| 1.0 / (x * x))),
            (Scaling::Soc { eta, wbar }, _) => {
                let k = self.dim;
                let wm = soc_wbar_dense(wbar);
                let sq = &wm * &wm;
                let s = 1.0 / (eta * eta);
                out.resize(k * k, 0.0);
                for i in 0..k {
                    for j in 0..k {
                        let sign = if (i == 0) == (j == 0) { 1.0 } else { -1.0 };
                        out[i * k + j] = s * sign * sq[(i, j)];
                    }
                }
            }
            (Scaling::Psd { rinv, .. }, Kind::Psd(m)) => {
                let q = rinv.transpose() * rinv;
                psd_kron(m, &q, self.dim, out);
            }
            _ => unreachable!(),
        }
    }

    /// Jordan product `u ∘ v`.
    pub fn circ(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match self.kind {
            Kind::Nonneg => {
                for i in 0..self.dim {
                    out[i] = u[i] * v[i];
                }
            }
            Kind::Soc => {
                out[0] = dot(u, v);
                for i in 1..self.dim {
                    out[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
            Kind::Psd(m) => {
                let a = to_mat(m, u);
                let b = to_mat(m, v);
                let p = &a * &b;
                let sym = (&p + p.transpose()) * 0.5;
                out.copy_from_slice(&svec(m, sym.as_slice()));
            }
        }
    }

    /// `λ \ v`, the inverse of `x ↦ λ ∘ x` at the current scaling point.
    pub fn lambda_solve(&self, v: &[f64], out: &mut [f64]) {
        let lam = &self.lambda;
        match self.kind {
            Kind::Nonneg => {
                for i in 0..self.dim {
                    out[i] = v[i] / lam[i];
                }
            }
            Kind::Soc => {
                let det = soc_det_sqrt(lam).map(|d| d * d).unwrap_or(f64::MIN_POSITIVE);
                let x0 = (lam[0] * v[0] - dot(&lam[1..], &v[1..])) / det;
                out[0] = x0;
                for i in 1..self.dim {
                    out[i] = (v[i] - x0 * lam[i]) / lam[0];
                }
            }
            Kind::Psd(m) => {
                let d = self.psd_lambda_diag(m);
                let mut k = 0;
                for c in 0..m {
                    for r in c..m {
                        out[k] = v[k] * 2.0 / (d[r] + d[c]);
                        k += 1;
                    }
                }
            }
        }
    }

    /// `λ ∘ λ`.
    pub fn lambda_sq(&self, out: &mut [f64]) {
        let lam = self.lambda.clone();
        self.circ(&lam, &lam, out);
    }

    /// Largest `α` with `λ + α·δ` in the cone (infinite when unbounded).
    pub fn max_step_scaled(&self, delta: &[f64]) -> f64 {
        let lam = &self.lambda;
        match self.kind {
            Kind::Nonneg => orthant_step(lam, delta),
            Kind::Soc => soc_step(lam, delta),
            Kind::Psd(m) => {
                let d = self.psd_lambda_diag(m);
                let dm = to_mat(m, delta);
                let scaled = DMatrix::from_fn(m, m, |i, j| dm[(i, j)] / (d[i] * d[j]).sqrt());
                let emin = SymmetricEigen::new(scaled).eigenvalues.min();
                if emin < 0.0 {
                    -1.0 / emin
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

pub(crate) fn orthant_step(x: &[f64], dx: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for (xi, di) in x.iter().zip(dx) {
        if *di < 0.0 {
            a = a.min(-xi / di);
        }
    }
    a
}

/// Largest `α` with `x + α·dx ∈ SOC` for `x` in the interior.
pub(crate) fn soc_step(x: &[f64], dx: &[f64]) -> f64 {
    let xn = dot(&x[1..], &x[1..]);
    let c = (x[0] - xn.sqrt()) * (x[0] + xn.sqrt());
    let a = dx[0] * dx[0] - dot(&dx[1..], &dx[1..]);
    let b = 2.0 * (x[0] * dx[0] - dot(&x[1..], &dx[1..]));
    let mut alpha = f64::INFINITY;
    if dx[0] < 0.0 {
        alpha = -x[0] / dx[0];
    }
    let scale = a.abs().max(b.abs()).max(c.abs());
    let root = if a.abs() <= 1e-14 * scale {
        if b < 0.0 { -c / b } else { f64::INFINITY }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            f64::INFINITY
        } else {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let r1 = q / a;
            let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
            [r1, r2].into_iter().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min)
        }
    };
    alpha.min(root)
}

/// `out = scale · W̄ v` (or `scale · J W̄ J v` when `inverse`).
fn soc_wbar(scale: f64, wbar: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let k = wbar.len();
    let w0 = wbar[0];
    let w1v = dot(&wbar[1..], &v[1..]);
    let sgn = if inverse { -1.0 } else { 1.0 };
    out[0] = scale * (w0 * v[0] + sgn * w1v);
    let coef = sgn * v[0] + w1v / (1.0 + w0);
    for i in 1..k {
        out[i] = scale * (v[i] + coef * wbar[i]);
    }
}

fn soc_wbar_dense(wbar: &[f64]) -> DMatrix<f64> {
    let k = wbar.len();
    let w0 = wbar[0];
    DMatrix::from_fn(k, k, |i, j| match (i, j) {
        (0, 0) => w0,
        (0, j) => wbar[j],
        (i, 0) => wbar[i],
        (i, j) => (if i == j { 1.0 } else { 0.0 }) + wbar[i] * wbar[j] / (1.0 + w0),
    })
}

/// svec matrix of `X ↦ Q X Q` for symmetric `Q` (row-major `dim × dim`).
fn psd_kron(m: usize, q: &DMatrix<f64>, dim: usize, out: &mut Vec<f64>) {
    let mut idx = Vec::with_capacity(dim);
    for c in 0..m {
        for r in c..m {
            idx.push((r, c));
        }
    }
    out.resize(dim * dim, 0.0);
    let s2 = std::f64::consts::SQRT_2;
    for (p, &(i, j)) in idx.iter().enumerate() {
        let ap = if i == j { 1.0 } else { s2 };
        for (t, &(k, l)) in idx.iter().enumerate().skip(p) {
            let at = if k == l { 1.0 } else { s2 };
            let v = ap * at * 0.5 * (q[(i, k)] * q[(j, l)] + q[(i, l)] * q[(j, k)]);
            out[p * dim + t] = v;
            out[t * dim + p] = v;
        }
    }
}

/// Adds `a·e` (the cone identity) to `x`.
pub(crate) fn add_identity(kind: Kind, x: &mut [f64], a: f64) {
    match kind {
        Kind::Nonneg => x.iter_mut().for_each(|v| *v += a),
        Kind::Soc => x[0] += a,
        Kind::Psd(m) => {
            let mut k = 0;
            for c in 0..m {
                x[k] += a;
                k += m - c;
            }
        }
    }
}

/// Smallest "eigenvalue" of `x` with respect to the cone's Jordan algebra.
pub(crate) fn min_eig(kind: Kind, x: &[f64]) -> f64 {
    match kind {
        Kind::Nonneg => x.iter().copied().fold(f64::INFINITY, f64::min),
        Kind::Soc => x[0] - dot(&x[1..], &x[1..]).sqrt(),
        Kind::Psd(m) => SymmetricEigen::new(to_mat(m, x)).eigenvalues.min(),
    }
}
