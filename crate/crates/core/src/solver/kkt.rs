//! Reduced quasi-definite KKT system
//!
//! ```text
//! [ H + δI    Aᵀ  ] [dx]   [r₁]
//! [ A        −δI  ] [dy] = [r₂]
//! ```
//!
//! where `H = Gᵀ(WᵀW)⁻¹G` is block diagonal over cone blocks. The matrix is stored as
//! an upper-triangular CSC pattern fixed at construction; each iteration refills the
//! `H` values and refactorizes with a sparse LDLᵀ (AMD ordering, dynamic
//! regularization). Solves are polished by iterative refinement against the
//! unregularized matrix.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::prelude::Reborrow;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Conj, MatMut, Par, Side};

/// Static diagonal regularization.
const STATIC_REG: f64 = 1e-9;
const DYN_REG_EPS: f64 = 1e-13;
const DYN_REG_DELTA: f64 = 2e-7;
const MAX_REFINE: usize = 10;

#[derive(Debug, Clone, Copy)]
pub(crate) struct HBlock {
    pub start: usize,
    pub dim: usize,
    pub dense: bool,
}

/// Row-compressed sparse matrix with duplicates merged and columns sorted.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(nrows: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in trip {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in r {
                if last == Some(j) {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(j);
                    val.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col.len());
        }
        Self { nrows, row_ptr, col, val }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    /// `y += A x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi += self.row(i).map(|(j, a)| a * x[j]).sum::<f64>();
        }
    }

    /// `y += Aᵀ x`
    pub fn mul_t_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, &xi) in x.iter().enumerate().take(self.nrows) {
            if xi != 0.0 {
                for (j, a) in self.row(i) {
                    y[j] += a * xi;
                }
            }
        }
    }
}

pub(crate) struct Kkt {
    n: usize,
    p: usize,
    blocks: Vec<HBlock>,
    /// Current `H` values per block: diagonal (len `dim`) or dense row-major.
    pub h: Vec<Vec<f64>>,
    a: Csr,
    pattern: SymbolicSparseColMat<usize>,
    col_ptr: Vec<usize>,
    vals: Vec<f64>,
    symbolic: SymbolicCholesky<usize>,
    l: Vec<f64>,
    signs: Vec<i8>,
    in_block: Vec<bool>,
}

#[derive(Debug)]
pub(crate) struct KktFailure;

impl Kkt {
    pub fn new(n: usize, blocks: Vec<HBlock>, a: Csr) -> Result<Self, KktFailure> {
        let p = a.nrows;
        let dim = n + p;
        let mut in_block = vec![false; n];
        let mut dense_start = vec![usize::MAX; n];
        for b in &blocks {
            for j in b.start..b.start + b.dim {
                in_block[j] = true;
                if b.dense {
                    dense_start[j] = b.start;
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for j in 0..n {
            if dense_start[j] != usize::MAX {
                row_idx.extend(dense_start[j]..=j);
            } else {
                row_idx.push(j);
            }
            col_ptr.push(row_idx.len());
        }
        for i in 0..p {
            row_idx.extend(a.row(i).map(|(j, _)| j));
            row_idx.push(n + i);
            col_ptr.push(row_idx.len());
        }
        let nnz = row_idx.len();
        let pattern = SymbolicSparseColMat::new_checked(dim, dim, col_ptr.clone(), None, row_idx);
        let symbolic = factorize_symbolic_cholesky(
            pattern.rb(),
            Side::Upper,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .map_err(|_| KktFailure)?;
        let l = vec![0.0; symbolic.len_val()];
        let mut signs = vec![1i8; n];
        signs.extend(std::iter::repeat_n(-1i8, p));
        let h = blocks.iter().map(|b| vec![0.0; if b.dense { b.dim * b.dim } else { b.dim }]).collect();
        let mut kkt = Self {
            n,
            p,
            blocks,
            h,
            a,
            pattern,
            col_ptr,
            vals: vec![0.0; nnz],
            symbolic,
            l,
            signs,
            in_block,
        };
        kkt.fill_constant();
        Ok(kkt)
    }

    fn fill_constant(&mut self) {
        let n = self.n;
        for i in 0..self.p {
            let base = self.col_ptr[n + i];
            for (k, (_, v)) in self.a.row(i).enumerate() {
                self.vals[base + k] = v;
            }
            self.vals[self.col_ptr[n + i + 1] - 1] = -STATIC_REG;
        }
        for j in 0..n {
            if !self.in_block[j] {
                self.vals[self.col_ptr[j]] = STATIC_REG;
            }
        }
    }

    /// Loads the current `H` values into the matrix and factorizes.
    pub fn factor(&mut self) -> Result<(), KktFailure> {
        for (b, h) in self.blocks.iter().zip(&self.h) {
            for jl in 0..b.dim {
                let j = b.start + jl;
                if b.dense {
                    let base = self.col_ptr[j];
                    for il in 0..=jl {
                        self.vals[base + il] = h[il * b.dim + jl];
                    }
                    self.vals[base + jl] += STATIC_REG;
                } else {
                    self.vals[self.col_ptr[j]] = h[jl] + STATIC_REG;
                }
            }
        }
        if self.vals.iter().any(|v| !v.is_finite()) {
            return Err(KktFailure);
        }
        let a = SparseColMatRef::new(self.pattern.rb(), &self.vals);
        let reg = LdltRegularization {
            dynamic_regularization_signs: Some(&self.signs),
            dynamic_regularization_delta: DYN_REG_DELTA,
            dynamic_regularization_epsilon: DYN_REG_EPS,
        };
        let mut mem = MemBuffer::new(self.symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
        self.symbolic
            .factorize_numeric_ldlt(&mut self.l, a, Side::Upper, reg, Par::Seq, MemStack::new(&mut mem), Default::default())
            .map_err(|_| KktFailure)?;
        Ok(())
    }

    fn solve_factored(&self, rhs: &mut [f64]) {
        let ldlt = LdltRef::<usize, f64>::new(&self.symbolic, &self.l);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        let dim = rhs.len();
        ldlt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(rhs, dim, 1),
            Par::Seq,
            MemStack::new(&mut mem),
        );
    }

    /// `y = K₀ x` with the unregularized matrix.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (b, h) in self.blocks.iter().zip(&self.h) {
            let xs = &x[b.start..b.start + b.dim];
            for il in 0..b.dim {
                y[b.start + il] += if b.dense {
                    h[il * b.dim..(il + 1) * b.dim].iter().zip(xs).map(|(a, v)| a * v).sum::<f64>()
                } else {
                    h[il] * xs[il]
                };
            }
        }
        let (yv, yy) = y.split_at_mut(n);
        self.a.mul_t_add(&x[n..], yv);
        self.a.mul_add(&x[..n], yy);
    }

    /// Solves `K₀ x = rhs` in place, with iterative refinement.
    pub fn solve(&self, rhs: &mut [f64]) {
        let b = rhs.to_vec();
        let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.solve_factored(rhs);
        let mut r = vec![0.0; b.len()];
        let mut kx = vec![0.0; b.len()];
        let resid = |x: &[f64], kx: &mut [f64], r: &mut [f64]| {
            self.apply(x, kx);
            let mut m = 0.0f64;
            for i in 0..b.len() {
                r[i] = b[i] - kx[i];
                m = m.max(r[i].abs());
            }
            m
        };
        let mut err = resid(rhs, &mut kx, &mut r);
        for _ in 0..MAX_REFINE {
            if err <= 1e-14 * (1.0 + bnorm) || !err.is_finite() {
                break;
            }
            let mut corr = r.clone();
            self.solve_factored(&mut corr);
            let cand: Vec<f64> = rhs.iter().zip(&corr).map(|(x, c)| x + c).collect();
            let mut r2 = vec![0.0; b.len()];
            let e2 = resid(&cand, &mut kx, &mut r2);
            if e2 >= err * 0.9 {
                if e2 < err {
                    rhs.copy_from_slice(&cand);
                }
                break;
            }
            rhs.copy_from_slice(&cand);
            r = r2;
            err = e2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_quasidefinite_system() {
        // H = diag(2, 3) on a diagonal block plus one free variable; A = [1 1 1]
        let a = Csr::from_triplets(1, &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]);
        let blocks = vec![HBlock { start: 0, dim: 2, dense: false }];
        let mut k = Kkt::new(3, blocks, a).unwrap();
        k.h[0] = vec![2.0, 3.0];
        k.factor().unwrap();
        // K₀ = [[2,0,0,1],[0,3,0,1],[0,0,0,1],[1,1,1,0]]
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut rhs = vec![2.0 + 3.0, -6.0 + 3.0, 3.0, 1.0 - 2.0 + 0.5];
        k.solve(&mut rhs);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-9, "{rhs:?}");
        }
    }

    #[test]
    fn csr_merges_duplicates() {
        let a = Csr::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0)]);
        assert_eq!(a.col, vec![1, 0]);
        assert_eq!(a.val, vec![3.0, -1.0]);
    }
}
