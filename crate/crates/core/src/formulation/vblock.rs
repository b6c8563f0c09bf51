//! Where the entries of the Hermitian voltage matrix `V` live among the conic variables.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conic::{svec_index, Cone, ProblemBuilder};

#[derive(Debug, Clone, PartialEq)]
pub enum VBlock {
    /// Real embedding `[[Re V, −Im V], [Im V, Re V]] ⪰ 0` of side `2n`.
    Sdp { start: usize, n: usize },
    /// Free diagonal plus one rotated cone `(V_ii, V_kk, Re V_ik, Im V_ik)` per edge `i < k`.
    Socp { diag: usize, n: usize, edges: BTreeMap<(usize, usize), usize> },
}

/// Linear term `coeff · x[var]`.
pub type Term = (usize, f64);

impl VBlock {
    pub fn sdp(b: &mut ProblemBuilder, n: usize) -> Self {
        let side = 2 * n;
        let start = b.block(Cone::Psd(side));
        let idx = |i, k| start + svec_index(side, i, k).0;
        // Re V block twice: X11 = X22
        for i in 0..n {
            for k in 0..=i {
                b.equality(&[(idx(i, k), 1.0), (idx(n + i, n + k), -1.0)], 0.0);
            }
        }
        // Im V antisymmetric with zero diagonal
        for i in 0..n {
            b.equality(&[(idx(n + i, i), 1.0)], 0.0);
            for k in 0..i {
                b.equality(&[(idx(n + i, k), 1.0), (idx(n + k, i), 1.0)], 0.0);
            }
        }
        VBlock::Sdp { start, n }
    }

    pub fn socp(b: &mut ProblemBuilder, n: usize, edges: &[(usize, usize)]) -> Self {
        let diag = b.block(Cone::Free(n));
        let mut map = BTreeMap::new();
        for &(i, k) in edges {
            let (i, k) = (i.min(k), i.max(k));
            let e = b.block(Cone::RotatedSoc(4));
            b.equality(&[(e, 1.0), (diag + i, -1.0)], 0.0);
            b.equality(&[(e + 1, 1.0), (diag + k, -1.0)], 0.0);
            map.insert((i, k), e);
        }
        VBlock::Socp { diag, n, edges: map }
    }

    pub fn dim(&self) -> usize {
        match self {
            VBlock::Sdp { n, .. } | VBlock::Socp { n, .. } => *n,
        }
    }

    pub fn diag(&self, i: usize) -> Term {
        match self {
            VBlock::Sdp { start, n } => {
                let (k, f) = svec_index(2 * n, i, i);
                (start + k, f)
            }
            VBlock::Socp { diag, .. } => (diag + i, 1.0),
        }
    }

    /// `Re V_ik`; `None` when the entry is not represented (SOCP off-edge).
    pub fn re(&self, i: usize, k: usize) -> Option<Term> {
        if i == k {
            return Some(self.diag(i));
        }
        match self {
            VBlock::Sdp { start, n } => {
                let (idx, f) = svec_index(2 * n, i, k);
                Some((start + idx, f))
            }
            VBlock::Socp { edges, .. } => edges.get(&(i.min(k), i.max(k))).map(|&e| (e + 2, 1.0)),
        }
    }

    /// `Im V_ik`; `None` on the diagonal (identically zero) or off-edge.
    pub fn im(&self, i: usize, k: usize) -> Option<Term> {
        if i == k {
            return None;
        }
        match self {
            VBlock::Sdp { start, n } => {
                let (idx, f) = svec_index(2 * n, n + i, k);
                Some((start + idx, f))
            }
            VBlock::Socp { edges, .. } => {
                let e = *edges.get(&(i.min(k), i.max(k)))?;
                Some((e + 3, if i < k { 1.0 } else { -1.0 }))
            }
        }
    }

    /// Terms of `Tr(A_n V)` and `Tr(B_n V)`, i.e. the active and reactive injection at `n`.
    pub fn injection_terms(&self, y: &DMatrix<Complex64>, n: usize) -> (Vec<Term>, Vec<Term>) {
        let mut p = Vec::new();
        let mut q = Vec::new();
        for k in 0..y.ncols() {
            let yk = y[(n, k)];
            if yk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (g, bb) = (yk.re, yk.im);
            let re = self.re(n, k).expect("admittance pattern entry missing from V");
            p.push((re.0, g * re.1));
            q.push((re.0, -bb * re.1));
            if let Some(im) = self.im(n, k) {
                p.push((im.0, bb * im.1));
                q.push((im.0, g * im.1));
            }
        }
        (p, q)
    }

    /// Hermitian `V` read from a primal vector. SOCP leaves off-edge entries at zero.
    pub fn read(&self, x: &[f64]) -> DMatrix<Complex64> {
        let n = self.dim();
        let get = |t: Option<Term>| t.map_or(0.0, |(v, f)| f * x[v]);
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                let (re, im) = match self {
                    VBlock::Sdp { start, .. } => {
                        // average the two copies of each block for symmetry
                        let side = 2 * n;
                        let at = |r, c| {
                            let (idx, f) = svec_index(side, r, c);
                            f * x[start + idx]
                        };
                        ((at(i, k) + at(n + i, n + k)) / 2.0, (at(n + i, k) - at(n + k, i)) / 2.0)
                    }
                    VBlock::Socp { .. } => (get(self.re(i, k)), get(self.im(i, k))),
                };
                m[(i, k)] = Complex64::new(re, im);
            }
        }
        m
    }
}
