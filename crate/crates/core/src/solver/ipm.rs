//! Mehrotra predictor-corrector on the homogeneous self-dual embedding.
//!
//! Internally the problem is `min cᵀx  s.t.  Ax = b,  Gx + s = 0,  s ∈ K`, where `G`
//! is block diagonal: `−D_b` on each coned block (free variables have no rows), with
//! rotated cones mapped to standard ones by `T(u, v, w) = (u + v, u − v, 2w)`.
//! `D` and the row scaling `E` come from Ruiz equilibration of `[A; G]`; the cost is
//! rescaled by a scalar. Slacks `s` stay in problem units, so cone membership is
//! unaffected by equilibration.

use super::cones::{add_identity, min_eig, ConeBlock, Kind};
use super::kkt::{Csr, HBlock, Kkt};
use super::{residuals_of, IterationLog, PrimalDualSolution, SolveStatus, SolverError, SolverSettings};
use crate::conic::{Cone, ConicProblem};

const RUIZ_PASSES: usize = 15;
const SCALE_MIN: f64 = 1e-4;
const SCALE_MAX: f64 = 1e4;
const MIN_STEP: f64 = 1e-10;
const MAX_NEWTON_REFINE: usize = 4;

struct GBlock {
    var: usize,
    slack: usize,
    dim: usize,
    rotated: bool,
}

fn rotate(v: &mut [f64]) {
    let (a, b) = (v[0], v[1]);
    v[0] = a + b;
    v[1] = a - b;
    v[2..].iter_mut().for_each(|w| *w *= 2.0);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

struct Model {
    n: usize,
    p: usize,
    m: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    a: Csr,
    g: Vec<GBlock>,
    /// column scaling of x
    d: Vec<f64>,
    /// row scaling of the equalities
    e: Vec<f64>,
    /// cost scaling
    sigma: f64,
    nu: f64,
}

impl Model {
    fn new(problem: &ConicProblem, equilibrate: bool) -> (Self, Vec<ConeBlock>) {
        let n = problem.num_vars;
        let p = problem.rhs.len();
        let mut g = Vec::new();
        let mut cones = Vec::new();
        let mut m = 0;
        for (cone, r) in problem.cones.iter().zip(problem.block_ranges()) {
            let kind = match *cone {
                Cone::Free(_) => continue,
                Cone::Nonneg(_) => Kind::Nonneg,
                Cone::Soc(_) | Cone::RotatedSoc(_) => Kind::Soc,
                Cone::Psd(side) => Kind::Psd(side),
            };
            let dim = r.len();
            if dim == 0 {
                continue;
            }
            g.push(GBlock { var: r.start, slack: m, dim, rotated: matches!(cone, Cone::RotatedSoc(_)) });
            cones.push(ConeBlock::with_dim(kind, m, dim));
            m += dim;
        }
        let a0 = Csr::from_triplets(p, &problem.equalities);
        let mut d = vec![1.0; n];
        let mut e = vec![1.0; p];
        if equilibrate {
            // largest |T| entry in each coned column
            let mut gmax = vec![0.0; n];
            for blk in &g {
                for k in 0..blk.dim {
                    gmax[blk.var + k] = if blk.rotated && k >= 2 { 2.0 } else { 1.0 };
                }
            }
            for _ in 0..RUIZ_PASSES {
                let mut col: Vec<f64> = (0..n).map(|j| gmax[j] * d[j]).collect();
                let mut row = vec![0.0f64; p];
                for (i, ri) in row.iter_mut().enumerate() {
                    for (j, v) in a0.row(i) {
                        let s = (e[i] * v * d[j]).abs();
                        *ri = ri.max(s);
                        col[j] = col[j].max(s);
                    }
                }
                for j in 0..n {
                    if col[j] > 0.0 {
                        d[j] = (d[j] / col[j].sqrt()).clamp(SCALE_MIN, SCALE_MAX);
                    }
                }
                for i in 0..p {
                    if row[i] > 0.0 {
                        e[i] = (e[i] / row[i].sqrt()).clamp(SCALE_MIN, SCALE_MAX);
                    }
                }
            }
        }
        let mut a = a0;
        for i in 0..p {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                a.val[k] *= e[i] * d[a.col[k]];
            }
        }
        let dc: Vec<f64> = problem.objective.iter().zip(&d).map(|(c, s)| c * s).collect();
        let cn = norm_inf(&dc);
        let sigma = if equilibrate && cn > 0.0 { (1.0 / cn).clamp(SCALE_MIN, SCALE_MAX) } else { 1.0 };
        let c = dc.iter().map(|v| v * sigma).collect();
        let b = problem.rhs.iter().zip(&e).map(|(v, s)| v * s).collect();
        let nu = cones.iter().map(|k| k.degree() as f64).sum();
        (Self { n, p, m, c, b, a, g, d, e, sigma, nu }, cones)
    }

    /// `out = G x`
    fn g_mul(&self, x: &[f64], out: &mut [f64]) {
        for blk in &self.g {
            let o = &mut out[blk.slack..blk.slack + blk.dim];
            for k in 0..blk.dim {
                o[k] = self.d[blk.var + k] * x[blk.var + k];
            }
            if blk.rotated {
                rotate(o);
            }
            o.iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// `out += Gᵀ z`
    fn gt_mul_add(&self, z: &[f64], out: &mut [f64]) {
        let mut tmp = Vec::new();
        for blk in &self.g {
            tmp.clear();
            tmp.extend_from_slice(&z[blk.slack..blk.slack + blk.dim]);
            if blk.rotated {
                rotate(&mut tmp);
            }
            for k in 0..blk.dim {
                out[blk.var + k] -= self.d[blk.var + k] * tmp[k];
            }
        }
    }

    /// `out = (WᵀW)⁻¹ v` blockwise.
    fn hinv_mul(&self, cones: &[ConeBlock], v: &[f64], out: &mut [f64]) {
        let mut t = Vec::new();
        for cone in cones {
            let r = cone.range();
            t.resize(cone.dim, 0.0);
            cone.apply_wtinv(&v[r.clone()], &mut t);
            cone.apply_winv(&t, &mut out[r]);
        }
    }

    fn hblocks(&self, cones: &[ConeBlock]) -> Vec<HBlock> {
        self.g
            .iter()
            .zip(cones)
            .map(|(blk, cone)| HBlock { start: blk.var, dim: blk.dim, dense: cone.kind != Kind::Nonneg })
            .collect()
    }

    /// Loads `Gᵀ(WᵀW)⁻¹G` (or `GᵀG` when `identity`) into the KKT blocks.
    fn load_h(&self, cones: &[ConeBlock], kkt: &mut Kkt, identity: bool) {
        let mut hinv = Vec::new();
        for (bi, (blk, cone)) in self.g.iter().zip(cones).enumerate() {
            let k = blk.dim;
            let dv = &self.d[blk.var..blk.var + k];
            let h = &mut kkt.h[bi];
            if cone.kind == Kind::Nonneg {
                for i in 0..k {
                    let hi = if identity { 1.0 } else { 1.0 / cone_w_sq(cone, i) };
                    h[i] = hi * dv[i] * dv[i];
                }
                continue;
            }
            if identity {
                hinv.clear();
                hinv.resize(k * k, 0.0);
                for i in 0..k {
                    hinv[i * k + i] = 1.0;
                }
            } else {
                cone.hinv(&mut hinv);
            }
            if blk.rotated {
                // T·H·T with T symmetric: rotate every row, then every column
                for i in 0..k {
                    let mut col: Vec<f64> = (0..k).map(|r| hinv[r * k + i]).collect();
                    rotate(&mut col);
                    for r in 0..k {
                        hinv[r * k + i] = col[r];
                    }
                }
                for r in 0..k {
                    rotate(&mut hinv[r * k..(r + 1) * k]);
                }
            }
            for i in 0..k {
                for j in 0..k {
                    h[i * k + j] = dv[i] * hinv[i * k + j] * dv[j];
                }
            }
        }
    }

    /// Solves the reduced KKT for right-hand side `(r1, r2, r3)`.
    fn newton(
        &self,
        cones: &[ConeBlock],
        kkt: &Kkt,
        r1: &[f64],
        r2: &[f64],
        r3: &[f64],
        identity: bool,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut dx, mut dy, mut dz) = self.newton_once(cones, kkt, r1, r2, r3, identity);
        if identity {
            return (dx, dy, dz);
        }
        // The reduced matrix holds (WᵀW)⁻¹ formed densely, which loses accuracy near the
        // cone boundary; refine against the exact operators. dz = (WᵀW)⁻¹(G dx − r3) keeps
        // the third row exact, so only the first two rows carry residuals.
        let scale = |v: &[f64]| 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = 1e-13 * scale(r1).max(scale(r2));
        let mut prev = f64::INFINITY;
        for _ in 0..MAX_NEWTON_REFINE {
            let mut e1 = r1.to_vec();
            self.a.mul_t_add(&dy.iter().map(|v| -v).collect::<Vec<_>>(), &mut e1);
            let mut gz = vec![0.0; self.n];
            self.gt_mul_add(&dz, &mut gz);
            for j in 0..self.n {
                e1[j] -= gz[j];
            }
            let mut e2 = r2.to_vec();
            let mut ax = vec![0.0; self.p];
            self.a.mul_add(&dx, &mut ax);
            for i in 0..self.p {
                e2[i] -= ax[i];
            }
            let err = e1.iter().chain(&e2).fold(0.0f64, |m, x| m.max(x.abs()));
            if !(err > tol) || err >= 0.5 * prev {
                break;
            }
            prev = err;
            let zero = vec![0.0; self.m];
            let (cx, cy, cz) = self.newton_once(cones, kkt, &e1, &e2, &zero, false);
            dx.iter_mut().zip(&cx).for_each(|(a, b)| *a += b);
            dy.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
            dz.iter_mut().zip(&cz).for_each(|(a, b)| *a += b);
        }
        (dx, dy, dz)
    }

    fn newton_once(
        &self,
        cones: &[ConeBlock],
        kkt: &Kkt,
        r1: &[f64],
        r2: &[f64],
        r3: &[f64],
        identity: bool,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (n, p, m) = (self.n, self.p, self.m);
        let mut hr3 = vec![0.0; m];
        if identity {
            hr3.copy_from_slice(r3);
        } else {
            self.hinv_mul(cones, r3, &mut hr3);
        }
        let mut rhs = vec![0.0; n + p];
        rhs[..n].copy_from_slice(r1);
        self.gt_mul_add(&hr3, &mut rhs[..n]);
        rhs[n..].copy_from_slice(r2);
        kkt.solve(&mut rhs);
        let dx = rhs[..n].to_vec();
        let dy = rhs[n..].to_vec();
        let mut gdx = vec![0.0; m];
        self.g_mul(&dx, &mut gdx);
        for (g, r) in gdx.iter_mut().zip(r3) {
            *g -= r;
        }
        let mut dz = vec![0.0; m];
        if identity {
            dz.copy_from_slice(&gdx);
        } else {
            self.hinv_mul(cones, &gdx, &mut dz);
        }
        (dx, dy, dz)
    }

    /// Problem-coordinate `(x, y, z)` from internal iterates divided by `scale`.
    fn unscale(&self, x: &[f64], y: &[f64], z: &[f64], scale: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let xu: Vec<f64> = x.iter().zip(&self.d).map(|(v, d)| v * d / scale).collect();
        let yu: Vec<f64> = y.iter().zip(&self.e).map(|(v, e)| -v * e / (self.sigma * scale)).collect();
        let mut zu = vec![0.0; self.n];
        self.gt_mul_add(z, &mut zu);
        // zu currently holds −D Tᵀ z; problem duals are T z / σ
        for (j, v) in zu.iter_mut().enumerate() {
            *v = -*v / (self.d[j] * self.sigma * scale);
        }
        (xu, yu, zu)
    }
}

fn cone_w_sq(cone: &ConeBlock, i: usize) -> f64 {
    match &cone.scaling {
        super::cones::Scaling::Nonneg { w } => w[i] * w[i],
        _ => unreachable!(),
    }
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    /// `W⁻ᵀ ds` and `W dz`, in λ-space
    ds_scaled: Vec<f64>,
    dz_scaled: Vec<f64>,
}

pub(super) fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<PrimalDualSolution, SolverError> {
    settings.validate()?;
    problem.validate()?;
    let (model, mut cones) = Model::new(problem, settings.equilibrate);
    let (n, p, m) = (model.n, model.p, model.m);

    let numerical = |iters: usize, log: Vec<IterationLog>| PrimalDualSolution {
        status: SolveStatus::Numerical,
        primal: vec![f64::NAN; n],
        dual_eq: vec![f64::NAN; p],
        dual_cone: vec![f64::NAN; n],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        primal_res: f64::NAN,
        dual_res: f64::NAN,
        iterations: iters,
        log,
    };

    let mut kkt = match Kkt::new(n, model.hblocks(&cones), model.a.clone()) {
        Ok(k) => k,
        Err(_) => return Ok(numerical(0, Vec::new())),
    };

    // Initial point: least-squares solves with W = I, then shift into the cone.
    model.load_h(&cones, &mut kkt, true);
    if kkt.factor().is_err() {
        return Ok(numerical(0, Vec::new()));
    }
    let zeros_n = vec![0.0; n];
    let zeros_m = vec![0.0; m];
    let (x0, _, s_neg) = model.newton(&cones, &kkt, &zeros_n, &model.b, &zeros_m, true);
    let neg_c: Vec<f64> = model.c.iter().map(|v| -v).collect();
    let zeros_p = vec![0.0; p];
    let (_, y0, z0) = model.newton(&cones, &kkt, &neg_c, &zeros_p, &zeros_m, true);
    let mut x = x0;
    let mut y = y0;
    let mut s: Vec<f64> = s_neg.iter().map(|v| -v).collect();
    let mut z = z0;
    for v in [&mut s, &mut z] {
        let shift = cones.iter().map(|c| -min_eig(c.kind, &v[c.range()])).fold(f64::NEG_INFINITY, f64::max);
        if shift >= -1e-8 || !shift.is_finite() {
            for c in &cones {
                add_identity(c.kind, &mut v[c.range()], 1.0 + shift.max(0.0));
            }
        }
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut log = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    let mut last_step = 0.0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;

    let ctx = |x: &[f64]| dot(&model.c, x);
    let btx = |y: &[f64]| dot(&model.b, y);

    for it in 0..=settings.max_iter {
        iterations = it;
        // residuals of the embedding
        let mut rx = vec![0.0; n];
        model.a.mul_t_add(&y, &mut rx);
        model.gt_mul_add(&z, &mut rx);
        for j in 0..n {
            rx[j] += model.c[j] * tau;
        }
        let mut ry: Vec<f64> = model.b.iter().map(|b| b * tau).collect();
        {
            let mut ax = vec![0.0; p];
            model.a.mul_add(&x, &mut ax);
            for i in 0..p {
                ry[i] -= ax[i];
            }
        }
        let mut rz = vec![0.0; m];
        model.g_mul(&x, &mut rz);
        for i in 0..m {
            rz[i] += s[i];
        }
        let rtau = kappa + ctx(&x) + btx(&y);
        let mu = (dot(&s, &z) + tau * kappa) / (model.nu + 1.0);

        let (xu, yu, zu) = model.unscale(&x, &y, &z, tau);
        let res = residuals_of(problem, &xu, &yu, &zu)?;
        log.push(IterationLog {
            iter: it,
            primal_obj: res.primal_obj,
            dual_obj: res.dual_obj,
            gap: res.gap,
            primal_res: res.primal_res,
            dual_res: res.dual_res,
            mu,
            tau,
            kappa,
            step: last_step,
        });
        let merit = res.primal_res.max(res.dual_res).max(res.gap);
        if merit.is_finite() && best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, xu.clone(), yu.clone(), zu.clone(), res.primal_obj));
        }
        if res.primal_res <= settings.tol_feas && res.dual_res <= settings.tol_feas && res.gap <= settings.tol_gap {
            status = SolveStatus::Optimal;
            break;
        }

        // certificates, in problem coordinates without the τ normalization
        if kappa > tau {
            let (xc, yc, zc) = model.unscale(&x, &y, &z, 1.0);
            let by: f64 = problem.rhs.iter().zip(&yc).map(|(b, v)| b * v).sum();
            if by > 0.0 {
                let mut aty: Vec<f64> = zc.clone();
                for &(i, j, a) in &problem.equalities {
                    aty[j] += a * yc[i];
                }
                let (_, dviol) = super::cone_violations(problem, &xc, &zc);
                if norm_inf(&aty).max(dviol) <= settings.tol_infeas * by * (1.0 + norm_inf(&problem.objective)) {
                    status = SolveStatus::Infeasible;
                    let yn = yc.iter().map(|v| v / by).collect();
                    let zn = zc.iter().map(|v| v / by).collect();
                    return Ok(certificate(status, problem, vec![0.0; n], yn, zn, it, log));
                }
            }
            let cx: f64 = problem.objective.iter().zip(&xc).map(|(c, v)| c * v).sum();
            if cx < 0.0 {
                let ax = problem.equality_residual(&xc);
                let axn = ax.iter().zip(&problem.rhs).map(|(r, b)| (r + b).abs()).fold(0.0, f64::max);
                let (pviol, _) = super::cone_violations(problem, &xc, &zc);
                if axn.max(pviol) <= settings.tol_infeas * (-cx) * (1.0 + norm_inf(&problem.rhs)) {
                    status = SolveStatus::Unbounded;
                    let xn = xc.iter().map(|v| v / -cx).collect();
                    return Ok(certificate(status, problem, xn, vec![0.0; p], vec![0.0; n], it, log));
                }
            }
        }
        if it == settings.max_iter {
            break;
        }

        // scaling and factorization
        let mut ok = true;
        for c in cones.iter_mut() {
            let r = c.range();
            if c.update_scaling(&s[r.clone()], &z[r]).is_err() {
                ok = false;
                break;
            }
        }
        if ok {
            model.load_h(&cones, &mut kkt, false);
            ok = kkt.factor().is_ok();
        }
        if !ok {
            status = SolveStatus::Numerical;
            break;
        }

        // direction for the τ column
        let (vx, vy, vz) = model.newton(&cones, &kkt, &neg_c, &model.b, &zeros_m, false);
        let v_dot = ctx(&vx) + btx(&vy);

        let direction = |xi_s: &[f64], xi_k: f64, eta: f64| -> Direction {
            let mut ls = vec![0.0; m];
            for c in &cones {
                let r = c.range();
                c.lambda_solve(&xi_s[r.clone()], &mut ls[r]);
            }
            let r1: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let r2: Vec<f64> = ry.iter().map(|v| eta * v).collect();
            let mut r3 = vec![0.0; m];
            for c in &cones {
                let r = c.range();
                c.apply_wt(&ls[r.clone()], &mut r3[r]);
            }
            for i in 0..m {
                r3[i] = -eta * rz[i] - r3[i];
            }
            let (ux, uy, uz) = model.newton(&cones, &kkt, &r1, &r2, &r3, false);
            let dtau = (-eta * rtau - xi_k / tau - (ctx(&ux) + btx(&uy))) / (v_dot - kappa / tau);
            let dx: Vec<f64> = ux.iter().zip(&vx).map(|(u, v)| u + dtau * v).collect();
            let dy: Vec<f64> = uy.iter().zip(&vy).map(|(u, v)| u + dtau * v).collect();
            let dz: Vec<f64> = uz.iter().zip(&vz).map(|(u, v)| u + dtau * v).collect();
            let dkappa = (xi_k - kappa * dtau) / tau;
            let mut dz_scaled = vec![0.0; m];
            let mut ds = vec![0.0; m];
            for c in &cones {
                let r = c.range();
                c.apply_w(&dz[r.clone()], &mut dz_scaled[r]);
            }
            let ds_scaled: Vec<f64> = ls.iter().zip(&dz_scaled).map(|(l, w)| l - w).collect();
            for c in &cones {
                let r = c.range();
                c.apply_wt(&ds_scaled[r.clone()], &mut ds[r]);
            }
            Direction { dx, dy, dz, ds, dtau, dkappa, ds_scaled, dz_scaled }
        };
        let max_step = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for c in &cones {
                let r = c.range();
                a = a.min(c.max_step_scaled(&d.ds_scaled[r.clone()]));
                a = a.min(c.max_step_scaled(&d.dz_scaled[r]));
            }
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        // predictor
        let mut lam_sq = vec![0.0; m];
        for c in &cones {
            let r = c.range();
            c.lambda_sq(&mut lam_sq[r]);
        }
        let xi_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let aff = direction(&xi_aff, -tau * kappa, 1.0);
        let alpha_aff = max_step(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut corr = vec![0.0; m];
        let mut xi = vec![0.0; m];
        for c in &cones {
            let r = c.range();
            c.circ(&aff.ds_scaled[r.clone()], &aff.dz_scaled[r.clone()], &mut corr[r.clone()]);
            let mut e = vec![0.0; c.dim];
            add_identity(c.kind, &mut e, sigma * mu);
            for (k, i) in r.enumerate() {
                xi[i] = -lam_sq[i] - corr[i] + e[k];
            }
        }
        let xi_k = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        let dir = direction(&xi, xi_k, 1.0 - sigma);
        let alpha = (settings.step_fraction * max_step(&dir)).min(1.0);
        if !(alpha > MIN_STEP) {
            status = SolveStatus::Numerical;
            break;
        }
        last_step = alpha;
        for j in 0..n {
            x[j] += alpha * dir.dx[j];
        }
        for i in 0..p {
            y[i] += alpha * dir.dy[i];
        }
        for i in 0..m {
            s[i] += alpha * dir.ds[i];
            z[i] += alpha * dir.dz[i];
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if ![tau, kappa].iter().all(|v| v.is_finite() && *v > 0.0) {
            status = SolveStatus::Numerical;
            break;
        }
    }

    let (xu, yu, zu) = if status == SolveStatus::Optimal {
        model.unscale(&x, &y, &z, tau)
    } else {
        match best {
            Some((_, xb, yb, zb, _)) => (xb, yb, zb),
            None => return Ok(numerical(iterations, log)),
        }
    };
    let res = residuals_of(problem, &xu, &yu, &zu)?;
    Ok(PrimalDualSolution {
        status,
        primal: xu,
        dual_eq: yu,
        dual_cone: zu,
        objective: res.primal_obj,
        dual_objective: res.dual_obj,
        gap: res.gap,
        primal_res: res.primal_res,
        dual_res: res.dual_res,
        iterations,
        log,
    })
}

fn certificate(
    status: SolveStatus,
    problem: &ConicProblem,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    iterations: usize,
    log: Vec<IterationLog>,
) -> PrimalDualSolution {
    let obj = problem.objective_value(&x);
    PrimalDualSolution {
        status,
        primal: x,
        dual_eq: y,
        dual_cone: z,
        objective: obj,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        primal_res: f64::NAN,
        dual_res: f64::NAN,
        iterations,
        log,
    }
}
