//! Homogeneous self-dual embedding with Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector. Works on the min form
//! `min cᵀx, Ax = b, x ∈ ℝ^nf × K`.

use nalgebra::{DMatrix, DVector};

use super::cones::{Correction, Scaling};
use super::{SolveStatus, SolverConfig, StandardForm};

/// An iterate whose residuals are within this multiple of the tolerance is
/// accepted when the method cannot make further progress.
const RELAXED_FACTOR: f64 = 100.0;
/// Iterations without halving the best residual before giving up.
const STAGNATION_ITERS: usize = 10;

pub struct Outcome {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// Dual slack, zero on free columns.
    pub s: DVector<f64>,
    pub iterations: usize,
    pub tolerance: f64,
}

struct Direction {
    dx_f: DVector<f64>,
    dx_c: DVector<f64>,
    dy: DVector<f64>,
    ds_c: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

/// LU of the reduced KKT matrix `[[A_c H⁻¹ A_cᵀ, A_f], [A_fᵀ, 0]]`.
struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k: DMatrix<f64>,
}

impl Kkt {
    fn factor(m_mat: &DMatrix<f64>, a_f: &DMatrix<f64>) -> Option<Kkt> {
        let m = m_mat.nrows();
        let nf = a_f.ncols();
        let mut k = DMatrix::zeros(m + nf, m + nf);
        k.view_mut((0, 0), (m, m)).copy_from(m_mat);
        k.view_mut((0, m), (m, nf)).copy_from(a_f);
        k.view_mut((m, 0), (nf, m)).copy_from(&a_f.transpose());
        if let Some(kkt) = Self::try_lu(k.clone()) {
            return Some(kkt);
        }
        let jitter = 1e-12 * (1.0 + m_mat.diagonal().amax());
        log::debug!("KKT factorization failed; retrying with jitter {jitter:e}");
        for i in 0..m {
            k[(i, i)] += jitter;
        }
        for i in m..m + nf {
            k[(i, i)] -= jitter;
        }
        Self::try_lu(k)
    }

    fn try_lu(k: DMatrix<f64>) -> Option<Kkt> {
        let lu = k.clone().lu();
        let u = lu.u();
        let d = u.diagonal();
        let (lo, hi) = d
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        if d.len() > 0 && !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
            return None;
        }
        Some(Kkt { lu, k })
    }

    /// Solve with one step of iterative refinement.
    fn solve(&self, r: &DVector<f64>) -> Option<DVector<f64>> {
        if r.is_empty() {
            return Some(DVector::zeros(0));
        }
        let mut u = self.lu.solve(r)?;
        let resid = r - &self.k * &u;
        if let Some(du) = self.lu.solve(&resid) {
            u += du;
        }
        if u.iter().all(|v| v.is_finite()) {
            Some(u)
        } else {
            None
        }
    }
}

pub fn run(sf: &StandardForm, config: &SolverConfig) -> Outcome {
    let m = sf.nrows();
    let nf = sf.nf;
    let cones = sf.cones();
    let nc = cones.dim();
    let a_f = sf.a.columns(0, nf).into_owned();
    let a_c = sf.a.columns(nf, nc).into_owned();
    let c_f = sf.c.rows(0, nf).into_owned();
    let c_c = sf.c.rows(nf, nc).into_owned();
    let b = &sf.b;
    let nu = cones.degree() as f64;
    let bnorm = 1.0 + b.norm();
    let cnorm = 1.0 + sf.c.norm();
    let tol = config.tolerance;

    let mut x_f = DVector::zeros(nf);
    let mut x_c = cones.unit();
    let mut s_c = cones.unit();
    let mut y = DVector::zeros(m);
    let mut tau = 1.0;
    let mut kappa = 1.0;
    let mut stalls = 0;
    // best iterate so far, by the worst of the three residuals
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>, f64)> = None;
    let mut since_best = 0;
    let relaxed = RELAXED_FACTOR * tol;

    let finish = |status, x_f: &DVector<f64>, x_c: &DVector<f64>, y: &DVector<f64>, s_c: &DVector<f64>, scale: f64, iterations| {
        let mut x = DVector::zeros(nf + nc);
        x.rows_mut(0, nf).copy_from(x_f);
        x.rows_mut(nf, nc).copy_from(x_c);
        let mut s = DVector::zeros(nf + nc);
        s.rows_mut(nf, nc).copy_from(s_c);
        Outcome {
            status,
            x: x / scale,
            y: y / scale,
            s: s / scale,
            iterations,
            tolerance: tol,
        }
    };

    // Any early exit first falls back to the best iterate if it is accurate
    // to the relaxed tolerance.
    macro_rules! fail {
        ($status:expr, $iter:expr) => {{
            if let Some((metric, bx_f, bx_c, by, bs_c, btau)) = best.as_ref().filter(|b| b.0 <= relaxed) {
                log::warn!("returning the best iterate (residual {metric:.2e}) at reduced accuracy");
                return finish(SolveStatus::Optimal, bx_f, bx_c, by, bs_c, *btau, $iter);
            }
            return finish($status, &x_f, &x_c, &y, &s_c, tau, $iter);
        }};
    }

    for iter in 0..=config.max_iterations {
        let rp = &a_f * &x_f + &a_c * &x_c - b * tau;
        let rd_f = a_f.tr_mul(&y) - &c_f * tau;
        let rd_c = a_c.tr_mul(&y) + &s_c - &c_c * tau;
        let pobj = c_f.dot(&x_f) + c_c.dot(&x_c);
        let dobj = b.dot(&y);
        let rg = pobj - dobj + kappa;
        let mu = (x_c.dot(&s_c) + tau * kappa) / (nu + 1.0);

        let ax = (&a_f * &x_f + &a_c * &x_c).norm() / tau;
        let aty = sf.a.tr_mul(&y).norm() / tau;
        let pres = rp.norm() / tau / (bnorm + ax);
        let dres = (rd_f.norm_squared() + rd_c.norm_squared()).sqrt() / tau / (cnorm + aty.max(s_c.norm() / tau));
        let gap = (pobj - dobj).abs() / tau / (1.0 + (pobj / tau).abs());
        log::trace!(
            "iter {iter}: pobj {:.10e} dobj {:.10e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {tau:.2e} kappa {kappa:.2e} mu {mu:.2e}",
            pobj / tau,
            dobj / tau
        );
        if pres <= tol && dres <= tol && gap <= tol {
            return finish(SolveStatus::Optimal, &x_f, &x_c, &y, &s_c, tau, iter);
        }
        let metric = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|b| metric < 0.5 * b.0) {
            since_best = 0;
        } else {
            since_best += 1;
        }
        if best.as_ref().is_none_or(|b| metric < b.0) {
            best = Some((metric, x_f.clone(), x_c.clone(), y.clone(), s_c.clone(), tau));
        }
        // dual ray: Aᵀy + s → 0 with bᵀy > 0
        let ynorm = y.norm().max(s_c.norm());
        if dobj > config.infeasibility_threshold * ynorm.max(1e-300) {
            let ray = ((a_f.tr_mul(&y)).norm_squared() + (a_c.tr_mul(&y) + &s_c).norm_squared()).sqrt();
            if ray <= tol * dobj {
                return finish(SolveStatus::Infeasible, &x_f, &x_c, &y, &s_c, 1.0, iter);
            }
        }
        let xnorm = (x_f.norm_squared() + x_c.norm_squared()).sqrt();
        if -pobj > config.infeasibility_threshold * xnorm.max(1e-300) {
            let ray = (&a_f * &x_f + &a_c * &x_c).norm();
            if ray <= tol * -pobj {
                return finish(SolveStatus::Unbounded, &x_f, &x_c, &y, &s_c, 1.0, iter);
            }
        }
        if iter == config.max_iterations {
            fail!(SolveStatus::IterationLimit, iter);
        }
        if since_best >= STAGNATION_ITERS && best.as_ref().is_some_and(|b| b.0 <= relaxed) {
            fail!(SolveStatus::NumericalTrouble, iter);
        }

        let Some(scaling) = cones.scaling(&x_c, &s_c) else {
            log::warn!("lost positive definiteness at iteration {iter}");
            fail!(SolveStatus::NumericalTrouble, iter);
        };
        // G = H⁻¹ A_cᵀ, one column per row of A
        let mut g = DMatrix::zeros(nc, m);
        for i in 0..m {
            let col = scaling.apply_hinv(&cones, &a_c.row(i).transpose());
            g.set_column(i, &col);
        }
        let m_mat = &a_c * &g;
        let Some(kkt) = Kkt::factor(&m_mat, &a_f) else {
            log::warn!("singular Newton system at iteration {iter}");
            fail!(SolveStatus::NumericalTrouble, iter);
        };
        let hc = scaling.apply_hinv(&cones, &c_c);
        let gc = g.tr_mul(&c_c);
        let mut r2 = DVector::zeros(m + nf);
        r2.rows_mut(0, m).copy_from(&(b + &gc));
        r2.rows_mut(m, nf).copy_from(&c_f);
        let Some(u2) = kkt.solve(&r2) else {
            fail!(SolveStatus::NumericalTrouble, iter);
        };
        let dy2 = u2.rows(0, m).into_owned();
        let xf2 = u2.rows(m, nf).into_owned();

        let direction = |sigma: f64, eta: f64, corr: Option<(&Correction, f64)>| -> Option<Direction> {
            let sigma_mu = sigma * mu;
            let rho = scaling.rhs(&cones, sigma_mu, corr.map(|c| c.0));
            let corr_tau = corr.map_or(0.0, |c| c.1);
            let q_c = rho + &rd_c * eta;
            let hq = scaling.apply_hinv(&cones, &q_c);
            let mut r1 = DVector::zeros(m + nf);
            r1.rows_mut(0, m).copy_from(&(-&rp * eta - g.tr_mul(&q_c)));
            r1.rows_mut(m, nf).copy_from(&(-&rd_f * eta));
            let u1 = kkt.solve(&r1)?;
            let dy1 = u1.rows(0, m).into_owned();
            let xf1 = u1.rows(m, nf).into_owned();
            let comp = (sigma_mu - tau * kappa - corr_tau) / tau;
            let num = -eta * rg - gc.dot(&dy1) - c_c.dot(&hq) - c_f.dot(&xf1) + b.dot(&dy1) - comp;
            let den = gc.dot(&dy2) - c_c.dot(&hc) + c_f.dot(&xf2) - b.dot(&dy2) - kappa / tau;
            let dtau = num / den;
            let dy = dy1 + &dy2 * dtau;
            let dx_f = xf1 + &xf2 * dtau;
            let dx_c = &g * &dy + hq - &hc * dtau;
            let ds_c = -&rd_c * eta - a_c.tr_mul(&dy) + &c_c * dtau;
            let dkappa = comp - kappa / tau * dtau;
            let ok = dtau.is_finite() && dx_c.iter().chain(ds_c.iter()).all(|v| v.is_finite());
            ok.then_some(Direction {
                dx_f,
                dx_c,
                dy,
                ds_c,
                dtau,
                dkappa,
            })
        };
        let max_step = |d: &Direction| -> Option<f64> {
            let mut a = cones.max_step(&x_c, &d.dx_c)?.min(cones.max_step(&s_c, &d.ds_c)?);
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            Some(a)
        };

        let dir = if config.predictor_corrector {
            let Some(aff) = direction(0.0, 1.0, None) else {
                fail!(SolveStatus::NumericalTrouble, iter);
            };
            let Some(alpha_aff) = max_step(&aff) else {
                fail!(SolveStatus::NumericalTrouble, iter);
            };
            let sigma = (1.0 - alpha_aff.min(1.0)).powi(3).clamp(0.0, 1.0);
            let corr = scaling_correction(&scaling, &cones, &aff);
            direction(sigma, 1.0 - sigma, Some((&corr, aff.dtau * aff.dkappa)))
        } else {
            direction(0.1, 0.9, None)
        };
        let Some(dir) = dir else {
            fail!(SolveStatus::NumericalTrouble, iter);
        };
        let Some(alpha_max) = max_step(&dir) else {
            fail!(SolveStatus::NumericalTrouble, iter);
        };
        let alpha = (config.step_fraction * alpha_max).min(1.0);
        if alpha < 1e-9 {
            stalls += 1;
            if stalls >= 3 {
                log::warn!("step length collapsed at iteration {iter}");
                fail!(SolveStatus::NumericalTrouble, iter);
            }
        } else {
            stalls = 0;
        }
        x_f += &dir.dx_f * alpha;
        x_c += &dir.dx_c * alpha;
        y += &dir.dy * alpha;
        s_c += &dir.ds_c * alpha;
        tau += dir.dtau * alpha;
        kappa += dir.dkappa * alpha;
    }
    unreachable!("loop returns at max_iterations")
}

fn scaling_correction(scaling: &Scaling, cones: &super::cones::Cones, aff: &Direction) -> Correction {
    scaling.correction(cones, &aff.dx_c, &aff.ds_c)
}
