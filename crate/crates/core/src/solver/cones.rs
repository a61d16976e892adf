//! Cone bookkeeping for the nonnegative orthant and PSD blocks in scaled
//! vector form, plus Nesterov–Todd scaling.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `svec`: upper triangle row by row, off-diagonals times √2.
pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let p = m.nrows();
    let mut v = DVector::zeros(p * (p + 1) / 2);
    let mut k = 0;
    for i in 0..p {
        for j in i..p {
            v[k] = if i == j {
                m[(i, i)]
            } else {
                SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)])
            };
            k += 1;
        }
    }
    v
}

pub fn smat(v: &DVector<f64>, p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    let mut k = 0;
    for i in 0..p {
        for j in i..p {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                m[(i, j)] = v[k] / SQRT2;
                m[(j, i)] = v[k] / SQRT2;
            }
            k += 1;
        }
    }
    m
}

fn min_eigen(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Layout of the conic part: `nl` orthant entries then the PSD blocks.
#[derive(Clone, Debug)]
pub struct Cones {
    pub nl: usize,
    pub psd: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Cones {
    pub fn new(nl: usize, psd: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(psd.len());
        let mut at = nl;
        for &p in &psd {
            offsets.push(at);
            at += p * (p + 1) / 2;
        }
        Cones {
            nl,
            psd,
            offsets,
            dim: at,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Barrier parameter `ν`.
    pub fn degree(&self) -> usize {
        self.nl + self.psd.iter().sum::<usize>()
    }

    fn blocks(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.psd
            .iter()
            .zip(&self.offsets)
            .map(|(&p, &o)| (p, o, p * (p + 1) / 2))
    }

    pub fn unit(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        e.rows_mut(0, self.nl).fill(1.0);
        for (p, o, dim) in self.blocks() {
            e.rows_mut(o, dim)
                .copy_from(&svec(&DMatrix::identity(p, p)));
        }
        e
    }

    /// How far `v` lies outside the cone (0 when inside).
    pub fn distance_outside(&self, v: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nl {
            worst = worst.max(-v[i]);
        }
        for (p, o, dim) in self.blocks() {
            let m = smat(&v.rows(o, dim).into_owned(), p);
            worst = worst.max(-min_eigen(&m));
        }
        worst
    }

    /// Largest `α` with `v + α dv` in the cone, for `v` in its interior.
    pub fn max_step(&self, v: &DVector<f64>, dv: &DVector<f64>) -> Option<f64> {
        let mut alpha = f64::INFINITY;
        for i in 0..self.nl {
            if dv[i] < 0.0 {
                alpha = alpha.min(-v[i] / dv[i]);
            }
        }
        for (p, o, dim) in self.blocks() {
            let m = smat(&v.rows(o, dim).into_owned(), p);
            let l = m.cholesky()?.l();
            let linv = l.solve_lower_triangular(&DMatrix::identity(p, p))?;
            let d = smat(&dv.rows(o, dim).into_owned(), p);
            let t = &linv * d * linv.transpose();
            let lo = min_eigen(&(0.5 * (&t + t.transpose())));
            if lo < 0.0 {
                alpha = alpha.min(-1.0 / lo);
            }
        }
        Some(alpha)
    }

    pub fn scaling(&self, x: &DVector<f64>, s: &DVector<f64>) -> Option<Scaling> {
        let x_lp: Vec<f64> = x.rows(0, self.nl).iter().copied().collect();
        let s_lp: Vec<f64> = s.rows(0, self.nl).iter().copied().collect();
        let mut psd = Vec::with_capacity(self.psd.len());
        for (p, o, dim) in self.blocks() {
            psd.push(PsdScaling::new(
                &smat(&x.rows(o, dim).into_owned(), p),
                &smat(&s.rows(o, dim).into_owned(), p),
            )?);
        }
        Some(Scaling { x_lp, s_lp, psd })
    }
}

#[derive(Clone, Debug)]
pub struct PsdScaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl PsdScaling {
    /// `X = L₁L₁ᵀ`, `S = L₂L₂ᵀ`, `L₂ᵀL₁ = UΛVᵀ`, `R = L₁VΛ^{-1/2}` so that
    /// `RᵀSR = R⁻¹XR⁻ᵀ = Λ` and `W = RRᵀ`.
    fn new(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Self> {
        let p = x.nrows();
        let l1 = x.clone().cholesky()?.l();
        let l2 = s.clone().cholesky()?.l();
        let svd = (l2.transpose() * &l1).svd(true, true);
        let v = svd.v_t?.transpose();
        let lambda = svd.singular_values;
        if lambda.iter().any(|&l| !(l > 0.0)) {
            return None;
        }
        let inv_sqrt = DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
        let r = &l1 * &v * inv_sqrt;
        let rinv = r.clone().try_inverse()?;
        let w = &r * r.transpose();
        debug_assert_eq!(w.nrows(), p);
        Some(PsdScaling { r, rinv, w, lambda })
    }
}

/// Nesterov–Todd scaling at the current `(x, s)`. The Hessian-like operator
/// `H` satisfies `H(x) = s` and `H⁻¹(v) = WvW` on PSD blocks, `(x/s)·v` on the
/// orthant.
#[derive(Clone, Debug)]
pub struct Scaling {
    x_lp: Vec<f64>,
    s_lp: Vec<f64>,
    psd: Vec<PsdScaling>,
}

impl Scaling {
    pub fn apply_hinv(&self, cones: &Cones, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for i in 0..cones.nl {
            out[i] = self.x_lp[i] / self.s_lp[i] * v[i];
        }
        for ((p, o, dim), sc) in cones.blocks().zip(&self.psd) {
            let m = smat(&v.rows(o, dim).into_owned(), p);
            let wmw = &sc.w * m * &sc.w;
            out.rows_mut(o, dim).copy_from(&svec(&wmw));
        }
        out
    }

    /// Second-order correction `d̃x ∘ d̃s` in the scaled space.
    pub fn correction(&self, cones: &Cones, dx: &DVector<f64>, ds: &DVector<f64>) -> Correction {
        let lp = (0..cones.nl).map(|i| dx[i] * ds[i]).collect();
        let psd = cones
            .blocks()
            .zip(&self.psd)
            .map(|((p, o, dim), sc)| {
                let dxm = smat(&dx.rows(o, dim).into_owned(), p);
                let dsm = smat(&ds.rows(o, dim).into_owned(), p);
                let xt = &sc.rinv * dxm * sc.rinv.transpose();
                let st = sc.r.transpose() * dsm * &sc.r;
                0.5 * (&xt * &st + &st * &xt)
            })
            .collect();
        Correction { lp, psd }
    }

    /// Right-hand side `ρ` of `H dx + ds = ρ` for the centring target `σμ`.
    pub fn rhs(&self, cones: &Cones, sigma_mu: f64, corr: Option<&Correction>) -> DVector<f64> {
        let mut out = DVector::zeros(cones.dim());
        for i in 0..cones.nl {
            let c = corr.map_or(0.0, |c| c.lp[i]);
            out[i] = (sigma_mu - self.x_lp[i] * self.s_lp[i] - c) / self.x_lp[i];
        }
        for (b, ((p, o, dim), sc)) in cones.blocks().zip(&self.psd).enumerate() {
            let mut v = DMatrix::from_diagonal(&sc.lambda.map(|l| sigma_mu - l * l));
            if let Some(c) = corr {
                v -= &c.psd[b];
            }
            let mut rc = DMatrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    rc[(i, j)] = 2.0 * v[(i, j)] / (sc.lambda[i] + sc.lambda[j]);
                }
            }
            let rho = sc.rinv.transpose() * rc * &sc.rinv;
            out.rows_mut(o, dim).copy_from(&svec(&rho));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Correction {
    lp: Vec<f64>,
    psd: Vec<DMatrix<f64>>,
}
