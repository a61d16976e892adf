//! Removes linearly dependent rows and free columns so the Newton system is
//! nonsingular. An inconsistent dependent row yields a Farkas certificate.

use nalgebra::{DMatrix, DVector};

use super::StandardForm;

const DEP_TOL: f64 = 1e-9;

pub struct Reduced {
    pub form: StandardForm,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Reduced {
    pub fn expand_x(&self, x: &DVector<f64>, ncols: usize) -> DVector<f64> {
        let mut out = DVector::zeros(ncols);
        for (k, &j) in self.cols.iter().enumerate() {
            out[j] = x[k];
        }
        out
    }

    pub fn expand_y(&self, y: &DVector<f64>, nrows: usize) -> DVector<f64> {
        let mut out = DVector::zeros(nrows);
        for (k, &i) in self.rows.iter().enumerate() {
            out[i] = y[k];
        }
        out
    }
}

pub enum Outcome {
    Reduced(Reduced),
    /// Min-form dual ray `y`: `bᵀy > 0`, `Aᵀy = 0`.
    Infeasible(DVector<f64>),
    /// Min-form primal ray over free columns: `Ax = 0`, `cᵀx < 0`.
    Unbounded(DVector<f64>),
}

/// Incremental modified Gram–Schmidt that remembers each orthonormal vector as
/// a combination of the inputs it came from.
struct Orthonormal {
    q: Vec<DVector<f64>>,
    combo: Vec<DVector<f64>>,
    n_inputs: usize,
}

enum Insert {
    Independent,
    /// `input_k − Σ w_i input_i ≈ 0`; the returned vector is that combination
    /// (with coefficient 1 on `input_k`).
    Dependent(DVector<f64>),
}

impl Orthonormal {
    fn new(n_inputs: usize) -> Self {
        Orthonormal {
            q: Vec::new(),
            combo: Vec::new(),
            n_inputs,
        }
    }

    fn insert(&mut self, k: usize, v: &DVector<f64>) -> Insert {
        let mut resid = v.clone();
        let mut combo = DVector::zeros(self.n_inputs);
        combo[k] = 1.0;
        for _pass in 0..2 {
            for (q, c) in self.q.iter().zip(&self.combo) {
                let proj = q.dot(&resid);
                resid.axpy(-proj, q, 1.0);
                combo.axpy(-proj, c, 1.0);
            }
        }
        let norm = resid.norm();
        if norm <= DEP_TOL * v.norm().max(1.0) {
            return Insert::Dependent(combo);
        }
        self.q.push(resid / norm);
        self.combo.push(combo / norm);
        Insert::Independent
    }
}

pub fn presolve(sf: &StandardForm) -> Outcome {
    let m = sf.nrows();
    let ncol = sf.ncols();
    let mut rows = Vec::new();
    let mut ortho = Orthonormal::new(m);
    for r in 0..m {
        let a_r = sf.a.row(r).transpose();
        match ortho.insert(r, &a_r) {
            Insert::Independent => rows.push(r),
            Insert::Dependent(w) => {
                let wb = w.dot(&sf.b);
                let scale = 1.0 + w.iter().zip(sf.b.iter()).map(|(a, b)| (a * b).abs()).sum::<f64>();
                if wb.abs() > 1e-8 * scale {
                    let y = if wb > 0.0 { w } else { -w };
                    log::debug!("row {r} is an inconsistent combination of earlier rows");
                    return Outcome::Infeasible(y);
                }
                log::trace!("dropping dependent row {r}");
            }
        }
    }

    let mut cols = Vec::new();
    let mut col_ortho = Orthonormal::new(sf.nf);
    for j in 0..sf.nf {
        let col: DVector<f64> = DVector::from_iterator(rows.len(), rows.iter().map(|&r| sf.a[(r, j)]));
        match col_ortho.insert(j, &col) {
            Insert::Independent => cols.push(j),
            Insert::Dependent(w) => {
                let wc: f64 = (0..sf.nf).map(|i| w[i] * sf.c[i]).sum();
                if wc.abs() > 1e-8 * (1.0 + sf.c.rows(0, sf.nf).amax()) {
                    let mut x = DVector::zeros(ncol);
                    for i in 0..sf.nf {
                        x[i] = if wc < 0.0 { w[i] } else { -w[i] };
                    }
                    log::debug!("free column {j} gives an improving null direction");
                    return Outcome::Unbounded(x);
                }
                log::trace!("dropping dependent free column {j}");
            }
        }
    }
    let nf = cols.len();
    cols.extend(sf.nf..ncol);

    let a = DMatrix::from_fn(rows.len(), cols.len(), |i, j| sf.a[(rows[i], cols[j])]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&r| sf.b[r]));
    let c = DVector::from_iterator(cols.len(), cols.iter().map(|&j| sf.c[j]));
    let form = StandardForm {
        a,
        b,
        c,
        nf,
        nl: sf.nl,
        psd: sf.psd.clone(),
        block_start: Vec::new(),
        block_kind: Vec::new(),
    };
    Outcome::Reduced(Reduced { form, rows, cols })
}
