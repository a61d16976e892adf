use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::program::{BlockKind, BlockRole, ConicProgram, Hierarchy, MultiplierLabel};
use crate::error::{Error, Result};
use crate::polycore::{gram_polynomial, Monomial, Polynomial};
use crate::problem::ProblemInstance;
use crate::solver::{BlockValue, SolveResult, SolveStatus};

/// Gram matrix of one SOS multiplier.
#[derive(Clone, Debug, Serialize)]
pub struct GramBlock {
    /// Constraint the SOS term multiplies; `None` for the free term.
    pub constraint: Option<usize>,
    #[serde(serialize_with = "ser_basis")]
    pub basis: Vec<Monomial>,
    #[serde(serialize_with = "ser_matrix")]
    pub matrix: DMatrix<f64>,
}

impl GramBlock {
    pub fn sos(&self, n: usize) -> Polynomial {
        if self.basis.is_empty() {
            return Polynomial::zero(n);
        }
        gram_polynomial(&self.basis, &self.matrix)
    }

    pub fn min_max_eigen(&self) -> (f64, f64) {
        if self.matrix.nrows() == 0 {
            return (0.0, 0.0);
        }
        let e = SymmetricEigen::new(self.matrix.clone()).eigenvalues;
        (e.min(), e.max())
    }
}

fn ser_basis<S: serde::Serializer>(b: &[Monomial], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(b.iter().map(|m| m.exponents().to_vec()))
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()))
}

fn ser_h<S: serde::Serializer>(h: &BTreeMap<usize, Polynomial>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(h.iter().map(|(i, p)| (i, format!("{p:?}"))))
}

/// The data `(t, λ, Q, h)` of a positivity identity `f − t = …`.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub hierarchy: Hierarchy,
    pub d: u32,
    pub k: u32,
    pub t: f64,
    /// Multiplier index (position in `lambda_labels`) to value.
    pub lambda: BTreeMap<usize, f64>,
    pub lambda_labels: Vec<MultiplierLabel>,
    pub gram: Vec<GramBlock>,
    /// `h_i` keyed by variable index.
    #[serde(serialize_with = "ser_h")]
    pub h: BTreeMap<usize, Polynomial>,
    pub bound_original_units: f64,
}

impl Certificate {
    /// Reads the certificate off an optimal solve of `program`.
    pub fn from_solution(program: &ConicProgram, result: &SolveResult, instance: &ProblemInstance) -> Result<Certificate> {
        if result.status != SolveStatus::Optimal {
            return Err(Error::NotCertifiable(format!(
                "solve ended with status {}",
                result.status
            )));
        }
        if result.primal.len() != program.blocks.len() {
            return Err(Error::DimensionMismatch(
                "solution does not match program blocks".into(),
            ));
        }
        let n = instance.nvars();
        let mut cert = Certificate {
            hierarchy: program.hierarchy,
            d: program.d,
            k: program.k,
            t: 0.0,
            lambda: BTreeMap::new(),
            lambda_labels: program.lambda_labels.clone(),
            gram: Vec::new(),
            h: BTreeMap::new(),
            bound_original_units: 0.0,
        };
        for (block, value) in program.blocks.iter().zip(&result.primal) {
            match (&block.role, value) {
                (BlockRole::Bound, BlockValue::Vector(v)) => cert.t = v[0],
                (BlockRole::Multipliers, BlockValue::Vector(v)) => {
                    cert.lambda = v.iter().copied().enumerate().collect();
                }
                (BlockRole::IdealMultiplier { var, basis }, BlockValue::Vector(v)) => {
                    let mut p = Polynomial::zero(n);
                    for (m, c) in basis.iter().zip(v) {
                        p.add_term(m.clone(), *c);
                    }
                    cert.h.insert(*var, p);
                }
                (BlockRole::Gram { constraint, basis }, BlockValue::Matrix(q)) => {
                    cert.gram.push(GramBlock {
                        constraint: *constraint,
                        basis: basis.clone(),
                        matrix: q.clone(),
                    });
                }
                _ => {
                    return Err(Error::DimensionMismatch(format!(
                        "block of kind {:?} has a value of the wrong shape",
                        block.kind
                    )))
                }
            }
            debug_assert!(block.kind != BlockKind::Psd || matches!(value, BlockValue::Matrix(_)));
        }
        cert.bound_original_units = instance.to_original_units(cert.t);
        Ok(cert)
    }

    /// `λ ≥ −1e-9` and every Gram block has
    /// `λ_min ≥ −1e-7 (1 + λ_max)`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if let Some((i, v)) = self.lambda.iter().find(|(_, v)| **v < -1e-9) {
            return Err(format!("lambda[{i}] = {v:e} is negative"));
        }
        for (b, g) in self.gram.iter().enumerate() {
            let (lo, hi) = g.min_max_eigen();
            if lo < -1e-7 * (1.0 + hi.max(0.0)) {
                return Err(format!("gram block {b} has eigenvalue {lo:e}"));
            }
        }
        Ok(())
    }

    /// Free SOS term `σ_0` (zero if absent).
    pub fn sigma0(&self, n: usize) -> Polynomial {
        self.gram
            .iter()
            .filter(|g| g.constraint.is_none())
            .fold(Polynomial::zero(n), |acc, g| acc.add(&g.sos(n)))
    }

    /// Indices of multipliers strictly above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.lambda
            .iter()
            .filter(|(_, v)| **v > threshold)
            .map(|(i, _)| *i)
            .collect()
    }
}
