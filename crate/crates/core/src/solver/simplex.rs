//! Dense two-phase tableau simplex with Bland's rule. Only meant as an
//! independent check on small LPs.

use std::time::Instant;

use super::{BlockValue, Ray, Residuals, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::relax::{BlockKind, ConicProgram};

pub const REFERENCE_CAP: usize = 200;
const EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

enum Phase {
    Optimal,
    Unbounded(usize),
    PivotLimit,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        cost[j]
            - self
                .basis
                .iter()
                .zip(&self.t)
                .map(|(&b, row)| cost[b] * row[j])
                .sum::<f64>()
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.t)
            .map(|(&b, row)| cost[b] * row[self.cols])
            .sum()
    }

    /// Minimizes `cost` over columns `< allowed`.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Phase {
        for _ in 0..MAX_PIVOTS {
            let Some(enter) = (0..allowed).find(|&j| self.reduced_cost(cost, j) < -EPS) else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[enter] > EPS {
                    let ratio = row[self.cols] / row[enter];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Phase::Unbounded(enter),
            }
        }
        Phase::PivotLimit
    }
}

/// Column of the split problem: program block, entry and sign.
#[derive(Clone, Copy)]
struct Col {
    block: usize,
    index: usize,
    sign: f64,
}

/// Solves an LP-form `program` (no PSD blocks) with a dense simplex. Free
/// variables are split into two nonnegative parts.
pub fn solve_lp_reference(program: &ConicProgram) -> Result<SolveResult> {
    let start = Instant::now();
    if program.has_psd() {
        return Err(Error::InvalidInstance(
            "the reference simplex handles programs without PSD blocks only".into(),
        ));
    }
    let nvars = program.num_scalar_vars();
    if nvars > REFERENCE_CAP {
        return Err(Error::SizeCap(nvars));
    }
    program.validate().map_err(Error::InvalidInstance)?;

    let mut cols = Vec::new();
    let mut first_col = Vec::new();
    for (bi, b) in program.blocks.iter().enumerate() {
        first_col.push(cols.len());
        for index in 0..b.size {
            cols.push(Col { block: bi, index, sign: 1.0 });
            if b.kind == BlockKind::Free {
                cols.push(Col { block: bi, index, sign: -1.0 });
            }
        }
    }
    let nz = cols.len();
    let m = program.num_rows();
    let width = nz + m;
    let mut sign = vec![1.0; m];
    let mut t = vec![vec![0.0; width + 1]; m];
    for (r, row) in program.rows.iter().enumerate() {
        let flip = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        sign[r] = flip;
        for e in &row.entries {
            for (j, col) in cols.iter().enumerate() {
                if col.block == e.block && col.index == e.index {
                    t[r][j] += flip * col.sign * e.value;
                }
            }
        }
        t[r][nz + r] = 1.0;
        t[r][width] = flip * row.rhs;
    }
    let mut tab = Tableau {
        t,
        basis: (nz..nz + m).collect(),
        cols: width,
    };

    let mut phase1 = vec![0.0; width];
    phase1[nz..].fill(1.0);
    let mut pivots_ok = !matches!(tab.run(&phase1, width), Phase::PivotLimit);
    let bnorm: f64 = program.rows.iter().map(|r| r.rhs.abs()).sum();
    let infeasibility = tab.objective(&phase1);

    let finish = |status, primal: Vec<BlockValue>, objective, dual: Vec<f64>, ray| SolveResult {
        status,
        objective,
        dual_objective: objective,
        primal,
        dual,
        residuals: Residuals::default(),
        iterations: 0,
        time_ms: start.elapsed().as_millis() as u64,
        ray,
        ray_violation: None,
    };
    let values = |z: &[f64]| -> Vec<BlockValue> {
        program
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, b)| {
                let mut v = vec![0.0; b.size];
                for (j, col) in cols.iter().enumerate().skip(first_col[bi]) {
                    if col.block != bi {
                        break;
                    }
                    v[col.index] += col.sign * z[j];
                }
                BlockValue::Vector(v)
            })
            .collect()
    };

    if pivots_ok && infeasibility > 1e-9 * (1.0 + bnorm) {
        // phase-one duals certify infeasibility
        let y: Vec<f64> = (0..m)
            .map(|r| {
                let w: f64 = tab
                    .basis
                    .iter()
                    .zip(&tab.t)
                    .map(|(&b, row)| phase1[b] * row[nz + r])
                    .sum();
                -w * sign[r]
            })
            .collect();
        return Ok(finish(
            SolveStatus::Infeasible,
            values(&vec![0.0; nz]),
            f64::NEG_INFINITY,
            vec![0.0; m],
            Some(Ray::Dual(y)),
        ));
    }

    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= nz {
            if let Some(j) = (0..nz).find(|&j| tab.t[r][j].abs() > EPS) {
                tab.pivot(r, j);
            }
        }
    }

    let mut cost = vec![0.0; width];
    for (j, col) in cols.iter().enumerate() {
        cost[j] = -program.blocks[col.block].cost[col.index] * col.sign;
    }
    let phase2 = tab.run(&cost, nz);
    pivots_ok &= !matches!(phase2, Phase::PivotLimit);
    if !pivots_ok {
        return Ok(finish(
            SolveStatus::IterationLimit,
            values(&vec![0.0; nz]),
            f64::NAN,
            vec![0.0; m],
            None,
        ));
    }
    if let Phase::Unbounded(enter) = phase2 {
        let mut z = vec![0.0; nz];
        z[enter] = 1.0;
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < nz {
                z[b] = -tab.t[r][enter];
            }
        }
        return Ok(finish(
            SolveStatus::Unbounded,
            values(&vec![0.0; nz]),
            f64::INFINITY,
            vec![0.0; m],
            Some(Ray::Primal(values(&z))),
        ));
    }

    let mut z = vec![0.0; nz];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < nz {
            z[b] = tab.t[r][width];
        }
    }
    let dual: Vec<f64> = (0..m)
        .map(|r| {
            let y: f64 = tab
                .basis
                .iter()
                .zip(&tab.t)
                .map(|(&b, row)| cost[b] * row[nz + r])
                .sum();
            -y * sign[r]
        })
        .collect();
    let objective = -tab.objective(&cost);
    let mut result = finish(SolveStatus::Optimal, values(&z), objective, dual, None);
    let resid: f64 = program
        .rows
        .iter()
        .map(|row| {
            let lhs: f64 = row
                .entries
                .iter()
                .map(|e| match &result.primal[e.block] {
                    BlockValue::Vector(v) => e.value * v[e.index],
                    BlockValue::Matrix(_) => 0.0,
                })
                .sum();
            (lhs - row.rhs).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    result.residuals.primal = resid / (1.0 + bnorm);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::Monomial;
    use crate::relax::{BlockRole, Entry};

    fn tiny(rhs: &[f64], coeffs: &[&[(usize, usize, f64)]]) -> ConicProgram {
        let mut p = ConicProgram::new(crate::relax::Hierarchy::Lp, 1, 0);
        let t = p.add_block(BlockKind::Free, BlockRole::Bound, 1);
        p.blocks[t].cost[0] = 1.0;
        p.add_block(BlockKind::Nonneg, BlockRole::Multipliers, 2);
        for (r, row) in coeffs.iter().enumerate() {
            let entries = row
                .iter()
                .map(|&(block, index, value)| Entry { block, index, value })
                .collect();
            p.add_row(Monomial::new(vec![r as u32]), rhs[r], entries);
        }
        p
    }

    #[test]
    fn small_lp() {
        // max t s.t. t + l0 = 1, l0 - l1 = -0.5: l0 = 0, l1 = 0.5 gives t = 1
        let p = tiny(&[1.0, -0.5], &[&[(0, 0, 1.0), (1, 0, 1.0)], &[(1, 0, 1.0), (1, 1, -1.0)]]);
        let r = solve_lp_reference(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_lp() {
        // l0 + l1 = -1 with l ≥ 0
        let p = tiny(&[0.0, -1.0], &[&[(0, 0, 1.0)], &[(1, 0, 1.0), (1, 1, 1.0)]]);
        let r = solve_lp_reference(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        // t - l0 = 0
        let p = tiny(&[0.0], &[&[(0, 0, 1.0), (1, 0, -1.0)]]);
        let r = solve_lp_reference(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn size_cap() {
        let mut p = ConicProgram::new(crate::relax::Hierarchy::Lp, 1, 0);
        p.add_block(BlockKind::Nonneg, BlockRole::Multipliers, REFERENCE_CAP + 1);
        assert!(matches!(solve_lp_reference(&p), Err(Error::SizeCap(_))));
    }
}
