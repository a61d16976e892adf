//! Relaxation builders. Each one matches `f − t` against a positivity
//! certificate coefficient by coefficient and emits the resulting
//! [`ConicProgram`].

mod certificate;
mod program;

pub use certificate::{Certificate, GramBlock};
pub use program::{
    tri_index, tri_pair, Block, BlockKind, BlockRole, ConicProgram, Entry, Hierarchy,
    MultiplierLabel, Row,
};

use std::collections::BTreeMap;

use log::warn;

use crate::error::{Error, Result};
use crate::polycore::{binomial, gram_basis, mono_index_set, Monomial, Polynomial};
use crate::problem::{lift_products, ProblemInstance};

/// Accumulates sparse row coefficients keyed by monomial.
struct RowAssembler {
    index: BTreeMap<Monomial, usize>,
    rows: Vec<BTreeMap<(usize, usize), f64>>,
    rhs: Vec<f64>,
    monomials: Vec<Monomial>,
}

impl RowAssembler {
    fn new(n: usize, s: u32, target: &Polynomial) -> Self {
        let monomials = mono_index_set(n, s);
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let rhs = monomials.iter().map(|m| target.coeff(m)).collect();
        RowAssembler {
            index,
            rows: vec![BTreeMap::new(); monomials.len()],
            rhs,
            monomials,
        }
    }

    fn add(&mut self, m: &Monomial, block: usize, idx: usize, value: f64) {
        let r = *self
            .index
            .get(m)
            .unwrap_or_else(|| panic!("monomial {m} exceeds the degree budget"));
        *self.rows[r].entry((block, idx)).or_insert(0.0) += value;
    }

    fn add_poly(&mut self, p: &Polynomial, block: usize, idx: usize) {
        for (m, c) in p.terms() {
            self.add(m, block, idx, c);
        }
    }

    /// Wires `v(x)ᵀ Q v(x) · mult(x)` into the rows for Gram block `block`.
    fn add_gram(&mut self, basis: &[Monomial], mult: &Polynomial, block: usize) {
        let s = basis.len();
        for a in 0..s {
            for b in a..s {
                let vab = basis[a].mul(&basis[b]);
                for (m, c) in mult.terms() {
                    self.add(&vab.mul(m), block, tri_index(s, a, b), c);
                }
            }
        }
    }

    fn finish(self, program: &mut ConicProgram) {
        for ((m, rhs), coeffs) in self.monomials.into_iter().zip(self.rhs).zip(self.rows) {
            let entries = coeffs
                .into_iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|((block, index), value)| Entry {
                    block,
                    index,
                    value,
                })
                .collect();
            program.add_row(m, rhs, entries);
        }
    }
}

fn require_normalized(instance: &ProblemInstance) -> Result<()> {
    if instance.normalized {
        Ok(())
    } else {
        Err(Error::NotNormalized)
    }
}

fn require_level(d: u32) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidLevel("relaxation level must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Degree budget `max(deg f, d·max_j deg g_j)` of the LP-type builders.
pub fn lp_degree_budget(instance: &ProblemInstance, d: u32) -> u32 {
    instance
        .objective
        .degree()
        .max(d * instance.max_constraint_degree())
}

fn add_bound_block(program: &mut ConicProgram) -> usize {
    let t = program.add_block(BlockKind::Free, BlockRole::Bound, 1);
    program.blocks[t].cost[0] = 1.0;
    t
}

fn clamp_k(k: u32, s: u32) -> u32 {
    if 2 * k > s {
        let kk = s / 2;
        warn!("k = {k} exceeds half the degree budget {s}; using k = {kk}");
        kk
    } else {
        k
    }
}

fn lift_program(instance: &ProblemInstance, d: u32, hierarchy: Hierarchy, k: u32) -> Result<(ConicProgram, RowAssembler)> {
    require_normalized(instance)?;
    require_level(d)?;
    let n = instance.nvars();
    let lift = lift_products(instance, d)?;
    let s = lp_degree_budget(instance, d).max(2 * k);
    let mut program = ConicProgram::new(hierarchy, d, k);
    program.degree_budget = s;
    let t = add_bound_block(&mut program);
    let lam = program.add_block(BlockKind::Nonneg, BlockRole::Multipliers, lift.len());
    let mut rows = RowAssembler::new(n, s, &instance.objective);
    rows.add(&Monomial::one(n), t, 0, 1.0);
    for (i, pair) in lift.pairs.iter().enumerate() {
        rows.add_poly(&pair.poly, lam, i);
        program.lambda_labels.push(MultiplierLabel::Pair {
            alpha: pair.alpha.clone(),
            beta: pair.beta.clone(),
        });
    }
    Ok((program, rows))
}

/// `θ_d = max t  s.t.  f − t = Σ λ_{αβ} p_{αβ},  λ ≥ 0`.
pub fn build_lp(instance: &ProblemInstance, d: u32) -> Result<ConicProgram> {
    let (mut program, rows) = lift_program(instance, d, Hierarchy::Lp, 0)?;
    rows.finish(&mut program);
    Ok(program)
}

/// `q^k_d = max t  s.t.  f − t − Σ λ_{αβ} p_{αβ} = v_k(x)ᵀ Q v_k(x),  λ ≥ 0,
/// Q ⪰ 0`. `Q` has order `C(n+k, n)` at every level `d`.
pub fn build_bsos(instance: &ProblemInstance, d: u32, k: u32) -> Result<ConicProgram> {
    require_normalized(instance)?;
    require_level(d)?;
    let k = clamp_k(k, lp_degree_budget(instance, d));
    let (mut program, mut rows) = lift_program(instance, d, Hierarchy::Bsos, k)?;
    let n = instance.nvars();
    let gb = gram_basis(n, k);
    let q = program.add_block(
        BlockKind::Psd,
        BlockRole::Gram {
            constraint: None,
            basis: gb.basis.clone(),
        },
        gb.basis_size(),
    );
    rows.add_gram(&gb.basis, &Polynomial::one(n), q);
    rows.finish(&mut program);
    Ok(program)
}

fn half_ceil(x: u32) -> u32 {
    x.div_ceil(2)
}

/// `γ_d = max t  s.t.  f − t = σ_0 + Σ_j σ_j g_j` with `deg σ_j g_j ≤ 2d`.
/// Binary variables additionally get free multipliers `h_i` on
/// `x_i(1 − x_i)` with `deg h_i ≤ 2d − 2`.
pub fn build_putinar(instance: &ProblemInstance, d: u32) -> Result<ConicProgram> {
    require_normalized(instance)?;
    require_level(d)?;
    let n = instance.nvars();
    let floor_f = half_ceil(instance.objective.degree());
    let floor_g = half_ceil(instance.max_constraint_degree());
    if d < floor_f || d < floor_g {
        return Err(Error::InvalidLevel(format!(
            "Putinar level {d} is below the degree floor {}",
            floor_f.max(floor_g)
        )));
    }
    let s = 2 * d;
    let mut program = ConicProgram::new(Hierarchy::Putinar, d, 0);
    program.degree_budget = s;
    let t = add_bound_block(&mut program);
    let mut rows = RowAssembler::new(n, s, &instance.objective);
    rows.add(&Monomial::one(n), t, 0, 1.0);

    let one = Polynomial::one(n);
    let sigma = |program: &mut ConicProgram, rows: &mut RowAssembler, j: Option<usize>, mult: &Polynomial| {
        let half = d - half_ceil(mult.degree());
        let basis = mono_index_set(n, half);
        let b = program.add_block(
            BlockKind::Psd,
            BlockRole::Gram {
                constraint: j,
                basis: basis.clone(),
            },
            basis.len(),
        );
        rows.add_gram(&basis, mult, b);
    };
    sigma(&mut program, &mut rows, None, &one);
    for (j, g) in instance.constraints.iter().enumerate() {
        sigma(&mut program, &mut rows, Some(j), g);
    }
    add_ideal_blocks(&mut program, &mut rows, instance, 2 * d - 2);
    rows.finish(&mut program);
    Ok(program)
}

fn add_ideal_blocks(program: &mut ConicProgram, rows: &mut RowAssembler, instance: &ProblemInstance, deg: u32) {
    let n = instance.nvars();
    for i in instance.binary_vars() {
        let basis = mono_index_set(n, deg);
        let gen = binary_generator(n, i);
        let b = program.add_block(
            BlockKind::Free,
            BlockRole::IdealMultiplier {
                var: i,
                basis: basis.clone(),
            },
            basis.len(),
        );
        for (idx, m) in basis.iter().enumerate() {
            rows.add_poly(&gen.mul(&Polynomial::monomial(m.clone(), 1.0)), b, idx);
        }
    }
}

/// `x_i(1 − x_i)`.
pub fn binary_generator(n: usize, i: usize) -> Polynomial {
    let xi = Polynomial::var(n, i);
    xi.sub(&xi.pow(2))
}

/// The `g_ℓ` used by the RLT builders: every constraint that is not one of
/// the box faces `x_i`, `1 − x_i`.
pub fn rlt_constraints(instance: &ProblemInstance) -> Vec<Polynomial> {
    instance
        .constraints
        .iter()
        .filter(|g| ProblemInstance::box_face(g).is_none())
        .cloned()
        .collect()
}

/// RLT multiplier labels: `ℓ ∈ 0..=m`, disjoint `I, J ⊆ {0..n-1}` with
/// `|I ∪ J| ≤ d`, excluding the unit `(0, ∅, ∅)`.
pub fn rlt_labels(n: usize, m: usize, d: u32) -> Vec<MultiplierLabel> {
    let mut unions: Vec<Vec<usize>> = Vec::new();
    for size in 0..=(d as usize).min(n) {
        combinations(n, size, &mut unions);
    }
    let mut out = Vec::new();
    for ell in 0..=m {
        for u in &unions {
            for mask in 0..(1usize << u.len()) {
                if ell == 0 && u.is_empty() {
                    continue;
                }
                // bit set => index goes to J
                let i_set: Vec<usize> = u
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) == 0)
                    .map(|(_, &v)| v)
                    .collect();
                let j_set: Vec<usize> = u
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                out.push(MultiplierLabel::Rlt { ell, i_set, j_set });
            }
        }
    }
    out
}

fn combinations(n: usize, size: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut Vec::new(), out);
}

/// `g_ℓ Π_{i∈I} x_i Π_{j∈J} (1 − x_j)` with `g_0 = 1`.
pub fn rlt_product(n: usize, g: &[Polynomial], ell: usize, i_set: &[usize], j_set: &[usize]) -> Polynomial {
    let mut p = if ell == 0 {
        Polynomial::one(n)
    } else {
        g[ell - 1].clone()
    };
    for &i in i_set {
        p = p.mul(&Polynomial::var(n, i));
    }
    for &j in j_set {
        p = p.mul(&Polynomial::one(n).sub(&Polynomial::var(n, j)));
    }
    p
}

fn require_binary_affine(instance: &ProblemInstance) -> Result<Vec<Polynomial>> {
    require_normalized(instance)?;
    if !instance.is_all_binary() {
        return Err(Error::InvalidInstance(
            "0/1 builders need every variable binary".into(),
        ));
    }
    let g = rlt_constraints(instance);
    if g.iter().any(|gl| gl.degree() > 1) {
        return Err(Error::InvalidInstance(
            "0/1 builders need affine constraints".into(),
        ));
    }
    Ok(g)
}

fn rlt_program(instance: &ProblemInstance, d: u32, hierarchy: Hierarchy, k: u32) -> Result<(ConicProgram, RowAssembler)> {
    let g = require_binary_affine(instance)?;
    require_level(d)?;
    let n = instance.nvars();
    let s = instance.objective.degree().max(d + 1).max(2 * k);
    let mut program = ConicProgram::new(hierarchy, d, k);
    program.degree_budget = s;
    let t = add_bound_block(&mut program);
    let labels = rlt_labels(n, g.len(), d);
    let lam = program.add_block(BlockKind::Nonneg, BlockRole::Multipliers, labels.len());
    let mut rows = RowAssembler::new(n, s, &instance.objective);
    rows.add(&Monomial::one(n), t, 0, 1.0);
    for (idx, label) in labels.iter().enumerate() {
        if let MultiplierLabel::Rlt { ell, i_set, j_set } = label {
            rows.add_poly(&rlt_product(n, &g, *ell, i_set, j_set), lam, idx);
        }
    }
    program.lambda_labels = labels;
    add_ideal_blocks(&mut program, &mut rows, instance, d - 1);
    Ok((program, rows))
}

/// Sherali–Adams RLT at level `d`: products of single constraints `g_ℓ` with
/// `Π x_i Π (1 − x_j)`, plus free `h_i ∈ ℝ[x]_{d−1}` on `x_i(1 − x_i)`.
/// Products between distinct `g_ℓ` are not generated.
pub fn build_rlt01(instance: &ProblemInstance, d: u32) -> Result<ConicProgram> {
    let (mut program, rows) = rlt_program(instance, d, Hierarchy::Rlt01, 0)?;
    rows.finish(&mut program);
    Ok(program)
}

/// RLT program plus one SOS block of order `C(n+k, n)`.
pub fn build_bsos01(instance: &ProblemInstance, d: u32, k: u32) -> Result<ConicProgram> {
    require_binary_affine(instance)?;
    require_level(d)?;
    let k = clamp_k(k, instance.objective.degree().max(d + 1));
    let (mut program, mut rows) = rlt_program(instance, d, Hierarchy::Bsos01, k)?;
    let n = instance.nvars();
    let gb = gram_basis(n, k);
    let q = program.add_block(
        BlockKind::Psd,
        BlockRole::Gram {
            constraint: None,
            basis: gb.basis.clone(),
        },
        gb.basis_size(),
    );
    rows.add_gram(&gb.basis, &Polynomial::one(n), q);
    rows.finish(&mut program);
    Ok(program)
}

/// `max t  s.t.  p − t = v_k(x)ᵀ Q v_k(x)`: the degree-`2k` SOS lower bound
/// of a fixed polynomial over `ℝⁿ`.
pub fn build_sos_bound(p: &Polynomial, k: u32) -> ConicProgram {
    let n = p.nvars();
    let s = p.degree().max(2 * k);
    let mut program = ConicProgram::new(Hierarchy::Sos, 0, k);
    program.degree_budget = s;
    let t = add_bound_block(&mut program);
    let mut rows = RowAssembler::new(n, s, p);
    rows.add(&Monomial::one(n), t, 0, 1.0);
    let gb = gram_basis(n, k);
    let q = program.add_block(
        BlockKind::Psd,
        BlockRole::Gram {
            constraint: None,
            basis: gb.basis.clone(),
        },
        gb.basis_size(),
    );
    rows.add_gram(&gb.basis, &Polynomial::one(n), q);
    rows.finish(&mut program);
    program
}

/// Dispatches on the hierarchy tag. `k` is ignored by the hierarchies that do
/// not take it.
pub fn build(instance: &ProblemInstance, hierarchy: Hierarchy, d: u32, k: u32) -> Result<ConicProgram> {
    match hierarchy {
        Hierarchy::Lp => build_lp(instance, d),
        Hierarchy::Bsos => build_bsos(instance, d, k),
        Hierarchy::Putinar => build_putinar(instance, d),
        Hierarchy::Rlt01 => build_rlt01(instance, d),
        Hierarchy::Bsos01 => build_bsos01(instance, d, k),
        Hierarchy::Sos => Ok(build_sos_bound(&instance.objective, k)),
    }
}

/// Order of the single PSD block of `build_bsos` / `build_bsos01`.
pub fn bsos_block_order(n: usize, k: u32) -> usize {
    binomial(n + k as usize, n)
}
