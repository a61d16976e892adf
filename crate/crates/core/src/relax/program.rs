use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::polycore::Monomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hierarchy {
    /// Krivine–Stengle LP, value `θ_d`.
    Lp,
    /// LP products plus one degree-`2k` SOS block, value `q^k_d`.
    Bsos,
    /// Putinar SOS hierarchy, value `γ_d`.
    Putinar,
    /// Sherali–Adams RLT for 0/1 programs.
    Rlt01,
    /// RLT plus one SOS block.
    Bsos01,
    /// Plain SOS lower bound of a fixed polynomial.
    Sos,
}

impl Hierarchy {
    pub fn tag(self) -> &'static str {
        match self {
            Hierarchy::Lp => "lp",
            Hierarchy::Bsos => "bsos",
            Hierarchy::Putinar => "putinar",
            Hierarchy::Rlt01 => "rlt01",
            Hierarchy::Bsos01 => "bsos01",
            Hierarchy::Sos => "sos",
        }
    }

    /// Whether the hierarchy takes the SOS degree parameter `k`.
    pub fn uses_k(self) -> bool {
        matches!(self, Hierarchy::Bsos | Hierarchy::Bsos01 | Hierarchy::Sos)
    }
}

impl fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Hierarchy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "lp" => Ok(Hierarchy::Lp),
            "bsos" => Ok(Hierarchy::Bsos),
            "putinar" => Ok(Hierarchy::Putinar),
            "rlt01" => Ok(Hierarchy::Rlt01),
            "bsos01" => Ok(Hierarchy::Bsos01),
            "sos" => Ok(Hierarchy::Sos),
            other => Err(format!("unknown hierarchy '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Free,
    Nonneg,
    /// Symmetric PSD matrix; the block's `size` is the matrix order.
    Psd,
}

/// What a variable block means in the positivity identity.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockRole {
    /// The scalar bound `t`.
    Bound,
    /// Nonnegative multipliers, labelled by `ConicProgram::lambda_labels`.
    Multipliers,
    /// Coefficients of `h_i` multiplying `x_i(1 − x_i)`, over `basis`.
    IdealMultiplier { var: usize, basis: Vec<Monomial> },
    /// Gram matrix of an SOS multiplier of constraint `constraint`
    /// (`None` for the free SOS term), over `basis`.
    Gram {
        constraint: Option<usize>,
        basis: Vec<Monomial>,
    },
}

#[derive(Clone, Debug)]
pub struct Block {
    pub kind: BlockKind,
    pub role: BlockRole,
    pub size: usize,
    /// Objective coefficients, one per entry of `dim()`. For PSD blocks the
    /// entries follow the upper triangle row by row, each weight applying to
    /// both `X_ij` and `X_ji`.
    pub cost: Vec<f64>,
}

impl Block {
    pub fn dim(&self) -> usize {
        match self.kind {
            BlockKind::Psd => self.size * (self.size + 1) / 2,
            _ => self.size,
        }
    }
}

/// Position of `(i, j)`, `i ≤ j`, in the row-major upper triangle of an
/// order-`n` matrix.
pub fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Inverse of [`tri_index`].
pub fn tri_pair(n: usize, idx: usize) -> (usize, usize) {
    let mut i = 0;
    let mut start = 0;
    loop {
        let len = n - i;
        if idx < start + len {
            return (i, i + idx - start);
        }
        start += len;
        i += 1;
    }
}

/// Label of one nonnegative multiplier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplierLabel {
    /// `Π g_j^{α_j} (1 − g_j)^{β_j}`.
    Pair { alpha: Vec<u32>, beta: Vec<u32> },
    /// `g_ℓ Π_{i∈I} x_i Π_{j∈J} (1 − x_j)`; `ell = 0` is the unit.
    Rlt {
        ell: usize,
        i_set: Vec<usize>,
        j_set: Vec<usize>,
    },
}

impl fmt::Display for MultiplierLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierLabel::Pair { alpha, beta } => write!(f, "a{alpha:?}b{beta:?}"),
            MultiplierLabel::Rlt { ell, i_set, j_set } => {
                write!(f, "g{ell}I{i_set:?}J{j_set:?}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub index: usize,
    pub value: f64,
}

/// One equality: `Σ entries = rhs`, labelled by the monomial it matches.
#[derive(Clone, Debug)]
pub struct Row {
    pub monomial: Monomial,
    pub rhs: f64,
    pub entries: Vec<Entry>,
}

/// `maximize cost·x  s.t.  rows,  x ∈ free × ℝ₊ × PSD`.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub hierarchy: Hierarchy,
    pub d: u32,
    pub k: u32,
    pub degree_budget: u32,
    pub blocks: Vec<Block>,
    pub rows: Vec<Row>,
    pub lambda_labels: Vec<MultiplierLabel>,
}

impl ConicProgram {
    pub fn new(hierarchy: Hierarchy, d: u32, k: u32) -> Self {
        ConicProgram {
            hierarchy,
            d,
            k,
            degree_budget: 0,
            blocks: Vec::new(),
            rows: Vec::new(),
            lambda_labels: Vec::new(),
        }
    }

    pub fn add_block(&mut self, kind: BlockKind, role: BlockRole, size: usize) -> usize {
        let mut b = Block {
            kind,
            role,
            size,
            cost: Vec::new(),
        };
        b.cost = vec![0.0; b.dim()];
        self.blocks.push(b);
        self.blocks.len() - 1
    }

    pub fn add_row(&mut self, monomial: Monomial, rhs: f64, entries: Vec<Entry>) -> usize {
        self.rows.push(Row {
            monomial,
            rhs,
            entries,
        });
        self.rows.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_scalar_vars(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    pub fn psd_sizes(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Psd)
            .map(|b| b.size)
            .collect()
    }

    pub fn has_psd(&self) -> bool {
        self.blocks.iter().any(|b| b.kind == BlockKind::Psd)
    }

    pub fn block_with_role(&self, pred: impl Fn(&BlockRole) -> bool) -> Option<usize> {
        self.blocks.iter().position(|b| pred(&b.role))
    }

    /// Checks block/entry consistency.
    pub fn validate(&self) -> Result<(), String> {
        for (r, row) in self.rows.iter().enumerate() {
            for e in &row.entries {
                let b = self
                    .blocks
                    .get(e.block)
                    .ok_or_else(|| format!("row {r}: block {} out of range", e.block))?;
                if e.index >= b.dim() {
                    return Err(format!(
                        "row {r}: index {} out of range for block {} of dim {}",
                        e.index,
                        e.block,
                        b.dim()
                    ));
                }
                if !e.value.is_finite() {
                    return Err(format!("row {r}: non-finite coefficient"));
                }
            }
            if !row.rhs.is_finite() {
                return Err(format!("row {r}: non-finite right-hand side"));
            }
        }
        Ok(())
    }

    /// Canonical text dump: a header, then one line per row with its monomial,
    /// right-hand side and sparse coefficients grouped by block.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# {} d={} k={} s={} rows={}",
            self.hierarchy,
            self.d,
            self.k,
            self.degree_budget,
            self.rows.len()
        )
        .unwrap();
        for (i, b) in self.blocks.iter().enumerate() {
            let kind = match b.kind {
                BlockKind::Free => "free",
                BlockKind::Nonneg => "nonneg",
                BlockKind::Psd => "psd",
            };
            let cost: Vec<String> = b
                .cost
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| format!("{j}:{c}"))
                .collect();
            writeln!(out, "# block {i} {kind} {} cost [{}]", b.size, cost.join(" ")).unwrap();
        }
        for row in &self.rows {
            let mut by_block: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            for e in &row.entries {
                by_block.entry(e.block).or_default().push((e.index, e.value));
            }
            write!(out, "{} = {}", row.monomial, row.rhs).unwrap();
            for (b, mut es) in by_block {
                es.sort_by_key(|&(i, _)| i);
                write!(out, " | {b}:").unwrap();
                for (i, v) in es {
                    if self.blocks[b].kind == BlockKind::Psd {
                        let (r, c) = tri_pair(self.blocks[b].size, i);
                        write!(out, " ({r},{c})={v}").unwrap();
                    } else {
                        write!(out, " {i}={v}").unwrap();
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}
