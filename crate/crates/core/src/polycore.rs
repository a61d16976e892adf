//! Sparse multivariate polynomials over `f64`, monomial index sets and the
//! Gram-basis matrices used to wire sum-of-squares blocks into linear rows.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Coefficients with absolute value below this are dropped.
pub const ZERO_THRESHOLD: f64 = 1e-14;

/// Exponent vector `α ∈ ℕⁿ`.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// vectors compared lexicographically, so `(0,1) < (1,0) < (0,2) < (1,1)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    /// The monomial `x_i`.
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut e = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if b > a {
                return None;
            }
            e.push(a - b);
        }
        Some(Monomial(e))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// All exponent vectors of length `n` and total degree at most `d`, in
/// graded-lex order. There are `C(n+d, d)` of them.
pub fn mono_index_set(n: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(binomial(n + d as usize, d as usize));
    for deg in 0..=d {
        let mut cur = vec![0u32; n];
        exact_degree(n, 0, deg, &mut cur, &mut out);
    }
    out
}

// Enumerates exponent vectors of exact degree `left` over positions `pos..n`
// in lexicographically increasing order.
fn exact_degree(n: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if n == 0 {
        if left == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left;
        out.push(Monomial(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in 0..=left {
        cur[pos] = e;
        exact_degree(n, pos + 1, left - e, cur, out);
    }
    cur[pos] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Sparse polynomial in `n` variables with real coefficients.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(Monomial::one(n), c)
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, 1.0)
    }

    /// The polynomial `x_i`.
    pub fn var(n: usize, i: usize) -> Self {
        Self::monomial(Monomial::var(n, i), 1.0)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let n = m.nvars();
        let mut p = Polynomial::zero(n);
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Polynomial::zero(n);
        for (e, c) in terms {
            assert_eq!(e.len(), n, "exponent vector length mismatch");
            p.add_term(Monomial(e), c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Monomial::one(self.n))
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    /// Adds `c·m` in place, pruning the result if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        assert_eq!(m.nvars(), self.n, "variable count mismatch");
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().abs() < ZERO_THRESHOLD {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c.abs() >= ZERO_THRESHOLD {
                    v.insert(c);
                }
            }
        }
    }

    fn check_n(&self, other: &Polynomial) {
        assert_eq!(
            self.n, other.n,
            "polynomials over {} and {} variables",
            self.n, other.n
        );
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.check_n(other);
        let mut out = self.terms.clone();
        for (m, &c) in &other.terms {
            *out.entry(m.clone()).or_insert(0.0) += c;
        }
        Self::pruned(self.n, out)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.check_n(other);
        let mut out: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                *out.entry(a.mul(b)).or_insert(0.0) += ca * cb;
            }
        }
        Self::pruned(self.n, out)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        let out = self.terms.iter().map(|(m, &v)| (m.clone(), v * c)).collect();
        Self::pruned(self.n, out)
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.n);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Direct summation of `c·x^α` over the stored terms.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum()
    }

    /// `∂p/∂x_i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = BTreeMap::new();
        for (m, &c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut ex = m.0.clone();
            ex[i] -= 1;
            *out.entry(Monomial(ex)).or_insert(0.0) += c * e as f64;
        }
        Self::pruned(self.n, out)
    }

    /// Substitutes `x_i = shift_i + scale_i·u_i` for every variable.
    pub fn substitute_affine(&self, shift: &[f64], scale: &[f64]) -> Polynomial {
        assert_eq!(shift.len(), self.n);
        assert_eq!(scale.len(), self.n);
        let images: Vec<Polynomial> = (0..self.n)
            .map(|i| {
                Polynomial::constant(self.n, shift[i])
                    .add(&Polynomial::var(self.n, i).scale(scale[i]))
            })
            .collect();
        let mut out = Polynomial::zero(self.n);
        for (m, &c) in &self.terms {
            let mut t = Polynomial::constant(self.n, c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = t.mul(&images[i].pow(e));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Largest absolute coefficient; 0 for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// True when every coefficient of `self - other` is within `tol`.
    pub fn approx_eq(&self, other: &Polynomial, tol: f64) -> bool {
        self.sub(other).max_abs_coeff() <= tol
    }

    fn pruned(n: usize, mut terms: BTreeMap<Monomial, f64>) -> Polynomial {
        terms.retain(|_, c| c.abs() >= ZERO_THRESHOLD);
        Polynomial { n, terms }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*x^{m:?}")?;
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// `Π g_j^{α_j} · Π (1 − g_j)^{β_j}`; the empty product is the constant 1.
pub fn constraint_product(g: &[Polynomial], alpha: &[u32], beta: &[u32]) -> Polynomial {
    assert_eq!(g.len(), alpha.len());
    assert_eq!(g.len(), beta.len());
    let n = g.first().map_or(0, Polynomial::nvars);
    let mut acc = Polynomial::one(n);
    for (j, gj) in g.iter().enumerate() {
        if alpha[j] > 0 {
            acc = acc.mul(&gj.pow(alpha[j]));
        }
        if beta[j] > 0 {
            let comp = Polynomial::one(n).sub(gj);
            acc = acc.mul(&comp.pow(beta[j]));
        }
    }
    acc
}

/// Matrices `B_β` with `v_k(x) v_k(x)ᵀ = Σ_β x^β B_β`, where `v_k` is the
/// graded-lex monomial vector of degree at most `k`.
#[derive(Clone, Debug)]
pub struct GramBasis {
    pub n: usize,
    pub k: u32,
    pub basis: Vec<Monomial>,
    pub matrices: BTreeMap<Monomial, DMatrix<f64>>,
}

impl GramBasis {
    pub fn basis_size(&self) -> usize {
        self.basis.len()
    }

    /// `Σ_{ij} Q_ij x^{basis_i + basis_j}`, i.e. `v_k(x)ᵀ Q v_k(x)`.
    pub fn polynomial(&self, q: &DMatrix<f64>) -> Polynomial {
        gram_polynomial(&self.basis, q)
    }
}

pub fn gram_basis(n: usize, k: u32) -> GramBasis {
    let basis = mono_index_set(n, k);
    let s = basis.len();
    let mut matrices: BTreeMap<Monomial, DMatrix<f64>> = mono_index_set(n, 2 * k)
        .into_iter()
        .map(|m| (m, DMatrix::zeros(s, s)))
        .collect();
    for i in 0..s {
        for j in 0..s {
            let m = basis[i].mul(&basis[j]);
            matrices.get_mut(&m).expect("product degree within 2k")[(i, j)] = 1.0;
        }
    }
    GramBasis {
        n,
        k,
        basis,
        matrices,
    }
}

/// `v(x)ᵀ Q v(x)` for an arbitrary monomial vector `v`.
pub fn gram_polynomial(basis: &[Monomial], q: &DMatrix<f64>) -> Polynomial {
    let n = basis.first().map_or(0, Monomial::nvars);
    let mut out: BTreeMap<Monomial, f64> = BTreeMap::new();
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            *out.entry(basis[i].mul(&basis[j])).or_insert(0.0) += q[(i, j)];
        }
    }
    Polynomial::pruned(n, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn index_set_examples() {
        let s = mono_index_set(1, 2);
        assert_eq!(
            s,
            vec![
                Monomial::new(vec![0]),
                Monomial::new(vec![1]),
                Monomial::new(vec![2])
            ]
        );
        let s = mono_index_set(2, 2);
        assert_eq!(s.len(), 6);
        assert_eq!(s.last().unwrap(), &Monomial::new(vec![2, 0]));
        assert_eq!(s[1], Monomial::new(vec![0, 1]));
        assert_eq!(mono_index_set(3, 2).len(), 10);
    }

    #[test]
    fn index_set_is_sorted_and_counted() {
        for n in 1..=5 {
            for d in 0..=6 {
                let s = mono_index_set(n, d);
                assert_eq!(s.len(), binomial(n + d as usize, d as usize));
                assert!(s.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn arithmetic_examples() {
        let one = Polynomial::one(1);
        let p = x(1, 0).mul(&one.sub(&x(1, 0)));
        let expect = Polynomial::from_terms(1, [(vec![1], 1.0), (vec![2], -1.0)]);
        assert_eq!(p, expect);

        let q = Polynomial::from_terms(2, [(vec![1, 2], 3.5), (vec![0, 0], -1.0)]);
        assert!(q.add(&q.scale(-1.0)).is_zero());

        let sq = Polynomial::from_terms(1, [(vec![2], 4.0), (vec![1], -4.0), (vec![0], 1.0)]);
        assert_eq!(sq.eval(&[0.5]), 0.0);
    }

    #[test]
    fn canonical_zero_pruning() {
        let mut p = Polynomial::constant(1, 1.0);
        p.add_term(Monomial::new(vec![1]), 1e-15);
        assert_eq!(p.num_terms(), 1);
        p.add_term(Monomial::new(vec![0]), -1.0);
        assert!(p.is_zero());
    }

    #[test]
    #[should_panic(expected = "polynomials over")]
    fn mismatched_variable_counts_panic() {
        let _ = x(1, 0).add(&x(2, 0));
    }

    #[test]
    fn constraint_product_examples() {
        let g = [x(1, 0)];
        let p = constraint_product(&g, &[2], &[1]);
        assert_eq!(
            p,
            Polynomial::from_terms(1, [(vec![2], 1.0), (vec![3], -1.0)])
        );

        let g2 = [x(2, 0), x(2, 1)];
        let p = constraint_product(&g2, &[1, 0], &[0, 1]);
        assert_eq!(
            p,
            Polynomial::from_terms(2, [(vec![1, 0], 1.0), (vec![1, 1], -1.0)])
        );

        let p = constraint_product(&g2, &[0, 0], &[0, 0]);
        assert_eq!(p, Polynomial::one(2));
    }

    #[test]
    fn gram_basis_univariate() {
        let gb = gram_basis(1, 1);
        assert_eq!(gb.basis_size(), 2);
        let b = |e: u32| gb.matrices[&Monomial::new(vec![e])].clone();
        assert_eq!(b(0), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(b(1), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(b(2), DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn gram_basis_bivariate_linear_entry() {
        // basis is (1, x2, x1) in graded-lex order
        let gb = gram_basis(2, 1);
        assert_eq!(gb.matrices.len(), binomial(4, 2));
        let b = &gb.matrices[&Monomial::new(vec![1, 0])];
        assert_eq!(b.nrows(), 3);
        let ones: Vec<(usize, usize)> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| b[(i, j)] == 1.0)
            .collect();
        assert_eq!(ones, vec![(0, 2), (2, 0)]);
        assert_eq!(b.sum(), 2.0);
    }

    #[test]
    fn gram_basis_degree_zero() {
        let gb = gram_basis(3, 0);
        assert_eq!(gb.matrices.len(), 1);
        assert_eq!(gb.matrices[&Monomial::one(3)], DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn affine_substitution() {
        // x = 2u - 1 in x^2
        let p = x(1, 0).pow(2);
        let q = p.substitute_affine(&[-1.0], &[2.0]);
        let expect = Polynomial::from_terms(1, [(vec![2], 4.0), (vec![1], -4.0), (vec![0], 1.0)]);
        assert!(q.approx_eq(&expect, 1e-15));
    }

    #[test]
    fn derivative_of_cubic() {
        let p = Polynomial::from_terms(2, [(vec![3, 1], 2.0), (vec![0, 1], 5.0)]);
        let d0 = p.derivative(0);
        assert_eq!(d0, Polynomial::from_terms(2, [(vec![2, 1], 6.0)]));
    }
}
