//! Sparse multivariate polynomials in the multinomial-scaled coefficient basis.
//!
//! A polynomial is stored as `P = Σ_α binom(|α|,α) · P_α · X^α` where the map
//! `α ↦ P_α` is sparse. In this basis the multinomial theorem reads
//! `⟨a,X⟩^k = Σ_{|α|=k} binom(k,α) a^α X^α`, i.e. the scaled coefficients of a
//! power of a linear form are plain monomials `a^α`. The Reznick inner product
//! `⟨P,Q⟩ = Σ_α binom(|α|,α) P_α Q_α` then expresses evaluation:
//! `⟨P, ⟨a,X⟩^k⟩ = P(a)` for homogeneous `P` of degree `k`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Coefficients with absolute value below this are pruned after arithmetic,
/// keeping the sparse form canonical so that equality is map equality.
pub const PRUNE_EPS: f64 = 1e-14;

/// Total degree beyond which multinomial coefficients are not computed.
pub const DEGREE_CAP: u32 = 40;

/// Exponent vector `α ∈ ℕ₀ⁿ`; `degree = |α| = Σ αᵢ`.
///
/// Ordered graded-lexicographically (by degree, then lexicographic on the
/// exponents), which fixes a deterministic term order for serialization and
/// Gram-basis indexing.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The multi-index of the single variable `i`, i.e. the unit vector `eᵢ`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference, `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(MultiIndex(out))
    }

    /// `x^α`.
    pub fn monomial_value(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `|α|! / (α₁!⋯αₙ!)` in exact integer arithmetic.
///
/// Fails on total degree above [`DEGREE_CAP`] or on u128 overflow.
pub fn multinomial(alpha: &MultiIndex) -> Result<u128> {
    let d = alpha.degree();
    if d > DEGREE_CAP {
        return Err(Error::DegreeLimit(format!(
            "total degree {d} exceeds cap {DEGREE_CAP}"
        )));
    }
    // binom(d, α) = Π_i C(s_i, α_i) with s_i the partial sums of α.
    let mut result: u128 = 1;
    let mut s: u32 = 0;
    for &ai in alpha.exponents() {
        s += ai;
        let mut c: u128 = 1;
        for j in 1..=ai {
            c = c
                .checked_mul((s - ai + j) as u128)
                .ok_or_else(|| Error::DegreeLimit("multinomial overflow".into()))?
                / j as u128;
        }
        result = result
            .checked_mul(c)
            .ok_or_else(|| Error::DegreeLimit("multinomial overflow".into()))?;
    }
    Ok(result)
}

/// `multinomial(α)` as `f64`; callers guarantee the degree cap via the
/// polynomial constructors.
pub(crate) fn multinomial_f(alpha: &MultiIndex) -> f64 {
    multinomial(alpha).expect("degree cap enforced on construction") as f64
}

/// All multi-indices of length `n` with total degree exactly `k`, graded-lex
/// sorted.
pub fn indices_of_degree(n: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fill_degree(&mut out, &mut cur, 0, k);
    out
}

fn fill_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in 0..=remaining {
        cur[pos] = e;
        fill_degree(out, cur, pos + 1, remaining - e);
    }
    cur[pos] = 0;
}

/// All multi-indices of length `n` with total degree `≤ k`, graded-lex sorted.
pub fn indices_up_to(n: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=k {
        out.extend(indices_of_degree(n, d));
    }
    out
}

/// Sparse multivariate polynomial in the scaled coefficient convention.
///
/// Invariants: every stored index has length `n` and degree ≤ [`DEGREE_CAP`];
/// no stored coefficient is exactly zero. Two polynomials are equal iff their
/// term maps are equal.
#[derive(Clone, PartialEq)]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        MultiPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = MultiPoly::zero(n);
        p.add_term(MultiIndex::zero(n), c).expect("degree 0");
        p
    }

    /// The variable `Xᵢ`.
    pub fn variable(n: usize, i: usize) -> Self {
        let mut p = MultiPoly::zero(n);
        p.add_term(MultiIndex::unit(n, i), 1.0).expect("degree 1");
        p
    }

    /// `⟨a,X⟩` as a polynomial.
    pub fn linear_form(a: &[f64]) -> Self {
        let mut p = MultiPoly::zero(a.len());
        for (i, &ai) in a.iter().enumerate() {
            p.add_term(MultiIndex::unit(a.len(), i), ai).expect("degree 1");
        }
        p
    }

    /// `X₁² + … + Xₙ²` (scaled coefficients are 1 at each `2eᵢ`).
    pub fn squared_norm(n: usize) -> Self {
        let mut p = MultiPoly::zero(n);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(MultiIndex(e), 1.0).expect("degree 2");
        }
        p
    }

    /// `‖X − c‖²` expanded.
    pub fn squared_distance(center: &[f64]) -> Self {
        let n = center.len();
        let mut p = MultiPoly::squared_norm(n);
        let lin = MultiPoly::linear_form(center);
        p = p.add(&lin.scale(-2.0));
        let c2: f64 = center.iter().map(|c| c * c).sum();
        p.add(&MultiPoly::constant(n, c2))
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = MultiPoly::zero(n);
        for (alpha, c) in terms {
            p.add_term(alpha, c)?;
        }
        Ok(p)
    }

    /// Accumulate `c` into the scaled coefficient at `α`, pruning near-zeros.
    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) -> Result<()> {
        if alpha.len() != self.n {
            return Err(Error::DimMismatch(format!(
                "index length {} vs dimension {}",
                alpha.len(),
                self.n
            )));
        }
        if alpha.degree() > DEGREE_CAP {
            return Err(Error::DegreeLimit(format!(
                "term degree {} exceeds cap {}",
                alpha.degree(),
                DEGREE_CAP
            )));
        }
        let entry = self.terms.entry(alpha.clone()).or_insert(0.0);
        *entry += c;
        if entry.abs() < PRUNE_EPS {
            self.terms.remove(&alpha);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Scaled coefficient `P_α` (zero when absent).
    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn scale(&self, s: f64) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n);
        for (a, c) in self.terms() {
            let v = c * s;
            if v.abs() >= PRUNE_EPS {
                out.terms.insert(a.clone(), v);
            }
        }
        out
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n, other.n, "dimension mismatch in add");
        let mut out = self.clone();
        for (a, c) in other.terms() {
            out.add_term(a.clone(), c).expect("degrees already valid");
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.scale(-1.0))
    }

    /// Evaluate `P(x) = Σ_α binom(|α|,α) P_α x^α`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimMismatch(format!(
                "point dimension {} vs polynomial dimension {}",
                x.len(),
                self.n
            )));
        }
        let mut acc = 0.0;
        for (a, c) in self.terms() {
            acc += multinomial_f(a) * c * a.monomial_value(x);
        }
        Ok(acc)
    }

    /// Product polynomial. The scaled coefficient at `γ` is
    /// `Σ_{α+β=γ} binom(|α|,α) binom(|β|,β) P_α Q_β / binom(|γ|,γ)`.
    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        if self.n != other.n {
            return Err(Error::DimMismatch("product of mixed dimensions".into()));
        }
        let mut raw: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, pa) in self.terms() {
            let ba = multinomial_f(a);
            for (b, qb) in other.terms() {
                let gamma = a.add(b);
                if gamma.degree() > DEGREE_CAP {
                    return Err(Error::DegreeLimit(format!(
                        "product degree {} exceeds cap {}",
                        gamma.degree(),
                        DEGREE_CAP
                    )));
                }
                *raw.entry(gamma).or_insert(0.0) += ba * multinomial_f(b) * pa * qb;
            }
        }
        let mut out = MultiPoly::zero(self.n);
        for (gamma, v) in raw {
            let scaled = v / multinomial_f(&gamma);
            if scaled.abs() >= PRUNE_EPS {
                out.terms.insert(gamma, scaled);
            }
        }
        Ok(out)
    }

    /// Integer power via repeated multiplication.
    pub fn pow(&self, k: u32) -> Result<MultiPoly> {
        let mut out = MultiPoly::constant(self.n, 1.0);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Restriction of the term map to degree-`k` indices.
    pub fn homogeneous_part(&self, k: u32) -> HomPoly {
        let mut p = MultiPoly::zero(self.n);
        for (a, c) in self.terms() {
            if a.degree() == k {
                p.terms.insert(a.clone(), c);
            }
        }
        HomPoly { degree: k, poly: p }
    }

    /// `√(Σ_α binom(|α|,α) P_α²)`: the coefficient 2-norm in the orthonormal
    /// basis `(√binom(|α|,α) X^α)_α`.
    pub fn frobenius_norm(&self) -> f64 {
        self.terms()
            .map(|(a, c)| multinomial_f(a) * c * c)
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            // Printed with raw monomial coefficients for readability.
            write!(f, "{:.6}*X^{:?}", c * multinomial_f(a), a)?;
        }
        Ok(())
    }
}

/// Homogeneous polynomial wrapper: every stored term has the fixed degree.
///
/// The zero polynomial with a declared degree is allowed.
#[derive(Clone, PartialEq, Debug)]
pub struct HomPoly {
    degree: u32,
    poly: MultiPoly,
}

impl HomPoly {
    pub fn zero(n: usize, degree: u32) -> Self {
        HomPoly {
            degree,
            poly: MultiPoly::zero(n),
        }
    }

    /// Checks that all terms of `p` have degree exactly `degree`.
    pub fn from_poly(p: MultiPoly, degree: u32) -> Result<Self> {
        for (a, _) in p.terms() {
            if a.degree() != degree {
                return Err(Error::Domain(format!(
                    "term of degree {} in homogeneous polynomial of degree {}",
                    a.degree(),
                    degree
                )));
            }
        }
        Ok(HomPoly { degree, poly: p })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.poly.n()
    }

    pub fn as_poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn into_poly(self) -> MultiPoly {
        self.poly
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.poly.eval(x)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.poly.frobenius_norm()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn scale(&self, s: f64) -> HomPoly {
        HomPoly {
            degree: self.degree,
            poly: self.poly.scale(s),
        }
    }

    pub fn add(&self, other: &HomPoly) -> Result<HomPoly> {
        if self.degree != other.degree {
            return Err(Error::Domain(format!(
                "adding homogeneous degrees {} and {}",
                self.degree, other.degree
            )));
        }
        Ok(HomPoly {
            degree: self.degree,
            poly: self.poly.add(&other.poly),
        })
    }

    pub fn sub(&self, other: &HomPoly) -> Result<HomPoly> {
        self.add(&other.scale(-1.0))
    }
}

/// `⟨a,X⟩^k`: scaled coefficients are `P_α = a^α` for `|α| = k`.
pub fn pow_linear_form(a: &[f64], k: u32) -> Result<HomPoly> {
    if k > DEGREE_CAP {
        return Err(Error::DegreeLimit(format!("power {k} exceeds cap")));
    }
    let n = a.len();
    let mut p = MultiPoly::zero(n);
    // Skip variables where a_i = 0: their exponent must be zero.
    let support: Vec<usize> = (0..n).filter(|&i| a[i] != 0.0).collect();
    if support.is_empty() {
        if k == 0 {
            return Ok(HomPoly {
                degree: 0,
                poly: MultiPoly::constant(n, 1.0),
            });
        }
        return Ok(HomPoly::zero(n, k));
    }
    for sub in indices_of_degree(support.len(), k) {
        let mut full = vec![0u32; n];
        let mut coeff = 1.0;
        for (pos, &e) in sub.exponents().iter().enumerate() {
            let var = support[pos];
            full[var] = e;
            coeff *= a[var].powi(e as i32);
        }
        if coeff.abs() >= PRUNE_EPS {
            p.terms.insert(MultiIndex(full), coeff);
        }
    }
    Ok(HomPoly { degree: k, poly: p })
}

/// Reznick inner product `Σ_α binom(|α|,α) P_α Q_α` over shared indices.
pub fn reznick_product(p: &MultiPoly, q: &MultiPoly) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DimMismatch("inner product of mixed dimensions".into()));
    }
    // Iterate over the sparser operand.
    let (small, large) = if p.num_terms() <= q.num_terms() {
        (p, q)
    } else {
        (q, p)
    };
    let mut acc = 0.0;
    for (a, c) in small.terms() {
        let other = large.coeff(a);
        if other != 0.0 {
            acc += multinomial_f(a) * c * other;
        }
    }
    Ok(acc)
}

/// Partial contraction `⟨Q ⊗ id, P⟩`: the homogeneous degree-`out_degree`
/// polynomial with scaled coefficients `R_β = Σ_α binom(|α|,α) Q_α P_{α+β}`.
///
/// On a moment-decomposable `P = Σ_l Σ_i λᵢ ⟨aᵢ,X⟩^l` this sends `P` to
/// `Σᵢ λᵢ Q(aᵢ) ⟨aᵢ,X⟩^out_degree`.
pub fn contract(q: &MultiPoly, p: &MultiPoly, out_degree: u32) -> Result<HomPoly> {
    if q.n() != p.n() {
        return Err(Error::DimMismatch("contraction of mixed dimensions".into()));
    }
    let mut out = MultiPoly::zero(p.n());
    for (alpha, qa) in q.terms() {
        let w = multinomial_f(alpha) * qa;
        for (gamma, pc) in p.terms() {
            if gamma.degree() != alpha.degree() + out_degree {
                continue;
            }
            if let Some(beta) = gamma.checked_sub(alpha) {
                out.add_term(beta, w * pc)?;
            }
        }
    }
    HomPoly::from_poly(out, out_degree)
}

/// Pairing adjoint of multiplication: the polynomial `A` of degree ≤ `max_degree`
/// with scaled coefficients `A_β = Σ_φ binom(|φ|,φ) f_φ S_{β+φ}`, so that
/// `⟨W·f, S⟩ = ⟨W, A⟩` for every `W` of degree ≤ `max_degree`.
pub fn adjoint_multiply(f: &MultiPoly, s: &MultiPoly, max_degree: u32) -> Result<MultiPoly> {
    if f.n() != s.n() {
        return Err(Error::DimMismatch("adjoint of mixed dimensions".into()));
    }
    let mut out = MultiPoly::zero(s.n());
    for (phi, fc) in f.terms() {
        let w = multinomial_f(phi) * fc;
        for (gamma, sc) in s.terms() {
            if let Some(beta) = gamma.checked_sub(phi) {
                if beta.degree() <= max_degree {
                    out.add_term(beta, w * sc)?;
                }
            }
        }
    }
    Ok(out)
}

/// `Σ_{k=0}^{max_degree} ⟨a,X⟩^k`: pairing against it evaluates any polynomial
/// of degree ≤ `max_degree` at `a`.
pub fn evaluation_pairing(a: &[f64], max_degree: u32) -> Result<MultiPoly> {
    let mut out = MultiPoly::zero(a.len());
    for k in 0..=max_degree {
        out = out.add(pow_linear_form(a, k)?.as_poly());
    }
    Ok(out)
}

// --- JSON serialization -----------------------------------------------------
// Wire format: {"n": int, "degree": int, "terms": [{"alpha": [..], "coeff": f}]}
// with coeff the scaled coefficient.

#[derive(Serialize, Deserialize)]
struct TermDto {
    alpha: Vec<u32>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct MultiPolyDto {
    n: usize,
    degree: u32,
    terms: Vec<TermDto>,
}

impl Serialize for MultiPoly {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let dto = MultiPolyDto {
            n: self.n,
            degree: self.degree(),
            terms: self
                .terms()
                .map(|(a, c)| TermDto {
                    alpha: a.exponents().to_vec(),
                    coeff: c,
                })
                .collect(),
        };
        dto.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let dto = MultiPolyDto::deserialize(de)?;
        let mut p = MultiPoly::zero(dto.n);
        for t in dto.terms {
            p.add_term(MultiIndex::new(t.alpha), t.coeff)
                .map_err(serde::de::Error::custom)?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_rng::TestRng;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn multinomial_small_cases() {
        assert_eq!(multinomial(&MultiIndex::new(vec![1, 1, 1])).unwrap(), 6);
        assert_eq!(multinomial(&MultiIndex::new(vec![2, 0])).unwrap(), 1);
        assert_eq!(multinomial(&MultiIndex::new(vec![2, 1])).unwrap(), 3);
        assert_eq!(multinomial(&MultiIndex::new(vec![0, 0])).unwrap(), 1);
        assert_eq!(multinomial(&MultiIndex::new(vec![2, 2])).unwrap(), 6);
    }

    #[test]
    fn multinomial_degree_cap() {
        assert!(multinomial(&MultiIndex::new(vec![41])).is_err());
        assert!(multinomial(&MultiIndex::new(vec![40])).is_ok());
    }

    #[test]
    fn pow_linear_form_unit_vector() {
        let p = pow_linear_form(&e(3, 0), 3).unwrap();
        assert_eq!(p.as_poly().num_terms(), 1);
        assert_eq!(p.as_poly().coeff(&MultiIndex::new(vec![3, 0, 0])), 1.0);
    }

    #[test]
    fn pow_linear_form_binomial() {
        // ⟨(1,1),X⟩² = X1² + 2X1X2 + X2², all scaled coefficients 1.
        let p = pow_linear_form(&[1.0, 1.0], 2).unwrap();
        for idx in [vec![2, 0], vec![1, 1], vec![0, 2]] {
            assert_eq!(p.as_poly().coeff(&MultiIndex::new(idx)), 1.0);
        }
    }

    #[test]
    fn pow_linear_form_zero_vector() {
        let p = pow_linear_form(&[0.0, 0.0], 2).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn eval_basic() {
        let x1sq = pow_linear_form(&e(2, 0), 2).unwrap();
        assert_eq!(x1sq.eval(&[2.0, 0.0]).unwrap(), 4.0);
        let one = MultiPoly::constant(2, 1.0);
        assert_eq!(one.eval(&[5.0, -3.0]).unwrap(), 1.0);
        // ⟨(1,2),X⟩² at (3,1): (1·3 + 2·1)² = 25.
        let p = pow_linear_form(&[1.0, 2.0], 2).unwrap();
        assert!((p.eval(&[3.0, 1.0]).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = MultiPoly::variable(2, 0);
        assert!(p.eval(&[1.0]).is_err());
    }

    #[test]
    fn reznick_basic() {
        let x1 = MultiPoly::variable(2, 0);
        assert_eq!(reznick_product(&x1, &x1).unwrap(), 1.0);

        // ⟨X1X2, ⟨(1,2),X⟩²⟩ = (X1X2)(1,2) = 2.
        let x1x2 = MultiPoly::variable(2, 0).mul(&MultiPoly::variable(2, 1)).unwrap();
        let q = pow_linear_form(&[1.0, 2.0], 2).unwrap();
        assert!((reznick_product(&x1x2, q.as_poly()).unwrap() - 2.0).abs() < 1e-12);

        // Homogeneous parts of different degree share no indices.
        let p2 = pow_linear_form(&[1.0, 1.0], 2).unwrap();
        let p3 = pow_linear_form(&[1.0, -1.0], 3).unwrap();
        assert_eq!(reznick_product(p2.as_poly(), p3.as_poly()).unwrap(), 0.0);
    }

    #[test]
    fn homogeneous_part_partition() {
        let mut p = MultiPoly::constant(2, 1.0);
        p = p.add(&MultiPoly::variable(2, 0));
        p = p.add(pow_linear_form(&e(2, 0), 2).unwrap().as_poly());
        let h1 = p.homogeneous_part(1);
        assert_eq!(h1.as_poly().coeff(&MultiIndex::new(vec![1, 0])), 1.0);
        assert_eq!(h1.as_poly().num_terms(), 1);
        assert!(p.homogeneous_part(0).eval(&[0.0, 0.0]).unwrap() == 1.0);
        // Σ_k P_{=k} = P.
        let mut sum = MultiPoly::zero(2);
        for k in 0..=p.degree() {
            sum = sum.add(p.homogeneous_part(k).as_poly());
        }
        assert_eq!(sum, p);
    }

    #[test]
    fn mul_identities() {
        let x1 = MultiPoly::variable(2, 0);
        let x2 = MultiPoly::variable(2, 1);
        let sq = x1.mul(&x1).unwrap();
        assert_eq!(sq.coeff(&MultiIndex::new(vec![2, 0])), 1.0);

        let q = pow_linear_form(&[0.3, -0.7], 3).unwrap().into_poly();
        assert_eq!(MultiPoly::constant(2, 1.0).mul(&q).unwrap(), q);

        // (X1+X2)(X1−X2) = X1² − X2².
        let plus = x1.add(&x2);
        let minus = x1.sub(&x2);
        let prod = plus.mul(&minus).unwrap();
        assert_eq!(prod.coeff(&MultiIndex::new(vec![2, 0])), 1.0);
        assert_eq!(prod.coeff(&MultiIndex::new(vec![0, 2])), -1.0);
        assert_eq!(prod.coeff(&MultiIndex::new(vec![1, 1])), 0.0);
    }

    #[test]
    fn mul_commutative_associative_random() {
        let mut rng = TestRng::seeded(7);
        for _ in 0..12 {
            let p = rng.random_poly(3, 2);
            let q = rng.random_poly(3, 2);
            let r = rng.random_poly(3, 1);
            let pq = p.mul(&q).unwrap();
            let qp = q.mul(&p).unwrap();
            assert!(pq.sub(&qp).frobenius_norm() < 1e-12);
            let a = pq.mul(&r).unwrap();
            let b = p.mul(&q.mul(&r).unwrap()).unwrap();
            assert!(a.sub(&b).frobenius_norm() < 1e-12 * (1.0 + a.frobenius_norm()));
        }
    }

    #[test]
    fn frobenius_basic() {
        let p = pow_linear_form(&e(2, 0), 2)
            .unwrap()
            .add(&pow_linear_form(&e(2, 1), 2).unwrap())
            .unwrap();
        assert!((p.frobenius_norm() - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(MultiPoly::zero(3).frobenius_norm(), 0.0);
    }

    #[test]
    fn frobenius_of_unit_power_is_one() {
        // ⟨⟨a,X⟩^d, ⟨a,X⟩^d⟩ = ⟨a,a⟩^d, so unit a gives norm 1.
        let mut rng = TestRng::seeded(3);
        for d in [2u32, 4, 6] {
            let a = rng.unit_vector(3);
            let p = pow_linear_form(&a, d).unwrap();
            assert!((p.frobenius_norm() - 1.0).abs() < 1e-12);
            let self_prod = reznick_product(p.as_poly(), p.as_poly()).unwrap();
            assert!((p.frobenius_norm().powi(2) - self_prod).abs() < 1e-12);
        }
    }

    #[test]
    fn contract_reduction_identity() {
        // ⟨X1² ⊗ id, ⟨e1,X⟩⁴⟩ = X1²·1 = Q(e1)·⟨e1,X⟩².
        let q = pow_linear_form(&e(2, 0), 2).unwrap().into_poly();
        let p = pow_linear_form(&e(2, 0), 4).unwrap().into_poly();
        let r = contract(&q, &p, 2).unwrap();
        assert_eq!(r.as_poly().coeff(&MultiIndex::new(vec![2, 0])), 1.0);
        assert_eq!(r.as_poly().num_terms(), 1);
    }

    #[test]
    fn contract_with_constant_is_identity() {
        let t = pow_linear_form(&[0.5, -1.5, 2.0], 4).unwrap();
        let one = MultiPoly::constant(3, 1.0);
        let r = contract(&one, t.as_poly(), 4).unwrap();
        assert!(r.sub(&t).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn contract_point_mass_oracle() {
        // For P = Σ_l Σ_i λ_i ⟨a_i,X⟩^l the contraction by Q of degree ≤ k
        // equals Σ_i λ_i Q(a_i) ⟨a_i,X⟩^{d−k}; brute-force both sides.
        let mut rng = TestRng::seeded(11);
        for _ in 0..20 {
            let n = 3;
            let d = 5u32;
            let k = 2u32;
            let lambdas = [0.7, 1.3];
            let nodes = [rng.vector(n, 1.0), rng.vector(n, 1.0)];
            let mut p = MultiPoly::zero(n);
            for l in 0..=d {
                for (lam, a) in lambdas.iter().zip(&nodes) {
                    p = p.add(&pow_linear_form(a, l).unwrap().scale(*lam).into_poly());
                }
            }
            let q = rng.random_poly(n, k);
            let got = contract(&q, &p, d - k).unwrap();
            let mut want = HomPoly::zero(n, d - k);
            for (lam, a) in lambdas.iter().zip(&nodes) {
                let qa = q.eval(a).unwrap();
                want = want
                    .add(&pow_linear_form(a, d - k).unwrap().scale(lam * qa))
                    .unwrap();
            }
            let diff = got.sub(&want).unwrap().frobenius_norm();
            assert!(diff < 1e-10 * (1.0 + want.frobenius_norm()), "diff {diff}");
        }
    }

    #[test]
    fn evaluation_identity_homogeneous() {
        // ⟨P, ⟨a,X⟩^k⟩ = P(a) for homogeneous P, 100 random cases.
        let mut rng = TestRng::seeded(23);
        for _ in 0..100 {
            let n = 1 + (rng.next_u64() % 3) as usize;
            let k = (rng.next_u64() % 5) as u32;
            let p = rng.random_homogeneous(n, k);
            let a = rng.vector(n, 2.0);
            let lhs = reznick_product(p.as_poly(), pow_linear_form(&a, k).unwrap().as_poly())
                .unwrap();
            let rhs = p.eval(&a).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn evaluation_identity_inhomogeneous() {
        let mut rng = TestRng::seeded(29);
        for _ in 0..50 {
            let n = 2;
            let d = 4u32;
            let p = rng.random_poly(n, d);
            let a = rng.vector(n, 1.5);
            let pairing = evaluation_pairing(&a, d).unwrap();
            let lhs = reznick_product(&p, &pairing).unwrap();
            let rhs = p.eval(&a).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn adjoint_multiply_matches_product_pairing() {
        let mut rng = TestRng::seeded(31);
        for _ in 0..25 {
            let n = 3;
            let w = rng.random_poly(n, 2);
            let f = rng.random_poly(n, 2);
            let s = rng.random_poly(n, 4);
            let lhs = reznick_product(&w.mul(&f).unwrap(), &s).unwrap();
            let a = adjoint_multiply(&f, &s, 2).unwrap();
            let rhs = reznick_product(&w, &a).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn reznick_bilinear_symmetric_positive() {
        let mut rng = TestRng::seeded(37);
        for _ in 0..20 {
            let p = rng.random_poly(2, 3);
            let q = rng.random_poly(2, 3);
            let r = rng.random_poly(2, 3);
            let s = 0.6;
            let pq = reznick_product(&p, &q).unwrap();
            let qp = reznick_product(&q, &p).unwrap();
            assert!((pq - qp).abs() < 1e-12);
            let lin = reznick_product(&p.scale(s).add(&r), &q).unwrap();
            let split = s * pq + reznick_product(&r, &q).unwrap();
            assert!((lin - split).abs() < 1e-10 * (1.0 + split.abs()));
            if !p.is_zero() {
                assert!(reznick_product(&p, &p).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = TestRng::seeded(41);
        let p = rng.random_poly(3, 4);
        let json = serde_json::to_string(&p).unwrap();
        let back: MultiPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn graded_lex_term_order() {
        let idx = indices_up_to(2, 2);
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0],
        ];
        let got: Vec<Vec<u32>> = idx.iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(got, expect);
    }
}
