//! Multilinear pseudo-Boolean polynomials with exact rational coefficients.
//!
//! Every variable is binary, so `x * x = x` and a polynomial is a sum of
//! square-free monomials. Two polynomials agree on all of `{0,1}^n` exactly
//! when their term maps are identical, which makes the term map a canonical
//! form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Shorthand for an exact rational `num / den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an exact integer-valued rational.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Index of one binary variable (one spin).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitId(pub u32);

impl BitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("assignment has {len} bits but the polynomial uses bit {bit}")]
    MissingBit { bit: u32, len: usize },
    #[error("substitution target bit {0} already occurs in the polynomial")]
    TargetInUse(u32),
    #[error("cannot substitute a pair made of the same bit {0}")]
    DegeneratePair(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A product of distinct binary variables, kept strictly increasing.
/// The empty monomial is the constant term.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<BitId>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(bit: BitId) -> Self {
        Monomial(vec![bit])
    }

    /// Builds a monomial from any bit list; repeats collapse since `x^2 = x`.
    pub fn from_bits<I: IntoIterator<Item = BitId>>(bits: I) -> Self {
        let mut v: Vec<BitId> = bits.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Monomial(v)
    }

    pub fn bits(&self) -> &[BitId] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, bit: BitId) -> bool {
        self.0.binary_search(&bit).is_ok()
    }

    /// Multilinear product: the sorted union of both bit sets.
    pub fn product(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.0.iter().all(|b| assignment[b.index()])
    }
}

/// Multilinear polynomial over binary variables.
///
/// Zero coefficients are never stored, so structural equality is functional
/// equality on `{0,1}^n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
    degree: usize,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(bit: BitId) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(bit), Rational::one());
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `coeff * mono`, merging with an existing term and dropping zeros.
    pub fn add_term(&mut self, mono: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let deg = mono.degree();
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
                self.degree = self.degree.max(deg);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                    if deg == self.degree {
                        self.recompute_degree();
                    }
                }
            }
        }
    }

    fn recompute_degree(&mut self) {
        self.degree = self.terms.keys().map(Monomial::degree).max().unwrap_or(0);
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one())
    }

    /// Largest bit index used, if any variable occurs.
    pub fn max_bit(&self) -> Option<BitId> {
        self.terms.keys().filter_map(|m| m.bits().last().copied()).max()
    }

    pub fn contains_bit(&self, bit: BitId) -> bool {
        self.terms.keys().any(|m| m.contains(bit))
    }

    pub fn scale(&self, factor: &Rational) -> Poly {
        if factor.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * factor)).collect(),
            degree: self.degree,
        }
    }

    pub fn square(&self) -> Poly {
        self * self
    }

    pub fn evaluate(&self, assignment: &[bool]) -> Result<Rational, PolyError> {
        if let Some(max) = self.max_bit() {
            if max.index() >= assignment.len() {
                return Err(PolyError::MissingBit { bit: max.0, len: assignment.len() });
            }
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            if m.eval(assignment) {
                acc += c;
            }
        }
        Ok(acc)
    }

    /// Replaces the product `u1*u2` by the fresh bit `v` in every monomial
    /// containing both factors.
    pub fn substitute_factor(&self, u1: BitId, u2: BitId, v: BitId) -> Result<Poly, PolyError> {
        if u1 == u2 {
            return Err(PolyError::DegeneratePair(u1.0));
        }
        if self.contains_bit(v) {
            return Err(PolyError::TargetInUse(v.0));
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.contains(u1) && m.contains(u2) {
                let bits = m.bits().iter().copied().filter(|&b| b != u1 && b != u2).chain([v]);
                out.add_term(Monomial::from_bits(bits), c.clone());
            } else {
                out.add_term(m.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Least common multiple of all coefficient denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        use num_integer::Integer;
        self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Sum of absolute coefficients over monomials containing every bit in `bits`.
    pub fn abs_weight_containing(&self, bits: &[BitId]) -> Rational {
        self.terms
            .iter()
            .filter(|(m, _)| bits.iter().all(|&b| m.contains(b)))
            .fold(Rational::zero(), |acc, (_, c)| acc + c.abs())
    }

    /// Serializes into the line format `num/den b0 b1 ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            out.push_str(&format!("{}/{}", c.numer(), c.denom()));
            for b in m.bits() {
                out.push(' ');
                out.push_str(&b.0.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Poly, PolyError> {
        let mut p = Poly::zero();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PolyError::Parse { line: idx + 1, msg };
            let mut fields = line.split_whitespace();
            let coeff = parse_rational(fields.next().unwrap_or("")).map_err(err)?;
            let mut bits = Vec::new();
            for f in fields {
                let b: u32 = f.parse().map_err(|_| err(format!("bad bit index `{f}`")))?;
                if bits.contains(&BitId(b)) {
                    return Err(err(format!("bit {b} repeated in one monomial")));
                }
                bits.push(BitId(b));
            }
            p.add_term(Monomial::from_bits(bits), coeff);
        }
        Ok(p)
    }
}

/// Parses `a/b` or a bare integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let bad = || format!("bad rational `{s}`");
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n).map_err(|_| bad())?;
            let d = BigInt::from_str(d).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Formats a rational as `n` when integral, `n/d` otherwise.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", fmt_rational(c))?;
            for b in m.bits() {
                write!(f, "*x{}", b.0)?;
            }
        }
        Ok(())
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += &rhs;
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: Poly) -> Poly {
        self -= &rhs;
        self
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
            degree: self.degree,
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.product(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x(i: u32) -> Poly {
        Poly::var(BitId(i))
    }

    fn c(v: i64) -> Poly {
        Poly::constant(int(v))
    }

    fn assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u32..(1 << n)).map(move |mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    fn random_poly(rng: &mut ChaCha8Rng, nbits: u32, nterms: usize, max_deg: usize) -> Poly {
        let mut p = Poly::zero();
        for _ in 0..nterms {
            let deg = rng.random_range(0..=max_deg);
            let bits = (0..deg).map(|_| BitId(rng.random_range(0..nbits)));
            p.add_term(Monomial::from_bits(bits), rat(rng.random_range(-9..=9), rng.random_range(1..=4)));
        }
        p
    }

    #[test]
    fn add_merges_coefficients() {
        let p = &x(1) + &x(1);
        assert_eq!(p, Poly::from_terms([(Monomial::var(BitId(1)), int(2))]));
    }

    #[test]
    fn add_drops_cancelled_terms() {
        let p = &(&x(1) * &x(2)) - &c(1);
        let q = &p + &c(1);
        assert_eq!(q, &x(1) * &x(2));
        assert_eq!(q.len(), 1);
        assert_eq!(q.degree(), 2);
    }

    #[test]
    fn mul_is_idempotent_on_binary_variables() {
        assert_eq!(&x(1) * &x(1), x(1));
        let six = &x(1).scale(&int(2)) * &x(2).scale(&int(3));
        assert_eq!(six, Poly::from_terms([(Monomial::from_bits([BitId(1), BitId(2)]), int(6))]));
    }

    #[test]
    fn square_of_sum_minus_one() {
        let phi = &(&x(1) + &x(2)) - &c(1);
        let sq = phi.square();
        let expected = Poly::from_terms([
            (Monomial::one(), int(1)),
            (Monomial::var(BitId(1)), int(-1)),
            (Monomial::var(BitId(2)), int(-1)),
            (Monomial::from_bits([BitId(1), BitId(2)]), int(2)),
        ]);
        assert_eq!(sq, expected);
        for a in assignments(3) {
            let v = phi.evaluate(&a).unwrap();
            assert_eq!(sq.evaluate(&a).unwrap(), &v * &v);
        }
    }

    #[test]
    fn evaluate_examples() {
        let p = &x(0).scale(&int(3)) + &x(1);
        assert_eq!(p.evaluate(&[true, false]).unwrap(), int(3));
        assert_eq!(c(5).evaluate(&[]).unwrap(), int(5));
        let cube = &(&x(0) * &x(1)) * &x(2);
        assert_eq!(cube.evaluate(&[true, true, true]).unwrap(), int(1));
    }

    #[test]
    fn evaluate_rejects_short_assignment() {
        let p = x(3);
        assert_eq!(p.evaluate(&[true, false]), Err(PolyError::MissingBit { bit: 3, len: 2 }));
    }

    #[test]
    fn substitute_factor_matches_worked_example() {
        // x1x2x3 + x1x2 + x3 with x1x2 -> x4
        let p = &(&(&(&x(1) * &x(2)) * &x(3)) + &(&x(1) * &x(2))) + &x(3);
        let q = p.substitute_factor(BitId(1), BitId(2), BitId(4)).unwrap();
        let expected = &(&(&x(4) * &x(3)) + &x(4)) + &x(3);
        assert_eq!(q, expected);
    }

    #[test]
    fn substitute_factor_leaves_unrelated_terms() {
        let p = &(&x(1) * &x(3)) + &x(2);
        assert_eq!(p.substitute_factor(BitId(1), BitId(2), BitId(5)).unwrap(), p);
    }

    #[test]
    fn substitute_factor_errors() {
        let p = &x(1) * &x(2);
        assert_eq!(p.substitute_factor(BitId(1), BitId(2), BitId(2)), Err(PolyError::TargetInUse(2)));
        assert_eq!(p.substitute_factor(BitId(1), BitId(1), BitId(7)), Err(PolyError::DegeneratePair(1)));
    }

    #[test]
    fn substitute_preserves_value_on_honest_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let p = random_poly(&mut rng, 9, 25, 4);
            let q = p.substitute_factor(BitId(0), BitId(1), BitId(9)).unwrap();
            for mono in q.terms().map(|(m, _)| m) {
                assert!(!(mono.contains(BitId(0)) && mono.contains(BitId(1))));
            }
            for mut a in assignments(10) {
                a[9] = a[0] && a[1];
                assert_eq!(p.evaluate(&a).unwrap(), q.evaluate(&a).unwrap());
            }
        }
    }

    #[test]
    fn add_and_mul_are_evaluation_homomorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let p = random_poly(&mut rng, 10, 15, 3);
            let q = random_poly(&mut rng, 10, 15, 3);
            let sum = &p + &q;
            let prod = &p * &q;
            for a in assignments(10) {
                let (pv, qv) = (p.evaluate(&a).unwrap(), q.evaluate(&a).unwrap());
                assert_eq!(sum.evaluate(&a).unwrap(), &pv + &qv);
                assert_eq!(prod.evaluate(&a).unwrap(), &pv * &qv);
            }
            for (m, _) in prod.terms() {
                let mut bits = m.bits().to_vec();
                bits.dedup();
                assert_eq!(bits.len(), m.degree());
            }
        }
    }

    #[test]
    fn function_equality_iff_term_map_equality() {
        // Rebuild each random polynomial from its truth table by Moebius
        // inversion; the result must equal the original term map.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 7;
        for _ in 0..20 {
            let p = random_poly(&mut rng, n as u32, 20, 4);
            let mut table: Vec<Rational> = (0u32..(1 << n))
                .map(|mask| {
                    let a: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    p.evaluate(&a).unwrap()
                })
                .collect();
            for i in 0..n {
                for mask in 0..(1usize << n) {
                    if mask >> i & 1 == 1 {
                        let lower = table[mask ^ (1 << i)].clone();
                        table[mask] -= lower;
                    }
                }
            }
            let rebuilt = Poly::from_terms(table.into_iter().enumerate().map(|(mask, c)| {
                (Monomial::from_bits((0..n).filter(|i| mask >> i & 1 == 1).map(|i| BitId(i as u32))), c)
            }));
            assert_eq!(rebuilt, p);
        }
    }

    #[test]
    fn text_format_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_poly(&mut rng, 12, 30, 5);
        let text = format!("# fixture\n{}", p.to_text());
        assert_eq!(Poly::parse_text(&text).unwrap(), p);
    }

    #[test]
    fn text_format_reports_line_numbers() {
        let err = Poly::parse_text("1/2 0 1\n\n3/x 2\n").unwrap_err();
        assert_eq!(err, PolyError::Parse { line: 3, msg: "bad rational `3/x`".into() });
    }
}
