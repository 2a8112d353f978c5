//! Dense univariate polynomials over a prime field.
//!
//! Coefficients are stored in ascending order and kept normalised, so the zero
//! polynomial has no coefficients at all. Every arithmetic routine has a
//! `*_counted` form that records field operations in an [`OpCounter`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::RngCore;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldParams, OpCounter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,
    #[error("duplicate abscissa {0} in interpolation points")]
    DuplicateAbscissa(u64),
    #[error("trial root search needs a candidate universe")]
    MissingUniverse,
    #[error("the zero polynomial has every field element as a root")]
    ZeroPolynomialRoots,
    #[error("malformed coefficient {0:?}")]
    MalformedCoefficient(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Degree of a polynomial, with a sentinel below every natural number for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Degree {
    NegInf,
    Finite(usize),
}

impl Degree {
    pub fn finite(self) -> Option<usize> {
        match self {
            Degree::NegInf => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl PartialOrd for Degree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Degree {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Degree::NegInf, Degree::NegInf) => Ordering::Equal,
            (Degree::NegInf, _) => Ordering::Less,
            (_, Degree::NegInf) => Ordering::Greater,
            (Degree::Finite(a), Degree::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInf => write!(f, "-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

/// How [`Polynomial::roots`] searches for roots.
#[derive(Clone, Copy, Debug)]
pub enum RootStrategy<'a> {
    /// Evaluate at every candidate of a known universe.
    TrialOverCandidates(Option<&'a [FieldElement]>),
    /// Isolate the linear part with gcd(x^p - x, f), then split it by
    /// Cantor-Zassenhaus equal-degree factorisation.
    FullFactor,
}

#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    field: FieldParams,
    coeffs: Vec<FieldElement>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter().map(|c| c.value())).finish()
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

impl Polynomial {
    pub fn new(field: FieldParams, coeffs: Vec<FieldElement>) -> Result<Self, PolyError> {
        for &c in &coeffs {
            field.check(c)?;
        }
        Ok(Self::from_trusted(field, coeffs))
    }

    pub(crate) fn from_trusted(field: FieldParams, mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { field, coeffs }
    }

    pub fn from_u64s(field: FieldParams, coeffs: &[u64]) -> Self {
        Self::from_trusted(field, coeffs.iter().map(|&c| field.elem(c)).collect())
    }

    /// Parses the transcript form: ascending decimal coefficient strings.
    pub fn from_decimal_strings<S: AsRef<str>>(field: FieldParams, coeffs: &[S]) -> Result<Self, PolyError> {
        let mut out = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            let v: u64 = c
                .as_ref()
                .parse()
                .map_err(|_| PolyError::MalformedCoefficient(c.as_ref().to_string()))?;
            if v >= field.modulus() {
                return Err(PolyError::MalformedCoefficient(c.as_ref().to_string()));
            }
            out.push(field.elem(v));
        }
        Ok(Self::from_trusted(field, out))
    }

    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.value().to_string()).collect()
    }

    pub fn zero(field: FieldParams) -> Self {
        Self { field, coeffs: Vec::new() }
    }

    pub fn one(field: FieldParams) -> Self {
        Self::constant(field.one())
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::from_trusted(c.params(), vec![c])
    }

    /// The monic linear polynomial `x - root`.
    pub fn linear_root(root: FieldElement) -> Self {
        let f = root.params();
        Self::from_trusted(f, vec![-root, f.one()])
    }

    /// `c * x^k`.
    pub fn monomial(c: FieldElement, k: usize) -> Self {
        let f = c.params();
        let mut coeffs = vec![f.zero(); k + 1];
        coeffs[k] = c;
        Self::from_trusted(f, coeffs)
    }

    pub fn x(field: FieldParams) -> Self {
        Self::monomial(field.one(), 1)
    }

    /// Uniformly random polynomial of exactly the given degree.
    pub fn random<R: RngCore + ?Sized>(field: FieldParams, degree: usize, rng: &mut R) -> Self {
        let mut coeffs: Vec<FieldElement> = (0..degree).map(|_| field.sample(rng)).collect();
        coeffs.push(field.sample_nonzero(rng));
        Self { field, coeffs }
    }

    pub fn field(&self) -> FieldParams {
        self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<FieldElement> {
        self.coeffs
    }

    /// Coefficient of `x^i`, zero past the end.
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(self.field.zero())
    }

    pub fn degree(&self) -> Degree {
        match self.coeffs.len() {
            0 => Degree::NegInf,
            n => Degree::Finite(n - 1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.value() == 1)
    }

    pub fn eval(&self, x: FieldElement) -> FieldElement {
        self.eval_counted(x, &mut OpCounter::new())
    }

    /// Horner evaluation: a degree-n polynomial costs n additions and n
    /// multiplications.
    pub fn eval_counted(&self, x: FieldElement, ctr: &mut OpCounter) -> FieldElement {
        let mut it = self.coeffs.iter().rev();
        let Some(&top) = it.next() else {
            return self.field.zero();
        };
        let mut acc = top;
        for &c in it {
            acc = acc * x + c;
            ctr.multiplications += 1;
            ctr.additions += 1;
        }
        acc
    }

    pub fn add_counted(&self, rhs: &Self, ctr: &mut OpCounter) -> Self {
        self.assert_same(rhs);
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() { (self, rhs) } else { (rhs, self) };
        let mut coeffs = long.coeffs.clone();
        for (a, &b) in coeffs.iter_mut().zip(&short.coeffs) {
            *a += b;
        }
        ctr.additions += short.coeffs.len() as u64;
        Self::from_trusted(self.field, coeffs)
    }

    pub fn sub_counted(&self, rhs: &Self, ctr: &mut OpCounter) -> Self {
        self.assert_same(rhs);
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect();
        ctr.additions += rhs.coeffs.len() as u64;
        Self::from_trusted(self.field, coeffs)
    }

    pub fn scale_counted(&self, c: FieldElement, ctr: &mut OpCounter) -> Self {
        ctr.multiplications += self.coeffs.len() as u64;
        Self::from_trusted(self.field, self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn scale(&self, c: FieldElement) -> Self {
        self.scale_counted(c, &mut OpCounter::new())
    }

    /// Schoolbook product.
    pub fn mul_counted(&self, rhs: &Self, ctr: &mut OpCounter) -> Self {
        self.assert_same(rhs);
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(self.field);
        }
        let (n, m) = (self.coeffs.len(), rhs.coeffs.len());
        let mut out = vec![self.field.zero(); n + m - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ctr.multiplications += (n * m) as u64;
        ctr.additions += (n * m) as u64;
        Self::from_trusted(self.field, out)
    }

    /// Product of `(x - r)` over all roots; the empty product is one.
    pub fn from_roots(field: FieldParams, roots: &[FieldElement]) -> Self {
        Self::from_roots_counted(field, roots, &mut OpCounter::new())
    }

    pub fn from_roots_counted(field: FieldParams, roots: &[FieldElement], ctr: &mut OpCounter) -> Self {
        let mut coeffs = Vec::with_capacity(roots.len() + 1);
        coeffs.push(field.one());
        for &r in roots {
            field.check(r).expect("root from a different field");
            coeffs.push(field.zero());
            for k in (1..coeffs.len()).rev() {
                let lower = coeffs[k - 1];
                coeffs[k] -= lower * r;
            }
            let n = coeffs.len() as u64 - 1;
            ctr.multiplications += n;
            ctr.additions += n;
        }
        // built in descending order
        coeffs.reverse();
        Self::from_trusted(field, coeffs)
    }

    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), PolyError> {
        self.div_rem_counted(divisor, &mut OpCounter::new())
    }

    pub fn div_rem_counted(&self, divisor: &Self, ctr: &mut OpCounter) -> Result<(Self, Self), PolyError> {
        self.assert_same(divisor);
        let lead = divisor.leading().ok_or(PolyError::DivisionByZeroPolynomial)?;
        let dn = divisor.coeffs.len();
        if self.coeffs.len() < dn {
            return Ok((Self::zero(self.field), self.clone()));
        }
        let lead_inv = if lead.value() == 1 {
            lead
        } else {
            ctr.inversions += 1;
            lead.inv()?
        };
        let mut rem = self.coeffs.clone();
        let mut quot = vec![self.field.zero(); rem.len() - dn + 1];
        for k in (0..quot.len()).rev() {
            let top = rem[k + dn - 1];
            if top.is_zero() {
                continue;
            }
            let q = top * lead_inv;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            ctr.multiplications += dn as u64 + 1;
            ctr.additions += dn as u64;
        }
        rem.truncate(dn - 1);
        Ok((Self::from_trusted(self.field, quot), Self::from_trusted(self.field, rem)))
    }

    pub fn rem_counted(&self, divisor: &Self, ctr: &mut OpCounter) -> Result<Self, PolyError> {
        Ok(self.div_rem_counted(divisor, ctr)?.1)
    }

    /// Whether `divisor` divides `self` exactly.
    pub fn is_divisible_by(&self, divisor: &Self) -> Result<bool, PolyError> {
        self.is_divisible_by_counted(divisor, &mut OpCounter::new())
    }

    pub fn is_divisible_by_counted(&self, divisor: &Self, ctr: &mut OpCounter) -> Result<bool, PolyError> {
        Ok(self.div_rem_counted(divisor, ctr)?.1.is_zero())
    }

    /// Whether `self` divides `dividend`.
    pub fn divides(&self, dividend: &Self) -> Result<bool, PolyError> {
        dividend.is_divisible_by(self)
    }

    pub fn monic(&self) -> Result<Self, PolyError> {
        let lead = self.leading().ok_or(PolyError::DivisionByZeroPolynomial)?;
        Ok(self.scale(lead.inv()?))
    }

    /// Monic greatest common divisor; zero when both inputs are zero.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut ctr = OpCounter::new();
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem_counted(&b, &mut ctr).expect("nonzero divisor");
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic().expect("nonzero polynomial")
        }
    }

    /// `self^exp mod modulus`.
    pub fn pow_mod(&self, mut exp: u64, modulus: &Self) -> Result<Self, PolyError> {
        let mut ctr = OpCounter::new();
        let mut base = self.rem_counted(modulus, &mut ctr)?;
        let mut acc = Self::one(self.field).rem_counted(modulus, &mut ctr)?;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_counted(&base, &mut ctr).rem_counted(modulus, &mut ctr)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul_counted(&base, &mut ctr).rem_counted(modulus, &mut ctr)?;
            }
        }
        Ok(acc)
    }

    /// Lagrange interpolation through distinct abscissas.
    pub fn interpolate(field: FieldParams, points: &[(FieldElement, FieldElement)]) -> Result<Self, PolyError> {
        let mut xs: Vec<u64> = Vec::with_capacity(points.len());
        for &(x, y) in points {
            field.check(x)?;
            field.check(y)?;
            xs.push(x.value());
        }
        xs.sort_unstable();
        if let Some(w) = xs.windows(2).find(|w| w[0] == w[1]) {
            return Err(PolyError::DuplicateAbscissa(w[0]));
        }
        let roots: Vec<FieldElement> = points.iter().map(|&(x, _)| x).collect();
        let full = Self::from_roots(field, &roots);
        let mut acc = vec![field.zero(); points.len()];
        for &(xi, yi) in points {
            // full / (x - xi) by synthetic division
            let n = full.coeffs.len() - 1;
            let mut basis = vec![field.zero(); n];
            let mut carry = field.zero();
            for k in (0..n).rev() {
                carry = full.coeffs[k + 1] + carry * xi;
                basis[k] = carry;
            }
            let denom = Self::from_trusted(field, basis.clone()).eval(xi);
            let w = yi * denom.inv()?;
            for (a, b) in acc.iter_mut().zip(basis) {
                *a += w * b;
            }
        }
        Ok(Self::from_trusted(field, acc))
    }

    /// Distinct roots in ascending order of representative.
    pub fn roots<R: RngCore + ?Sized>(&self, strategy: RootStrategy<'_>, rng: &mut R) -> Result<Vec<FieldElement>, PolyError> {
        let mut out = match strategy {
            RootStrategy::TrialOverCandidates(universe) => {
                let universe = universe.ok_or(PolyError::MissingUniverse)?;
                let mut found: Vec<FieldElement> =
                    universe.iter().copied().filter(|&c| self.eval(c).is_zero()).collect();
                found.dedup();
                found
            }
            RootStrategy::FullFactor => self.roots_by_factoring(rng)?,
        };
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn roots_by_factoring<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Vec<FieldElement>, PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomialRoots);
        }
        if self.coeffs.len() == 1 {
            return Ok(Vec::new());
        }
        let p = self.field.modulus();
        if p == 2 {
            let f = self.field;
            return Ok([f.zero(), f.one()].into_iter().filter(|&c| self.eval(c).is_zero()).collect());
        }
        let f = self.monic()?;
        let x = Self::x(self.field);
        let xp = x.pow_mod(p, &f)?;
        let linear_part = f.gcd(&(&xp - &x));
        let mut out = Vec::new();
        self.split_linear(linear_part, rng, &mut out)?;
        Ok(out)
    }

    fn split_linear<R: RngCore + ?Sized>(&self, g: Self, rng: &mut R, out: &mut Vec<FieldElement>) -> Result<(), PolyError> {
        match g.coeffs.len() {
            0 | 1 => return Ok(()),
            2 => {
                out.push(-(g.coeffs[0] * g.coeffs[1].inv()?));
                return Ok(());
            }
            _ => {}
        }
        let field = self.field;
        let half = (field.modulus() - 1) / 2;
        loop {
            let shift = Self::from_trusted(field, vec![field.sample(rng), field.one()]);
            let h = &shift.pow_mod(half, &g)? - &Self::one(field);
            let d = g.gcd(&h);
            let dd = d.coeffs.len();
            if dd > 1 && dd < g.coeffs.len() {
                let (other, _) = g.div_rem(&d)?;
                self.split_linear(d, rng, out)?;
                self.split_linear(other, rng, out)?;
                return Ok(());
            }
        }
    }

    #[inline]
    fn assert_same(&self, rhs: &Self) {
        assert_eq!(self.field, rhs.field, "polynomials over different fields");
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.add_counted(rhs, &mut OpCounter::new())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.sub_counted(rhs, &mut OpCounter::new())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.mul_counted(rhs, &mut OpCounter::new())
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial::from_trusted(self.field, self.coeffs.iter().map(|&c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f13() -> FieldParams {
        FieldParams::new(13).unwrap()
    }

    fn p13(c: &[u64]) -> Polynomial {
        Polynomial::from_u64s(f13(), c)
    }

    fn vals(v: &[FieldElement]) -> Vec<u64> {
        v.iter().map(|c| c.value()).collect()
    }

    #[test]
    fn from_roots_small() {
        let f = f13();
        let p = Polynomial::from_roots(f, &[f.elem(2), f.elem(3)]);
        assert_eq!(vals(p.coeffs()), vec![6, 8, 1]);
        assert!(Polynomial::from_roots(f, &[]).is_monic());
    }

    #[test]
    fn zero_polynomial_shape() {
        let z = Polynomial::zero(f13());
        assert_eq!(z.degree(), Degree::NegInf);
        assert!(Degree::NegInf < Degree::Finite(0));
        assert_eq!(p13(&[0, 0, 0]), z);
        assert_eq!(p13(&[5, 0]).degree(), Degree::Finite(0));
    }

    #[test]
    fn horner_counts() {
        let f = f13();
        let p = p13(&[1, 2, 3, 4, 5]);
        let mut ctr = OpCounter::new();
        let y = p.eval_counted(f.elem(2), &mut ctr);
        assert_eq!(y.value(), (1 + 2 * 2 + 3 * 4 + 4 * 8 + 5 * 16) % 13);
        assert_eq!((ctr.additions, ctr.multiplications), (4, 4));
        let mut ctr = OpCounter::new();
        p13(&[7]).eval_counted(f.elem(5), &mut ctr);
        assert_eq!(ctr, OpCounter::new());
    }

    #[test]
    fn division_by_zero_polynomial() {
        assert_eq!(p13(&[1, 1]).div_rem(&Polynomial::zero(f13())), Err(PolyError::DivisionByZeroPolynomial));
    }

    #[test]
    fn interpolation_rejects_duplicates() {
        let f = f13();
        let pts = [(f.elem(1), f.elem(2)), (f.elem(1), f.elem(3))];
        assert_eq!(Polynomial::interpolate(f, &pts), Err(PolyError::DuplicateAbscissa(1)));
    }

    #[test]
    fn root_finding_small_field() {
        let f = f13();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        // 2 is a non-residue mod 13, so x^2 - 2 is irreducible
        assert_eq!(f.elem(2).pow(6).value(), 12);
        assert!(p13(&[11, 0, 1]).roots(RootStrategy::FullFactor, &mut rng).unwrap().is_empty());
        // -1 is a residue mod 13 (5^2 = 25), so x^2 + 1 splits
        assert_eq!(vals(&p13(&[1, 0, 1]).roots(RootStrategy::FullFactor, &mut rng).unwrap()), vec![5, 8]);
        let cube = Polynomial::from_roots(f, &[f.elem(2), f.elem(2), f.elem(3)]);
        assert_eq!(vals(&cube.roots(RootStrategy::FullFactor, &mut rng).unwrap()), vec![2, 3]);
        let all: Vec<FieldElement> = (0..13).map(|v| f.elem(v)).collect();
        assert_eq!(vals(&cube.roots(RootStrategy::TrialOverCandidates(Some(&all)), &mut rng).unwrap()), vec![2, 3]);
        assert_eq!(cube.roots(RootStrategy::TrialOverCandidates(None), &mut rng), Err(PolyError::MissingUniverse));
        let everything = Polynomial::from_roots(f, &all);
        assert_eq!(everything.roots(RootStrategy::FullFactor, &mut rng).unwrap().len(), 13);
    }

    #[test]
    fn root_finding_large_field() {
        let f = FieldParams::mersenne61();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut roots: Vec<FieldElement> = (0..40).map(|_| f.sample(&mut rng)).collect();
        roots.push(f.zero());
        let noise = Polynomial::from_u64s(f, &[5, 0, 1]);
        let p = &Polynomial::from_roots(f, &roots) * &noise;
        let mut want = roots.clone();
        want.sort();
        want.dedup();
        let got = p.roots(RootStrategy::FullFactor, &mut rng).unwrap();
        for r in &got {
            assert!(p.eval(*r).is_zero());
        }
        assert!(want.iter().all(|r| got.contains(r)));
    }

    #[test]
    fn transcript_round_trip() {
        let p = p13(&[3, 0, 12]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"["3","0","12"]"#);
        let back: Vec<String> = serde_json::from_str(&json).unwrap();
        assert_eq!(Polynomial::from_decimal_strings(f13(), &back).unwrap(), p);
        assert!(Polynomial::from_decimal_strings(f13(), &["13"]).is_err());
    }

    fn arb_poly(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(0u64..13, 0..max_len)
    }

    proptest! {
        #[test]
        fn division_identity(a in arb_poly(12), b in arb_poly(6)) {
            let (a, b) = (p13(&a), p13(&b));
            prop_assume!(!b.is_zero());
            let (q, r) = a.div_rem(&b).unwrap();
            prop_assert!(r.degree() < b.degree());
            prop_assert_eq!(&(&q * &b) + &r, a);
        }

        #[test]
        fn product_evaluates_pointwise(a in arb_poly(8), b in arb_poly(8), x in 0u64..13) {
            let (a, b) = (p13(&a), p13(&b));
            let x = f13().elem(x);
            prop_assert_eq!((&a * &b).eval(x), a.eval(x) * b.eval(x));
            prop_assert_eq!((&a - &b).eval(x), a.eval(x) - b.eval(x));
        }

        #[test]
        fn interpolation_recovers(coeffs in arb_poly(8)) {
            let f = f13();
            let p = p13(&coeffs);
            let pts: Vec<_> = (0..8).map(|x| (f.elem(x), p.eval(f.elem(x)))).collect();
            prop_assert_eq!(Polynomial::interpolate(f, &pts).unwrap(), p);
        }

        #[test]
        fn from_roots_vanishes(roots in prop::collection::vec(0u64..13, 0..10)) {
            let f = f13();
            let rs: Vec<_> = roots.iter().map(|&r| f.elem(r)).collect();
            let p = Polynomial::from_roots(f, &rs);
            prop_assert!(p.is_monic());
            prop_assert_eq!(p.degree(), Degree::Finite(rs.len()));
            for r in rs {
                prop_assert!(p.eval(r).is_zero());
            }
        }

        #[test]
        fn factoring_agrees_with_trial(coeffs in arb_poly(10), seed in any::<u64>()) {
            let f = f13();
            let p = p13(&coeffs);
            prop_assume!(!p.is_zero());
            let all: Vec<_> = (0..13).map(|v| f.elem(v)).collect();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            prop_assert_eq!(
                p.roots(RootStrategy::FullFactor, &mut rng).unwrap(),
                p.roots(RootStrategy::TrialOverCandidates(Some(&all)), &mut rng).unwrap()
            );
        }
    }
}
