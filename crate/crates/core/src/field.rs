//! Prime-field arithmetic over `u64` moduli.
//!
//! Elements carry their modulus so that mixing fields is caught. The infix
//! operators panic on a mismatch; the `try_*` methods report it as an error.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The Mersenne prime 2^61 - 1, the default modulus.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("bit length {0} outside 2..=64")]
    LambdaOutOfRange(u32),
    #[error("zero has no multiplicative inverse")]
    NoInverse,
    #[error("field mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
}

/// Counts of field operations performed on behalf of one party.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    #[serde(with = "crate::dec")]
    pub additions: u64,
    #[serde(with = "crate::dec")]
    pub multiplications: u64,
    #[serde(with = "crate::dec")]
    pub inversions: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.additions + self.multiplications + self.inversions
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.additions += rhs.additions;
        self.multiplications += rhs.multiplications;
        self.inversions += rhs.inversions;
    }
}

/// A validated prime modulus together with its bit length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct FieldParams {
    modulus: u64,
    lambda: u32,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: String,
}

impl TryFrom<RawParams> for FieldParams {
    type Error = String;

    fn try_from(raw: RawParams) -> Result<Self, String> {
        let p: u64 = raw.p.parse().map_err(|e| format!("bad modulus {:?}: {e}", raw.p))?;
        FieldParams::new(p).map_err(|e| e.to_string())
    }
}

impl From<FieldParams> for RawParams {
    fn from(f: FieldParams) -> Self {
        RawParams { p: f.modulus.to_string() }
    }
}

impl Default for FieldParams {
    fn default() -> Self {
        Self::mersenne61()
    }
}

impl FieldParams {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        let lambda = 64 - modulus.leading_zeros();
        if !(2..=64).contains(&lambda) {
            return Err(FieldError::LambdaOutOfRange(lambda));
        }
        if !is_probable_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(Self { modulus, lambda })
    }

    pub fn mersenne61() -> Self {
        Self { modulus: MERSENNE_61, lambda: 61 }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Bit length of the modulus.
    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement { value: value % self.modulus, modulus: self.modulus }
    }

    /// Maps a signed integer into the field.
    pub fn elem_i64(&self, value: i64) -> FieldElement {
        let r = (value as i128).rem_euclid(self.modulus as i128);
        self.elem(r as u64)
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    /// Uniform element by rejection sampling on `lambda`-bit strings.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let mask = if self.lambda == 64 { u64::MAX } else { (1u64 << self.lambda) - 1 };
        loop {
            let v = rng.next_u64() & mask;
            if v < self.modulus {
                return FieldElement { value: v, modulus: self.modulus };
            }
        }
    }

    pub fn sample_nonzero<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let v = self.sample(rng);
            if !v.is_zero() {
                return v;
            }
        }
    }

    pub fn contains(&self, x: FieldElement) -> bool {
        x.modulus == self.modulus
    }

    pub(crate) fn check(&self, x: FieldElement) -> Result<(), FieldError> {
        if x.modulus == self.modulus {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch { left: self.modulus, right: x.modulus })
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.value.to_string())
    }
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn params(&self) -> FieldParams {
        FieldParams { modulus: self.modulus, lambda: 64 - self.modulus.leading_zeros() }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut exp: u64) -> FieldElement {
        let mut base = self;
        let mut acc = FieldElement { value: 1 % self.modulus, modulus: self.modulus };
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    pub fn inv(self) -> Result<FieldElement, FieldError> {
        if self.value == 0 {
            return Err(FieldError::NoInverse);
        }
        Ok(self.pow(self.modulus - 2))
    }

    pub fn try_add(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        Ok(self + rhs)
    }

    pub fn try_sub(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        Ok(self - rhs)
    }

    pub fn try_mul(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        Ok(self * rhs)
    }

    pub fn try_div(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(rhs)?;
        Ok(self * rhs.inv()?)
    }

    fn same_field(self, rhs: Self) -> Result<(), FieldError> {
        if self.modulus == rhs.modulus {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch { left: self.modulus, right: rhs.modulus })
        }
    }

    #[inline]
    fn assert_same(self, rhs: Self) {
        assert_eq!(self.modulus, rhs.modulus, "field elements from different fields");
    }
}

impl Add for FieldElement {
    type Output = FieldElement;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.assert_same(rhs);
        let p = self.modulus;
        let (s, overflow) = self.value.overflowing_add(rhs.value);
        let value = if overflow || s >= p { s.wrapping_sub(p) } else { s };
        FieldElement { value, modulus: p }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.assert_same(rhs);
        let value = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.modulus - (rhs.value - self.value)
        };
        FieldElement { value, modulus: self.modulus }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;

    #[inline]
    fn neg(self) -> Self {
        let value = if self.value == 0 { 0 } else { self.modulus - self.value };
        FieldElement { value, modulus: self.modulus }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.assert_same(rhs);
        FieldElement { value: mul_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    let prod = a as u128 * b as u128;
    if p == MERSENNE_61 {
        let s = (prod as u64 & MERSENNE_61) + (prod >> 61) as u64;
        let s = (s & MERSENNE_61) + (s >> 61);
        if s >= MERSENNE_61 {
            s - MERSENNE_61
        } else {
            s
        }
    } else {
        (prod % p as u128) as u64
    }
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Miller-Rabin with the first twelve prime bases.
pub fn is_probable_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
