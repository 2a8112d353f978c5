//! Fixed-capacity hash-table binning and the payload-plus-tag element encoding.
//!
//! Each party places its encoded elements into `bins` buckets of exactly
//! `capacity` slots, padding with dummies that can never pass validation.

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::hash_u64;
use crate::field::{FieldElement, FieldParams, OpCounter};
use crate::poly::Polynomial;

const MAX_BINS: u64 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinningError {
    #[error("no table with at most {max} bins meets the overflow bound (elements={elements}, capacity={capacity}, exponent={exponent})")]
    SizingError { elements: u64, capacity: u64, exponent: u32, max: u64 },
    #[error("payload {payload} does not fit in {bits} bits")]
    EncodingError { payload: u64, bits: u32 },
    #[error("bin {bin} received {count} elements but holds only {capacity}")]
    OverflowError { bin: usize, count: usize, capacity: usize },
    #[error("field with {0} bits is too small for the element encoding")]
    FieldTooSmall(u32),
}

/// Log2 of `h * (e^s / (1+s)^(1+s))^(c/h)` with `s = d*h/c - 1`, or `None` when `s <= 0`.
pub fn overflow_log2_bound(elements: u64, capacity: u64, bins: u64) -> Option<f64> {
    let (c, d, h) = (elements as f64, capacity as f64, bins as f64);
    let sigma = d * h / c - 1.0;
    if sigma <= 0.0 {
        return None;
    }
    let ln = h.ln() + (c / h) * (sigma - (1.0 + sigma) * sigma.ln_1p());
    Some(ln / std::f64::consts::LN_2)
}

fn bound_holds(elements: u64, capacity: u64, bins: u64, exponent: u32) -> bool {
    overflow_log2_bound(elements, capacity, bins).is_some_and(|b| b <= -(exponent as f64))
}

/// Smallest bin count whose overflow probability bound is at most `2^-exponent`.
pub fn size_table(elements: u64, capacity: u64, exponent: u32) -> Result<u64, BinningError> {
    let err = BinningError::SizingError { elements, capacity, exponent, max: MAX_BINS };
    if capacity == 0 {
        return Err(err);
    }
    if elements == 0 {
        return Ok(1);
    }
    let mut hi = (elements / capacity).max(1);
    while !bound_holds(elements, capacity, hi, exponent) {
        if hi >= MAX_BINS {
            return Err(err);
        }
        hi = (hi * 2).min(MAX_BINS);
    }
    // failing values of h are a down-set once the bound drops below one
    let mut lo = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound_holds(elements, capacity, mid, exponent) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableParams {
    pub bins: usize,
    pub capacity: usize,
    pub overflow_exponent: u32,
    pub max_elements: usize,
}

impl TableParams {
    pub fn sized(max_elements: usize, capacity: usize, overflow_exponent: u32) -> Result<Self, BinningError> {
        let bins = size_table(max_elements as u64, capacity as u64, overflow_exponent)? as usize;
        Ok(Self { bins, capacity, overflow_exponent, max_elements })
    }
}

/// Splits the usable field bits into a payload and a hash tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub payload_bits: u32,
    pub tag_bits: u32,
}

impl Encoding {
    pub fn for_field(field: FieldParams) -> Result<Self, BinningError> {
        let usable = field.lambda() - 1;
        if usable < 2 {
            return Err(BinningError::FieldTooSmall(field.lambda()));
        }
        let tag_bits = usable / 2;
        Ok(Self { payload_bits: usable - tag_bits, tag_bits })
    }

    pub fn payload_domain(&self) -> u64 {
        1u64 << self.payload_bits
    }

    fn tag(&self, payload: u64) -> u64 {
        hash_u64(b"ENC-TAG", payload).prefix_u64() >> (64 - self.tag_bits)
    }

    pub fn encode(&self, field: FieldParams, payload: u64) -> Result<FieldElement, BinningError> {
        if payload >= self.payload_domain() {
            return Err(BinningError::EncodingError { payload, bits: self.payload_bits });
        }
        Ok(field.elem((payload << self.tag_bits) | self.tag(payload)))
    }

    /// The payload if `x` carries a matching tag.
    pub fn validate(&self, x: FieldElement) -> Option<u64> {
        let v = x.value();
        if v >> (self.payload_bits + self.tag_bits) != 0 {
            return None;
        }
        let payload = v >> self.tag_bits;
        let tag = v & ((1u64 << self.tag_bits) - 1);
        (self.tag(payload) == tag).then_some(payload)
    }
}

pub fn bin_of(x: FieldElement, bins: usize) -> usize {
    (hash_u64(b"BIN", x.value()).prefix_u64() % bins as u64) as usize
}

/// One party's table: every bin holds exactly `capacity` field elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinnedSet {
    bins: Vec<Vec<FieldElement>>,
    real: Vec<Vec<FieldElement>>,
}

impl BinnedSet {
    pub fn build<R: RngCore + ?Sized>(
        field: FieldParams,
        table: &TableParams,
        encoding: &Encoding,
        encoded: &[FieldElement],
        rng: &mut R,
    ) -> Result<Self, BinningError> {
        let mut real = vec![Vec::new(); table.bins];
        let mut sorted = encoded.to_vec();
        sorted.sort();
        sorted.dedup();
        for x in sorted {
            real[bin_of(x, table.bins)].push(x);
        }
        if let Some((bin, b)) = real.iter().enumerate().find(|(_, b)| b.len() > table.capacity) {
            return Err(BinningError::OverflowError { bin, count: b.len(), capacity: table.capacity });
        }
        let bins = real
            .iter()
            .map(|b| {
                let mut slots = b.clone();
                while slots.len() < table.capacity {
                    let dummy = field.sample(rng);
                    if encoding.validate(dummy).is_none() {
                        slots.push(dummy);
                    }
                }
                slots.shuffle(rng);
                slots
            })
            .collect();
        Ok(Self { bins, real })
    }

    pub fn bins(&self) -> &[Vec<FieldElement>] {
        &self.bins
    }

    pub fn real_elements(&self, bin: usize) -> &[FieldElement] {
        &self.real[bin]
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// Monic polynomial vanishing exactly on a bin's slots.
    pub fn bin_poly(&self, bin: usize, ctr: &mut OpCounter) -> Polynomial {
        let slots = &self.bins[bin];
        Polynomial::from_roots_counted(slots[0].params(), slots, ctr)
    }
}
