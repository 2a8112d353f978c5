//! Zero-sum pseudorandom values and the auditor's unmasking routine.
//!
//! A shared key expands into a `rows x parties` matrix whose rows each sum
//! to zero. Column `j` blinds party `j`'s polynomial; the sums cancel when
//! everyone's blinded polynomials are added together.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::Serialize;

use crate::crypto::{hash, merkle_root, Digest, Prf, PrfKey};
use crate::field::{FieldElement, FieldParams, OpCounter};
use crate::poly::Polynomial;

const ZSPA_TAG: u8 = 0x21;

/// Public commitment to an encoding: the Merkle root of all values and the key hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZspaCommitment {
    pub root: Digest,
    pub key_hash: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZspaEncoding {
    /// `values[i][j]`: row `i`, party `j`.
    pub values: Vec<Vec<FieldElement>>,
    pub commitment: ZspaCommitment,
}

pub fn key_hash(key: &PrfKey) -> Digest {
    hash(&[b"ZSPA-KEY", &key.0])
}

/// Expands the key into `rows` zero-sum rows over `parties` columns.
pub fn encode(key: &PrfKey, field: FieldParams, rows: usize, parties: usize) -> ZspaEncoding {
    assert!(parties >= 1, "zero-sum encoding needs a party");
    let prf = Prf::new(key);
    let values: Vec<Vec<FieldElement>> = (0..rows)
        .map(|i| {
            let mut row: Vec<FieldElement> =
                (0..parties - 1).map(|j| prf.field_elem(field, ZSPA_TAG, &[i as u64, j as u64])).collect();
            let sum = row.iter().fold(field.zero(), |acc, &v| acc + v);
            row.push(-sum);
            row
        })
        .collect();
    let leaves: Vec<[u8; 8]> = values.iter().flatten().map(|v| v.value().to_be_bytes()).collect();
    let root = if leaves.is_empty() { hash(&[b"ZSPA-EMPTY"]) } else { merkle_root(&leaves).expect("nonempty") };
    ZspaEncoding { values, commitment: ZspaCommitment { root, key_hash: key_hash(key) } }
}

pub fn verify(key: &PrfKey, field: FieldParams, rows: usize, parties: usize, commitment: &ZspaCommitment) -> bool {
    key_hash(key) == commitment.key_hash && encode(key, field, rows, parties).commitment == *commitment
}

impl ZspaEncoding {
    /// Party `j`'s blinding polynomial, `sum_i values[i][j] x^i`.
    pub fn column_poly(&self, field: FieldParams, j: usize) -> Polynomial {
        Polynomial::new(field, self.values.iter().map(|row| row[j]).collect()).expect("same field")
    }
}

/// Keys that failed verification and unmasking polynomials for the rest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditOutcome {
    pub rejected: BTreeSet<usize>,
    pub masks: BTreeMap<usize, Polynomial>,
}

/// Checks each party's key and builds `zeta * xi - tau` for those that pass.
///
/// A missing key counts as a failed one.
#[allow(clippy::too_many_arguments)]
pub fn audit<R: RngCore + ?Sized>(
    field: FieldParams,
    rows: usize,
    parties: usize,
    keys: &[Option<PrfKey>],
    commitment: &ZspaCommitment,
    zeta: &Polynomial,
    rng: &mut R,
    ctr: &mut OpCounter,
) -> AuditOutcome {
    let mut out = AuditOutcome::default();
    let mut cache: Option<(PrfKey, ZspaEncoding)> = None;
    for j in 0..parties {
        let Some(key) = keys.get(j).copied().flatten() else {
            out.rejected.insert(j);
            continue;
        };
        if !cache.as_ref().is_some_and(|(k, _)| *k == key) {
            cache = Some((key, encode(&key, field, rows, parties)));
        }
        let enc = &cache.as_ref().unwrap().1;
        if enc.commitment != *commitment {
            out.rejected.insert(j);
            continue;
        }
        let tau = enc.column_poly(field, j);
        let xi = Polynomial::random(field, rows.saturating_sub(2), rng);
        let mask = zeta.mul_counted(&xi, ctr).sub_counted(&tau, ctr);
        out.masks.insert(j, mask);
    }
    out
}
