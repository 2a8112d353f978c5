//! Hashing, PRF/PRP, commitments, Merkle trees, coin tossing and a small
//! public-key sealed box.

use std::fmt;

use hmac::{Hmac, Mac};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::field::{FieldElement, FieldParams};

pub const HASH_ALGORITHM: &str = "sha256";

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("merkle index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("merkle tree needs at least one leaf")]
    EmptyTree,
    #[error("coin toss aborted: party {0} revealed an opening that does not match its commitment")]
    CoinTossAbort(usize),
    #[error("coin toss needs at least two parties, got {0}")]
    TooFewParties(usize),
    #[error("sealed box failed to authenticate")]
    DecryptionFailure,
    #[error("value {value} outside permutation domain of size {domain}")]
    OutOfDomain { value: u64, domain: u64 },
}

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", hex::encode(&self.0[..8]))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", hex::encode(self.0))
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| serde::de::Error::custom("expected 32 bytes"))?;
        Ok(Digest(arr))
    }
}

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn xor(&self, other: &Digest) -> Digest {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(other.0) {
            *a ^= b;
        }
        Digest(out)
    }

    /// First eight bytes as a big-endian integer.
    pub fn prefix_u64(&self) -> u64 {
        u64::from_be_bytes(self.0[..8].try_into().unwrap())
    }
}

/// SHA-256 over length-prefixed parts.
pub fn hash(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p);
    }
    Digest(h.finalize().into())
}

pub fn hash_u64(tag: &[u8], v: u64) -> Digest {
    hash(&[tag, &v.to_be_bytes()])
}

/// Secret key for the PRF and PRP. Keys are 32 bytes regardless of the field size.
pub type PrfKey = Digest;

pub fn random_key<R: RngCore + ?Sized>(rng: &mut R) -> PrfKey {
    let mut k = [0u8; 32];
    rng.fill_bytes(&mut k);
    Digest(k)
}

/// Keyed HMAC-SHA256 ready to be evaluated many times.
#[derive(Clone)]
pub struct Prf {
    mac: HmacSha256,
}

impl Prf {
    pub fn new(key: &PrfKey) -> Self {
        Self { mac: HmacSha256::new_from_slice(&key.0).expect("hmac accepts any key length") }
    }

    fn block(&self, tag: u8, words: &[u64], counter: u32) -> [u8; 32] {
        let mut mac = self.mac.clone();
        mac.update(&[tag]);
        for w in words {
            mac.update(&w.to_be_bytes());
        }
        mac.update(&counter.to_be_bytes());
        mac.finalize().into_bytes().into()
    }

    /// Uniform field element, by counter-mode rejection sampling.
    pub fn field_elem(&self, field: FieldParams, tag: u8, words: &[u64]) -> FieldElement {
        let bits = field.lambda();
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        for counter in 0.. {
            let block = self.block(tag, words, counter);
            for chunk in block.chunks_exact(8) {
                let v = u64::from_be_bytes(chunk.try_into().unwrap()) & mask;
                if v < field.modulus() {
                    return field.elem(v);
                }
            }
        }
        unreachable!()
    }

    /// Derives a fresh 32-byte key.
    pub fn key(&self, tag: u8, words: &[u64]) -> PrfKey {
        Digest(self.block(tag, words, 0))
    }

    fn bits(&self, tag: u8, words: &[u64], width: u32) -> u64 {
        let v = u64::from_be_bytes(self.block(tag, words, 0)[..8].try_into().unwrap());
        if width == 64 {
            v
        } else {
            v & ((1u64 << width) - 1)
        }
    }
}

/// `prf(key, input)`: a field element determined by the key and the tagged input words.
pub fn prf(key: &PrfKey, field: FieldParams, tag: u8, words: &[u64]) -> FieldElement {
    Prf::new(key).field_elem(field, tag, words)
}

const FEISTEL_ROUNDS: u64 = 8;
const PRP_TAG: u8 = 0xF0;

/// Balanced Feistel permutation on `[0, domain)`, cycle-walking out-of-range values.
#[derive(Clone)]
pub struct Prp {
    prf: Prf,
    domain: u64,
    half_bits: u32,
}

impl Prp {
    pub fn new(key: &PrfKey, domain: u64) -> Self {
        assert!(domain >= 1, "empty permutation domain");
        let bits = 64 - (domain.saturating_sub(1)).leading_zeros();
        let width = (bits + (bits & 1)).max(2);
        Self { prf: Prf::new(key), domain, half_bits: width / 2 }
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    fn round(&self, i: u64, half: u64) -> u64 {
        self.prf.bits(PRP_TAG, &[i, half], self.half_bits)
    }

    fn mask(&self) -> u64 {
        (1u64 << self.half_bits) - 1
    }

    fn forward(&self, x: u64) -> u64 {
        let mut left = x >> self.half_bits;
        let mut right = x & self.mask();
        for i in 0..FEISTEL_ROUNDS {
            let next = left ^ self.round(i, right);
            left = right;
            right = next;
        }
        (left << self.half_bits) | right
    }

    fn backward(&self, y: u64) -> u64 {
        let mut left = y >> self.half_bits;
        let mut right = y & self.mask();
        for i in (0..FEISTEL_ROUNDS).rev() {
            let prev = right ^ self.round(i, left);
            right = left;
            left = prev;
        }
        (left << self.half_bits) | right
    }

    pub fn permute(&self, x: u64) -> Result<u64, CryptoError> {
        self.in_domain(x)?;
        let mut y = self.forward(x);
        while y >= self.domain {
            y = self.forward(y);
        }
        Ok(y)
    }

    pub fn invert(&self, y: u64) -> Result<u64, CryptoError> {
        self.in_domain(y)?;
        let mut x = self.backward(y);
        while x >= self.domain {
            x = self.backward(x);
        }
        Ok(x)
    }

    fn in_domain(&self, v: u64) -> Result<(), CryptoError> {
        if v < self.domain {
            Ok(())
        } else {
            Err(CryptoError::OutOfDomain { value: v, domain: self.domain })
        }
    }
}

/// Pseudorandom permutation of the field.
pub fn prp(key: &PrfKey, x: FieldElement) -> FieldElement {
    let f = x.params();
    f.elem(Prp::new(key, f.modulus()).permute(x.value()).expect("reduced element"))
}

pub fn prp_inv(key: &PrfKey, y: FieldElement) -> FieldElement {
    let f = y.params();
    f.elem(Prp::new(key, f.modulus()).invert(y.value()).expect("reduced element"))
}

pub type Commitment = Digest;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    #[serde(with = "hex_bytes")]
    pub message: Vec<u8>,
    pub randomness: Digest,
}

pub fn commit_with(message: &[u8], randomness: Digest) -> (Commitment, Opening) {
    let com = hash(&[b"COM", message, &randomness.0]);
    (com, Opening { message: message.to_vec(), randomness })
}

pub fn commit<R: RngCore + ?Sized>(message: &[u8], rng: &mut R) -> (Commitment, Opening) {
    commit_with(message, random_key(rng))
}

pub fn verify_commit(com: &Commitment, opening: &Opening) -> bool {
    commit_with(&opening.message, opening.randomness).0 == *com
}

fn leaf_hash(leaf: &[u8]) -> Digest {
    hash(&[&[0x00], leaf])
}

fn node_hash(left: &Digest, right: &Digest) -> Digest {
    hash(&[&[0x01], &left.0, &right.0])
}

fn pad_hash(index: usize) -> Digest {
    hash(&[b"MTPAD", &(index as u64).to_be_bytes()])
}

/// Binary Merkle tree padded to a power of two.
#[derive(Clone, Debug)]
pub struct MerkleTree {
    levels: Vec<Vec<Digest>>,
    len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleProof {
    pub index: usize,
    pub siblings: Vec<Digest>,
}

impl MerkleTree {
    pub fn build<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Self, CryptoError> {
        if leaves.is_empty() {
            return Err(CryptoError::EmptyTree);
        }
        let padded = leaves.len().next_power_of_two();
        let mut level: Vec<Digest> = leaves.iter().map(|l| leaf_hash(l.as_ref())).collect();
        level.extend((leaves.len()..padded).map(pad_hash));
        let mut levels = vec![level];
        while levels.last().unwrap().len() > 1 {
            let next = levels.last().unwrap().chunks(2).map(|pair| node_hash(&pair[0], &pair[1])).collect();
            levels.push(next);
        }
        Ok(Self { levels, len: leaves.len() })
    }

    pub fn root(&self) -> Digest {
        self.levels.last().unwrap()[0]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn proof(&self, index: usize) -> Result<MerkleProof, CryptoError> {
        if index >= self.len {
            return Err(CryptoError::IndexOutOfRange { index, len: self.len });
        }
        let mut siblings = Vec::with_capacity(self.levels.len() - 1);
        let mut i = index;
        for level in &self.levels[..self.levels.len() - 1] {
            siblings.push(level[i ^ 1]);
            i >>= 1;
        }
        Ok(MerkleProof { index, siblings })
    }
}

pub fn merkle_root<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Digest, CryptoError> {
    Ok(MerkleTree::build(leaves)?.root())
}

pub fn verify_merkle_proof(root: &Digest, leaf: &[u8], proof: &MerkleProof) -> bool {
    if proof.siblings.len() >= usize::BITS as usize || proof.index >> proof.siblings.len() != 0 {
        return false;
    }
    let mut acc = leaf_hash(leaf);
    let mut i = proof.index;
    for sib in &proof.siblings {
        acc = if i & 1 == 0 { node_hash(&acc, sib) } else { node_hash(sib, &acc) };
        i >>= 1;
    }
    acc == *root
}

/// One party's contribution to a commit-reveal coin toss.
#[derive(Clone, Debug)]
pub struct CoinShare {
    pub commitment: Commitment,
    pub opening: Opening,
}

impl CoinShare {
    pub fn new<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let contribution = random_key(rng);
        let (commitment, opening) = commit(&contribution.0, rng);
        Self { commitment, opening }
    }
}

/// Checks every reveal against its commitment and XORs the contributions.
pub fn coin_toss_finish(commitments: &[Commitment], reveals: &[Opening]) -> Result<Digest, CryptoError> {
    if commitments.len() < 2 {
        return Err(CryptoError::TooFewParties(commitments.len()));
    }
    let mut out = Digest::default();
    for (i, (com, open)) in commitments.iter().zip(reveals).enumerate() {
        if !verify_commit(com, open) || open.message.len() != 32 {
            return Err(CryptoError::CoinTossAbort(i));
        }
        out = out.xor(&Digest(open.message.as_slice().try_into().unwrap()));
    }
    if reveals.len() < commitments.len() {
        return Err(CryptoError::CoinTossAbort(reveals.len()));
    }
    Ok(out)
}

/// Honest coin toss among parties each drawing from their own randomness.
pub fn coin_toss<R: RngCore>(rngs: &mut [R]) -> Result<Digest, CryptoError> {
    let shares: Vec<CoinShare> = rngs.iter_mut().map(|r| CoinShare::new(r)).collect();
    let coms: Vec<_> = shares.iter().map(|s| s.commitment).collect();
    let opens: Vec<_> = shares.into_iter().map(|s| s.opening).collect();
    coin_toss_finish(&coms, &opens)
}

/// Safe prime 2q + 1 whose quadratic residues form a group of prime order q.
const GROUP_MODULUS: u64 = 4_611_686_018_427_377_339;
const GROUP_ORDER: u64 = 2_305_843_009_213_688_669;
const GROUP_GENERATOR: u64 = 4;

fn gmul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % GROUP_MODULUS as u128) as u64
}

fn gpow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = gmul(acc, base);
        }
        base = gmul(base, base);
        exp >>= 1;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey(pub u64);

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SecretKey(u64);

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

pub fn keygen<R: RngCore + ?Sized>(rng: &mut R) -> (SecretKey, PublicKey) {
    let sk = 1 + rng.next_u64() % (GROUP_ORDER - 1);
    (SecretKey(sk), PublicKey(gpow(GROUP_GENERATOR, sk)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedBox {
    pub ephemeral: u64,
    #[serde(with = "hex_bytes")]
    pub ciphertext: Vec<u8>,
    pub tag: Digest,
}

fn keystream(shared: u64, ephemeral: u64, len: usize) -> Vec<u8> {
    let key = hash(&[b"SEAL-KEY", &shared.to_be_bytes(), &ephemeral.to_be_bytes()]);
    let prf = Prf::new(&key);
    let mut out = Vec::with_capacity(len + 32);
    let mut block = 0u64;
    while out.len() < len {
        out.extend_from_slice(&prf.key(0x5E, &[block]).0);
        block += 1;
    }
    out.truncate(len);
    out
}

fn seal_tag(shared: u64, ephemeral: u64, ciphertext: &[u8]) -> Digest {
    hash(&[b"SEAL-TAG", &shared.to_be_bytes(), &ephemeral.to_be_bytes(), ciphertext])
}

pub fn sealed_enc<R: RngCore + ?Sized>(pk: &PublicKey, message: &[u8], rng: &mut R) -> SealedBox {
    let r = 1 + rng.next_u64() % (GROUP_ORDER - 1);
    let ephemeral = gpow(GROUP_GENERATOR, r);
    let shared = gpow(pk.0, r);
    let ciphertext: Vec<u8> = message.iter().zip(keystream(shared, ephemeral, message.len())).map(|(m, k)| m ^ k).collect();
    let tag = seal_tag(shared, ephemeral, &ciphertext);
    SealedBox { ephemeral, ciphertext, tag }
}

pub fn sealed_dec(sk: &SecretKey, sealed: &SealedBox) -> Result<Vec<u8>, CryptoError> {
    let shared = gpow(sealed.ephemeral % GROUP_MODULUS, sk.0);
    if seal_tag(shared, sealed.ephemeral, &sealed.ciphertext) != sealed.tag {
        return Err(CryptoError::DecryptionFailure);
    }
    Ok(sealed
        .ciphertext
        .iter()
        .zip(keystream(shared, sealed.ephemeral, sealed.ciphertext.len()))
        .map(|(c, k)| c ^ k)
        .collect())
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
