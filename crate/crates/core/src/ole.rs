//! Oblivious linear evaluation.
//!
//! The sender holds `(a, b)`, the receiver holds `c` and learns `a*c + b`.
//! `Ideal` evaluates the functionality directly; `Constructed` builds the
//! randomised variant out of two plain OLE calls.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::field::{FieldElement, OpCounter};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OleMode {
    #[default]
    Ideal,
    Constructed,
}

/// The plain functionality: the receiver with `c` learns `a*c + b`.
pub fn f_ole(a: FieldElement, b: FieldElement, c: FieldElement) -> FieldElement {
    a * c + b
}

/// What one OLE+ instance leaves in a verbose transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OleRecord {
    pub instance: u64,
    pub mode: OleMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<FieldElement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<FieldElement>,
}

/// Hands out single-use OLE+ instances and optionally logs them.
#[derive(Clone, Debug, Default)]
pub struct OleEngine {
    mode: OleMode,
    next_id: u64,
    log: Option<Vec<OleRecord>>,
}

impl OleEngine {
    pub fn new(mode: OleMode, verbose: bool) -> Self {
        Self { mode, next_id: 0, log: verbose.then(Vec::new) }
    }

    pub fn mode(&self) -> OleMode {
        self.mode
    }

    pub fn calls(&self) -> u64 {
        self.next_id
    }

    pub fn records(&self) -> &[OleRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn take_records(&mut self) -> Vec<OleRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Runs one OLE+ instance. The receiver ends up with `a*c + b`.
    pub fn eval<S: RngCore + ?Sized, R: RngCore + ?Sized>(
        &mut self,
        sender: (FieldElement, FieldElement),
        receiver: FieldElement,
        sender_rng: &mut S,
        receiver_rng: &mut R,
        ctr: &mut OpCounter,
    ) -> FieldElement {
        let instance = self.next_id;
        self.next_id += 1;
        let (a, b) = sender;
        let c = receiver;
        let (out, t, k) = match self.mode {
            OleMode::Ideal => {
                ctr.multiplications += 1;
                ctr.additions += 1;
                (f_ole(a, b, c), None, None)
            }
            OleMode::Constructed => {
                let field = c.params();
                // c = 0 has no inverse; any fixed stand-in keeps the sender's view uniform
                let c_inv = c.inv().unwrap_or(field.one());
                ctr.inversions += 1;
                let r = field.sample(receiver_rng);
                let u = field.sample(sender_rng);
                let t = f_ole(c_inv, r, u);
                let k = f_ole(t + a, b - u, c);
                let s = k - r * c;
                ctr.multiplications += 3;
                ctr.additions += 5;
                (s, Some(t), Some(k))
            }
        };
        if let Some(log) = self.log.as_mut() {
            log.push(OleRecord { instance, mode: self.mode, t, k });
        }
        out
    }
}
