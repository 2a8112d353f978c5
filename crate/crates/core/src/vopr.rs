//! Verifiable oblivious polynomial randomisation.
//!
//! The sender holds `psi` and a coefficient mask whose anti-diagonal sums
//! form `alpha`; the receiver holds `beta` with an explicit random linear
//! factor. One OLE+ per coefficient pair leaves the receiver with
//! `theta = psi * beta + alpha` and nothing else.

use rand::RngCore;
use thiserror::Error;

use crate::field::{FieldElement, FieldParams, OpCounter};
use crate::ole::OleEngine;
use crate::poly::{Degree, Polynomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VoprError {
    #[error("{what} has degree {got}, expected {expected}")]
    ProtocolShapeError { what: &'static str, expected: usize, got: Degree },
    #[error("mask is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    MaskShape { rows: usize, cols: usize, want_rows: usize, want_cols: usize },
    #[error("receiver's evaluation at the challenge point does not verify")]
    VerificationFailed,
}

fn expect_degree(what: &'static str, p: &Polynomial, expected: usize) -> Result<(), VoprError> {
    if p.degree() == Degree::Finite(expected) {
        Ok(())
    } else {
        Err(VoprError::ProtocolShapeError { what, expected, got: p.degree() })
    }
}

/// Sender side: `psi` of degree `e` and an `(e+1) x (e'+1)` mask.
#[derive(Clone, Debug)]
pub struct SenderInput {
    pub psi: Polynomial,
    pub mask: Vec<Vec<FieldElement>>,
}

impl SenderInput {
    pub fn random_mask<R: RngCore + ?Sized>(field: FieldParams, e: usize, e_prime: usize, rng: &mut R) -> Vec<Vec<FieldElement>> {
        (0..=e).map(|_| (0..=e_prime).map(|_| field.sample(rng)).collect()).collect()
    }

    pub fn with_random_mask<R: RngCore + ?Sized>(psi: Polynomial, e_prime: usize, rng: &mut R) -> Self {
        let e = psi.degree().finite().unwrap_or(0);
        let mask = Self::random_mask(psi.field(), e, e_prime, rng);
        Self { psi, mask }
    }

    /// Anti-diagonal sums of the mask.
    pub fn alpha(&self) -> Polynomial {
        let field = self.psi.field();
        let width = self.mask.first().map_or(0, Vec::len);
        let mut coeffs = vec![field.zero(); self.mask.len() + width.saturating_sub(1)];
        for (t, row) in self.mask.iter().enumerate() {
            for (k, &a) in row.iter().enumerate() {
                coeffs[t + k] += a;
            }
        }
        Polynomial::new(field, coeffs).expect("mask from the same field")
    }

    fn check(&self, e: usize, e_prime: usize) -> Result<(), VoprError> {
        expect_degree("psi", &self.psi, e)?;
        let cols = self.mask.first().map_or(0, Vec::len);
        if self.mask.len() != e + 1 || self.mask.iter().any(|r| r.len() != e_prime + 1) {
            return Err(VoprError::MaskShape { rows: self.mask.len(), cols, want_rows: e + 1, want_cols: e_prime + 1 });
        }
        Ok(())
    }
}

/// Receiver side: `beta = linear * cofactor` with a random degree-one factor.
#[derive(Clone, Debug)]
pub struct ReceiverInput {
    pub linear: Polynomial,
    pub cofactor: Polynomial,
}

impl ReceiverInput {
    pub fn new(linear: Polynomial, cofactor: Polynomial) -> Result<Self, VoprError> {
        expect_degree("linear factor", &linear, 1)?;
        Ok(Self { linear, cofactor })
    }

    pub fn random_linear<R: RngCore + ?Sized>(field: FieldParams, rng: &mut R) -> Polynomial {
        Polynomial::random(field, 1, rng)
    }

    pub fn beta(&self, ctr: &mut OpCounter) -> Polynomial {
        self.linear.mul_counted(&self.cofactor, ctr)
    }
}

/// How a receiver misreports its evaluations in the verification round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvalForgery {
    #[default]
    Honest,
    Theta,
    Beta,
    Both,
}

/// Runs the `(e+1)(e'+1)` OLE+ calls and returns `theta` to the receiver.
#[allow(clippy::too_many_arguments)]
pub fn compute<S: RngCore + ?Sized, R: RngCore + ?Sized>(
    engine: &mut OleEngine,
    sender: &SenderInput,
    beta: &Polynomial,
    e: usize,
    e_prime: usize,
    sender_rng: &mut S,
    receiver_rng: &mut R,
    ctr: &mut OpCounter,
) -> Result<Polynomial, VoprError> {
    sender.check(e, e_prime)?;
    expect_degree("beta", beta, e_prime)?;
    let field = beta.field();
    let mut theta = vec![field.zero(); e + e_prime + 1];
    for (i, &g) in sender.psi.coeffs().iter().enumerate() {
        for (j, &b) in beta.coeffs().iter().enumerate() {
            let c = engine.eval((g, sender.mask[i][j]), b, sender_rng, receiver_rng, ctr);
            theta[i + j] += c;
            ctr.additions += 1;
        }
    }
    Ok(Polynomial::new(field, theta).expect("same field"))
}

/// The receiver's answer to a challenge point.
pub fn respond<R: RngCore + ?Sized>(
    theta: &Polynomial,
    beta: &Polynomial,
    z: FieldElement,
    forgery: EvalForgery,
    rng: &mut R,
    ctr: &mut OpCounter,
) -> (FieldElement, FieldElement) {
    let field = theta.field();
    let mut tz = theta.eval_counted(z, ctr);
    let mut bz = beta.eval_counted(z, ctr);
    if matches!(forgery, EvalForgery::Theta | EvalForgery::Both) {
        tz += field.sample_nonzero(rng);
    }
    if matches!(forgery, EvalForgery::Beta | EvalForgery::Both) {
        bz += field.sample_nonzero(rng);
    }
    (tz, bz)
}

/// Sender's check: `theta(z) = psi(z) * beta(z) + alpha(z)`.
pub fn verify(sender: &SenderInput, z: FieldElement, theta_z: FieldElement, beta_z: FieldElement, ctr: &mut OpCounter) -> bool {
    let lhs = sender.psi.eval_counted(z, ctr) * beta_z + sender.alpha().eval_counted(z, ctr);
    ctr.multiplications += 1;
    ctr.additions += 1;
    lhs == theta_z
}

/// Full run with verification; the sender picks `z` only after `theta` is fixed.
#[allow(clippy::too_many_arguments)]
pub fn run<S: RngCore + ?Sized, R: RngCore + ?Sized>(
    engine: &mut OleEngine,
    sender: &SenderInput,
    receiver: &ReceiverInput,
    e: usize,
    e_prime: usize,
    forgery: EvalForgery,
    sender_rng: &mut S,
    receiver_rng: &mut R,
    sender_ctr: &mut OpCounter,
    receiver_ctr: &mut OpCounter,
) -> Result<Polynomial, VoprError> {
    let beta = receiver.beta(receiver_ctr);
    let theta = compute(engine, sender, &beta, e, e_prime, sender_rng, receiver_rng, receiver_ctr)?;
    let z = beta.field().sample_nonzero(sender_rng);
    let (tz, bz) = respond(&theta, &beta, z, forgery, receiver_rng, receiver_ctr);
    if verify(sender, z, tz, bz, sender_ctr) {
        Ok(theta)
    } else {
        Err(VoprError::VerificationFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ole::OleMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(s: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(s)
    }

    #[test]
    fn alpha_is_anti_diagonal_sum() {
        let f = FieldParams::mersenne61();
        let mut r = rng(1);
        let psi = Polynomial::random(f, 4, &mut r);
        let s = SenderInput::with_random_mask(psi, 3, &mut r);
        let a = &s.mask;
        assert_eq!(s.alpha().coeff(3), a[0][3] + a[3][0] + a[1][2] + a[2][1]);
        assert_eq!(s.alpha().coeff(7), a[4][3]);
    }

    #[test]
    fn call_count_is_product_of_lengths() {
        let f = FieldParams::mersenne61();
        let mut r = rng(2);
        let d = 8;
        let psi = Polynomial::random(f, d + 1, &mut r);
        let sender = SenderInput::with_random_mask(psi, 2 * d, &mut r);
        let receiver = ReceiverInput::new(ReceiverInput::random_linear(f, &mut r), Polynomial::random(f, 2 * d - 1, &mut r)).unwrap();
        let mut eng = OleEngine::new(OleMode::Ideal, false);
        let (mut c1, mut c2) = (OpCounter::new(), OpCounter::new());
        run(&mut eng, &sender, &receiver, d + 1, 2 * d, EvalForgery::Honest, &mut rng(3), &mut rng(4), &mut c1, &mut c2).unwrap();
        assert_eq!(eng.calls(), 170);
    }

    #[test]
    fn theta_exhaustive_small_field() {
        // every psi with nonzero leading coefficient, e = e' = 2, fixed beta and mask
        let f = FieldParams::new(13).unwrap();
        let mut r = rng(5);
        let receiver = ReceiverInput::new(Polynomial::from_u64s(f, &[3, 1]), Polynomial::from_u64s(f, &[7, 1])).unwrap();
        let beta = receiver.beta(&mut OpCounter::new());
        // the constructed OLE+ needs nonzero receiver inputs
        assert!(beta.coeffs().iter().all(|c| !c.is_zero()));
        let mask = SenderInput::random_mask(f, 2, 2, &mut r);
        for mode in [OleMode::Ideal, OleMode::Constructed] {
            let mut eng = OleEngine::new(mode, false);
            for g0 in 0..13 {
                for g1 in 0..13 {
                    for g2 in 1..13 {
                        let psi = Polynomial::from_u64s(f, &[g0, g1, g2]);
                        let sender = SenderInput { psi: psi.clone(), mask: mask.clone() };
                        let theta = compute(&mut eng, &sender, &beta, 2, 2, &mut r, &mut rng(9), &mut OpCounter::new()).unwrap();
                        assert_eq!(theta, &(&psi * &beta) + &sender.alpha());
                    }
                }
            }
        }
    }

    #[test]
    fn forged_evaluations_are_caught() {
        let f = FieldParams::mersenne61();
        let mut r = rng(6);
        let mut caught = [0u32; 4];
        let cases = [EvalForgery::Honest, EvalForgery::Theta, EvalForgery::Beta, EvalForgery::Both];
        let trials = 300;
        for _ in 0..trials {
            let sender = SenderInput::with_random_mask(Polynomial::random(f, 3, &mut r), 4, &mut r);
            let receiver = ReceiverInput::new(ReceiverInput::random_linear(f, &mut r), Polynomial::random(f, 3, &mut r)).unwrap();
            for (i, &forgery) in cases.iter().enumerate() {
                let mut eng = OleEngine::new(OleMode::Ideal, false);
                let res = run(&mut eng, &sender, &receiver, 3, 4, forgery, &mut rng(i as u64), &mut r, &mut OpCounter::new(), &mut OpCounter::new());
                if res == Err(VoprError::VerificationFailed) {
                    caught[i] += 1;
                }
            }
        }
        assert_eq!(caught, [0, trials, trials, trials]);
    }

    #[test]
    fn degree_mismatch_is_a_shape_error() {
        let f = FieldParams::mersenne61();
        let mut r = rng(7);
        let sender = SenderInput::with_random_mask(Polynomial::random(f, 3, &mut r), 4, &mut r);
        let beta = Polynomial::random(f, 5, &mut r);
        let mut eng = OleEngine::new(OleMode::Ideal, false);
        let err = compute(&mut eng, &sender, &beta, 3, 4, &mut rng(1), &mut rng(2), &mut OpCounter::new()).unwrap_err();
        assert!(matches!(err, VoprError::ProtocolShapeError { what: "beta", expected: 4, .. }));
        assert!(ReceiverInput::new(Polynomial::random(f, 2, &mut r), Polynomial::one(f)).is_err());
    }
}
