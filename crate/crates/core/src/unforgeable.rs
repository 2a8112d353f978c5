//! Polynomials of the form `zeta * omega * pi + gamma`, whose tampering is
//! detected by checking divisibility by the secret `zeta`.

use rand::RngCore;

use crate::field::{FieldParams, OpCounter};
use crate::poly::Polynomial;

/// A random `gamma` of the given degree sharing no factor with `zeta`.
pub fn coprime_mask<R: RngCore + ?Sized>(zeta: &Polynomial, degree: usize, rng: &mut R) -> Polynomial {
    loop {
        let gamma = Polynomial::random(zeta.field(), degree, rng);
        if zeta.gcd(&gamma).degree().finite() == Some(0) {
            return gamma;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Blinding {
    pub zeta: Polynomial,
    pub omega: Polynomial,
    pub gamma: Polynomial,
}

impl Blinding {
    pub fn sample<R: RngCore + ?Sized>(field: FieldParams, zeta_degree: usize, omega_degree: usize, gamma_degree: usize, rng: &mut R) -> Self {
        let zeta = Polynomial::random(field, zeta_degree, rng);
        let omega = Polynomial::random(field, omega_degree, rng);
        let gamma = coprime_mask(&zeta, gamma_degree, rng);
        Self { zeta, omega, gamma }
    }

    pub fn apply(&self, pi: &Polynomial, ctr: &mut OpCounter) -> Polynomial {
        self.zeta.mul_counted(&self.omega, ctr).mul_counted(pi, ctr).add_counted(&self.gamma, ctr)
    }
}

pub fn verify_single(theta: &Polynomial, zeta: &Polynomial, gamma: &Polynomial) -> bool {
    (theta - gamma).is_divisible_by(zeta).unwrap_or(false)
}

/// Checks the sum only, so offsets that cancel across the batch go unnoticed.
pub fn verify_batch(thetas: &[Polynomial], zeta: &Polynomial, gammas: &[Polynomial]) -> bool {
    let f = zeta.field();
    let sum_theta = thetas.iter().fold(Polynomial::zero(f), |a, t| &a + t);
    let sum_gamma = gammas.iter().fold(Polynomial::zero(f), |a, g| &a + g);
    verify_single(&sum_theta, zeta, &sum_gamma)
}
