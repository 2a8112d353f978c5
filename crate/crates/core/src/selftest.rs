//! Exhaustive checks over the 13-element field.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::field::{FieldElement, FieldParams, OpCounter};
use crate::ole::{f_ole, OleEngine, OleMode};
use crate::poly::{Polynomial, RootStrategy};
use crate::vopr::{self, SenderInput};

const P: u64 = 13;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub cases: u64,
    pub failure: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn check(name: &'static str, body: impl FnOnce() -> Result<u64, String>) -> Check {
    match body() {
        Ok(cases) => Check { name, cases, failure: None },
        Err(e) => Check { name, cases: 0, failure: Some(e) },
    }
}

fn small() -> FieldParams {
    FieldParams::new(P).expect("13 is prime")
}

fn elems(f: FieldParams) -> impl Iterator<Item = FieldElement> + Clone {
    (0..P).map(move |v| f.elem(v))
}

/// Every polynomial of exactly `degree`, by coefficient vector.
fn all_of_degree(f: FieldParams, degree: usize) -> Vec<Polynomial> {
    let count = P.pow(degree as u32 + 1);
    (0..count)
        .filter(|v| v / P.pow(degree as u32) != 0)
        .map(|mut v| {
            let coeffs: Vec<u64> = (0..=degree)
                .map(|_| {
                    let c = v % P;
                    v /= P;
                    c
                })
                .collect();
            Polynomial::from_u64s(f, &coeffs)
        })
        .collect()
}

fn inverses() -> Result<u64, String> {
    let f = small();
    for x in elems(f).skip(1) {
        let inv = x.inv().map_err(|e| e.to_string())?;
        if x * inv != f.one() || x.pow(P - 1) != f.one() {
            return Err(format!("{x} has no consistent inverse"));
        }
    }
    Ok(P - 1)
}

fn ole() -> Result<u64, String> {
    let f = small();
    let mut engine = OleEngine::new(OleMode::Constructed, false);
    let (mut sr, mut rr) = (ChaCha20Rng::seed_from_u64(1), ChaCha20Rng::seed_from_u64(2));
    let mut n = 0;
    for a in elems(f) {
        for b in elems(f) {
            for c in elems(f).skip(1) {
                let got = engine.eval((a, b), c, &mut sr, &mut rr, &mut OpCounter::new());
                if got != f_ole(a, b, c) {
                    return Err(format!("OLE+({a}, {b}; {c}) = {got}"));
                }
                n += 1;
            }
        }
    }
    Ok(n)
}

fn horner_and_interpolation() -> Result<u64, String> {
    let f = small();
    let mut n = 0;
    for degree in 0..=2 {
        for p in all_of_degree(f, degree) {
            let points: Vec<_> = elems(f).take(degree + 1).map(|x| (x, p.eval(x))).collect();
            let back = Polynomial::interpolate(f, &points).map_err(|e| e.to_string())?;
            if back != p {
                return Err(format!("interpolation of {p:?} gave {back:?}"));
            }
            for x in elems(f) {
                let naive = p.coeffs().iter().rev().fold(f.zero(), |acc, &c| acc * x + c);
                let powers = (0..=degree).fold(f.zero(), |acc, i| acc + p.coeff(i) * x.pow(i as u64));
                if naive != powers || p.eval(x) != powers {
                    return Err(format!("{p:?} at {x}"));
                }
                n += 1;
            }
        }
    }
    Ok(n)
}

fn roots() -> Result<u64, String> {
    let f = small();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut n = 0;
    for p in all_of_degree(f, 2).into_iter().filter(Polynomial::is_monic) {
        let want: Vec<FieldElement> = elems(f).filter(|&x| p.eval(x).is_zero()).collect();
        let got = p.roots(RootStrategy::FullFactor, &mut rng).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("{p:?}: roots {got:?}, expected {want:?}"));
        }
        n += 1;
    }
    Ok(n)
}

fn vopr_output() -> Result<u64, String> {
    let f = small();
    let mut engine = OleEngine::new(OleMode::Ideal, false);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let (mut sr, mut rr) = (ChaCha20Rng::seed_from_u64(5), ChaCha20Rng::seed_from_u64(6));
    let polys = all_of_degree(f, 2);
    let mut n = 0;
    for psi in &polys {
        for beta in &polys {
            let sender = SenderInput::with_random_mask(psi.clone(), 2, &mut rng);
            let theta = vopr::compute(&mut engine, &sender, beta, 2, 2, &mut sr, &mut rr, &mut OpCounter::new())
                .map_err(|e| e.to_string())?;
            if theta != &(psi * beta) + &sender.alpha() {
                return Err(format!("output for {psi:?} and {beta:?}"));
            }
            n += 1;
        }
    }
    Ok(n)
}

pub fn run() -> Vec<Check> {
    vec![
        check("field inverses", inverses),
        check("OLE+ against ideal OLE", ole),
        check("evaluation and interpolation", horner_and_interpolation),
        check("root finding", roots),
        check("VOPR output", vopr_output),
    ]
}
