//! The fair PSI run between A-clients, a dealer, an auditor and the PSI contract.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use serde_json::json;

use crate::adversary::{Action, Adversary, Message, Step, VoprPass};
use crate::binning::{BinnedSet, Encoding, TableParams};
use crate::config::{Protocol, ResolvedSets, ScenarioConfig};
use crate::contracts::{unfair_payout, JusPayout, ScJus};
use crate::crypto::{coin_toss_finish, hash, CoinShare, Digest, Prf, PrfKey};
use crate::error::RunError;
use crate::field::{FieldElement, FieldParams, OpCounter};
use crate::ledger::{self, Address, ContractId, Ledger};
use crate::ole::{OleEngine, OleMode};
use crate::poly::Polynomial;
use crate::transcript::{header, Counters, Record, Transcript};
use crate::vopr::{self, ReceiverInput, SenderInput, VoprError};
use crate::zspa;

const BIN_KEY_TAG: u8 = 0x31;
const SWITCH_TAG: u8 = 0x32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Delivered,
    FairAbort,
    UnfairAbort,
    HaltedPreDeposit,
}

/// Where and why a run stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Halt {
    pub kind: OutcomeKind,
    pub step: Step,
    pub party: Address,
}

/// Number of coefficients in a bin's switching mask.
pub fn mask_len(capacity: usize) -> usize {
    3 * capacity + 1
}

/// Rows of zero-sum values blinding each client's submission.
pub fn zspa_rows(capacity: usize) -> usize {
    3 * capacity + 3
}

/// The pseudorandom polynomial any holder of the master key rebuilds for a bin.
pub fn switching_mask(mk: &PrfKey, field: FieldParams, bin: usize, coeffs: usize) -> Polynomial {
    let bin_key = Prf::new(mk).key(BIN_KEY_TAG, &[bin as u64]);
    let prf = Prf::new(&bin_key);
    Polynomial::new(field, (0..coeffs).map(|j| prf.field_elem(field, SWITCH_TAG, &[j as u64])).collect())
        .expect("same field")
}

/// Whether `x` is a root of `phi - zeta * mask`.
pub fn is_unblinded_root(phi: &Polynomial, zeta: &Polynomial, mask: &Polynomial, x: FieldElement, ctr: &mut OpCounter) -> bool {
    let v = phi.eval_counted(x, ctr) - zeta.eval_counted(x, ctr) * mask.eval_counted(x, ctr);
    ctr.multiplications += 1;
    ctr.additions += 1;
    v.is_zero()
}

/// Everything shared by the parties of one run: the chain, the transcript,
/// the OLE engine and each party's private randomness.
pub struct Session {
    pub field: FieldParams,
    pub table: TableParams,
    pub encoding: Encoding,
    pub clients: usize,
    pub ledger: Ledger,
    pub transcript: Transcript,
    pub counters: Counters,
    pub ole: OleEngine,
    pub adversary: Adversary,
    seed: u64,
    rngs: BTreeMap<Address, ChaCha20Rng>,
}

impl Session {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        field: FieldParams,
        table: TableParams,
        encoding: Encoding,
        clients: usize,
        adversary: Adversary,
        seed: u64,
        ole_mode: OleMode,
        verbose: bool,
        endowment: u64,
    ) -> Self {
        let mut accounts: Vec<(Address, u64)> = (1..=clients).map(|i| (Address::Client(i), endowment)).collect();
        accounts.extend([(Address::Dealer, endowment), (Address::Auditor, 0), (Address::Arbiter, 0)]);
        Self {
            field,
            table,
            encoding,
            clients,
            ledger: Ledger::new(accounts),
            transcript: Transcript::new(),
            counters: Counters::default(),
            ole: OleEngine::new(ole_mode, verbose),
            adversary,
            seed,
            rngs: BTreeMap::new(),
        }
    }

    fn fresh_rng(&self, a: Address) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(hash(&[b"PARTY-RNG", &self.seed.to_be_bytes(), a.to_string().as_bytes()]).0)
    }

    pub fn rng(&mut self, a: Address) -> &mut ChaCha20Rng {
        if !self.rngs.contains_key(&a) {
            let r = self.fresh_rng(a);
            self.rngs.insert(a, r);
        }
        self.rngs.get_mut(&a).expect("inserted")
    }

    pub fn take_rng(&mut self, a: Address) -> ChaCha20Rng {
        self.rngs.remove(&a).unwrap_or_else(|| self.fresh_rng(a))
    }

    pub fn put_rng(&mut self, a: Address, r: ChaCha20Rng) {
        self.rngs.insert(a, r);
    }

    pub fn ctr(&mut self, a: Address) -> &mut OpCounter {
        self.counters.party(a.to_string())
    }

    pub fn add_ops(&mut self, a: Address, ops: OpCounter) {
        *self.ctr(a) += ops;
    }

    pub fn next_round(&mut self) -> u64 {
        let r = self.ledger.round() + 1;
        self.ledger.set_round(r);
        r
    }

    pub fn send<T: Serialize>(&mut self, step: Step, from: Address, to: Address, kind: &'static str, body: &T) {
        self.transcript.message(self.ledger.round(), step, from, to, kind, body);
    }

    /// The strategy hook for messages without a payload worth modifying.
    pub fn withholds(&self, party: Address, step: Step) -> bool {
        self.adversary.apply(party, step, Message::Signal) == Action::Withhold
    }

    /// Appends OLE records, ledger events, counters and the outcome.
    pub fn finish(&mut self, outcome: serde_json::Value) {
        for r in self.ole.take_records() {
            self.transcript.push(Record::Ole(r));
        }
        for e in self.ledger.events().to_vec() {
            self.transcript.push(Record::Event(e));
        }
        self.transcript.push(self.counters.record(self.ole.calls()));
        self.transcript.push(Record::Outcome(outcome));
    }

    /// Commit-then-reveal coin toss; the first silent party halts the run.
    pub fn coin_toss(&mut self, parties: &[Address], step: Step, label: &str, board: Address, kind: OutcomeKind) -> Result<Result<Digest, Halt>, RunError> {
        self.next_round();
        let mut shares = Vec::with_capacity(parties.len());
        for &p in parties {
            if self.withholds(p, step) {
                return Ok(Err(Halt { kind, step, party: p }));
            }
            let share = CoinShare::new(self.rng(p));
            self.send(step, p, board, "coin_commit", &json!({ "label": label, "commitment": share.commitment }));
            shares.push(share);
        }
        self.next_round();
        for (&p, share) in parties.iter().zip(&shares) {
            self.send(step, p, board, "coin_reveal", &json!({ "label": label, "opening": share.opening }));
        }
        let coms: Vec<_> = shares.iter().map(|s| s.commitment).collect();
        let opens: Vec<_> = shares.into_iter().map(|s| s.opening).collect();
        Ok(Ok(coin_toss_finish(&coms, &opens)?))
    }
}

/// A party's own set in encoded, binned and polynomial form.
pub struct Holding {
    pub payloads: BTreeMap<FieldElement, u64>,
    pub binned: BinnedSet,
    pub polys: Vec<Polynomial>,
}

struct ClientSecrets {
    holding: Holding,
    zspa_keys: Vec<PrfKey>,
    tau: Vec<Polynomial>,
    theta: Vec<Polynomial>,
}

struct DealerSecrets {
    holding: Holding,
    zeta: Vec<Polynomial>,
    gamma: Vec<Vec<Polynomial>>,
    delta: Vec<Vec<Polynomial>>,
}

/// What the audit found and how the contract paid out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditResult {
    pub key_failures: BTreeSet<usize>,
    pub tamperers: BTreeSet<usize>,
    pub payout: JusPayout,
}

/// One PSI run's state, driven phase by phase.
pub struct Jus {
    pub sc: ScJus,
    mk: Option<PrfKey>,
    clients: Vec<ClientSecrets>,
    dealer: Option<DealerSecrets>,
}

fn client_sample_root(zeta: &Polynomial) -> FieldElement {
    -(zeta.coeff(0) * zeta.coeff(1).inv().expect("zeta has degree one"))
}

/// A VOPR sender whose mask polynomial shares no root with `zeta`.
fn coprime_sender(psi: Polynomial, e_prime: usize, zeta_root: FieldElement, rng: &mut ChaCha20Rng) -> SenderInput {
    loop {
        let s = SenderInput::with_random_mask(psi.clone(), e_prime, rng);
        if !s.alpha().eval(zeta_root).is_zero() {
            return s;
        }
    }
}

impl Jus {
    pub fn new(s: &Session, deposit: u64, fee: u64) -> Self {
        Self { sc: ScJus::new(s.clients, s.table.bins, deposit, fee), mk: None, clients: Vec::new(), dealer: None }
    }

    fn board(&self) -> Address {
        self.sc.address()
    }

    pub fn master_key(&self) -> Option<PrfKey> {
        self.mk
    }

    pub fn parties(&self) -> Vec<Address> {
        self.sc.parties()
    }

    pub fn holding(&self, a: Address) -> Option<&Holding> {
        match a {
            Address::Client(i) => self.clients.get(i.wrapping_sub(1)).map(|c| &c.holding),
            Address::Dealer => self.dealer.as_ref().map(|d| &d.holding),
            _ => None,
        }
    }

    pub fn toss_master_key(&mut self, s: &mut Session) -> Result<Option<Halt>, RunError> {
        match s.coin_toss(&self.parties(), Step::CoinToss, "mk", self.board(), OutcomeKind::HaltedPreDeposit)? {
            Ok(mk) => {
                self.mk = Some(mk);
                Ok(None)
            }
            Err(h) => Ok(Some(h)),
        }
    }

    fn hold(s: &mut Session, a: Address, payloads: &[u64]) -> Result<Holding, RunError> {
        let mut map = BTreeMap::new();
        for &p in payloads {
            map.insert(s.encoding.encode(s.field, p)?, p);
        }
        let encoded: Vec<FieldElement> = map.keys().copied().collect();
        let (field, table, encoding) = (s.field, s.table, s.encoding);
        let binned = BinnedSet::build(field, &table, &encoding, &encoded, s.rng(a))?;
        let mut ops = OpCounter::new();
        let polys = (0..table.bins).map(|b| binned.bin_poly(b, &mut ops)).collect();
        s.add_ops(a, ops);
        Ok(Holding { payloads: map, binned, polys })
    }

    /// Encodes and bins every party's set.
    pub fn bin_inputs(&mut self, s: &mut Session, clients: &[Vec<u64>], dealer: &[u64]) -> Result<(), RunError> {
        self.clients.clear();
        for (i, set) in clients.iter().enumerate() {
            let holding = Self::hold(s, Address::Client(i + 1), set)?;
            self.clients.push(ClientSecrets { holding, zspa_keys: Vec::new(), tau: Vec::new(), theta: Vec::new() });
        }
        let holding = Self::hold(s, Address::Dealer, dealer)?;
        self.dealer = Some(DealerSecrets { holding, zeta: Vec::new(), gamma: Vec::new(), delta: Vec::new() });
        Ok(())
    }

    /// Per bin: a shared key by coin toss, a published encoding commitment and everyone's approval.
    pub fn agree_zspa(&mut self, s: &mut Session) -> Result<Option<Halt>, RunError> {
        let m = s.clients;
        let rows = zspa_rows(s.table.capacity);
        let field = s.field;
        let clients: Vec<Address> = (1..=m).map(Address::Client).collect();
        for bin in 0..s.table.bins {
            let key = match s.coin_toss(&clients, Step::ZspaAgree, "zspa", self.board(), OutcomeKind::HaltedPreDeposit)? {
                Ok(k) => k,
                Err(h) => return Ok(Some(h)),
            };
            let enc = zspa::encode(&key, field, rows, m);
            self.sc.publish_zspa(bin, enc.commitment)?;
            s.send(Step::ZspaAgree, Address::Client(1), self.board(), "zspa_commitment", &json!({ "bin": bin, "commitment": enc.commitment }));
            s.next_round();
            for c in 1..=m {
                if s.withholds(Address::Client(c), Step::ZspaAgree) {
                    return Ok(Some(Halt { kind: OutcomeKind::HaltedPreDeposit, step: Step::ZspaAgree, party: Address::Client(c) }));
                }
                if !zspa::verify(&key, field, rows, m, &enc.commitment) {
                    return Err(RunError::Invariant("honest ZSPA encoding failed verification".into()));
                }
                self.sc.approve_zspa(bin, c)?;
                s.send(Step::ZspaAgree, Address::Client(c), self.board(), "zspa_approve", &json!({ "bin": bin }));
                let used = s.adversary.zspa_key(c, key);
                let tau = if used == key {
                    enc.column_poly(field, c - 1)
                } else {
                    zspa::encode(&used, field, rows, m).column_poly(field, c - 1)
                };
                let me = &mut self.clients[c - 1];
                me.zspa_keys.push(key);
                me.tau.push(tau);
            }
        }
        if !self.sc.zspa_agreed() {
            return Err(RunError::Invariant("ZSPA approvals incomplete".into()));
        }
        Ok(None)
    }

    /// Every party deposits; a missing deposit refunds the rest and halts.
    pub fn collect_deposits(&mut self, s: &mut Session) -> Result<Option<Halt>, RunError> {
        s.next_round();
        let x = self.sc.deposit_amount();
        let mut first_missing = None;
        for p in self.parties() {
            if s.withholds(p, Step::Deposit) || s.ledger.balance(p) < x {
                first_missing.get_or_insert(p);
                continue;
            }
            self.sc.deposit(&mut s.ledger, p)?;
        }
        if self.sc.all_deposited(&s.ledger) {
            return Ok(None);
        }
        self.sc.refund_all(&mut s.ledger)?;
        let party = first_missing.unwrap_or(Address::Dealer);
        Ok(Some(Halt { kind: OutcomeKind::HaltedPreDeposit, step: Step::Deposit, party }))
    }

    fn fair_abort(&mut self, s: &mut Session, step: Step, party: Address) -> Result<Option<Halt>, RunError> {
        self.sc.refund_all(&mut s.ledger)?;
        Ok(Some(Halt { kind: OutcomeKind::FairAbort, step, party }))
    }

    /// The dealer's blinding of each client's polynomial and of its own, via two VOPR passes per (bin, client).
    pub fn randomise(&mut self, s: &mut Session) -> Result<Option<Halt>, RunError> {
        s.next_round();
        let d = s.table.capacity;
        let field = s.field;
        let m = s.clients;
        let mut drng = s.take_rng(Address::Dealer);
        let dealer = self.dealer.as_mut().expect("inputs binned");
        dealer.zeta = (0..s.table.bins).map(|_| Polynomial::random(field, 1, &mut drng)).collect();
        dealer.gamma = vec![Vec::new(); s.table.bins];
        dealer.delta = vec![Vec::new(); s.table.bins];
        s.put_rng(Address::Dealer, drng);
        for bin in 0..s.table.bins {
            for c in 1..=m {
                let client = Address::Client(c);
                for (step, pass) in [(Step::VoprRandomiseClient, VoprPass::Client), (Step::VoprRandomiseDealer, VoprPass::Dealer)] {
                    for p in [Address::Dealer, client] {
                        if s.withholds(p, step) {
                            return self.fair_abort(s, step, p);
                        }
                    }
                    let mut drng = s.take_rng(Address::Dealer);
                    let mut crng = s.take_rng(client);
                    let (mut dops, mut cops) = (OpCounter::new(), OpCounter::new());
                    let dealer = self.dealer.as_ref().expect("inputs binned");
                    let me = &self.clients[c - 1];
                    let zeta = &dealer.zeta[bin];
                    let root = client_sample_root(zeta);
                    let linear = ReceiverInput::random_linear(field, &mut crng);
                    let (sender, receiver, e, e_prime) = match pass {
                        VoprPass::Client => {
                            let omega = Polynomial::random(field, d, &mut drng);
                            let psi = zeta.mul_counted(&omega, &mut dops);
                            let sender = coprime_sender(psi, 2 * d, root, &mut drng);
                            let cofactor = Polynomial::random(field, d - 1, &mut crng).mul_counted(&me.holding.polys[bin], &mut cops);
                            (sender, ReceiverInput::new(linear, cofactor)?, d + 1, 2 * d)
                        }
                        VoprPass::Dealer => {
                            let rho = Polynomial::random(field, d, &mut drng);
                            let psi = zeta.mul_counted(&rho, &mut dops).mul_counted(&dealer.holding.polys[bin], &mut dops);
                            let sender = coprime_sender(psi, d, root, &mut drng);
                            let cofactor = Polynomial::random(field, d - 1, &mut crng);
                            (sender, ReceiverInput::new(linear, cofactor)?, 2 * d + 1, d)
                        }
                    };
                    let forgery = s.adversary.vopr_forgery(c, pass);
                    let result = vopr::run(&mut s.ole, &sender, &receiver, e, e_prime, forgery, &mut drng, &mut crng, &mut dops, &mut cops);
                    s.put_rng(Address::Dealer, drng);
                    s.put_rng(client, crng);
                    s.add_ops(Address::Dealer, dops);
                    s.add_ops(client, cops);
                    let calls = (e + 1) * (e_prime + 1);
                    let verified = !matches!(result, Err(VoprError::VerificationFailed));
                    s.send(step, Address::Dealer, client, "vopr", &json!({ "bin": bin, "pass": pass, "ole_calls": calls, "verified": verified }));
                    let theta = match result {
                        Ok(t) => t,
                        Err(VoprError::VerificationFailed) => return self.fair_abort(s, step, client),
                        Err(e) => return Err(e.into()),
                    };
                    let alpha = sender.alpha();
                    let dealer = self.dealer.as_mut().expect("inputs binned");
                    let me = &mut self.clients[c - 1];
                    match pass {
                        VoprPass::Client => {
                            dealer.gamma[bin].push(alpha);
                            me.theta.push(theta);
                        }
                        VoprPass::Dealer => {
                            dealer.delta[bin].push(alpha);
                            let sum = me.theta[bin].add_counted(&theta, s.counters.party(client.to_string()));
                            me.theta[bin] = sum;
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    /// Clients send blinded polynomials; the dealer adds its switching polynomial.
    pub fn submit(&mut self, s: &mut Session) -> Result<Option<Halt>, RunError> {
        s.next_round();
        let board = self.board();
        for c in 1..=s.clients {
            let client = Address::Client(c);
            for bin in 0..s.table.bins {
                let me = &self.clients[c - 1];
                let nu = me.theta[bin].add_counted(&me.tau[bin], s.counters.party(client.to_string()));
                if let Action::Send(Message::Nu { bin, poly }) = s.adversary.apply(client, Step::SubmitNu, Message::Nu { bin, poly: nu }) {
                    s.send(Step::SubmitNu, client, board, "nu", &json!({ "bin": bin, "poly": poly }));
                    self.sc.submit_nu(bin, c, poly)?;
                }
            }
        }
        if let Some(&missing) = self.sc.missing_clients().first() {
            return self.fair_abort(s, Step::SubmitNu, missing);
        }
        s.next_round();
        if s.withholds(Address::Dealer, Step::SwitchingPoly) {
            return self.fair_abort(s, Step::SwitchingPoly, Address::Dealer);
        }
        let mk = self.mk.expect("master key tossed");
        let (field, d) = (s.field, s.table.capacity);
        let mut drng = s.take_rng(Address::Dealer);
        let mut ops = OpCounter::new();
        let dealer = self.dealer.as_ref().expect("inputs binned");
        for bin in 0..s.table.bins {
            let zeta = &dealer.zeta[bin];
            let mask = switching_mask(&mk, field, bin, mask_len(d));
            let omega = Polynomial::random(field, d, &mut drng);
            let mut nu = zeta.mul_counted(&omega, &mut ops).mul_counted(&dealer.holding.polys[bin], &mut ops);
            for (g, dl) in dealer.gamma[bin].iter().zip(&dealer.delta[bin]) {
                nu = nu.sub_counted(g, &mut ops).sub_counted(dl, &mut ops);
            }
            nu = nu.add_counted(&zeta.mul_counted(&mask, &mut ops), &mut ops);
            s.send(Step::SwitchingPoly, Address::Dealer, board, "switching_poly", &json!({ "bin": bin, "nu": nu, "zeta": zeta }));
            self.sc.submit_dealer(bin, nu, zeta.clone())?;
        }
        s.put_rng(Address::Dealer, drng);
        s.add_ops(Address::Dealer, ops);
        Ok(None)
    }

    pub fn combine(&mut self, s: &mut Session) -> Result<bool, RunError> {
        s.next_round();
        let flag = self.sc.combine(s.counters.party(self.board().to_string()))?;
        s.send(Step::SwitchingPoly, self.board(), self.board(), "flag", &json!({ "flag": flag }));
        Ok(flag)
    }

    /// The contract's φ and ζ for a bin once the flag is decided.
    pub fn bin_result(&self, bin: usize) -> (&Polynomial, &Polynomial) {
        let b = self.sc.bin(bin);
        (b.phi.as_ref().expect("combined"), b.zeta.as_ref().expect("submitted"))
    }

    /// Encoded elements of `a`'s set that are roots of the unblinded result.
    pub fn extract(&self, s: &mut Session, a: Address) -> BTreeSet<FieldElement> {
        let mk = self.mk.expect("master key tossed");
        let holding = self.holding(a).expect("party holds a set");
        let mut ops = OpCounter::new();
        let mut out = BTreeSet::new();
        for bin in 0..s.table.bins {
            let real = holding.binned.real_elements(bin);
            if real.is_empty() {
                continue;
            }
            let (phi, zeta) = self.bin_result(bin);
            let mask = switching_mask(&mk, s.field, bin, mask_len(s.table.capacity));
            out.extend(real.iter().copied().filter(|&x| is_unblinded_root(phi, zeta, &mask, x, &mut ops)));
        }
        s.add_ops(a, ops);
        out
    }

    /// Refunds everyone and lets each of `readers` read its share of the intersection.
    pub fn deliver(&mut self, s: &mut Session, readers: &[Address]) -> Result<BTreeMap<Address, BTreeSet<u64>>, RunError> {
        s.next_round();
        self.sc.refund_all(&mut s.ledger)?;
        let mut out = BTreeMap::new();
        for &p in readers {
            let found = self.extract(s, p);
            let holding = self.holding(p).expect("party holds a set");
            out.insert(p, found.iter().map(|x| holding.payloads[x]).collect());
        }
        Ok(out)
    }

    /// Auditor checks ZSPA keys, the contract checks each remaining client, then settles.
    pub fn audit_and_settle(&mut self, s: &mut Session, auditor: Address) -> Result<AuditResult, RunError> {
        s.next_round();
        let (m, field, d) = (s.clients, s.field, s.table.capacity);
        let rows = zspa_rows(d);
        let board = self.board();
        let mut keys: Vec<Vec<Option<PrfKey>>> = vec![vec![None; m]; s.table.bins];
        for c in 1..=m {
            for (bin, bin_keys) in keys.iter_mut().enumerate() {
                let msg = Message::AuditKey { bin, key: self.clients[c - 1].zspa_keys[bin] };
                if let Action::Send(Message::AuditKey { key, .. }) = s.adversary.apply(Address::Client(c), Step::AuditKeys, msg) {
                    s.send(Step::AuditKeys, Address::Client(c), auditor, "audit_key", &json!({ "bin": bin, "key": key }));
                    bin_keys[c - 1] = Some(key);
                }
            }
        }
        s.next_round();
        let mut key_failures = BTreeSet::new();
        let mut masks = Vec::with_capacity(s.table.bins);
        let mut arng = s.take_rng(auditor);
        let mut aops = OpCounter::new();
        for (bin, bin_keys) in keys.iter().enumerate() {
            let b = self.sc.bin(bin);
            let commitment = b.zspa.expect("agreed");
            let zeta = b.zeta.as_ref().expect("submitted");
            let out = zspa::audit(field, rows, m, bin_keys, &commitment, zeta, &mut arng, &mut aops);
            key_failures.extend(out.rejected.iter().map(|j| j + 1));
            masks.push(out.masks);
        }
        s.put_rng(auditor, arng);
        s.add_ops(auditor, aops);
        s.send(Step::AuditKeys, auditor, board, "audit", &json!({ "rejected": key_failures, "masks": masks.iter().map(|b| b.iter().map(|(j, p)| (j + 1, p)).collect::<BTreeMap<_, _>>()).collect::<Vec<_>>() }));

        let mut drng = s.take_rng(Address::Dealer);
        let mut dops = OpCounter::new();
        let dealer = self.dealer.as_ref().expect("inputs binned");
        let mut chis: BTreeMap<(usize, usize), Polynomial> = BTreeMap::new();
        for bin in 0..s.table.bins {
            for c in (1..=m).filter(|c| !key_failures.contains(c)) {
                let eta = Polynomial::random(field, mask_len(d), &mut drng);
                let chi = dealer.zeta[bin]
                    .mul_counted(&eta, &mut dops)
                    .sub_counted(&dealer.gamma[bin][c - 1], &mut dops)
                    .sub_counted(&dealer.delta[bin][c - 1], &mut dops);
                chis.insert((bin, c), chi);
            }
        }
        s.put_rng(Address::Dealer, drng);
        s.add_ops(Address::Dealer, dops);
        s.send(Step::AuditKeys, Address::Dealer, board, "chi", &json!(chis.iter().map(|((b, c), p)| json!({ "bin": b, "client": c, "chi": p })).collect::<Vec<_>>()));

        let mut tamperers = BTreeSet::new();
        let mut sops = OpCounter::new();
        for (&(bin, c), chi) in &chis {
            let mu = &masks[bin][&(c - 1)];
            if !self.sc.identify(bin, c, chi, mu, &mut sops) {
                tamperers.insert(c);
            }
        }
        s.add_ops(board, sops);
        let misbehaving: BTreeSet<usize> = key_failures.union(&tamperers).copied().collect();
        let payout = self.sc.settle_unfair(&mut s.ledger, &misbehaving, auditor)?;
        s.send(Step::AuditKeys, board, board, "settle", &payout);
        Ok(AuditResult { key_failures, tamperers, payout })
    }
}

/// Per-party evaluation of the delivery and abort predicates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartyPredicates {
    pub delivered: bool,
    pub delivered_with_reward: bool,
    pub fair_abort: bool,
    pub unfair_abort: (bool, bool),
    pub unfair_abort_with_reward: (bool, bool),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PredicateReport {
    pub init: bool,
    pub parties: BTreeMap<Address, PartyPredicates>,
}

/// What one party should see under each predicate.
#[derive(Clone, Copy, Debug, Default)]
pub struct Expectation {
    pub deposit: u64,
    pub compensation: u64,
    pub reward: i128,
}

pub fn evaluate_predicates(
    ledger: &Ledger,
    contracts: &[ContractId],
    init_amount: u64,
    auditor: Address,
    auditor_fee: u64,
    expect: &BTreeMap<Address, Expectation>,
) -> PredicateReport {
    let addrs: Vec<Address> = expect.keys().copied().collect();
    let init = ledger::q_init(ledger, contracts, &addrs, init_amount);
    let parties = expect
        .iter()
        .map(|(&a, e)| {
            let reward_u = e.reward.max(0) as u64;
            let p = PartyPredicates {
                delivered: ledger::q_del(ledger, contracts, a, e.deposit),
                delivered_with_reward: ledger::q_del_r(ledger, contracts, a, e.deposit, e.reward),
                fair_abort: ledger::q_f_a(ledger, contracts, a, e.deposit, auditor, 0),
                unfair_abort: ledger::q_uf_a(ledger, contracts, a, e.deposit, e.compensation, auditor, auditor_fee),
                unfair_abort_with_reward: ledger::q_uf_a_r(ledger, contracts, a, e.deposit, e.compensation, reward_u, auditor, auditor_fee),
            };
            (a, p)
        })
        .collect();
    PredicateReport { init, parties }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JusOutcome {
    pub kind: OutcomeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted: Option<Halt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<bool>,
    /// Each party's view of the intersection, as plain set elements.
    pub intersections: BTreeMap<Address, BTreeSet<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditResult>,
}

impl JusOutcome {
    pub fn halted(h: Halt) -> Self {
        Self { kind: h.kind, halted: Some(h), flag: None, intersections: BTreeMap::new(), audit: None }
    }

    pub fn misbehaving(&self) -> BTreeSet<usize> {
        self.audit.as_ref().map(|a| a.payout.misbehaving.clone()).unwrap_or_default()
    }
}

pub struct JusReport {
    pub config: ScenarioConfig,
    pub sets: ResolvedSets,
    pub table: TableParams,
    pub outcome: JusOutcome,
    pub predicates: PredicateReport,
    pub ledger: Ledger,
    pub counters: Counters,
    pub ole_calls: u64,
    pub transcript: Transcript,
}

impl JusReport {
    pub fn oracle(&self) -> BTreeSet<u64> {
        self.sets.intersection()
    }

    pub fn net_changes(&self) -> BTreeMap<Address, i128> {
        self.ledger.net_changes()
    }
}

pub(crate) fn payload_lists(sets: &ResolvedSets) -> (Vec<Vec<u64>>, Vec<u64>) {
    (sets.clients.iter().map(|s| s.iter().copied().collect()).collect(), sets.dealer.iter().copied().collect())
}

/// Drives the PSI phases in order, stopping at the first halt.
pub fn drive(jus: &mut Jus, s: &mut Session, clients: &[Vec<u64>], dealer: &[u64], auditor: Address) -> Result<JusOutcome, RunError> {
    if let Some(h) = jus.toss_master_key(s)? {
        return Ok(JusOutcome::halted(h));
    }
    jus.bin_inputs(s, clients, dealer)?;
    let readers = jus.parties();
    drive_from_zspa(jus, s, auditor, &readers)
}

/// The phases after inputs are binned.
pub fn drive_from_zspa(jus: &mut Jus, s: &mut Session, auditor: Address, readers: &[Address]) -> Result<JusOutcome, RunError> {
    for phase in [Jus::agree_zspa, Jus::collect_deposits, Jus::randomise, Jus::submit] {
        if let Some(h) = phase(jus, s)? {
            return Ok(JusOutcome::halted(h));
        }
    }
    let flag = jus.combine(s)?;
    if flag {
        let intersections = jus.deliver(s, readers)?;
        Ok(JusOutcome { kind: OutcomeKind::Delivered, halted: None, flag: Some(true), intersections, audit: None })
    } else {
        let audit = jus.audit_and_settle(s, auditor)?;
        Ok(JusOutcome { kind: OutcomeKind::UnfairAbort, halted: None, flag: Some(false), intersections: BTreeMap::new(), audit: Some(audit) })
    }
}

/// Predicate expectations for a PSI run where everyone deposits `deposit`.
pub fn jus_expectations(clients: usize, deposit: u64, fee: u64, outcome: &JusOutcome) -> (BTreeMap<Address, Expectation>, u64) {
    let payout = match &outcome.audit {
        Some(a) => a.payout.clone(),
        None => {
            let blamed = match outcome.halted.map(|h| h.party) {
                Some(Address::Client(i)) => i,
                _ => 1,
            };
            unfair_payout(clients, deposit, fee, &BTreeSet::from([blamed]))
        }
    };
    let mut expect = BTreeMap::new();
    for a in (1..=clients).map(Address::Client).chain(std::iter::once(Address::Dealer)) {
        expect.insert(a, Expectation { deposit, compensation: payout.extra_for(a), reward: 0 });
    }
    (expect, payout.auditor)
}

/// A PSI run set up from a config, ready to be driven phase by phase.
pub struct Prepared {
    pub session: Session,
    pub jus: Jus,
    pub sets: ResolvedSets,
    pub table: TableParams,
    pub deposit: u64,
    pub fee: u64,
}

impl Prepared {
    pub fn payloads(&self) -> (Vec<Vec<u64>>, Vec<u64>) {
        payload_lists(&self.sets)
    }
}

pub fn prepare(config: &ScenarioConfig) -> Result<Prepared, RunError> {
    config.validate()?;
    if config.protocol != Protocol::Jus {
        return Err(crate::config::ConfigError::Invalid("config is not a PSI scenario".into()).into());
    }
    let field = config.field;
    let encoding = config.encoding()?;
    let sets = config.resolve_sets(encoding.payload_domain())?;
    let table = config.table_params(&sets)?;
    let adversary = Adversary::new(&config.strategies, field, config.clients(), table.bins, false)?;
    let fee = config.economics.auditor_fee.0;
    let deposit = config.economics.deposit.0 + fee;
    let mut session = Session::new(field, table, encoding, config.clients(), adversary, config.seed.0, config.ole_mode, config.verbose, config.endowment());
    session.transcript.push(header("jus", config.digest(), config.seed.0, field.modulus()));
    let jus = Jus::new(&session, deposit, fee);
    Ok(Prepared { session, jus, sets, table, deposit, fee })
}

/// Runs a PSI scenario end to end.
pub fn run(config: &ScenarioConfig) -> Result<JusReport, RunError> {
    let Prepared { session: mut s, mut jus, sets, table, deposit, fee } = prepare(config)?;
    let (clients, dealer) = payload_lists(&sets);
    let outcome = drive(&mut jus, &mut s, &clients, &dealer, Address::Auditor)?;
    let (expect, auditor_fee) = jus_expectations(config.clients(), deposit, fee, &outcome);
    let predicates = evaluate_predicates(&s.ledger, &[ContractId::Jus], deposit, Address::Auditor, auditor_fee, &expect);
    s.ledger.check_conservation()?;
    s.finish(json!({ "outcome": outcome, "predicates": predicates }));
    let ole_calls = s.ole.calls();
    Ok(JusReport {
        config: config.clone(),
        sets,
        table,
        outcome,
        predicates,
        ledger: s.ledger,
        counters: s.counters,
        ole_calls,
        transcript: s.transcript,
    })
}
