//! Paid extraction: a buyer pays two extractors to recover the intersection
//! of every party's set, with deposits, arbitration and a collusion market.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::json;

use crate::adversary::{Adversary, ExtractorBehaviour, ExtractorProfile, Step, Strategy};
use crate::binning::{bin_of, Encoding, TableParams};
use crate::config::{ConfigError, Protocol, ResolvedSets, ScenarioConfig};
use crate::crypto::{
    commit, commit_with, keygen, sealed_dec, sealed_enc, verify_commit, verify_merkle_proof, Commitment, CryptoError, Digest,
    MerkleProof, MerkleTree, Opening, Prf, PrfKey, Prp, SealedBox, SecretKey,
};
use crate::error::RunError;
use crate::field::{FieldElement, FieldParams, OpCounter};
use crate::jus::{
    drive_from_zspa, evaluate_predicates, is_unblinded_root, mask_len, payload_lists, switching_mask, Expectation, Halt, Jus,
    JusOutcome, OutcomeKind, PredicateReport, Session,
};
use crate::ledger::{split_evenly, Address, ContractId, Escrow, Ledger, LedgerError};
use crate::poly::{Polynomial, RootStrategy};
use crate::transcript::{header, Counters, Transcript};

const KEY_OPENING_TAG: u8 = 0x40;

pub const CONTRACTS: [ContractId; 5] = [ContractId::Jus, ContractId::Ane, ContractId::Pc, ContractId::Tc, ContractId::Cc];

/// Reward paid to each non-buying party for `n` delivered elements.
pub type RewardFn = fn(&AneParams, u64) -> u64;

pub fn flat_reward(p: &AneParams, n: u64) -> u64 {
    n * p.reward_per_element
}

/// Validated economic parameters of an extraction run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AneParams {
    pub clients: usize,
    pub min_set_size: u64,
    pub psi_deposit: u64,
    pub fee: u64,
    pub reward_per_element: u64,
    pub extraction_fee: u64,
    pub server_deposit: u64,
    pub compute_cost: u64,
    pub bribe: u64,
    pub collusion_deposit: u64,
}

impl AneParams {
    pub fn from_config(c: &ScenarioConfig, sets: &ResolvedSets) -> Result<Self, ConfigError> {
        let e = c.economics.ane.as_ref().ok_or_else(|| ConfigError::Invalid("missing economics.ane".into()))?;
        let smallest = sets.smallest() as u64;
        let min_set_size = e.min_set_size.map_or(smallest, |d| d.0);
        if min_set_size < smallest {
            return Err(ConfigError::Constraint(format!("min_set_size {min_set_size} is below the smallest set size {smallest}")));
        }
        let p = Self {
            clients: c.clients(),
            min_set_size,
            psi_deposit: e.ane_deposit.0,
            fee: c.economics.auditor_fee.0,
            reward_per_element: e.reward_per_element.0,
            extraction_fee: e.extraction_fee.0,
            server_deposit: e.server_deposit.0,
            compute_cost: e.compute_cost.0,
            bribe: e.bribe.0,
            collusion_deposit: e.collusion_deposit.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = |v: u64| v as i128;
        let m = self.clients as i128;
        let s_min = w(self.min_set_size);
        let (l, r, d, ch, c, b, t) = (
            w(self.reward_per_element),
            w(self.extraction_fee),
            w(self.server_deposit),
            w(self.fee),
            w(self.compute_cost),
            w(self.bribe),
            w(self.collusion_deposit),
        );
        let price = m * l + 2 * r;
        let forfeit = s_min * l * (m - 1);
        let pool = s_min * r;
        let checks: [(bool, String); 7] = [
            (self.clients >= 3, format!("need at least 3 clients, got {}", self.clients)),
            (d > c + ch, format!("server_deposit {d} must exceed compute_cost + fee = {}", c + ch)),
            (b < c, format!("bribe {b} must be below compute_cost {c}")),
            (ch > 2 * pool, format!("fee {ch} must exceed twice the fee pool {}", 2 * pool)),
            (t < pool - c + 2 * d - ch - b, format!("collusion_deposit {t} must be below {}", pool - c + 2 * d - ch - b)),
            (pool >= c, format!("fee pool {pool} must cover compute_cost {c}")),
            (w(self.psi_deposit) > s_min * price + ch, format!("ane_deposit {} must exceed {}", self.psi_deposit, s_min * price + ch)),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(ConfigError::Constraint(msg.clone()));
        }
        let largest = [s_min * price, d + forfeit, pool + d + forfeit + d - ch, w(self.psi_deposit) + ch, t + b];
        if largest.iter().any(|&v| v > u64::MAX as i128 / 4) {
            return Err(ConfigError::Constraint("amounts overflow".into()));
        }
        Ok(())
    }

    /// Price of one delivered element.
    pub fn element_price(&self) -> u64 {
        self.clients as u64 * self.reward_per_element + 2 * self.extraction_fee
    }

    /// What a cheating extractor forfeits per element to the other parties.
    pub fn forfeit_per_element(&self) -> u64 {
        self.reward_per_element * (self.clients as u64 - 1)
    }

    pub fn forfeit(&self) -> u64 {
        self.min_set_size * self.forfeit_per_element()
    }

    pub fn extractor_deposit(&self) -> u64 {
        self.server_deposit + self.forfeit()
    }

    /// Extraction fees for both extractors at the maximum result size.
    pub fn fee_pool(&self) -> u64 {
        self.min_set_size * self.extraction_fee
    }

    pub fn buyer_deposit(&self) -> u64 {
        self.min_set_size * self.element_price()
    }

    pub fn traitor_bond(&self) -> u64 {
        self.fee_pool() + self.extractor_deposit() + self.server_deposit - self.fee
    }

    pub fn psi_amount(&self) -> u64 {
        self.psi_deposit + self.fee
    }

    pub fn buyer(&self) -> Address {
        Address::Client(self.clients)
    }

    /// Every party except the buyer.
    pub fn non_buyers(&self) -> Vec<Address> {
        (1..self.clients).map(Address::Client).chain(std::iter::once(Address::Dealer)).collect()
    }

    /// Non-buyers that are not extractors.
    pub fn bystanders(&self) -> Vec<Address> {
        (3..self.clients).map(Address::Client).chain(std::iter::once(Address::Dealer)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum SettlementCase {
    BothHonestConsistent,
    BothFailedToDeliver,
    BothCheatedNoTraitor,
    BothCheatedTraitorCorrect { traitor: usize },
    BothCheatedTraitorIncorrect { traitor: usize },
    OneCheatedNoTraitor { cheater: usize },
    OneCheatedTraitorCorrect { traitor: usize },
    OneCheatedTraitorIncorrect { traitor: usize },
    NoneCheatedAfterDispute,
    ArbitrationFailed,
    JusUnfairAbort,
}

impl SettlementCase {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BothHonestConsistent => "both_honest_consistent",
            Self::BothFailedToDeliver => "both_failed_to_deliver",
            Self::BothCheatedNoTraitor => "both_cheated_no_traitor",
            Self::BothCheatedTraitorCorrect { .. } => "both_cheated_traitor_correct",
            Self::BothCheatedTraitorIncorrect { .. } => "both_cheated_traitor_incorrect",
            Self::OneCheatedNoTraitor { .. } => "one_cheated_no_traitor",
            Self::OneCheatedTraitorCorrect { .. } => "one_cheated_traitor_correct",
            Self::OneCheatedTraitorIncorrect { .. } => "one_cheated_traitor_incorrect",
            Self::NoneCheatedAfterDispute => "none_cheated_after_dispute",
            Self::ArbitrationFailed => "arbitration_failed",
            Self::JusUnfairAbort => "jus_unfair_abort",
        }
    }
}

/// How the collusion contract paid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollusionResult {
    BothFollowed,
    FollowerDeviated,
    LeaderDeviated,
    BothDeviated,
    Refunded,
}

/// An escrow that remembers who paid in, so it can be unwound.
struct Pot {
    escrow: Escrow,
    deposits: Vec<(Address, u64)>,
}

impl Pot {
    fn new(id: ContractId) -> Self {
        Self { escrow: Escrow::new(id), deposits: Vec::new() }
    }

    fn addr(&self) -> Address {
        self.escrow.address()
    }

    fn deposit(&mut self, ledger: &mut Ledger, from: Address, amount: u64, reason: &str) -> Result<(), LedgerError> {
        self.escrow.deposit(ledger, from, amount, reason)?;
        self.deposits.push((from, amount));
        Ok(())
    }

    fn pay(&self, ledger: &mut Ledger, to: Address, amount: u64, reason: &str) -> Result<(), LedgerError> {
        self.escrow.pay(ledger, to, amount, reason)
    }

    /// Pays `total` evenly to `to`, dust to the arbiter.
    fn split(&self, ledger: &mut Ledger, total: u64, to: &[Address], reason: &str) -> Result<(), LedgerError> {
        let (share, dust) = split_evenly(total, to.len());
        for &a in to {
            self.pay(ledger, a, share, reason)?;
        }
        self.pay(ledger, Address::Arbiter, dust, "dust")
    }

    fn close(&mut self, ledger: &mut Ledger, remainder_to: Option<Address>, reason: &str) -> Result<(), LedgerError> {
        self.escrow.close(ledger, remainder_to, reason)
    }

    fn refund(&mut self, ledger: &mut Ledger) -> Result<(), LedgerError> {
        if self.escrow.is_settled() {
            return Ok(());
        }
        for (a, x) in std::mem::take(&mut self.deposits) {
            self.pay(ledger, a, x, "refund")?;
        }
        self.close(ledger, None, "refund")
    }
}

struct Pots {
    ane: Pot,
    pc: Pot,
    tc: Pot,
    cc: Pot,
}

impl Pots {
    fn new() -> Self {
        Self { ane: Pot::new(ContractId::Ane), pc: Pot::new(ContractId::Pc), tc: Pot::new(ContractId::Tc), cc: Pot::new(ContractId::Cc) }
    }

    fn refund_all(&mut self, ledger: &mut Ledger) -> Result<(), LedgerError> {
        self.cc.refund(ledger)?;
        self.tc.refund(ledger)?;
        self.pc.refund(ledger)?;
        self.ane.refund(ledger)
    }
}

/// An extractor's commitments to its encrypted table, one leaf per slot.
struct CommittedTable {
    tree: MerkleTree,
    commitments: Vec<Commitment>,
    openings: Vec<Opening>,
    index: BTreeMap<FieldElement, usize>,
}

impl CommittedTable {
    fn build(s: &mut Session, jus: &Jus, a: Address) -> Result<Self, RunError> {
        let holding = jus.holding(a).ok_or_else(|| RunError::Invariant(format!("{a} holds no set")))?;
        let mut commitments = Vec::new();
        let mut openings = Vec::new();
        let mut index = BTreeMap::new();
        let rng = s.rng(a);
        for bin in holding.binned.bins() {
            for &x in bin {
                index.insert(x, commitments.len());
                let (c, o) = commit(&x.value().to_be_bytes(), rng);
                commitments.push(c);
                openings.push(o);
            }
        }
        let leaves: Vec<[u8; 32]> = commitments.iter().map(|c| c.0).collect();
        Ok(Self { tree: MerkleTree::build(&leaves)?, commitments, openings, index })
    }

    fn item(&self, x: FieldElement) -> Result<ClaimItem, RunError> {
        let i = *self.index.get(&x).ok_or_else(|| RunError::Invariant("claimed element not in table".into()))?;
        Ok(ClaimItem { element: x, commitment: self.commitments[i], opening: self.openings[i].clone(), proof: self.tree.proof(i)? })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimItem {
    pub element: FieldElement,
    pub commitment: Commitment,
    pub opening: Opening,
    pub proof: MerkleProof,
}

/// An extractor's delivered result with everything the contract needs to check it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub key_opening: Opening,
    pub items: Vec<ClaimItem>,
}

impl Claim {
    pub fn elements(&self) -> BTreeSet<FieldElement> {
        self.items.iter().map(|i| i.element).collect()
    }
}

fn key_commitment(mk: &PrfKey) -> (Commitment, Opening) {
    commit_with(&mk.0, Prf::new(mk).key(KEY_OPENING_TAG, &[0]))
}

/// The contract's check of one claim against the published PSI result.
pub fn verify_claim(
    claim: &Claim,
    key_commitment: &Commitment,
    root: &Digest,
    jus: &Jus,
    field: FieldParams,
    table: &TableParams,
    ctr: &mut OpCounter,
) -> bool {
    if !verify_commit(key_commitment, &claim.key_opening) {
        return false;
    }
    let Ok(mk) = <[u8; 32]>::try_from(claim.key_opening.message.as_slice()) else {
        return false;
    };
    let mk = Digest(mk);
    let mut masks: BTreeMap<usize, Polynomial> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    claim.items.iter().all(|item| {
        let x = item.element;
        let bin = bin_of(x, table.bins);
        if !seen.insert(x)
            || item.opening.message != x.value().to_be_bytes()
            || !verify_commit(&item.commitment, &item.opening)
            || !verify_merkle_proof(root, &item.commitment.0, &item.proof)
            || item.proof.index / table.capacity != bin
        {
            return false;
        }
        let mask = masks.entry(bin).or_insert_with(|| switching_mask(&mk, field, bin, mask_len(table.capacity)));
        let (phi, zeta) = jus.bin_result(bin);
        is_unblinded_root(phi, zeta, mask, x, ctr)
    })
}

/// The arbiter's own computation of the result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Arbitration {
    pub elements: BTreeSet<FieldElement>,
    pub rejected_roots: usize,
}

/// Decrypts the master key, strips each bin's mask and factors what is left.
#[allow(clippy::too_many_arguments)]
pub fn arbitrate<R: rand::RngCore + ?Sized>(
    sk: &SecretKey,
    sealed_key: &SealedBox,
    key_com: &Commitment,
    bins: &[(Polynomial, Polynomial)],
    field: FieldParams,
    capacity: usize,
    encoding: &Encoding,
    rng: &mut R,
    ctr: &mut OpCounter,
) -> Result<Arbitration, RunError> {
    let bytes = sealed_dec(sk, sealed_key)?;
    let mk = Digest(<[u8; 32]>::try_from(bytes.as_slice()).map_err(|_| CryptoError::DecryptionFailure)?);
    if key_commitment(&mk).0 != *key_com {
        return Err(CryptoError::DecryptionFailure.into());
    }
    let mut elements = BTreeSet::new();
    let mut rejected_roots = 0;
    for (bin, (phi, zeta)) in bins.iter().enumerate() {
        let mask = switching_mask(&mk, field, bin, mask_len(capacity));
        let stripped = phi.sub_counted(&zeta.mul_counted(&mask, ctr), ctr);
        for r in stripped.roots(RootStrategy::FullFactor, rng)? {
            if encoding.validate(r).is_some() && bin_of(r, bins.len()) == bin {
                elements.insert(r);
            } else {
                rejected_roots += 1;
            }
        }
    }
    Ok(Arbitration { elements, rejected_roots })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub delivered: bool,
    pub valid: bool,
    pub elements: BTreeSet<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AneOutcome {
    pub kind: OutcomeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted: Option<Halt>,
    pub profile: ExtractorProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<JusOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<SettlementCase>,
    pub claims: BTreeMap<Address, ClaimReport>,
    pub dispute: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arbitration: Option<BTreeSet<u64>>,
    /// What the buyer ends up holding.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<BTreeSet<u64>>,
    pub paid_elements: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collusion: Option<CollusionResult>,
}

impl AneOutcome {
    fn halted(profile: ExtractorProfile, h: Halt, psi: Option<JusOutcome>) -> Self {
        Self {
            kind: h.kind,
            halted: Some(h),
            profile,
            psi,
            case: None,
            claims: BTreeMap::new(),
            dispute: false,
            arbitration: None,
            result: None,
            paid_elements: 0,
            collusion: None,
        }
    }
}

pub struct AneReport {
    pub config: ScenarioConfig,
    pub sets: ResolvedSets,
    pub table: TableParams,
    pub params: AneParams,
    pub outcome: AneOutcome,
    pub predicates: PredicateReport,
    pub ledger: Ledger,
    pub counters: Counters,
    pub ole_calls: u64,
    pub transcript: Transcript,
}

impl AneReport {
    pub fn oracle(&self) -> BTreeSet<u64> {
        self.sets.intersection()
    }

    pub fn net_changes(&self) -> BTreeMap<Address, i128> {
        self.ledger.net_changes()
    }

    /// Ledger nets, less the compute cost for extractors that computed the result.
    pub fn payoffs(&self) -> BTreeMap<Address, i128> {
        let mut out = self.net_changes();
        if self.outcome.case.is_some() {
            for i in [1, 2] {
                if self.outcome.profile.get(i).computes() {
                    *out.entry(Address::Client(i)).or_default() -= self.params.compute_cost as i128;
                }
            }
        }
        out
    }
}

/// Runs an extraction scenario with the flat per-element reward.
pub fn run(config: &ScenarioConfig) -> Result<AneReport, RunError> {
    run_with_reward(config, flat_reward)
}

struct Setup {
    params: AneParams,
    profile: ExtractorProfile,
    rf: RewardFn,
}

pub fn run_with_reward(config: &ScenarioConfig, rf: RewardFn) -> Result<AneReport, RunError> {
    config.validate()?;
    if config.protocol != Protocol::Ane {
        return Err(ConfigError::Invalid("config is not an extraction scenario".into()).into());
    }
    let field = config.field;
    let encoding = config.encoding()?;
    let sets = config.resolve_sets(encoding.payload_domain())?;
    let table = config.table_params(&sets)?;
    let params = AneParams::from_config(config, &sets)?;
    let adversary = Adversary::new(&config.strategies, field, config.clients(), table.bins, true)?;
    let profile = adversary.profile();
    let mut s = Session::new(field, table, encoding, config.clients(), adversary, config.seed.0, config.ole_mode, config.verbose, config.endowment());
    s.transcript.push(header("ane", config.digest(), config.seed.0, field.modulus()));
    let mut pots = Pots::new();
    let setup = Setup { params, profile, rf };
    let outcome = drive(&setup, &mut s, &mut pots, &sets)?;
    for pot in [&pots.ane, &pots.pc, &pots.tc, &pots.cc] {
        if !pot.escrow.is_settled() {
            return Err(RunError::Invariant(format!("{} left open", pot.addr())));
        }
    }
    s.ledger.check_conservation()?;
    let (expect, auditor_fee) = expectations(&setup, &outcome);
    let predicates = evaluate_predicates(&s.ledger, &CONTRACTS, params.psi_amount(), Address::Auditor, auditor_fee, &expect);
    s.finish(json!({ "outcome": outcome, "predicates": predicates }));
    let ole_calls = s.ole.calls();
    Ok(AneReport {
        config: config.clone(),
        sets,
        table,
        params,
        outcome,
        predicates,
        ledger: s.ledger,
        counters: s.counters,
        ole_calls,
        transcript: s.transcript,
    })
}

fn halt(kind: OutcomeKind, step: Step, party: Address) -> Halt {
    Halt { kind, step, party }
}

fn drive(setup: &Setup, s: &mut Session, pots: &mut Pots, sets: &ResolvedSets) -> Result<AneOutcome, RunError> {
    let p = &setup.params;
    let profile = setup.profile;
    let buyer = p.buyer();
    let ext = |i: usize| Address::Client(i);
    let pre = OutcomeKind::HaltedPreDeposit;
    let unwind = |s: &mut Session, pots: &mut Pots, h: Halt| -> Result<AneOutcome, RunError> {
        pots.refund_all(&mut s.ledger)?;
        Ok(AneOutcome::halted(profile, h, None))
    };

    s.next_round();
    if s.withholds(buyer, Step::BuyerDeposit) {
        return unwind(s, pots, halt(pre, Step::BuyerDeposit, buyer));
    }
    pots.ane.deposit(&mut s.ledger, buyer, p.buyer_deposit(), "buyer deposit")?;
    s.ledger.transfer(pots.ane.addr(), pots.pc.addr(), 2 * p.fee_pool(), "extraction fees")?;
    pots.pc.deposits.push((pots.ane.addr(), 2 * p.fee_pool()));
    s.send(Step::BuyerDeposit, buyer, pots.ane.addr(), "deposit", &json!({ "amount": p.buyer_deposit().to_string() }));

    s.next_round();
    for i in [1, 2] {
        if s.withholds(ext(i), Step::ExtractorDeposit) {
            return unwind(s, pots, halt(pre, Step::ExtractorDeposit, ext(i)));
        }
        pots.pc.deposit(&mut s.ledger, ext(i), p.extractor_deposit(), "extractor deposit")?;
    }
    if let Some(leader) = profile.leader() {
        let follower = 3 - leader;
        pots.cc.deposit(&mut s.ledger, ext(leader), p.collusion_deposit + p.bribe, "collusion deposit")?;
        pots.cc.deposit(&mut s.ledger, ext(follower), p.collusion_deposit, "collusion deposit")?;
        if let Some(t) = profile.traitor() {
            pots.tc.deposit(&mut s.ledger, Address::Dealer, p.traitor_bond(), "traitor bond")?;
            pots.tc.deposit(&mut s.ledger, ext(t), p.fee, "traitor report fee")?;
        }
    }

    let mut jus = Jus::new(s, p.psi_amount(), p.fee);
    if let Some(h) = jus.toss_master_key(s)? {
        return unwind(s, pots, h);
    }
    let mk = jus.master_key().expect("tossed");

    s.next_round();
    let (arb_sk, arb_pk) = keygen(s.rng(Address::Arbiter));
    if s.withholds(Address::Dealer, Step::PublishMasterKey) {
        return unwind(s, pots, halt(pre, Step::PublishMasterKey, Address::Dealer));
    }
    let mut sealed_key = sealed_enc(&arb_pk, &mk.0, s.rng(Address::Dealer));
    if s.adversary.tampers_master_key() {
        sealed_key.ciphertext[0] ^= 1;
    }
    let (key_com, key_opening) = key_commitment(&mk);
    s.send(Step::PublishMasterKey, Address::Dealer, pots.ane.addr(), "sealed_master_key", &json!({ "sealed": sealed_key, "commitment": key_com }));

    let parties = jus.parties();
    let element_key = match s.coin_toss(&parties, Step::EncryptionCoinToss, "mk_prime", pots.ane.addr(), pre)? {
        Ok(k) => k,
        Err(h) => return unwind(s, pots, h),
    };
    let prp = Prp::new(&element_key, s.encoding.payload_domain());
    let (clients, dealer) = payload_lists(sets);
    let seal = |v: &[u64]| v.iter().map(|&x| prp.permute(x)).collect::<Result<Vec<u64>, CryptoError>>();
    let sealed_clients = clients.iter().map(|c| seal(c)).collect::<Result<Vec<_>, _>>()?;
    let sealed_dealer = seal(&dealer)?;
    jus.bin_inputs(s, &sealed_clients, &sealed_dealer)?;

    s.next_round();
    let mut tables = BTreeMap::new();
    for i in [1, 2] {
        if s.withholds(ext(i), Step::CommitElements) {
            return unwind(s, pots, halt(pre, Step::CommitElements, ext(i)));
        }
        let t = CommittedTable::build(s, &jus, ext(i))?;
        s.send(Step::CommitElements, ext(i), pots.ane.addr(), "table_root", &json!({ "root": t.tree.root(), "leaves": t.tree.len() }));
        tables.insert(i, t);
    }

    let psi = drive_from_zspa(&mut jus, s, Address::Auditor, &[])?;
    match psi.kind {
        OutcomeKind::Delivered => {}
        OutcomeKind::UnfairAbort => {
            pots.refund_all(&mut s.ledger)?;
            let mut o = AneOutcome::halted(profile, halt(OutcomeKind::UnfairAbort, Step::SwitchingPoly, Address::Auditor), Some(psi));
            o.halted = None;
            o.case = Some(SettlementCase::JusUnfairAbort);
            return Ok(o);
        }
        _ => {
            pots.refund_all(&mut s.ledger)?;
            let h = psi.halted.expect("halted run carries its halt");
            return Ok(AneOutcome::halted(profile, h, Some(psi)));
        }
    }

    s.next_round();
    let holding = |a: Address| jus.holding(a).expect("binned");
    let own = |i: usize| holding(ext(i)).payloads.keys().copied().collect::<BTreeSet<_>>();
    let colluded: BTreeSet<FieldElement> = own(1).intersection(&own(2)).copied().collect();
    let mut claimed: BTreeMap<usize, Option<BTreeSet<FieldElement>>> = BTreeMap::new();
    let mut traitor_report = None;
    for i in [1, 2] {
        let b = profile.get(i);
        let elements = match b {
            ExtractorBehaviour::Honest => Some(jus.extract(s, ext(i))),
            ExtractorBehaviour::Cheat => Some(own(i)),
            ExtractorBehaviour::NoDeliver => None,
            _ => Some(colluded.clone()),
        };
        if b.is_traitor() {
            let report = if b == ExtractorBehaviour::TraitorThenCorrect { jus.extract(s, ext(i)) } else { colluded.clone() };
            s.send(Step::Claim, ext(i), pots.tc.addr(), "traitor_report", &report);
            traitor_report = Some(report);
        }
        let elements = if s.withholds(ext(i), Step::Claim) { None } else { elements };
        claimed.insert(i, elements);
    }

    let mut valid = BTreeMap::new();
    let mut sops = OpCounter::new();
    for i in [1, 2] {
        let ok = match &claimed[&i] {
            None => false,
            Some(elements) => {
                let t = &tables[&i];
                let claim = Claim { key_opening: key_opening.clone(), items: elements.iter().map(|&x| t.item(x)).collect::<Result<_, _>>()? };
                s.send(Step::Claim, ext(i), pots.ane.addr(), "claim", &claim);
                verify_claim(&claim, &key_com, &t.tree.root(), &jus, s.field, &s.table, &mut sops)
            }
        };
        valid.insert(i, ok);
    }
    s.add_ops(pots.ane.addr(), sops);

    let traitor = profile.traitor();
    let delivered = |i: usize| claimed[&i].is_some();
    let consistent = delivered(1) && delivered(2) && valid[&1] && valid[&2] && claimed[&1] == claimed[&2];
    let dispute = traitor.is_some() || !consistent;
    let mut arbitration = None;
    let (case, result) = if !dispute {
        (SettlementCase::BothHonestConsistent, claimed[&1].clone())
    } else if traitor.is_none() && !delivered(1) && !delivered(2) {
        (SettlementCase::BothFailedToDeliver, None)
    } else {
        s.next_round();
        let bins: Vec<(Polynomial, Polynomial)> = (0..s.table.bins)
            .map(|b| {
                let (phi, zeta) = jus.bin_result(b);
                (phi.clone(), zeta.clone())
            })
            .collect();
        let mut arng = s.take_rng(Address::Arbiter);
        let mut aops = OpCounter::new();
        let verdict = arbitrate(&arb_sk, &sealed_key, &key_com, &bins, s.field, s.table.capacity, &s.encoding, &mut arng, &mut aops);
        s.put_rng(Address::Arbiter, arng);
        s.add_ops(Address::Arbiter, aops);
        match verdict {
            Err(RunError::Crypto(e)) => {
                s.send(Step::Claim, Address::Arbiter, pots.ane.addr(), "arbitration_failed", &json!({ "error": e.to_string() }));
                (SettlementCase::ArbitrationFailed, None)
            }
            Err(e) => return Err(e),
            Ok(a) => {
                s.send(Step::Claim, Address::Arbiter, pots.ane.addr(), "arbitration", &a);
                let truth = a.elements;
                arbitration = Some(truth.clone());
                let cheated = |i: usize| claimed[&i].as_ref() != Some(&truth);
                let correct = traitor_report.as_ref() == Some(&truth);
                let case = match (cheated(1), cheated(2), traitor) {
                    (false, false, _) => SettlementCase::NoneCheatedAfterDispute,
                    (true, true, None) => SettlementCase::BothCheatedNoTraitor,
                    (true, true, Some(t)) if correct => SettlementCase::BothCheatedTraitorCorrect { traitor: t },
                    (true, true, Some(t)) => SettlementCase::BothCheatedTraitorIncorrect { traitor: t },
                    (c1, _, t) => {
                        let cheater = if c1 { 1 } else { 2 };
                        match t {
                            Some(t) if t == cheater && correct => SettlementCase::OneCheatedTraitorCorrect { traitor: t },
                            Some(t) if t == cheater => SettlementCase::OneCheatedTraitorIncorrect { traitor: t },
                            _ => SettlementCase::OneCheatedNoTraitor { cheater },
                        }
                    }
                };
                (case, Some(truth))
            }
        }
    };

    let n = match case {
        SettlementCase::BothFailedToDeliver | SettlementCase::ArbitrationFailed | SettlementCase::BothCheatedNoTraitor => 0,
        SettlementCase::BothCheatedTraitorIncorrect { .. } => 0,
        _ => result.as_ref().map_or(0, |r| r.len() as u64),
    };
    if n > p.min_set_size {
        return Err(RunError::Invariant(format!("{n} elements exceed the paid-for maximum {}", p.min_set_size)));
    }
    if (setup.rf)(p, n) > p.min_set_size * p.reward_per_element {
        return Err(RunError::Invariant("reward function pays more than the buyer deposited".into()));
    }
    s.next_round();
    settle(setup, &mut s.ledger, pots, case, n)?;
    let collusion = settle_collusion(setup, &mut s.ledger, pots, &claimed, &colluded)?;
    pots.refund_all(&mut s.ledger)?;
    s.send(Step::Claim, pots.ane.addr(), pots.ane.addr(), "settle", &json!({ "case": case, "paid_elements": n.to_string() }));

    let decode = |set: &BTreeSet<FieldElement>| -> BTreeSet<u64> {
        set.iter().filter_map(|&x| s.encoding.validate(x)).filter_map(|e| prp.invert(e).ok()).collect()
    };
    let claims = [1, 2]
        .into_iter()
        .map(|i| {
            let r = ClaimReport { delivered: delivered(i), valid: valid[&i], elements: claimed[&i].as_ref().map(&decode).unwrap_or_default() };
            (ext(i), r)
        })
        .collect();
    let result = match case {
        SettlementCase::BothFailedToDeliver | SettlementCase::ArbitrationFailed => None,
        _ => result.as_ref().map(&decode),
    };
    Ok(AneOutcome {
        kind: OutcomeKind::Delivered,
        halted: None,
        profile,
        psi: Some(psi),
        case: Some(case),
        claims,
        dispute,
        arbitration: arbitration.as_ref().map(&decode),
        result,
        paid_elements: n,
        collusion,
    })
}

fn settle(setup: &Setup, ledger: &mut Ledger, pots: &mut Pots, case: SettlementCase, n: u64) -> Result<(), RunError> {
    use SettlementCase::*;
    let p = &setup.params;
    let ext = Address::Client;
    let buyer = p.buyer();
    let fees = n * p.extraction_fee;
    let dep = p.extractor_deposit();
    let ch = p.fee;
    let bonus = p.server_deposit - ch;
    let ane_addr = pots.ane.addr();
    let without = |skip: usize| p.non_buyers().into_iter().filter(|&a| a != ext(skip)).collect::<Vec<_>>();
    let rewards = |ledger: &mut Ledger, pots: &Pots| -> Result<(), LedgerError> {
        let r = (setup.rf)(p, n);
        for a in p.non_buyers() {
            pots.ane.pay(ledger, a, r, "element reward")?;
        }
        Ok(())
    };
    let pay_traitor = |ledger: &mut Ledger, pots: &mut Pots, t: usize, prize: u64| -> Result<(), LedgerError> {
        pots.pc.pay(ledger, pots.tc.addr(), prize, "traitor prize")?;
        pots.tc.pay(ledger, ext(t), prize + ch, "traitor prize")?;
        pots.tc.pay(ledger, Address::Dealer, p.traitor_bond(), "bond refund")?;
        pots.tc.close(ledger, None, "traitor settled")
    };
    match case {
        BothHonestConsistent | NoneCheatedAfterDispute => {
            for i in [1, 2] {
                pots.pc.pay(ledger, ext(i), dep + fees, "extraction fee")?;
            }
            pots.pc.close(ledger, Some(ane_addr), "unused fees")?;
            rewards(ledger, pots)?;
            pots.ane.close(ledger, Some(buyer), "buyer remainder")?;
            if case == NoneCheatedAfterDispute {
                if setup.profile.traitor().is_some() {
                    pots.tc.pay(ledger, Address::Arbiter, ch, "arbitration fee")?;
                    pots.tc.pay(ledger, Address::Dealer, p.traitor_bond(), "bond refund")?;
                    pots.tc.close(ledger, None, "traitor settled")?;
                } else {
                    ledger.transfer(Address::Dealer, Address::Arbiter, ch, "arbitration fee")?;
                }
            }
        }
        BothFailedToDeliver => {
            pots.pc.close(ledger, Some(ane_addr), "forfeit")?;
            pots.ane.pay(ledger, buyer, p.buyer_deposit(), "buyer refund")?;
            pots.ane.split(ledger, 2 * dep, &p.bystanders(), "forfeit share")?;
            pots.ane.close(ledger, None, "settled")?;
        }
        BothCheatedNoTraitor | BothCheatedTraitorIncorrect { .. } => {
            pots.pc.pay(ledger, Address::Arbiter, ch, "arbitration fee")?;
            pots.pc.close(ledger, Some(ane_addr), "forfeit")?;
            pots.ane.pay(ledger, buyer, p.buyer_deposit(), "buyer refund")?;
            pots.ane.split(ledger, 2 * dep - ch, &p.bystanders(), "forfeit share")?;
            pots.ane.close(ledger, None, "settled")?;
        }
        BothCheatedTraitorCorrect { traitor } => {
            pots.pc.pay(ledger, Address::Arbiter, ch, "arbitration fee")?;
            pay_traitor(ledger, pots, traitor, fees + dep + bonus)?;
            pots.pc.close(ledger, Some(ane_addr), "forfeit")?;
            pots.ane.split(ledger, p.forfeit(), &without(3 - traitor), "forfeit share")?;
            pots.ane.close(ledger, Some(buyer), "buyer remainder")?;
        }
        OneCheatedNoTraitor { cheater } | OneCheatedTraitorIncorrect { traitor: cheater } => {
            pots.pc.pay(ledger, Address::Arbiter, ch, "arbitration fee")?;
            pots.pc.pay(ledger, ext(3 - cheater), dep + fees + bonus, "extraction fee and bonus")?;
            pots.pc.close(ledger, Some(ane_addr), "forfeit")?;
            pots.ane.split(ledger, p.forfeit(), &without(cheater), "forfeit share")?;
            pots.ane.close(ledger, Some(buyer), "buyer remainder")?;
        }
        OneCheatedTraitorCorrect { traitor } => {
            pots.pc.pay(ledger, Address::Arbiter, ch, "arbitration fee")?;
            pots.pc.pay(ledger, ext(3 - traitor), dep + fees + bonus, "extraction fee and bonus")?;
            pay_traitor(ledger, pots, traitor, fees + p.forfeit())?;
            pots.pc.close(ledger, Some(ane_addr), "unused fees")?;
            rewards(ledger, pots)?;
            pots.ane.close(ledger, Some(buyer), "buyer remainder")?;
        }
        ArbitrationFailed | JusUnfairAbort => pots.refund_all(ledger)?,
    }
    Ok(())
}

fn settle_collusion(
    setup: &Setup,
    ledger: &mut Ledger,
    pots: &mut Pots,
    claimed: &BTreeMap<usize, Option<BTreeSet<FieldElement>>>,
    colluded: &BTreeSet<FieldElement>,
) -> Result<Option<CollusionResult>, RunError> {
    let Some(leader) = setup.profile.leader() else {
        return Ok(None);
    };
    let p = &setup.params;
    let follower = 3 - leader;
    let follows = |i: usize| claimed[&i].as_ref() == Some(colluded);
    let (t, b) = (p.collusion_deposit, p.bribe);
    let (lead, follow) = (Address::Client(leader), Address::Client(follower));
    let result = match (follows(leader), follows(follower)) {
        (true, true) => {
            pots.cc.pay(ledger, lead, t, "collusion settled")?;
            pots.cc.pay(ledger, follow, t + b, "collusion bribe")?;
            CollusionResult::BothFollowed
        }
        (true, false) => {
            pots.cc.pay(ledger, lead, 2 * t + b, "follower deviated")?;
            CollusionResult::FollowerDeviated
        }
        (false, true) => {
            pots.cc.pay(ledger, follow, 2 * t + b, "leader deviated")?;
            CollusionResult::LeaderDeviated
        }
        (false, false) => {
            pots.cc.refund(ledger)?;
            return Ok(Some(CollusionResult::BothDeviated));
        }
    };
    pots.cc.close(ledger, None, "collusion settled")?;
    Ok(Some(result))
}

/// Deposits each party is asked to make, and what it should get back.
fn expectations(setup: &Setup, o: &AneOutcome) -> (BTreeMap<Address, Expectation>, u64) {
    let p = &setup.params;
    let mut expect: BTreeMap<Address, Expectation> = (1..=p.clients)
        .map(Address::Client)
        .chain(std::iter::once(Address::Dealer))
        .map(|a| (a, Expectation { deposit: p.psi_amount(), compensation: 0, reward: 0 }))
        .collect();
    let mut bump = |a: Address, x: u64| expect.get_mut(&a).expect("party").deposit += x;
    bump(p.buyer(), p.buyer_deposit());
    for i in [1, 2] {
        bump(Address::Client(i), p.extractor_deposit());
    }
    if let Some(leader) = setup.profile.leader() {
        bump(Address::Client(leader), p.collusion_deposit + p.bribe);
        bump(Address::Client(3 - leader), p.collusion_deposit);
        if let Some(t) = setup.profile.traitor() {
            bump(Address::Client(t), p.fee);
            bump(Address::Dealer, p.traitor_bond());
        }
    }
    let mut auditor_fee = 0;
    if let Some(audit) = o.psi.as_ref().and_then(|j| j.audit.as_ref()) {
        auditor_fee = audit.payout.auditor;
        for (a, e) in expect.iter_mut() {
            e.compensation = audit.payout.extra_for(*a);
        }
    }
    if matches!(o.case, Some(SettlementCase::BothHonestConsistent)) {
        let n = o.paid_elements;
        let r = (setup.rf)(p, n) as i128;
        for a in p.non_buyers() {
            expect.get_mut(&a).expect("party").reward = r;
        }
        for i in [1, 2] {
            expect.get_mut(&Address::Client(i)).expect("party").reward += (n * p.extraction_fee) as i128;
        }
        expect.get_mut(&p.buyer()).expect("party").reward = -(p.clients as i128 * r + 2 * (n * p.extraction_fee) as i128);
    }
    (expect, auditor_fee)
}

/// One row of the extractor payoff matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PayoffRow {
    pub profile: ExtractorProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<SettlementCase>,
    pub payoffs: BTreeMap<Address, i128>,
}

/// Runs `config` under `profile`, replacing any configured profile.
pub fn payoff_of(config: &ScenarioConfig, profile: ExtractorProfile) -> Result<PayoffRow, RunError> {
    let mut c = config.clone();
    c.strategies.retain(|s| !matches!(s, Strategy::ExtractorProfile { .. }));
    c.strategies.push(Strategy::ExtractorProfile { first: profile.first, second: profile.second });
    let r = run(&c)?;
    Ok(PayoffRow { profile, case: r.outcome.case, payoffs: r.payoffs() })
}

pub fn payoff_matrix(config: &ScenarioConfig) -> Result<Vec<PayoffRow>, RunError> {
    ExtractorProfile::all_valid().into_iter().map(|p| payoff_of(config, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AneParams {
        AneParams {
            clients: 3,
            min_set_size: 10,
            psi_deposit: 200,
            fee: 50,
            reward_per_element: 3,
            extraction_fee: 2,
            server_deposit: 60,
            compute_cost: 5,
            bribe: 3,
            collusion_deposit: 10,
        }
    }

    #[test]
    fn derived_amounts() {
        let p = params();
        p.validate().unwrap();
        assert_eq!(p.element_price(), 13);
        assert_eq!(p.forfeit(), 60);
        assert_eq!(p.extractor_deposit(), 120);
        assert_eq!(p.fee_pool(), 20);
        assert_eq!(p.buyer_deposit(), 130);
        assert_eq!(p.traitor_bond(), 150);
        assert_eq!(p.non_buyers(), vec![Address::Client(1), Address::Client(2), Address::Dealer]);
        assert_eq!(p.bystanders(), vec![Address::Dealer]);
    }

    #[test]
    fn each_constraint_is_enforced() {
        let bad: [fn(&mut AneParams); 7] = [
            |p| p.clients = 2,
            |p| p.server_deposit = 55,
            |p| p.bribe = 5,
            |p| p.fee = 40,
            |p| p.collusion_deposit = 82,
            |p| p.compute_cost = 21,
            |p| p.psi_deposit = 180,
        ];
        for f in bad {
            let mut p = params();
            f(&mut p);
            assert!(matches!(p.validate(), Err(ConfigError::Constraint(_))), "{p:?}");
        }
    }

    #[test]
    fn pot_refund_returns_every_deposit() {
        let mut l = Ledger::new([(Address::Client(1), 50), (Address::Dealer, 50)]);
        let mut pot = Pot::new(ContractId::Tc);
        pot.deposit(&mut l, Address::Client(1), 20, "x").unwrap();
        pot.deposit(&mut l, Address::Dealer, 7, "y").unwrap();
        pot.refund(&mut l).unwrap();
        assert_eq!(l.balance(Address::Client(1)), 50);
        assert_eq!(l.balance(Address::Dealer), 50);
        assert!(pot.refund(&mut l).is_ok());
    }
}
