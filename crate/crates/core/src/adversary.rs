//! Declarative misbehaviour. A strategy only ever changes what its own
//! party sends, or whether it sends at all.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::crypto::{hash, PrfKey};
use crate::dec::Dec;
use crate::field::FieldParams;
use crate::ledger::Address;
use crate::poly::Polynomial;
use crate::vopr::EvalForgery;

/// Points in the run where a party sends something, in run order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    BuyerDeposit,
    ExtractorDeposit,
    CoinToss,
    PublishMasterKey,
    EncryptionCoinToss,
    CommitElements,
    ZspaAgree,
    Deposit,
    VoprRandomiseClient,
    VoprRandomiseDealer,
    SubmitNu,
    SwitchingPoly,
    AuditKeys,
    Claim,
}

impl Step {
    pub fn is_ane_only(self) -> bool {
        matches!(
            self,
            Step::BuyerDeposit
                | Step::ExtractorDeposit
                | Step::PublishMasterKey
                | Step::EncryptionCoinToss
                | Step::CommitElements
                | Step::Claim
        )
    }

    /// Whether `party` sends anything at this step. `clients` is the number of A-clients.
    pub fn is_sender(self, party: Address, clients: usize) -> bool {
        let client = matches!(party, Address::Client(i) if i <= clients);
        let dealer = party == Address::Dealer;
        let extractor = matches!(party, Address::Client(1 | 2));
        match self {
            Step::CoinToss | Step::Deposit | Step::EncryptionCoinToss => client || dealer,
            Step::VoprRandomiseClient | Step::VoprRandomiseDealer => client || dealer,
            Step::ZspaAgree | Step::SubmitNu | Step::AuditKeys => client,
            Step::SwitchingPoly | Step::PublishMasterKey => dealer,
            Step::BuyerDeposit => party == Address::Client(clients),
            Step::ExtractorDeposit | Step::CommitElements | Step::Claim => extractor,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

/// What an extractor does once the intersection is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorBehaviour {
    Honest,
    Cheat,
    ColludeLead,
    ColludeFollow,
    TraitorThenCorrect,
    TraitorThenIncorrect,
    NoDeliver,
}

impl ExtractorBehaviour {
    pub const ALL: [ExtractorBehaviour; 7] = [
        ExtractorBehaviour::Honest,
        ExtractorBehaviour::Cheat,
        ExtractorBehaviour::ColludeLead,
        ExtractorBehaviour::ColludeFollow,
        ExtractorBehaviour::TraitorThenCorrect,
        ExtractorBehaviour::TraitorThenIncorrect,
        ExtractorBehaviour::NoDeliver,
    ];

    pub fn is_traitor(self) -> bool {
        matches!(self, ExtractorBehaviour::TraitorThenCorrect | ExtractorBehaviour::TraitorThenIncorrect)
    }

    /// Whether the extractor actually computes the result and so bears the compute cost.
    pub fn computes(self) -> bool {
        matches!(self, ExtractorBehaviour::Honest | ExtractorBehaviour::TraitorThenCorrect)
    }

    fn is_free(self) -> bool {
        matches!(self, ExtractorBehaviour::Honest | ExtractorBehaviour::Cheat | ExtractorBehaviour::NoDeliver)
    }
}

/// A pair of extractor behaviours, first for `A1`, second for `A2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtractorProfile {
    pub first: ExtractorBehaviour,
    pub second: ExtractorBehaviour,
}

impl ExtractorProfile {
    pub const HONEST: ExtractorProfile =
        ExtractorProfile { first: ExtractorBehaviour::Honest, second: ExtractorBehaviour::Honest };

    pub fn new(first: ExtractorBehaviour, second: ExtractorBehaviour) -> Result<Self, ConfigError> {
        let p = Self { first, second };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(ConfigError::InvalidProfile { first, second })
        }
    }

    pub fn get(&self, extractor: usize) -> ExtractorBehaviour {
        if extractor == 1 {
            self.first
        } else {
            self.second
        }
    }

    pub fn is_valid(&self) -> bool {
        use ExtractorBehaviour::*;
        let ok = |a: ExtractorBehaviour, b: ExtractorBehaviour| match a {
            ColludeLead => matches!(b, ColludeFollow | TraitorThenCorrect | TraitorThenIncorrect),
            ColludeFollow => b == ColludeLead,
            TraitorThenCorrect | TraitorThenIncorrect => matches!(b, ColludeLead | Honest),
            _ => b.is_free() || (a == Honest && b.is_traitor()),
        };
        ok(self.first, self.second) && ok(self.second, self.first)
    }

    /// Whether the extractors signed a collusion contract.
    pub fn colluding(&self) -> bool {
        use ExtractorBehaviour::*;
        matches!(self.first, ColludeLead) || matches!(self.second, ColludeLead) || self.traitor().is_some()
    }

    /// The extractor that set the collusion up, when there is one.
    pub fn leader(&self) -> Option<usize> {
        if !self.colluding() {
            return None;
        }
        if self.first == ExtractorBehaviour::ColludeLead || self.second.is_traitor() {
            Some(1)
        } else {
            Some(2)
        }
    }

    pub fn traitor(&self) -> Option<usize> {
        if self.first.is_traitor() {
            Some(1)
        } else if self.second.is_traitor() {
            Some(2)
        } else {
            None
        }
    }

    pub fn all_valid() -> Vec<ExtractorProfile> {
        let mut out = Vec::new();
        for a in ExtractorBehaviour::ALL {
            for b in ExtractorBehaviour::ALL {
                let p = ExtractorProfile { first: a, second: b };
                if p.is_valid() {
                    out.push(p);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgeryKind {
    Theta,
    Beta,
    Both,
}

impl From<ForgeryKind> for EvalForgery {
    fn from(k: ForgeryKind) -> Self {
        match k {
            ForgeryKind::Theta => EvalForgery::Theta,
            ForgeryKind::Beta => EvalForgery::Beta,
            ForgeryKind::Both => EvalForgery::Both,
        }
    }
}

/// Which randomisation pass a VOPR forgery targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoprPass {
    Client,
    Dealer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    HonestAll,
    TamperNu {
        client: Address,
        delta: Vec<Dec<u64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bin: Option<Dec<usize>>,
    },
    WrongZspaKey {
        client: Address,
    },
    AbortAt {
        party: Address,
        step: Step,
    },
    WithholdSubmission {
        party: Address,
        step: Step,
    },
    ForgeVopr {
        client: Address,
        pass: VoprPass,
        forgery: ForgeryKind,
    },
    TamperMasterKey,
    ExtractorProfile {
        first: ExtractorBehaviour,
        second: ExtractorBehaviour,
    },
    CancelingCollusion {
        clients: Vec<Address>,
        deltas: Vec<Vec<Dec<u64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bin: Option<Dec<usize>>,
    },
}

/// A party's outgoing message as seen by the strategy hook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Nu { bin: usize, poly: Polynomial },
    AuditKey { bin: usize, key: PrfKey },
    Signal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Send(Message),
    Withhold,
}

#[derive(Clone, Debug)]
struct Tamper {
    client: usize,
    delta: Polynomial,
    bin: usize,
}

/// The validated strategy list bound to one run.
#[derive(Clone, Debug, Default)]
pub struct Adversary {
    strategies: Vec<Strategy>,
    tampers: Vec<Tamper>,
    wrong_keys: BTreeSet<usize>,
    profile: Option<ExtractorProfile>,
}

fn client_index(a: Address, clients: usize) -> Result<usize, ConfigError> {
    match a {
        Address::Client(i) if (1..=clients).contains(&i) => Ok(i),
        other => Err(ConfigError::UnknownParty(other.to_string())),
    }
}

fn delta_poly(field: FieldParams, coeffs: &[Dec<u64>]) -> Result<Polynomial, ConfigError> {
    let p = Polynomial::new(field, coeffs.iter().map(|c| field.elem(c.0)).collect())
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if p.is_zero() {
        return Err(ConfigError::Invalid("tamper delta reduces to the zero polynomial".into()));
    }
    Ok(p)
}

impl Adversary {
    pub fn honest() -> Self {
        Self::default()
    }

    /// Validates references against a run with `clients` A-clients and `bins` bins.
    pub fn new(strategies: &[Strategy], field: FieldParams, clients: usize, bins: usize, ane: bool) -> Result<Self, ConfigError> {
        let mut adv = Self { strategies: strategies.to_vec(), ..Self::default() };
        let check_bin = |b: &Option<Dec<usize>>| -> Result<usize, ConfigError> {
            let bin = b.map_or(0, |b| b.0);
            if bin < bins {
                Ok(bin)
            } else {
                Err(ConfigError::Invalid(format!("bin {bin} out of range (table has {bins})")))
            }
        };
        for s in strategies {
            match s {
                Strategy::HonestAll => {}
                Strategy::TamperNu { client, delta, bin } => {
                    let client = client_index(*client, clients)?;
                    adv.tampers.push(Tamper { client, delta: delta_poly(field, delta)?, bin: check_bin(bin)? });
                }
                Strategy::WrongZspaKey { client } => {
                    adv.wrong_keys.insert(client_index(*client, clients)?);
                }
                Strategy::AbortAt { party, step } | Strategy::WithholdSubmission { party, step } => {
                    if step.is_ane_only() && !ane {
                        return Err(ConfigError::UnknownStep(step.to_string()));
                    }
                    if !step.is_sender(*party, clients) {
                        return Err(ConfigError::Invalid(format!("{party} sends nothing at step {step}")));
                    }
                }
                Strategy::ForgeVopr { client, .. } => {
                    client_index(*client, clients)?;
                }
                Strategy::TamperMasterKey => {
                    if !ane {
                        return Err(ConfigError::Invalid("tamper_master_key applies to the extraction protocol only".into()));
                    }
                }
                Strategy::ExtractorProfile { first, second } => {
                    if !ane {
                        return Err(ConfigError::Invalid("extractor_profile applies to the extraction protocol only".into()));
                    }
                    if adv.profile.is_some() {
                        return Err(ConfigError::Invalid("more than one extractor profile".into()));
                    }
                    adv.profile = Some(ExtractorProfile::new(*first, *second)?);
                }
                Strategy::CancelingCollusion { clients: who, deltas, bin } => {
                    if who.len() < 2 || who.len() != deltas.len() {
                        return Err(ConfigError::Invalid("canceling collusion needs one delta per client, at least two".into()));
                    }
                    let bin = check_bin(bin)?;
                    let mut seen = BTreeSet::new();
                    let mut sum = Polynomial::zero(field);
                    for (c, d) in who.iter().zip(deltas) {
                        let c = client_index(*c, clients)?;
                        if !seen.insert(c) {
                            return Err(ConfigError::Invalid(format!("client A{c} listed twice")));
                        }
                        let d = delta_poly(field, d)?;
                        sum = &sum + &d;
                        adv.tampers.push(Tamper { client: c, delta: d, bin });
                    }
                    if !sum.is_zero() {
                        return Err(ConfigError::Invalid("canceling collusion deltas do not sum to zero".into()));
                    }
                }
            }
        }
        Ok(adv)
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn is_honest(&self) -> bool {
        self.strategies.iter().all(|s| *s == Strategy::HonestAll)
    }

    /// The inline hook: possibly changes `msg` or suppresses it.
    pub fn apply(&self, party: Address, step: Step, msg: Message) -> Action {
        if self.withholds(party, step) {
            return Action::Withhold;
        }
        match (party, msg) {
            (Address::Client(c), Message::Nu { bin, mut poly }) => {
                for t in self.tampers.iter().filter(|t| t.client == c && t.bin == bin) {
                    poly = &poly + &t.delta;
                }
                Action::Send(Message::Nu { bin, poly })
            }
            (Address::Client(c), Message::AuditKey { bin, key }) if self.wrong_keys.contains(&c) => {
                Action::Send(Message::AuditKey { bin, key: self.zspa_key(c, key) })
            }
            (_, msg) => Action::Send(msg),
        }
    }

    pub fn withholds(&self, party: Address, step: Step) -> bool {
        self.strategies.iter().any(|s| match s {
            Strategy::AbortAt { party: p, step: s } => *p == party && step >= *s,
            Strategy::WithholdSubmission { party: p, step: s } => *p == party && step == *s,
            _ => false,
        })
    }

    /// The ZSPA key a client actually blinds with.
    pub fn zspa_key(&self, client: usize, honest: PrfKey) -> PrfKey {
        if self.wrong_keys.contains(&client) {
            hash(&[b"WRONG-ZSPA-KEY", &honest.0, &(client as u64).to_be_bytes()])
        } else {
            honest
        }
    }

    pub fn vopr_forgery(&self, client: usize, pass: VoprPass) -> EvalForgery {
        self.strategies
            .iter()
            .find_map(|s| match s {
                Strategy::ForgeVopr { client: Address::Client(c), pass: p, forgery } if *c == client && *p == pass => {
                    Some((*forgery).into())
                }
                _ => None,
            })
            .unwrap_or_default()
    }

    pub fn tampers_master_key(&self) -> bool {
        self.strategies.contains(&Strategy::TamperMasterKey)
    }

    pub fn profile(&self) -> ExtractorProfile {
        self.profile.unwrap_or(ExtractorProfile::HONEST)
    }

    /// Clients whose ν submissions get modified.
    pub fn tampering_clients(&self) -> BTreeSet<usize> {
        self.tampers.iter().map(|t| t.client).collect()
    }

    pub fn wrong_key_clients(&self) -> &BTreeSet<usize> {
        &self.wrong_keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtractorBehaviour::*;

    fn f() -> FieldParams {
        FieldParams::mersenne61()
    }

    #[test]
    fn profile_validity() {
        assert!(ExtractorProfile::new(Honest, Honest).is_ok());
        assert!(ExtractorProfile::new(Cheat, NoDeliver).is_ok());
        assert!(ExtractorProfile::new(ColludeLead, ColludeFollow).is_ok());
        assert!(ExtractorProfile::new(ColludeLead, TraitorThenCorrect).is_ok());
        assert!(ExtractorProfile::new(Honest, TraitorThenIncorrect).is_ok());
        assert!(ExtractorProfile::new(ColludeFollow, Honest).is_err());
        assert!(ExtractorProfile::new(ColludeLead, Honest).is_err());
        assert!(ExtractorProfile::new(TraitorThenCorrect, TraitorThenIncorrect).is_err());
        assert!(ExtractorProfile::new(Cheat, TraitorThenCorrect).is_err());
        let p = ExtractorProfile::new(TraitorThenCorrect, ColludeLead).unwrap();
        assert_eq!((p.leader(), p.traitor()), (Some(2), Some(1)));
        let p = ExtractorProfile::new(Honest, TraitorThenCorrect).unwrap();
        assert_eq!((p.leader(), p.traitor()), (Some(1), Some(2)));
        assert_eq!(ExtractorProfile::HONEST.leader(), None);
        assert_eq!(ExtractorProfile::all_valid().len(), 9 + 2 + 4 + 4);
    }

    #[test]
    fn honest_all_passes_messages_through() {
        let adv = Adversary::new(&[Strategy::HonestAll], f(), 3, 4, false).unwrap();
        let poly = Polynomial::from_u64s(f(), &[1, 2, 3]);
        let msg = Message::Nu { bin: 0, poly };
        assert_eq!(adv.apply(Address::Client(1), Step::SubmitNu, msg.clone()), Action::Send(msg));
    }

    #[test]
    fn tamper_changes_exactly_one_message() {
        let s = Strategy::TamperNu { client: Address::Client(2), delta: vec![Dec(1)], bin: None };
        let adv = Adversary::new(&[s], f(), 3, 4, false).unwrap();
        let poly = Polynomial::from_u64s(f(), &[5, 6]);
        let mut changed = 0;
        for c in 1..=3 {
            for bin in 0..4 {
                let msg = Message::Nu { bin, poly: poly.clone() };
                if adv.apply(Address::Client(c), Step::SubmitNu, msg.clone()) != Action::Send(msg) {
                    changed += 1;
                }
            }
        }
        assert_eq!(changed, 1);
    }

    #[test]
    fn abort_at_covers_later_steps() {
        let s = Strategy::AbortAt { party: Address::Client(1), step: Step::Deposit };
        let adv = Adversary::new(&[s], f(), 3, 1, false).unwrap();
        assert!(!adv.withholds(Address::Client(1), Step::ZspaAgree));
        assert!(adv.withholds(Address::Client(1), Step::Deposit));
        assert!(adv.withholds(Address::Client(1), Step::SubmitNu));
        assert!(!adv.withholds(Address::Client(2), Step::SubmitNu));
        let w = Strategy::WithholdSubmission { party: Address::Client(1), step: Step::Deposit };
        let adv = Adversary::new(&[w], f(), 3, 1, false).unwrap();
        assert!(!adv.withholds(Address::Client(1), Step::SubmitNu));
    }

    #[test]
    fn bad_references_are_config_errors() {
        let cases = [
            Strategy::WrongZspaKey { client: Address::Client(4) },
            Strategy::TamperNu { client: Address::Dealer, delta: vec![Dec(1)], bin: None },
            Strategy::TamperNu { client: Address::Client(1), delta: vec![Dec(0)], bin: None },
            Strategy::TamperNu { client: Address::Client(1), delta: vec![Dec(1)], bin: Some(Dec(9)) },
            Strategy::AbortAt { party: Address::Dealer, step: Step::SubmitNu },
            Strategy::AbortAt { party: Address::Client(1), step: Step::Claim },
            Strategy::ExtractorProfile { first: Honest, second: Honest },
            Strategy::CancelingCollusion {
                clients: vec![Address::Client(1), Address::Client(2)],
                deltas: vec![vec![Dec(1)], vec![Dec(1)]],
                bin: None,
            },
        ];
        for s in cases {
            assert!(Adversary::new(std::slice::from_ref(&s), f(), 3, 4, false).is_err(), "{s:?}");
        }
    }

    #[test]
    fn canceling_deltas_accepted() {
        let p = f().modulus();
        let s = Strategy::CancelingCollusion {
            clients: vec![Address::Client(1), Address::Client(3)],
            deltas: vec![vec![Dec(7), Dec(1)], vec![Dec(p - 7), Dec(p - 1)]],
            bin: None,
        };
        let adv = Adversary::new(&[s], f(), 3, 4, false).unwrap();
        assert_eq!(adv.tampering_clients(), BTreeSet::from([1, 3]));
    }

    #[test]
    fn strategy_json_shape() {
        let s: Strategy = serde_json::from_str(r#"{"kind":"abort_at","party":"A2","step":"deposit"}"#).unwrap();
        assert_eq!(s, Strategy::AbortAt { party: Address::Client(2), step: Step::Deposit });
        let t: Strategy = serde_json::from_str(r#"{"kind":"tamper_nu","client":"A1","delta":["1", 2]}"#).unwrap();
        assert!(matches!(t, Strategy::TamperNu { bin: None, .. }));
        assert!(serde_json::from_str::<Strategy>(r#"{"kind":"nope"}"#).is_err());
    }
}
