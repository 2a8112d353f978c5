//! A toy chain: balances, an append-only transfer log, escrow contracts and
//! the delivery/abort predicates evaluated over the log.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("{addr} holds {have} coins, cannot pay {need}")]
    InsufficientFunds { addr: Address, need: u64, have: u64 },
    #[error("coin total changed from {before} to {after}")]
    ConservationViolated { before: u128, after: u128 },
    #[error("{0} already settled")]
    AlreadySettled(ContractId),
    #[error("{contract} closed with {left} coins still in escrow")]
    Stranded { contract: ContractId, left: u64 },
    #[error("invalid contract parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContractId {
    Jus,
    Ane,
    Pc,
    Cc,
    Tc,
}

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContractId::Jus => "SC_JUS",
            ContractId::Ane => "SC_ANE",
            ContractId::Pc => "SC_PC",
            ContractId::Cc => "SC_CC",
            ContractId::Tc => "SC_TC",
        })
    }
}

/// Anyone who can hold coins. Clients are numbered from one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Address {
    Client(usize),
    Dealer,
    Auditor,
    Arbiter,
    Contract(ContractId),
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Address::Client(i) => write!(f, "A{i}"),
            Address::Dealer => f.write_str("D"),
            Address::Auditor => f.write_str("AUD"),
            Address::Arbiter => f.write_str("ARB"),
            Address::Contract(c) => c.fmt(f),
        }
    }
}

impl FromStr for Address {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "D" => Address::Dealer,
            "AUD" => Address::Auditor,
            "ARB" => Address::Arbiter,
            "SC_JUS" => Address::Contract(ContractId::Jus),
            "SC_ANE" => Address::Contract(ContractId::Ane),
            "SC_PC" => Address::Contract(ContractId::Pc),
            "SC_CC" => Address::Contract(ContractId::Cc),
            "SC_TC" => Address::Contract(ContractId::Tc),
            _ => {
                let idx = s
                    .strip_prefix('A')
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| format!("unknown address {s:?}"))?;
                Address::Client(idx)
            }
        })
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerEvent {
    #[serde(with = "crate::dec")]
    pub round: u64,
    pub from: Address,
    pub to: Address,
    #[serde(with = "crate::dec")]
    pub amount: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Ledger {
    balances: BTreeMap<Address, u64>,
    initial: BTreeMap<Address, u64>,
    events: Vec<LedgerEvent>,
    round: u64,
    total: u128,
}

impl Ledger {
    pub fn new<I: IntoIterator<Item = (Address, u64)>>(endowments: I) -> Self {
        let balances: BTreeMap<Address, u64> = endowments.into_iter().collect();
        let total = balances.values().map(|&v| v as u128).sum();
        Self { initial: balances.clone(), balances, events: Vec::new(), round: 0, total }
    }

    pub fn balance(&self, addr: Address) -> u64 {
        self.balances.get(&addr).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn set_round(&mut self, round: u64) {
        self.round = round;
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    /// Current minus initial balance for every address that ever held coins.
    pub fn net_changes(&self) -> BTreeMap<Address, i128> {
        let mut out: BTreeMap<Address, i128> = BTreeMap::new();
        for (a, &v) in &self.balances {
            *out.entry(*a).or_default() += v as i128;
        }
        for (a, &v) in &self.initial {
            *out.entry(*a).or_default() -= v as i128;
        }
        out
    }

    pub fn transfer(&mut self, from: Address, to: Address, amount: u64, reason: impl Into<String>) -> Result<(), LedgerError> {
        if amount == 0 {
            return Ok(());
        }
        let have = self.balance(from);
        if have < amount {
            return Err(LedgerError::InsufficientFunds { addr: from, need: amount, have });
        }
        *self.balances.entry(from).or_default() -= amount;
        *self.balances.entry(to).or_default() += amount;
        self.events.push(LedgerEvent { round: self.round, from, to, amount, reason: reason.into() });
        self.check_conservation()
    }

    pub fn check_conservation(&self) -> Result<(), LedgerError> {
        let after: u128 = self.balances.values().map(|&v| v as u128).sum();
        if after == self.total {
            Ok(())
        } else {
            Err(LedgerError::ConservationViolated { before: self.total, after })
        }
    }

    /// Coins `addr` paid into any of the contracts.
    pub fn sent_to(&self, addr: Address, contracts: &[ContractId]) -> u64 {
        self.events
            .iter()
            .filter(|e| e.from == addr && matches!(e.to, Address::Contract(c) if contracts.contains(&c)))
            .map(|e| e.amount)
            .sum()
    }

    /// Coins `addr` received from any of the contracts.
    pub fn received_from(&self, addr: Address, contracts: &[ContractId]) -> u64 {
        self.events
            .iter()
            .filter(|e| e.to == addr && matches!(e.from, Address::Contract(c) if contracts.contains(&c)))
            .map(|e| e.amount)
            .sum()
    }
}

/// An escrow account that can be paid out and closed exactly once.
#[derive(Clone, Debug)]
pub struct Escrow {
    id: ContractId,
    settled: bool,
}

impl Escrow {
    pub fn new(id: ContractId) -> Self {
        Self { id, settled: false }
    }

    pub fn id(&self) -> ContractId {
        self.id
    }

    pub fn address(&self) -> Address {
        Address::Contract(self.id)
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    pub fn deposit(&self, ledger: &mut Ledger, from: Address, amount: u64, reason: &str) -> Result<(), LedgerError> {
        self.guard()?;
        ledger.transfer(from, self.address(), amount, reason)
    }

    pub fn pay(&self, ledger: &mut Ledger, to: Address, amount: u64, reason: &str) -> Result<(), LedgerError> {
        self.guard()?;
        ledger.transfer(self.address(), to, amount, reason)
    }

    /// Pays out whatever is left and marks the contract settled.
    pub fn close(&mut self, ledger: &mut Ledger, remainder_to: Option<Address>, reason: &str) -> Result<(), LedgerError> {
        self.guard()?;
        let left = ledger.balance(self.address());
        match remainder_to {
            Some(to) => ledger.transfer(self.address(), to, left, reason)?,
            None if left > 0 => return Err(LedgerError::Stranded { contract: self.id, left }),
            None => {}
        }
        self.settled = true;
        Ok(())
    }

    fn guard(&self) -> Result<(), LedgerError> {
        if self.settled {
            Err(LedgerError::AlreadySettled(self.id))
        } else {
            Ok(())
        }
    }
}

/// Floor share per recipient and the leftover dust.
pub fn split_evenly(total: u64, recipients: usize) -> (u64, u64) {
    if recipients == 0 {
        return (0, total);
    }
    let share = total / recipients as u64;
    (share, total - share * recipients as u64)
}

/// Every listed address paid at least `x` into the contracts.
pub fn q_init(ledger: &Ledger, contracts: &[ContractId], addrs: &[Address], x: u64) -> bool {
    addrs.iter().all(|&a| ledger.sent_to(a, contracts) >= x)
}

/// Paid `x` in and got exactly `x` back, leaving nothing behind.
pub fn q_del(ledger: &Ledger, contracts: &[ContractId], addr: Address, x: u64) -> bool {
    ledger.sent_to(addr, contracts) == x && ledger.received_from(addr, contracts) == x
}

/// Delivery with rewards: paid `x` in and received at least `x + reward`.
pub fn q_del_r(ledger: &Ledger, contracts: &[ContractId], addr: Address, x: u64, reward: i128) -> bool {
    ledger.sent_to(addr, contracts) == x && ledger.received_from(addr, contracts) as i128 >= x as i128 + reward
}

/// Unfair abort. `a`: the honest `addr` paid `x` and received `x + compensation`;
/// `b`: the auditor received its fee.
pub fn q_uf_a(
    ledger: &Ledger,
    contracts: &[ContractId],
    addr: Address,
    x: u64,
    compensation: u64,
    auditor: Address,
    fee: u64,
) -> (bool, bool) {
    let a = ledger.sent_to(addr, contracts) == x && ledger.received_from(addr, contracts) == x + compensation;
    let b = ledger.received_from(auditor, contracts) == fee;
    (a, b)
}

/// Unfair abort with rewards: as [`q_uf_a`] with the reward added to what `addr` receives.
#[allow(clippy::too_many_arguments)]
pub fn q_uf_a_r(
    ledger: &Ledger,
    contracts: &[ContractId],
    addr: Address,
    x: u64,
    compensation: u64,
    reward: u64,
    auditor: Address,
    fee: u64,
) -> (bool, bool) {
    q_uf_a(ledger, contracts, addr, x, compensation + reward, auditor, fee)
}

/// Fair abort: `addr` got its `x` back and the auditor received `auditor_amount`.
pub fn q_f_a(ledger: &Ledger, contracts: &[ContractId], addr: Address, x: u64, auditor: Address, auditor_amount: u64) -> bool {
    q_del(ledger, contracts, addr, x) && ledger.received_from(auditor, contracts) == auditor_amount
}
