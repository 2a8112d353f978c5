//! Contract state machines on top of the ledger.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::field::OpCounter;
use crate::ledger::{split_evenly, Address, ContractId, Escrow, Ledger, LedgerError};
use crate::poly::Polynomial;
use crate::zspa::ZspaCommitment;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractError {
    #[error("{0} is not a participant")]
    NotParticipant(Address),
    #[error("{party} already submitted for bin {bin}")]
    DuplicateSubmission { party: Address, bin: usize },
    #[error("bin {0} does not exist")]
    NoSuchBin(usize),
    #[error("submissions missing from {0:?}")]
    Missing(Vec<Address>),
    #[error("flag already decided")]
    FlagDecided,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Clone, Debug, Default)]
pub struct JusBin {
    pub zspa: Option<ZspaCommitment>,
    pub approvals: BTreeSet<usize>,
    pub nu: BTreeMap<usize, Polynomial>,
    pub nu_dealer: Option<Polynomial>,
    pub zeta: Option<Polynomial>,
    pub phi: Option<Polynomial>,
}

/// What an unfair-abort settlement paid, for predicate checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JusPayout {
    pub misbehaving: BTreeSet<usize>,
    /// Extra paid to each honest A-client on top of its refund.
    #[serde(with = "crate::dec")]
    pub compensation: u64,
    /// Extra paid to the dealer on top of its refund.
    #[serde(with = "crate::dec")]
    pub dealer_extra: u64,
    /// Auditor fee plus rounding dust.
    #[serde(with = "crate::dec")]
    pub auditor: u64,
}

impl JusPayout {
    /// Extra a party receives beyond its own deposit.
    pub fn extra_for(&self, a: Address) -> u64 {
        match a {
            Address::Client(i) if !self.misbehaving.contains(&i) => self.compensation,
            Address::Dealer => self.dealer_extra,
            _ => 0,
        }
    }
}

/// Compensation for the honest parties when `misbehaving` of `clients` A-clients are caught.
pub fn unfair_payout(clients: usize, deposit: u64, fee: u64, misbehaving: &BTreeSet<usize>) -> JusPayout {
    let caught = misbehaving.len();
    let pool = (caught as u64 * deposit).saturating_sub(fee);
    let mut p = JusPayout { misbehaving: misbehaving.clone(), compensation: 0, dealer_extra: 0, auditor: 0 };
    if caught == 0 {
        return p;
    }
    p.auditor = fee.min(caught as u64 * deposit);
    if caught < clients {
        let (share, dust) = split_evenly(pool, clients - caught);
        p.compensation = share;
        p.auditor += dust;
    } else {
        p.dealer_extra = pool;
    }
    p
}

/// The PSI contract: deposits, per-bin submissions, the flag and settlement.
#[derive(Clone, Debug)]
pub struct ScJus {
    escrow: Escrow,
    clients: usize,
    deposit: u64,
    fee: u64,
    depositors: BTreeSet<Address>,
    bins: Vec<JusBin>,
    flag: Option<bool>,
}

impl ScJus {
    pub fn new(clients: usize, bins: usize, deposit: u64, fee: u64) -> Self {
        Self {
            escrow: Escrow::new(ContractId::Jus),
            clients,
            deposit,
            fee,
            depositors: BTreeSet::new(),
            bins: vec![JusBin::default(); bins],
            flag: None,
        }
    }

    pub fn address(&self) -> Address {
        self.escrow.address()
    }

    pub fn deposit_amount(&self) -> u64 {
        self.deposit
    }

    pub fn fee(&self) -> u64 {
        self.fee
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    /// The A-clients followed by the dealer.
    pub fn parties(&self) -> Vec<Address> {
        (1..=self.clients).map(Address::Client).chain(std::iter::once(Address::Dealer)).collect()
    }

    fn check_party(&self, a: Address) -> Result<(), ContractError> {
        if self.parties().contains(&a) {
            Ok(())
        } else {
            Err(ContractError::NotParticipant(a))
        }
    }

    fn bin_mut(&mut self, bin: usize) -> Result<&mut JusBin, ContractError> {
        self.bins.get_mut(bin).ok_or(ContractError::NoSuchBin(bin))
    }

    pub fn bin(&self, bin: usize) -> &JusBin {
        &self.bins[bin]
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn publish_zspa(&mut self, bin: usize, c: ZspaCommitment) -> Result<(), ContractError> {
        self.bin_mut(bin)?.zspa = Some(c);
        Ok(())
    }

    pub fn approve_zspa(&mut self, bin: usize, client: usize) -> Result<(), ContractError> {
        self.check_party(Address::Client(client))?;
        self.bin_mut(bin)?.approvals.insert(client);
        Ok(())
    }

    pub fn zspa_agreed(&self) -> bool {
        self.bins.iter().all(|b| b.zspa.is_some() && b.approvals.len() == self.clients)
    }

    pub fn deposit(&mut self, ledger: &mut Ledger, from: Address) -> Result<(), ContractError> {
        self.check_party(from)?;
        self.escrow.deposit(ledger, from, self.deposit, "deposit")?;
        self.depositors.insert(from);
        Ok(())
    }

    pub fn depositors(&self) -> &BTreeSet<Address> {
        &self.depositors
    }

    pub fn all_deposited(&self, ledger: &Ledger) -> bool {
        crate::ledger::q_init(ledger, &[ContractId::Jus], &self.parties(), self.deposit)
    }

    pub fn submit_nu(&mut self, bin: usize, client: usize, nu: Polynomial) -> Result<(), ContractError> {
        self.check_party(Address::Client(client))?;
        let b = self.bin_mut(bin)?;
        if b.nu.contains_key(&client) {
            return Err(ContractError::DuplicateSubmission { party: Address::Client(client), bin });
        }
        b.nu.insert(client, nu);
        Ok(())
    }

    pub fn submit_dealer(&mut self, bin: usize, nu: Polynomial, zeta: Polynomial) -> Result<(), ContractError> {
        let b = self.bin_mut(bin)?;
        if b.nu_dealer.is_some() {
            return Err(ContractError::DuplicateSubmission { party: Address::Dealer, bin });
        }
        b.nu_dealer = Some(nu);
        b.zeta = Some(zeta);
        Ok(())
    }

    /// Clients with a missing ν in some bin.
    pub fn missing_clients(&self) -> Vec<Address> {
        (1..=self.clients)
            .filter(|c| self.bins.iter().any(|b| !b.nu.contains_key(c)))
            .map(Address::Client)
            .collect()
    }

    /// Sums every bin's submissions and decides the flag.
    pub fn combine(&mut self, ctr: &mut OpCounter) -> Result<bool, ContractError> {
        if self.flag.is_some() {
            return Err(ContractError::FlagDecided);
        }
        let mut missing = self.missing_clients();
        if self.bins.iter().any(|b| b.nu_dealer.is_none()) {
            missing.push(Address::Dealer);
        }
        if !missing.is_empty() {
            return Err(ContractError::Missing(missing));
        }
        let mut flag = true;
        for b in &mut self.bins {
            let mut phi = b.nu_dealer.clone().expect("checked");
            for nu in b.nu.values() {
                phi = phi.add_counted(nu, ctr);
            }
            let zeta = b.zeta.as_ref().expect("set with the dealer's polynomial");
            flag &= phi.is_divisible_by_counted(zeta, ctr).unwrap_or(false);
            b.phi = Some(phi);
        }
        self.flag = Some(flag);
        Ok(flag)
    }

    pub fn flag(&self) -> Option<bool> {
        self.flag
    }

    /// `ι = χ + ν + μ` must be divisible by the bin's ζ for an honest client.
    pub fn identify(&self, bin: usize, client: usize, chi: &Polynomial, mu: &Polynomial, ctr: &mut OpCounter) -> bool {
        let b = &self.bins[bin];
        let (Some(nu), Some(zeta)) = (b.nu.get(&client), b.zeta.as_ref()) else {
            return false;
        };
        identify(zeta, chi, nu, mu, ctr)
    }

    pub fn is_settled(&self) -> bool {
        self.escrow.is_settled()
    }

    /// Returns every deposit made so far and closes the contract.
    pub fn refund_all(&mut self, ledger: &mut Ledger) -> Result<(), ContractError> {
        for a in self.depositors.clone() {
            self.escrow.pay(ledger, a, self.deposit, "refund")?;
        }
        self.escrow.close(ledger, None, "close")?;
        Ok(())
    }

    /// Compensates the honest parties out of the misbehaving parties' deposits.
    pub fn settle_unfair(&mut self, ledger: &mut Ledger, misbehaving: &BTreeSet<usize>, auditor: Address) -> Result<JusPayout, ContractError> {
        let payout = unfair_payout(self.clients, self.deposit, self.fee, misbehaving);
        if misbehaving.is_empty() {
            self.refund_all(ledger)?;
            return Ok(payout);
        }
        for a in self.parties() {
            if matches!(a, Address::Client(i) if misbehaving.contains(&i)) {
                continue;
            }
            self.escrow.pay(ledger, a, self.deposit, "refund")?;
            self.escrow.pay(ledger, a, payout.extra_for(a), "compensation")?;
        }
        self.escrow.pay(ledger, auditor, payout.auditor, "auditor fee")?;
        self.escrow.close(ledger, None, "close")?;
        Ok(payout)
    }
}

pub fn identify(zeta: &Polynomial, chi: &Polynomial, nu: &Polynomial, mu: &Polynomial, ctr: &mut OpCounter) -> bool {
    let iota = chi.add_counted(nu, ctr).add_counted(mu, ctr);
    iota.is_divisible_by_counted(zeta, ctr).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldParams;

    fn ledger() -> Ledger {
        let mut parties: Vec<(Address, u64)> = (1..=3).map(|i| (Address::Client(i), 100)).collect();
        parties.push((Address::Dealer, 100));
        Ledger::new(parties)
    }

    #[test]
    fn worked_payout_example() {
        let p = unfair_payout(3, 14, 4, &BTreeSet::from([2]));
        assert_eq!((p.compensation, p.auditor, p.dealer_extra), (5, 4, 0));
        let mut l = ledger();
        let mut sc = ScJus::new(3, 1, 14, 4);
        for a in sc.parties() {
            sc.deposit(&mut l, a).unwrap();
        }
        assert!(sc.all_deposited(&l));
        sc.settle_unfair(&mut l, &BTreeSet::from([2]), Address::Auditor).unwrap();
        assert_eq!(l.balance(Address::Client(1)), 100 - 14 + 19);
        assert_eq!(l.balance(Address::Client(3)), 100 - 14 + 19);
        assert_eq!(l.balance(Address::Dealer), 100);
        assert_eq!(l.balance(Address::Client(2)), 86);
        assert_eq!(l.balance(Address::Auditor), 4);
        assert_eq!(l.balance(sc.address()), 0);
        assert!(matches!(
            sc.settle_unfair(&mut l, &BTreeSet::from([2]), Address::Auditor),
            Err(ContractError::Ledger(LedgerError::AlreadySettled(_)))
        ));
    }

    #[test]
    fn dust_and_edge_cases() {
        let p = unfair_payout(4, 14, 4, &BTreeSet::from([1]));
        assert_eq!((p.compensation, p.auditor), (3, 5));
        let all = unfair_payout(2, 14, 4, &BTreeSet::from([1, 2]));
        assert_eq!((all.compensation, all.dealer_extra, all.auditor), (0, 24, 4));
        let none = unfair_payout(3, 14, 4, &BTreeSet::new());
        assert_eq!(none.auditor, 0);
    }

    #[test]
    fn combine_needs_every_submission() {
        let f = FieldParams::new(13).unwrap();
        let mut sc = ScJus::new(2, 1, 1, 0);
        let zeta = Polynomial::from_u64s(f, &[1, 1]);
        sc.submit_nu(0, 1, Polynomial::from_u64s(f, &[1, 1])).unwrap();
        assert!(matches!(sc.combine(&mut OpCounter::new()), Err(ContractError::Missing(_))));
        sc.submit_nu(0, 2, Polynomial::from_u64s(f, &[2, 2])).unwrap();
        assert!(sc.submit_nu(0, 2, Polynomial::zero(f)).is_err());
        sc.submit_dealer(0, Polynomial::from_u64s(f, &[3, 3]), zeta).unwrap();
        assert_eq!(sc.combine(&mut OpCounter::new()), Ok(true));
        assert_eq!(sc.combine(&mut OpCounter::new()), Err(ContractError::FlagDecided));
    }

    proptest::proptest! {
        #[test]
        fn unfair_payout_spends_exactly_the_forfeits(
            clients in 2usize..8,
            fee in 0u64..50,
            extra in 1u64..500,
            mask in 1u32..256,
        ) {
            let deposit = fee + extra;
            let caught: BTreeSet<usize> = (1..=clients).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            proptest::prop_assume!(!caught.is_empty());
            let p = unfair_payout(clients, deposit, fee, &caught);
            let honest = (clients - caught.len()) as u64;
            proptest::prop_assert_eq!(p.compensation * honest + p.dealer_extra + p.auditor, caught.len() as u64 * deposit);
            proptest::prop_assert!(p.auditor >= fee);
            proptest::prop_assert!(p.auditor - fee < honest.max(1));
        }
    }
}
