//! One entry point for both protocols.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::ane::{self, AneReport};
use crate::config::{Protocol, ScenarioConfig};
use crate::error::RunError;
use crate::jus::{self, JusReport, OutcomeKind, PredicateReport};
use crate::ledger::{Address, Ledger};
use crate::transcript::{Counters, Transcript};

pub enum Report {
    Jus(JusReport),
    Ane(AneReport),
}

pub fn run(config: &ScenarioConfig) -> Result<Report, RunError> {
    Ok(match config.protocol {
        Protocol::Jus => Report::Jus(jus::run(config)?),
        Protocol::Ane => Report::Ane(ane::run(config)?),
    })
}

impl Report {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            Report::Jus(r) => r.outcome.kind,
            Report::Ane(r) => r.outcome.kind,
        }
    }

    pub fn case_name(&self) -> Option<&'static str> {
        match self {
            Report::Jus(_) => None,
            Report::Ane(r) => r.outcome.case.map(|c| c.name()),
        }
    }

    /// Clients the audit named, if the PSI run ended in an unfair abort.
    pub fn misbehaving(&self) -> BTreeSet<usize> {
        match self {
            Report::Jus(r) => r.outcome.misbehaving(),
            Report::Ane(r) => r.outcome.psi.as_ref().map(|p| p.misbehaving()).unwrap_or_default(),
        }
    }

    /// The delivered intersection: agreed by every party, or what the buyer paid for.
    pub fn intersection(&self) -> Option<BTreeSet<u64>> {
        match self {
            Report::Jus(r) => {
                let mut views = r.outcome.intersections.values();
                let first = views.next()?;
                views.all(|v| v == first).then(|| first.clone())
            }
            Report::Ane(r) => r.outcome.result.clone(),
        }
    }

    pub fn oracle(&self) -> BTreeSet<u64> {
        match self {
            Report::Jus(r) => r.oracle(),
            Report::Ane(r) => r.oracle(),
        }
    }

    pub fn ledger(&self) -> &Ledger {
        match self {
            Report::Jus(r) => &r.ledger,
            Report::Ane(r) => &r.ledger,
        }
    }

    pub fn net_changes(&self) -> BTreeMap<Address, i128> {
        self.ledger().net_changes()
    }

    pub fn predicates(&self) -> &PredicateReport {
        match self {
            Report::Jus(r) => &r.predicates,
            Report::Ane(r) => &r.predicates,
        }
    }

    pub fn transcript(&self) -> &Transcript {
        match self {
            Report::Jus(r) => &r.transcript,
            Report::Ane(r) => &r.transcript,
        }
    }

    pub fn counters(&self) -> &Counters {
        match self {
            Report::Jus(r) => &r.counters,
            Report::Ane(r) => &r.counters,
        }
    }

    pub fn ole_calls(&self) -> u64 {
        match self {
            Report::Jus(r) => r.ole_calls,
            Report::Ane(r) => r.ole_calls,
        }
    }

    pub fn outcome_json(&self) -> Value {
        match self {
            Report::Jus(r) => serde_json::to_value(&r.outcome),
            Report::Ane(r) => serde_json::to_value(&r.outcome),
        }
        .expect("outcome serializes")
    }

    /// Outcome, payouts and counters in one JSON object.
    pub fn summary(&self) -> Value {
        let nets: BTreeMap<String, String> = self.net_changes().iter().map(|(a, v)| (a.to_string(), v.to_string())).collect();
        json!({
            "outcome": self.kind(),
            "case": self.case_name(),
            "intersection": self.intersection().map(|s| s.iter().map(u64::to_string).collect::<Vec<_>>()),
            "oracle_match": self.intersection().map(|s| s == self.oracle()),
            "misbehaving": self.misbehaving(),
            "net_changes": nets,
            "field_ops": self.counters().total(),
            "ole_calls": self.ole_calls().to_string(),
        })
    }
}
