//! JSONL run transcripts and per-party operation counters.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

use crate::adversary::Step;
use crate::crypto::{Digest, HASH_ALGORITHM};
use crate::field::OpCounter;
use crate::ledger::{Address, LedgerEvent};
use crate::ole::OleRecord;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header {
        protocol: String,
        config_digest: Digest,
        #[serde(with = "crate::dec")]
        seed: u64,
        hash: &'static str,
        #[serde(with = "crate::dec")]
        p: u64,
    },
    Message {
        #[serde(with = "crate::dec")]
        round: u64,
        step: Step,
        from: Address,
        to: Address,
        kind: &'static str,
        body: Value,
    },
    Ole(OleRecord),
    Event(LedgerEvent),
    Counters {
        parties: BTreeMap<String, OpCounter>,
        total: OpCounter,
        #[serde(with = "crate::dec")]
        ole_calls: u64,
    },
    Outcome(Value),
}

#[derive(Clone, Debug, Default)]
pub struct Transcript {
    records: Vec<Record>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn message<T: Serialize>(&mut self, round: u64, step: Step, from: Address, to: Address, kind: &'static str, body: &T) {
        let body = serde_json::to_value(body).expect("message body serializes");
        self.records.push(Record::Message { round, step, from, to, kind, body });
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn messages(&self) -> impl Iterator<Item = (&Address, &'static str, &Value)> {
        self.records.iter().filter_map(|r| match r {
            Record::Message { from, kind, body, .. } => Some((from, *kind, body)),
            _ => None,
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

pub fn header(protocol: &str, config_digest: Digest, seed: u64, p: u64) -> Record {
    Record::Header { protocol: protocol.to_string(), config_digest, seed, hash: HASH_ALGORITHM, p }
}

/// Operation counts keyed by party label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters(BTreeMap<String, OpCounter>);

impl Counters {
    pub fn party(&mut self, label: impl Into<String>) -> &mut OpCounter {
        self.0.entry(label.into()).or_default()
    }

    pub fn get(&self, label: &str) -> OpCounter {
        self.0.get(label).copied().unwrap_or_default()
    }

    pub fn total(&self) -> OpCounter {
        let mut t = OpCounter::new();
        for c in self.0.values() {
            t += *c;
        }
        t
    }

    pub fn by_party(&self) -> &BTreeMap<String, OpCounter> {
        &self.0
    }

    pub fn record(&self, ole_calls: u64) -> Record {
        Record::Counters { parties: self.0.clone(), total: self.total(), ole_calls }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_uses_decimal_strings() {
        let mut t = Transcript::new();
        t.push(header("jus", Digest([0; 32]), u64::MAX, 13));
        t.message(3, Step::SubmitNu, Address::Client(1), Address::Dealer, "nu", &vec!["1", "2"]);
        let mut c = Counters::default();
        c.party("A1").multiplications += 5;
        c.party("D").multiplications += 2;
        t.push(c.record(7));
        let text = t.to_jsonl();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0]["seed"], "18446744073709551615");
        assert_eq!(lines[0]["hash"], "sha256");
        assert_eq!(lines[1]["from"], "A1");
        assert_eq!(lines[1]["step"], "submit_nu");
        assert_eq!(lines[2]["total"]["multiplications"], "7");
        assert_eq!(lines[2]["ole_calls"], "7");
    }
}
