//! Scenario configuration: JSON in, validated parameters out.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{ExtractorBehaviour, Strategy};
use crate::binning::{BinningError, Encoding, TableParams};
use crate::crypto::{hash, Digest};
use crate::dec::Dec;
use crate::field::FieldParams;
use crate::ole::OleMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown party {0}")]
    UnknownParty(String),
    #[error("unknown step {0}")]
    UnknownStep(String),
    #[error("extractor profile ({first:?}, {second:?}) is not a valid combination")]
    InvalidProfile { first: ExtractorBehaviour, second: ExtractorBehaviour },
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Binning(#[from] BinningError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Jus,
    Ane,
}

fn default_exponent() -> Dec<u32> {
    Dec(40)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub bin_capacity: Dec<usize>,
    #[serde(default = "default_exponent")]
    pub overflow_exponent: Dec<u32>,
    /// Fixes the number of bins instead of sizing the table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Dec<usize>>,
    /// Sizes for this many elements rather than the largest configured set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_elements: Option<Dec<usize>>,
}

/// Either explicit elements or `common` shared elements plus `unique` private ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Explicit(Vec<Dec<u64>>),
    Generated { common: Dec<usize>, unique: Dec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartiesConfig {
    pub clients: Vec<SetSpec>,
    pub dealer: SetSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AneEconomics {
    pub ane_deposit: Dec<u64>,
    pub reward_per_element: Dec<u64>,
    pub extraction_fee: Dec<u64>,
    pub server_deposit: Dec<u64>,
    pub compute_cost: Dec<u64>,
    pub bribe: Dec<u64>,
    pub collusion_deposit: Dec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_set_size: Option<Dec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Economics {
    pub deposit: Dec<u64>,
    pub auditor_fee: Dec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endowment: Option<Dec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ane: Option<AneEconomics>,
}

pub const DEFAULT_ENDOWMENT: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub protocol: Protocol,
    #[serde(default = "FieldParams::mersenne61")]
    pub field: FieldParams,
    pub table: TableConfig,
    pub parties: PartiesConfig,
    pub economics: Economics,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub seed: Dec<u64>,
    #[serde(default)]
    pub ole_mode: OleMode,
    #[serde(default)]
    pub verbose: bool,
}

/// Concrete sets: one per A-client, then the dealer's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedSets {
    pub clients: Vec<BTreeSet<u64>>,
    pub dealer: BTreeSet<u64>,
}

impl ResolvedSets {
    pub fn all(&self) -> impl Iterator<Item = &BTreeSet<u64>> {
        self.clients.iter().chain(std::iter::once(&self.dealer))
    }

    /// Brute-force intersection of every party's set.
    pub fn intersection(&self) -> BTreeSet<u64> {
        let mut it = self.all();
        let first = it.next().cloned().unwrap_or_default();
        it.fold(first, |acc, s| acc.intersection(s).copied().collect())
    }

    pub fn largest(&self) -> usize {
        self.all().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn smallest(&self) -> usize {
        self.all().map(BTreeSet::len).min().unwrap_or(0)
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn digest(&self) -> Digest {
        hash(&[b"CONFIG", &serde_json::to_vec(self).expect("config serializes")])
    }

    pub fn clients(&self) -> usize {
        self.parties.clients.len()
    }

    pub fn endowment(&self) -> u64 {
        self.economics.endowment.map_or(DEFAULT_ENDOWMENT, |e| e.0)
    }

    /// Expands set specs. Generated elements never collide across parties,
    /// so the intersection is exactly the shortest common prefix.
    pub fn resolve_sets(&self, domain: u64) -> Result<ResolvedSets, ConfigError> {
        let specs: Vec<&SetSpec> = self.parties.clients.iter().chain(std::iter::once(&self.parties.dealer)).collect();
        let mut used: BTreeSet<u64> = BTreeSet::new();
        for spec in &specs {
            if let SetSpec::Explicit(v) = spec {
                for x in v {
                    if x.0 >= domain {
                        return Err(ConfigError::Invalid(format!("element {} outside the payload domain 0..{domain}", x.0)));
                    }
                    used.insert(x.0);
                }
            }
        }
        let generated: usize = specs
            .iter()
            .map(|s| match s {
                SetSpec::Generated { common, unique } => common.0 + unique.0,
                SetSpec::Explicit(_) => 0,
            })
            .sum();
        if (generated + used.len()) as u64 > domain / 2 {
            return Err(ConfigError::Invalid("generated sets too large for the payload domain".into()));
        }
        let fresh = |rng: &mut ChaCha20Rng, used: &mut BTreeSet<u64>| loop {
            let x = rng.gen_range(0..domain);
            if used.insert(x) {
                return x;
            }
        };
        let seed = self.seed.0.to_be_bytes();
        let mut pool_rng = ChaCha20Rng::from_seed(hash(&[b"SET-POOL", &seed]).0);
        let max_common = specs
            .iter()
            .map(|s| if let SetSpec::Generated { common, .. } = s { common.0 } else { 0 })
            .max()
            .unwrap_or(0);
        let pool: Vec<u64> = (0..max_common).map(|_| fresh(&mut pool_rng, &mut used)).collect();
        let mut sets = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let set = match spec {
                SetSpec::Explicit(v) => v.iter().map(|x| x.0).collect(),
                SetSpec::Generated { common, unique } => {
                    let mut rng = ChaCha20Rng::from_seed(hash(&[b"SET-OWN", &seed, &(i as u64).to_be_bytes()]).0);
                    let mut s: Vec<u64> = pool[..common.0].to_vec();
                    s.extend((0..unique.0).map(|_| fresh(&mut rng, &mut used)));
                    s.shuffle(&mut rng);
                    s.into_iter().collect()
                }
            };
            sets.push(set);
        }
        let dealer = sets.pop().expect("dealer spec");
        Ok(ResolvedSets { clients: sets, dealer })
    }

    pub fn table_params(&self, sets: &ResolvedSets) -> Result<TableParams, ConfigError> {
        let capacity = self.table.bin_capacity.0;
        if capacity == 0 {
            return Err(ConfigError::Invalid("bin capacity must be positive".into()));
        }
        let max_elements = self.table.max_elements.map_or(sets.largest(), |m| m.0).max(1);
        let exp = self.table.overflow_exponent.0;
        Ok(match self.table.bins {
            Some(Dec(0)) => return Err(ConfigError::Invalid("bins must be positive".into())),
            Some(Dec(bins)) => TableParams { bins, capacity, overflow_exponent: exp, max_elements },
            None => TableParams::sized(max_elements, capacity, exp)?,
        })
    }

    pub fn encoding(&self) -> Result<Encoding, ConfigError> {
        Ok(Encoding::for_field(self.field)?)
    }

    /// Structural checks that do not depend on the run.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = self.clients();
        if m < 2 {
            return Err(ConfigError::Invalid("at least two clients are required".into()));
        }
        if self.protocol == Protocol::Ane {
            if m < 3 {
                return Err(ConfigError::Invalid("the extraction protocol needs at least three clients".into()));
            }
            if self.economics.ane.is_none() {
                return Err(ConfigError::Invalid("missing economics.ane".into()));
            }
        }
        Ok(())
    }
}
