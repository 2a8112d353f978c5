//! Built-in scenarios shipped as JSON data files, with their expected outcomes.

use crate::config::{ConfigError, ScenarioConfig};
use crate::jus::OutcomeKind;

#[derive(Clone, Copy, Debug)]
pub struct Expected {
    pub kind: OutcomeKind,
    /// Settlement case name for extraction runs that reach settlement.
    pub case: Option<&'static str>,
    /// Clients the audit should name.
    pub misbehaving: &'static [usize],
}

#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub json: &'static str,
    pub expected: Expected,
}

impl Scenario {
    pub fn config(&self) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::from_json(self.json)
    }
}

pub const LIBRARY: &[Scenario] = &[
    Scenario {
        name: "jus_honest",
        json: include_str!("../scenarios/jus_honest.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_tamper_nu",
        json: include_str!("../scenarios/jus_tamper_nu.json"),
        expected: Expected { kind: OutcomeKind::UnfairAbort, case: None, misbehaving: &[2] },
    },
    Scenario {
        name: "jus_wrong_zspa_key",
        json: include_str!("../scenarios/jus_wrong_zspa_key.json"),
        expected: Expected { kind: OutcomeKind::UnfairAbort, case: None, misbehaving: &[1] },
    },
    Scenario {
        name: "jus_tamper_and_wrong_key",
        json: include_str!("../scenarios/jus_tamper_and_wrong_key.json"),
        expected: Expected { kind: OutcomeKind::UnfairAbort, case: None, misbehaving: &[1, 3] },
    },
    Scenario {
        name: "jus_all_clients_tamper",
        json: include_str!("../scenarios/jus_all_clients_tamper.json"),
        expected: Expected { kind: OutcomeKind::UnfairAbort, case: None, misbehaving: &[1, 2, 3] },
    },
    Scenario {
        name: "jus_canceling_collusion",
        json: include_str!("../scenarios/jus_canceling_collusion.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_abort_coin_toss",
        json: include_str!("../scenarios/jus_abort_coin_toss.json"),
        expected: Expected { kind: OutcomeKind::HaltedPreDeposit, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_abort_zspa",
        json: include_str!("../scenarios/jus_abort_zspa.json"),
        expected: Expected { kind: OutcomeKind::HaltedPreDeposit, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_withhold_deposit",
        json: include_str!("../scenarios/jus_withhold_deposit.json"),
        expected: Expected { kind: OutcomeKind::HaltedPreDeposit, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_abort_vopr",
        json: include_str!("../scenarios/jus_abort_vopr.json"),
        expected: Expected { kind: OutcomeKind::FairAbort, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_withhold_submission",
        json: include_str!("../scenarios/jus_withhold_submission.json"),
        expected: Expected { kind: OutcomeKind::FairAbort, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_dealer_withholds_switching",
        json: include_str!("../scenarios/jus_dealer_withholds_switching.json"),
        expected: Expected { kind: OutcomeKind::FairAbort, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_forge_vopr_client",
        json: include_str!("../scenarios/jus_forge_vopr_client.json"),
        expected: Expected { kind: OutcomeKind::FairAbort, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_forge_vopr_dealer",
        json: include_str!("../scenarios/jus_forge_vopr_dealer.json"),
        expected: Expected { kind: OutcomeKind::FairAbort, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "jus_two_clients",
        json: include_str!("../scenarios/jus_two_clients.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "ane_honest",
        json: include_str!("../scenarios/ane_honest.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_honest_consistent"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_four_clients",
        json: include_str!("../scenarios/ane_four_clients.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_honest_consistent"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_no_deliver",
        json: include_str!("../scenarios/ane_no_deliver.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_failed_to_deliver"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_both_cheat",
        json: include_str!("../scenarios/ane_both_cheat.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_cheated_no_traitor"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_collusion",
        json: include_str!("../scenarios/ane_collusion.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_cheated_no_traitor"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_traitor_correct",
        json: include_str!("../scenarios/ane_traitor_correct.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_cheated_traitor_correct"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_traitor_incorrect",
        json: include_str!("../scenarios/ane_traitor_incorrect.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("both_cheated_traitor_incorrect"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_one_cheat",
        json: include_str!("../scenarios/ane_one_cheat.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("one_cheated_no_traitor"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_lone_traitor_correct",
        json: include_str!("../scenarios/ane_lone_traitor_correct.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("one_cheated_traitor_correct"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_lone_traitor_incorrect",
        json: include_str!("../scenarios/ane_lone_traitor_incorrect.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("one_cheated_traitor_incorrect"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_clean_dispute",
        json: include_str!("../scenarios/ane_clean_dispute.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("none_cheated_after_dispute"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_tampered_master_key",
        json: include_str!("../scenarios/ane_tampered_master_key.json"),
        expected: Expected { kind: OutcomeKind::Delivered, case: Some("arbitration_failed"), misbehaving: &[] },
    },
    Scenario {
        name: "ane_psi_unfair_abort",
        json: include_str!("../scenarios/ane_psi_unfair_abort.json"),
        expected: Expected { kind: OutcomeKind::UnfairAbort, case: Some("jus_unfair_abort"), misbehaving: &[2] },
    },
    Scenario {
        name: "ane_psi_fair_abort",
        json: include_str!("../scenarios/ane_psi_fair_abort.json"),
        expected: Expected { kind: OutcomeKind::FairAbort, case: None, misbehaving: &[] },
    },
    Scenario {
        name: "ane_buyer_abort",
        json: include_str!("../scenarios/ane_buyer_abort.json"),
        expected: Expected { kind: OutcomeKind::HaltedPreDeposit, case: None, misbehaving: &[] },
    },
];

pub fn get(name: &str) -> Option<&'static Scenario> {
    LIBRARY.iter().find(|s| s.name == name)
}
