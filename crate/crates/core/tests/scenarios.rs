use fairpsi::jus::OutcomeKind;
use fairpsi::report;
use fairpsi::scenarios::LIBRARY;

#[test]
fn library_scenarios_reach_their_expected_outcomes() {
    for s in LIBRARY {
        let r = report::run(&s.config().unwrap()).unwrap();
        assert_eq!(r.kind(), s.expected.kind, "{}", s.name);
        assert_eq!(r.case_name(), s.expected.case, "{}", s.name);
        assert_eq!(r.misbehaving().into_iter().collect::<Vec<_>>(), s.expected.misbehaving, "{}", s.name);
        r.ledger().check_conservation().unwrap();
        if s.expected.kind == OutcomeKind::Delivered {
            if let Some(found) = r.intersection() {
                assert_eq!(found, r.oracle(), "{}", s.name);
            }
        }
    }
}
