mod common;

use govlint_core::{detect, GovernanceDocument, Locator, PrincipleId, RuleSet, Score};

#[test]
fn every_example_scores_its_level() {
    let rules = RuleSet::default();
    let mut misses = Vec::new();
    for (p, expected, text) in common::calibration_cases() {
        let doc = GovernanceDocument::parse(&text, Locator::from("example.md"));
        let got = detect(&doc, p, &rules).unwrap();
        if got.score != expected {
            misses.push(format!(
                "{} expected {expected}, got {} ({})",
                p.code(),
                got.score,
                got.rationale
            ));
        }
    }
    assert!(misses.is_empty(), "{misses:#?}");
}

#[test]
fn present_examples_carry_evidence_inside_the_text() {
    let rules = RuleSet::default();
    for (p, expected, text) in common::calibration_cases() {
        let doc = GovernanceDocument::parse(&text, Locator::from("example.md"));
        let got = detect(&doc, p, &rules).unwrap();
        if expected == Score::Absent {
            assert!(
                got.evidence.is_empty(),
                "{} absent case has evidence",
                p.code()
            );
            continue;
        }
        assert!(!got.evidence.is_empty());
        for ev in &got.evidence {
            assert_eq!(&text[ev.span.clone()], ev.quote);
        }
    }
}

#[test]
fn concatenated_present_examples_score_full_marks() {
    let text: String = common::calibration_cases()
        .into_iter()
        .filter(|(_, s, _)| *s == Score::Present)
        .map(|(_, _, t)| t + "\n")
        .collect();
    let doc = GovernanceDocument::parse(&text, Locator::from("all.md"));
    let rules = RuleSet::default();
    for p in PrincipleId::ALL {
        assert_eq!(
            detect(&doc, p, &rules).unwrap().score,
            Score::Present,
            "{}",
            p.code()
        );
    }
}
