#![allow(dead_code)]

use std::path::{Path, PathBuf};

use govlint_core::corpus::{EntryReport, Inclusion};
use govlint_core::detectors::PrincipleScore;
use govlint_core::resolver::RedirectResolution;
use govlint_core::{aggregate, classify_archetype, PrincipleId, Score, Variant};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The 15 calibration texts as (principle, expected score, text).
pub fn calibration_cases() -> Vec<(PrincipleId, Score, String)> {
    let dir = fixtures().join("calibration");
    let mut out = Vec::new();
    for (i, p) in PrincipleId::ALL.into_iter().enumerate() {
        for (label, score) in [
            ("present", Score::Present),
            ("partial", Score::Partial),
            ("absent", Score::Absent),
        ] {
            let path = dir.join(format!("p{}_{label}.md", i + 1));
            let text = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            out.push((p, score, text));
        }
    }
    out
}

/// An evaluated, included entry with externally supplied scores.
pub fn scored_entry(path: &str, scores: [Score; 5], threshold: f64) -> EntryReport {
    let principle_scores = PrincipleId::ALL
        .into_iter()
        .zip(scores)
        .map(|(p, s)| PrincipleScore::bare(p, s))
        .collect();
    let mut eval = aggregate(principle_scores, threshold, Variant::Standalone).unwrap();
    eval.archetype = classify_archetype(&eval, &RedirectResolution::none(false));
    EntryReport {
        path: path.into(),
        inclusion: Inclusion::Included,
        duplicate_of: None,
        origin: None,
        substantive_lines: 20,
        pointer: false,
        hybrid: false,
        redirect: None,
        standalone: Some(eval),
        resolved: None,
        error: None,
    }
}

/// Independent recomputation of corpus aggregates, in half-point integers.
pub mod oracle {
    use std::collections::BTreeMap;

    use govlint_core::{Archetype, Score};

    #[derive(Debug, PartialEq)]
    pub struct Expected {
        pub principle_means: [f64; 5],
        pub mean_total: f64,
        pub median_total: f64,
        pub fraction_below: f64,
        pub archetypes: BTreeMap<Archetype, usize>,
    }

    fn half(s: Score) -> u32 {
        match s {
            Score::Absent => 0,
            Score::Partial => 1,
            Score::Present => 2,
        }
    }

    /// Archetype of a plain (non-redirect) file, straight from the table.
    pub fn archetype(s: [Score; 5]) -> Archetype {
        let v: Vec<u32> = s.iter().map(|x| half(*x)).collect();
        let (p1, p2, p3, p4, p5) = (v[0], v[1], v[2], v[3], v[4]);
        if v.iter().all(|x| *x == 2) {
            Archetype::CompleteSpecification
        } else if p3 >= 1 && p5 >= 1 && p2 >= 1 && p4 == 0 {
            Archetype::ConstrainedExecutor
        } else if p3 >= 1 && p5 >= 1 && p1 <= 1 && p2 == 0 && p4 <= 1 {
            Archetype::OperationalGuide
        } else {
            Archetype::Unclassified
        }
    }

    pub fn expected(files: &[[Score; 5]], threshold: f64) -> Expected {
        let n = files.len();
        let totals: Vec<u32> = files
            .iter()
            .map(|f| f.iter().map(|s| half(*s)).sum())
            .collect();
        let div = |num: u32, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let mut principle_means = [0.0; 5];
        for (i, m) in principle_means.iter_mut().enumerate() {
            *m = div(files.iter().map(|f| half(f[i])).sum(), 2 * n);
        }
        let mut sorted = totals.clone();
        sorted.sort_unstable();
        let median_total = match n {
            0 => 0.0,
            _ if n % 2 == 1 => sorted[n / 2] as f64 / 2.0,
            _ => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 4.0,
        };
        let below = totals
            .iter()
            .filter(|t| (**t as f64) < threshold * 2.0)
            .count();
        let mut archetypes = BTreeMap::new();
        for f in files {
            *archetypes.entry(archetype(*f)).or_insert(0) += 1;
        }
        Expected {
            principle_means,
            mean_total: div(totals.iter().sum(), 2 * n),
            median_total,
            fraction_below: if n == 0 { 0.0 } else { below as f64 / n as f64 },
            archetypes,
        }
    }
}
