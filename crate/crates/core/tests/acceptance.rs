//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use govlint_core::corpus::{
    apply_filters, assemble_report, evaluate_corpus, evaluate_file, ingest_panel, CorpusInput,
    EvalConfig, EvaluatorScoreSet, FilterConfig,
};
use govlint_core::report::{structured, ReportConfig};
use govlint_core::resolver::{
    FetchError, Fetched, FsFetcher, MemoryFetcher, ResolutionStatus, ResolverConfig, TargetFetcher,
};
use govlint_core::{
    aggregate, detect, evaluate_document, Archetype, Band, GovernanceDocument, Locator,
    PrincipleId, PrincipleScore, RuleSet, Score, Total, Variant,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn calibration() -> Outcome {
    let start = Instant::now();
    let rules = RuleSet::default();
    let cases = common::calibration_cases();
    let mut hits = 0;
    let mut misses = Vec::new();
    for (p, expected, text) in &cases {
        let doc = GovernanceDocument::parse(text, Locator::from("example.md"));
        let got = detect(&doc, *p, &rules).map_err(|e| e.to_string())?.score;
        if got == *expected {
            hits += 1;
        } else {
            misses.push(format!("{} {} got {}", p.code(), expected, got));
        }
    }
    let elapsed = start.elapsed();
    check(hits == 15 && cases.len() == 15, || {
        format!("{hits}/15 exact, misses {misses:?}")
    })?;
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("15/15 exact in {elapsed:.0?}"))
}

fn bands_and_threshold() -> Outcome {
    for half in 0..=10u8 {
        let scores: Vec<PrincipleScore> = PrincipleId::ALL
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let h = half.saturating_sub(2 * i as u8).min(2);
                PrincipleScore::bare(p, Score::from_half_points(h).unwrap())
            })
            .collect();
        let eval = aggregate(scores, 2.5, Variant::Standalone).map_err(|e| e.to_string())?;
        let total = f64::from(half) / 2.0;
        let band = if total >= 4.0 {
            Band::StructurallyComplete
        } else if total >= 3.0 {
            Band::FunctionalWithGaps
        } else {
            Band::StructurallyIncomplete
        };
        check(eval.total.as_f64() == total, || {
            format!("total {} for {total}", eval.total)
        })?;
        check(eval.band == band, || {
            format!("band {:?} at {total}", eval.band)
        })?;
        check(eval.below_threshold == (total < 2.5), || {
            format!("flag wrong at {total}")
        })?;
    }
    Ok("11/11 totals".into())
}

/// Counts fetches so cycle handling can be bounded.
struct Counting<F> {
    inner: F,
    calls: AtomicUsize,
}

impl<F: TargetFetcher> TargetFetcher for Counting<F> {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.fetch(target, base)
    }

    fn identity(&self, locator: &Locator) -> Locator {
        self.inner.identity(locator)
    }
}

fn redirect_fixture(name: &str) -> (GovernanceDocument, PathBuf) {
    let dir = common::fixtures().join("redirect").join(name);
    let path = dir.join("AGENTS.md");
    let text = std::fs::read_to_string(&path).unwrap();
    (GovernanceDocument::parse(&text, Locator::Path(path)), dir)
}

fn redirects() -> Outcome {
    let rules = RuleSet::default();
    let fs = FsFetcher::default();

    let (pointer, dir) = redirect_fixture("pointer");
    let eval =
        evaluate_file(&pointer, &rules, &fs, &EvalConfig::default()).map_err(|e| e.to_string())?;
    check(eval.pointer, || "fixture is not a pointer".into())?;
    check(eval.standalone.scores() == [Score::Absent; 5], || {
        format!("standalone scores {:?}", eval.standalone.scores())
    })?;
    let resolved = eval.resolved.as_ref().ok_or("no resolved evaluation")?;
    let target_text = std::fs::read_to_string(dir.join("CLAUDE.md")).unwrap();
    let target = GovernanceDocument::parse(&target_text, Locator::from("CLAUDE.md"));
    let direct: Vec<Score> = evaluate_document(&target, &rules)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| s.score)
        .collect();
    check(
        resolved.variant == Variant::Resolved && resolved.scores().to_vec() == direct,
        || format!("resolved {:?} vs direct {direct:?}", resolved.scores()),
    )?;

    let (broken, _) = redirect_fixture("broken");
    let eval =
        evaluate_file(&broken, &rules, &fs, &EvalConfig::default()).map_err(|e| e.to_string())?;
    check(eval.resolution.status == ResolutionStatus::Broken, || {
        format!("broken fixture status {:?}", eval.resolution.status)
    })?;
    check(
        eval.standalone.archetype == Archetype::BrokenReference,
        || format!("broken fixture archetype {:?}", eval.standalone.archetype),
    )?;

    let remote = GovernanceDocument::parse(
        "See https://example.com/org/repo/AGENTS.md for agent instructions.",
        Locator::from("AGENTS.md"),
    );
    let eval = evaluate_file(
        &remote,
        &rules,
        &MemoryFetcher::new(),
        &EvalConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    check(
        eval.standalone.archetype == Archetype::BrokenReference
            && eval.resolution.failure_detail.as_deref() == Some("404"),
        || format!("url 404 gave {:?}", eval.resolution),
    )?;

    let (cycle, _) = redirect_fixture("cycle");
    for depth_cap in 1..=8 {
        let fetcher = Counting {
            inner: FsFetcher::default(),
            calls: AtomicUsize::new(0),
        };
        let config = EvalConfig {
            resolver: ResolverConfig {
                depth_cap,
                ..ResolverConfig::default()
            },
            ..EvalConfig::default()
        };
        let eval = evaluate_file(&cycle, &rules, &fetcher, &config).map_err(|e| e.to_string())?;
        let calls = fetcher.calls.load(Ordering::Relaxed);
        check(eval.resolution.status == ResolutionStatus::Cyclic, || {
            format!(
                "cycle status {:?} at cap {depth_cap}",
                eval.resolution.status
            )
        })?;
        check(calls <= depth_cap, || {
            format!("{calls} fetches with cap {depth_cap}")
        })?;
    }
    Ok("pointer 0.0 + resolved reported, missing target broken, cycle cyclic within cap".into())
}

fn scores_with_total(rng: &mut StdRng, below: bool) -> [Score; 5] {
    loop {
        let s: [Score; 5] = std::array::from_fn(|_| Score::ALL[rng.gen_range(0..3)]);
        if (Total::of(s).as_f64() < 2.5) == below {
            return s;
        }
    }
}

fn pair_statistic() -> Outcome {
    let mut rng = StdRng::seed_from_u64(38);
    let files: Vec<String> = (0..34).map(|i| format!("repo{i:02}/AGENTS.md")).collect();
    let mut below_flags = vec![true; 38];
    below_flags.extend(vec![false; 102 - 38]);
    below_flags.shuffle(&mut rng);

    let mut panels: Vec<EvaluatorScoreSet> = ["model-a", "model-b", "model-c"]
        .into_iter()
        .map(EvaluatorScoreSet::new)
        .collect();
    for (k, below) in below_flags.iter().enumerate() {
        let scores = scores_with_total(&mut rng, *below);
        panels[k / 34].scores.insert(files[k % 34].clone(), scores);
    }
    let brute = panels
        .iter()
        .flat_map(|p| p.scores.values())
        .filter(|s| s.iter().map(|x| x.as_f64()).sum::<f64>() < 2.5)
        .count();

    let entries = files
        .iter()
        .map(|f| common::scored_entry(f, [Score::Partial; 5], 2.5))
        .collect();
    let report = ingest_panel(assemble_report(entries, 2.5), &panels);
    let got = report
        .aggregates
        .fraction_below_threshold_pairs
        .ok_or("pair fraction missing")?;
    check(brute == 38, || format!("fixture has {brute} below, not 38"))?;
    check((got - 38.0 / 102.0).abs() < 1e-9, || {
        format!("reported {got}")
    })?;
    Ok(format!("{got:.6} = 38/102"))
}

fn aggregate_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let cases = 250;
    for case in 0..cases {
        let threshold = [2.5, 0.5, 3.0, 5.0][case % 4];
        let n = rng.gen_range(1..60);
        let files: Vec<[Score; 5]> = (0..n)
            .map(|_| std::array::from_fn(|_| Score::ALL[rng.gen_range(0..3)]))
            .collect();
        let entries = files
            .iter()
            .enumerate()
            .map(|(i, s)| common::scored_entry(&format!("f{i}.md"), *s, threshold))
            .collect();
        let agg = assemble_report(entries, threshold).aggregates;
        let want = common::oracle::expected(&files, threshold);
        let means: Vec<f64> = PrincipleId::ALL
            .iter()
            .map(|p| agg.principle_means[p])
            .collect();
        let ok = means == want.principle_means
            && agg.mean_total == want.mean_total
            && agg.median_total == want.median_total
            && agg.fraction_below_threshold_files == want.fraction_below
            && agg.archetype_counts == want.archetypes;
        check(ok, || format!("case {case} diverged: {agg:?} vs {want:?}"))?;
    }
    Ok(format!("{cases} random corpora"))
}

const MONO_LINES: &[&str] = &[
    "Never push to main; ask first.",
    "Critical if users lose data.",
    "Minor if only naming is affected.",
    "Make sure the linter is clean.",
    "Before returning, record the commands you ran.",
    "## Severity rubric",
    "- blocker: security hole",
    "- minor: typo",
    "```",
    "make test",
    "Treat vendored code differently from first-party code.",
    "Your task is complete when the migration runs twice without errors.",
    "Keep the tone of comments neutral.",
    "",
];

fn random_text(rng: &mut StdRng, max_lines: usize) -> String {
    let n = rng.gen_range(0..max_lines);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.8) {
                MONO_LINES.choose(rng).unwrap().to_string()
            } else {
                let cases = common::calibration_cases();
                cases.choose(rng).unwrap().2.clone()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn monotonicity() -> Outcome {
    let rules = RuleSet::default();
    let mut rng = StdRng::seed_from_u64(100);
    for case in 0..100 {
        let base = random_text(&mut rng, 20);
        let suffix = random_text(&mut rng, 10);
        let before = evaluate_document(
            &GovernanceDocument::parse(&base, Locator::from("a.md")),
            &rules,
        )
        .map_err(|e| e.to_string())?;
        let joined = format!("{base}\n{suffix}");
        let after = evaluate_document(
            &GovernanceDocument::parse(&joined, Locator::from("a.md")),
            &rules,
        )
        .map_err(|e| e.to_string())?;
        for (b, a) in before.iter().zip(&after) {
            check(a.score >= b.score, || {
                format!(
                    "case {case}: {} fell from {} to {}",
                    b.principle.code(),
                    b.score,
                    a.score
                )
            })?;
        }
    }
    Ok("100 appended suffixes, no score fell".into())
}

fn fixture_corpus(reverse: bool) -> Vec<CorpusInput> {
    let root = common::fixtures().join("corpus");
    let mut names: Vec<_> = std::fs::read_dir(&root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    if reverse {
        names.reverse();
    }
    names
        .into_iter()
        .map(|n| {
            let text = std::fs::read_to_string(root.join(&n).join("AGENTS.md")).unwrap();
            CorpusInput::new(format!("{n}/AGENTS.md"), text)
        })
        .collect()
}

fn report_config() -> ReportConfig {
    ReportConfig {
        threshold: 2.5,
        pointer_line_limit: 10,
        depth_cap: 8,
        resolve_redirects: true,
        rules: "default".into(),
        reference_date: None,
    }
}

fn determinism() -> Outcome {
    let rules = RuleSet::default();
    let run = |reverse: bool| -> Result<String, String> {
        let entries = apply_filters(fixture_corpus(reverse), &FilterConfig::default());
        let report = evaluate_corpus(
            &entries,
            &rules,
            &FsFetcher::default(),
            &EvalConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        Ok(structured(&report, &report_config()))
    };
    let first = run(false)?;
    let second = run(true)?;
    check(first.as_bytes() == second.as_bytes(), || {
        "structured output differs".into()
    })?;
    Ok(format!("{} bytes identical", first.len()))
}

fn performance() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let words: Vec<String> = (0..2000).map(|i| format!("w{i}")).collect();
    let mut fetcher = MemoryFetcher::new();
    let mut files = Vec::new();
    for i in 0..100 {
        let path = format!("repo{i:03}/AGENTS.md");
        if i % 10 == 0 {
            files.push(CorpusInput::new(
                path,
                "# Agents\nSee CLAUDE.md for instructions.\n",
            ));
            fetcher = fetcher.with_file(
                format!("repo{i:03}/CLAUDE.md"),
                common::calibration_cases()[0].2.repeat(20),
            );
            continue;
        }
        let mut text = String::new();
        while text.len() < 49 * 1024 {
            if rng.gen_bool(0.2) {
                text.push_str(MONO_LINES.choose(&mut rng).unwrap());
            } else {
                let n = rng.gen_range(5..15);
                let line: Vec<&str> = (0..n)
                    .map(|_| words.choose(&mut rng).unwrap().as_str())
                    .collect();
                text.push_str(&line.join(" "));
            }
            text.push('\n');
        }
        check(text.len() <= 50 * 1024, || "fixture too large".into())?;
        files.push(CorpusInput::new(path, text));
    }

    let start = Instant::now();
    let rules = RuleSet::default();
    let entries = apply_filters(files, &FilterConfig::default());
    let report = evaluate_corpus(&entries, &rules, &fetcher, &EvalConfig::default())
        .map_err(|e| e.to_string())?;
    let out = structured(&report, &report_config());
    let elapsed = start.elapsed();
    check(report.aggregates.evaluated_files == 100, || {
        format!("{} evaluated", report.aggregates.evaluated_files)
    })?;
    check(!out.is_empty() && elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("100 files in {elapsed:.2?}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("calibration suite", calibration),
        ("band and threshold fidelity", bands_and_threshold),
        ("redirect dual-scoring", redirects),
        ("pair statistic 38/102", pair_statistic),
        ("aggregate oracle equivalence", aggregate_oracle),
        ("append monotonicity", monotonicity),
        ("structured output determinism", determinism),
        ("corpus performance", performance),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let line = match outcome {
            Ok(detail) => format!("criterion {}: PASS {name} ({detail})\n", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("criterion {}: FAIL {name} ({why})\n", i + 1)
            }
        };
        // the raw handle bypasses libtest capture so results show in every run
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(line.as_bytes());
        let _ = out.flush();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
