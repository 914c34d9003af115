//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them alongside the
//! harness output).

mod common;

use std::io::Cursor;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dust_core::calibration::{
    calibration_report, reliability_bins, report_from_samples, CalibrationSample,
};
use dust_core::filter::{
    default_tau_grid, filter_corpus, percentage_sweep, predictive_uncertainty, threshold_sweep,
};
use dust_core::io::{read_bundles, write_bundles, write_calibration, write_sweep, ParseMode};
use dust_core::sim::simulate_corpus;
use dust_core::{EditScore, HypothesisBundle, TokenUnit, Uncertainty};

use common::{calibration_oracle, mixed_severity_spec, recursive_edit_distance, TRIAL_SEEDS};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn worked_bundle() -> HypothesisBundle {
    HypothesisBundle {
        id: "u0".into(),
        ref_hyp: "signs of ankylosin spondylitis detected".into(),
        samples: vec![
            "sgns o ankylosin spondylitis detectd".into(),
            "sgns of avkclozin sondilietis detected".into(),
        ],
        truth: Some("signs of ankylosing spondylitis detected".into()),
    }
}

#[test]
fn criterion_1_worked_example_exact() {
    let bundle = worked_bundle();
    let word = predictive_uncertainty(&bundle, TokenUnit::Word, &Default::default());
    let chars = predictive_uncertainty(&bundle, TokenUnit::Char, &Default::default());

    let exact = word.per_sample_eds
        == [EditScore {
            raw_edits: 3,
            ref_len: 5,
        }; 2]
        && chars.per_sample_eds
            == [
                EditScore {
                    raw_edits: 3,
                    ref_len: 35,
                },
                EditScore {
                    raw_edits: 7,
                    ref_len: 35,
                },
            ]
        && word.pred_uncert == Uncertainty::Finite(0.6)
        && chars.pred_uncert == Uncertainty::Finite(0.2);

    // Printed-value match at the source's rounding: 3/35 prints as 0.085
    // (truncated at three decimals) and 7/35 as 0.2.
    let near = chars.per_sample_eds[0].normalized().as_f64();
    let printed = (near * 1000.0).floor() == 85.0 && 7.0 / 35.0 == 0.2;

    report(
        "1 (worked example, exact rationals)",
        exact && printed,
        &format!(
            "word eds 3/5 both samples, char eds 3/35 and 7/35, pred_uncert {:?}/{:?}",
            word.pred_uncert, chars.pred_uncert
        ),
    );
}

#[test]
fn criterion_2_edit_distance_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xED17);
    let alphabet = ["a", "b", "c", "d"];
    for _ in 0..1000 {
        let draw = |rng: &mut StdRng| -> Vec<String> {
            let len = rng.gen_range(0..=8);
            (0..len)
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string())
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let left = dust_core::distance::edit_distance(
            &dust_core::TokenSequence::new(a.clone(), TokenUnit::Word).unwrap(),
            &dust_core::TokenSequence::new(b.clone(), TokenUnit::Word).unwrap(),
        )
        .unwrap();
        let right = recursive_edit_distance(&a, &b);
        assert_eq!(left, right, "pair {a:?} vs {b:?}");
    }
    let elapsed = start.elapsed();
    report(
        "2 (edit-distance oracle, 1000 pairs)",
        elapsed.as_secs_f64() < 5.0,
        &format!("exact match, {:.2}s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_3_calibration_oracle_equivalence() {
    let mut rng = StdRng::seed_from_u64(0xCA11B);
    let mut worst: f64 = 0.0;
    for set in 0..200 {
        let m = [1usize, 2, 10, 15][set % 4];
        let n = rng.gen_range(1..=50);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        // Deliberate boundary values now and then.
        if set % 7 == 0 {
            pairs.push((1.0, rng.gen()));
            pairs.push((0.0, rng.gen()));
        }
        let samples: Vec<CalibrationSample> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(confidence, accuracy))| CalibrationSample {
                id: format!("s{i}"),
                confidence,
                accuracy,
            })
            .collect();
        let n = samples.len();
        let bins = reliability_bins(&samples, m).unwrap();
        let oracle = calibration_oracle(&pairs, m);
        let ece = dust_core::calibration::ece(&bins, n).unwrap();
        let mce = dust_core::calibration::mce(&bins);
        let rce = dust_core::calibration::rce(&bins, n).unwrap();
        worst = worst
            .max((ece - oracle.ece).abs())
            .max((mce - oracle.mce).abs())
            .max((rce - oracle.rce).abs());
    }
    report(
        "3 (calibration oracle, 200 sets)",
        worst < 1e-12,
        &format!("worst deviation {worst:.3e}"),
    );
}

fn random_corpus(rng: &mut StdRng, n: usize) -> Vec<HypothesisBundle> {
    let vocab = ["one", "two", "three", "four", "five", "six"];
    let text = |rng: &mut StdRng, max: usize| -> String {
        let len = rng.gen_range(0..=max);
        (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    (0..n)
        .map(|i| {
            let t = rng.gen_range(1..=4);
            HypothesisBundle {
                id: format!("u{i:04}"),
                ref_hyp: text(rng, 6),
                samples: (0..t).map(|_| text(rng, 7)).collect(),
                truth: rng.gen_bool(0.8).then(|| text(rng, 6)),
            }
        })
        .collect()
}

#[test]
fn criterion_4_exclusion_rule_and_monotonicity() {
    let mut rng = StdRng::seed_from_u64(0x4F1);
    for _ in 0..40 {
        let corpus = random_corpus(&mut rng, 60);
        let tau_a: f64 = rng.gen_range(0.0..1.2);
        let tau_b: f64 = rng.gen_range(0.0..1.2);
        let (lo, hi) = if tau_a <= tau_b {
            (tau_a, tau_b)
        } else {
            (tau_b, tau_a)
        };
        let unit = if rng.gen_bool(0.5) {
            TokenUnit::Word
        } else {
            TokenUnit::Char
        };

        let at_lo = filter_corpus(&corpus, lo, unit, &Default::default()).unwrap();
        let at_hi = filter_corpus(&corpus, hi, unit, &Default::default()).unwrap();

        // Exact set inclusion.
        let hi_set: std::collections::HashSet<&String> = at_hi.accepted.iter().collect();
        assert!(at_lo.accepted.iter().all(|id| hi_set.contains(id)));

        // Acceptance iff pred_uncert <= tau.
        for (record, decision) in at_lo.records.iter().zip(&at_lo.decisions) {
            let expected = match record.pred_uncert {
                Uncertainty::Finite(u) => u <= lo,
                Uncertainty::MaxUncertain => false,
            };
            assert_eq!(decision.accepted, expected);
        }

        // Deleting truths changes nothing.
        let blind: Vec<HypothesisBundle> = corpus
            .iter()
            .cloned()
            .map(|mut b| {
                b.truth = None;
                b
            })
            .collect();
        let blinded = filter_corpus(&blind, lo, unit, &Default::default()).unwrap();
        assert_eq!(blinded.decisions, at_lo.decisions);
        assert_eq!(blinded.accepted, at_lo.accepted);
    }
    report(
        "4 (exclusion rule + monotonicity)",
        true,
        "40 random corpora",
    );
}

#[test]
fn criterion_5_failure_mode_reproduction() {
    let start = Instant::now();
    let mut passes = 0;
    let mut details = Vec::new();
    for &seed in &TRIAL_SEEDS {
        let corpus = simulate_corpus(&mixed_severity_spec(10_000, 3, seed)).unwrap();
        let points = threshold_sweep(
            &corpus,
            &default_tau_grid(),
            TokenUnit::Word,
            &Default::default(),
        )
        .unwrap();
        let lowest = points[0]
            .wer
            .expect("severe group accepted at tau 0")
            .rate();
        let at_half = points
            .iter()
            .find(|p| p.accepted_fraction >= 0.5)
            .expect("grid reaches half the corpus");
        let half = at_half.wer.unwrap().rate();
        if lowest >= 2.0 * half {
            passes += 1;
        }
        details.push(format!("seed {seed}: {lowest:.3} vs {half:.3}"));
    }
    let elapsed = start.elapsed();
    report(
        "5 (failure-mode reproduction)",
        passes >= 4 && elapsed.as_secs_f64() < 60.0,
        &format!(
            "{passes}/5 seeds with lowest-tau WER >= 2x half-corpus WER in {:.1}s; {}",
            elapsed.as_secs_f64(),
            details.join(", ")
        ),
    );
}

#[test]
fn criterion_6a_more_samples_reduce_lowest_tau_wer() {
    let mut passes = 0;
    let mut details = Vec::new();
    for &seed in &TRIAL_SEEDS {
        let wer_at_lowest = |t: usize| -> f64 {
            let corpus = simulate_corpus(&mixed_severity_spec(10_000, t, seed)).unwrap();
            let points = threshold_sweep(
                &corpus,
                &default_tau_grid(),
                TokenUnit::Word,
                &Default::default(),
            )
            .unwrap();
            points[0].wer.expect("nonempty lowest-tau set").rate()
        };
        let t3 = wer_at_lowest(3);
        let t10 = wer_at_lowest(10);
        if t10 < t3 {
            passes += 1;
        }
        details.push(format!("seed {seed}: T=3 {t3:.4}, T=10 {t10:.4}"));
    }
    report(
        "6a (T=10 reduces lowest-tau WER)",
        passes >= 4,
        &format!("{passes}/5 seeds; {}", details.join(", ")),
    );
}

#[test]
fn criterion_6b_cdust_prefix_cer_at_most_dust() {
    let mut passes = 0;
    let mut details = Vec::new();
    for &seed in &TRIAL_SEEDS {
        let corpus = simulate_corpus(&mixed_severity_spec(10_000, 3, seed)).unwrap();
        let prefix_cer = |unit: TokenUnit| -> f64 {
            percentage_sweep(&corpus, &[0.05], unit, &Default::default()).unwrap()[0]
                .cer
                .unwrap()
                .rate()
        };
        let dust = prefix_cer(TokenUnit::Word);
        let cdust = prefix_cer(TokenUnit::Char);
        if cdust <= dust {
            passes += 1;
        }
        details.push(format!("seed {seed}: dust {dust:.4}, cdust {cdust:.4}"));
    }
    report(
        "6b (C-DUST 5% prefix CER <= DUST)",
        passes >= 4,
        &format!("{passes}/5 seeds; {}", details.join(", ")),
    );
}

#[test]
fn criterion_6c_weaker_mismatch_improves_calibration() {
    let mut passes = 0;
    let mut details = Vec::new();
    for &seed in &TRIAL_SEEDS {
        let severe = simulate_corpus(&mixed_severity_spec(10_000, 3, seed)).unwrap();
        let mut milder_spec = mixed_severity_spec(10_000, 3, seed);
        milder_spec.mixture.as_mut().unwrap().base_corruption_rate = 0.2;
        let milder = simulate_corpus(&milder_spec).unwrap();

        let report_for = |corpus: &[HypothesisBundle]| {
            calibration_report(corpus, 15, TokenUnit::Word, &Default::default()).unwrap()
        };
        let a = report_for(&severe);
        let b = report_for(&milder);
        if b.ece < a.ece
            && b.mean_confidence > a.mean_confidence
            && b.mean_accuracy > a.mean_accuracy
        {
            passes += 1;
        }
        details.push(format!(
            "seed {seed}: ece {:.4}->{:.4}, cnf {:.4}->{:.4}, acc {:.4}->{:.4}",
            a.ece, b.ece, a.mean_confidence, b.mean_confidence, a.mean_accuracy, b.mean_accuracy
        ));
    }
    report(
        "6c (lower severe corruption improves ECE, CNF, ACC)",
        passes >= 4,
        &format!("{passes}/5 seeds; {}", details.join("; ")),
    );
}

#[test]
fn criterion_7_perfect_calibration_zero() {
    let samples: Vec<CalibrationSample> = (0..500)
        .map(|i| {
            let v = i as f64 / 499.0;
            CalibrationSample {
                id: format!("s{i}"),
                confidence: v,
                accuracy: v,
            }
        })
        .collect();
    let report_ = report_from_samples(&samples, 15).unwrap();
    let pass = report_.ece < 1e-12 && report_.mce < 1e-12 && report_.rce < 1e-12;
    report(
        "7 (perfect calibration yields zero errors)",
        pass,
        &format!(
            "ece {:.3e}, mce {:.3e}, rce {:.3e}",
            report_.ece, report_.mce, report_.rce
        ),
    );
}

#[test]
fn criterion_8_throughput_100k() {
    let spec = mixed_severity_spec(100_000, 3, 0xBEEF);
    let corpus = simulate_corpus(&spec).unwrap();
    let start = Instant::now();
    let outcome = filter_corpus(&corpus, 0.4, TokenUnit::Word, &Default::default()).unwrap();
    let points = threshold_sweep(
        &corpus,
        &default_tau_grid(),
        TokenUnit::Word,
        &Default::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    assert!(outcome.accepted.len() + outcome.rejected.len() == 100_000);
    assert!(points.last().unwrap().accepted_count > 0);
    report(
        "8 (100k-utterance score+filter+sweep under 60s)",
        elapsed.as_secs_f64() < 60.0,
        &format!("{:.1}s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_9_io_round_trips() {
    let corpus = simulate_corpus(&mixed_severity_spec(200, 3, 4711)).unwrap();
    let mut jsonl = Vec::new();
    write_bundles(&corpus, &mut jsonl).unwrap();
    let reread = read_bundles(Cursor::new(&jsonl), ParseMode::Strict).unwrap();
    let bundles_exact = reread.bundles == corpus;

    let points = threshold_sweep(
        &corpus,
        &default_tau_grid(),
        TokenUnit::Char,
        &Default::default(),
    )
    .unwrap();
    let mut csv = Vec::new();
    write_sweep(&points, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut sweep_ok = true;
    for (line, point) in text.lines().skip(1).zip(&points) {
        let cells: Vec<&str> = line.split(',').collect();
        let close = |cell: &str, value: f64| -> bool {
            (cell.parse::<f64>().unwrap() - value).abs() < 5e-7
        };
        sweep_ok &= close(cells[0], point.cutoff)
            && cells[2].parse::<usize>().unwrap() == point.accepted_count
            && close(cells[3], point.accepted_fraction)
            && match &point.wer {
                Some(w) => close(cells[4], w.rate()) && close(cells[5], w.per_utterance_mean),
                None => cells[4].is_empty(),
            };
    }

    let calib = calibration_report(&corpus, 15, TokenUnit::Word, &Default::default()).unwrap();
    let mut csv = Vec::new();
    write_calibration(&calib, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let summary: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let calib_ok = (summary[2].parse::<f64>().unwrap() - calib.ece).abs() < 5e-7
        && (summary[6].parse::<f64>().unwrap() - calib.mean_accuracy).abs() < 5e-7;

    report(
        "9 (I/O round trips)",
        bundles_exact && sweep_ok && calib_ok,
        &format!(
            "bundles exact: {bundles_exact}, sweep csv: {sweep_ok}, calibration csv: {calib_ok}"
        ),
    );
}
