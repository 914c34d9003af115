//! Independent oracles and corpus builders shared by the integration suites.
#![allow(dead_code)] // each test target uses a different subset

use std::collections::HashMap;

use dust_core::sim::{Mixture, NoiseChannel, SimCorpusSpec};

/// Textbook top-down recursive edit distance (memoized); an independent
/// check on the iterative two-row implementation.
pub fn recursive_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let d = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            let delete = go(a, b, i + 1, j, memo);
            let insert = go(a, b, i, j + 1, memo);
            let substitute = go(a, b, i + 1, j + 1, memo);
            1 + delete.min(insert).min(substitute)
        };
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub struct OracleCalibration {
    pub ece: f64,
    pub mce: f64,
    pub rce: f64,
}

/// Direct-summation calibration metrics from raw (confidence, accuracy)
/// pairs, with its own binning and accumulation code.
pub fn calibration_oracle(samples: &[(f64, f64)], m: usize) -> OracleCalibration {
    let mut bins: Vec<Vec<(f64, f64)>> = vec![Vec::new(); m];
    for &(conf, acc) in samples {
        let mut idx = (conf * m as f64) as usize;
        if idx >= m {
            idx = m - 1;
        }
        bins[idx].push((conf, acc));
    }
    let n = samples.len() as f64;
    let mut ece = 0.0;
    let mut mce = 0.0f64;
    let mut rse = 0.0;
    for bin in &bins {
        if bin.is_empty() {
            continue;
        }
        let conf = bin.iter().map(|p| p.0).sum::<f64>() / bin.len() as f64;
        let acc = bin.iter().map(|p| p.1).sum::<f64>() / bin.len() as f64;
        let gap = (acc - conf).abs();
        let weight = bin.len() as f64 / n;
        ece += weight * gap;
        mce = mce.max(gap);
        rse += weight * gap * gap;
    }
    OracleCalibration {
        ece,
        mce,
        rce: rse.sqrt(),
    }
}

/// The mixed-severity stress corpus: 20% of utterances decoded by a badly
/// mismatched teacher that is nonetheless perfectly self-consistent
/// (base 0.5, perturbation 0), the rest mildly corrupted with real dropout
/// diversity (base 0.05, perturbation 0.2).
pub fn mixed_severity_spec(n: usize, t: usize, seed: u64) -> SimCorpusSpec {
    SimCorpusSpec {
        truths: dust_core::sim::sample_truths(n, 15, seed ^ 0x7001),
        channel: NoiseChannel::new(0.05, 0.2, t, seed),
        mixture: Some(Mixture {
            fraction: 0.2,
            base_corruption_rate: 0.5,
            sample_perturbation_rate: 0.0,
        }),
    }
}

pub const TRIAL_SEEDS: [u64; 5] = [101, 202, 303, 404, 505];
