//! Distributional checks of the full click pipeline against closed forms.

use pingpong_core::bsa::signature_prob_per_pulse;
use pingpong_core::protocol::{transmit_key, Category, ProtocolConfig};
use pingpong_core::rng::{substream, StreamKind};
use rand::Rng;

fn random_key(n: u64, seed: u64) -> Vec<bool> {
    let mut rng = substream(seed, StreamKind::Scenario, 0);
    (0..n).map(|_| rng.random::<f64>() < 0.5).collect()
}

/// With rare emissions, the per-block signature count is a thinned binomial
/// indistinguishable from a Poisson law at the operating point.
#[test]
fn signature_counts_are_poisson_within_ks_bound() {
    let config = ProtocolConfig::mode1(99);
    let n_blocks = 100_000u64;
    let key = random_key(n_blocks, 99);
    let (stats, _) = transmit_key(&key, &config).unwrap();

    let lambda = signature_prob_per_pulse(&config.source, &config.effective_bsa())
        * config.pulses_per_bit as f64;
    assert!((lambda - 0.894).abs() < 0.01, "lambda {lambda}");

    // Kolmogorov-Smirnov distance between empirical and Poisson CDFs
    let mut poisson_pmf = Vec::new();
    let mut term = (-lambda).exp();
    for k in 0..30 {
        poisson_pmf.push(term);
        term *= lambda / (k + 1) as f64;
    }
    let mut ks: f64 = 0.0;
    let mut emp_cdf = 0.0;
    let mut model_cdf = 0.0;
    for k in 0..30 {
        emp_cdf += stats
            .signature_count_hist
            .get(k)
            .map(|&c| c as f64 / n_blocks as f64)
            .unwrap_or(0.0);
        model_cdf += poisson_pmf[k];
        ks = ks.max((emp_cdf - model_cdf).abs());
    }
    assert!(ks < 0.02, "KS distance {ks:.4} against Poisson({lambda:.3})");
    println!("Poisson check: lambda {lambda:.3}, KS distance {ks:.4}");
}

/// On-demand source: with exactly k pairs per block, the no-coincidence
/// probability is (1 - per-pair signature probability)^k.
#[test]
fn deterministic_source_empty_block_law() {
    let mut config = ProtocolConfig::mode1(123);
    config.source.pair_prob = 1.0;
    config.source.double_pair_ratio = 0.0;

    for k in [1u64, 3, 5] {
        config.pulses_per_bit = k;
        let per_pair = signature_prob_per_pulse(&config.source, &config.effective_bsa());
        let expected = (1.0 - per_pair).powi(k as i32);

        let n_blocks = 40_000u64;
        let key = random_key(n_blocks, 123 + k);
        let mut cfg = config;
        cfg.seed = 123 + k;
        let (stats, results) = transmit_key(&key, &cfg).unwrap();
        assert_eq!(results.len() as u64, n_blocks);
        let empty = stats.fraction_no_click;
        let bound = 4.0 * (expected * (1.0 - expected) / n_blocks as f64).sqrt();
        assert!(
            (empty - expected).abs() < bound,
            "k={k}: empty fraction {empty:.4} vs (1-p)^k = {expected:.4} +- {bound:.4}"
        );
        // every non-empty block decoded something
        for r in &results {
            if r.category == Category::NoClick {
                assert_eq!(r.signature_count(), 0);
            }
        }
    }
}
