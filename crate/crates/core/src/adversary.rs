//! Eavesdropping strategies and their detection statistics.
//!
//! The travel photon alone carries no key information: its reduced state is
//! the same for both encoded Bell states, so intercepting and resending it
//! yields nothing while still disturbing the control-mode anticorrelation
//! half the time when the wrong basis is chosen. The dangerous attacks probe
//! the encoder itself with injected light (Trojan horse), which is countered
//! by mode filtering and by checking for exactly one detection per side, or
//! hide in channel loss, which is only possible below a known transmission
//! threshold.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{control_run, ControlOutcome, ControlRunRecord, ProtocolConfig};
use crate::quantum::{measure_travel, BellSign, MeasBasis};
use crate::rng::{substream, StreamKind};
use crate::source;

/// Channel transmission below which an eavesdropper could hide in the loss.
pub const LOSS_HIDING_THRESHOLD: f64 = 0.6;

/// Number of standard deviations above baseline that raises the one-click
/// alarm.
pub const ONE_CLICK_ALARM_SIGMA: f64 = 5.0;

/// Eavesdropper strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackModel {
    NoAttack,
    /// Measure the travel photon in transit and resend the eigenstate.
    InterceptResend { basis: MeasBasis },
    /// Inject probe photons through the encoder and read the applied phase.
    TrojanHorse {
        /// Probability that a probe survives the spatial and spectral
        /// filters guarding the encoder.
        probe_pass_prob: f64,
        /// Probe photons injected per encoding cycle.
        photons_per_probe: u32,
    },
    /// Replace the lossy channel and skim photons within the loss budget.
    LossHiding { channel_transmission: f64 },
}

impl AttackModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttackModel::TrojanHorse {
                probe_pass_prob,
                photons_per_probe,
            } => {
                if !(0.0..=1.0).contains(probe_pass_prob) {
                    return Err(Error::invalid_param("probe_pass_prob", "must be in [0,1]"));
                }
                if *photons_per_probe == 0 {
                    return Err(Error::invalid_param("photons_per_probe", "must be >= 1"));
                }
                Ok(())
            }
            AttackModel::LossHiding { channel_transmission } => {
                if !(0.0..=1.0).contains(channel_transmission) {
                    return Err(Error::invalid_param(
                        "channel_transmission",
                        "must be in [0,1]",
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Detectability figures of an attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    /// Mutual information between the eavesdropper's record and the key,
    /// bits per message bit (plug-in estimate over the simulated runs).
    pub info_per_message_bit: f64,
    /// Probability that a single control run exposes the attack.
    pub detection_prob_per_control_run: f64,
    /// One-click-check flag rate in excess of the no-attack baseline.
    pub double_click_excess: f64,
}

impl AttackReport {
    pub fn zero() -> Self {
        AttackReport {
            info_per_message_bit: 0.0,
            detection_prob_per_control_run: 0.0,
            double_click_excess: 0.0,
        }
    }
}

/// Plug-in mutual information (bits) of a joint count table.
fn mutual_information(joint: &[[u64; 2]]) -> f64 {
    let total: u64 = joint.iter().map(|row| row[0] + row[1]).sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let col = |j: usize| joint.iter().map(|row| row[j]).sum::<u64>() as f64;
    let cols = [col(0), col(1)];
    let mut info = 0.0;
    for row in joint {
        let row_sum = (row[0] + row[1]) as f64;
        for (j, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let p = count as f64 / n;
            info += p * (p * n * n / (row_sum * cols[j])).log2();
        }
    }
    info.max(0.0)
}

/// Intercept-resend attack on message runs.
///
/// The eavesdropper measures every travel photon in the given basis and
/// resends the eigenstate. Her record is uncorrelated with the encoding in
/// either basis; what changes is the control-run mismatch rate, which a
/// diagonal-basis interception drives to one half.
pub fn intercept_resend(
    basis: MeasBasis,
    message_runs: u64,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<AttackReport> {
    config.validate()?;
    let attack = AttackModel::InterceptResend { basis };

    // message phase: Eve's outcome vs encoded bit
    let mut joint = [[0u64; 2]; 2]; // [eve outcome][bit]
    let mut rng = substream(seed, StreamKind::Attack, 0);
    for _ in 0..message_runs {
        let bit = rng.random::<f64>() < 0.5;
        let emission = source::sample_emission(&config.source, &mut rng)?;
        let encoded = crate::quantum::apply_pockels(
            &emission.state,
            BellSign::from_bit(bit as u8) == BellSign::Minus,
        );
        let (outcome, _) = measure_travel(&encoded, basis, &mut rng);
        joint[outcome as usize][bit as usize] += 1;
    }
    let info = mutual_information(&joint);

    // control phase: mismatch frequency over valid runs
    let control_runs = message_runs.max(1);
    let mut mismatch = 0u64;
    let mut valid = 0u64;
    for i in 0..control_runs {
        let mut rng = substream(seed, StreamKind::ControlRun, i);
        match control_run(config, &attack, &mut rng)?.outcome {
            ControlOutcome::Mismatch => {
                mismatch += 1;
                valid += 1;
            }
            ControlOutcome::Pass => valid += 1,
            ControlOutcome::ClickAnomaly => {}
        }
    }
    let detection = if valid > 0 {
        mismatch as f64 / valid as f64
    } else {
        0.0
    };

    Ok(AttackReport {
        info_per_message_bit: info,
        detection_prob_per_control_run: detection,
        double_click_excess: 0.0,
    })
}

/// Trojan-horse probe of the encoder.
///
/// A diagonal probe photon passing the electro-optic cell picks up the
/// encoding phase: a pi shift flips `|+>` to `|->`, so a diagonal-basis
/// readout of a surviving probe reveals the bit outright. Information gain is
/// limited only by the filter survival probability; the countermeasure is
/// the one-click check, which sees the extra probe photons in control runs.
pub fn trojan_horse(
    attack: &AttackModel,
    message_runs: u64,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<AttackReport> {
    let AttackModel::TrojanHorse { probe_pass_prob, .. } = attack else {
        return Err(Error::invalid_param("attack", "expected a Trojan-horse model"));
    };
    attack.validate()?;
    config.validate()?;

    // message phase: probe readout, deterministic given filter survival
    let mut joint_pass = [[0u64; 2]; 2];
    let mut n_blocked = 0u64;
    let mut rng = substream(seed, StreamKind::Attack, 1);
    for _ in 0..message_runs {
        let bit = rng.random::<f64>() < 0.5;
        if rng.random::<f64>() < *probe_pass_prob {
            let readout = probe_readout(bit);
            joint_pass[readout as usize][bit as usize] += 1;
        } else {
            n_blocked += 1;
        }
    }
    // blocked probes leave Eve with a constant symbol carrying no
    // information; the plug-in estimate over the three-symbol alphabet is the
    // weighted pass-fraction information
    let n_pass: u64 = joint_pass.iter().map(|r| r[0] + r[1]).sum();
    let total = (n_pass + n_blocked).max(1);
    let info = mutual_information(&joint_pass) * n_pass as f64 / total as f64;

    // control phase: double-click rate against the no-attack baseline
    let n_control = message_runs.max(1);
    let with_attack = collect_control_records(config, attack, n_control, seed + 1)?;
    let baseline = collect_control_records(config, &AttackModel::NoAttack, n_control, seed + 2)?;
    let multi = |records: &[ControlRunRecord]| {
        records
            .iter()
            .filter(|r| r.alice_clicks >= 2 || r.bob_clicks >= 2)
            .count() as f64
            / records.len().max(1) as f64
    };
    let excess = multi(&with_attack) - multi(&baseline);

    let detection = with_attack
        .iter()
        .filter(|r| r.outcome == ControlOutcome::Mismatch)
        .count() as f64
        / with_attack
            .iter()
            .filter(|r| r.outcome != ControlOutcome::ClickAnomaly)
            .count()
            .max(1) as f64;

    Ok(AttackReport {
        info_per_message_bit: info,
        detection_prob_per_control_run: detection,
        double_click_excess: excess,
    })
}

/// Phase readout of a surviving diagonal probe: the encoder's pi shift maps
/// `|+>` onto `|->`, so the diagonal measurement returns the bit exactly.
fn probe_readout(bit: bool) -> bool {
    let probe = probe_state_after_encoder(bit);
    // deterministic: the post-encoder state is a diagonal-basis eigenstate
    let p_plus = probe_overlap_plus(&probe);
    p_plus < 0.5
}

fn probe_state_after_encoder(bit: bool) -> [num_complex::Complex64; 2] {
    use num_complex::Complex64;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut amp = [
        Complex64::new(inv_sqrt2, 0.0),
        Complex64::new(inv_sqrt2, 0.0),
    ];
    if bit {
        amp[1] = -amp[1]; // pi phase on the V component
    }
    amp
}

fn probe_overlap_plus(amp: &[num_complex::Complex64; 2]) -> f64 {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let inner = (amp[0] + amp[1]) * inv_sqrt2;
    inner.norm_sqr()
}

fn collect_control_records(
    config: &ProtocolConfig,
    attack: &AttackModel,
    runs: u64,
    seed: u64,
) -> Result<Vec<ControlRunRecord>> {
    (0..runs)
        .map(|i| {
            let mut rng = substream(seed, StreamKind::ControlRun, i);
            control_run(config, attack, &mut rng)
        })
        .collect()
}

/// Whether channel transmission leaves room for a loss-hiding attack, and by
/// what margin (strictly below the threshold is feasible).
pub fn loss_hiding_feasible(channel_transmission: f64) -> Result<(bool, f64)> {
    if !(0.0..=1.0).contains(&channel_transmission) {
        return Err(Error::invalid_param(
            "channel_transmission",
            "must be in [0,1]",
        ));
    }
    Ok((
        channel_transmission < LOSS_HIDING_THRESHOLD,
        LOSS_HIDING_THRESHOLD - channel_transmission,
    ))
}

/// Verdict of the exactly-one-click test over a set of control runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneClickVerdict {
    pub runs: u64,
    /// Runs with zero or multiple clicks on either side.
    pub flagged: u64,
    pub flag_rate: f64,
    /// Expected flag rate from detector inefficiency and double pairs alone.
    pub baseline_flag_rate: f64,
    /// Runs with two or more clicks on a side. Missing clicks are ordinary
    /// loss; surplus clicks are what injected photons produce.
    pub multi_click_rate: f64,
    /// Expected multi-click rate from double pairs alone.
    pub baseline_multi_rate: f64,
    /// Multi-click excess over baseline in binomial standard deviations.
    pub excess_sigma: f64,
    /// Raised when the multi-click excess clears the alarm threshold.
    pub alarm: bool,
}

/// Aggregate the exactly-one-detection check.
///
/// Every run with zero or multiple clicks on either side is flagged and the
/// flag rate is reported against the no-attack baseline; inefficiency
/// produces a known baseline that is reported, not alarmed. The alarm
/// watches the multi-click rate specifically: double clicks beyond the
/// double-pair expectation are the signature of injected photons.
pub fn one_click_check(records: &[ControlRunRecord], config: &ProtocolConfig) -> Result<OneClickVerdict> {
    if records.is_empty() {
        return Err(Error::EmptyInput("control records"));
    }
    let runs = records.len() as u64;
    let flagged = records
        .iter()
        .filter(|r| r.alice_clicks != 1 || r.bob_clicks != 1)
        .count() as u64;
    let multi = records
        .iter()
        .filter(|r| r.alice_clicks >= 2 || r.bob_clicks >= 2)
        .count() as u64;
    let flag_rate = flagged as f64 / runs as f64;
    let multi_click_rate = multi as f64 / runs as f64;
    let baseline_multi = baseline_multi_click_rate(config);
    let sigma = (baseline_multi * (1.0 - baseline_multi) / runs as f64)
        .sqrt()
        .max(1.0 / runs as f64);
    let excess_sigma = (multi_click_rate - baseline_multi) / sigma;
    Ok(OneClickVerdict {
        runs,
        flagged,
        flag_rate,
        baseline_flag_rate: baseline_flag_rate(config),
        multi_click_rate,
        baseline_multi_rate: baseline_multi,
        excess_sigma,
        alarm: excess_sigma > ONE_CLICK_ALARM_SIGMA,
    })
}

/// No-attack probability that a control run shows two or more clicks on a
/// side; only double pairs can do that.
pub fn baseline_multi_click_rate(config: &ProtocolConfig) -> f64 {
    let s = &config.source;
    if s.pair_prob <= 0.0 {
        return 0.0;
    }
    let w2 = 1.0 - s.p_one() / s.pair_prob;
    w2 * (1.0 - (1.0 - s.eta1 * s.eta1) * (1.0 - s.eta2 * s.eta2))
}

/// No-attack probability that a control run fails the exactly-one-click
/// test, from the pair-number law (conditioned on a firing source, as in
/// [`control_run`]) and the per-side efficiencies.
pub fn baseline_flag_rate(config: &ProtocolConfig) -> f64 {
    let s = &config.source;
    if s.pair_prob <= 0.0 {
        return 0.0;
    }
    let w1 = s.p_one() / s.pair_prob;
    let w2 = 1.0 - w1;
    let one_click = |n: u8, eta: f64| -> f64 {
        match n {
            1 => eta,
            _ => 2.0 * eta * (1.0 - eta),
        }
    };
    // sides are independent only given the shared pair number
    let both_single = w1 * one_click(1, s.eta1) * one_click(1, s.eta2)
        + w2 * one_click(2, s.eta1) * one_click(2, s.eta2);
    1.0 - both_single
}

/// Dispatch an attack model to its simulator.
pub fn run_attack(
    attack: &AttackModel,
    runs: u64,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<AttackReport> {
    attack.validate()?;
    match attack {
        AttackModel::NoAttack => Ok(AttackReport::zero()),
        AttackModel::InterceptResend { basis } => intercept_resend(*basis, runs, config, seed),
        AttackModel::TrojanHorse { .. } => trojan_horse(attack, runs, config, seed),
        AttackModel::LossHiding { channel_transmission } => {
            let (feasible, margin) = loss_hiding_feasible(*channel_transmission)?;
            Ok(AttackReport {
                info_per_message_bit: 0.0,
                detection_prob_per_control_run: if feasible { 0.0 } else { margin.abs().min(1.0) },
                double_click_excess: 0.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell_state, BellSign};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ideal_config() -> ProtocolConfig {
        let mut c = ProtocolConfig::ideal(0);
        c.source.pair_prob = 1.0;
        c
    }

    #[test]
    fn travel_photon_reveals_nothing() {
        // the two encodings have identical travel-qubit reduced states
        let plus = bell_state(BellSign::Plus).reduced_travel();
        let minus = bell_state(BellSign::Minus).reduced_travel();
        assert_eq!(plus.matrix(), minus.matrix());
    }

    #[test]
    fn intercept_resend_in_z_learns_nothing_and_stays_hidden() {
        let report = intercept_resend(MeasBasis::Z, 10_000, &ideal_config(), 1).unwrap();
        assert!(report.info_per_message_bit < 0.01, "info {}", report.info_per_message_bit);
        assert!(report.detection_prob_per_control_run < 0.01);
        assert_abs_diff_eq!(report.double_click_excess, 0.0);
    }

    #[test]
    fn intercept_resend_in_x_learns_nothing_but_is_seen() {
        let report = intercept_resend(MeasBasis::X, 10_000, &ideal_config(), 2).unwrap();
        assert!(report.info_per_message_bit < 0.01, "info {}", report.info_per_message_bit);
        assert!(
            (report.detection_prob_per_control_run - 0.5).abs() < 0.02,
            "detection {}",
            report.detection_prob_per_control_run
        );
    }

    #[test]
    fn no_attack_report_is_zero_and_reproducible() {
        let config = ProtocolConfig::mode1(0);
        let a = run_attack(&AttackModel::NoAttack, 1000, &config, 7).unwrap();
        let b = run_attack(&AttackModel::NoAttack, 1000, &config, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, AttackReport::zero());
        // stochastic attacks are reproducible under a fixed seed too
        let x = intercept_resend(MeasBasis::X, 2000, &ideal_config(), 5).unwrap();
        let y = intercept_resend(MeasBasis::X, 2000, &ideal_config(), 5).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn trojan_probe_reads_the_encoding_deterministically() {
        // pi phase flips the diagonal probe; readout equals the bit
        assert!(!probe_readout(false));
        assert!(probe_readout(true));
        let attack = AttackModel::TrojanHorse {
            probe_pass_prob: 1.0,
            photons_per_probe: 1,
        };
        let report = trojan_horse(&attack, 5000, &ideal_config(), 3).unwrap();
        assert!(
            report.info_per_message_bit > 0.99,
            "info {}",
            report.info_per_message_bit
        );
    }

    #[test]
    fn filtered_trojan_probe_learns_nothing() {
        let attack = AttackModel::TrojanHorse {
            probe_pass_prob: 0.0,
            photons_per_probe: 1,
        };
        let report = trojan_horse(&attack, 5000, &ideal_config(), 4).unwrap();
        assert_abs_diff_eq!(report.info_per_message_bit, 0.0);
    }

    #[test]
    fn partial_filter_scales_information() {
        let attack = AttackModel::TrojanHorse {
            probe_pass_prob: 0.3,
            photons_per_probe: 1,
        };
        let report = trojan_horse(&attack, 20_000, &ideal_config(), 5).unwrap();
        assert!(
            (report.info_per_message_bit - 0.3).abs() < 0.02,
            "info {}",
            report.info_per_message_bit
        );
    }

    #[test]
    fn multi_photon_trojan_trips_the_one_click_alarm() {
        let config = ProtocolConfig::mode1(0);
        let attack = AttackModel::TrojanHorse {
            probe_pass_prob: 1.0,
            photons_per_probe: 2,
        };
        let records = collect_control_records(&config, &attack, 10_000, 11).unwrap();
        let verdict = one_click_check(&records, &config).unwrap();
        assert!(verdict.alarm, "excess {} sigma", verdict.excess_sigma);
        assert!(verdict.excess_sigma > ONE_CLICK_ALARM_SIGMA);
    }

    #[test]
    fn inefficiency_baseline_is_reported_not_alarmed() {
        // realistic efficiencies, no attack: flags happen at the known rate
        let mut cfg = ProtocolConfig::mode1(0);
        cfg.source.pair_prob = 1.0;
        cfg.source.double_pair_ratio = 0.0;
        let records = collect_control_records(&cfg, &AttackModel::NoAttack, 20_000, 12).unwrap();
        let verdict = one_click_check(&records, &cfg).unwrap();
        assert!(!verdict.alarm, "excess {} sigma", verdict.excess_sigma);
        assert!(verdict.baseline_flag_rate > 0.5); // eta ~ 0.41 per side
        assert!((verdict.flag_rate - verdict.baseline_flag_rate).abs() < 0.02);
        // analytic arithmetic: P(one click per side) = eta1 * eta2 here
        let expected = 1.0 - cfg.source.eta1 * cfg.source.eta2;
        assert!((verdict.baseline_flag_rate - expected).abs() < 1e-12);
        // without double pairs there are no multi-click slots at all
        assert_abs_diff_eq!(verdict.multi_click_rate, 0.0);

        // with double pairs present the multi-click rate matches its own
        // baseline and still raises no alarm
        let mut cfg2 = ProtocolConfig::mode1(0);
        cfg2.source.pair_prob = 1.0;
        let records = collect_control_records(&cfg2, &AttackModel::NoAttack, 20_000, 14).unwrap();
        let verdict = one_click_check(&records, &cfg2).unwrap();
        assert!(!verdict.alarm, "excess {} sigma", verdict.excess_sigma);
        assert!(verdict.baseline_multi_rate > 0.0);
        assert!((verdict.multi_click_rate - verdict.baseline_multi_rate).abs() < 0.005);
    }

    #[test]
    fn ideal_no_attack_never_flags() {
        let config = ideal_config();
        let records = collect_control_records(&config, &AttackModel::NoAttack, 2000, 13).unwrap();
        let verdict = one_click_check(&records, &config).unwrap();
        assert_eq!(verdict.flagged, 0);
        assert!(!verdict.alarm);
    }

    #[test]
    fn loss_hiding_threshold() {
        let (feasible, margin) = loss_hiding_feasible(0.5).unwrap();
        assert!(feasible);
        assert_abs_diff_eq!(margin, 0.1, epsilon = 1e-12);
        let (feasible, margin) = loss_hiding_feasible(1.0).unwrap();
        assert!(!feasible);
        assert_abs_diff_eq!(margin, -0.4, epsilon = 1e-12);
        // boundary: strictly below the threshold only
        let (feasible, margin) = loss_hiding_feasible(0.6).unwrap();
        assert!(!feasible);
        assert_abs_diff_eq!(margin, 0.0, epsilon = 1e-12);
        assert!(loss_hiding_feasible(1.2).is_err());
    }

    #[test]
    fn mutual_information_edge_cases() {
        assert_abs_diff_eq!(mutual_information(&[[0, 0], [0, 0]]), 0.0);
        // perfectly correlated
        let mi = mutual_information(&[[500, 0], [0, 500]]);
        assert_abs_diff_eq!(mi, 1.0, epsilon = 1e-12);
        // independent
        let mi = mutual_information(&[[250, 250], [250, 250]]);
        assert_abs_diff_eq!(mi, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn loss_hiding_margin_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (_, margin_lo) = loss_hiding_feasible(lo).unwrap();
            let (_, margin_hi) = loss_hiding_feasible(hi).unwrap();
            prop_assert!(margin_lo >= margin_hi);
        }
    }
}
