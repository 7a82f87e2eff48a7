//! The ping-pong coding protocol driver.
//!
//! One key bit is carried by the relative phase of an entangled pair: the
//! sender leaves the symmetric Bell state alone for a 0 and switches it to
//! the antisymmetric one for a 1. With a spontaneous source many pump pulses
//! are spent per bit; the receiver tallies the timing signatures of a fixed
//! pulse block and decodes by majority. Blocks fall into four categories:
//! decoded correctly, no coincidence at all, tied signature counts, and
//! decoded wrong. Interleaved with message blocks, control-mode pulses check
//! the H/V anticorrelation of the pair to expose an eavesdropper.
//!
//! All routines are deterministic for a fixed seed: every block consumes an
//! independent RNG substream keyed by its index, so results are identical
//! across runs and across any degree of block-level parallelism.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackModel;
use crate::bsa::{self, BsaParams, Signature};
use crate::error::{Error, Result};
use crate::quantum::{measure_travel, measure_z, BellSign, MeasBasis, Polarization};
use crate::rng::{substream, StreamKind};
use crate::source::{self, PulseEmission, SourceParams};

/// Mean decodable signatures per 2500-pulse block at the standard operating
/// point (one coincidence on average, 40.9% empty blocks).
pub const MODE1_MEAN_SIGNATURES: f64 = 0.894;
/// Pulses per bit in the two standard presets.
pub const MODE1_PULSES_PER_BIT: u64 = 2500;
pub const MODE2_PULSES_PER_BIT: u64 = 20_000;
/// Channel desynchronization rate calibrated against the raw error rate of
/// the long-block operating point, where readout sync dominates the errors.
pub const MODE2_SYNC_ERROR_PROB: f64 = 0.255;

/// Full parameter set for a key transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Pump pulses spent per key bit.
    pub pulses_per_bit: u64,
    /// Probability that a travel photon is reflected into message mode;
    /// control mode runs with probability `1 - r_control`.
    pub r_control: f64,
    /// Master seed; every block derives its own stream from it.
    pub seed: u64,
    /// Per-coincidence desynchronization probability for this run
    /// (overrides the analyzer default).
    pub sync_error_prob: f64,
    pub source: SourceParams,
    pub bsa: BsaParams,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig::mode1(0)
    }
}

impl ProtocolConfig {
    /// Short-block preset: 2500 pulses per bit, one coincidence on average.
    pub fn mode1(seed: u64) -> Self {
        let bsa = BsaParams::default();
        let mut source = SourceParams::default();
        source.pair_prob = source::calibrate_pair_prob(
            MODE1_MEAN_SIGNATURES,
            MODE1_PULSES_PER_BIT,
            &bsa,
            &source,
        )
        .expect("default operating point is reachable");
        ProtocolConfig {
            pulses_per_bit: MODE1_PULSES_PER_BIT,
            r_control: 1.0,
            seed,
            sync_error_prob: bsa.sync_error_prob,
            source,
            bsa,
        }
    }

    /// Long-block preset: 20,000 pulses per bit (about seven detected pairs),
    /// readout-sync dominated errors.
    pub fn mode2(seed: u64) -> Self {
        let mut config = ProtocolConfig::mode1(seed);
        config.pulses_per_bit = MODE2_PULSES_PER_BIT;
        config.sync_error_prob = MODE2_SYNC_ERROR_PROB;
        config
    }

    /// Loss-free deterministic channel: on-demand single pairs, pure states,
    /// symmetric lossless splitter, perfect detectors and timing. Every block
    /// decodes correctly.
    pub fn ideal(seed: u64) -> Self {
        ProtocolConfig {
            pulses_per_bit: MODE1_PULSES_PER_BIT,
            r_control: 1.0,
            seed,
            sync_error_prob: 0.0,
            source: SourceParams {
                pair_prob: 1.0,
                double_pair_ratio: 0.0,
                mixture_m: 0.0,
                eta1: 1.0,
                eta2: 1.0,
                ..Default::default()
            },
            bsa: BsaParams {
                transmittance: 0.5,
                reflectance: 0.5,
                bs_loss: 0.0,
                detour_alignment: 1.0,
                sync_error_prob: 0.0,
                ..Default::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulses_per_bit == 0 {
            return Err(Error::invalid_param("pulses_per_bit", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.r_control) {
            return Err(Error::invalid_param("r_control", "must be in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.sync_error_prob) {
            return Err(Error::invalid_param("sync_error_prob", "must be in [0,1]"));
        }
        self.source.validate()?;
        self.bsa.validate()
    }

    /// Analyzer parameters with the run-level desynchronization rate applied.
    pub fn effective_bsa(&self) -> BsaParams {
        BsaParams {
            sync_error_prob: self.sync_error_prob,
            ..self.bsa
        }
    }

    /// Key rate in bits per second, `pulse_rate / pulses_per_bit`.
    pub fn key_rate_bits_per_s(&self) -> f64 {
        self.source.pulse_rate_hz / self.pulses_per_bit as f64
    }
}

/// Block outcome category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    /// Decoded to the encoded value by strict majority.
    Correct,
    /// No decodable coincidence in the whole block.
    NoClick,
    /// Equal signature counts; value guessed.
    Tie,
    /// Decoded to the wrong value by strict majority.
    Wrong,
}

impl Category {
    /// Conventional roman-numeral label.
    pub fn numeral(self) -> &'static str {
        match self {
            Category::Correct => "I",
            Category::NoClick => "II",
            Category::Tie => "III",
            Category::Wrong => "IV",
        }
    }

    pub const ALL: [Category; 4] = [
        Category::Correct,
        Category::NoClick,
        Category::Tie,
        Category::Wrong,
    ];
}

/// Receiver-side decision for one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoded {
    /// Strict signature majority.
    Bit(bool),
    /// Tied counts, resolved by the recorded coin flip.
    Tie { guess: bool },
    /// Nothing to decode.
    NoClick,
}

/// Per-bit decoding record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub encoded_bit: bool,
    pub n_psi_plus: u64,
    pub n_psi_minus: u64,
    pub n_ambiguous: u64,
    pub decoded: Decoded,
    pub category: Category,
}

impl BlockResult {
    pub fn signature_count(&self) -> u64 {
        self.n_psi_plus + self.n_psi_minus
    }

    /// The value the receiver would write into a raw (unsifted) key.
    pub fn raw_value(&self) -> Option<bool> {
        match self.decoded {
            Decoded::Bit(b) => Some(b),
            Decoded::Tie { guess } => Some(guess),
            Decoded::NoClick => None,
        }
    }
}

/// Aggregate statistics of a key transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionStats {
    pub n_bits: u64,
    pub n_correct: u64,
    pub n_no_click: u64,
    pub n_tie: u64,
    pub n_wrong: u64,
    pub fraction_correct: f64,
    pub fraction_no_click: f64,
    pub fraction_tie: f64,
    pub fraction_wrong: f64,
    /// Errors over decided bits including guessed ties, `(IV + wrong
    /// guesses) / (I + III + IV)`; `None` when nothing was decided.
    pub qber_raw: Option<f64>,
    /// Errors after removing undecodable bits, `IV / (I + IV)`.
    pub qber_post: Option<f64>,
    pub key_rate_bits_per_s: f64,
    /// Distribution of decodable signatures per block; index = count.
    pub signature_count_hist: Vec<u64>,
    /// Control-mode bookkeeping (zero for pure message-mode runs).
    pub control_runs: u64,
    pub control_mismatches: u64,
}

impl TransmissionStats {
    pub fn fractions(&self) -> [f64; 4] {
        [
            self.fraction_correct,
            self.fraction_no_click,
            self.fraction_tie,
            self.fraction_wrong,
        ]
    }
}

/// QBER accounting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QberMode {
    /// Undecodable bits are discarded first (post-processing announced which
    /// blocks decoded); errors are strictly wrong majorities: `IV / (I + IV)`.
    PostProcessed,
    /// Every decided bit counts, tie guesses included:
    /// `(IV + wrongly guessed ties) / (I + III + IV)`.
    Raw,
}

/// Error rate of a transmission record under the chosen accounting.
pub fn qber(results: &[BlockResult], mode: QberMode) -> Result<f64> {
    let mut correct = 0u64;
    let mut wrong = 0u64;
    let mut ties = 0u64;
    let mut tie_wrong = 0u64;
    for r in results {
        match r.category {
            Category::Correct => correct += 1,
            Category::Wrong => wrong += 1,
            Category::Tie => {
                ties += 1;
                if r.raw_value() != Some(r.encoded_bit) {
                    tie_wrong += 1;
                }
            }
            Category::NoClick => {}
        }
    }
    match mode {
        QberMode::PostProcessed => {
            let denom = correct + wrong;
            if denom == 0 {
                return Err(Error::NoDecodedBits);
            }
            Ok(wrong as f64 / denom as f64)
        }
        QberMode::Raw => {
            let denom = correct + ties + wrong;
            if denom == 0 {
                return Err(Error::NoDecodedBits);
            }
            Ok((wrong + tie_wrong) as f64 / denom as f64)
        }
    }
}

fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("validated probability").sample(rng)
}

/// Transmit one key bit over a block of pump pulses and decode it.
///
/// Pulses routed to control mode contribute no signatures. Only emitting
/// message pulses are simulated explicitly; their number is drawn from the
/// exact binomial law, which leaves the block statistics unchanged.
pub fn transmit_bit<R: Rng + ?Sized>(
    bit: bool,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<BlockResult> {
    let bsa_params = config.effective_bsa();
    let encoded = BellSign::from_bit(bit as u8);
    let pair_state = config.source.pair_state();
    let p_emit = config.source.pair_prob;
    let p_two_given_emit = if p_emit > 0.0 {
        config.source.p_two() / p_emit
    } else {
        0.0
    };
    let emitting = sample_binomial(config.pulses_per_bit, p_emit * config.r_control, rng);

    let mut n_psi_plus = 0u64;
    let mut n_psi_minus = 0u64;
    let mut n_ambiguous = 0u64;
    for _ in 0..emitting {
        let n_pairs = if rng.random::<f64>() < p_two_given_emit { 2 } else { 1 };
        let emission = PulseEmission {
            n_pairs,
            state: pair_state,
        };
        let clicks =
            bsa::generate_clicks(&emission, encoded, 1.0, &bsa_params, &config.source, rng)?;
        match bsa::classify_signature(&clicks, &bsa_params) {
            Signature::PsiPlus => n_psi_plus += 1,
            Signature::PsiMinus => n_psi_minus += 1,
            Signature::Ambiguous => n_ambiguous += 1,
            Signature::NoCoincidence => {}
        }
    }

    let (decoded, category) = decide(bit, n_psi_plus, n_psi_minus, rng);
    Ok(BlockResult {
        encoded_bit: bit,
        n_psi_plus,
        n_psi_minus,
        n_ambiguous,
        decoded,
        category,
    })
}

/// Majority vote over the signature tallies of one block.
///
/// A strict majority decides the bit; equal nonzero counts are a tie the
/// receiver resolves by a recorded coin flip (half right on average); no
/// signatures at all leave the bit undecodable.
pub fn decide<R: Rng + ?Sized>(
    encoded_bit: bool,
    n_psi_plus: u64,
    n_psi_minus: u64,
    rng: &mut R,
) -> (Decoded, Category) {
    let decoded = if n_psi_plus + n_psi_minus == 0 {
        Decoded::NoClick
    } else if n_psi_plus > n_psi_minus {
        Decoded::Bit(false)
    } else if n_psi_minus > n_psi_plus {
        Decoded::Bit(true)
    } else {
        Decoded::Tie {
            guess: rng.random::<f64>() < 0.5,
        }
    };
    let category = match decoded {
        Decoded::NoClick => Category::NoClick,
        Decoded::Tie { .. } => Category::Tie,
        Decoded::Bit(b) if b == encoded_bit => Category::Correct,
        Decoded::Bit(_) => Category::Wrong,
    };
    (decoded, category)
}

/// Transmit a whole key; blocks run in parallel on independent substreams
/// keyed by bit index, so the outcome is a pure function of (key, config).
pub fn transmit_key(key: &[bool], config: &ProtocolConfig) -> Result<(TransmissionStats, Vec<BlockResult>)> {
    if key.is_empty() {
        return Err(Error::EmptyInput("key"));
    }
    config.validate()?;
    let results: Result<Vec<BlockResult>> = key
        .par_iter()
        .enumerate()
        .map(|(index, &bit)| {
            let mut rng = substream(config.seed, StreamKind::Block, index as u64);
            transmit_bit(bit, config, &mut rng)
        })
        .collect();
    let results = results?;
    let stats = aggregate(&results, config);
    Ok((stats, results))
}

fn aggregate(results: &[BlockResult], config: &ProtocolConfig) -> TransmissionStats {
    let n = results.len() as u64;
    let count = |cat: Category| results.iter().filter(|r| r.category == cat).count() as u64;
    let n_correct = count(Category::Correct);
    let n_no_click = count(Category::NoClick);
    let n_tie = count(Category::Tie);
    let n_wrong = count(Category::Wrong);
    let max_sig = results.iter().map(|r| r.signature_count()).max().unwrap_or(0);
    let mut hist = vec![0u64; (max_sig + 1) as usize];
    for r in results {
        hist[r.signature_count() as usize] += 1;
    }
    TransmissionStats {
        n_bits: n,
        n_correct,
        n_no_click,
        n_tie,
        n_wrong,
        fraction_correct: n_correct as f64 / n as f64,
        fraction_no_click: n_no_click as f64 / n as f64,
        fraction_tie: n_tie as f64 / n as f64,
        fraction_wrong: n_wrong as f64 / n as f64,
        qber_raw: qber(results, QberMode::Raw).ok(),
        qber_post: qber(results, QberMode::PostProcessed).ok(),
        key_rate_bits_per_s: config.key_rate_bits_per_s(),
        signature_count_hist: hist,
        control_runs: 0,
        control_mismatches: 0,
    }
}

/// Receiver-side key symbol: a decoded bit or an erasure (categories II/III).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeySymbol {
    Bit(bool),
    Erasure,
}

/// The decoded key with explicit erasures at undecodable positions.
pub fn decoded_key(results: &[BlockResult]) -> Vec<KeySymbol> {
    results
        .iter()
        .map(|r| match r.decoded {
            Decoded::Bit(b) => KeySymbol::Bit(b),
            _ => KeySymbol::Erasure,
        })
        .collect()
}

/// Outcome of one control-mode pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlOutcome {
    /// One click per side and the H/V outcomes anticorrelate.
    Pass,
    /// One click per side but equal polarizations: an eavesdropper marker.
    Mismatch,
    /// Zero or multiple detections on a side; compared only in aggregate.
    ClickAnomaly,
}

/// Full record of one control run, as published for the one-click test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRunRecord {
    pub alice_clicks: u32,
    pub bob_clicks: u32,
    pub outcome: ControlOutcome,
}

/// Simulate one control-mode pulse.
///
/// The travel photon skips the encoder and is measured in the H/V basis at
/// the far end; the home photon is routed deterministically by polarization
/// onto the local counters. Both publish their click counts and outcomes:
/// equal polarizations violate the pair's exact anticorrelation, and any side
/// with a click count other than one is flagged for the aggregate check.
///
/// Evaluated slots are those where the source fired: the pair number is drawn
/// conditioned on at least one emission, matching triggered coincidence
/// electronics that ignore empty pulses.
pub fn control_run<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    attack: &AttackModel,
    rng: &mut R,
) -> Result<ControlRunRecord> {
    let emission = sample_firing_emission(&config.source, rng)?;
    let mut alice_clicks = 0u32;
    let mut bob_clicks = 0u32;
    let mut alice_pol: Option<Polarization> = None;
    let mut bob_pol: Option<Polarization> = None;

    let travel_reach_prob = match attack {
        AttackModel::LossHiding { channel_transmission } => {
            config.source.eta1 * channel_transmission
        }
        _ => config.source.eta1,
    };

    for _ in 0..emission.n_pairs {
        let mut state = emission.state;
        if let AttackModel::InterceptResend { basis } = attack {
            let (_, post) = measure_travel(&state, *basis, rng);
            state = post;
        }
        // far-end z measurement of the travel photon
        let (travel_outcome, post) = measure_travel(&state, MeasBasis::Z, rng);
        if rng.random::<f64>() < travel_reach_prob {
            alice_clicks += 1;
            alice_pol = Some(if travel_outcome == 0 {
                Polarization::Horizontal
            } else {
                Polarization::Vertical
            });
        }
        // home photon measured locally through the analyzer's fixed routing
        let home = post.reduced_home();
        let home_outcome = measure_z(&home, rng);
        if rng.random::<f64>() < config.source.eta2 {
            bob_clicks += 1;
            bob_pol = Some(home_outcome);
        }
    }

    // probe photons injected through the encoder end up on the control
    // counters whenever they survive the mode filters
    if let AttackModel::TrojanHorse {
        probe_pass_prob,
        photons_per_probe,
    } = attack
    {
        for _ in 0..*photons_per_probe {
            if rng.random::<f64>() < probe_pass_prob * config.source.eta1 {
                alice_clicks += 1;
                // diagonal probe light reads as H or V with even odds
                alice_pol = Some(if rng.random::<f64>() < 0.5 {
                    Polarization::Horizontal
                } else {
                    Polarization::Vertical
                });
            }
        }
    }

    let outcome = if alice_clicks == 1 && bob_clicks == 1 {
        if alice_pol != bob_pol {
            ControlOutcome::Pass
        } else {
            ControlOutcome::Mismatch
        }
    } else {
        ControlOutcome::ClickAnomaly
    };
    Ok(ControlRunRecord {
        alice_clicks,
        bob_clicks,
        outcome,
    })
}

/// Pair emission conditioned on the source having fired.
fn sample_firing_emission<R: Rng + ?Sized>(
    source_params: &SourceParams,
    rng: &mut R,
) -> Result<PulseEmission> {
    if source_params.pair_prob <= 0.0 {
        return Err(Error::invalid_param(
            "pair_prob",
            "control runs need a firing source",
        ));
    }
    let p_two = source_params.p_two() / source_params.pair_prob;
    let n_pairs = if rng.random::<f64>() < p_two { 2 } else { 1 };
    Ok(PulseEmission {
        n_pairs,
        state: source_params.pair_state(),
    })
}

/// One-time-pad a message with a key: returns (ciphertext, recovered
/// message). Decryption reuses the same key, so with a faithful key the
/// round trip is the identity and with a faulty key the recovered message
/// differs exactly at the key-error positions.
pub fn otp_roundtrip(message: &[bool], key: &[bool]) -> Result<(Vec<bool>, Vec<bool>)> {
    if key.len() < message.len() {
        return Err(Error::KeyTooShort {
            key_len: key.len(),
            msg_len: message.len(),
        });
    }
    let ciphertext: Vec<bool> = message.iter().zip(key).map(|(m, k)| m ^ k).collect();
    let recovered: Vec<bool> = ciphertext.iter().zip(key).map(|(c, k)| c ^ k).collect();
    Ok((ciphertext, recovered))
}

/// Statistics of a confirmation-mode transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationStats {
    pub stats: TransmissionStats,
    /// Pump pulses consumed per bit on average.
    pub mean_pulses_per_bit: f64,
}

/// Transmit a key in confirmation mode: each bit keeps consuming pulses until
/// `target_coincidences` decodable signatures arrive (the receiver confirms
/// over the classical channel, abstracted as instantaneous). Empty blocks
/// cannot occur; the pulse budget per bit becomes a random variable instead.
///
/// `max_pulses_per_bit` caps the wait; a bit hitting the cap without any
/// signature is recorded as a no-click block rather than looping forever.
pub fn confirmation_mode_transmit(
    key: &[bool],
    config: &ProtocolConfig,
    target_coincidences: u64,
    max_pulses_per_bit: u64,
) -> Result<(ConfirmationStats, Vec<BlockResult>)> {
    if key.is_empty() {
        return Err(Error::EmptyInput("key"));
    }
    if target_coincidences == 0 {
        return Err(Error::invalid_param("target_coincidences", "must be >= 1"));
    }
    config.validate()?;
    let outcomes: Result<Vec<(BlockResult, u64)>> = key
        .par_iter()
        .enumerate()
        .map(|(index, &bit)| {
            let mut rng = substream(config.seed, StreamKind::Block, index as u64);
            confirmation_bit(bit, config, target_coincidences, max_pulses_per_bit, &mut rng)
        })
        .collect();
    let outcomes = outcomes?;
    let results: Vec<BlockResult> = outcomes.iter().map(|(r, _)| *r).collect();
    let total_pulses: u64 = outcomes.iter().map(|(_, p)| p).sum();
    let stats = aggregate(&results, config);
    Ok((
        ConfirmationStats {
            stats,
            mean_pulses_per_bit: total_pulses as f64 / key.len() as f64,
        },
        results,
    ))
}

fn confirmation_bit<R: Rng + ?Sized>(
    bit: bool,
    config: &ProtocolConfig,
    target: u64,
    max_pulses: u64,
    rng: &mut R,
) -> Result<(BlockResult, u64)> {
    let bsa_params = config.effective_bsa();
    let encoded = BellSign::from_bit(bit as u8);
    let pair_state = config.source.pair_state();
    let p_emit = config.source.pair_prob * config.r_control;
    let p_two_given_emit = if config.source.pair_prob > 0.0 {
        config.source.p_two() / config.source.pair_prob
    } else {
        0.0
    };

    let mut n_psi_plus = 0u64;
    let mut n_psi_minus = 0u64;
    let mut n_ambiguous = 0u64;
    let mut pulse = 0u64;
    while pulse < max_pulses && n_psi_plus + n_psi_minus < target {
        // jump straight to the next emitting message pulse
        let gap = geometric_gap(p_emit, rng);
        pulse = pulse.saturating_add(gap);
        if pulse > max_pulses {
            pulse = max_pulses;
            break;
        }
        let n_pairs = if rng.random::<f64>() < p_two_given_emit { 2 } else { 1 };
        let emission = PulseEmission {
            n_pairs,
            state: pair_state,
        };
        let clicks =
            bsa::generate_clicks(&emission, encoded, 1.0, &bsa_params, &config.source, rng)?;
        match bsa::classify_signature(&clicks, &bsa_params) {
            Signature::PsiPlus => n_psi_plus += 1,
            Signature::PsiMinus => n_psi_minus += 1,
            Signature::Ambiguous => n_ambiguous += 1,
            Signature::NoCoincidence => {}
        }
    }

    let (decoded, category) = decide(bit, n_psi_plus, n_psi_minus, rng);
    Ok((
        BlockResult {
            encoded_bit: bit,
            n_psi_plus,
            n_psi_minus,
            n_ambiguous,
            decoded,
            category,
        },
        pulse,
    ))
}

/// Pulses until the next emitting pulse, inclusive (geometric law).
fn geometric_gap<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return u64::MAX;
    }
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    let gap = (u.ln() / (1.0 - p).ln()).floor() as u64;
    gap.saturating_add(1)
}
