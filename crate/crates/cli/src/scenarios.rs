//! Scenario execution and file emission.

use std::path::Path;

use anyhow::{Context, Result};
use pingpong_core::adversary::{self, AttackModel};
use pingpong_core::bsa::{self, CurveChannel};
use pingpong_core::protocol::{
    confirmation_mode_transmit, control_run, decoded_key, transmit_key, Category, ControlOutcome,
    TransmissionStats,
};
use pingpong_core::quantum::apply_pockels;
use pingpong_core::rng::{substream, StreamKind};
use rand::Rng;
use serde::Serialize;

use crate::calibrate::{self, random_key};
use crate::config::{Scenario, ScenarioConfig};
use crate::logo;
use crate::output;
use crate::report;

/// Run the configured scenario inside a worker pool of the requested size;
/// returns the one-line summary for stdout.
pub fn run_scenario(config: &ScenarioConfig) -> Result<String> {
    let mut config = config.clone();
    config.normalize()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .context("building worker pool")?;
    pool.install(|| dispatch(&config))
}

fn dispatch(config: &ScenarioConfig) -> Result<String> {
    match config.scenario {
        Scenario::Transmit => run_transmit(config),
        Scenario::Homscan => run_homscan(config),
        Scenario::Control => run_control(config),
        Scenario::Attack => run_attack(config),
        Scenario::Otp => run_otp(config),
        Scenario::Calibrate => run_calibrate(config),
    }
}

/// Config echo for emitted files: output location and worker count are
/// runtime plumbing with no effect on results, normalized away so identical
/// runs emit identical bytes wherever and however parallel they ran.
fn echo(config: &ScenarioConfig) -> ScenarioConfig {
    let mut echo = config.clone();
    echo.out_dir = Path::new(".").to_path_buf();
    echo.workers = 0;
    echo
}

#[derive(Serialize)]
struct StatsFile<'a> {
    schema: &'static str,
    config: &'a ScenarioConfig,
    stats: &'a TransmissionStats,
    /// Positions the receiver could not decode (categories II and III),
    /// listed so post-processing is reproducible.
    erasure_positions: Vec<u64>,
    mean_pulses_per_bit: Option<f64>,
}

fn run_transmit(config: &ScenarioConfig) -> Result<String> {
    let echo_cfg = echo(config);
    let key = random_key(config.n_bits, config.seed);
    let (stats, results, mean_pulses) = match config.confirmation_target {
        Some(target) => {
            let cap = config.protocol.pulses_per_bit.saturating_mul(1000).max(1_000_000);
            let (conf, results) =
                confirmation_mode_transmit(&key, &config.protocol, target, cap)?;
            (conf.stats, results, Some(conf.mean_pulses_per_bit))
        }
        None => {
            let (stats, results) = transmit_key(&key, &config.protocol)?;
            (stats, results, None)
        }
    };

    let erasures: Vec<u64> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.category, Category::NoClick | Category::Tie))
        .map(|(i, _)| i as u64)
        .collect();

    let out = &config.out_dir;
    output::write_json(
        &out.join("stats.json"),
        &StatsFile {
            schema: "pingpong-stats/1",
            config: &echo_cfg,
            stats: &stats,
            erasure_positions: erasures,
            mean_pulses_per_bit: mean_pulses,
        },
    )?;
    output::write_plain_bits(&out.join("key_sent.bits"), &key)?;
    output::write_key_bits(&out.join("key.bits"), &decoded_key(&results))?;

    print!("{}", report::render_stats(&stats));
    Ok(format!(
        "transmit: {} bits, key rate {:.0} bits/s, QBER post {} -> {}",
        stats.n_bits,
        stats.key_rate_bits_per_s,
        stats
            .qber_post
            .map(|q| format!("{:.1}%", q * 100.0))
            .unwrap_or_else(|| "n/a".into()),
        out.join("stats.json").display()
    ))
}

#[derive(Serialize)]
struct HomscanFile<'a> {
    schema: &'static str,
    config: &'a ScenarioConfig,
    equal_contrast_plain: f64,
    delayed_contrast_encoded: f64,
    half_base_um: f64,
}

fn run_homscan(config: &ScenarioConfig) -> Result<String> {
    let echo_cfg = echo(config);
    let positions = config.homscan.positions()?;
    let source = &config.protocol.source;
    let bsa_params = config.protocol.effective_bsa();
    let plain = source.pair_state();
    let encoded = apply_pockels(&plain, true);

    let curve_plain = bsa::hom_curve(&plain, &positions, &bsa_params, source)?;
    let curve_encoded = bsa::hom_curve(&encoded, &positions, &bsa_params, source)?;

    let out = &config.out_dir;
    output::write_homcurve_csv(&out.join("homcurve.csv"), &curve_plain)?;
    output::write_homcurve_csv(&out.join("homcurve_pockels.csv"), &curve_encoded)?;

    let v_plus = bsa::contrast(&curve_plain, CurveChannel::Equal)?;
    let v_minus = bsa::contrast(&curve_encoded, CurveChannel::Delayed)?;
    let half_base = bsa::overlap_half_base_um(source.coherence_time_fs);
    output::write_json(
        &out.join("homscan.json"),
        &HomscanFile {
            schema: "pingpong-homscan/1",
            config: &echo_cfg,
            equal_contrast_plain: v_plus,
            delayed_contrast_encoded: v_minus,
            half_base_um: half_base,
        },
    )?;
    Ok(format!(
        "homscan: {} points, V+ {:.3}, V- {:.3}, half base {:.1} um -> {}",
        positions.len(),
        v_plus,
        v_minus,
        half_base,
        out.join("homcurve.csv").display()
    ))
}

#[derive(Serialize)]
struct ControlFile<'a> {
    schema: &'static str,
    config: &'a ScenarioConfig,
    runs: u64,
    passes: u64,
    mismatches: u64,
    click_anomalies: u64,
    mismatch_rate_valid: Option<f64>,
    one_click: adversary::OneClickVerdict,
}

fn run_control(config: &ScenarioConfig) -> Result<String> {
    let echo_cfg = echo(config);
    let mut records = Vec::with_capacity(config.n_runs as usize);
    let mut passes = 0u64;
    let mut mismatches = 0u64;
    let mut anomalies = 0u64;
    for i in 0..config.n_runs {
        let mut rng = substream(config.seed, StreamKind::ControlRun, i);
        let record = control_run(&config.protocol, &config.attack, &mut rng)?;
        match record.outcome {
            ControlOutcome::Pass => passes += 1,
            ControlOutcome::Mismatch => mismatches += 1,
            ControlOutcome::ClickAnomaly => anomalies += 1,
        }
        records.push(record);
    }
    let verdict = adversary::one_click_check(&records, &config.protocol)?;
    let valid = passes + mismatches;
    let mismatch_rate = (valid > 0).then(|| mismatches as f64 / valid as f64);

    let out = &config.out_dir;
    output::write_json(
        &out.join("control.json"),
        &ControlFile {
            schema: "pingpong-control/1",
            config: &echo_cfg,
            runs: config.n_runs,
            passes,
            mismatches,
            click_anomalies: anomalies,
            mismatch_rate_valid: mismatch_rate,
            one_click: verdict,
        },
    )?;
    Ok(format!(
        "control: {} runs, mismatch rate {}, one-click alarm {} -> {}",
        config.n_runs,
        mismatch_rate
            .map(|r| format!("{:.1}%", r * 100.0))
            .unwrap_or_else(|| "n/a".into()),
        if verdict.alarm { "RAISED" } else { "quiet" },
        out.join("control.json").display()
    ))
}

#[derive(Serialize)]
struct AttackFile<'a> {
    schema: &'static str,
    config: &'a ScenarioConfig,
    report: adversary::AttackReport,
    loss_hiding: Option<LossHidingDetail>,
}

#[derive(Serialize)]
struct LossHidingDetail {
    channel_transmission: f64,
    feasible: bool,
    margin: f64,
}

fn run_attack(config: &ScenarioConfig) -> Result<String> {
    let echo_cfg = echo(config);
    let report = adversary::run_attack(&config.attack, config.n_runs, &config.protocol, config.seed)?;
    let loss_hiding = match config.attack {
        AttackModel::LossHiding { channel_transmission } => {
            let (feasible, margin) = adversary::loss_hiding_feasible(channel_transmission)?;
            Some(LossHidingDetail {
                channel_transmission,
                feasible,
                margin,
            })
        }
        _ => None,
    };
    let out = &config.out_dir;
    output::write_json(
        &out.join("attack.json"),
        &AttackFile {
            schema: "pingpong-attack/1",
            config: &echo_cfg,
            report,
            loss_hiding,
        },
    )?;
    print!("{}", report::render_attack_report(&report));
    Ok(format!(
        "attack: info {:.3} bits/bit, detection {:.1}%/run -> {}",
        report.info_per_message_bit,
        report.detection_prob_per_control_run * 100.0,
        out.join("attack.json").display()
    ))
}

#[derive(Serialize)]
struct OtpFile<'a> {
    schema: &'static str,
    config: &'a ScenarioConfig,
    message_bits: u64,
    key_errors: u64,
    erasure_fills: u64,
    message_errors: u64,
    error_rate: f64,
    stats: TransmissionStats,
}

fn run_otp(config: &ScenarioConfig) -> Result<String> {
    let echo_cfg = echo(config);
    let message = logo::logo_bits();
    let key_alice = random_key(message.len() as u64, config.seed);
    let (stats, results) = transmit_key(&key_alice, &config.protocol)?;

    // receiver's raw key: decoded values, tie guesses, erasures filled with
    // seeded coin flips (no post-processing takes place)
    let mut fill_rng = substream(config.seed, StreamKind::Scenario, 1);
    let mut erasure_fills = 0u64;
    let key_bob: Vec<bool> = results
        .iter()
        .map(|r| {
            r.raw_value().unwrap_or_else(|| {
                erasure_fills += 1;
                fill_rng.random::<f64>() < 0.5
            })
        })
        .collect();
    let key_errors = key_bob
        .iter()
        .zip(&key_alice)
        .filter(|(a, b)| a != b)
        .count() as u64;

    let (ciphertext, _) = pingpong_core::protocol::otp_roundtrip(&message, &key_alice)?;
    let recovered: Vec<bool> = ciphertext.iter().zip(&key_bob).map(|(c, k)| c ^ k).collect();
    let message_errors = recovered
        .iter()
        .zip(&message)
        .filter(|(a, b)| a != b)
        .count() as u64;

    let out = &config.out_dir;
    output::write_pbm(&out.join("message.pbm"), &message, logo::LOGO_WIDTH)?;
    output::write_pbm(&out.join("recovered.pbm"), &recovered, logo::LOGO_WIDTH)?;
    output::write_plain_bits(&out.join("cipher.bits"), &ciphertext)?;
    output::write_key_bits(&out.join("key.bits"), &decoded_key(&results))?;
    output::write_json(
        &out.join("otp.json"),
        &OtpFile {
            schema: "pingpong-otp/1",
            config: &echo_cfg,
            message_bits: message.len() as u64,
            key_errors,
            erasure_fills,
            message_errors,
            error_rate: message_errors as f64 / message.len() as f64,
            stats,
        },
    )?;
    Ok(format!(
        "otp: {} message bits, {} wrong after decryption ({:.2}%) -> {}",
        message.len(),
        message_errors,
        message_errors as f64 / message.len() as f64 * 100.0,
        out.join("otp.json").display()
    ))
}

#[derive(Serialize)]
struct CalibrationFile<'a> {
    schema: &'static str,
    config: &'a ScenarioConfig,
    result: &'a calibrate::CalibrationResult,
}

fn run_calibrate(config: &ScenarioConfig) -> Result<String> {
    let echo_cfg = echo(config);
    let (_, result) = calibrate::calibrate(&config.targets, &config.protocol)?;
    let out = &config.out_dir;
    output::write_json(
        &out.join("calibration.json"),
        &CalibrationFile {
            schema: "pingpong-calibration/1",
            config: &echo_cfg,
            result: &result,
        },
    )?;
    print!(
        "{}",
        report::render_histogram_deviation(&result.check_stats, &config.targets.coincidence_histogram)
    );
    Ok(format!(
        "calibrate: pair_prob {:.5e}, alignment {:.3}, mixture {:.3}, max residual {:.3} -> {}",
        result.pair_prob,
        result.detour_alignment,
        result.mixture_m,
        result.residuals.max_abs(),
        out.join("calibration.json").display()
    ))
}

/// Convenience for tests: run in a temp dir and return emitted file bytes.
pub fn emitted_files(config: &ScenarioConfig, names: &[&str]) -> Result<Vec<Vec<u8>>> {
    run_scenario(config)?;
    names
        .iter()
        .map(|name| {
            std::fs::read(Path::new(&config.out_dir).join(name))
                .with_context(|| format!("reading emitted {name}"))
        })
        .collect()
}
