//! Human-readable summaries of transmission and attack records.

use pingpong_core::adversary::AttackReport;
use pingpong_core::protocol::TransmissionStats;

/// Category table plus rates, percentages to one decimal.
pub fn render_stats(stats: &TransmissionStats) -> String {
    if stats.n_bits == 0 {
        return "no bits transmitted\n".to_string();
    }
    let mut out = String::new();
    let pct = |f: f64| format!("{:5.1} %", f * 100.0);
    out.push_str(&format!("bits transmitted      {:>10}\n", stats.n_bits));
    out.push_str(&format!(
        "category I   correct          {}\n",
        pct(stats.fraction_correct)
    ));
    out.push_str(&format!(
        "category II  no coincidence   {}\n",
        pct(stats.fraction_no_click)
    ));
    out.push_str(&format!(
        "category III tie              {}\n",
        pct(stats.fraction_tie)
    ));
    out.push_str(&format!(
        "category IV  wrong            {}\n",
        pct(stats.fraction_wrong)
    ));
    match stats.qber_raw {
        Some(q) => out.push_str(&format!("QBER raw                      {}\n", pct(q))),
        None => out.push_str("QBER raw                      n/a (no decided bits)\n"),
    }
    match stats.qber_post {
        Some(q) => out.push_str(&format!("QBER post-processed           {}\n", pct(q))),
        None => out.push_str("QBER post-processed           n/a (no decided bits)\n"),
    }
    out.push_str(&format!(
        "key rate                      {:.0} bits/s\n",
        stats.key_rate_bits_per_s
    ));
    out.push_str("coincidences per block: ");
    let n = stats.n_bits as f64;
    let shown = stats.signature_count_hist.iter().take(7);
    for (k, &count) in shown.enumerate() {
        out.push_str(&format!("{k}:{:.1}% ", count as f64 / n * 100.0));
    }
    out.push('\n');
    out
}

/// Histogram comparison against a reference distribution, documenting the
/// per-bin deviation.
pub fn render_histogram_deviation(stats: &TransmissionStats, reference: &[f64]) -> String {
    if stats.n_bits == 0 {
        return "no bits transmitted\n".to_string();
    }
    let n = stats.n_bits as f64;
    let mut out = String::from("coincidences  simulated  reference  deviation\n");
    for (k, &target) in reference.iter().enumerate() {
        let sim = stats
            .signature_count_hist
            .get(k)
            .map(|&c| c as f64 / n)
            .unwrap_or(0.0);
        out.push_str(&format!(
            "{k:>12}  {:>8.1} %  {:>8.1} %  {:>+8.2}\n",
            sim * 100.0,
            target * 100.0,
            (sim - target) * 100.0
        ));
    }
    out
}

pub fn render_attack_report(report: &AttackReport) -> String {
    format!(
        "information per message bit   {:.4} bits\n\
         detection per control run     {:.1} %\n\
         double-click excess           {:+.4}\n",
        report.info_per_message_bit,
        report.detection_prob_per_control_run * 100.0,
        report.double_click_excess
    )
}
