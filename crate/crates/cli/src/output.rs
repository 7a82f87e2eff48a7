//! File emission helpers: JSON, bit strings and curve CSVs.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use pingpong_core::bsa::HomCurvePoint;
use pingpong_core::protocol::KeySymbol;
use serde::Serialize;

/// Render with six significant digits, plain notation for moderate exponents.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// ASCII key file: `0`/`1` per decoded bit, `e` per erasure, one line.
pub fn write_key_bits(path: &Path, symbols: &[KeySymbol]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = String::with_capacity(symbols.len() + 1);
    for s in symbols {
        text.push(match s {
            KeySymbol::Bit(false) => '0',
            KeySymbol::Bit(true) => '1',
            KeySymbol::Erasure => 'e',
        });
    }
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_plain_bits(path: &Path, bits: &[bool]) -> Result<()> {
    let symbols: Vec<KeySymbol> = bits.iter().map(|&b| KeySymbol::Bit(b)).collect();
    write_key_bits(path, &symbols)
}

/// Interference-scan CSV, `stage_um,p_equal,p_delayed`, six significant
/// digits per value.
pub fn write_homcurve_csv(path: &Path, curve: &[HomCurvePoint]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = String::from("stage_um,p_equal,p_delayed\n");
    for p in curve {
        text.push_str(&format!(
            "{},{},{}\n",
            sig6(p.stage_um),
            sig6(p.p_equal),
            sig6(p.p_delayed)
        ));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Portable bitmap (P1) for the one-time-pad demonstration images.
pub fn write_pbm(path: &Path, bits: &[bool], width: usize) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let height = bits.len().div_ceil(width);
    let mut text = format!("P1\n{width} {height}\n");
    for (i, &bit) in bits.iter().enumerate() {
        text.push(if bit { '1' } else { '0' });
        text.push(if (i + 1) % width == 0 { '\n' } else { ' ' });
    }
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formats() {
        assert_eq!(sig6(0.842630), "0.842630");
        assert_eq!(sig6(-60.0), "-60.0000");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(4250.0), "4250.00");
        assert_eq!(sig6(1.0e-7), "1.00000e-7");
    }
}
