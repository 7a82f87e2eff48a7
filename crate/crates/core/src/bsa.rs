//! Bell-state analyzer: two-photon interference at a lossy asymmetric beam
//! splitter, detour-path timing, click generation and signature windows.
//!
//! Home and travel photon meet at the beam splitter. The symmetric Bell
//! component bunches (both photons leave through one port), the antisymmetric
//! component antibunches (one photon per port). One output port feeds the
//! polarizing beam splitter directly, the other takes a detour whose extra
//! path length delays its photon by a fixed time. A bunched pair therefore
//! produces two simultaneous clicks, an antibunched pair two clicks separated
//! by the detour delay, and the two Bell states map onto two disjoint timing
//! windows of the same detector pair.
//!
//! Imperfections modeled here: splitter asymmetry and loss, partial temporal
//! overlap of the photons (translation-stage offset against the biphoton
//! coherence length), alignment of the detour path, detector timing jitter,
//! and occasional channel desynchronization that throws a click far out of
//! its slot.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{apply_pockels, BellSign, TwoQubitState, HV, VH};
use crate::source::{PulseEmission, SourceParams};

/// Speed of light in micrometers per femtosecond.
const C_UM_PER_FS: f64 = 0.299_792_458;

/// Nominal detection latency after the pulse clock, ns. Keeps time tags
/// positive under jitter; all classification works on differences.
const BASE_TIME_NS: f64 = 10.0;

/// Temporal-overlap kernel shape (how interference decays with path offset).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKernel {
    /// Triangular kernel with half-base `c * coherence_time / 2`; the
    /// standard result for a rectangular down-conversion spectrum.
    #[default]
    Triangular,
    /// Gaussian with the same full width at half maximum, for sensitivity
    /// checks.
    Gaussian,
}

/// Beam-splitter, timing and detour parameters of the analyzer.
///
/// Detection efficiency is not a field here: it bundles all channel losses
/// and lives in [`SourceParams`] (`eta1`, `eta2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BsaParams {
    /// Beam-splitter transmittance.
    pub transmittance: f64,
    /// Beam-splitter reflectance.
    pub reflectance: f64,
    /// Beam-splitter loss; T + R + loss = 1.
    pub bs_loss: f64,
    /// Extra propagation time of the detour output path, ns.
    pub detour_delay_ns: f64,
    /// Half width of each acceptance window, ns.
    pub window_half_width_ns: f64,
    /// Alignment quality of the detour path in [0,1]; degrades the
    /// interference of the antisymmetric component, whose signature
    /// coincidences traverse the detour. Default calibrated so the delayed
    /// channel contrast of the encoded antisymmetric state is 0.73.
    pub detour_alignment: f64,
    /// Per-coincidence probability of a channel desynchronization throwing
    /// one click out of its slot.
    pub sync_error_prob: f64,
    /// Interference-decay kernel for stage scans.
    pub overlap_kernel: OverlapKernel,
}

impl Default for BsaParams {
    fn default() -> Self {
        BsaParams {
            transmittance: 0.37,
            reflectance: 0.57,
            bs_loss: 0.06,
            detour_delay_ns: 5.7,
            window_half_width_ns: 1.5,
            detour_alignment: 0.771_180,
            sync_error_prob: 0.02,
            overlap_kernel: OverlapKernel::Triangular,
        }
    }
}

impl BsaParams {
    pub fn validate(&self) -> Result<()> {
        let sum = self.transmittance + self.reflectance + self.bs_loss;
        if (sum - 1.0).abs() >= 1e-9 {
            return Err(Error::invalid_param(
                "bs_loss",
                format!("T + R + loss = {sum}, must be 1"),
            ));
        }
        if self.transmittance < 0.0 || self.reflectance < 0.0 || self.bs_loss < 0.0 {
            return Err(Error::invalid_param(
                "transmittance",
                "T, R and loss must be nonnegative",
            ));
        }
        if !self.window_half_width_ns.is_finite() || self.window_half_width_ns <= 0.0 {
            return Err(Error::invalid_param(
                "window_half_width_ns",
                "must be positive",
            ));
        }
        if self.detour_delay_ns <= 2.0 * self.window_half_width_ns {
            return Err(Error::invalid_param(
                "detour_delay_ns",
                "windows overlap: delay must exceed twice the window half width",
            ));
        }
        for (name, v) in [
            ("detour_alignment", self.detour_alignment),
            ("sync_error_prob", self.sync_error_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid_param(
                    name,
                    format!("must be in [0,1], got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Timing jitter sigma per click (a third of the window half width, so
    /// in-window classification succeeds for essentially all clean events).
    pub fn jitter_sigma_ns(&self) -> f64 {
        self.window_half_width_ns / 3.0
    }

    /// Probability that both photons of a pair survive the splitter.
    pub fn pair_survival(&self) -> f64 {
        let tr = self.transmittance + self.reflectance;
        tr * tr
    }
}

/// The two single-photon counters behind the polarizing beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
}

/// A time-tagged detection event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub detector: Detector,
    /// Nanoseconds relative to the pulse clock; nonnegative.
    pub time_tag_ns: f64,
    /// Index of the originating pump pulse within its block.
    pub pulse_index: u64,
}

/// Classification of the click pattern of one pulse window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    /// Both detectors fired inside the common slot: symmetric Bell state.
    PsiPlus,
    /// Both fired, separated by the detour delay: antisymmetric Bell state.
    PsiMinus,
    /// At least one detector stayed silent.
    NoCoincidence,
    /// Double clicks or a time difference outside both windows.
    Ambiguous,
}

/// One sample of a translation-stage interference scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomCurvePoint {
    pub stage_um: f64,
    /// Coincidence probability at equal detection times.
    pub p_equal: f64,
    /// Coincidence probability at detour-delayed detection times.
    pub p_delayed: f64,
}

/// Which coincidence channel of a scan to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveChannel {
    Equal,
    Delayed,
}

/// Temporal overlap of the two photons for a stage offset `delta_path_um`,
/// triangular kernel: `max(0, 1 - |dx| / w)` with `w = c * coherence_time / 2`.
pub fn temporal_overlap(delta_path_um: f64, coherence_time_fs: f64) -> f64 {
    assert!(coherence_time_fs > 0.0, "coherence time must be positive");
    let w = C_UM_PER_FS * coherence_time_fs / 2.0;
    (1.0 - delta_path_um.abs() / w).max(0.0)
}

/// Overlap under the configured kernel.
pub fn overlap_with_kernel(
    kernel: OverlapKernel,
    delta_path_um: f64,
    coherence_time_fs: f64,
) -> f64 {
    match kernel {
        OverlapKernel::Triangular => temporal_overlap(delta_path_um, coherence_time_fs),
        OverlapKernel::Gaussian => {
            let w = C_UM_PER_FS * coherence_time_fs / 2.0;
            let x = delta_path_um / w;
            (-4.0 * std::f64::consts::LN_2 * x * x).exp()
        }
    }
}

/// Half-base width of the triangular interference feature, micrometers.
pub fn overlap_half_base_um(coherence_time_fs: f64) -> f64 {
    C_UM_PER_FS * coherence_time_fs / 2.0
}

/// Same-port and split-port coincidence probabilities for one photon pair
/// entering the splitter.
///
/// The state's `{|HV>, |VH>}` block decomposes into a coherent symmetric
/// part (bunching), a coherent antisymmetric part (antibunching) and an
/// incoherent remainder that interferes not at all; only the signed coherence
/// `Re rho[HV][VH]` distinguishes them. The detour-alignment factor degrades
/// the antisymmetric interference term. Splitter loss is included, so
/// `p_same + p_split = (T + R)^2 <= 1`, with equality for a lossless splitter.
pub fn coincidence_probs(
    state: &TwoQubitState,
    chi: f64,
    bsa: &BsaParams,
) -> Result<(f64, f64)> {
    let weight = state.hv_pair_weight();
    if weight <= 1e-12 {
        return Err(Error::EmptyHvSubspace);
    }
    let coherence = state.element(HV, VH).re;
    let mut kappa = 2.0 * coherence / weight;
    if kappa < 0.0 {
        kappa *= bsa.detour_alignment;
    }
    let t = self_product(bsa.transmittance);
    let r = self_product(bsa.reflectance);
    let two_tr = 2.0 * bsa.transmittance * bsa.reflectance;
    let interference = two_tr * kappa * chi.clamp(0.0, 1.0);
    let p_same = two_tr + interference;
    let p_split = t + r - interference;
    Ok((p_same, p_split))
}

fn self_product(x: f64) -> f64 {
    x * x
}

/// Stage scan of the two coincidence channels.
///
/// Bunched pairs leave through one port together and reach the counters
/// simultaneously, so the same-port probability shows up in the equal-time
/// channel; split pairs put one photon on the detour, so the split-port
/// probability appears in the delayed channel.
pub fn hom_curve(
    state: &TwoQubitState,
    positions_um: &[f64],
    bsa: &BsaParams,
    source: &SourceParams,
) -> Result<Vec<HomCurvePoint>> {
    if positions_um.is_empty() {
        return Err(Error::EmptyInput("positions"));
    }
    positions_um
        .iter()
        .map(|&x| {
            let chi = overlap_with_kernel(bsa.overlap_kernel, x, source.coherence_time_fs);
            let (p_equal, p_delayed) = coincidence_probs(state, chi, bsa)?;
            Ok(HomCurvePoint {
                stage_um: x,
                p_equal,
                p_delayed,
            })
        })
        .collect()
}

/// Detector clicks produced by one pump pulse.
///
/// Per pair: joint detection thinning with `eta1 * eta2`, then port sampling
/// from [`coincidence_probs`]; surviving pairs yield one click per detector,
/// simultaneous for same-port events and detour-delayed for split-port
/// events, with Gaussian timing jitter. With probability `sync_error_prob`
/// one click of a coincidence is thrown out of its slot by a uniform shift of
/// 2 to 10 window widths. Clicks of a double-pair pulse are merged.
pub fn generate_clicks<R: Rng + ?Sized>(
    emission: &PulseEmission,
    encoded: BellSign,
    chi: f64,
    bsa: &BsaParams,
    source: &SourceParams,
    rng: &mut R,
) -> Result<Vec<ClickEvent>> {
    let mut clicks = Vec::new();
    if emission.n_pairs == 0 {
        return Ok(clicks);
    }
    let state = apply_pockels(&emission.state, encoded == BellSign::Minus);
    let (p_same, p_split) = coincidence_probs(&state, chi, bsa)?;
    let jitter = Normal::new(0.0, bsa.jitter_sigma_ns()).expect("positive sigma");
    let joint_eta = source.eta1 * source.eta2;

    for _ in 0..emission.n_pairs {
        if rng.random::<f64>() >= joint_eta {
            continue;
        }
        let u: f64 = rng.random();
        let (mut t1, mut t2) = if u < p_same {
            (BASE_TIME_NS, BASE_TIME_NS)
        } else if u < p_same + p_split {
            // the detour photon is the delayed one; which detector it ends on
            // depends on its polarization, even odds in the H/V-pair subspace
            if rng.random::<f64>() < 0.5 {
                (BASE_TIME_NS, BASE_TIME_NS + bsa.detour_delay_ns)
            } else {
                (BASE_TIME_NS + bsa.detour_delay_ns, BASE_TIME_NS)
            }
        } else {
            continue; // photon lost at the splitter
        };
        t1 += jitter.sample(rng);
        t2 += jitter.sample(rng);
        if rng.random::<f64>() < bsa.sync_error_prob {
            let w = bsa.window_half_width_ns;
            let shift = rng.random_range(2.0 * w..10.0 * w);
            if rng.random::<f64>() < 0.5 {
                t1 += shift;
            } else {
                t2 += shift;
            }
        }
        clicks.push(ClickEvent {
            detector: Detector::D1,
            time_tag_ns: t1.max(0.0),
            pulse_index: 0,
        });
        clicks.push(ClickEvent {
            detector: Detector::D2,
            time_tag_ns: t2.max(0.0),
            pulse_index: 0,
        });
    }
    Ok(clicks)
}

/// Classify the clicks of one pulse window.
///
/// Exactly one click per detector is required for a signature: a time
/// difference inside the common slot reads as the symmetric state, inside the
/// delayed slot as the antisymmetric state. A silent detector means no
/// coincidence; double clicks or an out-of-window difference are ambiguous.
pub fn classify_signature(clicks: &[ClickEvent], bsa: &BsaParams) -> Signature {
    let mut d1 = heapless_times();
    let mut d2 = heapless_times();
    for click in clicks {
        match click.detector {
            Detector::D1 => d1.push(click.time_tag_ns),
            Detector::D2 => d2.push(click.time_tag_ns),
        }
    }
    if d1.is_empty() || d2.is_empty() {
        return Signature::NoCoincidence;
    }
    if d1.len() != 1 || d2.len() != 1 {
        return Signature::Ambiguous;
    }
    let dt = (d1[0] - d2[0]).abs();
    let w = bsa.window_half_width_ns;
    if dt <= w {
        Signature::PsiPlus
    } else if (dt - bsa.detour_delay_ns).abs() <= w {
        Signature::PsiMinus
    } else {
        Signature::Ambiguous
    }
}

fn heapless_times() -> Vec<f64> {
    Vec::with_capacity(2)
}

/// Interference contrast between the two coincidence channels,
/// `(max - min) / (max + min)`, evaluated where the selected channel
/// separates most from the other (the zero-delay point of a full scan).
/// The sign is positive when the selected channel dominates there.
pub fn contrast(curve: &[HomCurvePoint], channel: CurveChannel) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyInput("curve"));
    }
    let point = curve
        .iter()
        .max_by(|a, b| {
            let sa = (a.p_equal - a.p_delayed).abs();
            let sb = (b.p_equal - b.p_delayed).abs();
            sa.partial_cmp(&sb).expect("finite probabilities")
        })
        .expect("nonempty curve");
    let (sel, other) = match channel {
        CurveChannel::Equal => (point.p_equal, point.p_delayed),
        CurveChannel::Delayed => (point.p_delayed, point.p_equal),
    };
    let sum = sel + other;
    if sum <= 0.0 {
        return Err(Error::invalid_param(
            "curve",
            "both channels vanish at the evaluation point",
        ));
    }
    Ok((sel - other) / sum)
}

/// Closed-form probability that one pump pulse yields exactly one decodable
/// signature, including detection thinning, splitter loss, window pass rate
/// under jitter, and desynchronization survival. Independent of the encoded
/// bit. Used to calibrate the source rate; the Monte Carlo path is tested
/// against it.
pub fn signature_prob_per_pulse(source: &SourceParams, bsa: &BsaParams) -> f64 {
    let d_pair = source.eta1 * source.eta2 * bsa.pair_survival();
    // time difference of two jittered clicks: N(0, 2 sigma^2)
    let sigma = bsa.jitter_sigma_ns();
    let window_pass = erf(bsa.window_half_width_ns / (2.0 * sigma));
    // a desynchronized click re-lands in a valid window a quarter of the time
    let s = bsa.sync_error_prob;
    let sync_survival = (1.0 - s) + 0.25 * s;
    let per_pair = d_pair * window_pass * sync_survival;
    // double-pair pulses decode only when exactly one pair produces clicks
    source.p_one() * per_pair + source.p_two() * 2.0 * (1.0 - d_pair) * per_pair
}

/// Mixture fraction reproducing a given equal-channel contrast of the
/// symmetric state at full overlap (analytic inversion).
pub fn mixture_for_equal_contrast(v_plus: f64, bsa: &BsaParams) -> Result<f64> {
    let (t, r) = (bsa.transmittance, bsa.reflectance);
    let kappa = (v_plus * (t + r) * (t + r) + (t - r) * (t - r)) / (4.0 * t * r);
    let m = 1.0 - kappa;
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::TargetUnreachable(format!(
            "contrast {v_plus} implies mixture {m} outside [0,1]"
        )));
    }
    Ok(m)
}

/// Detour alignment reproducing a given delayed-channel contrast of the
/// antisymmetric state at full overlap (analytic inversion).
pub fn alignment_for_delayed_contrast(v_minus: f64, mixture_m: f64, bsa: &BsaParams) -> Result<f64> {
    let (t, r) = (bsa.transmittance, bsa.reflectance);
    let kappa = 1.0 - mixture_m;
    if kappa <= 0.0 {
        return Err(Error::invalid_param("mixture_m", "no coherence left"));
    }
    let mu = (v_minus * (t + r) * (t + r) - (t - r) * (t - r)) / (4.0 * t * r * kappa);
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::TargetUnreachable(format!(
            "contrast {v_minus} implies alignment {mu} outside [0,1]"
        )));
    }
    Ok(mu)
}

/// Error function, Abramowitz & Stegun 7.1.26 (|error| < 1.5e-7); ample for
/// rate estimates checked at the percent level.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}
