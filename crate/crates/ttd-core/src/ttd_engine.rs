//! Behavioral model of the device under test: delay-tap design for both
//! operating modes, tap quantization, hardware-impairment knobs, and the
//! delay-and-sum combiner.
//!
//! The combiner realizes the conjugate antenna weights, i.e. element `n` of a
//! tone at frequency `f_ref + nu` is multiplied by `exp(+j 2 pi (f_ref + nu) tau_n)`
//! before summing, so the combined output measures `|w^H a|^2` with the sign
//! convention of [`crate::array_model`]. In hardware this is the same as
//! delaying every other branch by `tau_max - tau_n` plus a common shift, which
//! no power metric can see.
//!
//! `rf_ref` selects the frequency reference of the weights: `0` applies them at
//! baseband offsets (beam-training mode, where the frequency-to-angle mapping
//! is defined), `f_c` applies carrier-referenced true time delay
//! (communications mode, where the beam must steer at the carrier).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::array_model::{cis, ArrayConfig, DelayProfile};
use crate::channel::{propagate, ChannelModel, ChannelScenario};
use crate::signal_core::{bin_freq, fractional_delay, MultichannelSignal};
use crate::{Error, Result};

/// Operating mode of the delay taps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TtdMode {
    /// Beam training over a signal bandwidth: `tau_n = (n-1)/bw`.
    Training { bw: f64 },
    /// Squint-free communication toward `theta`: `tau_n = (n-1) d sin(theta) / c`.
    Comms { theta: f64 },
}

/// Behavioral hardware knobs. `Default` disables everything.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentConfig {
    /// Delay LSB in seconds (0 = ideal continuous).
    pub delay_resolution: f64,
    /// Maximum realizable delay in seconds (0 = unlimited).
    pub delay_range: f64,
    /// Single-pole low-pass cutoff in Hz (0 = off).
    pub analog_bw: f64,
    /// Output-buffer loss in dB, >= 0.
    pub buffer_loss_db: f64,
    /// Number of time-interleaved lanes, >= 1.
    pub interleave_factor: usize,
    /// Relative std-dev of per-lane gain mismatch.
    pub lane_gain_sigma: f64,
    /// Absolute std-dev of per-lane additive offset.
    pub lane_offset_sigma: f64,
    pub seed: u64,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            delay_resolution: 0.0,
            delay_range: 0.0,
            analog_bw: 0.0,
            buffer_loss_db: 0.0,
            interleave_factor: 1,
            lane_gain_sigma: 0.0,
            lane_offset_sigma: 0.0,
            seed: 0,
        }
    }
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.delay_resolution,
            self.delay_range,
            self.analog_bw,
            self.buffer_loss_db,
            self.lane_gain_sigma,
            self.lane_offset_sigma,
        ];
        if fields.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidConfig(
                "impairment fields must be finite and >= 0",
            ));
        }
        if self.interleave_factor < 1 {
            return Err(Error::InvalidConfig("interleave_factor must be >= 1"));
        }
        Ok(())
    }
}

/// Exact (unquantized) delay taps for the given mode.
///
/// For `Comms` with negative theta a uniform offset of `(N-1) d |sin(theta)| / c`
/// makes all taps nonnegative; a common delay cannot change `|w^H a|^2`.
pub fn design_taps(mode: TtdMode, cfg: &ArrayConfig) -> Result<DelayProfile> {
    let n = cfg.num_elements;
    let taps: Vec<f64> = match mode {
        TtdMode::Training { bw } => {
            if !bw.is_finite() || bw <= 0.0 {
                return Err(Error::InvalidConfig("training bandwidth must be > 0"));
            }
            (0..n).map(|i| i as f64 / bw).collect()
        }
        TtdMode::Comms { theta } => {
            if !theta.is_finite() {
                return Err(Error::NonFinite("theta"));
            }
            if libm::fabs(theta) > core::f64::consts::FRAC_PI_2 {
                return Err(Error::AngleOutOfRange(theta));
            }
            let step = cfg.element_spacing * libm::sin(theta) / cfg.wave_speed;
            let offset = if step < 0.0 {
                -(n as f64 - 1.0) * step
            } else {
                0.0
            };
            (0..n).map(|i| i as f64 * step + offset).collect()
        }
    };
    DelayProfile::ideal(taps)
}

/// Result of quantizing a tap profile: the realizable taps plus the ideal
/// request, with a flag if any tap had to be clamped to the delay range.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTaps {
    pub profile: DelayProfile,
    pub ideal: Vec<f64>,
    pub clamped: bool,
}

/// Round to nearest with ties to even, tolerating floating-point dust around
/// exact half-LSB ties (e.g. 3.75 ns / 0.1 ns evaluating to 37.4999...).
fn round_ties_even(q: f64) -> f64 {
    let fl = libm::floor(q);
    let frac = q - fl;
    if libm::fabs(frac - 0.5) <= 1e-9 {
        if libm::fmod(fl, 2.0) == 0.0 {
            fl
        } else {
            fl + 1.0
        }
    } else {
        libm::rint(q)
    }
}

/// Round each tap to the nearest multiple of the delay LSB (ties to even) and
/// clamp into `[0, delay_range]` when a range is configured.
pub fn quantize_taps(taps: &DelayProfile, imp: &ImpairmentConfig) -> Result<QuantizedTaps> {
    imp.validate()?;
    taps.validate()?;
    let mut clamped = false;
    let quantized: Vec<f64> = taps
        .taps
        .iter()
        .map(|&t| {
            let mut q = if imp.delay_resolution > 0.0 {
                round_ties_even(t / imp.delay_resolution) * imp.delay_resolution
            } else {
                t
            };
            if imp.delay_range > 0.0 {
                let c = q.clamp(0.0, imp.delay_range);
                if c != q {
                    clamped = true;
                    q = c;
                }
            }
            q
        })
        .collect();
    Ok(QuantizedTaps {
        profile: DelayProfile {
            taps: quantized,
            resolution: imp.delay_resolution,
            max_range: imp.delay_range,
        },
        ideal: taps.taps.clone(),
        clamped,
    })
}

/// Draw per-channel, per-lane gain/offset mismatch from the impairment seed.
fn lane_mismatch(
    imp: &ImpairmentConfig,
    channel: usize,
) -> (Vec<f64>, Vec<Complex64>) {
    let m = imp.interleave_factor;
    if imp.lane_gain_sigma == 0.0 && imp.lane_offset_sigma == 0.0 {
        return (vec![1.0; m], vec![Complex64::new(0.0, 0.0); m]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(imp.seed.wrapping_add(channel as u64));
    let mut normal = || {
        let u1 = 1.0 - (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    };
    let gains = (0..m).map(|_| 1.0 + imp.lane_gain_sigma * normal()).collect();
    let offsets = (0..m)
        .map(|_| {
            let s = imp.lane_offset_sigma / libm::sqrt(2.0);
            Complex64::new(s * normal(), s * normal())
        })
        .collect();
    (gains, offsets)
}

/// Delay-and-sum combine the received channels into one output.
///
/// `y = g_buf * LPF( sum_n lane_n( advance(x_n, tau_n) * exp(j 2 pi rf_ref tau_n) ) )`
/// with `g_buf = 10^(-buffer_loss_db/20)`. Lane mismatch partitions samples
/// round-robin into `interleave_factor` lanes.
pub fn apply_and_combine(
    x: &MultichannelSignal,
    taps: &DelayProfile,
    imp: &ImpairmentConfig,
    rf_ref: f64,
) -> Result<Vec<Complex64>> {
    imp.validate()?;
    taps.validate()?;
    if taps.len() != x.num_channels() {
        return Err(Error::LengthMismatch("taps vs channel count"));
    }
    if !rf_ref.is_finite() || rf_ref < 0.0 {
        return Err(Error::InvalidConfig("rf_ref must be finite and >= 0"));
    }
    let len = x.len();
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut sum = vec![Complex64::new(0.0, 0.0); len];
    for (n, ch) in x.channels.iter().enumerate() {
        let tau = taps.taps[n];
        // Conjugate weight: advance by tau and rotate the carrier reference.
        let mut branch = fractional_delay(ch, -tau, x.sample_rate)?;
        let rot = cis(two_pi * rf_ref * tau);
        let (gains, offsets) = lane_mismatch(imp, n);
        let m = imp.interleave_factor;
        for (i, s) in branch.iter_mut().enumerate() {
            let lane = i % m;
            *s = (*s * rot) * gains[lane] + offsets[lane];
        }
        for (acc, s) in sum.iter_mut().zip(&branch) {
            *acc += s;
        }
    }
    if imp.analog_bw > 0.0 {
        let a = libm::exp(-two_pi * imp.analog_bw / x.sample_rate);
        let mut state = Complex64::new(0.0, 0.0);
        for s in sum.iter_mut() {
            state = *s * (1.0 - a) + state * a;
            *s = state;
        }
    }
    let g_buf = libm::pow(10.0, -imp.buffer_loss_db / 20.0);
    if g_buf != 1.0 {
        for s in sum.iter_mut() {
            *s *= g_buf;
        }
    }
    Ok(sum)
}

/// Sweep single tones through channel and combiner and record the output/input
/// power ratio per probe.
///
/// Probes are snapped to the nearest bin of a `block_len`-point grid at `f_s`
/// so the circular delay is exact; the returned pairs carry the snapped
/// frequency. The channel is the noiseless narrowband model at `theta`.
pub fn system_response_measured(
    taps: &DelayProfile,
    imp: &ImpairmentConfig,
    cfg: &ArrayConfig,
    theta: f64,
    rf_ref: f64,
    probe_freqs: &[f64],
    f_s: f64,
    block_len: usize,
) -> Result<Vec<(f64, f64)>> {
    if probe_freqs.is_empty() {
        return Err(Error::Empty("probe_freqs"));
    }
    if block_len == 0 {
        return Err(Error::Empty("block_len"));
    }
    let scen = ChannelScenario::new(theta, cfg.clone(), ChannelModel::Narrowband)?;
    let mut out = Vec::with_capacity(probe_freqs.len());
    for &f in probe_freqs {
        if libm::fabs(f) > f_s / 2.0 {
            return Err(Error::InvalidConfig("probe beyond the Nyquist span"));
        }
        let k = libm::rint(f * block_len as f64 / f_s);
        let nu = k * f_s / block_len as f64;
        let tx: Vec<Complex64> = (0..block_len)
            .map(|i| cis(2.0 * core::f64::consts::PI * nu * i as f64 / f_s))
            .collect();
        let ms = propagate(&tx, f_s, &scen)?;
        let y = apply_and_combine(&ms, taps, imp, rf_ref)?;
        let p_out: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / block_len as f64;
        out.push((nu, p_out)); // input tone power is 1
    }
    Ok(out)
}

/// Signed frequency of the strongest DFT bin; helper for probe bookkeeping.
pub fn dominant_bin_freq(x: &[Complex64], f_s: f64) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let spec = crate::signal_core::dft(x);
    let (k, _) = spec
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().partial_cmp(&b.1.norm_sqr()).unwrap())?;
    Some(bin_freq(k, x.len(), f_s))
}
