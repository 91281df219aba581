//! Numerical reproduction of the measurement suite: CW beamforming gain
//! sweeps, polar beam patterns, and EVM.
//!
//! Gains are referenced to the same chain with a single element enabled and
//! zero taps, so buffer loss and the analog low-pass cancel in the ratio.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::array_model::{cis, ArrayConfig, DelayProfile};
use crate::channel::{propagate, ChannelModel, ChannelScenario};
use crate::signal_core::MultichannelSignal;
use crate::ttd_engine::{apply_and_combine, design_taps, quantize_taps, ImpairmentConfig, TtdMode};
use crate::waveform::Constellation;
use crate::{Error, Result};

/// Array gain versus frequency relative to a single-element baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSweep {
    pub freqs: Vec<f64>,
    pub gain_db: Vec<f64>,
    pub elements_enabled: usize,
}

/// Combined power versus test angle for a fixed steering direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub angles: Vec<f64>,
    pub gain_db: Vec<f64>,
    pub steer_theta: f64,
    pub eval_freq: f64,
}

/// RMS error vector magnitude report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvmReport {
    pub evm_rms_percent: f64,
    pub constellation: Constellation,
    pub num_symbols: usize,
    /// SNR the symbols were subjected to; `None` for noiseless chains.
    pub snr_db_applied: Option<f64>,
}

fn tone(freq: f64, f_s: f64, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|i| cis(2.0 * core::f64::consts::PI * freq * i as f64 / f_s))
        .collect()
}

fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Zero out all channels from `enabled` onward.
fn disable_tail(ms: &mut MultichannelSignal, enabled: usize) {
    for ch in ms.channels.iter_mut().skip(enabled) {
        for s in ch.iter_mut() {
            *s = Complex64::new(0.0, 0.0);
        }
    }
}

/// Output power of the reference chain: one element, zero taps, same
/// impairments.
fn baseline_power(
    ms: &MultichannelSignal,
    imp: &ImpairmentConfig,
    rf_ref: f64,
) -> Result<f64> {
    let mut single = ms.clone();
    disable_tail(&mut single, 1);
    let zero = DelayProfile::ideal(alloc::vec![0.0; ms.num_channels()])?;
    let y = apply_and_combine(&single, &zero, imp, rf_ref)?;
    Ok(mean_power(&y))
}

/// CW-tone beamforming gain sweep in comms mode.
///
/// Probe tones are snapped to the nearest bin of a `block_len`-point grid so
/// the circular delays are exact; `freqs` in the result carries the snapped
/// values. `elements` of the `cfg.num_elements` channels stay enabled.
pub fn gain_sweep(
    cfg: &ArrayConfig,
    theta: f64,
    imp: &ImpairmentConfig,
    model: ChannelModel,
    freqs: &[f64],
    elements: usize,
    f_s: f64,
    block_len: usize,
) -> Result<GainSweep> {
    if elements < 1 || elements > cfg.num_elements {
        return Err(Error::InvalidConfig("elements must be in 1..=N"));
    }
    if freqs.is_empty() {
        return Err(Error::Empty("freqs"));
    }
    let taps = quantize_taps(&design_taps(TtdMode::Comms { theta }, cfg)?, imp)?.profile;
    let scen = ChannelScenario::new(theta, cfg.clone(), model)?;
    let rf_ref = cfg.carrier_freq;
    let mut out_freqs = Vec::with_capacity(freqs.len());
    let mut gain_db = Vec::with_capacity(freqs.len());
    for &f in freqs {
        if libm::fabs(f) > f_s / 2.0 {
            return Err(Error::InvalidConfig("probe beyond the Nyquist span"));
        }
        let nu = libm::rint(f * block_len as f64 / f_s) * f_s / block_len as f64;
        let tx = tone(nu, f_s, block_len);
        let mut ms = propagate(&tx, f_s, &scen)?;
        let p_ref = baseline_power(&ms, imp, rf_ref)?;
        disable_tail(&mut ms, elements);
        let y = apply_and_combine(&ms, &taps, imp, rf_ref)?;
        out_freqs.push(nu);
        gain_db.push(10.0 * libm::log10(mean_power(&y) / p_ref));
    }
    Ok(GainSweep {
        freqs: out_freqs,
        gain_db,
        elements_enabled: elements,
    })
}

/// Beam pattern: steer the taps toward `steer_theta`, sweep the incidence
/// angle over `angle_grid`, and record combined power on a CW tone at
/// `eval_freq` (narrowband channel), relative to the single-element baseline.
pub fn beam_pattern(
    cfg: &ArrayConfig,
    steer_theta: f64,
    imp: &ImpairmentConfig,
    eval_freq: f64,
    angle_grid: &[f64],
    f_s: f64,
    block_len: usize,
) -> Result<BeamPattern> {
    if angle_grid.is_empty() {
        return Err(Error::Empty("angle_grid"));
    }
    let taps = quantize_taps(&design_taps(TtdMode::Comms { theta: steer_theta }, cfg)?, imp)?
        .profile;
    let rf_ref = cfg.carrier_freq;
    let nu = libm::rint(eval_freq * block_len as f64 / f_s) * f_s / block_len as f64;
    let tx = tone(nu, f_s, block_len);
    let mut gain_db = Vec::with_capacity(angle_grid.len());
    for &theta in angle_grid {
        let scen = ChannelScenario::new(theta, cfg.clone(), ChannelModel::Narrowband)?;
        let ms = propagate(&tx, f_s, &scen)?;
        let p_ref = baseline_power(&ms, imp, rf_ref)?;
        let y = apply_and_combine(&ms, &taps, imp, rf_ref)?;
        gain_db.push(10.0 * libm::log10(mean_power(&y) / p_ref));
    }
    Ok(BeamPattern {
        angles: angle_grid.to_vec(),
        gain_db,
        steer_theta,
        eval_freq: nu,
    })
}

/// RMS EVM after scalar complex gain equalization against decision-directed
/// references.
///
/// The received block is amplitude-normalized, decided to the nearest
/// constellation point, fitted with a single complex gain (least squares), and
/// re-decided once. Valid while decisions are mostly correct (EVM below
/// roughly 15% and small rotations), which covers the array chains measured
/// here.
pub fn evm(
    rx_symbols: &[Complex64],
    constellation: Constellation,
    snr_db_applied: Option<f64>,
) -> Result<EvmReport> {
    const MIN_SYMBOLS: usize = 100;
    if rx_symbols.len() < MIN_SYMBOLS {
        return Err(Error::TooFewSymbols {
            got: rx_symbols.len(),
            min: MIN_SYMBOLS,
        });
    }
    let points = constellation.points();
    let decide = |s: Complex64| -> Complex64 {
        *points
            .iter()
            .min_by(|a, b| {
                (s - *a)
                    .norm_sqr()
                    .partial_cmp(&(s - *b).norm_sqr())
                    .unwrap()
            })
            .unwrap()
    };

    let rms = libm::sqrt(mean_power(rx_symbols));
    if rms <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let mut rx: Vec<Complex64> = rx_symbols.iter().map(|s| s / rms).collect();

    // Two rounds: decide, fit the scalar gain, re-decide on the equalized set.
    for _ in 0..2 {
        let refs: Vec<Complex64> = rx.iter().map(|&s| decide(s)).collect();
        let num: Complex64 = refs.iter().zip(&rx).map(|(d, r)| d.conj() * r).sum();
        let den: f64 = refs.iter().map(|d| d.norm_sqr()).sum();
        let gain = num / den;
        for s in rx.iter_mut() {
            *s /= gain;
        }
    }

    let refs: Vec<Complex64> = rx.iter().map(|&s| decide(s)).collect();
    let err_power: f64 = refs
        .iter()
        .zip(&rx)
        .map(|(d, r)| (r - d).norm_sqr())
        .sum::<f64>()
        / refs.len() as f64;
    let ref_power: f64 = refs.iter().map(|d| d.norm_sqr()).sum::<f64>() / refs.len() as f64;

    Ok(EvmReport {
        evm_rms_percent: 100.0 * libm::sqrt(err_power / ref_power),
        constellation,
        num_symbols: rx_symbols.len(),
        snr_db_applied,
    })
}
