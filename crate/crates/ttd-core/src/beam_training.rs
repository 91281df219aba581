//! Fast beam-training estimators: map the PSD peak of the combined pilot back
//! to an incidence angle, or correlate the measured per-subcarrier power
//! against a template codebook, and quantify the latency advantage over a
//! sequential beam sweep.

use alloc::vec::Vec;

use crate::array_model::{training_response, ArrayConfig, DelayProfile};
use crate::signal_core::Spectrum;
use crate::{Error, Result};

/// Which estimator produced an [`AngleEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    PeakMap,
    TemplateMatch,
}

/// An estimated incidence angle with its evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    /// Estimated angle in radians, |theta_hat| <= pi/2.
    pub theta_hat: f64,
    /// Frequency of the supporting PSD peak in Hz.
    pub peak_bin_freq: f64,
    pub method: EstimatorMethod,
    /// Peak-to-median PSD ratio (PeakMap) or normalized correlation
    /// (TemplateMatch); >= 0.
    pub confidence: f64,
    /// Set when the peak sits near +-BW/2, where arcsin is steep and the
    /// estimate carries widened uncertainty.
    pub edge_flagged: bool,
}

/// Expected per-subcarrier gain templates over an angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateCodebook {
    /// Strictly increasing angles in radians within [-pi/2, pi/2].
    pub angle_grid: Vec<f64>,
    /// Subcarrier baseband frequencies the rows are sampled at.
    pub subcarrier_freqs: Vec<f64>,
    /// One unit-energy row per angle.
    pub templates: Vec<Vec<f64>>,
}

/// Build the codebook: row(theta) is the normalized training response sampled
/// at the subcarrier frequencies.
pub fn build_codebook(
    cfg: &ArrayConfig,
    taps: &DelayProfile,
    subcarrier_freqs: &[f64],
    angle_grid: &[f64],
) -> Result<TemplateCodebook> {
    if subcarrier_freqs.is_empty() {
        return Err(Error::Empty("subcarrier_freqs"));
    }
    if angle_grid.is_empty() {
        return Err(Error::Empty("angle_grid"));
    }
    for pair in angle_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidConfig("angle_grid must be strictly increasing"));
        }
    }
    let mut templates = Vec::with_capacity(angle_grid.len());
    for &theta in angle_grid {
        let mut row: Vec<f64> = subcarrier_freqs
            .iter()
            .map(|&nu| training_response(theta, nu, taps, cfg))
            .collect::<Result<_>>()?;
        let energy: f64 = row.iter().map(|v| v * v).sum();
        if energy > 0.0 {
            let inv = 1.0 / libm::sqrt(energy);
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        templates.push(row);
    }
    Ok(TemplateCodebook {
        angle_grid: angle_grid.to_vec(),
        subcarrier_freqs: subcarrier_freqs.to_vec(),
        templates,
    })
}

/// Locate the PSD argmax within |nu| <= bw/2 with a deterministic tie rule:
/// ties go to the smaller |nu|, then to the negative side.
fn find_peak(psd: &Spectrum, bw: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None; // (idx, power, freq)
    for (i, (&p, &f)) in psd.bins.iter().zip(&psd.bin_freqs).enumerate() {
        if libm::fabs(f) > bw / 2.0 + 1e-9 * bw {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, bp, bf)) => {
                p > bp
                    || (p == bp
                        && (libm::fabs(f) < libm::fabs(bf) || (libm::fabs(f) == libm::fabs(bf) && f < bf)))
            }
        };
        if better {
            best = Some((i, p, f));
        }
    }
    best.map(|(i, p, _)| (i, p))
}

/// Invert the frequency-to-angle mapping at the PSD peak:
/// `theta_hat = arcsin(2 nu_hat / bw)`.
pub fn estimate_angle_peak(psd: &Spectrum, bw: f64, cfg: &ArrayConfig) -> Result<AngleEstimate> {
    if psd.bins.is_empty() {
        return Err(Error::Empty("psd"));
    }
    if !cfg.is_critically_spaced() {
        return Err(Error::NotCriticallySpaced);
    }
    if !bw.is_finite() || bw <= 0.0 {
        return Err(Error::InvalidConfig("bandwidth must be > 0"));
    }
    let (peak_idx, peak_power) = find_peak(psd, bw).ok_or(Error::NoEstimate("no in-band bins"))?;
    if peak_power <= 0.0 {
        return Err(Error::NoEstimate("all-zero PSD"));
    }
    let nu_hat = psd.bin_freqs[peak_idx];
    let s = (2.0 * nu_hat / bw).clamp(-1.0, 1.0);
    let theta_hat = libm::asin(s);

    let mut inband: Vec<f64> = psd
        .bins
        .iter()
        .zip(&psd.bin_freqs)
        .filter(|(_, &f)| libm::fabs(f) <= bw / 2.0 + 1e-9 * bw)
        .map(|(&p, _)| p)
        .collect();
    inband.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = inband[inband.len() / 2];
    let confidence = if median > 0.0 {
        peak_power / median
    } else {
        f64::INFINITY
    };

    Ok(AngleEstimate {
        theta_hat,
        peak_bin_freq: nu_hat,
        method: EstimatorMethod::PeakMap,
        confidence,
        edge_flagged: libm::fabs(nu_hat) >= 0.9 * bw / 2.0,
    })
}

/// Correlate the measured per-subcarrier power against every codebook row and
/// return the best-matching angle; confidence is the normalized correlation.
pub fn estimate_angle_template(psd: &Spectrum, codebook: &TemplateCodebook) -> Result<AngleEstimate> {
    if psd.bins.is_empty() {
        return Err(Error::Empty("psd"));
    }
    let spacing = {
        let f = &codebook.subcarrier_freqs;
        if f.len() > 1 {
            let mut min = f64::INFINITY;
            for pair in f.windows(2) {
                min = min.min(libm::fabs(pair[1] - pair[0]));
            }
            min
        } else {
            f64::INFINITY
        }
    };
    // Nearest-bin resampling of the PSD onto the subcarrier grid.
    let mut measured = Vec::with_capacity(codebook.subcarrier_freqs.len());
    for &nu in &codebook.subcarrier_freqs {
        let (idx, err) = psd
            .bin_freqs
            .iter()
            .enumerate()
            .map(|(i, &f)| (i, libm::fabs(f - nu)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .ok_or(Error::Empty("psd bins"))?;
        if err > spacing / 2.0 {
            return Err(Error::GridMismatch(
                "psd bins offset from the codebook grid by more than half a subcarrier spacing",
            ));
        }
        measured.push(psd.bins[idx]);
    }
    if measured.iter().all(|&v| v <= 0.0) {
        return Err(Error::NoEstimate("all-zero PSD on the codebook grid"));
    }

    // Mean-removed (Pearson) correlation: scale- and offset-invariant, and a
    // flat spectrum scores 0 against every template instead of matching the
    // templates' common pedestal.
    let mut best_idx = 0usize;
    let mut best_corr = f64::NEG_INFINITY;
    for (i, row) in codebook.templates.iter().enumerate() {
        let corr = pearson(row, &measured);
        if corr > best_corr {
            best_corr = corr;
            best_idx = i;
        }
    }
    let (peak_idx, _) = measured
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let peak_freq = codebook.subcarrier_freqs[peak_idx];
    let span = codebook
        .subcarrier_freqs
        .iter()
        .fold(0.0f64, |m, &f| m.max(libm::fabs(f)));

    Ok(AngleEstimate {
        theta_hat: codebook.angle_grid[best_idx],
        peak_bin_freq: peak_freq,
        method: EstimatorMethod::TemplateMatch,
        confidence: best_corr.max(0.0),
        edge_flagged: span > 0.0 && libm::fabs(peak_freq) >= 0.9 * span,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / libm::sqrt(va * vb)
}

/// Latency advantage of frequency-division training over a sequential sweep,
/// assuming pilot symbols of equal duration.
pub fn training_latency_ratio(n_beams_sequential: usize, pilots_ttd: usize) -> Result<f64> {
    if n_beams_sequential < 1 || pilots_ttd < 1 {
        return Err(Error::InvalidConfig("counts must be >= 1"));
    }
    Ok(n_beams_sequential as f64 / pilots_ttd as f64)
}
