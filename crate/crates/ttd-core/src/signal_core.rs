//! Complex multichannel signal container and DSP primitives: DFT, circular
//! fractional delay, AWGN injection, and Welch PSD estimation.
//!
//! Delay semantics are block-periodic (circular), matching the cyclic structure
//! of the repeated OFDM pilot. A fractional delay is a per-bin phase ramp in the
//! frequency domain, exact for periodic block content and energy-preserving.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::array_model::cis;
use crate::{Error, Result};

/// Complex baseband samples for N elements at a common sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    /// One sample vector per element; all the same length.
    pub channels: Vec<Vec<Complex64>>,
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Start-time reference in seconds (common delay already applied).
    pub t0: f64,
}

impl MultichannelSignal {
    pub fn new(channels: Vec<Vec<Complex64>>, sample_rate: f64, t0: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Empty("channels"));
        }
        let len = channels[0].len();
        if len == 0 {
            return Err(Error::Empty("channel samples"));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::LengthMismatch("channel lengths differ"));
        }
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(Error::InvalidConfig("sample_rate must be > 0"));
        }
        Ok(Self {
            channels,
            sample_rate,
            t0,
        })
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    /// Total energy over all channels.
    pub fn energy(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|s| s.norm_sqr())
            .sum()
    }

    /// Mean per-sample power averaged over channels.
    pub fn mean_power(&self) -> f64 {
        self.energy() / (self.num_channels() * self.len()) as f64
    }
}

/// Power density per bin on a centered frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<f64>,
    /// Bin center frequencies, spanning [-f_s/2, f_s/2).
    pub bin_freqs: Vec<f64>,
}

impl Spectrum {
    /// Frequency spacing between bins.
    pub fn bin_spacing(&self) -> f64 {
        if self.bin_freqs.len() > 1 {
            self.bin_freqs[1] - self.bin_freqs[0]
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// DFT

fn bit_reverse_permute(x: &mut [Complex64]) {
    let n = x.len();
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            x.swap(i, j);
        }
        let mut m = n >> 1;
        while m >= 1 && j & m != 0 {
            j ^= m;
            m >>= 1;
        }
        j |= m;
    }
}

/// In-place radix-2 FFT, unscaled. `sign` is -1 for forward, +1 for inverse.
fn fft_pow2(x: &mut [Complex64], sign: f64) {
    let n = x.len();
    bit_reverse_permute(x);
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * core::f64::consts::PI / len as f64;
        let wlen = cis(ang);
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = x[start + k];
                let v = x[start + k + len / 2] * w;
                x[start + k] = u + v;
                x[start + k + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Unscaled transform; radix-2 when the length is a power of two, otherwise a
/// direct O(L^2) evaluation (lengths here are small).
fn raw_transform(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = x.len();
    if n.is_power_of_two() {
        let mut buf = x.to_vec();
        fft_pow2(&mut buf, sign);
        return buf;
    }
    let step = sign * 2.0 * core::f64::consts::PI / n as f64;
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| x[i] * cis(step * ((k * i) % n) as f64))
                .sum()
        })
        .collect()
}

/// Unitary DFT (scaling 1/sqrt(L)).
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let scale = 1.0 / libm::sqrt(x.len() as f64);
    let mut out = raw_transform(x, -1.0);
    for v in &mut out {
        *v *= scale;
    }
    out
}

/// Unitary inverse DFT; `idft(dft(x)) == x` to numerical precision.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let scale = 1.0 / libm::sqrt(x.len() as f64);
    let mut out = raw_transform(x, 1.0);
    for v in &mut out {
        *v *= scale;
    }
    out
}

/// Signed bin frequency for index `k` of an `n`-point grid at rate `f_s`.
/// The Nyquist bin of an even grid maps to the negative edge.
#[inline]
pub fn bin_freq(k: usize, n: usize, f_s: f64) -> f64 {
    let kk = if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    };
    kk as f64 * f_s / n as f64
}

// ---------------------------------------------------------------------------
// Fractional delay

/// Circularly delay `x` by `delay` seconds via a frequency-domain phase ramp.
///
/// Bin `k` at signed frequency `nu_k` is multiplied by `exp(-j 2 pi nu_k delay)`.
/// Negative delays (advances) are allowed; `|delay| * f_s` must stay below the
/// block length.
pub fn fractional_delay(x: &[Complex64], delay: f64, f_s: f64) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::Empty("signal"));
    }
    if !delay.is_finite() || !f_s.is_finite() || f_s <= 0.0 {
        return Err(Error::NonFinite("delay or sample rate"));
    }
    let n = x.len();
    if libm::fabs(delay) * f_s >= n as f64 {
        return Err(Error::DelayTooLong {
            delay_s: delay,
            block_s: n as f64 / f_s,
        });
    }
    if delay == 0.0 {
        return Ok(x.to_vec());
    }
    let mut spec = raw_transform(x, -1.0);
    for (k, v) in spec.iter_mut().enumerate() {
        let nu = bin_freq(k, n, f_s);
        *v *= cis(-2.0 * core::f64::consts::PI * nu * delay);
    }
    let mut out = raw_transform(&spec, 1.0);
    let scale = 1.0 / n as f64;
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// AWGN

/// Uniform in [0, 1) from the top 53 bits.
fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller.
fn next_standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = 1.0 - next_f64(rng); // in (0, 1]
    let u2 = next_f64(rng);
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let phi = 2.0 * core::f64::consts::PI * u2;
    (r * libm::cos(phi), r * libm::sin(phi))
}

/// Add complex white Gaussian noise at the given SNR.
///
/// Noise power per channel is the channel-averaged signal power divided by
/// `10^(snr_db/10)`. `snr_db = None` is the noise-free sentinel and returns the
/// input bit-identically. Channel `i` uses sub-seed `seed + i`, so realizations
/// are reproducible per channel.
pub fn add_awgn(x: &MultichannelSignal, snr_db: Option<f64>, seed: u64) -> Result<MultichannelSignal> {
    let snr_db = match snr_db {
        None => return Ok(x.clone()),
        Some(s) => s,
    };
    if !snr_db.is_finite() {
        return Err(Error::NonFinite("snr_db"));
    }
    let sig_power = x.mean_power();
    if sig_power <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let noise_power = sig_power / libm::pow(10.0, snr_db / 10.0);
    let sigma = libm::sqrt(noise_power / 2.0);
    let mut out = x.clone();
    for (ch, samples) in out.channels.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(ch as u64));
        for s in samples.iter_mut() {
            let (re, im) = next_standard_normal_pair(&mut rng);
            *s += Complex64::new(sigma * re, sigma * im);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Welch PSD

/// Periodic Hann window.
fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 * (1.0 - libm::cos(2.0 * core::f64::consts::PI * i as f64 / len as f64)))
        .collect()
}

/// Welch PSD with a Hann window, averaged over overlapping segments.
///
/// Bins are returned on the centered grid [-f_s/2, f_s/2). The scaling
/// satisfies Parseval for stationary inputs: `sum(bins) * delta_nu` equals the
/// mean signal power.
pub fn welch_psd(x: &[Complex64], f_s: f64, segment_len: usize, overlap: f64) -> Result<Spectrum> {
    if x.is_empty() {
        return Err(Error::Empty("signal"));
    }
    if segment_len == 0 || segment_len > x.len() {
        return Err(Error::SegmentTooLong {
            segment: segment_len,
            signal: x.len(),
        });
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidConfig("overlap must be in [0, 1)"));
    }
    let m = segment_len;
    let hop = core::cmp::max(1, libm::rint(m as f64 * (1.0 - overlap)) as usize);
    let window = hann(m);
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let delta_nu = f_s / m as f64;

    let mut acc = vec![0.0f64; m];
    let mut count = 0usize;
    let mut start = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    while start + m <= x.len() {
        for i in 0..m {
            buf[i] = x[start + i] * window[i];
        }
        let spec = raw_transform(&buf, -1.0);
        // Unitary scaling folded into the normalization below.
        for (k, v) in spec.iter().enumerate() {
            acc[k] += v.norm_sqr() / m as f64;
        }
        count += 1;
        start += hop;
    }
    debug_assert!(count > 0);
    let norm = 1.0 / (count as f64 * delta_nu * w2);
    // fftshift to the centered grid.
    let half = m.div_ceil(2);
    let mut bins = Vec::with_capacity(m);
    let mut bin_freqs = Vec::with_capacity(m);
    for k in (m - (m - half))..m {
        // negative-frequency half: indices half..m map to [-f_s/2, 0)
        bins.push(acc[k] * norm);
        bin_freqs.push(bin_freq(k, m, f_s));
    }
    for (k, a) in acc.iter().enumerate().take(half) {
        bins.push(a * norm);
        bin_freqs.push(bin_freq(k, m, f_s));
    }
    Ok(Spectrum { bins, bin_freqs })
}
