//! Pilot and data waveforms: the multicarrier BPSK beam-training pilot and
//! single-carrier QPSK / 16-QAM frames for EVM measurements.
//!
//! The pilot carries one BPSK symbol per subcarrier on a centered grid with the
//! DC subcarrier left empty, and is tiled `repetitions` times; there is no
//! cyclic prefix since the circular delay semantics of [`crate::signal_core`]
//! make one redundant. QAM frames are one sample per symbol, no pulse shaping.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::signal_core::{dft, idft};
use crate::{Error, Result};

/// OFDM beam-training pilot description.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmPilotSpec {
    /// Occupied bandwidth in Hz.
    pub bandwidth: f64,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Number of loaded subcarriers, `floor(bandwidth / spacing)`.
    pub num_subcarriers: usize,
    /// BPSK value (+1 or -1) per subcarrier.
    pub subcarrier_symbols: Vec<f64>,
    /// How many times the pilot block repeats.
    pub repetitions: usize,
}

impl OfdmPilotSpec {
    /// Pilot with a seed-determined BPSK pattern.
    pub fn new(bandwidth: f64, subcarrier_spacing: f64, repetitions: usize, seed: u64) -> Result<Self> {
        let count = Self::subcarrier_count(bandwidth, subcarrier_spacing)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let symbols = (0..count)
            .map(|_| if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 })
            .collect();
        Self::with_symbols(bandwidth, subcarrier_spacing, symbols, repetitions)
    }

    /// Pilot with an explicit BPSK pattern.
    pub fn with_symbols(
        bandwidth: f64,
        subcarrier_spacing: f64,
        subcarrier_symbols: Vec<f64>,
        repetitions: usize,
    ) -> Result<Self> {
        let count = Self::subcarrier_count(bandwidth, subcarrier_spacing)?;
        if subcarrier_symbols.len() != count {
            return Err(Error::LengthMismatch("subcarrier_symbols vs num_subcarriers"));
        }
        if subcarrier_symbols.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidConfig("subcarrier symbols must be +1 or -1"));
        }
        if repetitions < 1 {
            return Err(Error::InvalidConfig("repetitions must be >= 1"));
        }
        Ok(Self {
            bandwidth,
            subcarrier_spacing,
            num_subcarriers: count,
            subcarrier_symbols,
            repetitions,
        })
    }

    fn subcarrier_count(bandwidth: f64, spacing: f64) -> Result<usize> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::InvalidConfig("bandwidth must be > 0"));
        }
        if !spacing.is_finite() || spacing <= 0.0 || spacing > bandwidth {
            return Err(Error::InvalidConfig("spacing must be in (0, bandwidth]"));
        }
        // Small epsilon so exact-ratio configs are not truncated by fp dust.
        Ok(libm::floor(bandwidth / spacing + 1e-6) as usize)
    }

    /// Signed subcarrier indices on the centered grid, DC (index 0) skipped.
    pub fn subcarrier_offsets(&self) -> Vec<i64> {
        let k = self.num_subcarriers as i64;
        (0..k)
            .map(|i| {
                let idx = i - k / 2;
                if idx >= 0 {
                    idx + 1
                } else {
                    idx
                }
            })
            .collect()
    }

    /// Subcarrier baseband frequencies in Hz.
    pub fn subcarrier_freqs(&self) -> Vec<f64> {
        self.subcarrier_offsets()
            .iter()
            .map(|&k| k as f64 * self.subcarrier_spacing)
            .collect()
    }

    /// Samples in one pilot block at rate `f_s`; errors unless `f_s` is an
    /// integer multiple of the subcarrier spacing and at least the bandwidth.
    pub fn block_len(&self, f_s: f64) -> Result<usize> {
        if !f_s.is_finite() || f_s < self.bandwidth {
            return Err(Error::SampleRateTooLow {
                got_hz: f_s,
                need_hz: self.bandwidth,
            });
        }
        let ratio = f_s / self.subcarrier_spacing;
        let len = libm::rint(ratio);
        if libm::fabs(ratio - len) > 1e-6 {
            return Err(Error::GridMismatch(
                "sample rate must be an integer multiple of the subcarrier spacing",
            ));
        }
        Ok(len as usize)
    }
}

/// Synthesize the pilot: inverse DFT of the BPSK-loaded centered grid, tiled
/// `repetitions` times. Deterministic for a given spec.
pub fn gen_ofdm_pilot(spec: &OfdmPilotSpec, f_s: f64) -> Result<Vec<Complex64>> {
    let block = spec.block_len(f_s)?;
    let offsets = spec.subcarrier_offsets();
    if let Some(&kmax) = offsets.iter().max_by_key(|k| k.unsigned_abs()) {
        if kmax.unsigned_abs() as usize > block / 2 {
            return Err(Error::GridMismatch("subcarrier index beyond Nyquist"));
        }
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); block];
    for (&k, &s) in offsets.iter().zip(&spec.subcarrier_symbols) {
        let idx = k.rem_euclid(block as i64) as usize;
        bins[idx] = Complex64::new(s, 0.0);
    }
    let one = idft(&bins);
    let mut out = Vec::with_capacity(block * spec.repetitions);
    for _ in 0..spec.repetitions {
        out.extend_from_slice(&one);
    }
    Ok(out)
}

/// DFT of one pilot block sampled at the subcarrier bins. A generate/demodulate
/// loopback returns the loaded BPSK values to numerical precision.
pub fn demod_subcarriers(x: &[Complex64], spec: &OfdmPilotSpec, f_s: f64) -> Result<Vec<Complex64>> {
    let block = spec.block_len(f_s)?;
    if x.len() < block {
        return Err(Error::LengthMismatch("signal shorter than one pilot block"));
    }
    let spec_bins = dft(&x[..block]);
    Ok(spec
        .subcarrier_offsets()
        .iter()
        .map(|&k| spec_bins[k.rem_euclid(block as i64) as usize])
        .collect())
}

// ---------------------------------------------------------------------------
// QAM frames

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Qpsk,
    Qam16,
}

impl Constellation {
    /// Unit-average-power constellation points.
    pub fn points(&self) -> Vec<Complex64> {
        match self {
            Constellation::Qpsk => {
                let a = 1.0 / libm::sqrt(2.0);
                vec![
                    Complex64::new(a, a),
                    Complex64::new(a, -a),
                    Complex64::new(-a, a),
                    Complex64::new(-a, -a),
                ]
            }
            Constellation::Qam16 => {
                let a = 1.0 / libm::sqrt(10.0);
                let levels = [-3.0, -1.0, 1.0, 3.0];
                let mut pts = Vec::with_capacity(16);
                for &i in &levels {
                    for &q in &levels {
                        pts.push(Complex64::new(a * i, a * q));
                    }
                }
                pts
            }
        }
    }

    /// Bits carried per symbol.
    pub fn bits_per_symbol(&self) -> u32 {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }
}

/// A block of unit-average-power data symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct QamFrame {
    pub constellation: Constellation,
    pub symbols: Vec<Complex64>,
    pub symbol_rate: f64,
}

/// Uniform i.i.d. symbols from the constellation, reproducible under `seed`.
pub fn gen_qam_frame(
    constellation: Constellation,
    num_symbols: usize,
    symbol_rate: f64,
    seed: u64,
) -> Result<QamFrame> {
    if num_symbols < 1 {
        return Err(Error::Empty("num_symbols"));
    }
    if !symbol_rate.is_finite() || symbol_rate <= 0.0 {
        return Err(Error::InvalidConfig("symbol_rate must be > 0"));
    }
    let points = constellation.points();
    let mask = (points.len() - 1) as u64; // power-of-two alphabet
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..num_symbols)
        .map(|_| points[(rng.next_u64() & mask) as usize])
        .collect();
    Ok(QamFrame {
        constellation,
        symbols,
        symbol_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_core::fractional_delay;

    #[test]
    fn four_subcarriers_have_four_equal_bins() {
        let spec = OfdmPilotSpec::with_symbols(4.0, 1.0, vec![1.0; 4], 1).unwrap();
        let x = gen_ofdm_pilot(&spec, 8.0).unwrap();
        assert_eq!(x.len(), 8);
        let bins = dft(&x);
        let nonzero: Vec<usize> = bins
            .iter()
            .enumerate()
            .filter(|(_, b)| b.norm() > 1e-9)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero.len(), 4);
        for &i in &nonzero {
            assert!((bins[i].norm() - 1.0).abs() < 1e-9);
        }
        // DC excluded.
        assert!(!nonzero.contains(&0));
    }

    #[test]
    fn repetitions_tile_exactly() {
        let spec1 = OfdmPilotSpec::new(16.0, 1.0, 1, 3).unwrap();
        let spec3 = OfdmPilotSpec::with_symbols(16.0, 1.0, spec1.subcarrier_symbols.clone(), 3).unwrap();
        let one = gen_ofdm_pilot(&spec1, 32.0).unwrap();
        let three = gen_ofdm_pilot(&spec3, 32.0).unwrap();
        assert_eq!(three.len(), 3 * one.len());
        for (i, v) in three.iter().enumerate() {
            assert_eq!(*v, one[i % one.len()]);
        }
    }

    #[test]
    fn paper_scale_pilot_has_511_subcarriers() {
        let spec = OfdmPilotSpec::new(491.32e6, 960e3, 1, 0).unwrap();
        assert_eq!(spec.num_subcarriers, 511);
    }

    #[test]
    fn sample_rate_below_bandwidth_rejected() {
        let spec = OfdmPilotSpec::new(16.0, 1.0, 1, 0).unwrap();
        assert!(matches!(
            gen_ofdm_pilot(&spec, 8.0),
            Err(Error::SampleRateTooLow { .. })
        ));
    }

    #[test]
    fn loopback_recovers_bpsk_exactly() {
        let spec = OfdmPilotSpec::new(32.0, 1.0, 2, 11).unwrap();
        let x = gen_ofdm_pilot(&spec, 64.0).unwrap();
        let rx = demod_subcarriers(&x, &spec, 64.0).unwrap();
        for (r, &s) in rx.iter().zip(&spec.subcarrier_symbols) {
            assert!((r - Complex64::new(s, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn loopback_after_delay_rotates_per_subcarrier() {
        let spec = OfdmPilotSpec::new(32.0, 1.0, 1, 5).unwrap();
        let f_s = 64.0;
        let x = gen_ofdm_pilot(&spec, f_s).unwrap();
        let tau = 0.01;
        let delayed = fractional_delay(&x, tau, f_s).unwrap();
        let rx = demod_subcarriers(&delayed, &spec, f_s).unwrap();
        for ((r, &s), nu) in rx.iter().zip(&spec.subcarrier_symbols).zip(spec.subcarrier_freqs()) {
            let expect = Complex64::new(s, 0.0)
                * crate::array_model::cis(-2.0 * core::f64::consts::PI * nu * tau);
            assert!((r - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn all_zero_input_demodulates_to_zero() {
        let spec = OfdmPilotSpec::new(8.0, 1.0, 1, 0).unwrap();
        let x = vec![Complex64::new(0.0, 0.0); 16];
        let rx = demod_subcarriers(&x, &spec, 16.0).unwrap();
        assert!(rx.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn qpsk_symbols_constant_modulus() {
        let frame = gen_qam_frame(Constellation::Qpsk, 1000, 1e6, 9).unwrap();
        for s in &frame.symbols {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qam16_mean_power_near_unity() {
        let frame = gen_qam_frame(Constellation::Qam16, 100_000, 1e6, 4).unwrap();
        let p: f64 = frame.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>()
            / frame.symbols.len() as f64;
        assert!((p - 1.0).abs() < 0.01, "mean power {p}");
    }

    #[test]
    fn qam_frame_reproducible() {
        let a = gen_qam_frame(Constellation::Qam16, 64, 1e6, 77).unwrap();
        let b = gen_qam_frame(Constellation::Qam16, 64, 1e6, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_band_bins_are_empty() {
        let spec = OfdmPilotSpec::new(16.0, 1.0, 1, 21).unwrap();
        let x = gen_ofdm_pilot(&spec, 64.0).unwrap();
        let bins = dft(&x);
        let offsets = spec.subcarrier_offsets();
        for k in 0..bins.len() {
            let signed = if k < 32 { k as i64 } else { k as i64 - 64 };
            if !offsets.contains(&signed) {
                assert!(bins[k].norm_sqr() < 1e-24, "bin {signed} leaked");
            }
        }
    }
}
