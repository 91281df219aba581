//! Closed-form uniform-linear-array mathematics.
//!
//! Conventions (fixed throughout the crate):
//!
//! * steering vector `[a(theta, f)]_n = exp(-j 2 pi (n-1) d f sin(theta) / c)`
//! * antenna weight vector `[w(f)]_n = exp(-j 2 pi f tau_n)`
//! * combining uses the conjugate of `w`, i.e. the system response is
//!   `|w^H(f) a(theta, f)|^2`.
//!
//! Angles are radians everywhere inside the library; degrees exist only at the
//! CLI boundary.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

/// Relative tolerance for the critical-spacing predicate.
const CRITICAL_SPACING_RTOL: f64 = 1e-9;

/// Array geometry and carrier parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    /// Number of elements, N >= 1.
    pub num_elements: usize,
    /// Element spacing d in meters, > 0.
    pub element_spacing: f64,
    /// Carrier frequency f_c in Hz, > 0.
    pub carrier_freq: f64,
    /// Propagation speed c in m/s, > 0.
    pub wave_speed: f64,
}

impl ArrayConfig {
    pub const DEFAULT_WAVE_SPEED: f64 = 2.998e8;

    pub fn new(num_elements: usize, element_spacing: f64, carrier_freq: f64) -> Result<Self> {
        Self::with_wave_speed(
            num_elements,
            element_spacing,
            carrier_freq,
            Self::DEFAULT_WAVE_SPEED,
        )
    }

    pub fn with_wave_speed(
        num_elements: usize,
        element_spacing: f64,
        carrier_freq: f64,
        wave_speed: f64,
    ) -> Result<Self> {
        if num_elements < 1 {
            return Err(Error::InvalidConfig("num_elements must be >= 1"));
        }
        if !element_spacing.is_finite() || element_spacing <= 0.0 {
            return Err(Error::InvalidConfig("element_spacing must be finite and > 0"));
        }
        if !carrier_freq.is_finite() || carrier_freq <= 0.0 {
            return Err(Error::InvalidConfig("carrier_freq must be finite and > 0"));
        }
        if !wave_speed.is_finite() || wave_speed <= 0.0 {
            return Err(Error::InvalidConfig("wave_speed must be finite and > 0"));
        }
        Ok(Self {
            num_elements,
            element_spacing,
            carrier_freq,
            wave_speed,
        })
    }

    /// Array with d = c/(2 f_c), the widest spacing free of grating lobes.
    pub fn critically_spaced(num_elements: usize, carrier_freq: f64) -> Result<Self> {
        if !carrier_freq.is_finite() || carrier_freq <= 0.0 {
            return Err(Error::InvalidConfig("carrier_freq must be finite and > 0"));
        }
        let d = Self::DEFAULT_WAVE_SPEED / (2.0 * carrier_freq);
        Self::new(num_elements, d, carrier_freq)
    }

    /// Spacing c/(2 f_c) for this carrier.
    pub fn critical_spacing(&self) -> f64 {
        self.wave_speed / (2.0 * self.carrier_freq)
    }

    /// True iff |d - c/(2 f_c)| / (c/(2 f_c)) < 1e-9.
    pub fn is_critically_spaced(&self) -> bool {
        let d0 = self.critical_spacing();
        libm::fabs(self.element_spacing - d0) / d0 < CRITICAL_SPACING_RTOL
    }
}

/// Per-element delay taps plus quantization metadata.
///
/// `resolution == 0` means ideal continuous delays; `max_range == 0` means no
/// range cap is enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    /// tau_n in seconds, n = 1..N.
    pub taps: Vec<f64>,
    /// Seconds per LSB (0 = continuous).
    pub resolution: f64,
    /// Range cap in seconds (0 = unlimited).
    pub max_range: f64,
}

impl DelayProfile {
    /// Ideal (continuous, uncapped) profile.
    pub fn ideal(taps: Vec<f64>) -> Result<Self> {
        let p = Self {
            taps,
            resolution: 0.0,
            max_range: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::Empty("delay taps"));
        }
        for &t in &self.taps {
            if !t.is_finite() {
                return Err(Error::NonFinite("delay tap"));
            }
            if self.max_range > 0.0 && !(0.0..=self.max_range).contains(&t) {
                return Err(Error::InvalidConfig("tap outside [0, max_range]"));
            }
            if self.resolution > 0.0 {
                let steps = t / self.resolution;
                if libm::fabs(steps - libm::rint(steps)) > 1e-6 {
                    return Err(Error::InvalidConfig("tap not a multiple of resolution"));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    if libm::fabs(theta) > core::f64::consts::FRAC_PI_2 {
        return Err(Error::AngleOutOfRange(theta));
    }
    Ok(())
}

/// Unit-modulus phasor `exp(j phase)`.
#[inline]
pub(crate) fn cis(phase: f64) -> Complex64 {
    Complex64::new(libm::cos(phase), libm::sin(phase))
}

/// Array response `a(theta, f)` of a plane wave from `theta` at frequency `f`.
pub fn steering_vector(theta: f64, f: f64, cfg: &ArrayConfig) -> Result<Vec<Complex64>> {
    check_angle(theta)?;
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::NonFinite("frequency"));
    }
    let k = -2.0 * core::f64::consts::PI * cfg.element_spacing * f * libm::sin(theta)
        / cfg.wave_speed;
    Ok((0..cfg.num_elements).map(|n| cis(k * n as f64)).collect())
}

/// Antenna weight vector `w(f)` realized by the delay taps.
pub fn weight_vector(f: f64, taps: &DelayProfile) -> Result<Vec<Complex64>> {
    if !f.is_finite() {
        return Err(Error::NonFinite("frequency"));
    }
    taps.validate()?;
    Ok(taps
        .taps
        .iter()
        .map(|&tau| cis(-2.0 * core::f64::consts::PI * f * tau))
        .collect())
}

/// System frequency response `|w^H(f) a(theta, f)|^2`, in `[0, N^2]`.
pub fn frequency_response(theta: f64, f: f64, taps: &DelayProfile, cfg: &ArrayConfig) -> Result<f64> {
    if taps.len() != cfg.num_elements {
        return Err(Error::LengthMismatch("taps vs num_elements"));
    }
    let a = steering_vector(theta, f, cfg)?;
    let w = weight_vector(f, taps)?;
    let sum: Complex64 = w.iter().zip(&a).map(|(wn, an)| wn.conj() * an).sum();
    Ok(sum.norm_sqr())
}

/// Beam-training response `|w^H(nu) a(theta, f_c)|^2`.
///
/// This is the narrowband receive model: the inter-element phase comes from the
/// carrier (`a` at f_c) while the taps act on the baseband offset `nu`. It is
/// the quantity the PSD of the combined pilot measures, and what the template
/// codebook is built from.
pub fn training_response(theta: f64, nu: f64, taps: &DelayProfile, cfg: &ArrayConfig) -> Result<f64> {
    if taps.len() != cfg.num_elements {
        return Err(Error::LengthMismatch("taps vs num_elements"));
    }
    check_angle(theta)?;
    if !nu.is_finite() {
        return Err(Error::NonFinite("nu"));
    }
    taps.validate()?;
    let pi = core::f64::consts::PI;
    let carrier_phase =
        -2.0 * pi * cfg.element_spacing * cfg.carrier_freq * libm::sin(theta) / cfg.wave_speed;
    let sum: Complex64 = (0..cfg.num_elements)
        .map(|n| cis(n as f64 * carrier_phase + 2.0 * pi * nu * taps.taps[n]))
        .sum();
    Ok(sum.norm_sqr())
}

/// Baseband offset `nu*` at which the training response peaks for angle `theta`.
///
/// With critically spaced elements and training taps `(n-1)/bw`, the combined
/// response peaks at `nu* = bw sin(theta) / 2`, wrapped to `[-bw/2, bw/2)`.
/// The mapping is injective over `theta` in `(-pi/2, pi/2)`.
pub fn peak_frequency(theta: f64, bw: f64, cfg: &ArrayConfig) -> Result<f64> {
    check_angle(theta)?;
    if !bw.is_finite() || bw <= 0.0 {
        return Err(Error::InvalidConfig("bandwidth must be > 0"));
    }
    if !cfg.is_critically_spaced() {
        return Err(Error::NotCriticallySpaced);
    }
    let mut nu = bw * libm::sin(theta) / 2.0;
    // Half-open span: a tie at +bw/2 maps to -bw/2, matching DFT bin indexing.
    if nu >= bw / 2.0 {
        nu -= bw;
    }
    Ok(nu)
}

/// Largest training tap, `tau_N = (n-1)/bw`.
pub fn required_max_delay(n: usize, bw: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidConfig("element count must be >= 1"));
    }
    if !bw.is_finite() || bw <= 0.0 {
        return Err(Error::InvalidConfig("bandwidth must be > 0"));
    }
    Ok((n - 1) as f64 / bw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn critical4() -> ArrayConfig {
        ArrayConfig::critically_spaced(4, 60e9).unwrap()
    }

    #[test]
    fn steering_broadside_is_all_ones() {
        let cfg = critical4();
        let a = steering_vector(0.0, 60e9, &cfg).unwrap();
        for v in a {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_30deg_critical_quarter_turns() {
        // d f_c / c = 1/2 and sin 30 deg = 1/2, so entry n is exp(-j pi (n-1)/2).
        let cfg = critical4();
        let a = steering_vector(30f64.to_radians(), 60e9, &cfg).unwrap();
        let expect = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        for (v, e) in a.iter().zip(expect.iter()) {
            assert!((v - e).norm() < 1e-9, "{v} vs {e}");
        }
    }

    #[test]
    fn steering_endfire_two_elements() {
        let cfg = ArrayConfig::critically_spaced(2, 60e9).unwrap();
        let a = steering_vector(core::f64::consts::FRAC_PI_2, 60e9, &cfg).unwrap();
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn steering_rejects_out_of_range_angle() {
        let cfg = critical4();
        assert!(matches!(
            steering_vector(2.0, 60e9, &cfg),
            Err(Error::AngleOutOfRange(_))
        ));
        assert!(steering_vector(f64::NAN, 60e9, &cfg).is_err());
    }

    #[test]
    fn weights_zero_taps_all_ones() {
        let taps = DelayProfile::ideal(vec![0.0; 4]).unwrap();
        let w = weight_vector(1e9, &taps).unwrap();
        for v in w {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn training_taps_at_full_and_half_bandwidth() {
        let bw = 800e6;
        let taps = DelayProfile::ideal((0..4).map(|n| n as f64 / bw).collect()).unwrap();
        // f = BW: phases are integer multiples of 2 pi.
        for v in weight_vector(bw, &taps).unwrap() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        // f = BW/2: alternating signs.
        let w = weight_vector(bw / 2.0, &taps).unwrap();
        for (n, v) in w.iter().enumerate() {
            let e = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - Complex64::new(e, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn response_broadside_zero_taps_is_n_squared() {
        let cfg = critical4();
        let taps = DelayProfile::ideal(vec![0.0; 4]).unwrap();
        let r = frequency_response(0.0, 60e9, &taps, &cfg).unwrap();
        assert!((r - 16.0).abs() < 1e-9);
    }

    #[test]
    fn training_response_broadside_peak_and_null() {
        let cfg = critical4();
        let bw = 800e6;
        let taps = DelayProfile::ideal((0..4).map(|n| n as f64 / bw).collect()).unwrap();
        // Matched at nu = 0.
        assert!((training_response(0.0, 0.0, &taps, &cfg).unwrap() - 16.0).abs() < 1e-9);
        // Four quarter-turn phasors cancel at nu = BW/4.
        assert!(training_response(0.0, bw / 4.0, &taps, &cfg).unwrap() < 1e-18);
    }

    #[test]
    fn peak_frequency_matches_closed_form() {
        let cfg = critical4();
        assert_eq!(peak_frequency(0.0, 800e6, &cfg).unwrap(), 0.0);
        let nu = peak_frequency(30f64.to_radians(), 800e6, &cfg).unwrap();
        assert!((nu - 200e6).abs() < 1e-3);
        let nu = peak_frequency(-core::f64::consts::FRAC_PI_2, 800e6, &cfg).unwrap();
        assert!((nu + 400e6).abs() < 1e-3);
        // +90 deg wraps onto the negative edge of the half-open span.
        let nu = peak_frequency(core::f64::consts::FRAC_PI_2, 800e6, &cfg).unwrap();
        assert!((nu + 400e6).abs() < 1e-3);
    }

    #[test]
    fn peak_frequency_requires_critical_spacing() {
        let cfg = ArrayConfig::new(4, 1e-3, 60e9).unwrap();
        assert_eq!(
            peak_frequency(0.1, 800e6, &cfg),
            Err(Error::NotCriticallySpaced)
        );
    }

    #[test]
    fn max_delay_values() {
        assert!((required_max_delay(4, 800e6).unwrap() - 3.75e-9).abs() < 1e-24);
        assert_eq!(required_max_delay(1, 123.0).unwrap(), 0.0);
        assert!((required_max_delay(4, 491.32e6).unwrap() - 6.106e-9).abs() < 1e-12);
    }

    #[test]
    fn peak_frequency_injective_over_181_angles() {
        let cfg = critical4();
        let bw = 800e6;
        // 181 angles on the half-open span [-90, 90).
        let mut nus: Vec<f64> = (0..181)
            .map(|i| {
                let th = (-90.0 + i as f64 * 180.0 / 181.0).to_radians();
                peak_frequency(th, bw, &cfg).unwrap()
            })
            .collect();
        nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in nus.windows(2) {
            assert!(pair[1] > pair[0], "duplicate peak frequency {}", pair[0]);
        }
    }

    #[test]
    fn conjugate_symmetry_of_training_response() {
        let cfg = critical4();
        let bw = 800e6;
        let taps = DelayProfile::ideal((0..4).map(|n| n as f64 / bw).collect()).unwrap();
        for i in 0..19 {
            let th = (-90.0 + 10.0 * i as f64).to_radians();
            for k in -8i32..=8 {
                let nu = k as f64 * bw / 16.0;
                let r1 = training_response(-th, nu, &taps, &cfg).unwrap();
                let r2 = training_response(th, -nu, &taps, &cfg).unwrap();
                assert!((r1 - r2).abs() < 1e-6 * (1.0 + r1));
            }
        }
    }

    #[test]
    fn critical_spacing_predicate() {
        let cfg = critical4();
        assert!(cfg.is_critically_spaced());
        let off = ArrayConfig::new(4, cfg.element_spacing * 1.001, 60e9).unwrap();
        assert!(!off.is_critically_spaced());
    }
}
