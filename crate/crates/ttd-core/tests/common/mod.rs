//! Shared end-to-end pipeline helpers for the integration suites.

use ttd_core::array_model::ArrayConfig;
use ttd_core::beam_training::{build_codebook, TemplateCodebook};
use ttd_core::channel::{propagate, ChannelModel, ChannelScenario};
use ttd_core::signal_core::{welch_psd, Spectrum};
use ttd_core::ttd_engine::{apply_and_combine, design_taps, ImpairmentConfig, TtdMode};
use ttd_core::waveform::{gen_ofdm_pilot, OfdmPilotSpec};

/// Fixed parameters of one beam-training experiment.
pub struct TrainingSetup {
    pub cfg: ArrayConfig,
    pub bw: f64,
    pub num_subcarriers: usize,
    pub repetitions: usize,
    pub model: ChannelModel,
}

impl TrainingSetup {
    pub fn subcarrier_spacing(&self) -> f64 {
        self.bw / self.num_subcarriers as f64
    }

    pub fn sample_rate(&self) -> f64 {
        // One block = 2x the subcarrier count, a power of two when the count is.
        self.subcarrier_spacing() * (2 * self.num_subcarriers) as f64
    }

    pub fn pilot_spec(&self, seed: u64) -> OfdmPilotSpec {
        OfdmPilotSpec::new(self.bw, self.subcarrier_spacing(), self.repetitions, seed).unwrap()
    }

    /// Full receive chain: pilot -> channel(theta) -> training-tap combine ->
    /// Welch PSD of the combined output.
    pub fn run(&self, theta: f64, snr_db: Option<f64>, seed: u64) -> Spectrum {
        let f_s = self.sample_rate();
        let spec = self.pilot_spec(seed);
        let tx = gen_ofdm_pilot(&spec, f_s).unwrap();
        let mut scen = ChannelScenario::new(theta, self.cfg.clone(), self.model).unwrap();
        scen.snr_db = snr_db;
        scen.seed = seed.wrapping_add(0x9e37);
        let ms = propagate(&tx, f_s, &scen).unwrap();
        let taps = design_taps(TtdMode::Training { bw: self.bw }, &self.cfg).unwrap();
        // rf_ref = 0: training weights are defined at baseband offsets.
        let y = apply_and_combine(&ms, &taps, &ImpairmentConfig::default(), 0.0).unwrap();
        // Two pilot blocks per segment: the subcarriers land on even bins and
        // the Hann leakage lands on the empty odd bins, so the subcarrier bins
        // stay proportional to the system response. Needs repetitions >= 2.
        let block = spec.block_len(f_s).unwrap();
        welch_psd(&y, f_s, 2 * block, 0.5).unwrap()
    }

    pub fn codebook(&self, angle_grid: &[f64]) -> TemplateCodebook {
        let taps = design_taps(TtdMode::Training { bw: self.bw }, &self.cfg).unwrap();
        let freqs = self.pilot_spec(0).subcarrier_freqs();
        build_codebook(&self.cfg, &taps, &freqs, angle_grid).unwrap()
    }
}
