//! JSON experiment configuration: strict parsing (unknown keys are errors),
//! validation against the core library invariants, and resolution of every
//! default so the manifest can echo the exact configuration a run used.

use serde::{Deserialize, Serialize};

use ttd_core::array_model::ArrayConfig;
use ttd_core::channel::ChannelModel;
use ttd_core::ttd_engine::ImpairmentConfig;

use crate::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Top-level config document as written by the user.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub version: u32,
    pub experiment: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub array: ArraySection,
    #[serde(default)]
    pub impairments: ImpairmentSection,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub num_elements: usize,
    pub carrier_freq_hz: f64,
    /// Omitted = critical spacing c/(2 f_c).
    #[serde(default)]
    pub element_spacing_m: Option<f64>,
    #[serde(default)]
    pub wave_speed_mps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpairmentSection {
    pub delay_resolution_s: f64,
    pub delay_range_s: f64,
    pub analog_bw_hz: f64,
    pub buffer_loss_db: f64,
    pub interleave_factor: usize,
    pub lane_gain_sigma: f64,
    pub lane_offset_sigma: f64,
}

impl Default for ImpairmentSection {
    fn default() -> Self {
        Self {
            delay_resolution_s: 0.0,
            delay_range_s: 0.0,
            analog_bw_hz: 0.0,
            buffer_loss_db: 0.0,
            interleave_factor: 1,
            lane_gain_sigma: 0.0,
            lane_offset_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModelName {
    WidebandRf,
    Narrowband,
}

impl From<ChannelModelName> for ChannelModel {
    fn from(m: ChannelModelName) -> Self {
        match m {
            ChannelModelName::WidebandRf => ChannelModel::WidebandRf,
            ChannelModelName::Narrowband => ChannelModel::Narrowband,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstellationName {
    Qpsk,
    Qam16,
}

impl From<ConstellationName> for ttd_core::waveform::Constellation {
    fn from(c: ConstellationName) -> Self {
        match c {
            ConstellationName::Qpsk => ttd_core::waveform::Constellation::Qpsk,
            ConstellationName::Qam16 => ttd_core::waveform::Constellation::Qam16,
        }
    }
}

fn default_sample_rate() -> f64 {
    2.048e9
}

fn default_block_len() -> usize {
    1024
}

fn default_wideband_rf() -> ChannelModelName {
    ChannelModelName::WidebandRf
}

fn default_narrowband() -> ChannelModelName {
    ChannelModelName::Narrowband
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BeamTrainPsdParams {
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub repetitions: usize,
    pub angles_deg: Vec<f64>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_wideband_rf")]
    pub channel_model: ChannelModelName,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GainSweepParams {
    #[serde(default)]
    pub theta_deg: f64,
    pub freq_start_hz: f64,
    pub freq_stop_hz: f64,
    pub num_probes: usize,
    pub elements: Vec<usize>,
    #[serde(default = "default_narrowband")]
    pub channel_model: ChannelModelName,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BeamPatternParams {
    pub steer_angles_deg: Vec<f64>,
    pub eval_freq_hz: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
}

fn default_grid_step() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WidebandGainParams {
    pub theta_deg: f64,
    pub freq_start_hz: f64,
    pub freq_stop_hz: f64,
    pub num_probes: usize,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EvmParams {
    pub constellations: Vec<ConstellationName>,
    /// One EVM measurement per entry; `null` means the noiseless chain.
    pub snr_db: Vec<Option<f64>>,
    pub num_symbols: usize,
    pub symbol_rate_hz: f64,
    /// When set, symbols pass through the full array chain (channel at this
    /// angle, matched comms taps, combiner) before noise is added.
    #[serde(default)]
    pub array_chain_theta_deg: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyParams {
    pub sequential_beams: Vec<usize>,
    #[serde(default = "default_one")]
    pub pilots: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloAngleParams {
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub repetitions: usize,
    pub angles_deg: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_wideband_rf")]
    pub channel_model: ChannelModelName,
}

/// A parsed, validated experiment description.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "experiment", content = "params")]
pub enum Experiment {
    BeamTrainPsd(BeamTrainPsdParams),
    GainSweep(GainSweepParams),
    BeamPattern(BeamPatternParams),
    WidebandGain(WidebandGainParams),
    Evm(EvmParams),
    Latency(LatencyParams),
    MonteCarloAngle(MonteCarloAngleParams),
}

pub const EXPERIMENT_NAMES: &[&str] = &[
    "beam_train_psd",
    "gain_sweep",
    "beam_pattern",
    "wideband_gain",
    "evm",
    "latency",
    "monte_carlo_angle",
];

/// Fully resolved configuration: every default made explicit.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub raw: RawConfig,
    pub experiment: Experiment,
    pub array: ArrayConfig,
    pub impairments: ImpairmentConfig,
    pub seed: u64,
    pub output_dir: String,
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_angle_deg(deg: f64, what: &str) -> Result<()> {
    if !deg.is_finite() || deg.abs() > 90.0 {
        return Err(validation(format!(
            "{what} must be a finite angle within [-90, 90] degrees, got {deg}"
        )));
    }
    Ok(())
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(validation(format!("{what} must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn params<T: serde::de::DeserializeOwned>(value: &serde_json::Value, name: &str) -> Result<T> {
    serde_json::from_value(value.clone())
        .map_err(|e| validation(format!("invalid params for {name}: {e}")))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| validation(format!("config does not parse: {e}")))
    }

    /// Validate everything and resolve defaults. `seed_override` and
    /// `output_override` come from the command line.
    pub fn resolve(
        self,
        seed_override: Option<u64>,
        output_override: Option<String>,
    ) -> Result<ResolvedConfig> {
        if self.version != CONFIG_VERSION {
            return Err(validation(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }

        let array = {
            let a = &self.array;
            let c = a.wave_speed_mps.unwrap_or(ArrayConfig::DEFAULT_WAVE_SPEED);
            check_positive(a.carrier_freq_hz, "array.carrier_freq_hz")?;
            let d = a
                .element_spacing_m
                .unwrap_or(c / (2.0 * a.carrier_freq_hz));
            ArrayConfig::with_wave_speed(a.num_elements, d, a.carrier_freq_hz, c)
                .map_err(|e| validation(format!("array: {e}")))?
        };

        let impairments = ImpairmentConfig {
            delay_resolution: self.impairments.delay_resolution_s,
            delay_range: self.impairments.delay_range_s,
            analog_bw: self.impairments.analog_bw_hz,
            buffer_loss_db: self.impairments.buffer_loss_db,
            interleave_factor: self.impairments.interleave_factor,
            lane_gain_sigma: self.impairments.lane_gain_sigma,
            lane_offset_sigma: self.impairments.lane_offset_sigma,
            seed: self.seed.unwrap_or(0),
        };
        impairments
            .validate()
            .map_err(|e| validation(format!("impairments: {e}")))?;

        let experiment = match self.experiment.as_str() {
            "beam_train_psd" => {
                let p: BeamTrainPsdParams = params(&self.params, "beam_train_psd")?;
                check_positive(p.bandwidth_hz, "params.bandwidth_hz")?;
                if p.num_subcarriers < 2 {
                    return Err(validation("params.num_subcarriers must be >= 2"));
                }
                if p.repetitions < 2 {
                    return Err(validation(
                        "params.repetitions must be >= 2 (the PSD uses two-block segments)",
                    ));
                }
                if p.angles_deg.is_empty() {
                    return Err(validation("params.angles_deg must not be empty"));
                }
                for &a in &p.angles_deg {
                    check_angle_deg(a, "params.angles_deg entry")?;
                }
                if !array.is_critically_spaced() {
                    return Err(validation(
                        "beam_train_psd requires a critically spaced array (omit element_spacing_m)",
                    ));
                }
                Experiment::BeamTrainPsd(p)
            }
            "gain_sweep" => {
                let p: GainSweepParams = params(&self.params, "gain_sweep")?;
                check_angle_deg(p.theta_deg, "params.theta_deg")?;
                check_positive(p.freq_start_hz, "params.freq_start_hz")?;
                check_positive(p.freq_stop_hz, "params.freq_stop_hz")?;
                if p.num_probes < 1 {
                    return Err(validation("params.num_probes must be >= 1"));
                }
                if p.elements.is_empty()
                    || p.elements.iter().any(|&e| e < 1 || e > array.num_elements)
                {
                    return Err(validation("params.elements entries must be in 1..=num_elements"));
                }
                check_positive(p.sample_rate_hz, "params.sample_rate_hz")?;
                Experiment::GainSweep(p)
            }
            "beam_pattern" => {
                let p: BeamPatternParams = params(&self.params, "beam_pattern")?;
                if p.steer_angles_deg.is_empty() {
                    return Err(validation("params.steer_angles_deg must not be empty"));
                }
                for &a in &p.steer_angles_deg {
                    check_angle_deg(a, "params.steer_angles_deg entry")?;
                }
                check_positive(p.grid_step_deg, "params.grid_step_deg")?;
                check_positive(p.sample_rate_hz, "params.sample_rate_hz")?;
                Experiment::BeamPattern(p)
            }
            "wideband_gain" => {
                let p: WidebandGainParams = params(&self.params, "wideband_gain")?;
                check_angle_deg(p.theta_deg, "params.theta_deg")?;
                check_positive(p.freq_start_hz, "params.freq_start_hz")?;
                check_positive(p.freq_stop_hz, "params.freq_stop_hz")?;
                if p.num_probes < 2 {
                    return Err(validation("params.num_probes must be >= 2"));
                }
                Experiment::WidebandGain(p)
            }
            "evm" => {
                let p: EvmParams = params(&self.params, "evm")?;
                if p.constellations.is_empty() || p.snr_db.is_empty() {
                    return Err(validation(
                        "params.constellations and params.snr_db must not be empty",
                    ));
                }
                if p.num_symbols < 100 {
                    return Err(validation("params.num_symbols must be >= 100"));
                }
                check_positive(p.symbol_rate_hz, "params.symbol_rate_hz")?;
                if let Some(theta) = p.array_chain_theta_deg {
                    check_angle_deg(theta, "params.array_chain_theta_deg")?;
                }
                Experiment::Evm(p)
            }
            "latency" => {
                let p: LatencyParams = params(&self.params, "latency")?;
                if p.sequential_beams.is_empty() || p.sequential_beams.contains(&0) {
                    return Err(validation("params.sequential_beams must be nonzero counts"));
                }
                if p.pilots < 1 {
                    return Err(validation("params.pilots must be >= 1"));
                }
                Experiment::Latency(p)
            }
            "monte_carlo_angle" => {
                let p: MonteCarloAngleParams = params(&self.params, "monte_carlo_angle")?;
                check_positive(p.bandwidth_hz, "params.bandwidth_hz")?;
                if p.num_subcarriers < 2 || p.repetitions < 2 {
                    return Err(validation(
                        "params.num_subcarriers and params.repetitions must be >= 2",
                    ));
                }
                if p.angles_deg.is_empty() || p.snr_db.is_empty() || p.trials < 1 {
                    return Err(validation(
                        "params.angles_deg, params.snr_db, and params.trials must be nonempty",
                    ));
                }
                for &a in &p.angles_deg {
                    check_angle_deg(a, "params.angles_deg entry")?;
                }
                if !array.is_critically_spaced() {
                    return Err(validation(
                        "monte_carlo_angle requires a critically spaced array",
                    ));
                }
                Experiment::MonteCarloAngle(p)
            }
            other => {
                return Err(validation(format!(
                    "unknown experiment {other:?}; expected one of {EXPERIMENT_NAMES:?}"
                )))
            }
        };

        let randomized = match &experiment {
            Experiment::BeamTrainPsd(_) | Experiment::MonteCarloAngle(_) | Experiment::Evm(_) => {
                true
            }
            _ => {
                self.impairments.lane_gain_sigma != 0.0
                    || self.impairments.lane_offset_sigma != 0.0
            }
        };
        let seed = match (seed_override, self.seed) {
            (Some(s), _) => s,
            (None, Some(s)) => s,
            (None, None) if randomized => {
                return Err(validation(
                    "this experiment is randomized; an explicit seed is required",
                ))
            }
            (None, None) => 0,
        };

        let output_dir = output_override
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| "results".to_string());

        Ok(ResolvedConfig {
            raw: self,
            experiment,
            array,
            impairments: ImpairmentConfig { seed, ..impairments },
            seed,
            output_dir,
        })
    }
}
