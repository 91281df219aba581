//! Experiment runners: each turns a resolved configuration into result tables
//! and a JSON summary.

use serde_json::{json, Value};

use ttd_core::beam_training::{
    build_codebook, estimate_angle_peak, estimate_angle_template, training_latency_ratio,
    AngleEstimate, EstimatorMethod, TemplateCodebook,
};
use ttd_core::channel::{propagate, ChannelModel, ChannelScenario};
use ttd_core::metrics::{beam_pattern, evm, gain_sweep};
use ttd_core::signal_core::{add_awgn, welch_psd, MultichannelSignal, Spectrum};
use ttd_core::ttd_engine::{apply_and_combine, design_taps, quantize_taps, TtdMode};
use ttd_core::waveform::{gen_ofdm_pilot, gen_qam_frame, OfdmPilotSpec};

use crate::config::{
    BeamPatternParams, BeamTrainPsdParams, EvmParams, Experiment, GainSweepParams, LatencyParams,
    MonteCarloAngleParams, ResolvedConfig, WidebandGainParams,
};
use crate::{CliError, Result};

/// One result table ready for CSV emission.
pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

/// Everything a run produces besides the manifest.
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
        .collect()
}

fn method_name(m: EstimatorMethod) -> &'static str {
    match m {
        EstimatorMethod::PeakMap => "peak_map",
        EstimatorMethod::TemplateMatch => "template_match",
    }
}

pub fn run(cfg: &ResolvedConfig) -> Result<RunOutput> {
    match &cfg.experiment {
        Experiment::BeamTrainPsd(p) => run_beam_train_psd(cfg, p),
        Experiment::GainSweep(p) => run_gain_sweep(cfg, p),
        Experiment::BeamPattern(p) => run_beam_pattern(cfg, p),
        Experiment::WidebandGain(p) => run_wideband_gain(cfg, p),
        Experiment::Evm(p) => run_evm(cfg, p),
        Experiment::Latency(p) => run_latency(p),
        Experiment::MonteCarloAngle(p) => run_monte_carlo(cfg, p),
    }
}

/// Pilot -> channel -> training-tap combiner -> Welch PSD, with two pilot
/// blocks per segment so subcarrier bins stay proportional to the response.
struct TrainingPipeline {
    spec: OfdmPilotSpec,
    sample_rate: f64,
    block_len: usize,
}

impl TrainingPipeline {
    fn new(bandwidth: f64, num_subcarriers: usize, repetitions: usize, seed: u64) -> Result<Self> {
        let spacing = bandwidth / num_subcarriers as f64;
        let sample_rate = spacing * (2 * num_subcarriers) as f64;
        let spec =
            OfdmPilotSpec::new(bandwidth, spacing, repetitions, seed).map_err(runtime)?;
        let block_len = spec.block_len(sample_rate).map_err(runtime)?;
        Ok(Self {
            spec,
            sample_rate,
            block_len,
        })
    }

    fn run(
        &self,
        cfg: &ResolvedConfig,
        model: ChannelModel,
        theta: f64,
        snr_db: Option<f64>,
        noise_seed: u64,
    ) -> Result<Spectrum> {
        let tx = gen_ofdm_pilot(&self.spec, self.sample_rate).map_err(runtime)?;
        let mut scen = ChannelScenario::new(theta, cfg.array.clone(), model).map_err(runtime)?;
        scen.snr_db = snr_db;
        scen.seed = noise_seed;
        let ms = propagate(&tx, self.sample_rate, &scen).map_err(runtime)?;
        let taps = design_taps(
            TtdMode::Training {
                bw: self.spec.bandwidth,
            },
            &cfg.array,
        )
        .map_err(runtime)?;
        let taps = quantize_taps(&taps, &cfg.impairments).map_err(runtime)?.profile;
        let y = apply_and_combine(&ms, &taps, &cfg.impairments, 0.0).map_err(runtime)?;
        welch_psd(&y, self.sample_rate, 2 * self.block_len, 0.5).map_err(runtime)
    }

    fn codebook(&self, cfg: &ResolvedConfig, angle_grid: &[f64]) -> Result<TemplateCodebook> {
        let taps = design_taps(
            TtdMode::Training {
                bw: self.spec.bandwidth,
            },
            &cfg.array,
        )
        .map_err(runtime)?;
        build_codebook(&cfg.array, &taps, &self.spec.subcarrier_freqs(), angle_grid)
            .map_err(runtime)
    }
}

fn sorted_grid_rad(angles_deg: &[f64]) -> Result<Vec<f64>> {
    let mut grid: Vec<f64> = angles_deg.iter().map(|a| a.to_radians()).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    if grid.len() != angles_deg.len() {
        return Err(CliError::Validation(
            "params.angles_deg must not contain duplicates".into(),
        ));
    }
    Ok(grid)
}

fn estimate_row(theta_deg: f64, est: &AngleEstimate) -> Vec<String> {
    vec![
        fmt(theta_deg),
        fmt(est.theta_hat.to_degrees()),
        fmt(est.peak_bin_freq),
        method_name(est.method).to_string(),
        fmt(est.confidence),
    ]
}

fn run_beam_train_psd(cfg: &ResolvedConfig, p: &BeamTrainPsdParams) -> Result<RunOutput> {
    let pipe = TrainingPipeline::new(p.bandwidth_hz, p.num_subcarriers, p.repetitions, cfg.seed)?;
    let grid = sorted_grid_rad(&p.angles_deg)?;
    let codebook = pipe.codebook(cfg, &grid)?;

    let mut angle_rows = Vec::new();
    let mut psd_rows = Vec::new();
    let mut summary_angles = Vec::new();
    for (i, &theta) in grid.iter().enumerate() {
        let psd = pipe.run(
            cfg,
            p.channel_model.into(),
            theta,
            p.snr_db,
            cfg.seed.wrapping_add(1 + i as u64),
        )?;
        let theta_deg = theta.to_degrees();
        for (&f, &b) in psd.bin_freqs.iter().zip(&psd.bins) {
            psd_rows.push(vec![fmt(theta_deg), fmt(f), fmt(b)]);
        }
        let peak = estimate_angle_peak(&psd, p.bandwidth_hz, &cfg.array).map_err(runtime)?;
        let tmpl = estimate_angle_template(&psd, &codebook).map_err(runtime)?;
        angle_rows.push(estimate_row(theta_deg, &peak));
        angle_rows.push(estimate_row(theta_deg, &tmpl));
        summary_angles.push(json!({
            "theta_true_deg": theta_deg,
            "peak_map_deg": peak.theta_hat.to_degrees(),
            "template_match_deg": tmpl.theta_hat.to_degrees(),
            "peak_bin_hz": peak.peak_bin_freq,
            "edge_flagged": peak.edge_flagged,
        }));
    }

    Ok(RunOutput {
        tables: vec![
            Table {
                name: "angles.csv",
                header: &[
                    "theta_true_deg",
                    "theta_hat_deg",
                    "peak_bin_hz",
                    "method",
                    "confidence",
                ],
                rows: angle_rows,
            },
            Table {
                name: "psd.csv",
                header: &["theta_true_deg", "freq_hz", "psd"],
                rows: psd_rows,
            },
        ],
        summary: json!({
            "experiment": "beam_train_psd",
            "subcarrier_spacing_hz": pipe.spec.subcarrier_spacing,
            "sample_rate_hz": pipe.sample_rate,
            "angles": summary_angles,
        }),
    })
}

fn run_gain_sweep(cfg: &ResolvedConfig, p: &GainSweepParams) -> Result<RunOutput> {
    let probes = linspace(p.freq_start_hz, p.freq_stop_hz, p.num_probes);
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &elements in &p.elements {
        let sweep = gain_sweep(
            &cfg.array,
            p.theta_deg.to_radians(),
            &cfg.impairments,
            p.channel_model.into(),
            &probes,
            elements,
            p.sample_rate_hz,
            p.block_len,
        )
        .map_err(runtime)?;
        for (&f, &g) in sweep.freqs.iter().zip(&sweep.gain_db) {
            rows.push(vec![fmt(f), fmt(g), elements.to_string()]);
        }
        let mean = sweep.gain_db.iter().sum::<f64>() / sweep.gain_db.len() as f64;
        curves.push(json!({ "elements": elements, "mean_gain_db": mean }));
    }
    Ok(RunOutput {
        tables: vec![Table {
            name: "results.csv",
            header: &["freq_hz", "gain_db", "elements"],
            rows,
        }],
        summary: json!({ "experiment": "gain_sweep", "curves": curves }),
    })
}

fn run_beam_pattern(cfg: &ResolvedConfig, p: &BeamPatternParams) -> Result<RunOutput> {
    let steps = (180.0 / p.grid_step_deg).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (-90.0 + i as f64 * p.grid_step_deg).to_radians())
        .take_while(|t| *t <= std::f64::consts::FRAC_PI_2 + 1e-12)
        .collect();
    let mut rows = Vec::new();
    let mut peaks = Vec::new();
    for &steer_deg in &p.steer_angles_deg {
        let pat = beam_pattern(
            &cfg.array,
            steer_deg.to_radians(),
            &cfg.impairments,
            p.eval_freq_hz,
            &grid,
            p.sample_rate_hz,
            p.block_len,
        )
        .map_err(runtime)?;
        for (&t, &g) in pat.angles.iter().zip(&pat.gain_db) {
            rows.push(vec![fmt(steer_deg), fmt(t.to_degrees()), fmt(g)]);
        }
        let peak = pat
            .gain_db
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| pat.angles[i].to_degrees())
            .unwrap_or(f64::NAN);
        peaks.push(json!({ "steer_deg": steer_deg, "peak_deg": peak }));
    }
    Ok(RunOutput {
        tables: vec![Table {
            name: "results.csv",
            header: &["steer_deg", "angle_deg", "gain_db"],
            rows,
        }],
        summary: json!({ "experiment": "beam_pattern", "peaks": peaks }),
    })
}

fn run_wideband_gain(cfg: &ResolvedConfig, p: &WidebandGainParams) -> Result<RunOutput> {
    let probes = linspace(p.freq_start_hz, p.freq_stop_hz, p.num_probes);
    let elements = cfg.array.num_elements;
    let sweep = gain_sweep(
        &cfg.array,
        p.theta_deg.to_radians(),
        &cfg.impairments,
        ChannelModel::WidebandRf,
        &probes,
        elements,
        p.sample_rate_hz,
        p.block_len,
    )
    .map_err(runtime)?;
    let rows = sweep
        .freqs
        .iter()
        .zip(&sweep.gain_db)
        .map(|(&f, &g)| vec![fmt(f), fmt(g), elements.to_string()])
        .collect();
    let max = sweep.gain_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = sweep.gain_db.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(RunOutput {
        tables: vec![Table {
            name: "results.csv",
            header: &["freq_hz", "gain_db", "elements"],
            rows,
        }],
        summary: json!({
            "experiment": "wideband_gain",
            "span_hz": p.freq_stop_hz - p.freq_start_hz,
            "ripple_db": max - min,
            "max_gain_db": max,
        }),
    })
}

fn run_evm(cfg: &ResolvedConfig, p: &EvmParams) -> Result<RunOutput> {
    let mut rows = Vec::new();
    let mut measurements = Vec::new();
    let mut case = 0u64;
    for &name in &p.constellations {
        for &snr_db in &p.snr_db {
            case += 1;
            let constellation = name.into();
            let frame = gen_qam_frame(
                constellation,
                p.num_symbols,
                p.symbol_rate_hz,
                cfg.seed.wrapping_add(case),
            )
            .map_err(runtime)?;

            let symbols = match p.array_chain_theta_deg {
                None => frame.symbols,
                Some(theta_deg) => {
                    let theta = theta_deg.to_radians();
                    let scen =
                        ChannelScenario::new(theta, cfg.array.clone(), ChannelModel::WidebandRf)
                            .map_err(runtime)?;
                    let ms = propagate(&frame.symbols, p.symbol_rate_hz, &scen)
                        .map_err(runtime)?;
                    let taps = design_taps(TtdMode::Comms { theta }, &cfg.array)
                        .map_err(runtime)?;
                    let taps =
                        quantize_taps(&taps, &cfg.impairments).map_err(runtime)?.profile;
                    apply_and_combine(&ms, &taps, &cfg.impairments, cfg.array.carrier_freq)
                        .map_err(runtime)?
                }
            };
            let signal = MultichannelSignal::new(vec![symbols], p.symbol_rate_hz, 0.0)
                .map_err(runtime)?;
            let noisy = add_awgn(&signal, snr_db, cfg.seed.wrapping_add(1000 + case))
                .map_err(runtime)?;
            let report =
                evm(&noisy.channels[0], constellation, snr_db).map_err(runtime)?;

            let constellation_name = match name {
                crate::config::ConstellationName::Qpsk => "qpsk",
                crate::config::ConstellationName::Qam16 => "qam16",
            };
            let snr_cell = snr_db.map(fmt).unwrap_or_default();
            rows.push(vec![
                constellation_name.to_string(),
                snr_cell,
                fmt(report.evm_rms_percent),
                report.num_symbols.to_string(),
            ]);
            measurements.push(json!({
                "constellation": constellation_name,
                "snr_db": snr_db,
                "evm_pct": report.evm_rms_percent,
            }));
        }
    }
    Ok(RunOutput {
        tables: vec![Table {
            name: "results.csv",
            header: &["constellation", "snr_db", "evm_pct", "n_symbols"],
            rows,
        }],
        summary: json!({ "experiment": "evm", "measurements": measurements }),
    })
}

fn run_latency(p: &LatencyParams) -> Result<RunOutput> {
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &beams in &p.sequential_beams {
        let ratio = training_latency_ratio(beams, p.pilots).map_err(runtime)?;
        rows.push(vec![beams.to_string(), p.pilots.to_string(), fmt(ratio)]);
        ratios.push(json!({ "sequential_beams": beams, "ratio": ratio }));
    }
    Ok(RunOutput {
        tables: vec![Table {
            name: "results.csv",
            header: &["n_beams_sequential", "pilots", "ratio"],
            rows,
        }],
        summary: json!({ "experiment": "latency", "ratios": ratios }),
    })
}

fn run_monte_carlo(cfg: &ResolvedConfig, p: &MonteCarloAngleParams) -> Result<RunOutput> {
    let pipe = TrainingPipeline::new(p.bandwidth_hz, p.num_subcarriers, p.repetitions, cfg.seed)?;
    let grid = sorted_grid_rad(&p.angles_deg)?;
    let codebook = pipe.codebook(cfg, &grid)?;

    let mut rows = Vec::new();
    let mut summary_points = Vec::new();
    for (si, &snr_db) in p.snr_db.iter().enumerate() {
        let mut se_peak = 0.0f64;
        let mut se_tmpl = 0.0f64;
        for t in 0..p.trials {
            let theta = grid[t % grid.len()];
            let noise_seed = cfg
                .seed
                .wrapping_add(10_000)
                .wrapping_add(si as u64 * 1_000_000)
                .wrapping_add(t as u64);
            let psd = pipe.run(cfg, p.channel_model.into(), theta, Some(snr_db), noise_seed)?;
            let peak = estimate_angle_peak(&psd, p.bandwidth_hz, &cfg.array).map_err(runtime)?;
            let tmpl = estimate_angle_template(&psd, &codebook).map_err(runtime)?;
            se_peak += (peak.theta_hat - theta).powi(2);
            se_tmpl += (tmpl.theta_hat - theta).powi(2);
        }
        let rmse_peak = (se_peak / p.trials as f64).sqrt().to_degrees();
        let rmse_tmpl = (se_tmpl / p.trials as f64).sqrt().to_degrees();
        rows.push(vec![
            fmt(snr_db),
            "peak_map".into(),
            p.trials.to_string(),
            fmt(rmse_peak),
        ]);
        rows.push(vec![
            fmt(snr_db),
            "template_match".into(),
            p.trials.to_string(),
            fmt(rmse_tmpl),
        ]);
        summary_points.push(json!({
            "snr_db": snr_db,
            "rmse_peak_map_deg": rmse_peak,
            "rmse_template_match_deg": rmse_tmpl,
        }));
    }
    Ok(RunOutput {
        tables: vec![Table {
            name: "results.csv",
            header: &["snr_db", "method", "trials", "rmse_deg"],
            rows,
        }],
        summary: json!({ "experiment": "monte_carlo_angle", "points": summary_points }),
    })
}
