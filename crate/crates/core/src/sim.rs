//! Experiment harness: seeded scenario generation, the uplink/downlink/DOA
//! tracking pipeline over SNR and antenna grids, and CSV result files.
//!
//! Trials are independent and scheduled over a small worker pool; rows are
//! collected and written in a fixed order, so the output bytes depend only on
//! the experiment spec.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::channel::{bs_steering, classify, synthesize_pilot_observation, PathParams};
use crate::config::{DownlinkConfig, SystemConfig};
use crate::downlink::{
    beamforming_vector, downlink_stacked_channel, downlink_steering, estimate_downlink_gain,
    gain_normalization, map_reciprocal, reconstruct_downlink, DownlinkPath,
};
use crate::ekf::{track_doa, BlockSnapshot, EkfSettings};
use crate::error::{Error, Result};
use crate::gcs::{track_uplink, GcsSettings};
use crate::metrics::{match_paths, mse_metrics};

/// How planted truths are produced for each trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "policy")]
pub enum TruthPolicy {
    /// The same explicit path list for every trial.
    Fixed { paths: Vec<PathParams> },
    /// Random paths with minimum pairwise separations; `None` derives the
    /// separations from the array/observation resolution.
    Random {
        #[serde(default)]
        delta_theta: Option<f64>,
        #[serde(default)]
        delta_fd: Option<f64>,
    },
}

fn default_id() -> String {
    "squint".into()
}

fn default_ekf_blocks() -> usize {
    50
}

fn default_ekf_rate() -> f64 {
    1e-3
}

/// Full experiment description; deserialized from a single JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_id")]
    pub id: String,
    pub system: SystemConfig,
    pub downlink: DownlinkConfig,
    #[serde(default)]
    pub gcs: GcsSettings,
    #[serde(default)]
    pub ekf: EkfSettings,
    pub snr_grid_db: Vec<f64>,
    pub antenna_grid: Vec<usize>,
    pub n_trials: usize,
    pub seed: u64,
    pub k_uavs: usize,
    pub truth_policy: TruthPolicy,
    /// Blocks simulated for the DOA tracking stage of each trial.
    #[serde(default = "default_ekf_blocks")]
    pub ekf_blocks: usize,
    /// True angular rate of the tracked path, radians per block.
    #[serde(default = "default_ekf_rate")]
    pub ekf_rate: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.downlink.validate()?;
        self.gcs.validate()?;
        if self.snr_grid_db.is_empty() || self.antenna_grid.is_empty() {
            return Err(Error::Config("snr and antenna grids must be non-empty".into()));
        }
        if self.n_trials < 1 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if self.k_uavs < 1 {
            return Err(Error::Config("k_uavs must be >= 1".into()));
        }
        if self.ekf_blocks < 1 {
            return Err(Error::Config("ekf_blocks must be >= 1".into()));
        }
        match &self.truth_policy {
            TruthPolicy::Fixed { paths } => {
                if paths.len() != self.k_uavs {
                    return Err(Error::Config(format!(
                        "fixed truth list has {} paths but k_uavs is {}",
                        paths.len(),
                        self.k_uavs
                    )));
                }
                for p in paths {
                    p.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
            }
            TruthPolicy::Random {
                delta_theta,
                delta_fd,
            } => {
                for (name, v) in [("delta_theta", delta_theta), ("delta_fd", delta_fd)] {
                    if let Some(v) = v {
                        if !(*v > 0.0) {
                            return Err(Error::Config(format!("{name} must be positive")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// System config for one antenna-grid point.
    pub fn system_for(&self, m_bs: usize) -> SystemConfig {
        let mut cfg = self.system.clone();
        cfg.m_bs = m_bs;
        cfg
    }
}

/// One long-format result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub experiment: String,
    pub trial: usize,
    pub snr_db: f64,
    pub m_bs: usize,
    pub metric: String,
    pub value: f64,
}

/// One solver-iteration diagnostics row.
#[derive(Debug, Clone, Serialize)]
pub struct DiagRow {
    pub experiment: String,
    pub trial: usize,
    pub snr_db: f64,
    pub m_bs: usize,
    pub iteration: usize,
    pub j_before: f64,
    pub j_after: f64,
    pub k: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

/// One DOA-tracker trajectory row.
#[derive(Debug, Clone, Serialize)]
pub struct TrajRow {
    pub experiment: String,
    pub trial: usize,
    pub snr_db: f64,
    pub m_bs: usize,
    pub block: usize,
    pub theta_true: f64,
    pub theta_est: f64,
    pub innovation: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub metrics_path: PathBuf,
    pub gcs_diag_path: PathBuf,
    pub ekf_traj_path: PathBuf,
    pub failed_trials: usize,
}

const METRIC_NAMES: [&str; 5] = ["mse_h", "mse_alpha", "mse_fd", "mse_theta", "mse_h_downlink"];

/// splitmix64 finalizer; decorrelates nearby seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed from the base seed and grid indices.
pub fn trial_seed(seed: u64, snr_idx: usize, m_idx: usize, trial: usize) -> u64 {
    let mut s = mix(seed);
    for x in [snr_idx as u64, m_idx as u64, trial as u64] {
        s = mix(s ^ mix(x.wrapping_add(0xa5a5_a5a5)));
    }
    s
}

/// Worker count: `SQUINT_THREADS` if set and valid, else the machine's
/// available parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var("SQUINT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Sample (or copy) the per-trial truth paths.
pub fn generate_truths(
    spec: &ExperimentSpec,
    cfg: &SystemConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PathParams>> {
    match &spec.truth_policy {
        TruthPolicy::Fixed { paths } => Ok(paths.clone()),
        TruthPolicy::Random {
            delta_theta,
            delta_fd,
        } => {
            let k = spec.k_uavs;
            let dt = delta_theta
                .unwrap_or(3.0 * cfg.lambda_c() / (cfg.m_bs as f64 * cfg.d));
            let df = delta_fd
                .unwrap_or(3.0 / (cfg.l_blocks as f64 * cfg.block_duration()));
            // cap separations so k points always fit in the sampled ranges
            let sin_range = 0.8f64;
            let f_range = 0.4 / cfg.block_duration();
            let (dt_eff, df_eff) = if k > 1 {
                (
                    dt.min(0.7 * 2.0 * sin_range / (k as f64 - 1.0)),
                    df.min(0.7 * 2.0 * f_range / (k as f64 - 1.0)),
                )
            } else {
                (dt, df)
            };
            // whole-set rejection: sequential placement can paint itself into
            // a corner when the separations are a large fraction of the range
            for _ in 0..20_000 {
                let sines: Vec<f64> =
                    (0..k).map(|_| rng.gen_range(-sin_range..sin_range)).collect();
                let dopplers: Vec<f64> =
                    (0..k).map(|_| rng.gen_range(-f_range..f_range)).collect();
                let ok = (0..k).all(|i| {
                    (i + 1..k).all(|j| {
                        (sines[i] - sines[j]).abs() >= dt_eff
                            && (dopplers[i] - dopplers[j]).abs() >= df_eff
                    })
                });
                if !ok {
                    continue;
                }
                let out = sines
                    .iter()
                    .zip(&dopplers)
                    .map(|(&s, &f)| {
                        let mag = rng.gen_range(0.5..1.5);
                        let phase = rng.gen_range(0.0..2.0 * PI);
                        PathParams::new(Complex64::from_polar(mag, phase), s.asin(), f)
                    })
                    .collect();
                return Ok(out);
            }
            Err(Error::Parameter(
                "could not place separated truth paths".into(),
            ))
        }
    }
}

struct TrialResult {
    metrics: Vec<MetricRow>,
    diags: Vec<DiagRow>,
    trajs: Vec<TrajRow>,
    failed: bool,
}

fn failed_trial(spec: &ExperimentSpec, trial: usize, snr_db: f64, m_bs: usize) -> TrialResult {
    TrialResult {
        metrics: METRIC_NAMES
            .iter()
            .map(|name| MetricRow {
                experiment: spec.id.clone(),
                trial,
                snr_db,
                m_bs,
                metric: name.to_string(),
                value: 1.0,
            })
            .collect(),
        diags: Vec::new(),
        trajs: Vec::new(),
        failed: true,
    }
}

/// Downlink stage: beams toward the estimates, reception at the true
/// geometry, per-block gain estimates averaged, channel MSE over pilots.
fn downlink_mse(
    truths: &[PathParams],
    estimates: &[PathParams],
    assignment: &[Option<usize>],
    snr_lin: Option<f64>,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let est_dl: Vec<DownlinkPath> = estimates
        .iter()
        .map(|p| map_reciprocal(p, cfg, dl))
        .collect::<Result<_>>()?;
    if est_dl.is_empty() {
        return Ok(1.0);
    }
    let truth_dl: Vec<DownlinkPath> = truths
        .iter()
        .map(|p| map_reciprocal(p, cfg, dl))
        .collect::<Result<_>>()?;
    let pilot = Complex64::new(1.0, 0.0);
    let beams: Vec<Vec<Complex64>> = (0..cfg.n_carriers)
        .map(|n| beamforming_vector(&est_dl, n, cfg, dl))
        .collect::<Result<_>>()?;

    // noiseless per-subcarrier samples fix the noise variance for the SNR
    let mut clean: Vec<Vec<Complex64>> = Vec::with_capacity(truths.len());
    let mut signal_power = 0.0f64;
    for (t, tp) in truths.iter().zip(&truth_dl) {
        let mut per_n = Vec::with_capacity(cfg.n_carriers);
        for (n, g) in beams.iter().enumerate() {
            let a = downlink_steering(tp.theta, n, cfg, dl)?;
            let inner: Complex64 = a.iter().zip(g).map(|(am, gm)| am * gm).sum();
            let v = t.alpha * inner * pilot;
            signal_power += v.norm_sqr();
            per_n.push(v);
        }
        clean.push(per_n);
    }
    signal_power /= (truths.len() * cfg.n_carriers) as f64;
    let sigma2 = match snr_lin {
        Some(snr) => signal_power / snr,
        None => 0.0,
    };
    let noise = if sigma2 > 0.0 {
        Some(Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid stddev"))
    } else {
        None
    };

    let norm = gain_normalization(cfg);
    let mut total = 0.0f64;
    for (k, t) in truths.iter().enumerate() {
        let Some(j) = assignment[k] else {
            total += 1.0;
            continue;
        };
        let est_path = est_dl[j];
        // per-block summed pilot with the true Doppler evolution
        let mut gain_acc = Complex64::new(0.0, 0.0);
        for l in 0..cfg.l_blocks {
            let phase =
                Complex64::from_polar(1.0, -2.0 * PI * truth_dl[k].f_d * l as f64 * cfg.block_duration());
            let mut summed = Complex64::new(0.0, 0.0);
            for v in &clean[k] {
                let mut sample = v * phase;
                if let Some(nd) = &noise {
                    sample += Complex64::new(nd.sample(rng), nd.sample(rng));
                }
                summed += sample;
            }
            gain_acc += estimate_downlink_gain(summed, l, est_path.f_d, pilot, norm, cfg)?;
        }
        let alpha_hat = gain_acc / cfg.l_blocks as f64;

        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for &idx in &cfg.pilot_indices {
            let truth_ch = downlink_stacked_channel(t.alpha, &truth_dl[k], idx, cfg, dl)?;
            let est_ch = reconstruct_downlink(alpha_hat, &est_path, idx, cfg, dl)?;
            for (a, b) in truth_ch.values.iter().zip(&est_ch.values) {
                num += (a - b).norm_sqr();
            }
            for a in &truth_ch.values {
                den += a.norm_sqr();
            }
        }
        total += if den > 0.0 { (num / den).min(1.0) } else { 1.0 };
    }
    Ok(total / truths.len() as f64)
}

/// DOA tracking stage: the strongest truth sweeps linearly in angle; noisy
/// per-pilot channel snapshots feed the tracker.
fn ekf_stage(
    truths: &[PathParams],
    estimates: &[PathParams],
    assignment: &[Option<usize>],
    snr_lin: Option<f64>,
    spec: &ExperimentSpec,
    cfg: &SystemConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, f64, f64, f64)>> {
    let k0 = (0..truths.len())
        .max_by(|&a, &b| {
            truths[a]
                .alpha
                .norm()
                .partial_cmp(&truths[b].alpha.norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or(Error::EmptyInput("truth path list"))?;
    let t0 = &truths[k0];
    let blocks = spec.ekf_blocks;
    let mut rate = spec.ekf_rate;
    if (t0.theta + rate * blocks as f64).abs() >= PI / 2.0 - 0.05 {
        rate = -rate;
    }
    let sigma2 = match snr_lin {
        Some(snr) => t0.alpha.norm_sqr() / snr,
        None => 0.0,
    };
    let noise = if sigma2 > 0.0 {
        Some(Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid stddev"))
    } else {
        None
    };
    let mut truth_thetas = Vec::with_capacity(blocks);
    let mut snapshots: Vec<BlockSnapshot> = Vec::with_capacity(blocks);
    for l in 0..blocks {
        let theta = t0.theta + rate * l as f64;
        truth_thetas.push(theta);
        let doppler =
            Complex64::from_polar(1.0, -2.0 * PI * t0.f_d * l as f64 * cfg.block_duration());
        let mut snap: BlockSnapshot = Vec::with_capacity(cfg.p_pilots);
        for &idx in &cfg.pilot_indices {
            let a = bs_steering(theta, cfg.subcarrier_offset(idx), cfg)?;
            let slice: Vec<Complex64> = a
                .iter()
                .map(|am| {
                    let mut v = t0.alpha * doppler * am;
                    if let Some(nd) = &noise {
                        v += Complex64::new(nd.sample(rng), nd.sample(rng));
                    }
                    v
                })
                .collect();
            snap.push(slice);
        }
        snapshots.push(snap);
    }
    let theta_init = assignment[k0]
        .map(|j| estimates[j].theta)
        .unwrap_or(t0.theta);
    let track = track_doa(&snapshots, theta_init, cfg, &spec.ekf)?;
    Ok((0..blocks)
        .map(|l| {
            (
                l,
                truth_thetas[l],
                track.thetas[l],
                track.innovation_norms[l],
            )
        })
        .collect())
}

fn run_trial(
    spec: &ExperimentSpec,
    snr_idx: usize,
    m_idx: usize,
    trial: usize,
    no_noise: bool,
) -> Result<TrialResult> {
    let snr_db = spec.snr_grid_db[snr_idx];
    let m_bs = spec.antenna_grid[m_idx];
    let cfg = spec.system_for(m_bs);
    cfg.validate()?;
    let seed = trial_seed(spec.seed, snr_idx, m_idx, trial);
    let snr_opt = if no_noise { None } else { Some(snr_db) };
    let snr_lin = snr_opt.map(|s| 10f64.powf(s / 10.0));

    let mut truth_rng = ChaCha8Rng::seed_from_u64(mix(seed ^ 0x7471)); // truths
    let truths = generate_truths(spec, &cfg, &mut truth_rng)?;

    let y = synthesize_pilot_observation(&truths, &cfg, snr_opt, seed)?;
    let outcome = track_uplink(&y, &cfg, &spec.gcs)?;
    let m = mse_metrics(&truths, &outcome.paths, &cfg)?;
    let (assignment, _) = match_paths(&truths, &outcome.paths, &cfg);

    let mut dl_rng = ChaCha8Rng::seed_from_u64(mix(seed ^ 0xd1));
    let mse_dl = downlink_mse(
        &truths,
        &outcome.paths,
        &assignment,
        snr_lin,
        &cfg,
        &spec.downlink,
        &mut dl_rng,
    )?;

    let mut ekf_rng = ChaCha8Rng::seed_from_u64(mix(seed ^ 0xe1));
    let traj = ekf_stage(
        &truths,
        &outcome.paths,
        &assignment,
        snr_lin,
        spec,
        &cfg,
        &mut ekf_rng,
    )?;

    let values = [m.mse_h, m.mse_alpha, m.mse_fd, m.mse_theta, mse_dl];
    let metrics = METRIC_NAMES
        .iter()
        .zip(values)
        .map(|(name, value)| MetricRow {
            experiment: spec.id.clone(),
            trial,
            snr_db,
            m_bs,
            metric: name.to_string(),
            value,
        })
        .collect();
    let diags = outcome
        .diagnostics
        .history
        .iter()
        .map(|r| DiagRow {
            experiment: spec.id.clone(),
            trial,
            snr_db,
            m_bs,
            iteration: r.iteration,
            j_before: r.j_before,
            j_after: r.j_after,
            k: r.k,
            lambda: r.lambda,
            epsilon: r.epsilon,
            gamma: r.gamma,
        })
        .collect();
    let trajs = traj
        .into_iter()
        .map(|(block, theta_true, theta_est, innovation)| TrajRow {
            experiment: spec.id.clone(),
            trial,
            snr_db,
            m_bs,
            block,
            theta_true,
            theta_est,
            innovation,
        })
        .collect();
    Ok(TrialResult {
        metrics,
        diags,
        trajs,
        failed: false,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::Config(format!("csv serialization: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Run the full grid of trials and write `metrics.csv`, `gcs_diag.csv`, and
/// `ekf_traj.csv` under `out_dir`. Per-trial errors become failed-trial rows
/// (every metric set to the total-miss value 1) and the run continues.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: &Path,
    no_noise: bool,
) -> Result<RunOutput> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let mut tasks: Vec<(usize, usize, usize)> = Vec::new();
    for snr_idx in 0..spec.snr_grid_db.len() {
        for m_idx in 0..spec.antenna_grid.len() {
            for trial in 0..spec.n_trials {
                tasks.push((snr_idx, m_idx, trial));
            }
        }
    }
    let n_workers = worker_count().min(tasks.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TrialResult>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..n_workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= tasks.len() {
                    break;
                }
                let (snr_idx, m_idx, trial) = tasks[i];
                let result = run_trial(spec, snr_idx, m_idx, trial, no_noise)
                    .unwrap_or_else(|_| {
                        failed_trial(
                            spec,
                            trial,
                            spec.snr_grid_db[snr_idx],
                            spec.antenna_grid[m_idx],
                        )
                    });
                slots.lock().expect("result lock").get_mut(i).map(|s| *s = Some(result));
            });
        }
    });

    let results = slots.into_inner().expect("result lock");
    let mut metrics = Vec::new();
    let mut diags = Vec::new();
    let mut trajs = Vec::new();
    let mut failed_trials = 0usize;
    for r in results.into_iter().flatten() {
        if r.failed {
            failed_trials += 1;
        }
        metrics.extend(r.metrics);
        diags.extend(r.diags);
        trajs.extend(r.trajs);
    }

    let metrics_path = out_dir.join("metrics.csv");
    let gcs_diag_path = out_dir.join("gcs_diag.csv");
    let ekf_traj_path = out_dir.join("ekf_traj.csv");
    write_csv(&metrics_path, &metrics)?;
    write_csv(&gcs_diag_path, &diags)?;
    write_csv(&ekf_traj_path, &trajs)?;
    Ok(RunOutput {
        metrics_path,
        gcs_diag_path,
        ekf_traj_path,
        failed_trials,
    })
}

/// Human-readable channel-selectivity report.
pub fn classify_report(cfg: &SystemConfig, f_d_max: f64) -> Result<String> {
    let s = classify(cfg, f_d_max)?;
    Ok(format!(
        "antenna_ratio = {:.6} ({}), time_ratio = {:.6e} ({}), class = {:?}",
        s.antenna_ratio,
        if s.antenna_ratio >= 1.0 { "selective" } else { "flat" },
        s.time_ratio,
        if s.time_ratio >= 1.0 { "selective" } else { "flat" },
        s.class,
    ))
}
