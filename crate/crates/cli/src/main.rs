use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use squint_core::sim::{classify_report, run_experiment, ExperimentSpec, RunOutput};

/// Channel synthesis and tracking simulator for wideband massive-MIMO links
/// under joint Doppler and beam-squint effects.
#[derive(Parser)]
#[command(name = "squint", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the base seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV results.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Disable additive noise (SNR grid is ignored for noise injection).
    #[arg(long)]
    no_noise: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report the channel-selectivity classification of the configuration.
    Classify(Common),
    /// Run uplink pilot tracking trials and summarize the parameter MSEs.
    TrackUplink(Common),
    /// Run the downlink reconstruction stage and summarize its channel MSE.
    TrackDownlink(Common),
    /// Run the DOA tracker and summarize the trajectory error.
    Ekf(Common),
    /// Run the full SNR x antenna grid and write all result CSVs.
    Sweep(Common),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILED_TRIAL: u8 = 3;

fn load_spec(common: &Common) -> Result<ExperimentSpec, String> {
    let raw = std::fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read {}: {e}", common.config.display()))?;
    let mut spec: ExperimentSpec =
        serde_json::from_str(&raw).map_err(|e| format!("invalid configuration: {e}"))?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(trials) = common.trials {
        spec.n_trials = trials;
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Restrict the grids to their first point for the single-stage subcommands.
fn narrowed(mut spec: ExperimentSpec) -> ExperimentSpec {
    spec.snr_grid_db.truncate(1);
    spec.antenna_grid.truncate(1);
    spec
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn run(spec: &ExperimentSpec, common: &Common) -> Result<RunOutput, String> {
    run_experiment(spec, &out_dir(common), common.no_noise).map_err(|e| e.to_string())
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let raw = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    Ok(raw
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect())
}

/// Mean of `metrics.csv` values per metric name.
fn metric_means(out: &RunOutput) -> Result<Vec<(String, f64)>, String> {
    let mut sums: Vec<(String, f64, usize)> = Vec::new();
    for row in read_rows(&out.metrics_path)? {
        let (name, value) = (row[4].clone(), row[5].parse::<f64>().unwrap_or(f64::NAN));
        match sums.iter_mut().find(|(n, _, _)| *n == name) {
            Some(slot) => {
                slot.1 += value;
                slot.2 += 1;
            }
            None => sums.push((name, value, 1)),
        }
    }
    Ok(sums
        .into_iter()
        .map(|(n, s, c)| (n, s / c as f64))
        .collect())
}

fn finish(out: &RunOutput) -> ExitCode {
    if out.failed_trials > 0 {
        eprintln!("{} trial(s) failed", out.failed_trials);
        ExitCode::from(EXIT_FAILED_TRIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn classify_cmd(common: &Common) -> Result<ExitCode, String> {
    let spec = load_spec(common)?;
    let f_d_max = spec.gcs.f_d_max_for(&spec.system);
    let report = classify_report(&spec.system, f_d_max).map_err(|e| e.to_string())?;
    println!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn pipeline_cmd(common: &Common, wanted: &[&str]) -> Result<ExitCode, String> {
    let spec = narrowed(load_spec(common)?);
    let out = run(&spec, common)?;
    for (name, mean) in metric_means(&out)? {
        if wanted.contains(&name.as_str()) {
            println!("{name}: {mean:.6e} (mean over {} trial(s))", spec.n_trials);
        }
    }
    Ok(finish(&out))
}

fn ekf_cmd(common: &Common) -> Result<ExitCode, String> {
    let spec = narrowed(load_spec(common)?);
    let out = run(&spec, common)?;
    let mut sq = 0.0f64;
    let mut n = 0usize;
    for row in read_rows(&out.ekf_traj_path)? {
        let truth: f64 = row[5].parse().unwrap_or(f64::NAN);
        let est: f64 = row[6].parse().unwrap_or(f64::NAN);
        sq += (truth - est).powi(2);
        n += 1;
    }
    if n > 0 {
        println!("doa rms error: {:.6e} rad over {n} block(s)", (sq / n as f64).sqrt());
    }
    Ok(finish(&out))
}

fn sweep_cmd(common: &Common) -> Result<ExitCode, String> {
    let spec = load_spec(common)?;
    let out = run(&spec, common)?;
    println!(
        "wrote {}, {}, {}",
        out.metrics_path.display(),
        out.gcs_diag_path.display(),
        out.ekf_traj_path.display()
    );
    Ok(finish(&out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Classify(c) => classify_cmd(c),
        Cmd::TrackUplink(c) => {
            pipeline_cmd(c, &["mse_h", "mse_alpha", "mse_fd", "mse_theta"])
        }
        Cmd::TrackDownlink(c) => pipeline_cmd(c, &["mse_h_downlink"]),
        Cmd::Ekf(c) => ekf_cmd(c),
        Cmd::Sweep(c) => sweep_cmd(c),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
