//! Normalized MSE metrics with estimate-to-truth matching.
//!
//! Estimates carry no canonical ordering, so they are first matched to the
//! planted truths by greedy nearest neighbor in `(sin(theta), f_d * N_b T_s)`
//! with unit-weighted Euclidean distance. Unmatched truths count as total
//! misses (metric value 1 for that path); spurious estimates are counted but
//! excluded from the averages.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::PathParams;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::gcs::dictionary::atom;

#[derive(Debug, Clone, PartialEq)]
pub struct MseMetrics {
    pub mse_h: f64,
    pub mse_alpha: f64,
    pub mse_fd: f64,
    pub mse_theta: f64,
    /// Estimates left over after matching.
    pub n_spurious: usize,
    /// Truths with no matched estimate.
    pub n_missed: usize,
}

/// Greedy nearest-neighbor assignment: `assignment[k]` is the estimate index
/// matched to truth `k`, if any. Returns the assignment and the number of
/// spurious (unmatched) estimates.
pub fn match_paths(
    truth: &[PathParams],
    estimate: &[PathParams],
    cfg: &SystemConfig,
) -> (Vec<Option<usize>>, usize) {
    let bt = cfg.block_duration();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (k, t) in truth.iter().enumerate() {
        for (j, e) in estimate.iter().enumerate() {
            let ds = t.theta.sin() - e.theta.sin();
            let df = (t.f_d - e.f_d) * bt;
            pairs.push(((ds * ds + df * df).sqrt(), k, j));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut assignment = vec![None; truth.len()];
    let mut est_used = vec![false; estimate.len()];
    for (_, k, j) in pairs {
        if assignment[k].is_none() && !est_used[j] {
            assignment[k] = Some(j);
            est_used[j] = true;
        }
    }
    let spurious = est_used.iter().filter(|u| !**u).count();
    (assignment, spurious)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Per-path channel over all pilot subcarriers and blocks.
fn path_channel(p: &PathParams, cfg: &SystemConfig) -> Result<DVector<Complex64>> {
    Ok(atom(p.theta, p.f_d, cfg)? * p.alpha)
}

/// Normalized MSE of the matched parameter estimates and per-path channels.
pub fn mse_metrics(
    truth: &[PathParams],
    estimate: &[PathParams],
    cfg: &SystemConfig,
) -> Result<MseMetrics> {
    let (assignment, n_spurious) = match_paths(truth, estimate, cfg);
    let k_total = truth.len().max(1);
    let mut mse_h = 0.0;
    let mut mse_alpha = 0.0;
    let mut mse_fd = 0.0;
    let mut mse_theta = 0.0;
    let mut n_missed = 0usize;
    for (t, a) in truth.iter().zip(&assignment) {
        match a {
            Some(j) => {
                let e = &estimate[*j];
                mse_alpha += ratio((t.alpha - e.alpha).norm_sqr(), t.alpha.norm_sqr());
                mse_fd += ratio((t.f_d - e.f_d).powi(2), t.f_d.powi(2));
                mse_theta += ratio((t.theta - e.theta).powi(2), t.theta.powi(2));
                let ht = path_channel(t, cfg)?;
                let he = path_channel(e, cfg)?;
                mse_h += ratio((&ht - &he).norm_squared(), ht.norm_squared());
            }
            None => {
                n_missed += 1;
                mse_h += 1.0;
                mse_alpha += 1.0;
                mse_fd += 1.0;
                mse_theta += 1.0;
            }
        }
    }
    let k = k_total as f64;
    Ok(MseMetrics {
        mse_h: mse_h / k,
        mse_alpha: mse_alpha / k,
        mse_fd: mse_fd / k,
        mse_theta: mse_theta / k,
        n_spurious,
        n_missed,
    })
}

/// `||h - h_hat||^2 / ||h||^2` for aggregate channel vectors.
pub fn normalized_channel_mse(truth: &[Complex64], estimate: &[Complex64]) -> f64 {
    let num: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e).norm_sqr())
        .sum();
    let den: f64 = truth.iter().map(|t| t.norm_sqr()).sum();
    ratio(num, den)
}
