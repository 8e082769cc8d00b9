//! Gridless log-sum sparse recovery of `(theta_k, f_dk, alpha_k)` from the
//! stacked pilot observation.
//!
//! The solver alternates a majorization-minimization surrogate with
//! closed-form gain updates and Armijo gradient descent over the continuous
//! dictionary parameters, then prunes and merges components.

pub mod dictionary;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{stacked_channel, PathParams, StackedChannel};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
pub use dictionary::{atom, Dictionary};

/// Solver knobs. Thresholds expressed as `None` are derived from the array
/// and observation resolution of the active [`SystemConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GcsSettings {
    /// Initial component count K_M (over-provisioned, >= true K).
    pub k_max: usize,
    /// Numerator constant of the lambda schedule.
    pub lambda_0: f64,
    /// Floor of the lambda schedule.
    pub lambda_min: f64,
    /// Cap applied when the residual vanishes.
    pub lambda_cap: f64,
    /// Initial log-sum smoothing epsilon.
    pub epsilon_init: f64,
    /// Floor of the epsilon anneal.
    pub epsilon_min: f64,
    /// Pruning threshold as a fraction of the largest gain magnitude.
    pub alpha_min: f64,
    /// Convergence threshold on the gain-change norm gamma.
    pub gamma_stop: f64,
    pub max_iters: usize,
    /// Duplicate-merge tolerance in the sin(theta) domain;
    /// default `1 / m_bs` (half a beamwidth).
    pub merge_theta: Option<f64>,
    /// Duplicate-merge tolerance in Hz; default `0.5 / (l_blocks * N_b T_s)`.
    pub merge_doppler: Option<f64>,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Backtracking shrink factor.
    pub backtrack_shrink: f64,
    pub max_backtracks: usize,
    /// Dimensionless step scale for theta, applied to the 3/2 power of the
    /// array beamwidth `lambda_c / (m_bs * d)`. The residual curvature in
    /// sin(theta) grows like `m_bs^3`, and the descent step enters squared,
    /// so this power keeps the step-to-curvature ratio aperture-independent.
    pub step_theta: f64,
    /// Per-parameter step scale for Doppler (Hz);
    /// default `0.01 / (N_b T_s * l_blocks)`.
    pub step_doppler: Option<f64>,
    /// Gradient steps attempted per outer iteration.
    pub descent_steps: usize,
    /// Doppler search span for the initializer; default half the block rate
    /// (the unaliased limit).
    pub f_d_max: Option<f64>,
}

impl Default for GcsSettings {
    fn default() -> Self {
        Self {
            k_max: 8,
            lambda_0: 1.0,
            lambda_min: 1e-2,
            lambda_cap: 1e12,
            epsilon_init: 1e-1,
            epsilon_min: 1e-8,
            alpha_min: 0.05,
            gamma_stop: 1e-6,
            max_iters: 200,
            merge_theta: None,
            merge_doppler: None,
            armijo_c: 1e-4,
            backtrack_shrink: 0.5,
            max_backtracks: 30,
            step_theta: 0.64,
            step_doppler: None,
            descent_steps: 8,
            f_d_max: None,
        }
    }
}

impl GcsSettings {
    pub fn merge_theta_for(&self, cfg: &SystemConfig) -> f64 {
        self.merge_theta.unwrap_or(1.0 / cfg.m_bs as f64)
    }

    pub fn merge_doppler_for(&self, cfg: &SystemConfig) -> f64 {
        self.merge_doppler
            .unwrap_or(0.5 / (cfg.l_blocks as f64 * cfg.block_duration()))
    }

    pub fn step_theta_for(&self, cfg: &SystemConfig) -> f64 {
        let beamwidth = cfg.lambda_c() / (cfg.m_bs as f64 * cfg.d);
        self.step_theta * beamwidth.powf(1.5)
    }

    pub fn step_doppler_for(&self, cfg: &SystemConfig) -> f64 {
        self.step_doppler
            .unwrap_or(0.01 / (cfg.block_duration() * cfg.l_blocks as f64))
    }

    pub fn f_d_max_for(&self, cfg: &SystemConfig) -> f64 {
        self.f_d_max.unwrap_or(0.5 / cfg.block_duration())
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("lambda_0", self.lambda_0),
            ("lambda_min", self.lambda_min),
            ("lambda_cap", self.lambda_cap),
            ("epsilon_init", self.epsilon_init),
            ("epsilon_min", self.epsilon_min),
            ("gamma_stop", self.gamma_stop),
            ("armijo_c", self.armijo_c),
            ("backtrack_shrink", self.backtrack_shrink),
            ("step_theta", self.step_theta),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.alpha_min < 0.0 {
            return Err(Error::Config("alpha_min must be >= 0".into()));
        }
        if self.k_max < 1 || self.max_iters < 1 || self.descent_steps < 1 {
            return Err(Error::Config("counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mutable solver state across MM iterations.
#[derive(Debug, Clone)]
pub struct GcsState {
    pub alphas: DVector<Complex64>,
    pub thetas: Vec<f64>,
    pub dopplers: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
}

/// One diagnostics row per outer iteration. `j_before`/`j_after` are the
/// full objective evaluated at the iteration's frozen `(lambda, epsilon)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub j_before: f64,
    pub j_after: f64,
    pub k: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct GcsDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub stalled_steps: usize,
    pub history: Vec<IterationRecord>,
}

/// Result of a full uplink tracking run.
#[derive(Debug, Clone)]
pub struct TrackOutcome {
    pub paths: Vec<PathParams>,
    /// Aggregate reconstructed channel per pilot subcarrier.
    pub channels: Vec<StackedChannel>,
    pub diagnostics: GcsDiagnostics,
}

fn check_dims(y: &DVector<Complex64>, dict: &Dictionary) -> Result<()> {
    if y.len() != dict.columns.nrows() {
        return Err(Error::DimensionMismatch {
            expected: dict.columns.nrows(),
            got: y.len(),
            context: "observation vs dictionary rows",
        });
    }
    Ok(())
}

/// Full objective `sum_k log(|alpha_k|^2 + epsilon) + lambda ||y - P alpha||^2`.
pub fn objective_j_lambda(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    alphas: &DVector<Complex64>,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    check_dims(y, dict)?;
    if alphas.len() != dict.num_components() {
        return Err(Error::DimensionMismatch {
            expected: dict.num_components(),
            got: alphas.len(),
            context: "gain vector vs dictionary columns",
        });
    }
    let log_sum: f64 = alphas.iter().map(|a| (a.norm_sqr() + epsilon).ln()).sum();
    let r = y - &dict.columns * alphas;
    Ok(log_sum + lambda * r.norm_squared())
}

/// Lambda schedule `max(lambda_0 / ||r||^2, lambda_min)` capped at
/// `lambda_cap` (the cap also covers a vanishing residual).
pub fn update_lambda(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    alphas: &DVector<Complex64>,
    settings: &GcsSettings,
) -> Result<f64> {
    check_dims(y, dict)?;
    let r = y - &dict.columns * alphas;
    let rs = r.norm_squared();
    if rs <= 0.0 {
        return Ok(settings.lambda_cap);
    }
    // sqrt(N) normalization keeps the data term comparable to the per-component
    // log penalty as the observation grows: a plain 1/||r||^2 schedule makes
    // the data term O(1) and deletes weak-but-real paths at moderate SNR,
    // while full-N normalization overweights the fit and retains spurious
    // atoms.
    Ok((settings.lambda_0 * (y.len() as f64).sqrt() / rs)
        .max(settings.lambda_min)
        .min(settings.lambda_cap))
}

/// Diagonal of the MM reweighting matrix: `w_k = 1 / (|alpha_k|^2 + epsilon)`.
pub fn surrogate_weights(alphas: &DVector<Complex64>, epsilon: f64) -> Vec<f64> {
    alphas.iter().map(|a| 1.0 / (a.norm_sqr() + epsilon)).collect()
}

struct NormalSolve {
    alpha: DVector<Complex64>,
    /// `P^H y`.
    v: DVector<Complex64>,
}

fn normal_solve(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
) -> Result<NormalSolve> {
    check_dims(y, dict)?;
    let k = dict.num_components();
    if weights.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: weights.len(),
            context: "weights vs dictionary columns",
        });
    }
    let p = &dict.columns;
    let mut g: DMatrix<Complex64> = p.adjoint() * p;
    for i in 0..k {
        g[(i, i)] += Complex64::new(weights[i] / lambda, 0.0);
    }
    let v = p.adjoint() * y;
    match g.clone().lu().solve(&v) {
        Some(alpha) => Ok(NormalSolve { alpha, v }),
        None => {
            let sv = g.singular_values();
            let cond = if sv[sv.len() - 1] > 0.0 {
                sv[0] / sv[sv.len() - 1]
            } else {
                f64::INFINITY
            };
            Err(Error::SingularSystem { cond })
        }
    }
}

/// Closed-form gain update `(P^H P + lambda^-1 D)^-1 P^H y`.
pub fn optimal_alpha(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
) -> Result<DVector<Complex64>> {
    Ok(normal_solve(y, dict, weights, lambda)?.alpha)
}

/// Marginal surrogate cost after eliminating the gains,
/// `-y^H P (P^H P + lambda^-1 D)^-1 P^H y` (constant dropped).
pub fn marginal_cost(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
) -> Result<f64> {
    let s = normal_solve(y, dict, weights, lambda)?;
    Ok(-s.v.dotc(&s.alpha).re)
}

fn gradient(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
    cfg: &SystemConfig,
    wrt_theta: bool,
) -> Result<Vec<f64>> {
    let s = normal_solve(y, dict, weights, lambda)?;
    let residual = y - &dict.columns * &s.alpha;
    let k = dict.num_components();
    let mut grad = Vec::with_capacity(k);
    for i in 0..k {
        let dp = if wrt_theta {
            dict.d_column_d_theta(i, cfg)
        } else {
            dict.d_column_d_doppler(i, cfg)
        };
        // d S1 / d p_k = -2 Re{ alpha*_k (r^H dp_k) } with r = y - P alpha*
        let inner = residual.dotc(&dp);
        grad.push(-2.0 * (s.alpha[i] * inner).re);
    }
    Ok(grad)
}

/// Analytic gradient of the marginal cost with respect to each `theta_k`.
pub fn grad_theta(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    gradient(y, dict, weights, lambda, cfg, true)
}

/// Analytic gradient of the marginal cost with respect to each `f_dk`.
pub fn grad_doppler(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    gradient(y, dict, weights, lambda, cfg, false)
}

const THETA_MARGIN: f64 = 1e-6;

fn project_theta(theta: f64) -> f64 {
    theta.clamp(-PI / 2.0 + THETA_MARGIN, PI / 2.0 - THETA_MARGIN)
}

#[derive(Debug)]
pub struct DescendOutcome {
    pub dict: Dictionary,
    pub cost: f64,
    /// True when no Armijo step was accepted on the last attempt.
    pub stalled: bool,
}

/// Armijo backtracking descent jointly over `(theta, f_d)` with
/// per-parameter step scales. Runs up to `settings.descent_steps` accepted
/// steps; the returned point never increases the marginal cost.
///
/// `step_hint` carries the accepted step scale between calls.
pub fn descend(
    y: &DVector<Complex64>,
    dict: &Dictionary,
    weights: &[f64],
    lambda: f64,
    cfg: &SystemConfig,
    settings: &GcsSettings,
    step_hint: &mut f64,
) -> Result<DescendOutcome> {
    let s_th = settings.step_theta_for(cfg);
    let s_fd = settings.step_doppler_for(cfg);
    let f_max = settings.f_d_max_for(cfg);
    let mut cur = dict.clone();
    let mut cur_cost = marginal_cost(y, &cur, weights, lambda)?;
    let mut stalled = false;
    for _ in 0..settings.descent_steps {
        let g_th = grad_theta(y, &cur, weights, lambda, cfg)?;
        let g_fd = grad_doppler(y, &cur, weights, lambda, cfg)?;
        let decrease: f64 = g_th.iter().map(|g| s_th * s_th * g * g).sum::<f64>()
            + g_fd.iter().map(|g| s_fd * s_fd * g * g).sum::<f64>();
        if decrease <= 0.0 || !decrease.is_finite() {
            break;
        }
        let mut t = step_hint.clamp(f64::MIN_POSITIVE, 1.0);
        let mut accepted = false;
        for _ in 0..settings.max_backtracks {
            let thetas: Vec<f64> = cur
                .thetas
                .iter()
                .zip(&g_th)
                .map(|(&th, &g)| project_theta(th - t * s_th * s_th * g))
                .collect();
            let dopplers: Vec<f64> = cur
                .dopplers
                .iter()
                .zip(&g_fd)
                .map(|(&fd, &g)| (fd - t * s_fd * s_fd * g).clamp(-f_max, f_max))
                .collect();
            let trial = Dictionary::build(&thetas, &dopplers, cfg)?;
            match marginal_cost(y, &trial, weights, lambda) {
                Ok(cost) if cost <= cur_cost - settings.armijo_c * t * decrease => {
                    cur = trial;
                    cur_cost = cost;
                    *step_hint = (t * 2.0).min(1.0);
                    accepted = true;
                    break;
                }
                _ => t *= settings.backtrack_shrink,
            }
        }
        if !accepted {
            *step_hint = 1.0;
            stalled = true;
            break;
        }
    }
    Ok(DescendOutcome {
        dict: cur,
        cost: cur_cost,
        stalled,
    })
}

/// Merge near-duplicate components (summing gains) and drop components whose
/// gain magnitude falls below `alpha_min` times the largest one.
/// The component count never increases.
pub fn prune_and_merge(
    alphas: &DVector<Complex64>,
    thetas: &[f64],
    dopplers: &[f64],
    settings: &GcsSettings,
    cfg: &SystemConfig,
) -> Result<(DVector<Complex64>, Vec<f64>, Vec<f64>)> {
    let k = alphas.len();
    let tol_sin = settings.merge_theta_for(cfg);
    let tol_fd = settings.merge_doppler_for(cfg);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        alphas[b]
            .norm()
            .partial_cmp(&alphas[a].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // strongest components absorb their near-duplicates; original order kept
    let mut kept: Vec<(usize, Complex64, f64, f64)> = Vec::new();
    for &i in &order {
        let sin_i = thetas[i].sin();
        match kept.iter_mut().find(|(_, _, th, fd)| {
            (th.sin() - sin_i).abs() < tol_sin && (fd - dopplers[i]).abs() < tol_fd
        }) {
            Some(slot) => slot.1 += alphas[i],
            None => kept.push((i, alphas[i], thetas[i], dopplers[i])),
        }
    }
    let max_mag = kept
        .iter()
        .map(|(_, a, _, _)| a.norm())
        .fold(0.0f64, f64::max);
    if max_mag < 1e-12 {
        return Err(Error::ModelCollapsed);
    }
    let threshold = settings.alpha_min * max_mag;
    kept.retain(|(_, a, _, _)| a.norm() >= threshold);
    if kept.is_empty() {
        return Err(Error::ModelCollapsed);
    }
    kept.sort_by_key(|&(i, _, _, _)| i);
    let a = DVector::from_iterator(kept.len(), kept.iter().map(|(_, a, _, _)| *a));
    let th = kept.iter().map(|(_, _, t, _)| *t).collect();
    let fd = kept.iter().map(|(_, _, _, f)| *f).collect();
    Ok((a, th, fd))
}

/// Coarse matched-filter initialization: score `|p^H y|` over a sin(theta) x
/// Doppler grid and keep the `k_max` strongest non-adjacent local peaks.
pub fn matched_filter_init(
    y: &DVector<Complex64>,
    cfg: &SystemConfig,
    settings: &GcsSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n_a = (4 * settings.k_max).max(2 * cfg.m_bs);
    let n_f = (4 * settings.k_max).max(2 * cfg.l_blocks);
    let f_max = settings.f_d_max_for(cfg);
    let sl = cfg.stacked_len();
    let sin_grid: Vec<f64> = (0..n_a)
        .map(|i| -1.0 + (i as f64 + 0.5) * 2.0 / n_a as f64)
        .collect();
    let fd_grid: Vec<f64> = (0..n_f)
        .map(|i| -f_max + (i as f64 + 0.5) * 2.0 * f_max / n_f as f64)
        .collect();

    // spatial correlations c[p][l] per angle, then the Doppler ramp on top
    let mut scores = vec![vec![0.0f64; n_f]; n_a];
    for (ai, &s) in sin_grid.iter().enumerate() {
        let theta = s.asin();
        let mut c = vec![Complex64::new(0.0, 0.0); cfg.p_pilots * cfg.l_blocks];
        for (pi, &idx) in cfg.pilot_indices.iter().enumerate() {
            let a = crate::channel::bs_steering(theta, cfg.subcarrier_offset(idx), cfg)?;
            for l in 0..cfg.l_blocks {
                let base = pi * sl + l * cfg.m_bs;
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..cfg.m_bs {
                    acc += a[m].conj() * y[base + m];
                }
                c[pi * cfg.l_blocks + l] = acc;
            }
        }
        for (fi, &fd) in fd_grid.iter().enumerate() {
            let rate = -2.0 * PI * fd * cfg.block_duration();
            let mut acc = Complex64::new(0.0, 0.0);
            for pi in 0..cfg.p_pilots {
                for l in 0..cfg.l_blocks {
                    let b = Complex64::from_polar(1.0, rate * l as f64);
                    acc += b.conj() * c[pi * cfg.l_blocks + l];
                }
            }
            scores[ai][fi] = acc.norm();
        }
    }

    // strongest grid points first, greedily excluding neighbors of picks
    let mut flat: Vec<(usize, usize, f64)> = Vec::with_capacity(n_a * n_f);
    for ai in 0..n_a {
        for fi in 0..n_f {
            flat.push((ai, fi, scores[ai][fi]));
        }
    }
    flat.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal));
    let mut picks: Vec<(usize, usize)> = Vec::new();
    for &(ai, fi, _) in &flat {
        if picks.len() >= settings.k_max {
            break;
        }
        let adjacent = picks.iter().any(|&(pa, pf)| {
            (pa as i64 - ai as i64).abs() <= 1 && (pf as i64 - fi as i64).abs() <= 1
        });
        if !adjacent {
            picks.push((ai, fi));
        }
    }
    if picks.is_empty() {
        return Err(Error::EmptyInput("matched-filter peaks"));
    }
    let thetas = picks.iter().map(|&(ai, _)| sin_grid[ai].asin()).collect();
    let dopplers = picks.iter().map(|&(_, fi)| fd_grid[fi]).collect();
    Ok((thetas, dopplers))
}

/// Run the full uplink tracking loop on a stacked pilot observation.
pub fn track_uplink(
    y_raw: &[Complex64],
    cfg: &SystemConfig,
    settings: &GcsSettings,
) -> Result<TrackOutcome> {
    cfg.validate()?;
    settings.validate()?;
    if y_raw.len() != cfg.observation_len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.observation_len(),
            got: y_raw.len(),
            context: "pilot observation length",
        });
    }
    let y = DVector::from_column_slice(y_raw);

    let (thetas, dopplers) = matched_filter_init(&y, cfg, settings)?;
    let mut dict = Dictionary::build(&thetas, &dopplers, cfg)?;
    let zero_w = vec![0.0; dict.num_components()];
    let mut alphas = match optimal_alpha(&y, &dict, &zero_w, 1.0) {
        Ok(a) => a,
        // coherent initial atoms: fall back to a slightly ridged system
        Err(Error::SingularSystem { .. }) => {
            let w = vec![1e-6; dict.num_components()];
            optimal_alpha(&y, &dict, &w, 1.0)?
        }
        Err(e) => return Err(e),
    };
    let mut lambda = update_lambda(&y, &dict, &alphas, settings)?;
    let mut epsilon = settings.epsilon_init;
    let mut history = Vec::new();
    let mut step_hint = 1.0;
    let mut stalled_steps = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    for n in 0..settings.max_iters {
        iterations = n + 1;
        let weights = surrogate_weights(&alphas, epsilon);
        let j_before = objective_j_lambda(&y, &dict, &alphas, lambda, epsilon)?;

        let out = descend(&y, &dict, &weights, lambda, cfg, settings, &mut step_hint)?;
        if out.stalled {
            stalled_steps += 1;
        }
        dict = out.dict;
        // Near-coincident atoms can make the normal equations singular when
        // lambda is large (tiny ridge); retry with a bounded lambda, whose
        // stronger ridge regularizes the solve, before giving up.
        let new_alphas = match optimal_alpha(&y, &dict, &weights, lambda) {
            Ok(a) => a,
            Err(Error::SingularSystem { .. }) => {
                optimal_alpha(&y, &dict, &weights, lambda.min(1e3))?
            }
            Err(e) => return Err(e),
        };
        let j_after = objective_j_lambda(&y, &dict, &new_alphas, lambda, epsilon)?;

        let gamma = if new_alphas.len() == alphas.len() {
            (&new_alphas - &alphas).norm()
        } else {
            f64::INFINITY
        };
        alphas = new_alphas;
        lambda = update_lambda(&y, &dict, &alphas, settings)?;
        if gamma < epsilon.sqrt() {
            epsilon = (epsilon / 10.0).max(settings.epsilon_min);
        }

        let (a, th, fd) = prune_and_merge(&alphas, &dict.thetas, &dict.dopplers, settings, cfg)?;
        if a.len() != alphas.len() {
            dict = Dictionary::build(&th, &fd, cfg)?;
            let weights = surrogate_weights(&a, epsilon);
            alphas = optimal_alpha(&y, &dict, &weights, lambda)?;
        } else {
            alphas = a;
        }

        history.push(IterationRecord {
            iteration: n,
            j_before,
            j_after,
            k: dict.num_components(),
            lambda,
            epsilon,
            gamma,
        });

        if gamma < settings.gamma_stop {
            converged = true;
            break;
        }
    }

    // The residual-scaled regularization shrinks the gains by a relative bias
    // of order (noise power)/|alpha|^2 regardless of array size; an
    // unregularized least-squares refit on the final atoms removes it.
    let zero_w = vec![0.0; dict.num_components()];
    match optimal_alpha(&y, &dict, &zero_w, 1.0) {
        Ok(a) => alphas = a,
        Err(Error::SingularSystem { .. }) => {}
        Err(e) => return Err(e),
    }

    let paths: Vec<PathParams> = (0..dict.num_components())
        .map(|k| PathParams::new(alphas[k], dict.thetas[k], dict.dopplers[k]))
        .collect();
    let mut channels = Vec::with_capacity(cfg.p_pilots);
    for &idx in &cfg.pilot_indices {
        let mut agg = vec![Complex64::new(0.0, 0.0); cfg.stacked_len()];
        for p in &paths {
            let h = stacked_channel(p, idx, cfg)?;
            for (o, v) in agg.iter_mut().zip(&h.values) {
                *o += v;
            }
        }
        channels.push(StackedChannel {
            values: agg,
            subcarrier_index: idx,
        });
    }

    Ok(TrackOutcome {
        paths,
        channels,
        diagnostics: GcsDiagnostics {
            iterations,
            converged,
            stalled_steps,
            history,
        },
    })
}
