//! Simplified DOA tracking: IDFT-domain peak measurements per pilot
//! subcarrier feed an extended Kalman filter with a constant-angular-rate
//! kinematic model.
//!
//! The angle-domain peak location is linear in `sin(theta)` with a
//! squint-dependent slope per subcarrier, so stacking all pilot subcarriers
//! into one vector measurement uses the full squint diversity.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// EKF noise statistics and initial covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EkfSettings {
    /// Process-noise covariance diagonal for `(theta, theta_dot)`.
    pub q_omega: (f64, f64),
    /// Measurement-noise variance per subcarrier, in bins^2.
    pub q_u: f64,
    /// Initial covariance diagonal.
    pub kappa_init: (f64, f64),
}

impl Default for EkfSettings {
    fn default() -> Self {
        Self {
            q_omega: (1e-8, 1e-6),
            q_u: 0.01,
            // wide angular-rate prior: one block is sub-millisecond, so even
            // slow per-block sweeps are several rad/s
            kappa_init: (1e-4, 10.0),
        }
    }
}

/// Filter state: `psi = (theta, theta_dot)` with covariance `kappa`.
#[derive(Debug, Clone)]
pub struct EkfState {
    pub psi: Vector2<f64>,
    pub kappa: Matrix2<f64>,
    pub q_omega: Matrix2<f64>,
    pub q_u: f64,
}

impl EkfState {
    pub fn new(theta_init: f64, settings: &EkfSettings) -> Self {
        Self {
            psi: Vector2::new(theta_init, 0.0),
            kappa: Matrix2::from_diagonal(&Vector2::new(
                settings.kappa_init.0,
                settings.kappa_init.1,
            )),
            q_omega: Matrix2::from_diagonal(&Vector2::new(
                settings.q_omega.0,
                settings.q_omega.1,
            )),
            q_u: settings.q_u,
        }
    }

    pub fn theta(&self) -> f64 {
        self.psi[0]
    }

    /// Smallest eigenvalue of the (symmetrized) covariance.
    pub fn kappa_min_eigenvalue(&self) -> f64 {
        let k = (self.kappa + self.kappa.transpose()) * 0.5;
        let tr = k.trace();
        let det = k.determinant();
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        tr / 2.0 - disc
    }
}

/// Fractional IDFT peak locations for one block, one entry per pilot
/// subcarrier, each in `[0, m_bs)`.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub q_values: Vec<f64>,
    pub block_index: usize,
}

/// Angle-domain transform of one block-slice of the channel:
/// `h_tilde[q] = (1/sqrt(M)) sum_m exp(j 2 pi q m / M) h[m]`. Unitary.
pub fn idft_channel(h: &[Complex64], cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    let m_bs = cfg.m_bs;
    if h.len() != m_bs {
        return Err(Error::DimensionMismatch {
            expected: m_bs,
            got: h.len(),
            context: "channel slice vs antenna count",
        });
    }
    let scale = 1.0 / (m_bs as f64).sqrt();
    let mut out = Vec::with_capacity(m_bs);
    for q in 0..m_bs {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, hv) in h.iter().enumerate() {
            let w = Complex64::from_polar(1.0, 2.0 * PI * (q * m % m_bs) as f64 / m_bs as f64);
            acc += w * hv;
        }
        out.push(acc * scale);
    }
    Ok(out)
}

/// Locate the fractional spectral peak of the angle-domain channel.
///
/// The integer argmax is refined with the closed-form adjacent-bin ratio of
/// the length-M geometric sum, which is exact for a noiseless single path
/// (on-grid inputs return the exact integer).
pub fn extract_peak(h_tilde: &[Complex64]) -> Result<f64> {
    let m = h_tilde.len();
    if m == 0 || h_tilde.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::EmptyInput("angle-domain channel"));
    }
    if m == 1 {
        return Ok(0.0);
    }
    let q0 = (0..m)
        .max_by(|&a, &b| {
            h_tilde[a]
                .norm_sqr()
                .partial_cmp(&h_tilde[b].norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let prev = h_tilde[(q0 + m - 1) % m];
    let next = h_tilde[(q0 + 1) % m];
    let center = h_tilde[q0];
    // ratio toward the stronger neighbor; z is one bin of rotation
    let z = Complex64::from_polar(1.0, 2.0 * PI / m as f64);
    let rho = if next.norm_sqr() >= prev.norm_sqr() {
        let r = next / center;
        (1.0 - r) / (1.0 - r * z)
    } else {
        let r = prev / center;
        (1.0 - r) / (1.0 - r / z)
    };
    let delta = -(m as f64) * rho.arg() / (2.0 * PI);
    let q = q0 as f64 + delta.clamp(-0.5, 0.5);
    Ok(q.rem_euclid(m as f64))
}

/// Predicted peak location (in bins, unwrapped) for pilot subcarrier `p`.
pub fn predicted_peak(theta: f64, pilot_idx: usize, cfg: &SystemConfig) -> f64 {
    let squint = 1.0 + cfg.subcarrier_offset(pilot_idx) / cfg.f_c;
    cfg.d * cfg.m_bs as f64 * theta.sin() * squint / cfg.lambda_c()
}

/// Kinematic prediction step: constant angular rate over one block duration.
pub fn predict(state: &EkfState, cfg: &SystemConfig) -> EkfState {
    let dt = cfg.block_duration();
    let phi = Matrix2::new(1.0, dt, 0.0, 1.0);
    let psi = phi * state.psi;
    let kappa = phi * state.kappa * phi.transpose() + state.q_omega;
    EkfState {
        psi,
        kappa: (kappa + kappa.transpose()) * 0.5,
        q_omega: state.q_omega,
        q_u: state.q_u,
    }
}

fn wrap_to_half(x: f64, period: f64) -> f64 {
    let mut v = x.rem_euclid(period);
    if v >= period / 2.0 {
        v -= period;
    }
    v
}

/// Measurement update with the stacked per-subcarrier peak observations.
pub fn update(state: &EkfState, meas: &Measurement, cfg: &SystemConfig) -> Result<EkfState> {
    let p = cfg.p_pilots;
    if meas.q_values.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: meas.q_values.len(),
            context: "measurement vs pilot count",
        });
    }
    let theta = state.psi[0];
    let m = cfg.m_bs as f64;
    let mut h = DMatrix::zeros(p, 2);
    let mut innovation = DVector::zeros(p);
    for (i, &idx) in cfg.pilot_indices.iter().enumerate() {
        let squint = 1.0 + cfg.subcarrier_offset(idx) / cfg.f_c;
        let jac = cfg.d * m * theta.cos() * squint / cfg.lambda_c();
        h[(i, 0)] = jac;
        let predicted = predicted_peak(theta, idx, cfg);
        innovation[i] = wrap_to_half(meas.q_values[i] - predicted, m);
    }
    let kappa = state.kappa;
    let h2 = h.clone();
    // S = H kappa H^T + Q_u I
    let mut s = &h * kappa * h2.transpose();
    for i in 0..p {
        s[(i, i)] += state.q_u;
    }
    let s_inv = s.clone().try_inverse().ok_or_else(|| {
        let sv = s.singular_values();
        Error::SingularSystem {
            cond: if sv[sv.len() - 1] > 0.0 {
                sv[0] / sv[sv.len() - 1]
            } else {
                f64::INFINITY
            },
        }
    })?;
    let gain = kappa * h.transpose() * s_inv;
    let correction = &gain * innovation;
    let psi = state.psi + Vector2::new(correction[0], correction[1]);
    let kh = &gain * &h;
    let i_kh = Matrix2::identity() - Matrix2::new(kh[(0, 0)], kh[(0, 1)], kh[(1, 0)], kh[(1, 1)]);
    let kappa_new = i_kh * kappa;
    Ok(EkfState {
        psi,
        kappa: (kappa_new + kappa_new.transpose()) * 0.5,
        q_omega: state.q_omega,
        q_u: state.q_u,
    })
}

/// Per-block channel snapshots: one length-`m_bs` slice per pilot subcarrier.
pub type BlockSnapshot = Vec<Vec<Complex64>>;

#[derive(Debug, Clone)]
pub struct DoaTrack {
    /// Posterior DOA estimate per block.
    pub thetas: Vec<f64>,
    /// Norm of the stacked innovation per block.
    pub innovation_norms: Vec<f64>,
    pub final_state: EkfState,
}

/// Run the tracker over a sequence of block snapshots.
pub fn track_doa(
    snapshots: &[BlockSnapshot],
    theta_init: f64,
    cfg: &SystemConfig,
    settings: &EkfSettings,
) -> Result<DoaTrack> {
    cfg.validate()?;
    if snapshots.is_empty() {
        return Err(Error::EmptyInput("block snapshots"));
    }
    let mut state = EkfState::new(theta_init, settings);
    let mut thetas = Vec::with_capacity(snapshots.len());
    let mut innovation_norms = Vec::with_capacity(snapshots.len());
    for (l, snap) in snapshots.iter().enumerate() {
        if snap.len() != cfg.p_pilots {
            return Err(Error::DimensionMismatch {
                expected: cfg.p_pilots,
                got: snap.len(),
                context: "snapshot pilot slices",
            });
        }
        let mut q_values = Vec::with_capacity(cfg.p_pilots);
        for slice in snap {
            let h_tilde = idft_channel(slice, cfg)?;
            q_values.push(extract_peak(&h_tilde)?);
        }
        let meas = Measurement {
            q_values,
            block_index: l,
        };
        let predicted = predict(&state, cfg);
        let m = cfg.m_bs as f64;
        let innovation: f64 = meas
            .q_values
            .iter()
            .zip(&cfg.pilot_indices)
            .map(|(&q, &idx)| {
                wrap_to_half(q - predicted_peak(predicted.psi[0], idx, cfg), m).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        state = update(&predicted, &meas, cfg)?;
        thetas.push(state.psi[0]);
        innovation_norms.push(innovation);
    }
    Ok(DoaTrack {
        thetas,
        innovation_norms,
        final_state: state,
    })
}
