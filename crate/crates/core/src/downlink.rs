//! Downlink channel derivation via angular and Doppler-shift reciprocity.
//!
//! The uplink estimates carry over directly: the DOA is unchanged and the
//! Doppler shift scales with the carrier ratio, so only the downlink complex
//! gain needs a (single-pilot) estimate.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{steering_at_carrier, PathParams, StackedChannel};
use crate::config::{DownlinkConfig, SystemConfig};
use crate::error::{Error, Result};

/// Downlink path geometry mapped from an uplink estimate; the downlink gain
/// is a separate unknown until estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkPath {
    pub theta: f64,
    pub f_d: f64,
}

/// Angular and Doppler reciprocity: `theta_dl = theta`,
/// `f_d_dl = f_d * f_c_dl / f_c`.
pub fn map_reciprocal(
    p_uplink: &PathParams,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
) -> Result<DownlinkPath> {
    p_uplink.validate()?;
    dl.validate()?;
    Ok(DownlinkPath {
        theta: p_uplink.theta,
        f_d: p_uplink.f_d * dl.f_c_dl / cfg.f_c,
    })
}

/// Downlink spatial steering vector at subcarrier `n` (squint relative to the
/// downlink carrier).
pub fn downlink_steering(
    theta: f64,
    n: usize,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
) -> Result<Vec<Complex64>> {
    steering_at_carrier(theta, cfg.subcarrier_offset(n), cfg.m_bs, cfg.d, dl.f_c_dl)
}

/// BS beamforming vector at subcarrier `n`: the sum over scheduled UAVs of
/// the conjugated downlink steering vectors.
pub fn beamforming_vector(
    paths: &[DownlinkPath],
    n: usize,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
) -> Result<Vec<Complex64>> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("downlink path list"));
    }
    let mut g = vec![Complex64::new(0.0, 0.0); cfg.m_bs];
    for p in paths {
        let a = downlink_steering(p.theta, n, cfg, dl)?;
        for (gm, am) in g.iter_mut().zip(&a) {
            *gm += am.conj();
        }
    }
    Ok(g)
}

/// Downlink stacked space-time channel at one subcarrier (same entry
/// convention as the uplink, at the downlink carrier).
pub fn downlink_stacked_channel(
    alpha: Complex64,
    path: &DownlinkPath,
    n: usize,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
) -> Result<StackedChannel> {
    let a = downlink_steering(path.theta, n, cfg, dl)?;
    let rate = -2.0 * PI * path.f_d * cfg.block_duration();
    let mut values = Vec::with_capacity(cfg.stacked_len());
    for l in 0..cfg.l_blocks {
        let b = Complex64::from_polar(1.0, rate * l as f64);
        for am in &a {
            values.push(alpha * b * am);
        }
    }
    Ok(StackedChannel {
        values,
        subcarrier_index: n,
    })
}

/// Received pilot at one UAV: per-subcarrier samples and their sum.
#[derive(Debug, Clone)]
pub struct DownlinkRx {
    /// `y_p(l, n)` for n = 0..N-1.
    pub per_subcarrier: Vec<Complex64>,
    /// `y_p(l) = sum_n y_p(l, n)`.
    pub summed: Complex64,
}

/// Simulate the downlink training reception for every UAV at block `l`.
///
/// The cross-beam interference is computed exactly rather than approximated
/// to zero, so beam leakage between closely spaced UAVs is observable.
/// `truths` holds the true downlink gains and geometry per UAV; `sigma2` is
/// the complex noise variance per subcarrier sample.
pub fn simulate_downlink_rx(
    truths: &[(Complex64, DownlinkPath)],
    block: usize,
    pilot: Complex64,
    sigma2: f64,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DownlinkRx>> {
    if truths.is_empty() {
        return Err(Error::EmptyInput("downlink truth list"));
    }
    if sigma2 < 0.0 {
        return Err(Error::Parameter("noise variance must be >= 0".into()));
    }
    let paths: Vec<DownlinkPath> = truths.iter().map(|(_, p)| *p).collect();
    let noise = if sigma2 > 0.0 {
        Some(Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid stddev"))
    } else {
        None
    };
    let mut out = Vec::with_capacity(truths.len());
    for (alpha, path) in truths {
        let phase = Complex64::from_polar(
            1.0,
            -2.0 * PI * path.f_d * block as f64 * cfg.block_duration(),
        );
        let mut per_subcarrier = Vec::with_capacity(cfg.n_carriers);
        let mut summed = Complex64::new(0.0, 0.0);
        for n in 0..cfg.n_carriers {
            let g = beamforming_vector(&paths, n, cfg, dl)?;
            let a = downlink_steering(path.theta, n, cfg, dl)?;
            // h_p(l,n) g(n) s with h = alpha * phase * a^T
            let mut inner = Complex64::new(0.0, 0.0);
            for (am, gm) in a.iter().zip(&g) {
                inner += am * gm;
            }
            let mut sample = alpha * phase * inner * pilot;
            if let Some(n_dist) = &noise {
                sample += Complex64::new(n_dist.sample(rng), n_dist.sample(rng));
            }
            summed += sample;
            per_subcarrier.push(sample);
        }
        out.push(DownlinkRx {
            per_subcarrier,
            summed,
        });
    }
    Ok(out)
}

/// Normalization of the summed matched-beam pilot: `N * m_bs`.
pub fn gain_normalization(cfg: &SystemConfig) -> f64 {
    (cfg.n_carriers * cfg.m_bs) as f64
}

/// Invert the summed pilot observation for the downlink complex gain.
pub fn estimate_downlink_gain(
    y_p: Complex64,
    block: usize,
    f_d_dl: f64,
    pilot: Complex64,
    normalization: f64,
    cfg: &SystemConfig,
) -> Result<Complex64> {
    if pilot.norm() == 0.0 {
        return Err(Error::Parameter("pilot symbol must be nonzero".into()));
    }
    if !(normalization > 0.0) {
        return Err(Error::Parameter("normalization must be positive".into()));
    }
    let phase = Complex64::from_polar(
        1.0,
        -2.0 * PI * f_d_dl * block as f64 * cfg.block_duration(),
    );
    Ok(y_p / (normalization * phase * pilot))
}

/// Reconstruct the downlink stacked channel at subcarrier `n` from the
/// estimated triple.
pub fn reconstruct_downlink(
    alpha_dl: Complex64,
    path: &DownlinkPath,
    n: usize,
    cfg: &SystemConfig,
    dl: &DownlinkConfig,
) -> Result<StackedChannel> {
    downlink_stacked_channel(alpha_dl, path, n, cfg, dl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn cfg() -> SystemConfig {
        SystemConfig {
            m_bs: 16,
            d: crate::config::SPEED_OF_LIGHT / 60e9 / 2.0,
            f_c: 60e9,
            w: 600e6,
            n_carriers: 16,
            n_block: 324_000,
            t_s: 1.0 / 600e6,
            l_blocks: 4,
            p_pilots: 2,
            pilot_indices: vec![0, 8],
        }
    }

    fn dl() -> DownlinkConfig {
        DownlinkConfig { f_c_dl: 60.6e9 }
    }

    #[test]
    fn reciprocity_identity_at_equal_carriers() {
        let c = cfg();
        let same = DownlinkConfig { f_c_dl: c.f_c };
        let p = PathParams::new(Complex64::new(1.0, 0.0), 0.31, 1000.0);
        let m = map_reciprocal(&p, &c, &same).unwrap();
        assert_abs_diff_eq!(m.f_d, 1000.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.theta, 0.31, epsilon = 1e-15);
    }

    #[test]
    fn doppler_scales_with_carrier_ratio() {
        let c = cfg();
        let p = PathParams::new(Complex64::new(1.0, 0.0), 0.1, 1000.0);
        let m = map_reciprocal(&p, &c, &dl()).unwrap();
        assert_abs_diff_eq!(m.f_d, 1010.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.theta, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn reciprocity_round_trip_is_identity() {
        let c = cfg();
        let p = PathParams::new(Complex64::new(1.0, 0.0), -0.47, 321.5);
        let there = map_reciprocal(&p, &c, &dl()).unwrap();
        // swap carriers to invert
        let mut back_cfg = c.clone();
        back_cfg.f_c = dl().f_c_dl;
        let back_dl = DownlinkConfig { f_c_dl: c.f_c };
        let q = PathParams::new(Complex64::new(1.0, 0.0), there.theta, there.f_d);
        let back = map_reciprocal(&q, &back_cfg, &back_dl).unwrap();
        assert_abs_diff_eq!(back.theta, p.theta, epsilon = 1e-12);
        assert_abs_diff_eq!(back.f_d, p.f_d, epsilon = 1e-12);
    }

    #[test]
    fn broadside_beam_is_all_ones() {
        let c = cfg();
        let g = beamforming_vector(&[DownlinkPath { theta: 0.0, f_d: 0.0 }], 3, &c, &dl()).unwrap();
        for v in &g {
            assert_abs_diff_eq!((v - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        let power: f64 = g.iter().map(|v| v.norm_sqr()).sum();
        assert_abs_diff_eq!(power, c.m_bs as f64, epsilon = 1e-9);
    }

    #[test]
    fn beamformer_is_sum_of_single_user_beams() {
        let c = cfg();
        let p1 = DownlinkPath { theta: 0.4, f_d: 100.0 };
        let p2 = DownlinkPath { theta: -0.6, f_d: -50.0 };
        let g12 = beamforming_vector(&[p1, p2], 5, &c, &dl()).unwrap();
        let g1 = beamforming_vector(&[p1], 5, &c, &dl()).unwrap();
        let g2 = beamforming_vector(&[p2], 5, &c, &dl()).unwrap();
        for i in 0..c.m_bs {
            assert_abs_diff_eq!((g12[i] - g1[i] - g2[i]).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_single_user_sum_matches_matched_beam() {
        let c = cfg();
        let alpha = Complex64::new(0.8, -0.3);
        let path = DownlinkPath { theta: 0.35, f_d: 400.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Complex64::new(1.0, 0.0);
        let rx = simulate_downlink_rx(&[(alpha, path)], 2, s, 0.0, &c, &dl(), &mut rng).unwrap();
        let phase = Complex64::from_polar(1.0, -2.0 * PI * path.f_d * 2.0 * c.block_duration());
        let expect = alpha * phase * (c.n_carriers * c.m_bs) as f64 * s;
        assert!((rx[0].summed - expect).norm() / expect.norm() < 1e-10);
    }

    #[test]
    fn zero_pilot_gives_pure_noise() {
        let c = cfg();
        let path = DownlinkPath { theta: 0.2, f_d: 100.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rx = simulate_downlink_rx(
            &[(Complex64::new(1.0, 0.0), path)],
            0,
            Complex64::new(0.0, 0.0),
            0.5,
            &c,
            &dl(),
            &mut rng,
        )
        .unwrap();
        let power: f64 =
            rx[0].per_subcarrier.iter().map(|v| v.norm_sqr()).sum::<f64>() / c.n_carriers as f64;
        assert!(power > 0.0 && power < 5.0 * 0.5);
    }

    #[test]
    fn rx_is_linear_in_pilot() {
        let c = cfg();
        let truths = [
            (Complex64::new(0.5, 0.5), DownlinkPath { theta: 0.3, f_d: 250.0 }),
            (Complex64::new(-0.2, 0.9), DownlinkPath { theta: -0.5, f_d: -600.0 }),
        ];
        let s1 = Complex64::new(1.0, 0.0);
        let s2 = Complex64::new(3.0, -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = simulate_downlink_rx(&truths, 1, s1, 0.0, &cfg(), &dl(), &mut rng).unwrap();
        let b = simulate_downlink_rx(&truths, 1, s2, 0.0, &cfg(), &dl(), &mut rng).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert!((rb.summed - ra.summed * s2 / s1).norm() <= 1e-9 * ra.summed.norm().max(1.0));
        }
        let _ = c;
    }

    #[test]
    fn co_located_uavs_interfere_at_full_scale() {
        let c = cfg();
        let path = DownlinkPath { theta: 0.25, f_d: 100.0 };
        let truths = [
            (Complex64::new(1.0, 0.0), path),
            (Complex64::new(1.0, 0.0), path),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rx =
            simulate_downlink_rx(&truths, 0, Complex64::new(1.0, 0.0), 0.0, &c, &dl(), &mut rng)
                .unwrap();
        // both beams point the same way: received power doubles in amplitude
        let expect = 2.0 * (c.n_carriers * c.m_bs) as f64;
        assert_abs_diff_eq!(rx[0].summed.norm(), expect, epsilon = 1e-6 * expect);
    }

    #[test]
    fn gain_estimate_inverts_noiseless_rx() {
        let c = cfg();
        let alpha = Complex64::new(-0.4, 0.9);
        let path = DownlinkPath { theta: -0.3, f_d: 700.0 };
        let s = Complex64::new(0.7, 0.7);
        for block in [0usize, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let rx =
                simulate_downlink_rx(&[(alpha, path)], block, s, 0.0, &c, &dl(), &mut rng).unwrap();
            let est = estimate_downlink_gain(
                rx[0].summed,
                block,
                path.f_d,
                s,
                gain_normalization(&c),
                &c,
            )
            .unwrap();
            assert!((est - alpha).norm() / alpha.norm() < 1e-10);
        }
    }

    #[test]
    fn gain_estimate_rejects_zero_pilot() {
        let c = cfg();
        assert!(estimate_downlink_gain(
            Complex64::new(1.0, 0.0),
            0,
            100.0,
            Complex64::new(0.0, 0.0),
            gain_normalization(&c),
            &c
        )
        .is_err());
    }

    #[test]
    fn block_averaging_reduces_gain_error_variance() {
        let c = cfg();
        let alpha = Complex64::new(1.0, 0.0);
        let path = DownlinkPath { theta: 0.15, f_d: 300.0 };
        let s = Complex64::new(1.0, 0.0);
        let sigma2 = 100.0;
        let mut single_err = 0.0f64;
        let mut avg_err = 0.0f64;
        let trials = 200;
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + t);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut first = Complex64::new(0.0, 0.0);
            for l in 0..c.l_blocks {
                let rx =
                    simulate_downlink_rx(&[(alpha, path)], l, s, sigma2, &c, &dl(), &mut rng)
                        .unwrap();
                let est =
                    estimate_downlink_gain(rx[0].summed, l, path.f_d, s, gain_normalization(&c), &c)
                        .unwrap();
                if l == 0 {
                    first = est;
                }
                acc += est;
            }
            let avg = acc / c.l_blocks as f64;
            single_err += (first - alpha).norm_sqr();
            avg_err += (avg - alpha).norm_sqr();
        }
        // variance shrinks roughly like 1/L
        assert!(avg_err < single_err / (c.l_blocks as f64 / 2.0));
    }

    #[test]
    fn reconstruct_exact_parameters_gives_zero_error() {
        let c = cfg();
        let alpha = Complex64::new(0.3, 0.6);
        let path = DownlinkPath { theta: 0.42, f_d: -250.0 };
        for n in [0usize, 7, 15] {
            let truth = downlink_stacked_channel(alpha, &path, n, &c, &dl()).unwrap();
            let rec = reconstruct_downlink(alpha, &path, n, &c, &dl()).unwrap();
            let err: f64 = truth
                .values
                .iter()
                .zip(&rec.values)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            assert_abs_diff_eq!(err, 0.0, epsilon = 1e-18);
        }
    }

    #[test]
    fn doubled_gain_gives_unit_normalized_mse() {
        let c = cfg();
        let alpha = Complex64::new(0.5, -0.5);
        let path = DownlinkPath { theta: 0.1, f_d: 80.0 };
        let truth = downlink_stacked_channel(alpha, &path, 4, &c, &dl()).unwrap();
        let rec = reconstruct_downlink(alpha * 2.0, &path, 4, &c, &dl()).unwrap();
        let num: f64 = truth
            .values
            .iter()
            .zip(&rec.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = truth.values.iter().map(|v| v.norm_sqr()).sum();
        assert_abs_diff_eq!(num / den, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interference_respects_dirichlet_bound() {
        let c = cfg();
        // separation of 2 cells in the sin(theta) domain
        let theta1 = 0.1f64;
        let sin2 = theta1.sin() + 2.0 / c.m_bs as f64 * c.lambda_c() / c.d;
        let p1 = DownlinkPath { theta: theta1, f_d: 100.0 };
        let p2 = DownlinkPath { theta: sin2.asin(), f_d: 400.0 };
        let s = Complex64::new(1.0, 0.0);
        for n in [0usize, 8, 15] {
            let g2 = beamforming_vector(&[p2], n, &c, &dl()).unwrap();
            let a1 = downlink_steering(p1.theta, n, &c, &dl()).unwrap();
            let interference: Complex64 = a1.iter().zip(&g2).map(|(a, g)| a * g).sum();
            let desired = c.m_bs as f64;
            let ratio = (interference.norm() / desired).powi(2);
            // spatial Dirichlet kernel at the same squint-scaled separation
            let f_n = c.subcarrier_offset(n);
            let xi = c.d * (p1.theta.sin() - p2.theta.sin()) * (1.0 + f_n / dl().f_c_dl)
                / dl().lambda_c_dl();
            let m = c.m_bs as f64;
            let kernel = ((PI * m * xi).sin() / (m * (PI * xi).sin())).abs();
            assert!(
                ratio <= 2.0 * kernel * kernel + 1e-12,
                "ratio {ratio} exceeds bound {}",
                2.0 * kernel * kernel
            );
            let _ = s;
        }
    }
}
