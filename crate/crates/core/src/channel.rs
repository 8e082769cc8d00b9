//! Physical channel synthesis for a ULA under joint Doppler and beam squint.
//!
//! The spatial steering vector carries the squint factor `(1 + f/f_c)` so the
//! beam direction drifts with the subcarrier offset `f`, and the Doppler
//! steering vector is a phase ramp across blocks. A stacked space-time channel
//! at one subcarrier is the gain times the outer combination of the two.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Per-path physical parameters: complex gain, DOA, and Doppler shift.
///
/// Ground truth and estimates share this type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Complex gain (dimensionless).
    pub alpha: Complex64,
    /// DOA in radians, strictly inside (-pi/2, pi/2).
    pub theta: f64,
    /// Doppler shift in Hz.
    pub f_d: f64,
}

impl PathParams {
    pub fn new(alpha: Complex64, theta: f64, f_d: f64) -> Self {
        Self { alpha, theta, f_d }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(Error::Parameter("non-finite gain".into()));
        }
        check_theta(self.theta)?;
        if !self.f_d.is_finite() {
            return Err(Error::Parameter("non-finite Doppler shift".into()));
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() {
        return Err(Error::Parameter("non-finite DOA".into()));
    }
    if theta <= -PI / 2.0 || theta >= PI / 2.0 {
        return Err(Error::Parameter(format!(
            "DOA {theta} outside the open interval (-pi/2, pi/2)"
        )));
    }
    Ok(())
}

/// The vectorized space-time channel at one subcarrier; flat index
/// `l * m_bs + m` holds the entry for block `l`, antenna `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedChannel {
    pub values: Vec<Complex64>,
    pub subcarrier_index: usize,
}

/// Spatial steering vector for an arbitrary carrier; `f` is the baseband
/// offset from the carrier `f_c`. Element `m` is
/// `exp(-j 2 pi m d sin(theta) (1 + f/f_c) / lambda_c)`.
pub fn steering_at_carrier(
    theta: f64,
    f: f64,
    m_count: usize,
    d: f64,
    f_c: f64,
) -> Result<Vec<Complex64>> {
    check_theta(theta)?;
    if !f.is_finite() {
        return Err(Error::Parameter("non-finite frequency offset".into()));
    }
    if f < 0.0 {
        return Err(Error::Parameter(
            "frequency offset must be non-negative".into(),
        ));
    }
    let lambda_c = SPEED_OF_LIGHT / f_c;
    let rate = -2.0 * PI * d * theta.sin() * (1.0 + f / f_c) / lambda_c;
    Ok((0..m_count)
        .map(|m| Complex64::from_polar(1.0, rate * m as f64))
        .collect())
}

/// BS-side spatial steering vector with beam squint (length `m_bs`).
pub fn bs_steering(theta: f64, f: f64, cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    steering_at_carrier(theta, f, cfg.m_bs, cfg.d, cfg.f_c)
}

/// Doppler steering vector across `l_blocks` blocks; element `l` is
/// `exp(-j 2 pi f_d l N_b T_s)`.
pub fn doppler_steering(f_d: f64, cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    if !f_d.is_finite() {
        return Err(Error::Parameter("non-finite Doppler shift".into()));
    }
    let rate = -2.0 * PI * f_d * cfg.block_duration();
    Ok((0..cfg.l_blocks)
        .map(|l| Complex64::from_polar(1.0, rate * l as f64))
        .collect())
}

/// Stacked space-time channel at pilot/subcarrier index `p_idx`.
pub fn stacked_channel(p: &PathParams, p_idx: usize, cfg: &SystemConfig) -> Result<StackedChannel> {
    if p_idx >= cfg.n_carriers {
        return Err(Error::Parameter(format!(
            "subcarrier index {p_idx} out of range [0, {})",
            cfg.n_carriers
        )));
    }
    let a = bs_steering(p.theta, cfg.subcarrier_offset(p_idx), cfg)?;
    let b = doppler_steering(p.f_d, cfg)?;
    let mut values = Vec::with_capacity(cfg.stacked_len());
    for bl in &b {
        for am in &a {
            values.push(p.alpha * bl * am);
        }
    }
    Ok(StackedChannel {
        values,
        subcarrier_index: p_idx,
    })
}

/// Channel selectivity regimes from the two delay/Doppler ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectivityClass {
    Nonselective,
    AntennaSelective,
    TimeSelective,
    DoublySelective,
}

/// Classification result together with the raw ratios it was derived from,
/// so callers can apply stricter margins than the hard threshold at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Selectivity {
    pub class: SelectivityClass,
    /// `(m_bs - 1) * d / (c * t_s)` — aperture delay over symbol duration.
    pub antenna_ratio: f64,
    /// `f_d_max * t_s` — Doppler drift over one symbol.
    pub time_ratio: f64,
}

/// Classify the channel as (non/antenna/time/doubly) selective.
/// A dimension is selective iff its ratio is >= 1.
pub fn classify(cfg: &SystemConfig, f_d_max: f64) -> Result<Selectivity> {
    cfg.validate()?;
    if !(f_d_max >= 0.0) {
        return Err(Error::Parameter("f_d_max must be >= 0".into()));
    }
    let antenna_ratio = (cfg.m_bs as f64 - 1.0) * cfg.d / (SPEED_OF_LIGHT * cfg.t_s);
    let time_ratio = f_d_max * cfg.t_s;
    let class = match (antenna_ratio >= 1.0, time_ratio >= 1.0) {
        (false, false) => SelectivityClass::Nonselective,
        (true, false) => SelectivityClass::AntennaSelective,
        (false, true) => SelectivityClass::TimeSelective,
        (true, true) => SelectivityClass::DoublySelective,
    };
    Ok(Selectivity {
        class,
        antenna_ratio,
        time_ratio,
    })
}

/// Normalized cross-correlation `|h1^H h2| / (||h1|| ||h2||)` of two stacked
/// channels at one subcarrier, computed by explicit inner product.
///
/// Gains cancel under normalization; the result equals the product of two
/// Dirichlet-kernel magnitudes (see [`dirichlet_correlation`]).
pub fn normalized_correlation(
    p1: &PathParams,
    p2: &PathParams,
    p_idx: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    p1.validate()?;
    p2.validate()?;
    let h1 = stacked_channel(p1, p_idx, cfg)?;
    let h2 = stacked_channel(p2, p_idx, cfg)?;
    let mut inner = Complex64::new(0.0, 0.0);
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for (a, b) in h1.values.iter().zip(&h2.values) {
        inner += a.conj() * b;
        n1 += a.norm_sqr();
        n2 += b.norm_sqr();
    }
    if n1 <= 0.0 || n2 <= 0.0 {
        return Err(Error::Parameter("zero-norm channel".into()));
    }
    Ok(inner.norm() / (n1.sqrt() * n2.sqrt()))
}

fn dirichlet_magnitude(x: f64, n: usize) -> f64 {
    let s = (PI * x).sin();
    if s.abs() < 1e-12 {
        1.0
    } else {
        ((PI * n as f64 * x).sin() / (n as f64 * s)).abs()
    }
}

/// Closed-form counterpart of [`normalized_correlation`]: the product of the
/// spatial and Doppler Dirichlet kernel magnitudes at the parameter offsets.
pub fn dirichlet_correlation(
    p1: &PathParams,
    p2: &PathParams,
    p_idx: usize,
    cfg: &SystemConfig,
) -> f64 {
    let f_p = cfg.subcarrier_offset(p_idx);
    let xi = cfg.d * (p1.theta.sin() - p2.theta.sin()) * (1.0 + f_p / cfg.f_c) / cfg.lambda_c();
    let zeta = (p1.f_d - p2.f_d) * cfg.block_duration();
    dirichlet_magnitude(xi, cfg.m_bs) * dirichlet_magnitude(zeta, cfg.l_blocks)
}

/// Synthesize the stacked uplink pilot observation
/// `y = sum_k vec(H_k) + w` of length `m_bs * l_blocks * p_pilots`, with the
/// per-subcarrier stacked channels concatenated in pilot-index order.
///
/// `snr_db = None` disables noise; otherwise the noise variance is set so
/// that average per-entry signal power over noise variance equals
/// `10^(snr_db/10)`. Deterministic for a fixed seed.
pub fn synthesize_pilot_observation(
    truth: &[PathParams],
    cfg: &SystemConfig,
    snr_db: Option<f64>,
    rng_seed: u64,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if truth.is_empty() {
        return Err(Error::EmptyInput("truth path list"));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); cfg.observation_len()];
    for p in truth {
        p.validate()?;
        for (pi, &p_idx) in cfg.pilot_indices.iter().enumerate() {
            let h = stacked_channel(p, p_idx, cfg)?;
            let base = pi * cfg.stacked_len();
            for (i, v) in h.values.iter().enumerate() {
                y[base + i] += v;
            }
        }
    }
    if let Some(snr) = snr_db {
        let signal_power: f64 =
            y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        let sigma2 = signal_power / 10f64.powf(snr / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let n = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid stddev");
        for v in &mut y {
            *v += Complex64::new(n.sample(&mut rng), n.sample(&mut rng));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn cfg(m_bs: usize, l_blocks: usize) -> SystemConfig {
        SystemConfig {
            m_bs,
            d: SPEED_OF_LIGHT / 60e9 / 2.0,
            f_c: 60e9,
            w: 600e6,
            n_carriers: 64,
            n_block: 324_000,
            t_s: 1.0 / 600e6,
            l_blocks,
            p_pilots: 4,
            pilot_indices: vec![0, 21, 42, 63],
        }
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        let c = cfg(8, 4);
        for f in [0.0, 1e8, 5e8] {
            let a = bs_steering(0.0, f, &c).unwrap();
            assert_eq!(a.len(), 8);
            for v in a {
                assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn half_wavelength_endfire_alternates() {
        let mut c = cfg(2, 1);
        c.p_pilots = 1;
        c.pilot_indices = vec![0];
        let theta = PI / 2.0 - 1e-12;
        let a = bs_steering(theta, 0.0, &c).unwrap();
        // phase -pi on element 1
        assert_abs_diff_eq!(a[1].re, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a[1].im, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn endfire_at_carrier_offset_wraps_to_one() {
        // (1 + f/f_c) = 2 doubles the phase, wrapping -2pi back to 0.
        let c = cfg(2, 1);
        let a = steering_at_carrier(PI / 2.0 - 1e-12, 60e9, 2, c.d, c.f_c).unwrap();
        assert_abs_diff_eq!(a[1].re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a[1].im, 0.0, epsilon = 1e-5);
    }

    #[test]
    fn steering_rejects_bad_inputs() {
        let c = cfg(8, 4);
        assert!(bs_steering(PI / 2.0, 0.0, &c).is_err());
        assert!(bs_steering(f64::NAN, 0.0, &c).is_err());
        assert!(bs_steering(0.1, f64::INFINITY, &c).is_err());
        assert!(bs_steering(0.1, -1.0, &c).is_err());
    }

    #[test]
    fn doppler_steering_zero_is_all_ones() {
        let c = cfg(4, 16);
        let b = doppler_steering(0.0, &c).unwrap();
        assert_eq!(b.len(), 16);
        for v in b {
            assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn doppler_steering_single_block() {
        let c = cfg(4, 1);
        let b = doppler_steering(1234.5, &c).unwrap();
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b[0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn doppler_half_cycle_alternates() {
        // f_d * N_b * T_s = 0.5 puts -pi of phase on block 1.
        let mut c = cfg(4, 2);
        let f_d = 0.5 / c.block_duration();
        let b = doppler_steering(f_d, &c).unwrap();
        assert_abs_diff_eq!(b[1].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1].im, 0.0, epsilon = 1e-9);
        c.l_blocks = 2;
        assert!(doppler_steering(f64::NAN, &c).is_err());
    }

    #[test]
    fn unit_modulus_everywhere() {
        let c = cfg(16, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let theta = rng.gen_range(-1.5..1.5);
            let f = rng.gen_range(0.0..600e6);
            let f_d = rng.gen_range(-900.0..900.0);
            for v in bs_steering(theta, f, &c).unwrap() {
                assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
            }
            for v in doppler_steering(f_d, &c).unwrap() {
                assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn narrowband_reduction_matches_classic_steering() {
        let c = cfg(16, 4);
        let theta = 0.42;
        let a = bs_steering(theta, 0.0, &c).unwrap();
        for (m, v) in a.iter().enumerate() {
            let phase = -2.0 * PI * m as f64 * c.d * theta.sin() / c.lambda_c();
            let expect = Complex64::from_polar(1.0, phase);
            assert_abs_diff_eq!((v - expect).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stacked_single_block_reduces_to_spatial_steering() {
        let c = cfg(8, 1);
        let p = PathParams::new(Complex64::new(0.3, -0.7), 0.2, 500.0);
        let h = stacked_channel(&p, 3, &c).unwrap();
        let a = bs_steering(p.theta, c.subcarrier_offset(3), &c).unwrap();
        for (hv, av) in h.values.iter().zip(&a) {
            assert_abs_diff_eq!((hv - p.alpha * av).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stacked_collapses_for_broadside_static_path() {
        let c = cfg(4, 4);
        let p = PathParams::new(Complex64::new(1.5, 0.5), 0.0, 0.0);
        let h = stacked_channel(&p, 0, &c).unwrap();
        for v in h.values {
            assert_abs_diff_eq!((v - p.alpha).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stacked_entry_matches_scalar_evaluation() {
        // independent elementwise evaluation of the (l=2, m=3) entry
        let c = cfg(4, 4);
        let p = PathParams::new(Complex64::new(1.0, 0.0), PI / 6.0, 100.0);
        let p_idx = 5;
        let h = stacked_channel(&p, p_idx, &c).unwrap();
        let f_p = c.subcarrier_offset(p_idx);
        for l in 0..4usize {
            for m in 0..4usize {
                let phase_t = -2.0 * PI * p.f_d * l as f64 * c.block_duration();
                let phase_s =
                    -2.0 * PI * m as f64 * c.d * p.theta.sin() * (1.0 + f_p / c.f_c)
                        / c.lambda_c();
                let expect = p.alpha * Complex64::from_polar(1.0, phase_t + phase_s);
                let got = h.values[l * c.m_bs + m];
                assert_abs_diff_eq!((got - expect).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stacked_rejects_out_of_range_subcarrier() {
        let c = cfg(4, 4);
        let p = PathParams::new(Complex64::new(1.0, 0.0), 0.1, 0.0);
        assert!(stacked_channel(&p, 64, &c).is_err());
    }

    #[test]
    fn classify_reference_configuration_is_nonselective() {
        let c = cfg(128, 4);
        let s = classify(&c, 6000.0).unwrap();
        assert_abs_diff_eq!(s.antenna_ratio, 0.635, epsilon = 1e-3);
        assert_abs_diff_eq!(s.time_ratio, 1e-5, epsilon = 1e-8);
        assert_eq!(s.class, SelectivityClass::Nonselective);
    }

    #[test]
    fn classify_antenna_selective_at_512_antennas() {
        let c = cfg(512, 4);
        let s = classify(&c, 0.0).unwrap();
        assert_abs_diff_eq!(s.antenna_ratio, 2.555, epsilon = 1e-2);
        assert_eq!(s.class, SelectivityClass::AntennaSelective);
    }

    #[test]
    fn classify_time_selective_by_construction() {
        let c = cfg(8, 4);
        let f_d_max = 2.0 / c.t_s;
        let s = classify(&c, f_d_max).unwrap();
        assert!(s.antenna_ratio < 1.0);
        assert_abs_diff_eq!(s.time_ratio, 2.0, epsilon = 1e-12);
        assert_eq!(s.class, SelectivityClass::TimeSelective);
    }

    #[test]
    fn classify_doubly_selective() {
        let c = cfg(512, 4);
        let s = classify(&c, 2.0 / c.t_s).unwrap();
        assert_eq!(s.class, SelectivityClass::DoublySelective);
    }

    #[test]
    fn classify_scale_consistency_in_t_s() {
        let mut c = cfg(64, 4);
        let a = classify(&c, 5000.0).unwrap();
        c.t_s *= 10.0;
        let b = classify(&c, 5000.0).unwrap();
        assert_abs_diff_eq!(b.antenna_ratio, a.antenna_ratio / 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.time_ratio, a.time_ratio * 10.0, epsilon = 1e-12);
    }

    #[test]
    fn self_correlation_is_one() {
        let c = cfg(16, 8);
        let p = PathParams::new(Complex64::new(0.2, 0.9), -0.3, 400.0);
        let q = PathParams::new(Complex64::new(-1.0, 0.1), -0.3, 400.0);
        let r = normalized_correlation(&p, &q, 2, &c).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_null_gives_zero_correlation() {
        // xi = 1/M with matched Doppler sits on the first spatial null.
        let c = cfg(16, 8);
        let p_idx = 0usize;
        let theta1 = 0.0f64;
        let xi = 1.0 / c.m_bs as f64;
        let sin2 = theta1.sin() + xi * c.lambda_c() / c.d;
        let theta2 = sin2.asin();
        let p = PathParams::new(Complex64::new(1.0, 0.0), theta1, 250.0);
        let q = PathParams::new(Complex64::new(1.0, 0.0), theta2, 250.0);
        let r = normalized_correlation(&p, &q, p_idx, &c).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn correlation_matches_dirichlet_closed_form() {
        let c = cfg(64, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = PathParams::new(
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                rng.gen_range(-1.3..1.3),
                rng.gen_range(-900.0..900.0),
            );
            let q = PathParams::new(
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                rng.gen_range(-1.3..1.3),
                rng.gen_range(-900.0..900.0),
            );
            let p_idx = rng.gen_range(0..c.n_carriers);
            let brute = normalized_correlation(&p, &q, p_idx, &c).unwrap();
            let closed = dirichlet_correlation(&p, &q, p_idx, &c);
            assert_abs_diff_eq!(brute, closed, epsilon = 1e-10);
        }
    }

    #[test]
    fn noiseless_single_path_observation_is_channel_concatenation() {
        let c = cfg(8, 4);
        let p = PathParams::new(Complex64::new(0.7, -0.2), 0.4, 300.0);
        let y = synthesize_pilot_observation(&[p], &c, None, 0).unwrap();
        assert_eq!(y.len(), c.observation_len());
        for (pi, &idx) in c.pilot_indices.iter().enumerate() {
            let h = stacked_channel(&p, idx, &c).unwrap();
            for (i, v) in h.values.iter().enumerate() {
                assert_abs_diff_eq!((y[pi * c.stacked_len() + i] - v).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn observation_is_deterministic_for_fixed_seed() {
        let c = cfg(8, 4);
        let truth = [
            PathParams::new(Complex64::new(0.7, -0.2), 0.4, 300.0),
            PathParams::new(Complex64::new(-0.1, 0.9), -0.5, -120.0),
        ];
        let y1 = synthesize_pilot_observation(&truth, &c, Some(10.0), 99).unwrap();
        let y2 = synthesize_pilot_observation(&truth, &c, Some(10.0), 99).unwrap();
        assert_eq!(y1, y2);
        let y3 = synthesize_pilot_observation(&truth, &c, Some(10.0), 100).unwrap();
        assert_ne!(y1, y3);
    }

    #[test]
    fn unit_gain_noiseless_observation_power() {
        let c = cfg(8, 4);
        let p = PathParams::new(Complex64::new(1.0, 0.0), 0.25, 440.0);
        let y = synthesize_pilot_observation(&[p], &c, None, 0).unwrap();
        let power: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert_abs_diff_eq!(power, c.observation_len() as f64, epsilon = 1e-9);
    }

    #[test]
    fn empty_truth_rejected() {
        let c = cfg(8, 4);
        assert!(synthesize_pilot_observation(&[], &c, None, 0).is_err());
    }

    #[test]
    fn asymptotic_orthogonality_trend() {
        // correlation decays as (M, L) doubles for fixed separated paths
        let p = PathParams::new(Complex64::new(1.0, 0.0), 0.1, 100.0);
        let mut sizes = Vec::new();
        let (mut m, mut l) = (16usize, 8usize);
        while m <= 512 {
            sizes.push((m, l));
            m *= 2;
            l *= 2;
        }
        // fixed pair separated by 2 cells at the largest size
        let c_big = cfg(512, 256);
        let sin2 = p.theta.sin() + 2.0 / 512.0 * c_big.lambda_c() / c_big.d;
        let q = PathParams::new(
            Complex64::new(1.0, 0.0),
            sin2.asin(),
            p.f_d + 2.0 / (256.0 * c_big.block_duration()),
        );
        let mut last = f64::INFINITY;
        let mut violations = 0u32;
        for &(m, l) in &sizes {
            let c = cfg(m, l);
            let r = normalized_correlation(&p, &q, 1, &c).unwrap();
            if r > last {
                violations += 1;
            }
            last = r;
            if m == 512 {
                assert!(r < 0.05, "correlation {r} not below 0.05 at (512, 256)");
            }
        }
        assert!(violations <= 1, "correlation trend not non-increasing");
    }
}
