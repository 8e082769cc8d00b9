//! Continuous-parameter dictionary for the gridless sparse recovery.
//!
//! Column `k` is the unit-gain stacked channel atom at `(theta_k, f_dk)`,
//! concatenated over the pilot subcarriers. The two analytic Jacobian columns
//! apply the per-entry phase-derivative multipliers to the atom.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::channel::{stacked_channel, PathParams};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dictionary {
    /// (m_bs * l_blocks * p_pilots) x K atom matrix.
    pub columns: DMatrix<Complex64>,
    pub thetas: Vec<f64>,
    pub dopplers: Vec<f64>,
}

/// Unit-gain atom at `(theta, f_d)`: stacked channels over pilot subcarriers.
pub fn atom(theta: f64, f_d: f64, cfg: &SystemConfig) -> Result<DVector<Complex64>> {
    let p = PathParams::new(Complex64::new(1.0, 0.0), theta, f_d);
    let mut v = Vec::with_capacity(cfg.observation_len());
    for &idx in &cfg.pilot_indices {
        v.extend(stacked_channel(&p, idx, cfg)?.values);
    }
    Ok(DVector::from_vec(v))
}

impl Dictionary {
    pub fn build(thetas: &[f64], dopplers: &[f64], cfg: &SystemConfig) -> Result<Self> {
        if thetas.len() != dopplers.len() {
            return Err(Error::DimensionMismatch {
                expected: thetas.len(),
                got: dopplers.len(),
                context: "dictionary theta/doppler lists",
            });
        }
        if thetas.is_empty() {
            return Err(Error::EmptyInput("dictionary parameters"));
        }
        let n = cfg.observation_len();
        let mut columns = DMatrix::zeros(n, thetas.len());
        for (k, (&th, &fd)) in thetas.iter().zip(dopplers).enumerate() {
            columns.set_column(k, &atom(th, fd, cfg)?);
        }
        Ok(Self {
            columns,
            thetas: thetas.to_vec(),
            dopplers: dopplers.to_vec(),
        })
    }

    pub fn num_components(&self) -> usize {
        self.thetas.len()
    }

    /// Largest elementwise deviation between the stored columns and columns
    /// regenerated from the parameters. Zero for a fresh dictionary.
    pub fn staleness(&self, cfg: &SystemConfig) -> Result<f64> {
        let fresh = Dictionary::build(&self.thetas, &self.dopplers, cfg)?;
        let mut worst = 0.0f64;
        for (a, b) in self.columns.iter().zip(fresh.columns.iter()) {
            worst = worst.max((a - b).norm());
        }
        Ok(worst)
    }

    /// Analytic derivative of column `k` with respect to `theta_k`.
    ///
    /// Entry (pilot p, block l, antenna m) of the atom carries the phase
    /// `-2 pi m d sin(theta) (1 + f_p/f_c) / lambda_c` in theta, so the
    /// derivative multiplies the entry by
    /// `-j 2 pi m (d cos(theta) / lambda_c) (1 + f_p/f_c)`.
    pub fn d_column_d_theta(&self, k: usize, cfg: &SystemConfig) -> DVector<Complex64> {
        let theta = self.thetas[k];
        let scale = 2.0 * PI * cfg.d * theta.cos() / cfg.lambda_c();
        let mut out = DVector::zeros(self.columns.nrows());
        let sl = cfg.stacked_len();
        for (pi, &idx) in cfg.pilot_indices.iter().enumerate() {
            let squint = 1.0 + cfg.subcarrier_offset(idx) / cfg.f_c;
            for l in 0..cfg.l_blocks {
                for m in 0..cfg.m_bs {
                    let row = pi * sl + l * cfg.m_bs + m;
                    let mult = Complex64::new(0.0, -scale * m as f64 * squint);
                    out[row] = mult * self.columns[(row, k)];
                }
            }
        }
        out
    }

    /// Analytic derivative of column `k` with respect to `f_dk`; the Doppler
    /// phase is `-2 pi f_d l N_b T_s`, so the multiplier is
    /// `-j 2 pi l N_b T_s` per block index `l`.
    pub fn d_column_d_doppler(&self, k: usize, cfg: &SystemConfig) -> DVector<Complex64> {
        let scale = 2.0 * PI * cfg.block_duration();
        let mut out = DVector::zeros(self.columns.nrows());
        let sl = cfg.stacked_len();
        for pi in 0..cfg.p_pilots {
            for l in 0..cfg.l_blocks {
                for m in 0..cfg.m_bs {
                    let row = pi * sl + l * cfg.m_bs + m;
                    let mult = Complex64::new(0.0, -scale * l as f64);
                    out[row] = mult * self.columns[(row, k)];
                }
            }
        }
        out
    }
}
