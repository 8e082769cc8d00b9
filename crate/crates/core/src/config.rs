//! System-level constants shared by every module: array geometry, carrier,
//! bandwidth, OFDM numerology, and block timing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uplink system configuration: ULA geometry plus OFDM/block timing.
///
/// `t_s` is the symbol duration, `n_block` the symbols per block, and
/// `l_blocks` the number of stacked blocks, so one stacked observation spans
/// `l_blocks * n_block * t_s` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antenna count.
    pub m_bs: usize,
    /// Antenna spacing in meters.
    pub d: f64,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// System bandwidth in Hz.
    pub w: f64,
    /// OFDM subcarrier count.
    pub n_carriers: usize,
    /// Symbols per block.
    pub n_block: usize,
    /// Symbol duration in seconds.
    pub t_s: f64,
    /// Stacked block count.
    pub l_blocks: usize,
    /// Pilot subcarrier count; must equal `pilot_indices.len()`.
    pub p_pilots: usize,
    /// Strictly increasing pilot subcarrier indices in `[0, n_carriers)`.
    pub pilot_indices: Vec<usize>,
}

impl SystemConfig {
    /// Subcarrier spacing in Hz.
    pub fn eta(&self) -> f64 {
        self.w / self.n_carriers as f64
    }

    /// Carrier wavelength in meters.
    pub fn lambda_c(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Block duration in seconds (`n_block * t_s`).
    pub fn block_duration(&self) -> f64 {
        self.n_block as f64 * self.t_s
    }

    /// Baseband frequency offset of subcarrier `p` from the carrier.
    pub fn subcarrier_offset(&self, p: usize) -> f64 {
        p as f64 * self.eta()
    }

    /// Length of one stacked space-time channel vector (`m_bs * l_blocks`).
    pub fn stacked_len(&self) -> usize {
        self.m_bs * self.l_blocks
    }

    /// Length of the full pilot observation (`m_bs * l_blocks * p_pilots`).
    pub fn observation_len(&self) -> usize {
        self.stacked_len() * self.p_pilots
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_bs < 1 || self.n_carriers < 1 || self.n_block < 1 || self.l_blocks < 1 {
            return Err(Error::Config("all counts must be >= 1".into()));
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::Config("antenna spacing d must be positive".into()));
        }
        if !(self.f_c > 0.0) || !self.f_c.is_finite() {
            return Err(Error::Config("carrier frequency f_c must be positive".into()));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(Error::Config("bandwidth w must be positive".into()));
        }
        if !(self.t_s > 0.0) || !self.t_s.is_finite() {
            return Err(Error::Config("symbol duration t_s must be positive".into()));
        }
        if self.p_pilots < 1 || self.p_pilots > self.n_carriers {
            return Err(Error::Config(format!(
                "p_pilots must lie in [1, {}]",
                self.n_carriers
            )));
        }
        if self.pilot_indices.len() != self.p_pilots {
            return Err(Error::Config(format!(
                "pilot_indices has length {}, expected p_pilots = {}",
                self.pilot_indices.len(),
                self.p_pilots
            )));
        }
        if !self.pilot_indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "pilot_indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = self.pilot_indices.last() {
            if last >= self.n_carriers {
                return Err(Error::Config(format!(
                    "pilot index {} out of range [0, {})",
                    last, self.n_carriers
                )));
            }
        }
        Ok(())
    }
}

/// Downlink carrier configuration; array/OFDM geometry is inherited from
/// the uplink [`SystemConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownlinkConfig {
    /// Downlink carrier frequency in Hz.
    pub f_c_dl: f64,
}

impl DownlinkConfig {
    /// Downlink carrier wavelength in meters.
    pub fn lambda_c_dl(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c_dl
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_c_dl > 0.0) || !self.f_c_dl.is_finite() {
            return Err(Error::Config(
                "downlink carrier frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Angular reciprocity is only accurate when the duplex separation stays
    /// within a few GHz; callers may warn past this margin.
    pub fn duplex_gap_exceeds(&self, cfg: &SystemConfig, margin_hz: f64) -> bool {
        (self.f_c_dl - cfg.f_c).abs() > margin_hz
    }
}
