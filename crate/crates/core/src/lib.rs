//! Time-varying wideband massive-MIMO channel synthesis and tracking under
//! joint Doppler and beam-squint effects.
//!
//! The crate covers the full pipeline: physical channel synthesis for a
//! uniform linear array ([`channel`]), gridless sparse recovery of the path
//! parameters from uplink pilots ([`gcs`]), downlink reconstruction via
//! reciprocity ([`downlink`]), an EKF DOA tracker on angle-domain peaks
//! ([`ekf`]), and a seeded Monte Carlo experiment harness ([`sim`]).

pub mod channel;
pub mod config;
pub mod downlink;
pub mod ekf;
pub mod error;
pub mod gcs;
pub mod metrics;
pub mod sim;

pub use channel::{
    classify, dirichlet_correlation, normalized_correlation, stacked_channel,
    synthesize_pilot_observation, PathParams, Selectivity, SelectivityClass, StackedChannel,
};
pub use config::{DownlinkConfig, SystemConfig, SPEED_OF_LIGHT};
pub use downlink::{map_reciprocal, DownlinkPath};
pub use ekf::{extract_peak, idft_channel, track_doa, DoaTrack, EkfSettings, EkfState, Measurement};
pub use error::{Error, Result};
pub use gcs::{track_uplink, Dictionary, GcsSettings, TrackOutcome};
pub use metrics::{mse_metrics, MseMetrics};
pub use sim::{run_experiment, ExperimentSpec, MetricRow, RunOutput, TruthPolicy};
