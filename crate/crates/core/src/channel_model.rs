//! Per-channel PU activity and opportunistic capacity under exponentially
//! distributed SNR (in dB).

use std::f64::consts::{LN_10, LN_2};

use crate::quadrature::{self, QuadratureError};
use crate::scenario::Channel;

/// Relative tolerance of the mean-capacity quadrature.
pub const CAPACITY_REL_TOL: f64 = 1e-8;

/// Density mass left beyond the truncation point of the SNR integral.
pub const SNR_TAIL_MASS: f64 = 1e-12;

const MAX_INTERVALS: usize = 500;

/// Stationary probability that a PU occupies the channel.
pub fn utilization(channel: &Channel) -> f64 {
    channel.pu_arrival_rate / channel.pu_service_rate
}

/// `log2(1 + 10^(db/10))` without overflow for large `db`.
pub(crate) fn log2_one_plus_db(db: f64) -> f64 {
    let s = db / 10.0 * LN_10;
    if s > 36.0 {
        (s + (-s).exp().ln_1p()) / LN_2
    } else {
        s.exp().ln_1p() / LN_2
    }
}

/// Shannon capacity in bps for an SNR given in dB.
pub fn shannon_capacity(bandwidth_hz: f64, snr_db: f64) -> f64 {
    bandwidth_hz * log2_one_plus_db(snr_db)
}

/// `E[log2(1 + 10^(X/10))]` for `X ~ Exp(mean = snr_mean_db)`.
///
/// Substituting `x = snr_mean_db·u` turns the integral into
/// `∫ log2(1 + 10^(snr_mean_db·u/10)) e^(-u) du` over `u ≥ 0`, truncated at
/// `u = -ln(SNR_TAIL_MASS)`.
pub fn mean_spectral_efficiency(snr_mean_db: f64) -> Result<f64, QuadratureError> {
    let upper = -SNR_TAIL_MASS.ln();
    quadrature::integrate(
        |u| log2_one_plus_db(snr_mean_db * u) * (-u).exp(),
        0.0,
        upper,
        CAPACITY_REL_TOL,
        MAX_INTERVALS,
    )
}

/// Mean channel capacity in bps when the channel is always available.
pub fn mean_capacity(channel: &Channel) -> Result<f64, QuadratureError> {
    Ok(channel.bandwidth_hz * mean_spectral_efficiency(channel.snr_mean_db)?)
}

/// Standard deviation of the instantaneous capacity, in bps.
pub fn capacity_std_dev(channel: &Channel) -> Result<f64, QuadratureError> {
    let m = channel.snr_mean_db;
    let upper = -SNR_TAIL_MASS.ln();
    let second = quadrature::integrate(
        |u| log2_one_plus_db(m * u).powi(2) * (-u).exp(),
        0.0,
        upper,
        CAPACITY_REL_TOL,
        MAX_INTERVALS,
    )?;
    let mean = mean_spectral_efficiency(m)?;
    Ok(channel.bandwidth_hz * (second - mean * mean).max(0.0).sqrt())
}

/// Mean rate available to a secondary user: capacity times the idle probability.
pub fn effective_rate(channel: &Channel) -> Result<f64, QuadratureError> {
    Ok((1.0 - utilization(channel)) * mean_capacity(channel)?)
}

/// Derived per-channel quantities, computed once per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub channel_id: String,
    pub rho: f64,
    pub p_off: f64,
    pub mean_capacity_bps: f64,
    pub effective_rate_bps: f64,
}

impl ChannelProfile {
    pub fn from_channel(channel: &Channel) -> Result<Self, QuadratureError> {
        let rho = utilization(channel);
        let mean_capacity_bps = mean_capacity(channel)?;
        Ok(Self::from_parts(channel.id.clone(), rho, mean_capacity_bps))
    }

    /// Builds a profile from a utilization and an already known mean capacity.
    pub fn from_parts(channel_id: impl Into<String>, rho: f64, mean_capacity_bps: f64) -> Self {
        let p_off = 1.0 - rho;
        Self {
            channel_id: channel_id.into(),
            rho,
            p_off,
            mean_capacity_bps,
            effective_rate_bps: p_off * mean_capacity_bps,
        }
    }

    /// Same channel statistics with a different PU utilization.
    pub fn with_rho(&self, rho: f64) -> Self {
        Self::from_parts(self.channel_id.clone(), rho, self.mean_capacity_bps)
    }
}
