//! One-parameter sweeps of a single SVN's metrics, including the three
//! built-in studies: uniform PU utilization, channel count, and an imposed
//! blocking probability.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel_model::ChannelProfile;
use crate::exec::Exec;
use crate::metrics::{metrics_from_contexts, HandoverContext, SvnMetrics};
use crate::quadrature::QuadratureError;
use crate::scenario::{Channel, SvnRequest};

/// Defaults shared by the presets.
pub const PRESET_SU_ARRIVAL_RATE: f64 = 0.5;
pub const PRESET_SU_SERVICE_RATE: f64 = 0.5;
pub const PRESET_DEMAND_BPS: f64 = 5e5;
pub const PRESET_BANDWIDTH_HZ: f64 = 1e6;
pub const PRESET_SNR_MEAN_DB: f64 = 10.0;
pub const PRESET_PU_SERVICE_RATE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// PU utilization applied uniformly to every channel of the set.
    Rho,
    /// Number of identical channels.
    Channels,
    /// Blocking probability imposed on the downstream metrics.
    Blocking,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Rho => "rho",
            SweepParam::Channels => "channels",
            SweepParam::Blocking => "blocking",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rho" => Ok(SweepParam::Rho),
            "channels" | "n" => Ok(SweepParam::Channels),
            "blocking" => Ok(SweepParam::Blocking),
            other => Err(SweepError::UnknownParam(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
}

impl FromStr for Preset {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            other => Err(SweepError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep needs at least 2 steps (got {0})")]
    TooFewSteps(usize),
    #[error("sweep start {start} must be below stop {stop}")]
    EmptyRange { start: f64, stop: f64 },
    #[error("unknown sweep parameter {0:?} (expected rho, channels or blocking)")]
    UnknownParam(String),
    #[error("unknown preset {0:?} (expected fig2, fig3 or fig4)")]
    UnknownPreset(String),
    #[error("sweep base needs at least one channel")]
    NoChannels,
    #[error(transparent)]
    Capacity(#[from] QuadratureError),
}

/// The fixed part of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepBase {
    /// Channel set used by the `rho` and `blocking` sweeps.
    pub channels: Vec<ChannelProfile>,
    /// Channel replicated by the `channels` sweep.
    pub template: ChannelProfile,
    pub request: SvnRequest,
    /// Pins the channels-per-SU figure instead of deriving it from the rates.
    pub chsu: Option<f64>,
}

impl SweepBase {
    /// `n` identical channels built from `channel`.
    pub fn uniform(
        channel: &Channel,
        n: usize,
        request: SvnRequest,
        chsu: Option<f64>,
    ) -> Result<Self, SweepError> {
        if n == 0 {
            return Err(SweepError::NoChannels);
        }
        let template = ChannelProfile::from_channel(channel)?;
        let channels = (0..n)
            .map(|i| ChannelProfile {
                channel_id: format!("{}#{i}", channel.id),
                ..template.clone()
            })
            .collect();
        Ok(Self {
            channels,
            template,
            request,
            chsu,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub base: SweepBase,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.steps < 2 {
            return Err(SweepError::TooFewSteps(self.steps));
        }
        if self.start.partial_cmp(&self.stop) != Some(std::cmp::Ordering::Less) {
            return Err(SweepError::EmptyRange {
                start: self.start,
                stop: self.stop,
            });
        }
        if self.base.channels.is_empty() {
            return Err(SweepError::NoChannels);
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.stop
                } else {
                    self.start + span * k as f64 / last
                }
            })
            .collect()
    }

    /// The built-in studies. Every preset uses one SVN with
    /// `λ = 0.5/s, μ = 0.5/s` (one SU on average), 500 kbps per SU,
    /// 1 MHz channels with a 10 dB mean SNR and a unit PU service rate.
    ///
    /// * `fig2`: four channels, uniform utilization 0.05..0.95, one channel
    ///   per SU.
    /// * `fig3`: 2..20 channels at utilization 0.5.
    /// * `fig4`: four channels at utilization 0.5, imposed blocking 0..1.
    pub fn preset(preset: Preset) -> Result<Self, SweepError> {
        let request = SvnRequest::new(
            "svn",
            PRESET_SU_ARRIVAL_RATE,
            PRESET_SU_SERVICE_RATE,
            PRESET_DEMAND_BPS,
        );
        let channel = |rho| {
            Channel::with_utilization(
                "ch",
                PRESET_BANDWIDTH_HZ,
                rho,
                PRESET_PU_SERVICE_RATE,
                PRESET_SNR_MEAN_DB,
            )
        };
        let spec = match preset {
            Preset::Fig2 => SweepSpec {
                param: SweepParam::Rho,
                start: 0.05,
                stop: 0.95,
                steps: 19,
                base: SweepBase::uniform(&channel(0.5), 4, request, Some(1.0))?,
            },
            Preset::Fig3 => SweepSpec {
                param: SweepParam::Channels,
                start: 2.0,
                stop: 20.0,
                steps: 19,
                base: SweepBase::uniform(&channel(0.5), 4, request, None)?,
            },
            Preset::Fig4 => SweepSpec {
                param: SweepParam::Blocking,
                start: 0.0,
                stop: 1.0,
                steps: 11,
                base: SweepBase::uniform(&channel(0.5), 4, request, None)?,
            },
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: SvnMetrics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Points outside the parameter's domain, with the reason.
    pub skipped: Vec<(f64, String)>,
}

fn evaluate_point(spec: &SweepSpec, value: f64) -> Result<SvnMetrics, String> {
    let base = &spec.base;
    let (channels, imposed) = match spec.param {
        SweepParam::Rho => {
            if !(0.0..1.0).contains(&value) {
                return Err(format!("utilization {value} outside [0, 1)"));
            }
            (base.channels.iter().map(|c| c.with_rho(value)).collect(), None)
        }
        SweepParam::Channels => {
            let n = value.round();
            if (value - n).abs() > 1e-9 || n < 1.0 {
                return Err(format!("channel count {value} is not a positive integer"));
            }
            let set = (0..n as usize)
                .map(|i| ChannelProfile {
                    channel_id: format!("{}#{i}", base.template.channel_id),
                    ..base.template.clone()
                })
                .collect::<Vec<_>>();
            (set, None)
        }
        SweepParam::Blocking => {
            if !(0.0..=1.0).contains(&value) {
                return Err(format!("blocking probability {value} outside [0, 1]"));
            }
            (base.channels.clone(), Some(value))
        }
    };
    let ctx = HandoverContext::with_chsu(&base.request, &channels, base.chsu, imposed);
    Ok(metrics_from_contexts(&[ctx]).remove(0))
}

/// Evaluates every sweep point; rows come back in sweep order.
pub fn run_sweep(spec: &SweepSpec, exec: Exec) -> Result<SweepOutcome, SweepError> {
    spec.validate()?;
    let points = spec.points();
    let results = exec.map_slice(&points, |&v| (v, evaluate_point(spec, v)));
    let mut out = SweepOutcome::default();
    for (value, r) in results {
        match r {
            Ok(metrics) => out.rows.push(SweepRow { value, metrics }),
            Err(reason) => out.skipped.push((value, reason)),
        }
    }
    Ok(out)
}
