//! Cognitive-radio virtual network environment: analytic metrics for
//! secondary virtual networks (SVNs) sharing primary channels, a
//! multi-objective SVN-to-channel mapper, and Monte Carlo validators for
//! every analytic quantity.

pub mod channel_model;
pub mod cli;
pub mod exec;
pub mod mapper;
pub mod metrics;
pub mod occupancy;
pub mod oracle;
pub mod quadrature;
pub mod scenario;
pub mod sweep;

pub use channel_model::ChannelProfile;
pub use exec::Exec;
pub use metrics::{Environment, LayerMetrics, MappingMetrics, SvnMetrics};
pub use occupancy::CountDistribution;
pub use scenario::{Channel, Mapping, PvnShare, Scenario, SvnRequest};
