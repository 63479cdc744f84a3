//! Domain model of the three-layer environment: substrate channels, the
//! primary virtual network (PVN) split, and the secondary virtual network
//! (SVN) requests. Also the JSON file formats for scenarios and mappings.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `Σ share = 1`.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-9;

/// One substrate channel with its primary-user activity and SNR statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub id: String,
    pub bandwidth_hz: f64,
    /// PU arrivals per second.
    pub pu_arrival_rate: f64,
    /// Inverse of the mean PU holding time.
    pub pu_service_rate: f64,
    /// Mean of the exponentially distributed SNR, in dB.
    pub snr_mean_db: f64,
}

impl Channel {
    pub fn new(
        id: impl Into<String>,
        bandwidth_hz: f64,
        pu_arrival_rate: f64,
        pu_service_rate: f64,
        snr_mean_db: f64,
    ) -> Self {
        Self {
            id: id.into(),
            bandwidth_hz,
            pu_arrival_rate,
            pu_service_rate,
            snr_mean_db,
        }
    }

    /// Channel whose PU utilization is exactly `rho` for the given service rate.
    pub fn with_utilization(
        id: impl Into<String>,
        bandwidth_hz: f64,
        rho: f64,
        pu_service_rate: f64,
        snr_mean_db: f64,
    ) -> Self {
        Self::new(id, bandwidth_hz, rho * pu_service_rate, pu_service_rate, snr_mean_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvnShare {
    pub pvn_id: String,
    pub share: f64,
}

/// Secondary demand of one SVN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvnRequest {
    pub svn_id: String,
    /// SU arrivals per second.
    pub su_arrival_rate: f64,
    /// Inverse of the mean SU holding time.
    pub su_service_rate: f64,
    /// Mean bit rate requested by one SU.
    pub mean_demand_bps: f64,
}

impl SvnRequest {
    pub fn new(
        svn_id: impl Into<String>,
        su_arrival_rate: f64,
        su_service_rate: f64,
        mean_demand_bps: f64,
    ) -> Self {
        Self {
            svn_id: svn_id.into(),
            su_arrival_rate,
            su_service_rate,
            mean_demand_bps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub channels: Vec<Channel>,
    pub pvn_shares: Vec<PvnShare>,
    pub svn_requests: Vec<SvnRequest>,
    pub collision_threshold: f64,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn channel_index(&self, id: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.id == id)
    }

    pub fn svn_index(&self, id: &str) -> Option<usize> {
        self.svn_requests.iter().position(|r| r.svn_id == id)
    }
}

/// One violated invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario:\n{}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_positive(out: &mut Vec<Violation>, field: String, value: f64) {
    if !(value.is_finite() && value > 0.0) {
        out.push(Violation::new(field, format!("must be positive (got {value})")));
    }
}

fn check_unique<'a>(out: &mut Vec<Violation>, what: &str, ids: impl Iterator<Item = &'a str>) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::new(what, format!("duplicate id {id:?}")));
        }
    }
}

/// Collects every violated invariant of `scenario`.
pub fn scenario_violations(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if scenario.channels.is_empty() {
        out.push(Violation::new("channels", "at least one channel is required"));
    }
    for (i, c) in scenario.channels.iter().enumerate() {
        let f = |name: &str| format!("channels[{i}].{name}");
        check_positive(&mut out, f("bandwidth_hz"), c.bandwidth_hz);
        check_positive(&mut out, f("pu_service_rate"), c.pu_service_rate);
        check_positive(&mut out, f("snr_mean_db"), c.snr_mean_db);
        if !(c.pu_arrival_rate.is_finite() && c.pu_arrival_rate >= 0.0) {
            out.push(Violation::new(
                f("pu_arrival_rate"),
                format!("must be nonnegative (got {})", c.pu_arrival_rate),
            ));
        } else if c.pu_service_rate > 0.0 && c.pu_arrival_rate / c.pu_service_rate >= 1.0 {
            out.push(Violation::new(
                f("pu_arrival_rate"),
                format!(
                    "utilization must be < 1 (got {})",
                    c.pu_arrival_rate / c.pu_service_rate
                ),
            ));
        }
    }
    check_unique(&mut out, "channels", scenario.channels.iter().map(|c| c.id.as_str()));

    if scenario.pvn_shares.is_empty() {
        out.push(Violation::new("pvn_shares", "at least one PVN share is required"));
    }
    let mut sum = 0.0;
    for (j, s) in scenario.pvn_shares.iter().enumerate() {
        if !(s.share.is_finite() && (0.0..=1.0).contains(&s.share)) {
            out.push(Violation::new(
                format!("pvn_shares[{j}].share"),
                format!("must lie in [0, 1] (got {})", s.share),
            ));
        }
        sum += s.share;
    }
    if !scenario.pvn_shares.is_empty() && (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
        out.push(Violation::new(
            "pvn_shares",
            format!("shares must sum to 1 (got {sum})"),
        ));
    }
    let positive = scenario.pvn_shares.iter().filter(|s| s.share > 0.0).count();
    if positive > scenario.channels.len() && !scenario.channels.is_empty() {
        out.push(Violation::new(
            "pvn_shares",
            format!(
                "{positive} PVNs with positive share but only {} channels",
                scenario.channels.len()
            ),
        ));
    }
    check_unique(
        &mut out,
        "pvn_shares",
        scenario.pvn_shares.iter().map(|s| s.pvn_id.as_str()),
    );

    if scenario.svn_requests.is_empty() {
        out.push(Violation::new("svn_requests", "at least one SVN request is required"));
    }
    for (l, r) in scenario.svn_requests.iter().enumerate() {
        let f = |name: &str| format!("svn_requests[{l}].{name}");
        check_positive(&mut out, f("su_arrival_rate"), r.su_arrival_rate);
        check_positive(&mut out, f("su_service_rate"), r.su_service_rate);
        check_positive(&mut out, f("mean_demand_bps"), r.mean_demand_bps);
    }
    check_unique(
        &mut out,
        "svn_requests",
        scenario.svn_requests.iter().map(|r| r.svn_id.as_str()),
    );

    let thr = scenario.collision_threshold;
    if !(thr.is_finite() && (0.0..=1.0).contains(&thr)) {
        out.push(Violation::new(
            "collision_threshold",
            format!("must lie in [0, 1] (got {thr})"),
        ));
    }
    out
}

/// Returns the scenario iff every channel, share and request invariant holds.
pub fn validate_scenario(scenario: Scenario) -> Result<Scenario, ScenarioError> {
    let violations = scenario_violations(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("channel list is empty")]
    NoChannels,
    #[error("share list is empty")]
    NoShares,
    #[error("{positive} PVNs with positive share but only {channels} channels")]
    TooFewChannels { positive: usize, channels: usize },
    #[error("shares must lie in [0, 1] and sum to 1 (sum = {0})")]
    BadShares(f64),
}

/// Channels held by each PVN, in share order.
#[derive(Debug, Clone, PartialEq)]
pub struct PvnAllocation {
    pub pvns: Vec<(String, Vec<String>)>,
}

impl PvnAllocation {
    pub fn sizes(&self) -> Vec<usize> {
        self.pvns.iter().map(|(_, c)| c.len()).collect()
    }
}

/// Largest-remainder split of `m` channels over `shares`.
///
/// Every PVN starts at `floor(m·q)`; the leftover channels go one each to the
/// largest fractional remainders, ties to the lower index.
pub fn allocation_sizes(m: usize, shares: &[f64]) -> Result<Vec<usize>, AllocationError> {
    if m == 0 {
        return Err(AllocationError::NoChannels);
    }
    if shares.is_empty() {
        return Err(AllocationError::NoShares);
    }
    let sum: f64 = shares.iter().sum();
    if shares.iter().any(|q| !(q.is_finite() && (0.0..=1.0).contains(q)))
        || (sum - 1.0).abs() > SHARE_SUM_TOLERANCE
    {
        return Err(AllocationError::BadShares(sum));
    }
    let positive = shares.iter().filter(|&&q| q > 0.0).count();
    if positive > m {
        return Err(AllocationError::TooFewChannels { positive, channels: m });
    }

    let mf = m as f64;
    let quotas: Vec<f64> = shares
        .iter()
        .map(|&q| {
            let x = mf * q;
            // snap decimal-literal noise such as 2.9999999999999996
            if (x - x.round()).abs() < SHARE_SUM_TOLERANCE * mf {
                x.round()
            } else {
                x
            }
        })
        .collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let leftover = m.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &j in order.iter().take(leftover) {
        sizes[j] += 1;
    }
    Ok(sizes)
}

/// Splits the ordered channel list among the PVNs: the first `|Q_1|`
/// channels go to the first PVN, and so on.
pub fn allocate_pvn_channels(
    channels: &[Channel],
    shares: &[PvnShare],
) -> Result<PvnAllocation, AllocationError> {
    let q: Vec<f64> = shares.iter().map(|s| s.share).collect();
    let sizes = allocation_sizes(channels.len(), &q)?;
    let mut next = 0;
    let pvns = shares
        .iter()
        .zip(sizes)
        .map(|(s, size)| {
            let ids = channels[next..next + size].iter().map(|c| c.id.clone()).collect();
            next += size;
            (s.pvn_id.clone(), ids)
        })
        .collect();
    Ok(PvnAllocation { pvns })
}

/// SVN-to-channel assignment as stored in mapping files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mapping {
    pub assignments: BTreeMap<String, Vec<String>>,
}

impl Mapping {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }
}
