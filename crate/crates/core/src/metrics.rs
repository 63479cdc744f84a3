//! Analytic per-SVN and layer-average metrics: collision, SU blocking, joint
//! utilization and the SVN handover chain.

use std::collections::HashSet;

use thiserror::Error;

use crate::channel_model::ChannelProfile;
use crate::occupancy::{pu_count_distribution, su_count_exceeds, CountDistribution};
use crate::quadrature::QuadratureError;
use crate::scenario::{validate_scenario, Mapping, Scenario, ScenarioError, SvnRequest};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("channel set is empty")]
    EmptyChannelSet,
    #[error("no SVNs to average over")]
    EmptySvnList,
}

/// Mean number of SUs and mean requested rate of one SVN.
pub fn su_demand(request: &SvnRequest) -> (f64, f64) {
    let mean_sus = request.su_arrival_rate / request.su_service_rate;
    (mean_sus, mean_sus * request.mean_demand_bps)
}

/// Average effective rate over a channel set.
pub fn mean_channel_rate(channel_set: &[ChannelProfile]) -> Result<f64, MetricsError> {
    if channel_set.is_empty() {
        return Err(MetricsError::EmptyChannelSet);
    }
    let total: f64 = channel_set.iter().map(|c| c.effective_rate_bps).sum();
    Ok(total / channel_set.len() as f64)
}

/// Average number of channels one SU needs, never below one.
pub fn channels_per_su(
    mean_demand_bps: f64,
    channel_set: &[ChannelProfile],
) -> Result<f64, MetricsError> {
    Ok((mean_demand_bps / mean_channel_rate(channel_set)?).max(1.0))
}

/// SU capacity left when `busy` of `n` channels carry a PU.
fn su_slots(n: usize, busy: usize, chsu: f64) -> i64 {
    ((n - busy) as f64 / chsu).floor() as i64
}

/// `Σ_{i ≥ first} P[NPU = i] · P[NSU > floor((n − i)/chsu)]`.
fn overflow_sum(pu: &CountDistribution, su_mean: f64, chsu: f64, first: usize) -> f64 {
    let n = pu.max_count();
    (first..=n)
        .map(|i| pu.prob(i) * su_count_exceeds(su_mean, su_slots(n, i, chsu)))
        .sum()
}

/// Collision probability from a precomputed PU-count law.
pub fn collision_from_pmf(pu: &CountDistribution, su_mean: f64, chsu: f64) -> f64 {
    overflow_sum(pu, su_mean, chsu, 1)
}

/// Blocking probability from a precomputed PU-count law.
pub fn blocking_from_pmf(pu: &CountDistribution, su_mean: f64, chsu: f64) -> f64 {
    overflow_sum(pu, su_mean, chsu, 0)
}

fn rhos(channel_set: &[ChannelProfile]) -> Vec<f64> {
    channel_set.iter().map(|c| c.rho).collect()
}

/// Probability that PU and SU demand together exceed the set, with at least
/// one PU present. With `chsu = 1` the SU threshold is simply `n − i`.
pub fn collision_probability(
    channel_set: &[ChannelProfile],
    su_mean: f64,
    chsu: f64,
) -> Result<f64, MetricsError> {
    if channel_set.is_empty() {
        return Err(MetricsError::EmptyChannelSet);
    }
    Ok(collision_from_pmf(&pu_count_distribution(&rhos(channel_set)), su_mean, chsu))
}

/// Probability that a new SU cannot be accommodated.
pub fn blocking_probability(
    channel_set: &[ChannelProfile],
    su_mean: f64,
    chsu: f64,
) -> Result<f64, MetricsError> {
    if channel_set.is_empty() {
        return Err(MetricsError::EmptyChannelSet);
    }
    Ok(blocking_from_pmf(&pu_count_distribution(&rhos(channel_set)), su_mean, chsu))
}

/// Fraction of the set occupied by PUs or admitted SUs. Not clamped to one.
pub fn joint_utilization(
    channel_set: &[ChannelProfile],
    su_mean: f64,
    chsu: f64,
    blocking: f64,
) -> Result<f64, MetricsError> {
    if channel_set.is_empty() {
        return Err(MetricsError::EmptyChannelSet);
    }
    let n = channel_set.len() as f64;
    let mean_pu = n - channel_set.iter().map(|c| c.p_off).sum::<f64>();
    Ok((mean_pu + (1.0 - blocking) * su_mean * chsu) / n)
}

/// Total effective rate of the allocated set.
pub fn allocated_rate(channel_set: &[ChannelProfile]) -> f64 {
    channel_set.iter().map(|c| c.effective_rate_bps).sum()
}

/// Everything about one SVN that the handover chain of any SVN needs.
#[derive(Debug, Clone)]
pub struct HandoverContext {
    pub svn_id: String,
    pub n_channels: usize,
    pub rhos: Vec<f64>,
    pub pu_counts: CountDistribution,
    /// Mean number of busy channels.
    pub mean_pu: f64,
    /// Offered SU load.
    pub su_mean: f64,
    pub demand_bps: f64,
    pub requested_bps: f64,
    pub chsu: f64,
    pub mean_channel_rate_bps: f64,
    pub collision: f64,
    pub blocking: f64,
    pub effective_rates: Vec<f64>,
}

impl HandoverContext {
    /// Evaluates collision and blocking for `request` on `channel_set`.
    ///
    /// `imposed_blocking` replaces the analytic blocking probability in every
    /// downstream quantity. An empty set blocks every SU.
    pub fn new(
        request: &SvnRequest,
        channel_set: &[ChannelProfile],
        imposed_blocking: Option<f64>,
    ) -> Self {
        Self::with_chsu(request, channel_set, None, imposed_blocking)
    }

    /// Like [`HandoverContext::new`] but with the channels-per-SU figure pinned.
    pub fn with_chsu(
        request: &SvnRequest,
        channel_set: &[ChannelProfile],
        chsu: Option<f64>,
        imposed_blocking: Option<f64>,
    ) -> Self {
        let (su_mean, requested_bps) = su_demand(request);
        let rhos = rhos(channel_set);
        let pu_counts = pu_count_distribution(&rhos);
        let effective_rates: Vec<f64> =
            channel_set.iter().map(|c| c.effective_rate_bps).collect();
        let n = channel_set.len();
        let (chsu, mean_rate, collision, blocking) = if n == 0 {
            (chsu.unwrap_or(1.0), 0.0, 0.0, 1.0)
        } else {
            let mean_rate = effective_rates.iter().sum::<f64>() / n as f64;
            let chsu = chsu.unwrap_or_else(|| (request.mean_demand_bps / mean_rate).max(1.0));
            (
                chsu,
                mean_rate,
                collision_from_pmf(&pu_counts, su_mean, chsu),
                blocking_from_pmf(&pu_counts, su_mean, chsu),
            )
        };
        Self {
            svn_id: request.svn_id.clone(),
            n_channels: n,
            mean_pu: n as f64 - rhos.iter().map(|r| 1.0 - r).sum::<f64>(),
            rhos,
            pu_counts,
            su_mean,
            demand_bps: request.mean_demand_bps,
            requested_bps,
            chsu,
            mean_channel_rate_bps: mean_rate,
            collision,
            blocking: imposed_blocking.unwrap_or(blocking),
            effective_rates,
        }
    }

    pub fn admitted(&self) -> f64 {
        (1.0 - self.blocking) * self.su_mean
    }

    /// Channels occupied on average by PUs and admitted SUs.
    pub fn occupied(&self) -> f64 {
        self.mean_pu + self.admitted() * self.chsu
    }

    pub fn joint_utilization(&self) -> f64 {
        if self.n_channels == 0 {
            0.0
        } else {
            self.occupied() / self.n_channels as f64
        }
    }

    pub fn su_utilization(&self) -> f64 {
        if self.n_channels == 0 {
            0.0
        } else {
            self.admitted() * self.chsu / self.n_channels as f64
        }
    }
}

/// Intermediate values of the handover chain for one SVN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandoverOutcome {
    pub admitted: f64,
    pub attempt_prob: f64,
    pub attempts: f64,
    pub spare_channels: f64,
    /// `None` when no other SVN holds a channel.
    pub chsu_star: Option<f64>,
    pub handovers: f64,
    pub handover_prob: f64,
}

/// Free capacity left, on average, in every SVN except `target`.
pub fn spare_channels(target: usize, all: &[HandoverContext]) -> f64 {
    let total: f64 = all
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target)
        .map(|(_, c)| c.n_channels as f64 - c.occupied())
        .sum();
    total.max(0.0)
}

/// Channels per SU that a handed-over user needs, from the pooled effective
/// rate of every channel held by the other SVNs.
pub fn chsu_star(target: usize, all: &[HandoverContext]) -> Option<f64> {
    let (sum, count) = all
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target)
        .flat_map(|(_, c)| c.effective_rates.iter())
        .fold((0.0, 0usize), |(s, k), r| (s + r, k + 1));
    if count == 0 || sum <= 0.0 {
        return None;
    }
    Some((all[target].demand_bps / (sum / count as f64)).max(1.0))
}

/// Attempt and success probabilities of SVN handover for `all[target]`.
///
/// Collisions among admitted users are evaluated with the Poisson mean
/// replaced by the admitted load. Successful handovers are capped by the
/// spare capacity of the other SVNs.
pub fn handover_chain(target: usize, all: &[HandoverContext]) -> HandoverOutcome {
    let ctx = &all[target];
    let admitted = ctx.admitted();
    let attempt_prob = if ctx.n_channels == 0 {
        0.0
    } else {
        collision_from_pmf(&ctx.pu_counts, admitted, ctx.chsu)
    };
    let attempts = attempt_prob * admitted;
    let spare = spare_channels(target, all);
    let star = chsu_star(target, all);
    let (handovers, handover_prob) = match star {
        Some(_) if admitted == 0.0 => (0.0, 0.0),
        Some(s) if attempts * s > spare => {
            let h = spare / s;
            (h, (h / admitted).min(attempt_prob))
        }
        Some(_) => (attempts, attempt_prob),
        None => (0.0, 0.0),
    };
    HandoverOutcome {
        admitted,
        attempt_prob,
        attempts,
        spare_channels: spare,
        chsu_star: star,
        handovers,
        handover_prob,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvnMetrics {
    pub svn_id: String,
    pub n_channels: usize,
    pub collision_prob: f64,
    pub blocking_prob: f64,
    pub joint_utilization: f64,
    pub su_utilization: f64,
    pub handover_attempt_prob: f64,
    pub handover_prob: f64,
    pub channels_per_su: f64,
    pub mean_channel_rate_bps: f64,
    pub mean_pu: f64,
    pub mean_sus: f64,
    pub admitted_sus: f64,
    pub allocated_rate_bps: f64,
    pub requested_rate_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerMetrics {
    pub mean_collision: f64,
    pub mean_blocking: f64,
    pub mean_utilization: f64,
    pub mean_handover_attempt: f64,
    pub mean_handover: f64,
}

pub fn layer_averages(per_svn: &[SvnMetrics]) -> Result<LayerMetrics, MetricsError> {
    if per_svn.is_empty() {
        return Err(MetricsError::EmptySvnList);
    }
    let n = per_svn.len() as f64;
    let avg = |f: fn(&SvnMetrics) -> f64| per_svn.iter().map(f).sum::<f64>() / n;
    Ok(LayerMetrics {
        mean_collision: avg(|m| m.collision_prob),
        mean_blocking: avg(|m| m.blocking_prob),
        mean_utilization: avg(|m| m.joint_utilization),
        mean_handover_attempt: avg(|m| m.handover_attempt_prob),
        mean_handover: avg(|m| m.handover_prob),
    })
}

/// Full metric set for every SVN from already evaluated contexts.
pub fn metrics_from_contexts(contexts: &[HandoverContext]) -> Vec<SvnMetrics> {
    contexts
        .iter()
        .enumerate()
        .map(|(l, c)| {
            let h = handover_chain(l, contexts);
            SvnMetrics {
                svn_id: c.svn_id.clone(),
                n_channels: c.n_channels,
                collision_prob: c.collision,
                blocking_prob: c.blocking,
                joint_utilization: c.joint_utilization(),
                su_utilization: c.su_utilization(),
                handover_attempt_prob: h.attempt_prob,
                handover_prob: h.handover_prob,
                channels_per_su: c.chsu,
                mean_channel_rate_bps: c.mean_channel_rate_bps,
                mean_pu: c.mean_pu,
                mean_sus: c.su_mean,
                admitted_sus: h.admitted,
                allocated_rate_bps: c.effective_rates.iter().sum(),
                requested_rate_bps: c.requested_bps,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingMetrics {
    pub per_svn: Vec<SvnMetrics>,
    pub layer: LayerMetrics,
}

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("channel {channel_id}: {source}")]
    Capacity {
        channel_id: String,
        #[source]
        source: QuadratureError,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum MappingError {
    #[error("mapping references unknown SVN {0:?}")]
    UnknownSvn(String),
    #[error("mapping for SVN {svn:?} references unknown channel {channel:?}")]
    UnknownChannel { svn: String, channel: String },
    #[error("mapping for SVN {svn:?} lists channel {channel:?} twice")]
    DuplicateChannel { svn: String, channel: String },
}

/// Channel indices held by each SVN, in scenario SVN order.
pub type ChannelSets = Vec<Vec<usize>>;

/// A validated scenario together with its channel profiles.
#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Scenario,
    profiles: Vec<ChannelProfile>,
}

impl Environment {
    pub fn new(scenario: Scenario) -> Result<Self, EnvironmentError> {
        let scenario = validate_scenario(scenario)?;
        let profiles = scenario
            .channels
            .iter()
            .map(|c| {
                ChannelProfile::from_channel(c).map_err(|source| EnvironmentError::Capacity {
                    channel_id: c.id.clone(),
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { scenario, profiles })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn profiles(&self) -> &[ChannelProfile] {
        &self.profiles
    }

    pub fn n_channels(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_svns(&self) -> usize {
        self.scenario.svn_requests.len()
    }

    pub fn collision_threshold(&self) -> f64 {
        self.scenario.collision_threshold
    }

    /// Resolves channel ids to indices. SVNs absent from the mapping get an
    /// empty set; overlaps between SVNs are kept, not rejected.
    pub fn resolve(&self, mapping: &Mapping) -> Result<ChannelSets, MappingError> {
        let mut sets = vec![Vec::new(); self.n_svns()];
        for (svn, channels) in &mapping.assignments {
            let l = self
                .scenario
                .svn_index(svn)
                .ok_or_else(|| MappingError::UnknownSvn(svn.clone()))?;
            let mut seen = HashSet::new();
            for ch in channels {
                let i = self.scenario.channel_index(ch).ok_or_else(|| {
                    MappingError::UnknownChannel {
                        svn: svn.clone(),
                        channel: ch.clone(),
                    }
                })?;
                if !seen.insert(i) {
                    return Err(MappingError::DuplicateChannel {
                        svn: svn.clone(),
                        channel: ch.clone(),
                    });
                }
                sets[l].push(i);
            }
        }
        Ok(sets)
    }

    /// Converts index sets back to a mapping file value.
    pub fn to_mapping(&self, sets: &ChannelSets) -> Mapping {
        let assignments = sets
            .iter()
            .zip(&self.scenario.svn_requests)
            .map(|(set, r)| {
                let ids = set
                    .iter()
                    .map(|&i| self.scenario.channels[i].id.clone())
                    .collect();
                (r.svn_id.clone(), ids)
            })
            .collect();
        Mapping { assignments }
    }

    pub fn channel_set(&self, indices: &[usize]) -> Vec<ChannelProfile> {
        indices.iter().map(|&i| self.profiles[i].clone()).collect()
    }

    pub fn contexts(&self, sets: &ChannelSets) -> Vec<HandoverContext> {
        self.scenario
            .svn_requests
            .iter()
            .zip(sets)
            .map(|(r, set)| HandoverContext::new(r, &self.channel_set(set), None))
            .collect()
    }

    pub fn evaluate(&self, sets: &ChannelSets) -> MappingMetrics {
        let per_svn = metrics_from_contexts(&self.contexts(sets));
        let layer = layer_averages(&per_svn).expect("validated scenario has SVNs");
        MappingMetrics { per_svn, layer }
    }

    pub fn evaluate_mapping(&self, mapping: &Mapping) -> Result<MappingMetrics, MappingError> {
        Ok(self.evaluate(&self.resolve(mapping)?))
    }
}
