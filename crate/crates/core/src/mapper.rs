//! Constrained multi-objective SVN-to-channel mapping.
//!
//! Objectives: minimize the mean SVN handover probability and the mean SU
//! blocking probability, maximize the mean joint utilization. Constraints,
//! per SVN: collision probability strictly below the scenario threshold,
//! allocated effective rate at least the requested rate, and no channel
//! shared between SVNs.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::Exec;
use crate::metrics::{ChannelSets, Environment, MappingError, MappingMetrics};
use crate::scenario::Mapping;

/// Absolute tolerance below which objective differences do not count.
pub const DOMINANCE_TOL: f64 = 1e-12;

/// Default cap on `(N+1)^M` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 2_000_000;

/// Default number of neighbour evaluations for the local search.
pub const DEFAULT_MOVE_BUDGET: usize = 10_000;

const ENUMERATION_CHUNK: u64 = 4096;
const NEIGHBOUR_CHUNK: usize = 64;
const RESTART_SEED: u64 = 0x5EED_F5A1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objectives {
    pub mean_handover: f64,
    pub mean_blocking: f64,
    pub mean_utilization: f64,
}

impl Objectives {
    pub fn new(mean_handover: f64, mean_blocking: f64, mean_utilization: f64) -> Self {
        Self {
            mean_handover,
            mean_blocking,
            mean_utilization,
        }
    }

    pub fn from_metrics(m: &MappingMetrics) -> Self {
        Self::new(
            m.layer.mean_handover,
            m.layer.mean_blocking,
            m.layer.mean_utilization,
        )
    }

    /// Lexicographic order: handover, blocking ascending, utilization descending.
    pub fn lexicographic(&self, other: &Self) -> Ordering {
        self.mean_handover
            .total_cmp(&other.mean_handover)
            .then(self.mean_blocking.total_cmp(&other.mean_blocking))
            .then(other.mean_utilization.total_cmp(&self.mean_utilization))
    }

    /// Same objective values up to [`DOMINANCE_TOL`].
    pub fn matches(&self, other: &Self) -> bool {
        (self.mean_handover - other.mean_handover).abs() <= DOMINANCE_TOL
            && (self.mean_blocking - other.mean_blocking).abs() <= DOMINANCE_TOL
            && (self.mean_utilization - other.mean_utilization).abs() <= DOMINANCE_TOL
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    let no_worse = a.mean_handover <= b.mean_handover + DOMINANCE_TOL
        && a.mean_blocking <= b.mean_blocking + DOMINANCE_TOL
        && a.mean_utilization >= b.mean_utilization - DOMINANCE_TOL;
    let better = a.mean_handover < b.mean_handover - DOMINANCE_TOL
        || a.mean_blocking < b.mean_blocking - DOMINANCE_TOL
        || a.mean_utilization > b.mean_utilization + DOMINANCE_TOL;
    no_worse && better
}

/// Scalarization weights `(handover, blocking, utilization)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub handover: f64,
    pub blocking: f64,
    pub utilization: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            handover: 1.0,
            blocking: 1.0,
            utilization: 1.0,
        }
    }
}

impl Weights {
    pub fn new(handover: f64, blocking: f64, utilization: f64) -> Self {
        Self {
            handover,
            blocking,
            utilization,
        }
    }

    fn validate(&self) -> Result<(), MapperError> {
        let w = [self.handover, self.blocking, self.utilization];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().all(|&x| x == 0.0) {
            return Err(MapperError::InvalidWeights(*self));
        }
        Ok(())
    }

    /// `w_h·handover + w_b·blocking − w_u·utilization` (lower is better).
    pub fn scalarize(&self, o: &Objectives) -> f64 {
        self.handover * o.mean_handover + self.blocking * o.mean_blocking
            - self.utilization * o.mean_utilization
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MapperError {
    #[error("exhaustive search needs {required} assignments, budget is {budget}; use the heuristic mapper")]
    BudgetExceeded { required: String, budget: u128 },
    #[error("weights must be nonnegative and not all zero (got {0:?})")]
    InvalidWeights(Weights),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Collision,
    Capacity,
    Disjointness,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::Collision => "collision",
            Constraint::Capacity => "capacity",
            Constraint::Disjointness => "disjointness",
        })
    }
}

/// One violated constraint. `margin` is negative or zero for violations
/// (threshold minus collision, allocated minus requested rate, or minus the
/// number of shared channels).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub svn_id: String,
    pub constraint: Constraint,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvnConstraints {
    pub svn_id: String,
    /// `threshold − Pc`; must be strictly positive.
    pub collision_margin: f64,
    /// `Ralloc − requested`; must be nonnegative.
    pub capacity_margin: f64,
}

impl SvnConstraints {
    pub fn collision_ok(&self) -> bool {
        self.collision_margin > 0.0
    }

    pub fn capacity_ok(&self) -> bool {
        self.capacity_margin >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub per_svn: Vec<SvnConstraints>,
    /// Channels claimed by more than one SVN, with the claimants.
    pub shared_channels: Vec<(String, Vec<String>)>,
}

impl ConstraintReport {
    pub fn feasible(&self) -> bool {
        self.shared_channels.is_empty()
            && self.per_svn.iter().all(|s| s.collision_ok() && s.capacity_ok())
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for s in &self.per_svn {
            if !s.collision_ok() {
                out.push(Violation {
                    svn_id: s.svn_id.clone(),
                    constraint: Constraint::Collision,
                    margin: s.collision_margin,
                });
            }
            if !s.capacity_ok() {
                out.push(Violation {
                    svn_id: s.svn_id.clone(),
                    constraint: Constraint::Capacity,
                    margin: s.capacity_margin,
                });
            }
        }
        for (_, svns) in &self.shared_channels {
            for svn in svns {
                out.push(Violation {
                    svn_id: svn.clone(),
                    constraint: Constraint::Disjointness,
                    margin: -1.0,
                });
            }
        }
        out
    }

    /// Number of failed constraints plus their normalized shortfall; zero
    /// exactly when feasible.
    fn infeasibility(&self, metrics: &MappingMetrics) -> f64 {
        let mut v = self.shared_channels.len() as f64;
        for (s, m) in self.per_svn.iter().zip(&metrics.per_svn) {
            if !s.collision_ok() {
                v += 1.0 - s.collision_margin;
            }
            if !s.capacity_ok() {
                v += 1.0 - s.capacity_margin / m.requested_rate_bps;
            }
        }
        v
    }
}

fn report_from_metrics(
    env: &Environment,
    sets: &ChannelSets,
    metrics: &MappingMetrics,
) -> ConstraintReport {
    let thr = env.collision_threshold();
    let per_svn = metrics
        .per_svn
        .iter()
        .map(|m| SvnConstraints {
            svn_id: m.svn_id.clone(),
            collision_margin: thr - m.collision_prob,
            capacity_margin: m.allocated_rate_bps - m.requested_rate_bps,
        })
        .collect();
    let mut claims: Vec<Vec<usize>> = vec![Vec::new(); env.n_channels()];
    for (l, set) in sets.iter().enumerate() {
        for &c in set {
            claims[c].push(l);
        }
    }
    let scenario = env.scenario();
    let shared_channels = claims
        .iter()
        .enumerate()
        .filter(|(_, owners)| owners.len() > 1)
        .map(|(c, owners)| {
            (
                scenario.channels[c].id.clone(),
                owners
                    .iter()
                    .map(|&l| scenario.svn_requests[l].svn_id.clone())
                    .collect(),
            )
        })
        .collect();
    ConstraintReport {
        per_svn,
        shared_channels,
    }
}

/// Evaluates every constraint for the given channel sets.
pub fn check_constraints(env: &Environment, sets: &ChannelSets) -> ConstraintReport {
    report_from_metrics(env, sets, &env.evaluate(sets))
}

pub fn check_mapping(env: &Environment, mapping: &Mapping) -> Result<ConstraintReport, MappingError> {
    Ok(check_constraints(env, &env.resolve(mapping)?))
}

/// A fully evaluated mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution {
    pub mapping: Mapping,
    pub sets: ChannelSets,
    pub metrics: MappingMetrics,
    pub objectives: Objectives,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Owner of each channel: `None` or an SVN index.
type Owners = Vec<Option<usize>>;

fn sets_from_owners(owners: &[Option<usize>], n_svns: usize) -> ChannelSets {
    let mut sets = vec![Vec::new(); n_svns];
    for (c, o) in owners.iter().enumerate() {
        if let Some(l) = o {
            sets[*l].push(c);
        }
    }
    sets
}

struct Scored {
    owners: Owners,
    objectives: Objectives,
    infeasibility: f64,
}

fn score(env: &Environment, owners: Owners) -> Scored {
    let sets = sets_from_owners(&owners, env.n_svns());
    let metrics = env.evaluate(&sets);
    let report = report_from_metrics(env, &sets, &metrics);
    Scored {
        objectives: Objectives::from_metrics(&metrics),
        infeasibility: report.infeasibility(&metrics),
        owners,
    }
}

fn solution_from_sets(env: &Environment, sets: ChannelSets) -> CandidateSolution {
    let metrics = env.evaluate(&sets);
    let report = report_from_metrics(env, &sets, &metrics);
    CandidateSolution {
        mapping: env.to_mapping(&sets),
        objectives: Objectives::from_metrics(&metrics),
        feasible: report.feasible(),
        violations: report.violations(),
        metrics,
        sets,
    }
}

/// Feasible, mutually non-dominated solutions in lexicographic objective order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoFront {
    pub members: Vec<CandidateSolution>,
}

impl ParetoFront {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

/// Incremental non-dominated filter.
fn insert_nondominated<T>(front: &mut Vec<(T, Objectives)>, item: T, obj: Objectives) {
    if front.iter().any(|(_, o)| dominates(o, &obj)) {
        return;
    }
    front.retain(|(_, o)| !dominates(&obj, o));
    front.push((item, obj));
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub budget: u128,
    pub exec: Exec,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_ENUMERATION_BUDGET,
            exec: Exec::default(),
        }
    }
}

fn decode(mut index: u64, base: u64, m: usize) -> Owners {
    (0..m)
        .map(|_| {
            let d = index % base;
            index /= base;
            d.checked_sub(1).map(|l| l as usize)
        })
        .collect()
}

/// Exact Pareto front by enumerating every assignment of each channel to
/// "unassigned" or one of the SVNs.
pub fn enumerate_pareto(env: &Environment, opts: &EnumerateOptions) -> Result<ParetoFront, MapperError> {
    let m = env.n_channels();
    let base = env.n_svns() as u64 + 1;
    let total = (base as u128).checked_pow(m as u32);
    let total = match total {
        Some(t) if t <= opts.budget => t as u64,
        _ => {
            return Err(MapperError::BudgetExceeded {
                required: total.map_or_else(|| format!("{base}^{m}"), |t| t.to_string()),
                budget: opts.budget,
            })
        }
    };

    let chunks = total.div_ceil(ENUMERATION_CHUNK) as usize;
    let local = opts.exec.map_range(chunks, |c| {
        let start = c as u64 * ENUMERATION_CHUNK;
        let end = (start + ENUMERATION_CHUNK).min(total);
        let mut front = Vec::new();
        for index in start..end {
            let s = score(env, decode(index, base, m));
            if s.infeasibility == 0.0 {
                insert_nondominated(&mut front, index, s.objectives);
            }
        }
        front
    });
    let mut front = Vec::new();
    for chunk in local {
        for (index, obj) in chunk {
            insert_nondominated(&mut front, index, obj);
        }
    }
    front.sort_by(|a, b| a.1.lexicographic(&b.1).then(a.0.cmp(&b.0)));

    let members = front
        .into_iter()
        .map(|(index, _)| {
            let sets = sets_from_owners(&decode(index, base, m), env.n_svns());
            solution_from_sets(env, sets)
        })
        .collect();
    Ok(ParetoFront { members })
}

#[derive(Debug, Clone, Copy)]
pub struct HeuristicOptions {
    pub weights: Weights,
    pub move_budget: usize,
    pub exec: Exec,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            move_budget: DEFAULT_MOVE_BUDGET,
            exec: Exec::default(),
        }
    }
}

/// Greedy starting point: channels by decreasing effective rate, handed out
/// round-robin to the SVNs whose requested rate is not yet covered.
pub fn greedy_assignment(env: &Environment) -> ChannelSets {
    let profiles = env.profiles();
    let n = env.n_svns();
    let requested: Vec<f64> = env
        .scenario()
        .svn_requests
        .iter()
        .map(|r| crate::metrics::su_demand(r).1)
        .collect();
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| {
        profiles[b]
            .effective_rate_bps
            .total_cmp(&profiles[a].effective_rate_bps)
            .then(a.cmp(&b))
    });
    let mut allocated = vec![0.0; n];
    let mut sets = vec![Vec::new(); n];
    let mut next = 0;
    for c in order {
        let Some(l) = (0..n)
            .map(|k| (next + k) % n)
            .find(|&l| allocated[l] < requested[l])
        else {
            break;
        };
        sets[l].push(c);
        allocated[l] += profiles[c].effective_rate_bps;
        next = l + 1;
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    sets
}

fn neighbours(owners: &[Option<usize>], n_svns: usize) -> Vec<Owners> {
    let m = owners.len();
    let mut out = Vec::new();
    for c in 0..m {
        for target in std::iter::once(None).chain((0..n_svns).map(Some)) {
            if target != owners[c] {
                let mut next = owners.to_vec();
                next[c] = target;
                out.push(next);
            }
        }
    }
    for a in 0..m {
        for b in a + 1..m {
            if owners[a] != owners[b] {
                let mut next = owners.to_vec();
                next.swap(a, b);
                out.push(next);
            }
        }
    }
    out
}

/// Local search from `current` until no neighbour is accepted or the budget
/// runs out.
fn descend(env: &Environment, mut current: Scored, budget: &mut usize, opts: &HeuristicOptions) -> Scored {
    let n = env.n_svns();
    let w = opts.weights;
    'search: while *budget > 0 {
        let cur_f = w.scalarize(&current.objectives);
        let accept = |s: &Scored| -> bool {
            if current.infeasibility > 0.0 {
                s.infeasibility < current.infeasibility - DOMINANCE_TOL
            } else if s.infeasibility > 0.0 {
                false
            } else {
                let f = w.scalarize(&s.objectives);
                f < cur_f - DOMINANCE_TOL
                    || (f <= cur_f && dominates(&s.objectives, &current.objectives))
            }
        };
        let candidates = neighbours(&current.owners, n);
        for chunk in candidates.chunks(NEIGHBOUR_CHUNK) {
            let chunk = &chunk[..chunk.len().min(*budget)];
            let scored = opts.exec.map_slice(chunk, |o| score(env, o.clone()));
            match scored.iter().position(&accept) {
                Some(i) => {
                    *budget -= i + 1;
                    current = scored.into_iter().nth(i).expect("index in range");
                    continue 'search;
                }
                None => {
                    *budget -= chunk.len();
                    if *budget == 0 {
                        break 'search;
                    }
                }
            }
        }
        break;
    }
    current
}

/// Feasible beats infeasible; among feasible points the weighted score (then
/// dominance) decides, among infeasible ones the shortfall.
fn improves(a: &Scored, b: &Scored, w: &Weights) -> bool {
    match (a.infeasibility == 0.0, b.infeasibility == 0.0) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.infeasibility < b.infeasibility - DOMINANCE_TOL,
        (true, true) => {
            let (fa, fb) = (w.scalarize(&a.objectives), w.scalarize(&b.objectives));
            fa < fb - DOMINANCE_TOL || (fa <= fb && dominates(&a.objectives, &b.objectives))
        }
    }
}

/// Greedy construction followed by first-improvement local search over
/// single-channel moves and pairwise swaps, then seeded random restarts
/// while the budget lasts.
///
/// An infeasible point is first repaired by minimizing the constraint
/// shortfall. The move budget counts neighbour evaluations and restart
/// points. If no feasible point is reached the least infeasible one is
/// returned, flagged.
pub fn heuristic_map(env: &Environment, opts: &HeuristicOptions) -> Result<CandidateSolution, MapperError> {
    opts.weights.validate()?;
    let n = env.n_svns();
    let m = env.n_channels();
    let mut owners: Owners = vec![None; m];
    for (l, set) in greedy_assignment(env).iter().enumerate() {
        for &c in set {
            owners[c] = Some(l);
        }
    }
    let mut budget = opts.move_budget;
    let mut best = descend(env, score(env, owners), &mut budget, opts);
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    while budget > 0 {
        budget -= 1;
        let owners: Owners = (0..m)
            .map(|_| {
                let k = rng.random_range(0..=n);
                (k < n).then_some(k)
            })
            .collect();
        let local = descend(env, score(env, owners), &mut budget, opts);
        if improves(&local, &best, &opts.weights) {
            best = local;
        }
    }
    Ok(solution_from_sets(env, sets_from_owners(&best.owners, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Channel, PvnShare, Scenario, SvnRequest};

    fn env(rhos: &[f64], requests: &[(f64, f64)], thr: f64) -> Environment {
        Environment::new(Scenario {
            channels: rhos
                .iter()
                .enumerate()
                .map(|(i, &r)| Channel::with_utilization(format!("c{i}"), 1e6, r, 1.0, 10.0))
                .collect(),
            pvn_shares: vec![PvnShare {
                pvn_id: "p".into(),
                share: 1.0,
            }],
            svn_requests: requests
                .iter()
                .enumerate()
                .map(|(l, &(su, demand))| SvnRequest::new(format!("s{l}"), su, 1.0, demand))
                .collect(),
            collision_threshold: thr,
        })
        .unwrap()
    }

    #[test]
    fn dominance_examples() {
        let a = Objectives::new(0.1, 0.1, 0.9);
        let b = Objectives::new(0.2, 0.2, 0.8);
        assert!(dominates(&a, &b));
        assert!(!dominates(&b, &a));
        assert!(!dominates(&a, &a));
        assert!(!dominates(&Objectives::new(0.1, 0.3, 0.9), &b));
        assert!(!dominates(&Objectives::new(0.1, 0.1 + 1e-13, 0.9), &a));
    }

    #[test]
    fn constraint_examples() {
        let e = env(&[0.0, 0.0, 0.0], &[(0.5, 5e5), (0.5, 5e5)], 0.1);
        let r = check_constraints(&e, &vec![vec![0], vec![]]);
        assert!(!r.feasible());
        assert!(r
            .violations()
            .iter()
            .any(|v| v.svn_id == "s1" && v.constraint == Constraint::Capacity));

        let r = check_constraints(&e, &vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(r.shared_channels, vec![("c1".to_string(), vec!["s0".into(), "s1".into()])]);
        assert!(!r.feasible());

        let r = check_constraints(&e, &vec![vec![0], vec![1, 2]]);
        assert!(r.feasible());
        assert!(r.per_svn.iter().all(|s| s.collision_margin > 0.0 && s.capacity_margin > 0.0));
    }

    #[test]
    fn single_channel_single_svn_front() {
        let e = env(&[0.2], &[(0.5, 5e5)], 0.5);
        let front = enumerate_pareto(&e, &EnumerateOptions::default()).unwrap();
        assert_eq!(front.len(), 1);
        assert_eq!(front.members[0].sets, vec![vec![0]]);
        assert!(front.members[0].feasible);
    }

    #[test]
    fn zero_threshold_has_empty_front() {
        let e = env(&[0.0, 0.3], &[(0.5, 5e5)], 0.0);
        assert!(enumerate_pareto(&e, &EnumerateOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let e = env(&[0.1; 6], &[(0.5, 5e5), (0.5, 5e5)], 0.5);
        let opts = EnumerateOptions {
            budget: 700,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_pareto(&e, &opts),
            Err(MapperError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn front_is_identical_under_both_strategies() {
        let e = env(&[0.1, 0.5, 0.3, 0.7, 0.2], &[(0.8, 6e5), (0.4, 1e6)], 0.4);
        let seq = enumerate_pareto(&e, &EnumerateOptions { exec: Exec::Sequential, ..Default::default() });
        let par = enumerate_pareto(&e, &EnumerateOptions { exec: Exec::Parallel, ..Default::default() });
        assert_eq!(seq, par);
    }

    #[test]
    fn insufficient_capacity_is_flagged() {
        let e = env(&[0.5, 0.5], &[(5.0, 5e6)], 0.9);
        let sol = heuristic_map(&e, &HeuristicOptions::default()).unwrap();
        assert!(!sol.feasible);
        assert!(sol.violations.iter().any(|v| v.constraint == Constraint::Capacity));
    }

    #[test]
    fn ample_single_svn_is_feasible() {
        let e = env(&[0.1, 0.2, 0.1, 0.3, 0.2], &[(0.5, 5e5)], 0.2);
        let sol = heuristic_map(&e, &HeuristicOptions::default()).unwrap();
        assert!(sol.feasible);
        assert!(sol.metrics.per_svn[0].collision_prob < 0.2);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let e = env(&[0.1], &[(0.5, 5e5)], 0.2);
        for w in [Weights::new(0.0, 0.0, 0.0), Weights::new(-1.0, 1.0, 1.0)] {
            let opts = HeuristicOptions { weights: w, ..Default::default() };
            assert!(matches!(heuristic_map(&e, &opts), Err(MapperError::InvalidWeights(_))));
        }
    }

    #[test]
    fn greedy_covers_demand_round_robin() {
        let e = env(&[0.0, 0.1, 0.2, 0.3, 0.9], &[(1.0, 2e6), (1.0, 2e6)], 0.5);
        let sets = greedy_assignment(&e);
        // highest rates alternate between the two SVNs
        assert_eq!(sets[0][0], 0);
        assert_eq!(sets[1][0], 1);
        let m = e.evaluate(&sets);
        assert!(m.per_svn.iter().all(|s| s.allocated_rate_bps >= s.requested_rate_bps));
    }
}
