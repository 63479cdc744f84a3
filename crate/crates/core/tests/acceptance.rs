//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances and seeds are fixed below.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svnmap::channel_model::mean_capacity;
use svnmap::mapper::{
    check_constraints, dominates, enumerate_pareto, heuristic_map, EnumerateOptions,
    HeuristicOptions,
};
use svnmap::metrics::{blocking_probability, channels_per_su, collision_probability};
use svnmap::occupancy::{expected_idle_channels, idle_count_distribution, pu_count_distribution};
use svnmap::oracle::{
    bernoulli_sigma, brute_force_count_distribution, collision_one_channel_per_user,
    sample_mean_capacity, sample_metrics, simulate_channel_occupancy, CountKind, OracleConfig,
};
use svnmap::sweep::{run_sweep, Preset, SweepRow, SweepSpec};
use svnmap::{Channel, Exec};

const PMF_TOL: f64 = 1e-12;
const REDUCTION_TOL: f64 = 1e-12;
const IDLE_MEAN_TOL: f64 = 1e-10;
/// Slack allowed in monotonicity comparisons (floating-point noise only).
const MONO_TOL: f64 = 1e-12;
/// Tolerance on the utilization limits as utilization tends to one.
const LIMIT_TOL: f64 = 1e-6;
const LIMIT_RHO: f64 = 1.0 - 1e-9;
/// Channel counts at and above this are the large-n regime.
const LARGE_N: f64 = 14.0;
const SIGMAS: f64 = 3.0;
const ORACLE_SAMPLES: u64 = 1_000_000;
const CAPACITY_SAMPLES: u64 = 10_000_000;
const CTMC_HORIZON_S: f64 = 1e5;
const CTMC_BATCHES: usize = 100;
const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_time(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn nondecreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0] - MONO_TOL)
}

fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + MONO_TOL)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn column(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

fn poisson_binomial_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let rhos: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let pairs = [
            (pu_count_distribution(&rhos), CountKind::Busy),
            (idle_count_distribution(&rhos), CountKind::Idle),
        ];
        for (dp, kind) in pairs {
            let bf = brute_force_count_distribution(&rhos, kind).unwrap();
            for k in 0..=n {
                worst = worst.max((dp.prob(k) - bf.prob(k)).abs());
            }
        }
    }
    let (fast, time) = within_time(start, Duration::from_secs(10));
    outcome(worst <= PMF_TOL && fast, format!("max abs diff {worst:.3e}, {time}"))
}

fn oracle_agreement() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let scenarios = 24;
    let mut bad = Vec::new();
    let mut worst_z = 0.0f64;
    for s in 0..scenarios {
        let n = rng.random_range(1..=6);
        let set = common::random_profiles(&mut rng, n);
        let su_mean = rng.random_range(0.2..3.0);
        let chsu = channels_per_su(rng.random_range(1e5..4e6), &set).unwrap();
        let pc = collision_probability(&set, su_mean, chsu).unwrap();
        let pb = blocking_probability(&set, su_mean, chsu).unwrap();
        let cfg = OracleConfig::new(ORACLE_SAMPLES, SEED + s);
        let est = sample_metrics(&set, su_mean, chsu, &cfg);
        for (name, analytic, e) in [("collision", pc, est.collision), ("blocking", pb, est.blocking)] {
            let sigma = e.std_error.max(bernoulli_sigma(analytic, ORACLE_SAMPLES));
            if sigma > 0.0 {
                worst_z = worst_z.max((analytic - e.value).abs() / sigma);
            }
            if !e.agrees_with(analytic, SIGMAS, bernoulli_sigma(analytic, ORACLE_SAMPLES)) {
                bad.push(format!("scenario {s} {name}: {analytic} vs {}", e.value));
            }
        }
    }
    let (fast, time) = within_time(start, Duration::from_secs(60));
    outcome(
        bad.is_empty() && fast,
        format!(
            "{scenarios} scenarios, worst |z| {worst_z:.2}, {} outside window{}, {time}",
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(" ({})", bad.join("; ")) }
        ),
    )
}

fn reduction_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let set = common::random_profiles(&mut rng, n);
        let rhos: Vec<f64> = set.iter().map(|c| c.rho).collect();
        let su_mean = rng.random_range(0.0..8.0);
        let analytic = collision_probability(&set, su_mean, 1.0).unwrap();
        let direct = collision_one_channel_per_user(&rhos, su_mean).unwrap();
        worst = worst.max((analytic - direct).abs());
    }
    outcome(worst <= REDUCTION_TOL, format!("max abs diff {worst:.3e} over 200 inputs"))
}

fn utilization_trend() -> Outcome {
    let spec = SweepSpec::preset(Preset::Fig2).unwrap();
    let rows = run_sweep(&spec, Exec::default()).unwrap().rows;
    let pc = column(&rows, |r| r.metrics.collision_prob);
    let pb = column(&rows, |r| r.metrics.blocking_prob);
    let su = column(&rows, |r| r.metrics.su_utilization);
    let peak = su
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();

    let mut limit_spec = spec.clone();
    limit_spec.start = spec.stop;
    limit_spec.stop = LIMIT_RHO;
    limit_spec.steps = 2;
    let limit = run_sweep(&limit_spec, Exec::Sequential).unwrap().rows.pop().unwrap().metrics;

    let checks = [
        ("collision nondecreasing", nondecreasing(&pc)),
        ("blocking nondecreasing", nondecreasing(&pb)),
        (
            "utilization -> 1",
            (limit.joint_utilization - 1.0).abs() <= LIMIT_TOL,
        ),
        ("su utilization nonincreasing past peak", nonincreasing(&su[peak..])),
        ("su utilization -> 0", limit.su_utilization.abs() <= LIMIT_TOL),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        format!(
            "at rho={LIMIT_RHO}: utilization {:.6}, su utilization {:.6}, blocking {:.6}; failed: [{}]",
            limit.joint_utilization,
            limit.su_utilization,
            limit.blocking_prob,
            failed.join(", ")
        ),
    )
}

fn channel_count_trend() -> Outcome {
    let spec = SweepSpec::preset(Preset::Fig3).unwrap();
    let rows = run_sweep(&spec, Exec::default()).unwrap().rows;
    let large: Vec<SweepRow> = rows.iter().filter(|r| r.value >= LARGE_N).cloned().collect();
    let checks = [
        ("collision nonincreasing", nonincreasing(&column(&rows, |r| r.metrics.collision_prob))),
        ("blocking nonincreasing", nonincreasing(&column(&rows, |r| r.metrics.blocking_prob))),
        (
            "utilization strictly decreasing for large n",
            strictly_decreasing(&column(&large, |r| r.metrics.joint_utilization)),
        ),
        (
            "handover attempt nonincreasing for large n",
            nonincreasing(&column(&large, |r| r.metrics.handover_attempt_prob)),
        ),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        format!("n = 2..20, large n >= {LARGE_N}; failed: [{}]", failed.join(", ")),
    )
}

fn blocking_trend() -> Outcome {
    let spec = SweepSpec::preset(Preset::Fig4).unwrap();
    let rows = run_sweep(&spec, Exec::default()).unwrap().rows;
    let attempt = column(&rows, |r| r.metrics.handover_attempt_prob);
    let util = column(&rows, |r| r.metrics.joint_utilization);
    let last = rows.last().unwrap();
    let min_at_end = |xs: &[f64]| xs.iter().all(|&x| x >= xs[xs.len() - 1]);
    let checks = [
        ("attempt nonincreasing", nonincreasing(&attempt)),
        ("utilization nonincreasing", nonincreasing(&util)),
        ("minima at Pb=1", last.value == 1.0 && min_at_end(&attempt) && min_at_end(&util)),
        ("attempt 0 at Pb=1", last.metrics.handover_attempt_prob == 0.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        format!(
            "attempt {:.4}..{}, utilization {:.4}..{:.4}; failed: [{}]",
            attempt[0],
            attempt[attempt.len() - 1],
            util[0],
            util[util.len() - 1],
            failed.join(", ")
        ),
    )
}

fn solver_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut instances = 0;
    let mut attempts = 0;
    let mut problems = Vec::new();
    while instances < 20 && attempts < 1000 {
        attempts += 1;
        let m = rng.random_range(2..=8);
        let n = rng.random_range(1..=2);
        let env = common::random_env(&mut rng, m, n);
        let front = enumerate_pareto(&env, &EnumerateOptions::default()).unwrap();
        if front.is_empty() {
            continue;
        }
        instances += 1;
        for member in &front.members {
            if !check_constraints(&env, &member.sets).feasible() {
                problems.push(format!("instance {instances}: front member infeasible"));
            }
        }
        let h = heuristic_map(&env, &HeuristicOptions::default()).unwrap();
        if !h.feasible {
            problems.push(format!("instance {instances} (M={m}, N={n}): heuristic infeasible"));
            continue;
        }
        let beaten = front
            .members
            .iter()
            .any(|f| !f.objectives.matches(&h.objectives) && dominates(&f.objectives, &h.objectives));
        if beaten {
            problems.push(format!("instance {instances} (M={m}, N={n}): heuristic dominated"));
        }
    }
    let (fast, time) = within_time(start, Duration::from_secs(120));
    outcome(
        problems.is_empty() && instances == 20 && fast,
        format!(
            "{instances} instances ({attempts} drawn), {}{time}",
            if problems.is_empty() { String::new() } else { format!("{}; ", problems.join("; ")) }
        ),
    )
}

fn structural_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut problems = Vec::new();
    let mut evaluated = 0;
    for case in 0..300 {
        let m = rng.random_range(1..=8);
        let n = if case % 4 == 0 { 1 } else { rng.random_range(1..=3) };
        let env = common::random_env(&mut rng, m, n);
        let sets = common::random_sets(&mut rng, m, n);
        let metrics = env.evaluate(&sets);
        for s in &metrics.per_svn {
            evaluated += 1;
            if s.blocking_prob < s.collision_prob {
                problems.push(format!("case {case}: Pb < Pc"));
            }
            if s.handover_prob > s.handover_attempt_prob {
                problems.push(format!("case {case}: handover above attempt"));
            }
            if n == 1 && s.handover_prob != 0.0 {
                problems.push(format!("case {case}: single SVN hands over"));
            }
        }
        let rhos: Vec<f64> = env.profiles().iter().map(|p| p.rho).collect();
        let direct: f64 = rhos.iter().map(|r| 1.0 - r).sum();
        if (expected_idle_channels(&rhos) - direct).abs() > IDLE_MEAN_TOL {
            problems.push(format!("case {case}: idle mean"));
        }
        let l = &metrics.layer;
        let per = &metrics.per_svn;
        let bounded = |avg: f64, f: &dyn Fn(&svnmap::SvnMetrics) -> f64| {
            let lo = per.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = per.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            avg >= lo - MONO_TOL && avg <= hi + MONO_TOL
        };
        let ok = bounded(l.mean_collision, &|s| s.collision_prob)
            && bounded(l.mean_blocking, &|s| s.blocking_prob)
            && bounded(l.mean_utilization, &|s| s.joint_utilization)
            && bounded(l.mean_handover_attempt, &|s| s.handover_attempt_prob)
            && bounded(l.mean_handover, &|s| s.handover_prob);
        if !ok {
            problems.push(format!("case {case}: layer average outside per-SVN range"));
        }
    }
    outcome(
        problems.is_empty(),
        format!("300 mappings, {evaluated} SVN evaluations, {} violations {:?}", problems.len(), problems),
    )
}

fn capacity_quadrature() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, snr) in [1.0, 5.0, 10.0, 20.0].into_iter().enumerate() {
        let ch = Channel::with_utilization("q", 1e6, 0.5, 1.0, snr);
        let analytic = mean_capacity(&ch).unwrap();
        let est = sample_mean_capacity(&ch, &OracleConfig::new(CAPACITY_SAMPLES, SEED + 10 + k as u64));
        let z = (analytic - est.value) / est.std_error;
        pass &= est.agrees_with(analytic, SIGMAS, 0.0);
        let doubled = Channel::with_utilization("q", 2e6, 0.5, 1.0, snr);
        let exact = mean_capacity(&doubled).unwrap() == 2.0 * analytic;
        pass &= exact;
        parts.push(format!("{snr} dB z={z:.2}{}", if exact { "" } else { " (doubling inexact)" }));
    }
    outcome(pass, parts.join(", "))
}

fn ctmc_occupancy() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for rho in [0.1, 0.5, 0.9] {
        let ch = Channel::with_utilization("t", 1e6, rho, 1.0, 10.0);
        let est = simulate_channel_occupancy(&ch, CTMC_HORIZON_S, SEED, CTMC_BATCHES);
        pass &= est.agrees_with(rho, SIGMAS, 0.0);
        parts.push(format!("rho={rho} busy={:.5} z={:.2}", est.value, (est.value - rho) / est.std_error));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("poisson-binomial equivalence", poisson_binomial_equivalence),
        ("oracle agreement", oracle_agreement),
        ("reduction identity", reduction_identity),
        ("utilization trend", utilization_trend),
        ("channel count trend", channel_count_trend),
        ("blocking trend", blocking_trend),
        ("solver correctness", solver_correctness),
        ("structural invariants", structural_invariants),
        ("capacity quadrature", capacity_quadrature),
        ("ctmc occupancy", ctmc_occupancy),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
