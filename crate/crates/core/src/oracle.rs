//! Independent validators for the analytic model.
//!
//! * a count sampler that draws channel busy indicators and SU counts
//!   directly and records the collision and blocking events;
//! * a literal subset enumerator for the busy/idle count laws;
//! * a continuous-time two-state channel simulator for the stationary
//!   occupancy abstraction;
//! * a Monte Carlo estimate of the mean channel capacity.
//!
//! Nothing here calls into the analytic modules' formulas. Every random
//! stream is derived from `(seed, domain, block index)`, so results do not
//! depend on how blocks are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use thiserror::Error;

use crate::channel_model::ChannelProfile;
use crate::exec::Exec;
use crate::metrics::HandoverContext;
use crate::occupancy::CountDistribution;
use crate::scenario::Channel;

/// Largest set the subset enumerator accepts.
pub const MAX_BRUTE_FORCE_CHANNELS: usize = 20;

/// Samples per independently seeded block.
pub const BLOCK_SAMPLES: u64 = 1 << 14;

const DOMAIN_COUNTS: u64 = 1;
const DOMAIN_HANDOVER: u64 = 2;
const DOMAIN_CAPACITY: u64 = 3;
const DOMAIN_CTMC: u64 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("subset enumeration limited to {max} channels (got {n})")]
    TooManyChannels { n: usize, max: usize },
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl OracleEstimate {
    fn from_moments(m: Moments, seed: u64) -> Self {
        let n = m.count as f64;
        let mean = m.sum / n;
        let var = if m.count > 1 {
            ((m.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
            samples: m.count,
            seed,
        }
    }

    fn exact(value: f64, samples: u64, seed: u64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples,
            seed,
        }
    }

    /// `|analytic − value| ≤ k · max(std_error, min_sigma)`.
    pub fn agrees_with(&self, analytic: f64, k: f64, min_sigma: f64) -> bool {
        (analytic - self.value).abs() <= k * self.std_error.max(min_sigma)
    }
}

/// Standard deviation of a mean of `samples` Bernoulli(`p`) indicators.
pub fn bernoulli_sigma(p: f64, samples: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / samples as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    count: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.count += 1;
    }

    fn merge(&mut self, o: &Moments) {
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.count += o.count;
    }
}

/// Sampling budget and reproducibility settings.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub samples: u64,
    pub seed: u64,
    pub exec: Exec,
}

impl OracleConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples: samples.max(1),
            seed,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

fn block_rng(seed: u64, domain: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 56) | block);
    rng
}

/// Runs `draw` once per sample over independently seeded blocks and
/// accumulates the moments of each of its `K` outputs.
fn run_blocks<const K: usize, F>(cfg: &OracleConfig, domain: u64, draw: F) -> [Moments; K]
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync + Send,
{
    let blocks = cfg.samples.div_ceil(BLOCK_SAMPLES) as usize;
    let partial = cfg.exec.map_range(blocks, |b| {
        let start = b as u64 * BLOCK_SAMPLES;
        let len = BLOCK_SAMPLES.min(cfg.samples - start);
        let mut rng = block_rng(cfg.seed, domain, b as u64);
        let mut m = [Moments::default(); K];
        for _ in 0..len {
            let x = draw(&mut rng);
            for k in 0..K {
                m[k].push(x[k]);
            }
        }
        m
    });
    let mut total = [Moments::default(); K];
    for m in &partial {
        for k in 0..K {
            total[k].merge(&m[k]);
        }
    }
    total
}

fn poisson(mean: f64) -> Option<Poisson<f64>> {
    (mean > 0.0).then(|| Poisson::new(mean).expect("positive finite mean"))
}

/// One draw of (busy channel count, SU count).
fn draw_counts<R: Rng>(rng: &mut R, rhos: &[f64], su: Option<&Poisson<f64>>) -> (usize, u64) {
    let busy = rhos.iter().filter(|&&r| rng.random::<f64>() < r).count();
    let nsu = su.map_or(0, |p| p.sample(rng) as u64);
    (busy, nsu)
}

fn overflows(n: usize, busy: usize, nsu: u64, chsu: f64) -> bool {
    let slots = ((n - busy) as f64 / chsu).floor();
    nsu as f64 > slots
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountEstimates {
    pub collision: OracleEstimate,
    pub blocking: OracleEstimate,
}

/// Estimates collision and blocking probabilities by sampling the busy
/// indicators and the Poisson SU count.
pub fn sample_metrics(
    channel_set: &[ChannelProfile],
    su_mean: f64,
    chsu: f64,
    cfg: &OracleConfig,
) -> CountEstimates {
    let rhos: Vec<f64> = channel_set.iter().map(|c| c.rho).collect();
    let n = rhos.len();
    let su = poisson(su_mean);
    let [collision, blocking] = run_blocks(cfg, DOMAIN_COUNTS, |rng| {
        let (busy, nsu) = draw_counts(rng, &rhos, su.as_ref());
        let blocked = overflows(n, busy, nsu, chsu);
        [
            f64::from(u8::from(blocked && busy >= 1)),
            f64::from(u8::from(blocked)),
        ]
    });
    CountEstimates {
        collision: OracleEstimate::from_moments(collision, cfg.seed),
        blocking: OracleEstimate::from_moments(blocking, cfg.seed),
    }
}

/// Which count the subset enumerator should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountKind {
    /// Channels occupied by a PU.
    Busy,
    /// Channels in the OFF state.
    Idle,
}

/// Sums, for every subset `A` of size `k`, the probability that exactly the
/// channels in `A` are in the counted state.
pub fn brute_force_count_distribution(
    rhos: &[f64],
    which: CountKind,
) -> Result<CountDistribution, OracleError> {
    let n = rhos.len();
    if n > MAX_BRUTE_FORCE_CHANNELS {
        return Err(OracleError::TooManyChannels {
            n,
            max: MAX_BRUTE_FORCE_CHANNELS,
        });
    }
    let in_state: Vec<f64> = match which {
        CountKind::Busy => rhos.to_vec(),
        CountKind::Idle => rhos.iter().map(|r| 1.0 - r).collect(),
    };
    let mut pmf = vec![0.0; n + 1];
    for subset in 0u32..(1u32 << n) {
        let mut p = 1.0;
        for (i, q) in in_state.iter().enumerate() {
            p *= if subset & (1 << i) != 0 { *q } else { 1.0 - *q };
        }
        pmf[subset.count_ones() as usize] += p;
    }
    Ok(CountDistribution::from_pmf(pmf))
}

/// Poisson pmf by direct evaluation of `m^k e^-m / k!`.
fn poisson_pmf_direct(mean: f64, k: u32) -> f64 {
    let fact: f64 = (1..=k).map(f64::from).product();
    mean.powi(k as i32) * (-mean).exp() / fact
}

/// Collision probability when every user needs one channel:
/// `Σ_{i=1}^{n} P[NPU = i] · P[NSU > n − i]`, built from the subset
/// enumerator and a direct Poisson sum.
pub fn collision_one_channel_per_user(rhos: &[f64], su_mean: f64) -> Result<f64, OracleError> {
    let busy = brute_force_count_distribution(rhos, CountKind::Busy)?;
    let n = rhos.len();
    Ok((1..=n)
        .map(|i| {
            let cdf: f64 = (0..=(n - i) as u32).map(|k| poisson_pmf_direct(su_mean, k)).sum();
            busy.prob(i) * (1.0 - cdf)
        })
        .sum())
}

/// Time-average busy fraction of a two-state ON/OFF chain.
///
/// ON→OFF at rate `μ`, OFF→ON at rate `μρ/(1−ρ)`, so the stationary busy
/// probability is `ρ`. The standard error comes from `batches` equal-length
/// batch means.
pub fn simulate_channel_occupancy(
    channel: &Channel,
    horizon_s: f64,
    seed: u64,
    batches: usize,
) -> OracleEstimate {
    let mu = channel.pu_service_rate;
    let rho = channel.pu_arrival_rate / mu;
    let batches = batches.max(2);
    if rho <= 0.0 {
        return OracleEstimate::exact(0.0, batches as u64, seed);
    }
    let to_off = Exp::new(mu).expect("positive service rate");
    let to_on = Exp::new(mu * rho / (1.0 - rho)).expect("positive return rate");
    let mut rng = block_rng(seed, DOMAIN_CTMC, 0);

    let batch_len = horizon_s / batches as f64;
    let mut busy_time = vec![0.0; batches];
    let mut on = rng.random::<f64>() < rho;
    let mut t = 0.0;
    while t < horizon_s {
        let hold = if on {
            to_off.sample(&mut rng)
        } else {
            to_on.sample(&mut rng)
        };
        let end = (t + hold).min(horizon_s);
        if on {
            // spread the sojourn over the batches it straddles
            let mut s = t;
            while s < end {
                let b = ((s / batch_len) as usize).min(batches - 1);
                let boundary = ((b + 1) as f64 * batch_len).min(end);
                busy_time[b] += boundary - s;
                s = boundary;
            }
        }
        t = end;
        on = !on;
    }
    let mut m = Moments::default();
    for b in busy_time {
        m.push(b / batch_len);
    }
    OracleEstimate::from_moments(m, seed)
}

/// Monte Carlo mean of `Bw·log2(1 + 10^(X/10))` with `X` exponential.
pub fn sample_mean_capacity(channel: &Channel, cfg: &OracleConfig) -> OracleEstimate {
    let exp = Exp::new(1.0 / channel.snr_mean_db).expect("positive mean SNR");
    let bw = channel.bandwidth_hz;
    let [m] = run_blocks(cfg, DOMAIN_CAPACITY, |rng| {
        let x: f64 = exp.sample(rng);
        [bw * (1.0 + 10f64.powf(x / 10.0)).log2()]
    });
    OracleEstimate::from_moments(m, cfg.seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandoverEstimate {
    pub attempt: OracleEstimate,
    pub handover: OracleEstimate,
}

/// Estimates the handover attempt and success probabilities of every SVN.
///
/// The collision event among admitted users is sampled with a Poisson SU
/// count of mean `(1 − Pb)·λ/μ`; the spare-capacity cap is then applied to
/// the sampled attempt probability. Because the cap is 1-Lipschitz, the
/// attempt standard error bounds the handover error as well.
pub fn sample_handover_chain(
    contexts: &[HandoverContext],
    cfg: &OracleConfig,
) -> Vec<HandoverEstimate> {
    contexts
        .iter()
        .enumerate()
        .map(|(l, ctx)| {
            let admitted = (1.0 - ctx.blocking) * ctx.su_mean;
            let su = poisson(admitted);
            let n = ctx.rhos.len();
            let local = OracleConfig {
                seed: cfg.seed ^ (l as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ..*cfg
            };
            let [attempt_m] = run_blocks(&local, DOMAIN_HANDOVER, |rng| {
                let (busy, nsu) = draw_counts(rng, &ctx.rhos, su.as_ref());
                [f64::from(u8::from(busy >= 1 && overflows(n, busy, nsu, ctx.chsu)))]
            });
            let attempt = OracleEstimate {
                seed: cfg.seed,
                ..OracleEstimate::from_moments(attempt_m, cfg.seed)
            };

            let others = || contexts.iter().enumerate().filter(move |(j, _)| *j != l);
            let spare: f64 = others()
                .map(|(_, c)| {
                    let n = c.rhos.len() as f64;
                    let busy: f64 = c.rhos.iter().sum();
                    n - (busy + (1.0 - c.blocking) * c.su_mean * c.chsu)
                })
                .sum::<f64>()
                .max(0.0);
            let rates: Vec<f64> = others()
                .flat_map(|(_, c)| c.effective_rates.iter().copied())
                .collect();
            let pooled = rates.iter().sum::<f64>() / rates.len().max(1) as f64;

            let handover = if admitted <= 0.0 || rates.is_empty() || pooled <= 0.0 {
                OracleEstimate::exact(0.0, attempt.samples, cfg.seed)
            } else {
                let star = (ctx.demand_bps / pooled).max(1.0);
                let attempts = attempt.value * admitted;
                OracleEstimate {
                    value: (attempts * star).min(spare) / star / admitted,
                    ..attempt
                }
            };
            HandoverEstimate { attempt, handover }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rhos: &[f64]) -> Vec<ChannelProfile> {
        rhos.iter().map(|&r| ChannelProfile::from_parts("c", r, 4e6)).collect()
    }

    #[test]
    fn brute_force_examples() {
        let d = brute_force_count_distribution(&[0.5, 0.2], CountKind::Busy).unwrap();
        for (a, b) in d.pmf().iter().zip([0.4, 0.5, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
        let d = brute_force_count_distribution(&[0.3], CountKind::Idle).unwrap();
        assert!((d.prob(0) - 0.3).abs() < 1e-15 && (d.prob(1) - 0.7).abs() < 1e-15);
        assert!(matches!(
            brute_force_count_distribution(&[0.1; 21], CountKind::Busy),
            Err(OracleError::TooManyChannels { n: 21, .. })
        ));
    }

    #[test]
    fn sampler_is_exact_without_pus() {
        let est = sample_metrics(&set(&[0.0; 3]), 2.0, 1.0, &OracleConfig::new(20_000, 1));
        assert_eq!(est.collision.value, 0.0);
        assert_eq!(est.collision.std_error, 0.0);
        assert!(est.blocking.value > 0.0);
    }

    #[test]
    fn sampler_is_reproducible_and_schedule_independent() {
        let s = set(&[0.3, 0.6]);
        let seq = OracleConfig::new(100_000, 9).with_exec(Exec::Sequential);
        let par = OracleConfig::new(100_000, 9).with_exec(Exec::Parallel);
        assert_eq!(sample_metrics(&s, 1.5, 1.0, &seq), sample_metrics(&s, 1.5, 1.0, &par));
        let other = OracleConfig::new(100_000, 10);
        assert_ne!(
            sample_metrics(&s, 1.5, 1.0, &seq).blocking.value,
            sample_metrics(&s, 1.5, 1.0, &other).blocking.value
        );
    }

    #[test]
    fn single_channel_collision_estimate() {
        let analytic = 0.5 * (1.0 - (-1.0f64).exp());
        for seed in [3, 4] {
            let est = sample_metrics(&set(&[0.5]), 1.0, 1.0, &OracleConfig::new(1_000_000, seed));
            assert!(est.collision.agrees_with(analytic, 3.0, 0.0), "{est:?}");
        }
    }

    #[test]
    fn std_error_matches_bernoulli_formula() {
        let est = sample_metrics(&set(&[0.5]), 1.0, 1.0, &OracleConfig::new(1_000_000, 5));
        let p = est.collision.value;
        let sigma = bernoulli_sigma(p, est.collision.samples);
        assert!((est.collision.std_error - sigma).abs() < 1e-9);
    }

    #[test]
    fn idle_channel_simulation() {
        let ch = Channel::new("c", 1e6, 0.0, 1.0, 10.0);
        let est = simulate_channel_occupancy(&ch, 1e4, 1, 50);
        assert_eq!(est.value, 0.0);
        let ch = Channel::with_utilization("c", 1e6, 0.7, 2.0, 10.0);
        let est = simulate_channel_occupancy(&ch, 1e3, 2, 20);
        assert!((0.0..=1.0).contains(&est.value));
        assert_eq!(est, simulate_channel_occupancy(&ch, 1e3, 2, 20));
    }

    #[test]
    fn direct_collision_matches_hand_value() {
        let v = collision_one_channel_per_user(&[0.5], 1.0).unwrap();
        assert!((v - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn capacity_spread_matches_samples() {
        let ch = Channel::new("c", 1e6, 0.2, 1.0, 10.0);
        let n = 1_000_000;
        let est = sample_mean_capacity(&ch, &OracleConfig::new(n, 6));
        let sampled_sd = est.std_error * (n as f64).sqrt();
        let sd = crate::channel_model::capacity_std_dev(&ch).unwrap();
        assert!((sampled_sd / sd - 1.0).abs() < 0.01, "{sampled_sd} vs {sd}");
    }
}
