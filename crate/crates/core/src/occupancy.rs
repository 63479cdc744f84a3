//! Occupancy laws: how many of a heterogeneous channel set are busy with PUs
//! (Poisson-binomial), and how many SUs are present (Poisson).

/// Probability mass function over `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    pmf: Vec<f64>,
}

impl CountDistribution {
    pub fn from_pmf(pmf: Vec<f64>) -> Self {
        Self { pmf }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Largest count with nonzero support.
    pub fn max_count(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn reversed(&self) -> Self {
        Self {
            pmf: self.pmf.iter().rev().copied().collect(),
        }
    }
}

/// Law of the number of busy channels when channel `i` is busy with
/// probability `rhos[i]`, independently.
///
/// Built by folding one Bernoulli trial at a time into the running pmf, which
/// is the subset-sum over all busy patterns evaluated in O(n²).
pub fn pu_count_distribution(rhos: &[f64]) -> CountDistribution {
    let mut pmf = Vec::with_capacity(rhos.len() + 1);
    pmf.push(1.0);
    for &rho in rhos {
        debug_assert!((0.0..=1.0).contains(&rho));
        pmf.push(0.0);
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * (1.0 - rho) + pmf[k - 1] * rho;
        }
        pmf[0] *= 1.0 - rho;
    }
    CountDistribution { pmf }
}

/// Law of the number of idle channels: the reversal of the busy-count law.
pub fn idle_count_distribution(rhos: &[f64]) -> CountDistribution {
    pu_count_distribution(rhos).reversed()
}

pub fn expected_idle_channels(rhos: &[f64]) -> f64 {
    idle_count_distribution(rhos).mean()
}

/// Poisson pmf, evaluated in log space.
pub fn su_count_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let log_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * mean.ln() - mean - log_fact).exp()
}

/// `P[N > threshold]` for `N ~ Poisson(mean)`; one for any negative threshold.
pub fn su_count_exceeds(mean: f64, threshold: i64) -> f64 {
    if threshold < 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut log_term = -mean;
    let mut cdf = log_term.exp();
    for k in 1..=threshold {
        log_term += ln_mean - (k as f64).ln();
        let term = log_term.exp();
        cdf += term;
        if term == 0.0 && k as f64 > mean {
            break;
        }
    }
    (1.0 - cdf).max(0.0)
}
