//! Random instance generators shared by the integration test targets.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use svnmap::scenario::{Channel, PvnShare, Scenario, SvnRequest};
use svnmap::{ChannelProfile, Environment};

pub fn random_profiles(rng: &mut ChaCha8Rng, n: usize) -> Vec<ChannelProfile> {
    (0..n)
        .map(|i| {
            ChannelProfile::from_parts(
                format!("c{i}"),
                rng.random_range(0.0..0.95),
                rng.random_range(2e5..4e6),
            )
        })
        .collect()
}

pub fn random_channel(rng: &mut ChaCha8Rng, id: String) -> Channel {
    Channel::with_utilization(
        id,
        rng.random_range(5e5..2e6),
        rng.random_range(0.05..0.8),
        rng.random_range(0.5..2.0),
        rng.random_range(3.0..20.0),
    )
}

pub fn random_scenario(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Scenario {
    let channels = (0..m).map(|i| random_channel(rng, format!("c{i}"))).collect();
    let svn_requests = (0..n)
        .map(|l| {
            let mu = rng.random_range(0.5..2.0);
            SvnRequest::new(
                format!("s{l}"),
                mu * rng.random_range(0.2..1.5),
                mu,
                rng.random_range(1e5..1.5e6),
            )
        })
        .collect();
    Scenario {
        channels,
        pvn_shares: vec![PvnShare {
            pvn_id: "p0".into(),
            share: 1.0,
        }],
        svn_requests,
        collision_threshold: rng.random_range(0.1..0.6),
    }
}

pub fn random_env(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Environment {
    Environment::new(random_scenario(rng, m, n)).expect("generated scenario is valid")
}

/// Each channel goes to a random SVN or to nobody.
pub fn random_sets(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); n];
    for c in 0..m {
        let owner = rng.random_range(0..=n);
        if owner < n {
            sets[owner].push(c);
        }
    }
    sets
}
