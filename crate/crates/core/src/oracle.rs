//! Brute-force expected return: every intermediate state sequence, its
//! probability as a product of per-step collapse probabilities and its reward
//! as a sum of per-step energy gains.
//!
//! Uses only the transition matrices, never the class machinery, so it can
//! serve as ground truth for the closed forms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{build_transition_matrices, ModelSpec, PolicyPoint, TransitionMatrices};
use crate::sum::Accumulator;

pub const DEFAULT_SEQUENCE_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Skip the subtree under a prefix of probability exactly zero.
    pub prune: bool,
    pub compensated: bool,
    pub parallel: bool,
    /// Largest allowed number of intermediate sequences `d^(N-1)`.
    pub cap: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            prune: true,
            compensated: true,
            parallel: true,
            cap: DEFAULT_SEQUENCE_CAP,
        }
    }
}

impl OracleConfig {
    /// Visits every sequence and adds its (possibly zero) term.
    pub fn blind() -> Self {
        Self {
            prune: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOutput {
    pub j: f64,
    /// `d^(N-1)`, the size of the sequence space.
    pub sequences: u128,
    /// Complete sequences whose term was actually computed.
    pub visited: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub probability: f64,
    pub reward: f64,
}

/// `d^(N-1)`, or a resource error when it exceeds `cap`.
pub fn sequence_count(spec: &ModelSpec, cap: u128) -> Result<u128> {
    let d = spec.dim() as u128;
    let mut total: u128 = 1;
    for _ in 1..spec.horizon() {
        total = total.saturating_mul(d);
    }
    if total > cap {
        return Err(Error::ResourceLimit {
            required: total,
            cap,
        });
    }
    Ok(total)
}

pub fn oracle_return(spec: &ModelSpec, policy: &PolicyPoint) -> Result<f64> {
    Ok(oracle_return_with(spec, policy, &OracleConfig::default())?.j)
}

pub fn oracle_return_with(
    spec: &ModelSpec,
    policy: &PolicyPoint,
    config: &OracleConfig,
) -> Result<OracleOutput> {
    let sequences = sequence_count(spec, config.cap)?;
    let tm = build_transition_matrices(spec, policy)?;
    let n = spec.horizon() as usize;
    let (init, fin) = (spec.initial(), spec.final_state());

    if n == 1 {
        let mut acc = Accumulator::new(config.compensated);
        acc.add(tm.prob(init, fin) * tm.reward(init, fin));
        return Ok(OracleOutput {
            j: acc.value(),
            sequences,
            visited: 1,
        });
    }

    let run = |first: usize| walk_partition(&tm, n, init, fin, first, config);
    let parts: Vec<(Accumulator, u64)> = if config.parallel {
        (0..spec.dim()).into_par_iter().map(run).collect()
    } else {
        (0..spec.dim()).map(run).collect()
    };
    let mut acc = Accumulator::new(config.compensated);
    let mut visited = 0;
    for (part, v) in &parts {
        acc.merge(part);
        visited += v;
    }
    Ok(OracleOutput {
        j: acc.value(),
        sequences,
        visited,
    })
}

/// All sequences whose first intermediate state is `first`, as an odometer
/// over slots `2..n` with running prefix probability and reward.
fn walk_partition(
    tm: &TransitionMatrices,
    n: usize,
    init: usize,
    fin: usize,
    first: usize,
    config: &OracleConfig,
) -> (Accumulator, u64) {
    let d = tm.dim();
    let mut acc = Accumulator::new(config.compensated);
    let mut visited = 0u64;

    let mut state = vec![0usize; n + 1];
    let mut prob = vec![0.0f64; n + 1];
    let mut reward = vec![0.0f64; n + 1];
    let mut next = vec![0usize; n + 1];
    state[0] = init;
    prob[0] = 1.0;
    state[1] = first;
    prob[1] = tm.prob(init, first);
    reward[1] = tm.reward(init, first);
    if config.prune && prob[1] == 0.0 {
        return (acc, 0);
    }

    let mut pos = 2;
    loop {
        if pos == n {
            let last = state[n - 1];
            let p = prob[n - 1] * tm.prob(last, fin);
            let r = reward[n - 1] + tm.reward(last, fin);
            acc.add(p * r);
            visited += 1;
            pos -= 1;
            if pos < 2 {
                break;
            }
            continue;
        }
        if next[pos] == d {
            next[pos] = 0;
            pos -= 1;
            if pos < 2 {
                break;
            }
            continue;
        }
        let s = next[pos];
        next[pos] += 1;
        let prev = state[pos - 1];
        let p = prob[pos - 1] * tm.prob(prev, s);
        if config.prune && p == 0.0 {
            continue;
        }
        state[pos] = s;
        prob[pos] = p;
        reward[pos] = reward[pos - 1] + tm.reward(prev, s);
        pos += 1;
    }
    (acc, visited)
}

/// Every endpoint-respecting sequence in odometer order (last intermediate
/// slot fastest), including zero-probability ones.
pub fn oracle_enumerate(spec: &ModelSpec, policy: &PolicyPoint) -> Result<TrajectoryIter> {
    oracle_enumerate_with_cap(spec, policy, DEFAULT_SEQUENCE_CAP)
}

pub fn oracle_enumerate_with_cap(
    spec: &ModelSpec,
    policy: &PolicyPoint,
    cap: u128,
) -> Result<TrajectoryIter> {
    sequence_count(spec, cap)?;
    let tm = build_transition_matrices(spec, policy)?;
    Ok(TrajectoryIter {
        tm,
        initial: spec.initial(),
        final_state: spec.final_state(),
        mid: vec![0; spec.horizon() as usize - 1],
        done: false,
    })
}

#[derive(Debug, Clone)]
pub struct TrajectoryIter {
    tm: TransitionMatrices,
    initial: usize,
    final_state: usize,
    mid: Vec<usize>,
    done: bool,
}

impl Iterator for TrajectoryIter {
    type Item = Trajectory;

    fn next(&mut self) -> Option<Trajectory> {
        if self.done {
            return None;
        }
        let mut states = Vec::with_capacity(self.mid.len() + 2);
        states.push(self.initial);
        states.extend_from_slice(&self.mid);
        states.push(self.final_state);
        let probability = states
            .windows(2)
            .map(|w| self.tm.prob(w[0], w[1]))
            .product();
        let reward = states.windows(2).map(|w| self.tm.reward(w[0], w[1])).sum();

        let d = self.tm.dim();
        let mut k = self.mid.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.mid[k] += 1;
            if self.mid[k] < d {
                break;
            }
            self.mid[k] = 0;
        }
        Some(Trajectory {
            states,
            probability,
            reward,
        })
    }
}

/// Brute-force evaluator bound to one model and policy dimension.
#[derive(Debug, Clone)]
pub struct OracleEvaluator {
    spec: ModelSpec,
    policy_dim: usize,
    config: OracleConfig,
}

impl OracleEvaluator {
    pub fn new(spec: ModelSpec, policy_dim: usize, config: OracleConfig) -> Result<Self> {
        if !spec.kind().policy_dims().contains(&policy_dim) {
            return Err(Error::InvalidPolicy(format!(
                "{} takes {:?} coordinates, not {policy_dim}",
                spec.kind(),
                spec.kind().policy_dims()
            )));
        }
        sequence_count(&spec, config.cap)?;
        Ok(Self {
            spec,
            policy_dim,
            config,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn policy_dim(&self) -> usize {
        self.policy_dim
    }

    pub fn evaluate(&self, policy: &PolicyPoint) -> Result<OracleOutput> {
        oracle_return_with(&self.spec, policy, &self.config)
    }
}
