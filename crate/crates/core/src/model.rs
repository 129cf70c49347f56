//! The four measured-walk models, their reduced policy coordinates and the
//! per-step transition probability / reward matrices.
//!
//! State indices follow the column order of each model's basis:
//!
//! | model                | index 0 | index 1 | index 2 | index 3 |
//! |----------------------|---------|---------|---------|---------|
//! | qubit (both)         | `+`     | `-`     |         |         |
//! | qutrit ladder        | `0`     | `1`     | `2`     |         |
//! | four-level           | `0`     | `1`     | `1'`    | `2`     |
//!
//! Energies are `E(+)=1, E(-)=0` for qubits, `(0, eps, 1)` for the qutrit and
//! `(0, eps, eps', 1)` for the four-level system.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

pub const QUBIT_PLUS: usize = 0;
pub const QUBIT_MINUS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    QubitClosed,
    QubitAntiperiodic,
    QutritLadder,
    FourLevel,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::QubitClosed,
        ModelKind::QubitAntiperiodic,
        ModelKind::QutritLadder,
        ModelKind::FourLevel,
    ];

    pub fn dim(self) -> usize {
        match self {
            ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => 2,
            ModelKind::QutritLadder => 3,
            ModelKind::FourLevel => 4,
        }
    }

    /// Smallest horizon for which the model has admissible trajectories.
    pub fn min_horizon(self) -> u32 {
        match self {
            ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => 1,
            ModelKind::QutritLadder | ModelKind::FourLevel => 2,
        }
    }

    /// Endpoints for which the closed-form returns are derived.
    pub fn default_endpoints(self) -> (usize, usize) {
        match self {
            ModelKind::QubitClosed => (QUBIT_PLUS, QUBIT_PLUS),
            ModelKind::QubitAntiperiodic => (QUBIT_PLUS, QUBIT_MINUS),
            ModelKind::QutritLadder => (0, 2),
            ModelKind::FourLevel => (0, 3),
        }
    }

    /// Accepted policy coordinate counts. The qutrit takes either a common
    /// rotation (1) or three independent ones (3).
    pub fn policy_dims(self) -> &'static [usize] {
        match self {
            ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => &[2],
            ModelKind::QutritLadder => &[1, 3],
            ModelKind::FourLevel => &[2],
        }
    }

    /// Ordered pairs `(i, j)` whose transition probability vanishes identically.
    pub fn forbidden_transitions(self) -> &'static [(usize, usize)] {
        match self {
            ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => &[],
            ModelKind::QutritLadder => &[(1, 0), (2, 1), (0, 2)],
            ModelKind::FourLevel => &[(0, 3), (1, 0), (1, 2), (2, 0), (2, 1), (3, 1), (3, 2)],
        }
    }

    pub fn is_forbidden(self, from: usize, to: usize) -> bool {
        self.forbidden_transitions().contains(&(from, to))
    }

    pub fn state_label(self, index: usize) -> &'static str {
        match (self, index) {
            (ModelKind::QubitClosed | ModelKind::QubitAntiperiodic, 0) => "+",
            (ModelKind::QubitClosed | ModelKind::QubitAntiperiodic, 1) => "-",
            (ModelKind::FourLevel, 2) => "1'",
            (ModelKind::FourLevel, 3) => "2",
            (_, 0) => "0",
            (_, 1) => "1",
            (_, 2) => "2",
            _ => "?",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::QubitClosed => "qubit_closed",
            ModelKind::QubitAntiperiodic => "qubit_antiperiodic",
            ModelKind::QutritLadder => "qutrit_ladder",
            ModelKind::FourLevel => "four_level",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "qubit_closed" | "closed" => Ok(ModelKind::QubitClosed),
            "qubit_antiperiodic" | "antiperiodic" => Ok(ModelKind::QubitAntiperiodic),
            "qutrit_ladder" | "qutrit" => Ok(ModelKind::QutritLadder),
            "four_level" | "fourlevel" => Ok(ModelKind::FourLevel),
            _ => Err(Error::InvalidModel(format!("unknown model kind `{s}`"))),
        }
    }
}

/// A fully specified model instance. Construct through [`ModelSpec::new`] or
/// [`ModelSpec::with_endpoints`]; both validate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    kind: ModelKind,
    horizon: u32,
    epsilon: f64,
    epsilon_prime: f64,
    initial: usize,
    final_state: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, horizon: u32, epsilon: f64, epsilon_prime: f64) -> Result<Self> {
        let (initial, final_state) = kind.default_endpoints();
        Self::with_endpoints(kind, horizon, epsilon, epsilon_prime, initial, final_state)
    }

    pub fn with_endpoints(
        kind: ModelKind,
        horizon: u32,
        epsilon: f64,
        epsilon_prime: f64,
        initial: usize,
        final_state: usize,
    ) -> Result<Self> {
        if horizon < kind.min_horizon() {
            return Err(Error::InvalidModel(format!(
                "{kind} needs N >= {}, got {horizon}",
                kind.min_horizon()
            )));
        }
        if !epsilon.is_finite() || !epsilon_prime.is_finite() {
            return Err(Error::InvalidModel(
                "energy parameters must be finite".into(),
            ));
        }
        let d = kind.dim();
        if initial >= d || final_state >= d {
            return Err(Error::InvalidModel(format!(
                "endpoint indices ({initial},{final_state}) out of range for dimension {d}"
            )));
        }
        Ok(Self {
            kind,
            horizon,
            epsilon,
            epsilon_prime,
            initial,
            final_state,
        })
    }

    pub fn qubit_closed(horizon: u32) -> Result<Self> {
        Self::new(ModelKind::QubitClosed, horizon, 0.5, 0.5)
    }

    pub fn qubit_antiperiodic(horizon: u32) -> Result<Self> {
        Self::new(ModelKind::QubitAntiperiodic, horizon, 0.5, 0.5)
    }

    pub fn qutrit(horizon: u32, epsilon: f64) -> Result<Self> {
        Self::new(ModelKind::QutritLadder, horizon, epsilon, 0.5)
    }

    pub fn four_level(horizon: u32, epsilon: f64, epsilon_prime: f64) -> Result<Self> {
        Self::new(ModelKind::FourLevel, horizon, epsilon, epsilon_prime)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon_prime
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn final_state(&self) -> usize {
        self.final_state
    }

    pub fn with_horizon(&self, horizon: u32) -> Result<Self> {
        Self::with_endpoints(
            self.kind,
            horizon,
            self.epsilon,
            self.epsilon_prime,
            self.initial,
            self.final_state,
        )
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::with_endpoints(
            self.kind,
            self.horizon,
            epsilon,
            self.epsilon_prime,
            self.initial,
            self.final_state,
        )
    }

    pub fn has_default_endpoints(&self) -> bool {
        self.kind.default_endpoints() == (self.initial, self.final_state)
    }

    /// Energy of every basis state, in index order.
    pub fn energies(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => vec![1.0, 0.0],
            ModelKind::QutritLadder => vec![0.0, self.epsilon, 1.0],
            ModelKind::FourLevel => vec![0.0, self.epsilon, self.epsilon_prime, 1.0],
        }
    }

    pub fn validate_policy(&self, policy: &PolicyPoint) -> Result<()> {
        let dims = self.kind.policy_dims();
        if !dims.contains(&policy.len()) {
            return Err(Error::InvalidPolicy(format!(
                "{} expects {:?} coordinates, got {}",
                self.kind,
                dims,
                policy.len()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RawModelSpec {
    model_kind: ModelKind,
    #[serde(rename = "N")]
    horizon: u32,
    #[serde(default = "half")]
    epsilon: f64,
    #[serde(default = "half")]
    epsilon_prime: f64,
    #[serde(default)]
    initial: Option<usize>,
    #[serde(default)]
    r#final: Option<usize>,
}

fn half() -> f64 {
    0.5
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        let (i0, f0) = raw.model_kind.default_endpoints();
        ModelSpec::with_endpoints(
            raw.model_kind,
            raw.horizon,
            raw.epsilon,
            raw.epsilon_prime,
            raw.initial.unwrap_or(i0),
            raw.r#final.unwrap_or(f0),
        )
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(spec: ModelSpec) -> Self {
        RawModelSpec {
            model_kind: spec.kind,
            horizon: spec.horizon,
            epsilon: spec.epsilon,
            epsilon_prime: spec.epsilon_prime,
            initial: Some(spec.initial),
            r#final: Some(spec.final_state),
        }
    }
}

/// Reduced policy coordinates `x = sin^2(theta)`, one per controlled rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolicyPoint {
    coords: Vec<f64>,
}

impl PolicyPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPolicy("policy has no coordinates".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidPolicy(format!(
                "coordinate {bad} outside [0,1]"
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &PolicyPoint) -> f64 {
        max_norm_distance(&self.coords, &other.coords)
    }
}

impl TryFrom<Vec<f64>> for PolicyPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PolicyPoint::new(v)
    }
}

impl From<PolicyPoint> for Vec<f64> {
    fn from(p: PolicyPoint) -> Self {
        p.coords
    }
}

impl FromStr for PolicyPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPolicy(format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PolicyPoint::new(coords)
    }
}

pub(crate) fn max_norm_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Per-step transition probabilities `P[i][j]` and rewards `R[i][j]` for a
/// fixed policy. Only the leading `dim x dim` block is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrices {
    dim: usize,
    prob: [[f64; MAX_DIM]; MAX_DIM],
    reward: [[f64; MAX_DIM]; MAX_DIM],
}

impl TransitionMatrices {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.prob[from][to]
    }

    #[inline]
    pub fn reward(&self, from: usize, to: usize) -> f64 {
        self.reward[from][to]
    }

    pub fn prob_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.prob[i][..self.dim].to_vec())
            .collect()
    }

    pub fn reward_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.reward[i][..self.dim].to_vec())
            .collect()
    }
}

/// Builds `P` and `R` for `spec` at `policy`, written directly in the
/// `x = sin^2(theta)` coordinates.
pub fn build_transition_matrices(
    spec: &ModelSpec,
    policy: &PolicyPoint,
) -> Result<TransitionMatrices> {
    spec.validate_policy(policy)?;
    let c = policy.coords();
    let mut prob = [[0.0; MAX_DIM]; MAX_DIM];
    let mut reward = [[0.0; MAX_DIM]; MAX_DIM];
    let eps = spec.epsilon();
    let epp = spec.epsilon_prime();

    match spec.kind() {
        ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => {
            let (xp, xm) = (c[0], c[1]);
            prob[0] = [1.0 - xp, xp, 0.0, 0.0];
            prob[1] = [xm, 1.0 - xm, 0.0, 0.0];
            // pre-collapse energies: 1 - x_+ from |+>, x_- from |->
            reward[0] = [xp, xp - 1.0, 0.0, 0.0];
            reward[1] = [1.0 - xm, -xm, 0.0, 0.0];
        }
        ModelKind::QutritLadder => {
            let (x, y, z) = if c.len() == 1 {
                (c[0], c[0], c[0])
            } else {
                (c[0], c[1], c[2])
            };
            prob[0] = [1.0 - x, x, 0.0, 0.0];
            prob[1] = [0.0, 1.0 - y, y, 0.0];
            prob[2] = [z, 0.0, 1.0 - z, 0.0];
            reward[0] = [-eps * x, eps * (1.0 - x), 1.0 - eps * x, 0.0];
            reward[1] = [
                -eps * (1.0 - y) - y,
                -(1.0 - eps) * y,
                (1.0 - eps) * (1.0 - y),
                0.0,
            ];
            reward[2] = [-(1.0 - z), eps - (1.0 - z), z, 0.0];
        }
        ModelKind::FourLevel => {
            let (x, xq) = (c[0], c[1]);
            let s = 1.0 - x;
            let sq = 1.0 - xq;
            prob[0] = [s * s, x * s, x, 0.0];
            prob[1] = [0.0, s, 0.0, x];
            prob[2] = [0.0, 0.0, sq, xq];
            prob[3] = [x, 0.0, 0.0, s];
            let pre0 = eps * x * s + epp * x;
            reward[0] = [-pre0, eps - pre0, epp - pre0, 1.0 - pre0];
            let pre1 = eps * s + x;
            reward[1] = [-pre1, -(1.0 - eps) * x, epp - pre1, (1.0 - eps) * s];
            let pre2 = epp * sq + xq;
            reward[2] = [-pre2, eps - pre2, -(1.0 - epp) * xq, (1.0 - epp) * sq];
            reward[3] = [-s, eps - s, epp - s, x];
        }
    }

    Ok(TransitionMatrices {
        dim: spec.dim(),
        prob,
        reward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ModelKind) -> ModelSpec {
        ModelSpec::new(kind, 4, 0.3, 0.7).unwrap()
    }

    fn policy(v: &[f64]) -> PolicyPoint {
        PolicyPoint::from_slice(v).unwrap()
    }

    /// Column `i` of the rotation applied to basis state `i`, built from
    /// `theta = asin(sqrt(x))` exactly as the unitaries are written down.
    fn rotated_state(spec: &ModelSpec, p: &PolicyPoint, i: usize) -> Vec<f64> {
        let th = |x: f64| x.sqrt().asin();
        let c = p.coords();
        match spec.kind() {
            ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => {
                // U = [[cos, sin], [-sin, cos]] on (|+>, |->)
                let t = th(c[i]);
                let u = [[t.cos(), t.sin()], [-t.sin(), t.cos()]];
                vec![u[0][i], u[1][i]]
            }
            ModelKind::QutritLadder => {
                let (t0, t1, t2) = if c.len() == 1 {
                    (th(c[0]), th(c[0]), th(c[0]))
                } else {
                    (th(c[0]), th(c[1]), th(c[2]))
                };
                let m = match i {
                    0 => [
                        [t0.cos(), -t0.sin(), 0.0],
                        [t0.sin(), t0.cos(), 0.0],
                        [0.0, 0.0, 1.0],
                    ],
                    1 => [
                        [1.0, 0.0, 0.0],
                        [0.0, t1.cos(), -t1.sin()],
                        [0.0, t1.sin(), t1.cos()],
                    ],
                    _ => [
                        [t2.cos(), 0.0, -t2.sin()],
                        [0.0, 1.0, 0.0],
                        [t2.sin(), 0.0, t2.cos()],
                    ],
                };
                (0..3).map(|r| m[r][i]).collect()
            }
            ModelKind::FourLevel => {
                let (t, tq) = (th(c[0]), th(c[1]));
                let (s, co) = (t.sin(), t.cos());
                let m = match i {
                    0 => [
                        [co * co, s * co, s, 0.0],
                        [-s * co, co, -s * s, 0.0],
                        [-s, 0.0, co, 0.0],
                        [0.0, 0.0, 0.0, 1.0],
                    ],
                    1 => [
                        [1.0, 0.0, 0.0, 0.0],
                        [0.0, co, 0.0, -s],
                        [0.0, 0.0, 1.0, 0.0],
                        [0.0, s, 0.0, co],
                    ],
                    2 => [
                        [1.0, 0.0, 0.0, 0.0],
                        [0.0, 1.0, 0.0, 0.0],
                        [0.0, 0.0, tq.cos(), -tq.sin()],
                        [0.0, 0.0, tq.sin(), tq.cos()],
                    ],
                    _ => [
                        [co, 0.0, 0.0, -s],
                        [0.0, 1.0, 0.0, 0.0],
                        [0.0, 0.0, 1.0, 0.0],
                        [s, 0.0, 0.0, co],
                    ],
                };
                (0..4).map(|r| m[r][i]).collect()
            }
        }
    }

    fn policies_for(kind: ModelKind) -> Vec<PolicyPoint> {
        let grid = [0.0, 0.13, 0.5, 0.77, 1.0];
        let mut out = Vec::new();
        for &a in &grid {
            for &b in &grid {
                match kind {
                    ModelKind::QutritLadder => {
                        out.push(policy(&[a]));
                        out.push(policy(&[a, b, 1.0 - a * b]));
                    }
                    _ => out.push(policy(&[a, b])),
                }
            }
        }
        out
    }

    #[test]
    fn qutrit_identity_and_cycle() {
        let s = spec(ModelKind::QutritLadder);
        let m = build_transition_matrices(&s, &policy(&[0.0, 0.0, 0.0])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.prob(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let m = build_transition_matrices(&s, &policy(&[1.0, 1.0, 1.0])).unwrap();
        let expect = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.prob(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn four_level_rows_by_substitution() {
        let s = spec(ModelKind::FourLevel);
        let m = build_transition_matrices(&s, &policy(&[0.5, 0.25])).unwrap();
        assert_eq!(m.prob_rows()[0], vec![0.25, 0.25, 0.5, 0.0]);
        assert_eq!(m.prob_rows()[2], vec![0.0, 0.0, 0.75, 0.25]);
    }

    #[test]
    fn qutrit_rewards_at_full_rotation() {
        let s = ModelSpec::qutrit(4, 0.3).unwrap();
        let m = build_transition_matrices(&s, &policy(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(m.reward(0, 1), 0.0);
        assert_eq!(m.reward(1, 2), 0.0);
        assert_eq!(m.reward(2, 0), 0.0);
        assert!((m.reward(0, 0) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn rows_are_stochastic() {
        for kind in ModelKind::ALL {
            let s = spec(kind);
            for p in policies_for(kind) {
                let m = build_transition_matrices(&s, &p).unwrap();
                for i in 0..s.dim() {
                    let row: f64 = (0..s.dim()).map(|j| m.prob(i, j)).sum();
                    assert!((row - 1.0).abs() < 1e-14, "{kind} {p:?} row {i}: {row}");
                    assert!((0..s.dim()).all(|j| (0.0..=1.0).contains(&m.prob(i, j))));
                }
            }
        }
    }

    #[test]
    fn zero_pattern_matches_forbidden_list() {
        for kind in ModelKind::ALL {
            let s = spec(kind);
            let interior: Vec<PolicyPoint> = match kind {
                ModelKind::QutritLadder => vec![policy(&[0.3]), policy(&[0.2, 0.6, 0.9])],
                _ => vec![policy(&[0.2, 0.6]), policy(&[0.99, 0.01])],
            };
            for p in interior {
                let m = build_transition_matrices(&s, &p).unwrap();
                for i in 0..s.dim() {
                    for j in 0..s.dim() {
                        assert_eq!(
                            m.prob(i, j) == 0.0,
                            kind.is_forbidden(i, j),
                            "{kind} ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rewards_match_rotated_state_energies() {
        for kind in ModelKind::ALL {
            let s = spec(kind);
            let e = s.energies();
            for p in policies_for(kind) {
                let m = build_transition_matrices(&s, &p).unwrap();
                for i in 0..s.dim() {
                    let v = rotated_state(&s, &p, i);
                    let pre: f64 = v.iter().zip(&e).map(|(a, en)| a * a * en).sum();
                    for j in 0..s.dim() {
                        assert!((v[j] * v[j] - m.prob(i, j)).abs() < 1e-12);
                        if kind.is_forbidden(i, j) {
                            continue;
                        }
                        let want = e[j] - pre;
                        assert!(
                            (m.reward(i, j) - want).abs() < 1e-12,
                            "{kind} {p:?} R[{i}][{j}] = {} vs {want}",
                            m.reward(i, j)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn policy_length_is_checked() {
        let s = spec(ModelKind::FourLevel);
        let err = build_transition_matrices(&s, &policy(&[0.1, 0.2, 0.3])).unwrap_err();
        assert!(matches!(err, Error::InvalidPolicy(_)));
        assert!(PolicyPoint::new(vec![1.2]).is_err());
        assert!(PolicyPoint::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn spec_invariants() {
        assert!(ModelSpec::qutrit(1, 0.5).is_err());
        assert!(ModelSpec::four_level(1, 0.5, 0.5).is_err());
        assert!(ModelSpec::qubit_closed(0).is_err());
        assert!(ModelSpec::qubit_closed(1).is_ok());
        assert!(ModelSpec::with_endpoints(ModelKind::QutritLadder, 3, 0.5, 0.5, 0, 3).is_err());
        let s = ModelSpec::qubit_antiperiodic(3).unwrap();
        assert_eq!((s.initial(), s.final_state()), (QUBIT_PLUS, QUBIT_MINUS));
    }

    #[test]
    fn spec_json_round_trip() {
        let s = ModelSpec::four_level(8, 2.475, 1.0).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"model_kind\":\"four_level\""));
        assert!(text.contains("\"N\":8"));
        assert!(text.contains("\"final\":3"));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);

        let short: ModelSpec =
            serde_json::from_str(r#"{"model_kind":"qutrit_ladder","N":5,"epsilon":0.2}"#).unwrap();
        assert_eq!((short.initial(), short.final_state()), (0, 2));
        assert!(
            serde_json::from_str::<ModelSpec>(r#"{"model_kind":"qutrit_ladder","N":1}"#).is_err()
        );
    }

    #[test]
    fn policy_parses_from_csv_list() {
        let p: PolicyPoint = "0.25, 0.5,1".parse().unwrap();
        assert_eq!(p.coords(), &[0.25, 0.5, 1.0]);
        assert!("0.2,abc".parse::<PolicyPoint>().is_err());
    }
}
