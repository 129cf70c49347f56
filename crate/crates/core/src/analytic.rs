//! Closed-form expected returns as sums over trajectory classes.
//!
//! Every evaluator sums `multiplicity * reward * probability` over the classes
//! of `combinatorics::enumerate_classes`, with the reward and probability
//! written directly in the occupation numbers and jump counters. Cost is
//! polynomial in the horizon: `O(N^2)` terms for the qubits, `O(N^3)` for the
//! qutrit and `O(N^5)` candidate terms for the four-level model.

use serde::Serialize;

use crate::combinatorics::{
    enumerate_classes, four_level_classes, qubit_antiperiodic_multiplicity,
    qubit_closed_multiplicity, qutrit_multiplicity, ClassParams,
};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec, PolicyPoint};
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnValue {
    pub j: f64,
    /// Number of class terms summed.
    pub evaluations: u64,
}

/// Powers of one base, filled lazily by repeated squaring. `0^0 = 1`.
#[derive(Debug, Clone)]
pub struct PowerTable {
    base: f64,
    cache: Vec<Option<f64>>,
}

impl PowerTable {
    pub fn new(base: f64) -> Self {
        Self {
            base,
            cache: Vec::new(),
        }
    }

    pub fn pow(&mut self, exp: u32) -> f64 {
        let k = exp as usize;
        if k >= self.cache.len() {
            self.cache.resize(k + 1, None);
        }
        if let Some(v) = self.cache[k] {
            return v;
        }
        let v = pow_by_squaring(self.base, exp);
        self.cache[k] = Some(v);
        v
    }
}

fn pow_by_squaring(base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidPolicy(format!(
            "{name} = {v} is outside [0, 1]"
        )))
    }
}

fn check_horizon(kind: ModelKind, n: u32) -> Result<()> {
    if n < kind.min_horizon() {
        return Err(Error::InvalidModel(format!(
            "{kind} needs N >= {}, got {n}",
            kind.min_horizon()
        )));
    }
    Ok(())
}

fn as_f64(m: u128) -> f64 {
    m as f64
}

/// Closed-chain qubit, `+ -> ... -> +`.
pub fn j_qubit_closed(n: u32, x_plus: f64, x_minus: f64) -> Result<ReturnValue> {
    check_horizon(ModelKind::QubitClosed, n)?;
    check_unit("x_plus", x_plus)?;
    check_unit("x_minus", x_minus)?;
    let (mut xp, mut xp_c) = (PowerTable::new(x_plus), PowerTable::new(1.0 - x_plus));
    let (mut xm, mut xm_c) = (PowerTable::new(x_minus), PowerTable::new(1.0 - x_minus));
    let mut acc = NeumaierSum::new();
    let mut terms = 0u64;
    for p in 2..=n {
        for c in 1..=(p - 1).min(n + 1 - p) {
            let m = as_f64(qubit_closed_multiplicity(n, p, c)?);
            let reward = (p - 1) as f64 * x_plus - (n + 1 - p) as f64 * x_minus;
            let prob = xp.pow(c) * xp_c.pow(p - 1 - c) * xm.pow(c) * xm_c.pow(n + 1 - p - c);
            acc.add(m * reward * prob);
            terms += 1;
        }
    }
    // the all-plus trajectory
    acc.add(n as f64 * x_plus * xp_c.pow(n));
    terms += 1;
    Ok(ReturnValue {
        j: acc.value(),
        evaluations: terms,
    })
}

/// Anti-periodic qubit, `+ -> ... -> -`.
pub fn j_qubit_antiperiodic(n: u32, x_plus: f64, x_minus: f64) -> Result<ReturnValue> {
    check_horizon(ModelKind::QubitAntiperiodic, n)?;
    check_unit("x_plus", x_plus)?;
    check_unit("x_minus", x_minus)?;
    let (mut xp, mut xp_c) = (PowerTable::new(x_plus), PowerTable::new(1.0 - x_plus));
    let (mut xm, mut xm_c) = (PowerTable::new(x_minus), PowerTable::new(1.0 - x_minus));
    let mut acc = NeumaierSum::new();
    let mut terms = 0u64;
    for p in 1..=n {
        for c in 1..=p.min(n + 1 - p) {
            let m = as_f64(qubit_antiperiodic_multiplicity(n, p, c)?);
            let reward = p as f64 * x_plus - 1.0 - (n - p) as f64 * x_minus;
            let prob = xp.pow(c) * xp_c.pow(p - c) * xm.pow(c - 1) * xm_c.pow(n + 1 - p - c);
            acc.add(m * reward * prob);
            terms += 1;
        }
    }
    Ok(ReturnValue {
        j: acc.value(),
        evaluations: terms,
    })
}

/// Qutrit ladder with one common rotation angle. The intermediate energy
/// cancels from the sum, so there is no `epsilon` argument.
pub fn j_qutrit_common(n: u32, x: f64) -> Result<ReturnValue> {
    check_horizon(ModelKind::QutritLadder, n)?;
    check_unit("x", x)?;
    let (mut xs, mut xs_c) = (PowerTable::new(x), PowerTable::new(1.0 - x));
    let mut acc = NeumaierSum::new();
    let mut terms = 0u64;
    for n0 in 1..n {
        for n2 in 1..=(n - n0) {
            let n1 = n + 1 - n0 - n2;
            for c in 0..n0.min(n1).min(n2) {
                let m = as_f64(qutrit_multiplicity(n0, n1, n2, c)?);
                let kernel = (n0 as f64 + 2.0 * n2 as f64 - n as f64 - 2.0) * x + 1.0;
                let prob = xs_c.pow(n - 3 * c - 2) * xs.pow(3 * c + 2);
                acc.add(m * kernel * prob);
                terms += 1;
            }
        }
    }
    Ok(ReturnValue {
        j: acc.value(),
        evaluations: terms,
    })
}

/// Qutrit ladder with independent rotations `x, y, z` on levels 0, 1, 2.
pub fn j_qutrit_three(n: u32, epsilon: f64, x: f64, y: f64, z: f64) -> Result<ReturnValue> {
    check_horizon(ModelKind::QutritLadder, n)?;
    check_unit("x", x)?;
    check_unit("y", y)?;
    check_unit("z", z)?;
    let (mut xs, mut xs_c) = (PowerTable::new(x), PowerTable::new(1.0 - x));
    let (mut ys, mut ys_c) = (PowerTable::new(y), PowerTable::new(1.0 - y));
    let (mut zs, mut zs_c) = (PowerTable::new(z), PowerTable::new(1.0 - z));
    let mut acc = NeumaierSum::new();
    let mut terms = 0u64;
    for n0 in 1..n {
        for n2 in 1..=(n - n0) {
            let n1 = n + 1 - n0 - n2;
            for c in 0..n0.min(n1).min(n2) {
                let m = as_f64(qutrit_multiplicity(n0, n1, n2, c)?);
                let reward = 1.0 - epsilon * n0 as f64 * x - (1.0 - epsilon) * n1 as f64 * y
                    + (n2 - 1) as f64 * z;
                let prob = xs_c.pow(n0 - 1 - c)
                    * xs.pow(1 + c)
                    * ys_c.pow(n1 - 1 - c)
                    * ys.pow(1 + c)
                    * zs_c.pow(n2 - 1 - c)
                    * zs.pow(c);
                acc.add(m * reward * prob);
                terms += 1;
            }
        }
    }
    Ok(ReturnValue {
        j: acc.value(),
        evaluations: terms,
    })
}

/// Four-level system `0 -> {1 | 1'} -> 2 -> 0` with rotations `x` (on 0, 1
/// and 2) and `x'` (on 1'). Multiplicities come from the cached class table.
pub fn j_fourlevel(
    n: u32,
    epsilon: f64,
    epsilon_prime: f64,
    x: f64,
    x_prime: f64,
) -> Result<ReturnValue> {
    check_horizon(ModelKind::FourLevel, n)?;
    check_unit("x", x)?;
    check_unit("x_prime", x_prime)?;
    let classes = four_level_classes(n)?;
    let (mut xs, mut xs_c) = (PowerTable::new(x), PowerTable::new(1.0 - x));
    let (mut ps, mut ps_c) = (PowerTable::new(x_prime), PowerTable::new(1.0 - x_prime));
    let pre0 = epsilon * x * (1.0 - x) + epsilon_prime * x;
    let mut acc = NeumaierSum::new();
    for cls in classes.iter() {
        let ClassParams::FourLevel {
            n0,
            n1,
            n2,
            c01,
            c01p,
        } = cls.params()
        else {
            unreachable!("four-level table holds four-level classes")
        };
        let n1p = n + 1 - n0 - n1 - n2;
        let reward = (1.0 - x) + n2 as f64 * x
            - n1 as f64 * (1.0 - epsilon) * x
            - n1p as f64 * (1.0 - epsilon_prime) * x_prime
            - n0 as f64 * pre0;
        let prob = xs_c.pow(2 * n0 + n1 + n2 - 3 * c01 - 3 * c01p)
            * xs.pow(3 * c01 + 2 * c01p - 1)
            * ps_c.pow(n1p - c01p)
            * ps.pow(c01p);
        acc.add(as_f64(cls.multiplicity()) * reward * prob);
    }
    Ok(ReturnValue {
        j: acc.value(),
        evaluations: classes.len() as u64,
    })
}

/// Closed-form evaluator bound to one model and one policy dimension.
#[derive(Debug, Clone)]
pub struct AnalyticEvaluator {
    spec: ModelSpec,
    policy_dim: usize,
}

impl AnalyticEvaluator {
    /// `policy_dim` picks the qutrit rotation mode (1 or 3); other models
    /// accept only their single dimension.
    pub fn new(spec: ModelSpec, policy_dim: usize) -> Result<Self> {
        if !spec.has_default_endpoints() {
            let (ei, ef) = spec.kind().default_endpoints();
            return Err(Error::UnsupportedEndpoints {
                initial: spec.initial(),
                final_state: spec.final_state(),
                expected_initial: ei,
                expected_final: ef,
            });
        }
        if !spec.kind().policy_dims().contains(&policy_dim) {
            return Err(Error::InvalidPolicy(format!(
                "{} takes {:?} coordinates, not {policy_dim}",
                spec.kind(),
                spec.kind().policy_dims()
            )));
        }
        if spec.kind() == ModelKind::FourLevel {
            four_level_classes(spec.horizon())?;
        }
        Ok(Self { spec, policy_dim })
    }

    /// Uses the first accepted policy dimension of the model.
    pub fn for_spec(spec: ModelSpec) -> Result<Self> {
        let dim = spec.kind().policy_dims()[0];
        Self::new(spec, dim)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn policy_dim(&self) -> usize {
        self.policy_dim
    }

    pub fn evaluate(&self, policy: &PolicyPoint) -> Result<ReturnValue> {
        if policy.len() != self.policy_dim {
            return Err(Error::InvalidPolicy(format!(
                "expected {} coordinates, got {}",
                self.policy_dim,
                policy.len()
            )));
        }
        self.evaluate_coords(policy.coords())
    }

    pub(crate) fn evaluate_coords(&self, c: &[f64]) -> Result<ReturnValue> {
        let s = &self.spec;
        let n = s.horizon();
        match (s.kind(), c.len()) {
            (ModelKind::QubitClosed, 2) => j_qubit_closed(n, c[0], c[1]),
            (ModelKind::QubitAntiperiodic, 2) => j_qubit_antiperiodic(n, c[0], c[1]),
            (ModelKind::QutritLadder, 1) => j_qutrit_common(n, c[0]),
            (ModelKind::QutritLadder, 3) => j_qutrit_three(n, s.epsilon(), c[0], c[1], c[2]),
            (ModelKind::FourLevel, 2) => j_fourlevel(n, s.epsilon(), s.epsilon_prime(), c[0], c[1]),
            (kind, len) => Err(Error::InvalidPolicy(format!(
                "{kind} does not take {len} coordinates"
            ))),
        }
    }

    /// Number of class terms for this model and horizon.
    pub fn class_count(&self) -> Result<usize> {
        Ok(enumerate_classes(&self.spec)?.len())
    }
}
