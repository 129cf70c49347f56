//! Trajectory classes: solutions of the flow-conservation constraints and the
//! number of ordered trajectories sharing each solution.
//!
//! A class is identified by its occupation numbers `n_j` and transition counts
//! `a_ij`. Every trajectory in a class has the same probability and reward, so
//! the expected return is a sum over classes weighted by their multiplicity.
//!
//! Qubit and qutrit multiplicities are products of binomials (compositions of
//! each state's visits into runs). The four-level multiplicity is counted
//! directly by a memoized walk enumeration on the reduced transition graph.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec, MAX_DIM, QUBIT_MINUS, QUBIT_PLUS};

/// Largest horizon for which four-level multiplicities are computed.
pub const FOUR_LEVEL_MAX_HORIZON: u32 = 16;

/// Ordered transition counts `a[i][j] = #(i -> j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TransitionCounts {
    dim: usize,
    a: [[u32; MAX_DIM]; MAX_DIM],
}

impl TransitionCounts {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Self {
            dim,
            a: [[0; MAX_DIM]; MAX_DIM],
        }
    }

    /// Counts of consecutive pairs along a state sequence.
    pub fn from_sequence(dim: usize, states: &[usize]) -> Self {
        let mut out = Self::zeros(dim);
        for w in states.windows(2) {
            out.a[w[0]][w[1]] += 1;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> u32 {
        self.a[from][to]
    }

    pub fn total(&self) -> u32 {
        self.a.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u32 {
        self.a[i][..self.dim].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u32 {
        (0..self.dim).map(|i| self.a[i][j]).sum()
    }

    /// Outgoing minus incoming transitions, self-loops excluded.
    pub fn net_flow(&self, state: usize) -> i64 {
        let out: i64 = (0..self.dim)
            .filter(|&j| j != state)
            .map(|j| self.a[state][j] as i64)
            .sum();
        let inc: i64 = (0..self.dim)
            .filter(|&i| i != state)
            .map(|i| self.a[i][state] as i64)
            .sum();
        out - inc
    }

    /// Checks every conservation law for a trajectory of `horizon` steps from
    /// `initial` to `final_state` with the given occupations.
    pub fn check_flow(
        &self,
        kind: ModelKind,
        horizon: u32,
        occupations: &[u32],
        initial: usize,
        final_state: usize,
    ) -> Result<()> {
        let fail = |what: String| Err(Error::ConstraintViolation(what));
        if self.total() != horizon {
            return fail(format!("sum of a_ij is {} not {horizon}", self.total()));
        }
        if occupations.iter().sum::<u32>() != horizon + 1 {
            return fail("occupations do not sum to N+1".into());
        }
        for s in 0..self.dim {
            let out_expected = occupations[s] as i64 - (s == final_state) as i64;
            let in_expected = occupations[s] as i64 - (s == initial) as i64;
            if self.row_sum(s) as i64 != out_expected {
                return fail(format!("outgoing count of state {s}"));
            }
            if self.col_sum(s) as i64 != in_expected {
                return fail(format!("incoming count of state {s}"));
            }
            let net = (s == initial) as i64 - (s == final_state) as i64;
            if self.net_flow(s) != net {
                return fail(format!("net flow of state {s}"));
            }
        }
        for &(i, j) in kind.forbidden_transitions() {
            if self.a[i][j] != 0 {
                return fail(format!("forbidden transition ({i},{j}) used"));
            }
        }
        Ok(())
    }
}

/// The independent counters that pin down a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClassParams {
    /// `p` = number of `+` states, `c` = number of `+ -> -` jumps.
    Qubit { p: u32, c: u32 },
    /// `c` = number of `2 -> 0` feedback jumps.
    Qutrit { n0: u32, n2: u32, c: u32 },
    FourLevel {
        n0: u32,
        n1: u32,
        n2: u32,
        c01: u32,
        c01p: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrajectoryClass {
    occupations: Vec<u32>,
    params: ClassParams,
    counts: TransitionCounts,
    multiplicity: u128,
}

impl TrajectoryClass {
    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    pub fn params(&self) -> ClassParams {
        self.params
    }

    pub fn counts(&self) -> &TransitionCounts {
        &self.counts
    }

    /// Number of ordered trajectories in the class (computed at enumeration).
    pub fn multiplicity(&self) -> u128 {
        self.multiplicity
    }
}

/// Exact binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i as u128 + 1);
    }
    Ok(acc)
}

fn checked_product(factors: &[u128]) -> Result<u128> {
    factors.iter().try_fold(1u128, |acc, &f| {
        acc.checked_mul(f).ok_or(Error::Overflow("multiplicity"))
    })
}

/// Closed-chain qubit multiplicity `C(p-1, c) C(N-p, c-1)`; the all-plus class
/// `(N+1, 0)` has multiplicity one.
pub fn qubit_closed_multiplicity(horizon: u32, p: u32, c: u32) -> Result<u128> {
    if p == horizon + 1 && c == 0 {
        return Ok(1);
    }
    if c == 0 || p == 0 || p > horizon {
        return Ok(0);
    }
    checked_product(&[
        binomial((p - 1) as u64, c as u64)?,
        binomial((horizon - p) as u64, (c - 1) as u64)?,
    ])
}

/// Anti-periodic qubit multiplicity `C(p-1, c-1) C(N-p, c-1)`.
pub fn qubit_antiperiodic_multiplicity(horizon: u32, p: u32, c: u32) -> Result<u128> {
    if c == 0 || p == 0 || p > horizon {
        return Ok(0);
    }
    checked_product(&[
        binomial((p - 1) as u64, (c - 1) as u64)?,
        binomial((horizon - p) as u64, (c - 1) as u64)?,
    ])
}

/// Qutrit ladder multiplicity `C(n0-1, c) C(n1-1, c) C(n2-1, c)`, which is
/// zero as soon as `c > n_j - 1` for some `j`.
pub fn qutrit_multiplicity(n0: u32, n1: u32, n2: u32, c: u32) -> Result<u128> {
    if n0 == 0 || n1 == 0 || n2 == 0 {
        return Ok(0);
    }
    checked_product(&[
        binomial((n0 - 1) as u64, c as u64)?,
        binomial((n1 - 1) as u64, c as u64)?,
        binomial((n2 - 1) as u64, c as u64)?,
    ])
}

/// Number of walks from `start` to `end` that use every transition `(i, j)`
/// exactly `counts[i][j]` times.
///
/// Depth-first over the edges with remaining budget, memoized on
/// `(current node, remaining budgets)`.
pub fn count_walks(counts: &TransitionCounts, start: usize, end: usize) -> Result<u128> {
    let dim = counts.dim();
    let mut edges = Vec::new();
    let mut budget = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let a = counts.get(i, j);
            if a > 0 {
                let a = u8::try_from(a).map_err(|_| {
                    Error::ConstraintViolation(format!("a[{i}][{j}] = {a} too large to count"))
                })?;
                edges.push((i, j));
                budget.push(a);
            }
        }
    }
    let mut walker = WalkCounter {
        edges,
        end,
        memo: HashMap::new(),
    };
    walker.count(start, &mut budget)
}

struct WalkCounter {
    edges: Vec<(usize, usize)>,
    end: usize,
    memo: HashMap<(usize, Vec<u8>), u128>,
}

impl WalkCounter {
    fn count(&mut self, node: usize, budget: &mut Vec<u8>) -> Result<u128> {
        if budget.iter().all(|&b| b == 0) {
            return Ok((node == self.end) as u128);
        }
        let key = (node, budget.clone());
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let mut total: u128 = 0;
        for e in 0..self.edges.len() {
            let (from, to) = self.edges[e];
            if from != node || budget[e] == 0 {
                continue;
            }
            budget[e] -= 1;
            let sub = self.count(to, budget);
            budget[e] += 1;
            total = total
                .checked_add(sub?)
                .ok_or(Error::Overflow("walk count"))?;
        }
        self.memo.insert(key, total);
        Ok(total)
    }
}

fn require_default_endpoints(spec: &ModelSpec) -> Result<()> {
    if spec.has_default_endpoints() {
        return Ok(());
    }
    let (ei, ef) = spec.kind().default_endpoints();
    Err(Error::UnsupportedEndpoints {
        initial: spec.initial(),
        final_state: spec.final_state(),
        expected_initial: ei,
        expected_final: ef,
    })
}

fn out_of_range(params: &ClassParams, horizon: u32) -> Error {
    Error::ConstraintViolation(format!(
        "{params:?} outside the admissible ranges for N={horizon}"
    ))
}

/// Whether `params` lies inside the admissible ranges for `spec`.
pub fn is_admissible(spec: &ModelSpec, params: &ClassParams) -> bool {
    let n = spec.horizon();
    match (spec.kind(), *params) {
        (ModelKind::QubitClosed, ClassParams::Qubit { p, c }) => {
            (p == n + 1 && c == 0)
                || ((2..=n).contains(&p) && c >= 1 && c <= (p - 1).min(n + 1 - p))
        }
        (ModelKind::QubitAntiperiodic, ClassParams::Qubit { p, c }) => {
            (1..=n).contains(&p) && c >= 1 && c <= p.min(n + 1 - p)
        }
        (ModelKind::QutritLadder, ClassParams::Qutrit { n0, n2, c }) => {
            if !(1..n).contains(&n0) || n2 < 1 || n2 > n - n0 {
                return false;
            }
            let n1 = n + 1 - n0 - n2;
            c < n0.min(n1).min(n2)
        }
        (
            ModelKind::FourLevel,
            ClassParams::FourLevel {
                n0,
                n1,
                n2,
                c01,
                c01p,
            },
        ) => {
            if !(1..n).contains(&n0) || n2 < 1 || n2 > n - n0 || n1 > n + 1 - n0 - n2 {
                return false;
            }
            let n1p = n + 1 - n0 - n1 - n2;
            if c01 > n1.min(n0).min(n2) {
                return false;
            }
            c01p >= 1u32.saturating_sub(c01) && c01p <= n1p.min(n0 - c01).min(n2 - c01)
        }
        _ => false,
    }
}

/// Occupation numbers implied by `params`.
pub fn occupations(spec: &ModelSpec, params: &ClassParams) -> Result<Vec<u32>> {
    if !is_admissible(spec, params) {
        return Err(out_of_range(params, spec.horizon()));
    }
    let n = spec.horizon();
    Ok(match *params {
        ClassParams::Qubit { p, .. } => {
            let mut v = vec![0; 2];
            v[QUBIT_PLUS] = p;
            v[QUBIT_MINUS] = n + 1 - p;
            v
        }
        ClassParams::Qutrit { n0, n2, .. } => vec![n0, n + 1 - n0 - n2, n2],
        ClassParams::FourLevel { n0, n1, n2, .. } => vec![n0, n1, n + 1 - n0 - n1 - n2, n2],
    })
}

/// Full transition-count matrix from the free parameters of a class.
pub fn reconstruct_counts(spec: &ModelSpec, params: &ClassParams) -> Result<TransitionCounts> {
    let occ = occupations(spec, params)?;
    let n = spec.horizon();
    let mut t = TransitionCounts::zeros(spec.dim());
    let a = &mut t.a;
    match (spec.kind(), *params) {
        (ModelKind::QubitClosed, ClassParams::Qubit { p, c }) => {
            a[QUBIT_PLUS][QUBIT_PLUS] = p - 1 - c;
            a[QUBIT_MINUS][QUBIT_PLUS] = c;
            a[QUBIT_PLUS][QUBIT_MINUS] = c;
            a[QUBIT_MINUS][QUBIT_MINUS] = n + 1 - p - c;
        }
        (ModelKind::QubitAntiperiodic, ClassParams::Qubit { p, c }) => {
            a[QUBIT_PLUS][QUBIT_PLUS] = p - c;
            a[QUBIT_MINUS][QUBIT_PLUS] = c - 1;
            a[QUBIT_PLUS][QUBIT_MINUS] = c;
            a[QUBIT_MINUS][QUBIT_MINUS] = n + 1 - p - c;
        }
        (ModelKind::QutritLadder, ClassParams::Qutrit { c, .. }) => {
            let (n0, n1, n2) = (occ[0], occ[1], occ[2]);
            a[0][0] = n0 - 1 - c;
            a[0][1] = 1 + c;
            a[1][1] = n1 - 1 - c;
            a[1][2] = 1 + c;
            a[2][0] = c;
            a[2][2] = n2 - 1 - c;
        }
        (ModelKind::FourLevel, ClassParams::FourLevel { c01, c01p, .. }) => {
            let (n0, n1, n1p, n2) = (occ[0], occ[1], occ[2], occ[3]);
            a[0][0] = n0 - c01 - c01p;
            a[0][1] = c01;
            a[0][2] = c01p;
            a[1][1] = n1 - c01;
            a[1][3] = c01;
            a[2][2] = n1p - c01p;
            a[2][3] = c01p;
            a[3][0] = c01 + c01p - 1;
            a[3][3] = n2 - c01 - c01p;
        }
        _ => unreachable!("admissibility already matched kind and params"),
    }
    Ok(t)
}

fn closed_form_multiplicity(spec: &ModelSpec, params: &ClassParams, occ: &[u32]) -> Result<u128> {
    let n = spec.horizon();
    match *params {
        ClassParams::Qubit { p, c } => match spec.kind() {
            ModelKind::QubitClosed => qubit_closed_multiplicity(n, p, c),
            _ => qubit_antiperiodic_multiplicity(n, p, c),
        },
        ClassParams::Qutrit { c, .. } => qutrit_multiplicity(occ[0], occ[1], occ[2], c),
        ClassParams::FourLevel { .. } => unreachable!(),
    }
}

/// Exact number of ordered trajectories in `cls`.
pub fn multiplicity(spec: &ModelSpec, cls: &TrajectoryClass) -> Result<u128> {
    require_default_endpoints(spec)?;
    let counts = reconstruct_counts(spec, &cls.params)?;
    if counts != cls.counts || occupations(spec, &cls.params)? != cls.occupations {
        return Err(Error::ConstraintViolation(
            "class counts disagree with its free parameters".into(),
        ));
    }
    match spec.kind() {
        ModelKind::FourLevel => {
            if spec.horizon() > FOUR_LEVEL_MAX_HORIZON {
                return Err(Error::InvalidModel(format!(
                    "four-level multiplicities are limited to N <= {FOUR_LEVEL_MAX_HORIZON}"
                )));
            }
            count_walks(&counts, spec.initial(), spec.final_state())
        }
        _ => closed_form_multiplicity(spec, &cls.params, &cls.occupations),
    }
}

fn make_class(spec: &ModelSpec, params: ClassParams) -> Result<TrajectoryClass> {
    let occupations = occupations(spec, &params)?;
    let counts = reconstruct_counts(spec, &params)?;
    let multiplicity = match spec.kind() {
        ModelKind::FourLevel => count_walks(&counts, spec.initial(), spec.final_state())?,
        _ => closed_form_multiplicity(spec, &params, &occupations)?,
    };
    Ok(TrajectoryClass {
        occupations,
        params,
        counts,
        multiplicity,
    })
}

/// Candidate free parameters in loop order, before the multiplicity filter.
pub fn candidate_params(spec: &ModelSpec) -> Vec<ClassParams> {
    let n = spec.horizon();
    let mut out = Vec::new();
    match spec.kind() {
        ModelKind::QubitClosed => {
            for p in 2..=n {
                for c in 1..=(p - 1).min(n + 1 - p) {
                    out.push(ClassParams::Qubit { p, c });
                }
            }
            out.push(ClassParams::Qubit { p: n + 1, c: 0 });
        }
        ModelKind::QubitAntiperiodic => {
            for p in 1..=n {
                for c in 1..=p.min(n + 1 - p) {
                    out.push(ClassParams::Qubit { p, c });
                }
            }
        }
        ModelKind::QutritLadder => {
            for n0 in 1..n {
                for n2 in 1..=(n - n0) {
                    let n1 = n + 1 - n0 - n2;
                    for c in 0..n0.min(n1).min(n2) {
                        out.push(ClassParams::Qutrit { n0, n2, c });
                    }
                }
            }
        }
        ModelKind::FourLevel => {
            for n0 in 1..n {
                for n2 in 1..=(n - n0) {
                    for n1 in 0..=(n + 1 - n0 - n2) {
                        let n1p = n + 1 - n0 - n1 - n2;
                        for c01 in 0..=n1.min(n0).min(n2) {
                            let lo = 1u32.saturating_sub(c01);
                            let hi = n1p.min(n0 - c01).min(n2 - c01);
                            for c01p in lo..=hi {
                                // keeps the x exponent 3 c01 + 2 c01' - 1 positive
                                assert!(3 * c01 + 2 * c01p >= 2);
                                out.push(ClassParams::FourLevel {
                                    n0,
                                    n1,
                                    n2,
                                    c01,
                                    c01p,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Every trajectory class with at least one trajectory, in loop order
/// (outermost `n0`, then `n2`, then `n1`, then the jump counters; `p` then `c`
/// for qubits).
///
/// For the four-level model the admissible ranges also admit count vectors
/// that no walk realises (an intermediate branch with self-loops but no
/// entry), so candidates with zero multiplicity are dropped.
pub fn enumerate_classes(spec: &ModelSpec) -> Result<Vec<TrajectoryClass>> {
    require_default_endpoints(spec)?;
    if spec.kind() == ModelKind::FourLevel {
        return Ok(four_level_classes(spec.horizon())?.as_ref().clone());
    }
    candidate_params(spec)
        .into_iter()
        .map(|p| make_class(spec, p))
        .collect()
}

type ClassCache = Mutex<HashMap<u32, Arc<Vec<TrajectoryClass>>>>;

fn four_level_cache() -> &'static ClassCache {
    static CACHE: OnceLock<ClassCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Four-level classes for horizon `n`, memoized process-wide. The class
/// table depends only on `n`, not on energies or policy.
pub fn four_level_classes(n: u32) -> Result<Arc<Vec<TrajectoryClass>>> {
    if n > FOUR_LEVEL_MAX_HORIZON {
        return Err(Error::InvalidModel(format!(
            "four-level multiplicities are limited to N <= {FOUR_LEVEL_MAX_HORIZON}"
        )));
    }
    if let Some(hit) = four_level_cache().lock().unwrap().get(&n) {
        return Ok(hit.clone());
    }
    let spec = ModelSpec::four_level(n, 0.5, 0.5)?;
    let mut classes = Vec::new();
    for params in candidate_params(&spec) {
        let cls = make_class(&spec, params)?;
        if cls.multiplicity > 0 {
            classes.push(cls);
        }
    }
    let classes = Arc::new(classes);
    four_level_cache()
        .lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| classes.clone());
    Ok(classes)
}

/// Total number of trajectories across all classes.
pub fn total_trajectories(classes: &[TrajectoryClass]) -> Result<u128> {
    classes.iter().try_fold(0u128, |acc, c| {
        acc.checked_add(c.multiplicity)
            .ok_or(Error::Overflow("trajectory total"))
    })
}
