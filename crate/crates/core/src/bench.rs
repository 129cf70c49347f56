//! Timing of the closed-form evaluators against the brute-force oracle, and
//! least-squares fits of the measured scaling.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::analytic::AnalyticEvaluator;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec, PolicyPoint};
use crate::oracle::{oracle_return_with, OracleConfig, DEFAULT_SEQUENCE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Analytic,
    OracleBlind,
    OraclePruned,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 3] = [
        BenchMethod::Analytic,
        BenchMethod::OracleBlind,
        BenchMethod::OraclePruned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Analytic => "analytic",
            BenchMethod::OracleBlind => "oracle_blind",
            BenchMethod::OraclePruned => "oracle_pruned",
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidModel(format!("unknown bench method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub model_kind: ModelKind,
    #[serde(rename = "N")]
    pub horizon: u32,
    pub method: BenchMethod,
    /// Median time per call; `None` when timing is off or the cell was skipped.
    pub wall_time_ns: Option<u64>,
    /// Class terms for the closed form, `d^(N-1)` sequences for the oracle.
    pub term_count: u128,
    pub j_value: Option<f64>,
    /// The oracle cell exceeded the enumeration cap.
    pub skipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub repetitions: usize,
    pub timing: bool,
    /// Each timed repetition repeats the call until at least this long has
    /// passed, then reports the per-call average.
    pub min_batch_ns: u64,
    pub cap: u128,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repetitions: 5,
            timing: true,
            min_batch_ns: 200_000,
            cap: DEFAULT_SEQUENCE_CAP,
        }
    }
}

/// One warm-up call, then the median over `repetitions` batches.
fn time_call<F: FnMut() -> Result<f64>>(
    mut f: F,
    config: &BenchConfig,
) -> Result<(f64, Option<u64>)> {
    let t0 = Instant::now();
    let value = f()?;
    if !config.timing {
        return Ok((value, None));
    }
    let single = t0.elapsed().as_nanos().max(1) as u64;
    let batch = config.min_batch_ns.div_ceil(single).max(1);
    let mut samples = Vec::with_capacity(config.repetitions.max(1));
    for _ in 0..config.repetitions.max(1) {
        let start = Instant::now();
        for _ in 0..batch {
            std::hint::black_box(f()?);
        }
        samples.push(start.elapsed().as_nanos() as f64 / batch as f64);
    }
    samples.sort_by(f64::total_cmp);
    let m = samples.len();
    let median = if m % 2 == 1 {
        samples[m / 2]
    } else {
        0.5 * (samples[m / 2 - 1] + samples[m / 2])
    };
    Ok((value, Some(median.round() as u64)))
}

/// Times every method at every horizon, single-threaded.
pub fn run_bench(
    template: &ModelSpec,
    horizons: &[u32],
    methods: &[BenchMethod],
    policy: &PolicyPoint,
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for &n in horizons {
        let spec = template.with_horizon(n)?;
        spec.validate_policy(policy)?;
        for &method in methods {
            let record = match method {
                BenchMethod::Analytic => {
                    let ev = AnalyticEvaluator::new(spec.clone(), policy.len())?;
                    let terms = ev.evaluate(policy)?.evaluations;
                    let (j, t) = time_call(|| Ok(ev.evaluate(policy)?.j), config)?;
                    BenchRecord {
                        model_kind: spec.kind(),
                        horizon: n,
                        method,
                        wall_time_ns: t,
                        term_count: terms as u128,
                        j_value: Some(j),
                        skipped: false,
                    }
                }
                BenchMethod::OracleBlind | BenchMethod::OraclePruned => {
                    let oc = OracleConfig {
                        prune: method == BenchMethod::OraclePruned,
                        compensated: true,
                        parallel: false,
                        cap: config.cap,
                    };
                    match oracle_return_with(&spec, policy, &oc) {
                        Err(Error::ResourceLimit { required, .. }) => BenchRecord {
                            model_kind: spec.kind(),
                            horizon: n,
                            method,
                            wall_time_ns: None,
                            term_count: required,
                            j_value: None,
                            skipped: true,
                        },
                        Err(e) => return Err(e),
                        Ok(first) => {
                            let (j, t) = time_call(
                                || Ok(oracle_return_with(&spec, policy, &oc)?.j),
                                config,
                            )?;
                            BenchRecord {
                                model_kind: spec.kind(),
                                horizon: n,
                                method,
                                wall_time_ns: t,
                                term_count: first.sequences,
                                j_value: Some(j),
                                skipped: false,
                            }
                        }
                    }
                }
            };
            out.push(record);
        }
    }
    Ok(out)
}

/// `(N, method, |Δj|)` for every horizon where two methods differ by more
/// than `rel_tol * max(1, |j|)`.
pub fn disagreements(records: &[BenchRecord], rel_tol: f64) -> Vec<(u32, BenchMethod, f64)> {
    let mut bad = Vec::new();
    for r in records {
        let Some(j) = r.j_value else { continue };
        let reference = records
            .iter()
            .find(|o| o.horizon == r.horizon && o.model_kind == r.model_kind && o.j_value.is_some())
            .and_then(|o| o.j_value)
            .expect("r itself qualifies");
        let diff = (j - reference).abs();
        if diff > rel_tol * reference.abs().max(1.0) {
            bad.push((r.horizon, r.method, diff));
        }
    }
    bad
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return Err(Error::InsufficientData(format!(
            "{n} points for a line fit"
        )));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Base `b` of `t ~ b^N`, from a fit of `ln t` against `N`.
pub fn fit_exponential_base(points: &[(u32, f64)]) -> Result<f64> {
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(linear_fit(&xs, &ys)?.0.exp())
}

/// Exponent `k` of `t ~ N^k`, from a fit of `ln t` against `ln N`.
pub fn fit_power_exponent(points: &[(u32, f64)]) -> Result<f64> {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(linear_fit(&xs, &ys)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponential_base: f64,
    pub powerlaw_exponent: f64,
}

fn timed_points(records: &[BenchRecord], method: BenchMethod) -> Vec<(u32, f64)> {
    records
        .iter()
        .filter(|r| r.method == method && !r.skipped)
        .filter_map(|r| r.wall_time_ns.map(|t| (r.horizon, t.max(1) as f64)))
        .collect()
}

/// Exponential base from the oracle rows (blind if there are enough, pruned
/// otherwise) and power-law exponent from the analytic rows.
pub fn fit_scaling(records: &[BenchRecord]) -> Result<ScalingFit> {
    let mut oracle = timed_points(records, BenchMethod::OracleBlind);
    if oracle.len() < 4 {
        oracle = timed_points(records, BenchMethod::OraclePruned);
    }
    let analytic = timed_points(records, BenchMethod::Analytic);
    if oracle.len() < 4 || analytic.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need 4 timed rows per method, have {} oracle and {} analytic",
            oracle.len(),
            analytic.len()
        )));
    }
    Ok(ScalingFit {
        exponential_base: fit_exponential_base(&oracle)?,
        powerlaw_exponent: fit_power_exponent(&analytic)?,
    })
}
