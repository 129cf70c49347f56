use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use qrl_core::bench::{fit_scaling, run_bench, BenchConfig, BenchMethod, BenchRecord};
use qrl_core::combinatorics::{enumerate_classes, total_trajectories, ClassParams};
use qrl_core::optimize::{find_crossover, maximise, CrossoverResult, OptimConfig, OptimResult};
use qrl_core::oracle::{oracle_enumerate_with_cap, OracleConfig, DEFAULT_SEQUENCE_CAP};
use qrl_core::{
    AnalyticEvaluator, Error, ModelKind, ModelSpec, Objective, OracleEvaluator, PolicyPoint,
};

#[derive(Parser, Debug)]
#[command(name = "qrl", version, about = "Exact returns, brute-force checks and policy search for measured-walk RL models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// qubit_closed, qubit_antiperiodic, qutrit_ladder or four_level
    #[arg(long, global = true, default_value = "qutrit_ladder")]
    model: String,
    /// Horizon (number of steps).
    #[arg(long = "N", global = true, default_value_t = 4)]
    n: u32,
    #[arg(long, global = true, default_value_t = 0.5, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long = "epsilon-prime", global = true, default_value_t = 0.5, allow_negative_numbers = true)]
    epsilon_prime: f64,
    /// Comma-separated policy coordinates in [0,1].
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for grid scans and the oracle. Benchmarks always run on one.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the policy drawn by `bench` when --policy is absent.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EvaluatorKind {
    Analytic,
    Oracle,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Epsilon,
    N,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form expected return at one policy.
    Evaluate,
    /// Brute-force expected return at one policy.
    Oracle {
        /// Dump every trajectory as CSV instead of the summed return.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        initial: Option<usize>,
        #[arg(long = "final")]
        final_state: Option<usize>,
        /// Visit every sequence, including those with zero probability.
        #[arg(long)]
        blind: bool,
    },
    /// Global policy maximisation.
    Optimise(OptimArgs),
    /// Maximise over a list of epsilon or N values.
    Sweep {
        #[command(flatten)]
        opt: OptimArgs,
        #[arg(long, value_enum, default_value = "epsilon")]
        over: SweepParam,
        /// Comma-separated sweep values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Locate the epsilon at which the optimal policy jumps.
    Crossover {
        #[command(flatten)]
        opt: OptimArgs,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        tol_eps: Option<f64>,
    },
    /// List trajectory classes with their multiplicities.
    Count,
    /// Time the closed form against the oracle over a range of horizons.
    Bench {
        /// Comma-separated horizons, or an inclusive range such as 2..12.
        #[arg(long, default_value = "2..10")]
        horizons: String,
        /// Comma-separated subset of analytic, oracle_blind, oracle_pruned.
        #[arg(long, default_value = "analytic,oracle_blind,oracle_pruned")]
        methods: String,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        /// Omit timings so the output is reproducible.
        #[arg(long)]
        no_timing: bool,
        /// Largest sequence count the oracle may enumerate.
        #[arg(long)]
        cap: Option<u128>,
    },
}

#[derive(Args, Debug)]
struct OptimArgs {
    #[arg(long, value_enum, default_value = "analytic")]
    evaluator: EvaluatorKind,
    /// Policy dimension. Only the qutrit ladder offers a choice (1 or 3).
    #[arg(long)]
    dim: Option<usize>,
    /// Grid points per axis for the coarse scan.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e.root() {
                Error::ResourceLimit { .. } => 3,
                Error::NoCrossover(_) => 4,
                Error::InvalidModel(_)
                | Error::InvalidPolicy(_)
                | Error::ConstraintViolation(_)
                | Error::UnsupportedEndpoints { .. }
                | Error::InsufficientData(_) => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = match &cli.command {
        Command::Evaluate => cmd_evaluate(g)?,
        Command::Oracle { list, initial, final_state, blind } => {
            cmd_oracle(g, *list, *initial, *final_state, *blind)?
        }
        Command::Optimise(opt) => cmd_optimise(g, opt)?,
        Command::Sweep { opt, over, values } => cmd_sweep(g, opt, *over, values)?,
        Command::Crossover { opt, from, to, tol_eps } => cmd_crossover(g, opt, *from, *to, *tol_eps)?,
        Command::Count => cmd_count(g)?,
        Command::Bench { horizons, methods, repetitions, no_timing, cap } => {
            cmd_bench(g, horizons, methods, *repetitions, *no_timing, *cap)?
        }
    };
    emit(g, &out)
}

fn emit(g: &Global, text: &str) -> CliResult<()> {
    match &g.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn model(g: &Global) -> CliResult<ModelSpec> {
    let kind: ModelKind = g.model.parse()?;
    Ok(ModelSpec::new(kind, g.n, g.epsilon, g.epsilon_prime)?)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| CliError::Usage(format!("bad {what} value '{t}'"))))
        .collect()
}

fn policy(g: &Global) -> CliResult<PolicyPoint> {
    let raw = g
        .policy
        .as_deref()
        .ok_or_else(|| CliError::Usage("--policy is required".into()))?;
    Ok(PolicyPoint::new(parse_list(raw, "policy")?)?)
}

fn format_or(g: &Global, default: Format) -> Format {
    g.format.unwrap_or(default)
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serialisable output");
    s.push('\n');
    s
}

/// Two-line CSV from a flat JSON object, keys in order of appearance.
fn object_csv(v: &Value) -> String {
    let obj = v.as_object().expect("flat object");
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    let vals: Vec<String> = obj.values().map(csv_cell).collect();
    format!("{}\n{}\n", keys.join(","), vals.join(","))
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(csv_cell).collect::<Vec<_>>().join("|"),
        other => other.to_string(),
    }
}

fn cmd_evaluate(g: &Global) -> CliResult<String> {
    let spec = model(g)?;
    let p = policy(g)?;
    let ev = AnalyticEvaluator::new(spec, p.len())?;
    let t0 = Instant::now();
    let r = ev.evaluate(&p)?;
    let ns = t0.elapsed().as_nanos() as u64;
    let v = json!({"j": r.j, "evaluations": r.evaluations, "wall_time_ns": ns});
    Ok(match format_or(g, Format::Json) {
        Format::Json => json_line(&v),
        Format::Csv => object_csv(&v),
    })
}

fn cmd_oracle(
    g: &Global,
    list: bool,
    initial: Option<usize>,
    final_state: Option<usize>,
    blind: bool,
) -> CliResult<String> {
    let base = model(g)?;
    let (di, df) = base.kind().default_endpoints();
    let spec = ModelSpec::with_endpoints(
        base.kind(),
        base.horizon(),
        base.epsilon(),
        base.epsilon_prime(),
        initial.unwrap_or(di),
        final_state.unwrap_or(df),
    )?;
    let p = policy(g)?;
    if list {
        let iter = oracle_enumerate_with_cap(&spec, &p, DEFAULT_SEQUENCE_CAP)?;
        return Ok(match format_or(g, Format::Csv) {
            Format::Csv => {
                let mut s = String::from("states,probability,reward\n");
                for t in iter {
                    let states: Vec<String> = t.states.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(s, "{},{},{}", states.join("|"), t.probability, t.reward);
                }
                s
            }
            Format::Json => json_line(&json!({ "trajectories": iter.collect::<Vec<_>>() })),
        });
    }
    let config = if blind { OracleConfig::blind() } else { OracleConfig::default() };
    let ev = OracleEvaluator::new(spec, p.len(), config)?;
    let t0 = Instant::now();
    let r = ev.evaluate(&p)?;
    let ns = t0.elapsed().as_nanos() as u64;
    let v = json!({
        "j": r.j,
        "evaluations": r.visited,
        "sequences": r.sequences,
        "wall_time_ns": ns,
    });
    Ok(match format_or(g, Format::Json) {
        Format::Json => json_line(&v),
        Format::Csv => object_csv(&v),
    })
}

fn optim_config(opt: &OptimArgs) -> OptimConfig {
    OptimConfig { resolution: opt.resolution, ..OptimConfig::default() }
}

fn policy_dim(spec: &ModelSpec, opt: &OptimArgs) -> usize {
    opt.dim.unwrap_or(spec.kind().policy_dims()[0])
}

fn run_maximise(spec: ModelSpec, opt: &OptimArgs) -> CliResult<OptimResult> {
    let dim = policy_dim(&spec, opt);
    let cfg = optim_config(opt);
    let obj: Box<dyn Objective> = match opt.evaluator {
        EvaluatorKind::Analytic => Box::new(AnalyticEvaluator::new(spec, dim)?),
        EvaluatorKind::Oracle => Box::new(OracleEvaluator::new(spec, dim, OracleConfig::default())?),
    };
    Ok(maximise(obj.as_ref(), &cfg)?)
}

fn optim_json(r: &OptimResult) -> Value {
    json!({
        "maximisers": r.maximisers.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
        "values": r.values,
        "j_max": r.j_max,
        "plateau_fraction": r.plateau_fraction,
        "degenerate": r.degenerate,
        "grid_resolution": r.grid_resolution,
    })
}

fn cmd_optimise(g: &Global, opt: &OptimArgs) -> CliResult<String> {
    let r = run_maximise(model(g)?, opt)?;
    Ok(match format_or(g, Format::Json) {
        Format::Json => json_line(&optim_json(&r)),
        Format::Csv => {
            let dim = r.best().len();
            let mut s = coord_header(dim);
            s.push_str(",j\n");
            for (p, v) in r.maximisers.iter().zip(&r.values) {
                let _ = writeln!(s, "{},{}", join_coords(p.coords()), v);
            }
            s
        }
    })
}

fn coord_header(dim: usize) -> String {
    (0..dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn join_coords(c: &[f64]) -> String {
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_sweep(g: &Global, opt: &OptimArgs, over: SweepParam, values: &str) -> CliResult<String> {
    let base = model(g)?;
    let points: Vec<f64> = parse_list(values, "sweep")?;
    if points.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    for &v in &points {
        let spec = match over {
            SweepParam::Epsilon => base.with_epsilon(v)?,
            SweepParam::N => {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(CliError::Usage(format!("horizon '{v}' is not a whole number")));
                }
                base.with_horizon(v as u32)?
            }
        };
        rows.push((v, run_maximise(spec, opt)?));
    }
    Ok(match format_or(g, Format::Csv) {
        Format::Csv => {
            let dim = rows[0].1.best().len();
            let mut s = format!("sweep_value,{},j_max,plateau_fraction,degenerate\n", coord_header(dim));
            for (v, r) in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    v,
                    join_coords(r.canonical().coords()),
                    r.j_max,
                    r.plateau_fraction,
                    r.degenerate
                );
            }
            s
        }
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|(v, r)| {
                    let mut o = optim_json(r);
                    o["sweep_value"] = json!(v);
                    o
                })
                .collect();
            json_line(&json!({ "parameter": format!("{over:?}").to_lowercase(), "rows": arr }))
        }
    })
}

fn crossover_json(r: &CrossoverResult) -> Value {
    json!({
        "epsilon_star": r.epsilon_star,
        "bracket": [r.bracket.0, r.bracket.1],
        "argmax_low": r.argmax_low.coords(),
        "argmax_high": r.argmax_high.coords(),
        "j_low": r.j_low,
        "j_high": r.j_high,
        "j_at_star": r.j_at_star,
        "separation": r.separation,
    })
}

fn cmd_crossover(
    g: &Global,
    opt: &OptimArgs,
    from: f64,
    to: f64,
    tol_eps: Option<f64>,
) -> CliResult<String> {
    if !(from < to) {
        return Err(CliError::Usage("--from must be below --to".into()));
    }
    if opt.evaluator != EvaluatorKind::Analytic || opt.dim.is_some_and(|d| d != 1 && d != 2) {
        return Err(CliError::Usage(
            "crossover uses the closed form with the default policy dimension".into(),
        ));
    }
    let mut cfg = optim_config(opt);
    if let Some(t) = tol_eps {
        if !(t > 0.0) {
            return Err(CliError::Usage("--tol-eps must be positive".into()));
        }
        cfg.tol_eps = t;
    }
    let r = find_crossover(&model(g)?, (from, to), &cfg)?;
    let v = crossover_json(&r);
    Ok(match format_or(g, Format::Json) {
        Format::Json => json_line(&v),
        Format::Csv => object_csv(&v),
    })
}

fn cmd_count(g: &Global) -> CliResult<String> {
    let spec = model(g)?;
    let classes = enumerate_classes(&spec)?;
    let total = total_trajectories(&classes)?;
    let (header, width) = match spec.kind() {
        ModelKind::QubitClosed | ModelKind::QubitAntiperiodic => ("n_plus,n_minus,p,c,multiplicity", 4),
        ModelKind::QutritLadder => ("n0,n1,n2,c,multiplicity", 4),
        ModelKind::FourLevel => ("n0,n1,n1p,n2,c01,c01p,multiplicity", 6),
    };
    let rows: Vec<(Vec<u32>, u128)> = classes
        .iter()
        .map(|cls| {
            let occ = cls.occupations().to_vec();
            let mut cells = occ.clone();
            match cls.params() {
                ClassParams::Qubit { p, c } => cells.extend([p, c]),
                ClassParams::Qutrit { c, .. } => cells.push(c),
                ClassParams::FourLevel { c01, c01p, .. } => cells.extend([c01, c01p]),
            }
            (cells, cls.multiplicity())
        })
        .collect();
    Ok(match format_or(g, Format::Csv) {
        Format::Csv => {
            let mut s = format!("{header}\n");
            for (cells, m) in &rows {
                let c: Vec<String> = cells.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "{},{}", c.join(","), m);
            }
            let _ = writeln!(s, "total_classes{}{}", ",".repeat(width), classes.len());
            let _ = writeln!(s, "total_trajectories{}{}", ",".repeat(width), total);
            s
        }
        Format::Json => {
            let cols: Vec<&str> = header.split(',').collect();
            let arr: Vec<Value> = rows
                .iter()
                .map(|(cells, m)| {
                    let mut o = serde_json::Map::new();
                    for (k, v) in cols.iter().zip(cells) {
                        o.insert((*k).to_string(), json!(v));
                    }
                    o.insert("multiplicity".into(), json!(m));
                    Value::Object(o)
                })
                .collect();
            json_line(&json!({
                "model_kind": spec.kind(),
                "N": spec.horizon(),
                "classes": arr,
                "total_classes": classes.len(),
                "total_trajectories": total,
            }))
        }
    })
}

fn parse_horizons(s: &str) -> CliResult<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|_| CliError::Usage(format!("bad horizon range '{s}'")))?;
        let hi: u32 = b.trim().parse().map_err(|_| CliError::Usage(format!("bad horizon range '{s}'")))?;
        if lo > hi {
            return Err(CliError::Usage(format!("empty horizon range '{s}'")));
        }
        return Ok((lo..=hi).collect());
    }
    parse_list(s, "horizon")
}

fn cmd_bench(
    g: &Global,
    horizons: &str,
    methods: &str,
    repetitions: usize,
    no_timing: bool,
    cap: Option<u128>,
) -> CliResult<String> {
    let template = model(g)?;
    let hs = parse_horizons(horizons)?;
    let ms: Vec<BenchMethod> = methods
        .split(',')
        .map(|m| m.trim().parse::<BenchMethod>())
        .collect::<Result<_, _>>()?;
    let p = match g.policy {
        Some(_) => policy(g)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let dim = template.kind().policy_dims()[0];
            PolicyPoint::new((0..dim).map(|_| rng.gen::<f64>()).collect())?
        }
    };
    let cfg = BenchConfig {
        repetitions: repetitions.max(1),
        timing: !no_timing,
        cap: cap.unwrap_or(DEFAULT_SEQUENCE_CAP),
        ..BenchConfig::default()
    };
    let records = run_bench(&template, &hs, &ms, &p, &cfg)?;
    Ok(match format_or(g, Format::Csv) {
        Format::Csv => bench_csv(&records),
        Format::Json => {
            let fit = fit_scaling(&records).ok();
            json_line(&json!({
                "policy": p.coords(),
                "records": records,
                "fit": fit,
            }))
        }
    })
}

fn bench_csv(records: &[BenchRecord]) -> String {
    let mut s = String::from("model_kind,N,method,wall_time_ns,term_count,j_value,skipped\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.model_kind,
            r.horizon,
            r.method,
            r.wall_time_ns.map(|t| t.to_string()).unwrap_or_default(),
            r.term_count,
            r.j_value.map(|j| j.to_string()).unwrap_or_default(),
            r.skipped
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_ranges_and_lists() {
        assert_eq!(parse_horizons("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_horizons("4, 8,16").unwrap(), vec![4, 8, 16]);
        assert!(parse_horizons("5..2").is_err());
        assert!(parse_horizons("a").is_err());
    }

    #[test]
    fn flat_object_to_csv() {
        let v = json!({"a": 1, "b": [0.5, 1.0], "c": null});
        assert_eq!(object_csv(&v), "a,b,c\n1,0.5|1.0,\n");
    }

    #[test]
    fn error_exit_codes() {
        let wrapped = Error::AtPoint {
            point: vec![0.1],
            source: Box::new(Error::ResourceLimit { required: 10, cap: 1 }),
        };
        assert_eq!(CliError::from(wrapped).exit_code(), 3);
        assert_eq!(CliError::from(Error::NoCrossover("x".into())).exit_code(), 4);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }
}
