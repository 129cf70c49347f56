//! Policy optimisation on the unit hypercube `[0,1]^k`, `k <= 3`.
//!
//! `maximise` scans a uniform grid, then refines with a clipped Nelder-Mead
//! simplex from every grid local maximum close to the grid maximum. Distinct
//! global maximisers (further apart than `d_sep` in max-norm) are all
//! reported. `find_crossover` bisects in the energy parameter on which of two
//! competing argmax clusters owns the global maximum.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::AnalyticEvaluator;
use crate::error::{Error, Result};
use crate::model::{max_norm_distance, ModelSpec, PolicyPoint};
use crate::oracle::OracleEvaluator;

/// Something to maximise over `[0,1]^dim`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    fn model(&self) -> Option<&ModelSpec> {
        None
    }
}

impl Objective for AnalyticEvaluator {
    fn dim(&self) -> usize {
        self.policy_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate_coords(x)?.j)
    }

    fn model(&self) -> Option<&ModelSpec> {
        Some(self.spec())
    }
}

impl Objective for OracleEvaluator {
    fn dim(&self) -> usize {
        self.policy_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(&PolicyPoint::from_slice(x)?)?.j)
    }

    fn model(&self) -> Option<&ModelSpec> {
        Some(self.spec())
    }
}

/// Wraps a plain function of the coordinates.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimConfig {
    /// Grid points per axis; `None` picks 1001, 201 or 61 for 1, 2 or 3 axes.
    pub resolution: Option<usize>,
    /// Maximisers must lie within `tol_j_rel * max(1, |J|)` of the best value.
    pub tol_j_rel: f64,
    /// Minimum max-norm separation between distinct maximisers.
    pub d_sep: f64,
    /// Plateau threshold as a fraction of `|J*|`.
    pub plateau_rel: f64,
    /// Grid local maxima within `tol_cluster_rel * max(1, |grid max|)`
    /// of the grid maximum seed a refinement.
    pub tol_cluster_rel: f64,
    pub max_starts: usize,
    /// Refinement stops once the simplex max-norm diameter drops below this.
    pub simplex_tol: f64,
    pub max_iter: usize,
    /// Crossover bisection stops once the bracket is this narrow.
    pub tol_eps: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            resolution: None,
            tol_j_rel: 1e-9,
            d_sep: 0.05,
            plateau_rel: 1e-3,
            tol_cluster_rel: 1e-2,
            max_starts: 32,
            simplex_tol: 1e-9,
            max_iter: 20_000,
            tol_eps: 1e-4,
        }
    }
}

pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 1001,
        2 => 201,
        _ => 61,
    }
}

/// `J` sampled on the uniform lattice `{0, h, ..., 1}^dim`, row-major with
/// the first coordinate varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeGrid {
    pub resolution: usize,
    pub dim: usize,
    pub values: Vec<f64>,
    pub model: Option<ModelSpec>,
}

impl LandscapeGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.resolution - 1) as f64
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            d[k] = index % self.resolution;
            index /= self.resolution;
        }
        d
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let h = self.spacing();
        self.digits(index)
            .into_iter()
            .map(|i| i as f64 * h)
            .collect()
    }

    /// First index holding the largest value.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// No lattice neighbour (including diagonals) is strictly larger.
    pub fn is_local_max(&self, index: usize) -> bool {
        let centre = self.digits(index);
        let v = self.values[index];
        let r = self.resolution as isize;
        let mut offset = vec![-1isize; self.dim];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut flat = 0isize;
                let mut inside = true;
                for k in 0..self.dim {
                    let c = centre[k] as isize + offset[k];
                    if c < 0 || c >= r {
                        inside = false;
                        break;
                    }
                    flat = flat * r + c;
                }
                if inside && self.values[flat as usize] > v {
                    return false;
                }
            }
            let mut k = 0;
            loop {
                if k == self.dim {
                    return true;
                }
                offset[k] += 1;
                if offset[k] <= 1 {
                    break;
                }
                offset[k] = -1;
                k += 1;
            }
        }
    }
}

pub fn scan_landscape(objective: &dyn Objective, resolution: usize) -> Result<LandscapeGrid> {
    let dim = objective.dim();
    if resolution < 2 {
        return Err(Error::InvalidPolicy(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidPolicy(format!(
            "policy cube dimension must be 1, 2 or 3, got {dim}"
        )));
    }
    let mut grid = LandscapeGrid {
        resolution,
        dim,
        values: Vec::new(),
        model: objective.model().cloned(),
    };
    let total = resolution.pow(dim as u32);
    grid.values = (0..total)
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            objective.eval(&p).map_err(|e| Error::AtPoint {
                point: p,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(grid)
}

/// Fraction of lattice cells with `J >= max - delta`.
pub fn plateau_measure(grid: &LandscapeGrid, delta: f64) -> f64 {
    if grid.is_empty() {
        return 0.0;
    }
    let (_, max) = grid.argmax();
    let count = grid.values.iter().filter(|&&v| v >= max - delta).count();
    count as f64 / grid.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult {
    /// Sorted lexicographically; the first is the canonical argmax.
    pub maximisers: Vec<PolicyPoint>,
    /// `J` at each maximiser, same order.
    pub values: Vec<f64>,
    pub j_max: f64,
    pub plateau_fraction: f64,
    pub degenerate: bool,
    pub grid_resolution: usize,
}

impl OptimResult {
    pub fn canonical(&self) -> &PolicyPoint {
        &self.maximisers[0]
    }

    /// Maximiser with the largest value (first on ties).
    pub fn best(&self) -> &PolicyPoint {
        let mut k = 0;
        for i in 1..self.values.len() {
            if self.values[i] > self.values[k] {
                k = i;
            }
        }
        &self.maximisers[k]
    }
}

fn clip(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn simplex_diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            d = d.max(max_norm_distance(&simplex[i].0, &simplex[j].0));
        }
    }
    d
}

/// Nelder-Mead ascent with every trial point clipped to the unit cube.
/// Returns the best vertex and its value.
///
/// Clipping can flatten the simplex onto a face of the cube, so the search
/// restarts from its own result with a fresh simplex until a restart no
/// longer moves the point.
pub fn nelder_mead(
    objective: &dyn Objective,
    start: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let (mut best, mut value) = simplex_search(objective, start, step, tol, max_iter)?;
    for _ in 0..20 {
        let (p, v) = simplex_search(objective, &best, step, tol, max_iter)?;
        let moved = max_norm_distance(&p, &best);
        if v >= value {
            best = p;
            value = v;
        }
        if moved < tol {
            break;
        }
    }
    Ok((best, value))
}

fn simplex_search(
    objective: &dyn Objective,
    start: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let k = start.len();
    let f = |x: &[f64]| -> Result<f64> {
        objective.eval(x).map_err(|e| Error::AtPoint {
            point: x.to_vec(),
            source: Box::new(e),
        })
    };
    let mut simplex = Vec::with_capacity(k + 1);
    let mut x0 = start.to_vec();
    clip(&mut x0);
    simplex.push((x0.clone(), f(&x0)?));
    for i in 0..k {
        let mut v = x0.clone();
        v[i] = if v[i] + step <= 1.0 {
            v[i] + step
        } else {
            v[i] - step
        };
        clip(&mut v);
        let fv = f(&v)?;
        simplex.push((v, fv));
    }

    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        let mut out: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect();
        clip(&mut out);
        out
    };

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        if simplex_diameter(&simplex) < tol {
            break;
        }
        let worst = simplex[k].clone();
        let mut centroid = vec![0.0; k];
        for (v, _) in &simplex[..k] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / k as f64;
            }
        }

        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&xr)?;
        if fr > simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&xe)?;
            simplex[k] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[k - 1].1 {
            simplex[k] = (xr, fr);
            continue;
        }
        if fr > worst.1 {
            let xc = lerp(&centroid, &xr, 0.5);
            let fc = f(&xc)?;
            if fc >= fr {
                simplex[k] = (xc, fc);
                continue;
            }
        } else {
            let xc = lerp(&centroid, &worst.0, 0.5);
            let fc = f(&xc)?;
            if fc > worst.1 {
                simplex[k] = (xc, fc);
                continue;
            }
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v = lerp(&best, &vertex.0, 0.5);
            let fv = f(&v)?;
            *vertex = (v, fv);
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(simplex.swap_remove(0))
}

fn select_starts(grid: &LandscapeGrid, config: &OptimConfig) -> Vec<Vec<f64>> {
    let (_, gmax) = grid.argmax();
    let threshold = gmax - config.tol_cluster_rel * gmax.abs().max(1.0);
    let mut candidates: Vec<(usize, f64)> = grid
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= threshold)
        .map(|(i, &v)| (i, v))
        .filter(|&(i, _)| grid.is_local_max(i))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for (i, _) in candidates {
        let p = grid.point(i);
        if starts
            .iter()
            .all(|s| max_norm_distance(s, &p) >= 0.5 * config.d_sep)
        {
            starts.push(p);
            if starts.len() == config.max_starts {
                break;
            }
        }
    }
    starts
}

pub fn maximise(objective: &dyn Objective, config: &OptimConfig) -> Result<OptimResult> {
    let resolution = config
        .resolution
        .unwrap_or_else(|| default_resolution(objective.dim()));
    let grid = scan_landscape(objective, resolution)?;
    let (gi, gmax) = grid.argmax();
    let step = grid.spacing();

    let starts = select_starts(&grid, config);
    let mut candidates: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| nelder_mead(objective, s, step, config.simplex_tol, config.max_iter))
        .collect::<Result<_>>()?;
    candidates.push((grid.point(gi), gmax));

    let j_max = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = config.tol_j_rel * j_max.abs().max(1.0);
    candidates.retain(|c| c.1 >= j_max - tol);
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in candidates {
        if kept
            .iter()
            .all(|k| max_norm_distance(&k.0, &c.0) >= config.d_sep)
        {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let plateau_fraction = plateau_measure(&grid, config.plateau_rel * j_max.abs());
    let (maximisers, values): (Vec<_>, Vec<_>) = kept
        .into_iter()
        .map(|(p, v)| (PolicyPoint::new(p).expect("clipped to the unit cube"), v))
        .unzip();
    Ok(OptimResult {
        degenerate: maximisers.len() >= 2,
        maximisers,
        values,
        j_max,
        plateau_fraction,
        grid_resolution: resolution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverResult {
    pub epsilon_star: f64,
    pub bracket: (f64, f64),
    /// Argmax owning the global maximum below the crossover.
    pub argmax_low: PolicyPoint,
    /// Argmax owning the global maximum above the crossover.
    pub argmax_high: PolicyPoint,
    pub j_low: f64,
    pub j_high: f64,
    /// Mean of `j_low` and `j_high`, both evaluated at `epsilon_star`.
    pub j_at_star: f64,
    pub separation: f64,
}

/// Bisection on `epsilon` tracking which argmax cluster is global. `factory`
/// builds the objective for a given `epsilon`.
pub fn find_crossover_with<O, F>(
    factory: F,
    range: (f64, f64),
    config: &OptimConfig,
) -> Result<CrossoverResult>
where
    O: Objective,
    F: Fn(f64) -> Result<O>,
{
    let (mut lo, mut hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidModel(format!(
            "bad epsilon range ({lo}, {hi})"
        )));
    }
    let argmax_at =
        |eps: f64| -> Result<PolicyPoint> { Ok(maximise(&factory(eps)?, config)?.best().clone()) };
    let mut a_lo = argmax_at(lo)?;
    let mut a_hi = argmax_at(hi)?;
    if a_lo.distance(&a_hi) < config.d_sep {
        return Err(Error::NoCrossover(format!(
            "argmax at both ends of [{lo}, {hi}] is near {:?}",
            a_lo.coords()
        )));
    }
    while hi - lo > config.tol_eps {
        let mid = 0.5 * (lo + hi);
        let a = argmax_at(mid)?;
        if a.distance(&a_lo) <= a.distance(&a_hi) {
            lo = mid;
            a_lo = a;
        } else {
            hi = mid;
            a_hi = a;
        }
    }
    let eps_star = 0.5 * (lo + hi);
    let obj = factory(eps_star)?;
    let step = 1.0
        / (config
            .resolution
            .unwrap_or_else(|| default_resolution(obj.dim()))
            - 1) as f64;
    let (p_lo, j_lo) = nelder_mead(
        &obj,
        a_lo.coords(),
        step,
        config.simplex_tol,
        config.max_iter,
    )?;
    let (p_hi, j_hi) = nelder_mead(
        &obj,
        a_hi.coords(),
        step,
        config.simplex_tol,
        config.max_iter,
    )?;
    let argmax_low = PolicyPoint::new(p_lo)?;
    let argmax_high = PolicyPoint::new(p_hi)?;
    // A continuously drifting argmax also changes between the range ends,
    // but both sides then refine to the same point.
    if argmax_low.distance(&argmax_high) < config.d_sep {
        return Err(Error::NoCrossover(format!(
            "argmax moves continuously; both sides meet at {:?} near epsilon = {eps_star:.5}",
            argmax_low.coords()
        )));
    }
    Ok(CrossoverResult {
        epsilon_star: eps_star,
        bracket: (lo, hi),
        separation: argmax_low.distance(&argmax_high),
        argmax_low,
        argmax_high,
        j_low: j_lo,
        j_high: j_hi,
        j_at_star: 0.5 * (j_lo + j_hi),
    })
}

/// Crossover in `epsilon` for the closed-form evaluator of `template`.
pub fn find_crossover(
    template: &ModelSpec,
    range: (f64, f64),
    config: &OptimConfig,
) -> Result<CrossoverResult> {
    find_crossover_with(
        |eps| AnalyticEvaluator::for_spec(template.with_epsilon(eps)?),
        range,
        config,
    )
}
