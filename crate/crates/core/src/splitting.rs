//! Operator-splitting time loop (noise substep first, then the
//! deterministic substep) and the Monte-Carlo ensemble runner.

use rayon::prelude::*;

use crate::deterministic::{solve_deterministic, SubcycleOptions};
use crate::diagnostics::{l1_distance, linf_norm, total_variation};
use crate::error::{Result, SolverError};
use crate::fractional::FractionalStencil;
use crate::grid::{Grid1D, ScalarField, TimeGrid};
use crate::model::ProblemSpec;
use crate::stochastic::{step_em, EmOptions, RngStream};

/// Driver configuration shared by paths and ensembles.
#[derive(Debug, Clone, Copy)]
pub struct SplitConfig {
    /// Record every `snapshot_stride`-th step (step 0 and the final step are
    /// always recorded).
    pub snapshot_stride: usize,
    /// Also retain the intermediate post-noise fields.
    pub keep_half_steps: bool,
    pub em: EmOptions,
    pub subcycle: SubcycleOptions,
    /// Path-level parallelism cap; `None` uses the global default.
    pub threads: Option<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            snapshot_stride: 10,
            keep_half_steps: false,
            em: EmOptions::default(),
            subcycle: SubcycleOptions::default(),
            threads: None,
        }
    }
}

/// Step indices recorded for a run: multiples of the stride plus the final
/// step, deduplicated.
pub fn recorded_steps(num_steps: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut steps: Vec<usize> = (0..=num_steps).step_by(stride).collect();
    if *steps.last().unwrap() != num_steps {
        steps.push(num_steps);
    }
    steps
}

/// One stored path: recorded fields keyed by step index, plus the stream
/// identity that produced it.
#[derive(Debug, Clone)]
pub struct PathTrajectory {
    pub snapshots: Vec<(usize, ScalarField)>,
    pub half_steps: Vec<(usize, ScalarField)>,
    pub root_seed: u64,
    pub path_index: u64,
}

impl PathTrajectory {
    pub fn final_field(&self) -> &ScalarField {
        &self.snapshots.last().expect("trajectory has snapshots").1
    }

    pub fn snapshot(&self, step: usize) -> Option<&ScalarField> {
        self.snapshots
            .iter()
            .find(|(n, _)| *n == step)
            .map(|(_, f)| f)
    }
}

/// Composes the two substeps over `num_steps` intervals: per step the noise
/// operator runs first and the deterministic operator second. `record`
/// receives `(step_index, state, post_noise_state)`.
pub fn split_evolve<R, S, Rec>(
    num_steps: usize,
    u0: &ScalarField,
    mut noise_op: R,
    mut deterministic_op: S,
    mut record: Rec,
) -> Result<ScalarField>
where
    R: FnMut(&ScalarField) -> Result<ScalarField>,
    S: FnMut(&ScalarField) -> Result<ScalarField>,
    Rec: FnMut(usize, &ScalarField, Option<&ScalarField>),
{
    record(0, u0, None);
    let mut u = u0.clone();
    for n in 0..num_steps {
        let half = noise_op(&u)?;
        let next = deterministic_op(&half)?;
        record(n + 1, &next, Some(&half));
        u = next;
    }
    Ok(u)
}

fn check_bindings(
    grid: &Grid1D,
    stencil: &FractionalStencil,
    u0: &ScalarField,
) -> Result<()> {
    if !u0.is_bound_to(grid) || stencil.grid_fingerprint() != grid.fingerprint() {
        return Err(SolverError::GridMismatch);
    }
    Ok(())
}

/// Runs one splitting path over the time grid, recording snapshots at the
/// configured stride.
pub fn run_path(
    spec: &ProblemSpec,
    grid: &Grid1D,
    stencil: &FractionalStencil,
    times: &TimeGrid,
    u0: &ScalarField,
    rng: &mut RngStream,
    cfg: &SplitConfig,
) -> Result<PathTrajectory> {
    check_bindings(grid, stencil, u0)?;
    let n_steps = times.num_steps();
    let dt = times.dt();
    let stride = cfg.snapshot_stride.max(1);

    let mut snapshots = Vec::new();
    let mut half_steps = Vec::new();
    let root_seed = rng.seed();
    let path_index = rng.index();
    split_evolve(
        n_steps,
        u0,
        |u| step_em(u, spec, dt, rng, &cfg.em),
        |u| solve_deterministic(u, spec, stencil, dt, dt, cfg.subcycle),
        |n, u, half| {
            if n % stride == 0 || n == n_steps {
                snapshots.push((n, u.clone()));
                if cfg.keep_half_steps {
                    if let Some(h) = half {
                        half_steps.push((n, h.clone()));
                    }
                }
            }
        },
    )?;
    Ok(PathTrajectory {
        snapshots,
        half_steps,
        root_seed,
        path_index,
    })
}

/// Monte-Carlo summaries over an ensemble of independent paths.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub step_indices: Vec<usize>,
    pub times: Vec<f64>,
    pub mean_linf: Vec<f64>,
    pub max_linf: Vec<f64>,
    pub mean_tv: Vec<f64>,
    pub stderr_tv: Vec<f64>,
    /// Mean L1 distance of each recorded state to the supplied reference
    /// field, when one was given.
    pub mean_l1_to_reference: Option<Vec<f64>>,
    /// Per-path sup-norm samples, `[path][recorded time]`; kept so bound
    /// verdicts can count pathwise violations.
    pub per_path_linf: Vec<Vec<f64>>,
    /// Cell-wise mean of the final-time fields.
    pub mean_final: Vec<f64>,
    pub n_paths: usize,
}

struct PathSummary {
    linf: Vec<f64>,
    tv: Vec<f64>,
    l1_ref: Option<Vec<f64>>,
    final_values: Vec<f64>,
}

/// Cascade (pairwise) summation: associative regrouping keeps the result
/// independent of accumulation chunking.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("worker pool")
            .install(f),
        None => f(),
    }
}

/// Runs `n_paths` independent paths with per-path streams derived from
/// `root_seed` and aggregates statistics. The result depends only on
/// `(root_seed, n_paths, config)`, not on scheduling: summaries are
/// collected by path index and reduced in a fixed order.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    spec: &ProblemSpec,
    grid: &Grid1D,
    stencil: &FractionalStencil,
    times: &TimeGrid,
    u0: &ScalarField,
    n_paths: usize,
    root_seed: u64,
    cfg: &SplitConfig,
    reference: Option<&ScalarField>,
) -> Result<EnsembleStats> {
    if n_paths == 0 {
        return Err(SolverError::DomainError("n_paths must be >= 1".into()));
    }
    check_bindings(grid, stencil, u0)?;
    let dx = grid.dx();
    let steps = recorded_steps(times.num_steps(), cfg.snapshot_stride);

    let run_one = |k: usize| -> Result<PathSummary> {
        let mut rng = RngStream::new(root_seed, k as u64);
        let traj = run_path(spec, grid, stencil, times, u0, &mut rng, cfg)?;
        let mut linf = Vec::with_capacity(steps.len());
        let mut tv = Vec::with_capacity(steps.len());
        let mut l1_ref = reference.map(|_| Vec::with_capacity(steps.len()));
        for (_, field) in &traj.snapshots {
            linf.push(linf_norm(field));
            tv.push(total_variation(field));
            if let (Some(acc), Some(r)) = (l1_ref.as_mut(), reference) {
                acc.push(l1_distance(field, r, dx)?);
            }
        }
        Ok(PathSummary {
            linf,
            tv,
            l1_ref,
            final_values: traj.final_field().values().to_vec(),
        })
    };

    let summaries: Result<Vec<PathSummary>> =
        with_pool(cfg.threads, || (0..n_paths).into_par_iter().map(run_one).collect());
    let summaries = summaries?;

    let n_times = steps.len();
    let nf = n_paths as f64;
    let mut mean_linf = Vec::with_capacity(n_times);
    let mut max_linf = Vec::with_capacity(n_times);
    let mut mean_tv = Vec::with_capacity(n_times);
    let mut stderr_tv = Vec::with_capacity(n_times);
    let mut mean_l1 = reference.map(|_| Vec::with_capacity(n_times));
    let mut column = vec![0.0; n_paths];
    for t in 0..n_times {
        for (k, s) in summaries.iter().enumerate() {
            column[k] = s.linf[t];
        }
        mean_linf.push(pairwise_sum(&column) / nf);
        max_linf.push(column.iter().cloned().fold(f64::NEG_INFINITY, f64::max));

        for (k, s) in summaries.iter().enumerate() {
            column[k] = s.tv[t];
        }
        let m = pairwise_sum(&column) / nf;
        mean_tv.push(m);
        if n_paths > 1 {
            let sq: Vec<f64> = column.iter().map(|x| (x - m) * (x - m)).collect();
            stderr_tv.push((pairwise_sum(&sq) / (nf - 1.0) / nf).sqrt());
        } else {
            stderr_tv.push(0.0);
        }

        if let Some(acc) = mean_l1.as_mut() {
            for (k, s) in summaries.iter().enumerate() {
                column[k] = s.l1_ref.as_ref().expect("reference column")[t];
            }
            acc.push(pairwise_sum(&column) / nf);
        }
    }

    let n_cells = u0.len();
    let mut mean_final = Vec::with_capacity(n_cells);
    let mut cell = vec![0.0; n_paths];
    for j in 0..n_cells {
        for (k, s) in summaries.iter().enumerate() {
            cell[k] = s.final_values[j];
        }
        mean_final.push(pairwise_sum(&cell) / nf);
    }

    Ok(EnsembleStats {
        times: steps.iter().map(|&n| times.time_at(n)).collect(),
        step_indices: steps,
        mean_linf,
        max_linf,
        mean_tv,
        stderr_tv,
        mean_l1_to_reference: mean_l1,
        per_path_linf: summaries.into_iter().map(|s| s.linf).collect(),
        mean_final,
        n_paths,
    })
}

/// One probe point of the time-continuity study.
#[derive(Debug, Clone, Copy)]
pub struct TimeContinuityPoint {
    pub dt: f64,
    /// Monte-Carlo estimate of `max_n E || u^{n+1} - u^n ||_L1` over the
    /// truncated domain.
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct TimeContinuityReport {
    pub points: Vec<TimeContinuityPoint>,
    /// Fitted slope of `log(estimate)` against `log(dt)`.
    pub slope: f64,
}

/// Estimates the modulus of L1 time continuity across splitting steps for a
/// descending list of step sizes and fits the scaling exponent.
#[allow(clippy::too_many_arguments)]
pub fn time_continuity_probe(
    spec: &ProblemSpec,
    grid: &Grid1D,
    stencil: &FractionalStencil,
    u0: &ScalarField,
    horizon: f64,
    dt_list: &[f64],
    n_paths: usize,
    root_seed: u64,
    cfg: &SplitConfig,
) -> Result<TimeContinuityReport> {
    if dt_list.len() < 3 {
        return Err(SolverError::DomainError(
            "time-continuity probe needs at least 3 step sizes".into(),
        ));
    }
    if dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SolverError::DomainError(
            "dt list must be sorted strictly descending".into(),
        ));
    }
    check_bindings(grid, stencil, u0)?;
    let dx = grid.dx();

    let mut points = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let times = TimeGrid::new(horizon, dt)?;
        let n_steps = times.num_steps();

        let run_one = |k: usize| -> Result<Vec<f64>> {
            let mut rng = RngStream::new(root_seed, k as u64);
            let mut diffs = Vec::with_capacity(n_steps);
            let mut prev = u0.clone();
            split_evolve(
                n_steps,
                u0,
                |u| step_em(u, spec, dt, &mut rng, &cfg.em),
                |u| solve_deterministic(u, spec, stencil, dt, dt, cfg.subcycle),
                |n, u, _| {
                    if n > 0 {
                        let l1: f64 = u
                            .values()
                            .iter()
                            .zip(prev.values())
                            .map(|(a, b)| (a - b).abs())
                            .sum::<f64>()
                            * dx;
                        diffs.push(l1);
                        prev = u.clone();
                    }
                },
            )?;
            Ok(diffs)
        };

        let all: Result<Vec<Vec<f64>>> =
            with_pool(cfg.threads, || (0..n_paths).into_par_iter().map(run_one).collect());
        let all = all?;

        let mut estimate = 0.0f64;
        let mut column = vec![0.0; n_paths];
        for n in 0..n_steps {
            for (k, d) in all.iter().enumerate() {
                column[k] = d[n];
            }
            estimate = estimate.max(pairwise_sum(&column) / n_paths as f64);
        }
        points.push(TimeContinuityPoint { dt, estimate });
    }

    let fit: Vec<(f64, f64)> = points.iter().map(|p| (p.dt, p.estimate)).collect();
    let slope = crate::diagnostics::observed_order(&fit)?;
    Ok(TimeContinuityReport { points, slope })
}
