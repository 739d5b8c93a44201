//! Builds solver inputs from a validated config and drives the four
//! commands: simulate, convergence, preset, check-bounds.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use fractsplit_core::{
    bound_verdicts, cfl_max_dt, compute_weights, estimate_flux_lipschitz, grid_from_cfl, jump_fn,
    lookup_scenario, project_initial, restrict, run_ensemble, run_path, AtomicCompensator,
    ClosedFormCompensator, Compensator, ConvergenceLevel, ConvergenceReport, DiffusionModel,
    EmOptions, FluxModel, FractionalStencil, Grid1D, InverseCdfSampler, JumpModel, LevyMeasure,
    MarkSampler, NoiseModel, PointMassSampler, ProblemSpec, QuadratureCompensator,
    QuantileTableSampler, RngStream, ScalarField, ScalarFn, SolverError, SplitConfig,
    SubcycleOptions, TimeGrid, VerdictRecord, VerdictTolerances,
};

use crate::config::{
    CompensatorConfig, ConfigError, InlineScenario, RunConfig, SamplerConfig, ScenarioConfig,
};
use crate::output::{
    emit_convergence_csv, emit_field_csv, emit_plot_script, emit_stats_csv, RunMetadata,
};

/// Environment variable capping path-level parallelism.
pub const THREADS_ENV: &str = "FRACTSPLIT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("bound verdict failed")]
    Verdict,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 1 = verdict failure, 2 = config error, 3 = numerical/runtime failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verdict => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

/// Everything needed to run: the model, grids, stencil, projected initial
/// data, and driver options.
pub struct PreparedRun {
    pub spec: ProblemSpec,
    pub initial: ScalarFn,
    pub grid: Grid1D,
    pub stencil: FractionalStencil,
    pub times: TimeGrid,
    pub u0: ScalarField,
    pub split: SplitConfig,
    pub tolerances: VerdictTolerances,
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok())
}

fn build_inline(inline: &InlineScenario, theta: f64) -> Result<(ProblemSpec, ScalarFn), CliError> {
    let state_range = inline.state_range.unwrap_or(if inline.support_bound > 0.0 {
        (-2.0 * inline.support_bound, 2.0 * inline.support_bound)
    } else {
        (-1.0, 1.0)
    });

    let f = inline.flux.f.build();
    let f_prime = inline.flux.f.build_derivative();
    let flux_lipschitz = inline
        .flux
        .lipschitz
        .unwrap_or_else(|| estimate_flux_lipschitz(&f_prime, state_range.0, state_range.1));
    let flux = FluxModel::new(f, f_prime, flux_lipschitz);

    let phi_prime = inline.diffusion.phi.build_derivative();
    let diffusion_lipschitz = inline
        .diffusion
        .lipschitz
        .unwrap_or_else(|| estimate_flux_lipschitz(&phi_prime, state_range.0, state_range.1));
    let diffusion = if inline.diffusion.phi.is_identity() {
        DiffusionModel::identity()
    } else {
        DiffusionModel::new(inline.diffusion.phi.build(), diffusion_lipschitz)
    };

    let mut spec = ProblemSpec::deterministic(flux, diffusion, theta)
        .map_err(CliError::Solver)?
        .with_state_range(state_range.0, state_range.1);

    if let Some(sc) = &inline.sigma {
        spec = spec.with_brownian(
            NoiseModel {
                sigma: sc.sigma.build(),
                lipschitz_bound: sc.lipschitz,
            },
            inline.support_bound,
        );
    }

    if let Some(jc) = &inline.jumps {
        let sampler: Option<std::sync::Arc<dyn MarkSampler>> = match &jc.levy.sampler {
            Some(SamplerConfig::InverseCdf { q }) => {
                Some(std::sync::Arc::new(InverseCdfSampler(q.build())))
            }
            Some(SamplerConfig::PointMass { value }) => {
                Some(std::sync::Arc::new(PointMassSampler(*value)))
            }
            Some(SamplerConfig::QuantileTable { density, support }) => {
                let table = QuantileTableSampler::from_density(
                    &density.build(),
                    *support,
                    QuantileTableSampler::DEFAULT_NODES,
                )
                .map_err(CliError::Solver)?;
                Some(std::sync::Arc::new(table))
            }
            None => None,
        };
        let compensator: Option<std::sync::Arc<dyn Compensator>> = match &jc.levy.compensator {
            Some(CompensatorConfig::ClosedForm { c }) => {
                Some(std::sync::Arc::new(ClosedFormCompensator(c.build())))
            }
            Some(CompensatorConfig::Quadrature { density, support, tol }) => {
                Some(std::sync::Arc::new(QuadratureCompensator {
                    density: density.build(),
                    support: *support,
                    tol: *tol,
                }))
            }
            Some(CompensatorConfig::Atoms { atoms }) => {
                Some(std::sync::Arc::new(AtomicCompensator {
                    atoms: atoms.clone(),
                }))
            }
            None => None,
        };
        let levy = LevyMeasure::new(jc.levy.alpha, sampler, compensator).map_err(CliError::Solver)?;
        let eta_u = jc.eta_u.build();
        let eta_z = jc.eta_z.build();
        spec = spec.with_jumps(
            JumpModel {
                eta: jump_fn(move |u, z| eta_u(u) * eta_z(z)),
                lipschitz_factor: jc.lipschitz_factor,
                levy,
            },
            inline.support_bound,
        );
    }

    let initial = inline.initial.build();
    Ok((spec, initial))
}

/// Resolves the scenario, grid (direct or CFL-derived), stencil, time grid,
/// and projected initial datum for a validated config.
pub fn prepare(config: &RunConfig) -> Result<PreparedRun, CliError> {
    config.validate()?;
    let (spec, initial) = match &config.scenario {
        ScenarioConfig::Preset(name) => {
            let parts = lookup_scenario(name)
                .and_then(|s| s.build(config.theta))
                .map_err(CliError::Solver)?;
            (parts.spec, parts.initial)
        }
        ScenarioConfig::Inline(inline) => build_inline(inline, config.theta)?,
    };

    let subcycle = SubcycleOptions {
        allow: config.flags.allow_subcycling,
        safety: 0.9,
    };
    let grid = match config.grid.dx {
        Some(dx) => Grid1D::new(config.grid.half_width, dx).map_err(CliError::Solver)?,
        None => grid_from_cfl(
            config.grid.half_width,
            config.time.dt,
            config.theta,
            spec.flux.lipschitz_bound,
            spec.diffusion.effective_lipschitz(),
            subcycle.safety,
        )
        .map_err(CliError::Solver)?,
    };
    let stencil = compute_weights(config.theta, &grid).map_err(CliError::Solver)?;
    let times = TimeGrid::new(config.time.horizon, config.time.dt).map_err(CliError::Solver)?;
    let u0 = project_initial(|x| initial(x), &grid).map_err(CliError::Solver)?;

    let split = SplitConfig {
        snapshot_stride: config.snapshot_stride,
        keep_half_steps: false,
        em: EmOptions {
            clip_to_invariant_interval: config.flags.clip_to_invariant_interval,
        },
        subcycle,
        threads: threads_from_env(),
    };
    let tolerances = VerdictTolerances {
        linf: config.tolerances.linf,
        tv: config.tolerances.tv,
        max_linf_violation_fraction: config.tolerances.max_linf_violation_fraction,
    };

    Ok(PreparedRun {
        spec,
        initial,
        grid,
        stencil,
        times,
        u0,
        split,
        tolerances,
    })
}

/// Runs the ensemble and writes `stats.csv`, `final_mean.csv`,
/// `final_path0.csv`, and `plot.gp` (each with a metadata sidecar) into the
/// output directory.
pub fn cmd_simulate(config: &RunConfig, out_override: Option<&Path>) -> Result<PathBuf, CliError> {
    let run = prepare(config)?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let meta = RunMetadata::for_config(config);

    let stats = run_ensemble(
        &run.spec,
        &run.grid,
        &run.stencil,
        &run.times,
        &run.u0,
        config.n_paths,
        config.root_seed,
        &run.split,
        None,
    )
    .map_err(CliError::Solver)?;

    let mut rng = RngStream::new(config.root_seed, 0);
    let path0 = run_path(
        &run.spec,
        &run.grid,
        &run.stencil,
        &run.times,
        &run.u0,
        &mut rng,
        &run.split,
    )
    .map_err(CliError::Solver)?;

    let mean_final = ScalarField::new(stats.mean_final.clone(), &run.grid).map_err(CliError::Solver)?;
    emit_stats_csv(&stats, &out_dir.join("stats.csv"), &meta)?;
    emit_field_csv(&mean_final, &run.grid, &out_dir.join("final_mean.csv"), &meta)?;
    emit_field_csv(
        path0.final_field(),
        &run.grid,
        &out_dir.join("final_path0.csv"),
        &meta,
    )?;
    emit_plot_script(&out_dir, &meta)?;
    Ok(out_dir)
}

/// Grid-refinement study: `levels` grids (the base grid halved repeatedly),
/// single-path runs, L1 errors of each level against the finest, and the
/// fitted order. Needs `levels >= 4` so at least three error rows feed the
/// fit.
pub fn cmd_convergence(
    config: &RunConfig,
    levels: usize,
    out_override: Option<&Path>,
) -> Result<ConvergenceReport, CliError> {
    if levels < 4 {
        return Err(CliError::Config(ConfigError::Schema {
            path: "levels".into(),
            message: "need at least 4 levels (3 error rows) for an order fit".into(),
        }));
    }
    let base = prepare(config)?;
    let refine_dt = config.grid.dx.is_none();

    let mut grids = Vec::with_capacity(levels);
    let mut dts = Vec::with_capacity(levels);
    for i in 0..levels {
        let dx = base.grid.dx() / 2f64.powi(i as i32);
        let grid = Grid1D::new(config.grid.half_width, dx).map_err(CliError::Solver)?;
        let stencil = compute_weights(config.theta, &grid).map_err(CliError::Solver)?;
        let dt = if refine_dt {
            // re-derive dt from the stability bound on this grid, snapped to
            // divide the horizon
            let cap = cfl_max_dt(&grid, &base.spec, &stencil, base.split.subcycle.safety);
            let steps = (config.time.horizon / cap).ceil().max(1.0);
            config.time.horizon / steps
        } else {
            config.time.dt
        };
        grids.push((grid, stencil));
        dts.push(dt);
    }

    let mut finals = Vec::with_capacity(levels);
    for ((grid, stencil), dt) in grids.iter().zip(&dts) {
        let times = TimeGrid::new(config.time.horizon, *dt).map_err(CliError::Solver)?;
        let u0 = project_initial(|x| (base.initial)(x), grid).map_err(CliError::Solver)?;
        let mut rng = RngStream::new(config.root_seed, 0);
        let traj = run_path(&base.spec, grid, stencil, &times, &u0, &mut rng, &base.split)
            .map_err(CliError::Solver)?;
        finals.push(traj.final_field().clone());
    }

    let (fine_grid, _) = &grids[levels - 1];
    let fine = &finals[levels - 1];
    let mut rows = Vec::with_capacity(levels - 1);
    for i in 0..levels - 1 {
        let (grid, _) = &grids[i];
        let restricted = restrict(fine, fine_grid, grid).map_err(CliError::Solver)?;
        let err = fractsplit_core::l1_distance(&finals[i], &restricted, grid.dx())
            .map_err(CliError::Solver)?;
        rows.push(ConvergenceLevel {
            dx: grid.dx(),
            dt: dts[i],
            l1_error: err,
        });
    }
    let report = ConvergenceReport::from_levels(rows).map_err(CliError::Solver)?;

    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let meta = RunMetadata::for_config(config);
    emit_convergence_csv(&report, &out_dir.join("convergence.csv"), &meta)?;
    Ok(report)
}

/// Writes a ready-to-edit config for a named preset.
pub fn cmd_preset(name: &str, theta: f64, emit_path: &Path) -> Result<RunConfig, CliError> {
    let scenario = lookup_scenario(name).map_err(CliError::Solver)?;
    scenario.build(theta).map_err(CliError::Solver)?;
    let config = RunConfig::preset(name, theta);
    config.validate()?;
    if let Some(dir) = emit_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(emit_path, config.emit())?;
    Ok(config)
}

/// Runs the ensemble and checks the sup-norm and expected-TV bounds.
pub fn cmd_check_bounds(config: &RunConfig) -> Result<VerdictRecord, CliError> {
    let run = prepare(config)?;
    let stats = run_ensemble(
        &run.spec,
        &run.grid,
        &run.stencil,
        &run.times,
        &run.u0,
        config.n_paths,
        config.root_seed,
        &run.split,
        None,
    )
    .map_err(CliError::Solver)?;
    Ok(bound_verdicts(&stats, &run.u0, &run.spec, &run.tolerances))
}

/// Human-readable verdict lines.
pub fn format_verdicts(record: &VerdictRecord) -> String {
    let linf = &record.linf;
    let tv = &record.tv;
    format!(
        "sup-norm bound {:.6} (tol {:.1}%): violation fraction {:.4}% of samples (max {:.2}%) -> {}\n\
         expected-TV bound {:.6} (tol {:.1}%): worst mean-TV ratio {:.6} -> {}\n",
        linf.bound,
        100.0 * linf.tolerance,
        100.0 * linf.violation_fraction,
        100.0 * linf.max_fraction,
        if linf.passed { "PASS" } else { "FAIL" },
        tv.reference,
        100.0 * tv.tolerance,
        tv.worst_ratio,
        if tv.passed { "PASS" } else { "FAIL" },
    )
}
