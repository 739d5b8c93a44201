//! Explicit monotone finite-difference substep for the fractional
//! conservation law, with CFL step-size control and sub-cycling.

use crate::error::{Result, SolverError};
use crate::flux::eo_divergence_raw;
use crate::fractional::{apply_nonlocal_raw, compute_a_theta, FractionalStencil};
use crate::grid::{Grid1D, ScalarField};
use crate::model::ProblemSpec;

/// Relative slack when comparing a requested dt against the stability bound,
/// so a dt set exactly at the bound is not refused over rounding.
const CFL_SLACK: f64 = 1.0 + 1e-12;

fn stability_rate(dx: f64, spec: &ProblemSpec, stencil: &FractionalStencil) -> f64 {
    2.0 * spec.flux.lipschitz_bound / dx
        + spec.diffusion.effective_lipschitz() * stencil.total_weight_mass()
}

/// Largest stable step: `dt * (2 L_f / dx + L_phi * W) <= safety`, where `W`
/// is the full kernel mass captured by the weights and their tails.
/// Returns +inf when both Lipschitz constants vanish.
pub fn cfl_max_dt(
    grid: &Grid1D,
    spec: &ProblemSpec,
    stencil: &FractionalStencil,
    safety: f64,
) -> f64 {
    let _ = grid;
    stencil_max_dt(spec, stencil, safety)
}

fn stencil_max_dt(spec: &ProblemSpec, stencil: &FractionalStencil, safety: f64) -> f64 {
    assert!(safety > 0.0 && safety <= 1.0, "safety must lie in (0, 1]");
    let rate = stability_rate(stencil.dx(), spec, stencil);
    if rate == 0.0 {
        f64::INFINITY
    } else {
        safety / rate
    }
}

/// Inverse direction: given the splitting step `dt`, returns the coarsest
/// grid on `[-half_width, half_width]` whose cell width satisfies the CFL
/// bound at the given safety factor (equality up to cell rounding).
pub fn grid_from_cfl(
    half_width: f64,
    dt: f64,
    theta: f64,
    flux_lipschitz: f64,
    diffusion_lipschitz: f64,
    safety: f64,
) -> Result<Grid1D> {
    if !(dt > 0.0) || !(half_width > 0.0) {
        return Err(SolverError::DomainError(
            "grid_from_cfl requires positive dt and half_width".into(),
        ));
    }
    let a_theta = compute_a_theta(theta)?;
    let two_theta = 2.0 * theta;
    let rate = |dx: f64| {
        2.0 * flux_lipschitz / dx
            + diffusion_lipschitz * a_theta * 2f64.powf(1.0 + two_theta) / two_theta
                * dx.powf(-two_theta)
    };
    let coarsest = 2.0 * half_width / 3.0;
    if dt * rate(coarsest) > safety {
        return Err(SolverError::CflViolation {
            dt,
            max_dt: safety / rate(coarsest),
        });
    }
    // rate(dx) is strictly decreasing, so bisect for the critical width
    let mut lo = coarsest * 1e-12;
    let mut hi = coarsest;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dt * rate(mid) > safety {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cells = (2.0 * half_width / hi).floor().max(3.0);
    Grid1D::new(half_width, 2.0 * half_width / cells)
}

/// One explicit step of the deterministic substep:
/// `u_j' = u_j - dt * divF_j + dt * nonlocal(phi(u))_j`
/// with constant prolongation by the current edge cells. Refuses steps
/// beyond the stability bound.
pub fn step_deterministic(
    field: &ScalarField,
    spec: &ProblemSpec,
    stencil: &FractionalStencil,
    dt: f64,
) -> Result<ScalarField> {
    if !stencil.is_bound_to(field) {
        return Err(SolverError::GridMismatch);
    }
    step_unchecked(field, spec, stencil, dt, stencil_max_dt(spec, stencil, 1.0))
}

fn step_unchecked(
    field: &ScalarField,
    spec: &ProblemSpec,
    stencil: &FractionalStencil,
    dt: f64,
    max_dt: f64,
) -> Result<ScalarField> {
    if dt > max_dt * CFL_SLACK {
        return Err(SolverError::CflViolation { dt, max_dt });
    }
    let u = field.values();
    let n = u.len();

    let divergence = eo_divergence_raw(&spec.flux, u, stencil.dx(), u[0], u[n - 1])?;

    // nonlocal term acts on phi(u); the identity route skips the map
    let nonlocal = if spec.diffusion.is_identity {
        apply_nonlocal_raw(stencil, u, u[0], u[n - 1])
    } else {
        let phi = &spec.diffusion.phi;
        let w: Vec<f64> = u.iter().map(|&v| phi(v)).collect();
        apply_nonlocal_raw(stencil, &w, w[0], w[n - 1])
    };

    let next: Vec<f64> = (0..n)
        .map(|j| u[j] + dt * (nonlocal[j] - divergence[j]))
        .collect();
    ScalarField::from_parts(next, field.grid_fingerprint())
}

/// Sub-cycling policy for the deterministic substep.
#[derive(Debug, Clone, Copy)]
pub struct SubcycleOptions {
    /// When the splitting step exceeds the CFL bound, take internal
    /// sub-steps instead of failing.
    pub allow: bool,
    /// Safety factor applied to the CFL bound when choosing sub-steps.
    pub safety: f64,
}

impl Default for SubcycleOptions {
    fn default() -> Self {
        Self {
            allow: true,
            safety: 0.9,
        }
    }
}

/// Advances the deterministic substep over `duration`, composing explicit
/// steps of equal length no larger than `min(dt, CFL bound)`.
pub fn solve_deterministic(
    field: &ScalarField,
    spec: &ProblemSpec,
    stencil: &FractionalStencil,
    duration: f64,
    dt: f64,
    opts: SubcycleOptions,
) -> Result<ScalarField> {
    assert!(duration >= 0.0, "duration must be nonnegative");
    if duration == 0.0 {
        return Ok(field.clone());
    }
    if !stencil.is_bound_to(field) {
        return Err(SolverError::GridMismatch);
    }
    let hard_limit = stencil_max_dt(spec, stencil, 1.0);
    let step_cap = if opts.allow {
        dt.min(stencil_max_dt(spec, stencil, opts.safety))
    } else {
        dt
    };
    let n_sub = (duration / step_cap).ceil().max(1.0) as usize;
    let dt_sub = duration / n_sub as f64;

    let mut u = field.clone();
    for _ in 0..n_sub {
        u = step_unchecked(&u, spec, stencil, dt_sub, hard_limit)?;
    }
    Ok(u)
}
