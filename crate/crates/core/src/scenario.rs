//! Built-in model presets behind a small by-name registry.
//!
//! Both presets share the same dynamics — Burgers transport, the degenerate
//! shifted-ramp diffusion `(u - 1/2)^+`, and the quadratic Brownian
//! coefficient `u (1 - |u|)` supported on `[-1, 1]` — and differ only in
//! the initial datum. The noise coefficient equals `u (1 - u)` on `[0, 1]`
//! and is continued oddly so it vanishes continuously at both support
//! endpoints; a coefficient jumping to zero at `-1` would break the
//! Lipschitz requirement and measurably inflate the total variation of the
//! ensemble.

use crate::error::{Result, SolverError};
use crate::model::{scalar_fn, DiffusionModel, FluxModel, NoiseModel, ProblemSpec, ScalarFn};

/// A named, ready-to-run model family parameterized by the fractional order.
pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, theta: f64) -> Result<ScenarioParts>;
}

/// What a scenario produces: the model and the initial datum.
pub struct ScenarioParts {
    pub spec: ProblemSpec,
    pub initial: ScalarFn,
}

fn shared_spec(theta: f64) -> Result<ProblemSpec> {
    let flux = FluxModel::burgers(1.0);
    let diffusion = DiffusionModel::new(scalar_fn(|x: f64| (x - 0.5).max(0.0)), 1.0);
    let sigma = NoiseModel {
        sigma: scalar_fn(|x: f64| if (-1.0..=1.0).contains(&x) { x * (1.0 - x.abs()) } else { 0.0 }),
        lipschitz_bound: 1.0,
    };
    Ok(ProblemSpec::deterministic(flux, diffusion, theta)?
        .with_brownian(sigma, 1.0)
        .with_state_range(-1.0, 1.0))
}

/// Riemann step datum: `-1/2` on `[-1, 0)`, `+1/2` on `[0, 1]`, zero outside.
struct RiemannStep;

impl Scenario for RiemannStep {
    fn name(&self) -> &'static str {
        "example1"
    }

    fn summary(&self) -> &'static str {
        "Burgers flux, degenerate shifted-ramp diffusion, quadratic Brownian noise, Riemann step datum"
    }

    fn build(&self, theta: f64) -> Result<ScenarioParts> {
        Ok(ScenarioParts {
            spec: shared_spec(theta)?,
            initial: scalar_fn(|x: f64| {
                if (-1.0..0.0).contains(&x) {
                    -0.5
                } else if (0.0..=1.0).contains(&x) {
                    0.5
                } else {
                    0.0
                }
            }),
        })
    }
}

/// Smooth compactly supported bump `2 exp(1/(x^2 - 1))` on `(-1, 1)`.
struct SmoothBump;

impl Scenario for SmoothBump {
    fn name(&self) -> &'static str {
        "example2"
    }

    fn summary(&self) -> &'static str {
        "Burgers flux, degenerate shifted-ramp diffusion, quadratic Brownian noise, smooth bump datum"
    }

    fn build(&self, theta: f64) -> Result<ScenarioParts> {
        Ok(ScenarioParts {
            spec: shared_spec(theta)?,
            initial: scalar_fn(|x: f64| {
                if x.abs() < 1.0 {
                    2.0 * (1.0 / (x * x - 1.0)).exp()
                } else {
                    0.0
                }
            }),
        })
    }
}

/// All registered scenarios.
pub fn registry() -> &'static [&'static dyn Scenario] {
    &[&RiemannStep, &SmoothBump]
}

/// Finds a scenario by its registered name.
pub fn lookup(name: &str) -> Result<&'static dyn Scenario> {
    registry()
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            SolverError::DomainError(format!(
                "unknown scenario '{name}' (available: {})",
                registry()
                    .iter()
                    .map(|s| s.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{project_initial, Grid1D};
    use crate::model::validate_spec;

    #[test]
    fn registry_resolves_both_presets() {
        assert_eq!(registry().len(), 2);
        assert!(lookup("example1").is_ok());
        assert!(lookup("example2").is_ok());
        assert!(lookup("example3").is_err());
    }

    #[test]
    fn riemann_step_projects_to_plateaus() {
        let parts = lookup("example1").unwrap().build(0.5).unwrap();
        let grid = Grid1D::new(1.0, 0.25).unwrap();
        let field = project_initial(|x| (parts.initial)(x), &grid).unwrap();
        assert_eq!(&field.values()[..4], &[-0.5, -0.5, -0.5, -0.5]);
        assert_eq!(&field.values()[4..], &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn preset_model_point_values() {
        let parts = lookup("example1").unwrap().build(0.3).unwrap();
        let phi = &parts.spec.diffusion.phi;
        assert_eq!(phi(0.25), 0.0);
        assert_eq!(phi(0.75), 0.25);
        let sigma = &parts.spec.sigma.as_ref().unwrap().sigma;
        assert_eq!(sigma(0.5), 0.25);
        assert_eq!(sigma(1.5), 0.0);
    }

    #[test]
    fn presets_validate_over_declared_range() {
        for name in ["example1", "example2"] {
            let parts = lookup(name).unwrap().build(0.5).unwrap();
            assert_eq!(parts.spec.support_bound, 1.0);
            let report = validate_spec(&parts.spec, parts.spec.state_range, 33);
            assert!(report.all_passed(), "{name}: {:?}", report.checks);
        }
    }

    #[test]
    fn bump_datum_values() {
        let parts = lookup("example2").unwrap().build(0.5).unwrap();
        let u0 = &parts.initial;
        assert!((u0(0.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert_eq!(u0(1.0), 0.0);
        assert_eq!(u0(-1.0), 0.0);
        assert!(u0(0.999) < 1e-10); // continuous vanishing at the edge
        for x in [0.3, 0.7, 0.95] {
            assert_eq!(u0(x), u0(-x));
        }
    }

    #[test]
    fn bump_projection_is_symmetric() {
        let parts = lookup("example2").unwrap().build(0.5).unwrap();
        let grid = Grid1D::new(1.0, 0.125).unwrap();
        let field = project_initial(|x| (parts.initial)(x), &grid).unwrap();
        let v = field.values();
        let n = v.len();
        for j in 0..n / 2 {
            assert!((v[j] - v[n - 1 - j]).abs() < 1e-15);
        }
    }

    #[test]
    fn preset_rejects_invalid_theta() {
        assert!(lookup("example1").unwrap().build(1.5).is_err());
    }
}
