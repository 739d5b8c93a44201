//! Problem description: flux, diffusion, and noise closures with their
//! declared bounds, plus probe-based validation of the structural
//! assumptions the scheme relies on.

use std::sync::Arc;

use crate::error::{Result, SolverError};
use crate::stochastic::LevyMeasure;

/// Shared scalar closure `u -> f(u)`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Shared two-argument closure `(u, z) -> eta(u; z)`.
pub type JumpFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn scalar_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> ScalarFn {
    Arc::new(f)
}

pub fn jump_fn<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> JumpFn {
    Arc::new(f)
}

/// Closed-form Engquist-Osher split of a flux: `positive(u) = int_0^u max(f', 0)`
/// and `negative(v) = int_0^v min(f', 0)`.
#[derive(Clone)]
pub struct EoSplit {
    pub positive: ScalarFn,
    pub negative: ScalarFn,
}

/// Flux `f` with its derivative and declared Lipschitz bound over the
/// model's state range.
#[derive(Clone)]
pub struct FluxModel {
    pub f: ScalarFn,
    pub f_prime: ScalarFn,
    pub lipschitz_bound: f64,
    /// Optional closed-form EO split; when absent the numerical flux falls
    /// back to adaptive quadrature of `f'`.
    pub split: Option<EoSplit>,
}

impl FluxModel {
    pub fn new(f: ScalarFn, f_prime: ScalarFn, lipschitz_bound: f64) -> Self {
        Self {
            f,
            f_prime,
            lipschitz_bound,
            split: None,
        }
    }

    pub fn with_split(mut self, positive: ScalarFn, negative: ScalarFn) -> Self {
        self.split = Some(EoSplit { positive, negative });
        self
    }

    /// Burgers flux `u^2/2` with its exact EO split.
    pub fn burgers(lipschitz_bound: f64) -> Self {
        Self::new(
            scalar_fn(|u| 0.5 * u * u),
            scalar_fn(|u| u),
            lipschitz_bound,
        )
        .with_split(
            scalar_fn(|u| 0.5 * u.max(0.0) * u.max(0.0)),
            scalar_fn(|v| 0.5 * v.min(0.0) * v.min(0.0)),
        )
    }

    /// Zero flux (no transport).
    pub fn zero() -> Self {
        Self::new(scalar_fn(|_| 0.0), scalar_fn(|_| 0.0), 0.0)
            .with_split(scalar_fn(|_| 0.0), scalar_fn(|_| 0.0))
    }

    /// Linear flux `c*u`.
    pub fn linear(c: f64) -> Self {
        let split = if c >= 0.0 {
            (scalar_fn(move |u| c * u), scalar_fn(|_| 0.0))
        } else {
            (scalar_fn(|_| 0.0), scalar_fn(move |v| c * v))
        };
        Self::new(scalar_fn(move |u| c * u), scalar_fn(move |_| c), c.abs())
            .with_split(split.0, split.1)
    }
}

/// Estimates `max |f'|` by sampling 10^4 points over `[lo, hi]`.
pub fn estimate_flux_lipschitz(f_prime: &ScalarFn, lo: f64, hi: f64) -> f64 {
    let n = 10_000;
    let mut worst = 0.0f64;
    for k in 0..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        worst = worst.max(f_prime(x).abs());
    }
    worst
}

/// Nondecreasing diffusion nonlinearity with `phi(0) = 0`.
#[derive(Clone)]
pub struct DiffusionModel {
    pub phi: ScalarFn,
    pub lipschitz_bound: f64,
    /// Routes the deterministic substep to the linear-diffusion update
    /// (no pointwise `phi` evaluation).
    pub is_identity: bool,
}

impl DiffusionModel {
    pub fn new(phi: ScalarFn, lipschitz_bound: f64) -> Self {
        Self {
            phi,
            lipschitz_bound,
            is_identity: false,
        }
    }

    pub fn identity() -> Self {
        Self {
            phi: scalar_fn(|u| u),
            lipschitz_bound: 1.0,
            is_identity: true,
        }
    }

    pub fn zero() -> Self {
        Self {
            phi: scalar_fn(|_| 0.0),
            lipschitz_bound: 0.0,
            is_identity: false,
        }
    }

    /// Effective Lipschitz constant entering the CFL bound.
    pub fn effective_lipschitz(&self) -> f64 {
        if self.is_identity {
            1.0
        } else {
            self.lipschitz_bound
        }
    }
}

/// Brownian noise coefficient with declared Lipschitz bound.
#[derive(Clone)]
pub struct NoiseModel {
    pub sigma: ScalarFn,
    pub lipschitz_bound: f64,
}

/// Jump noise coefficient `eta(u; z)` with its contraction factor and the
/// driving Levy measure.
#[derive(Clone)]
pub struct JumpModel {
    pub eta: JumpFn,
    /// The factor `lambda* in [0, 1)` in
    /// `|eta(u;z) - eta(v;z)| <= lambda* |u - v| min(|z|, 1)`.
    pub lipschitz_factor: f64,
    pub levy: LevyMeasure,
}

/// Full model of the stochastic fractional conservation law: flux,
/// diffusion, fractional order, and the two noise coefficients.
#[derive(Clone)]
pub struct ProblemSpec {
    pub flux: FluxModel,
    pub diffusion: DiffusionModel,
    pub theta: f64,
    pub sigma: Option<NoiseModel>,
    pub jumps: Option<JumpModel>,
    /// Support bound `M`: both noise coefficients vanish for `|u| > M`.
    pub support_bound: f64,
    /// Range over which the declared Lipschitz bounds are meant to hold.
    pub state_range: (f64, f64),
}

impl ProblemSpec {
    /// Deterministic problem (`sigma = eta = 0`); `support_bound` is zero.
    pub fn deterministic(flux: FluxModel, diffusion: DiffusionModel, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(SolverError::DomainError(format!(
                "theta must lie strictly inside (0, 1), got {theta}"
            )));
        }
        Ok(Self {
            flux,
            diffusion,
            theta,
            sigma: None,
            jumps: None,
            support_bound: 0.0,
            state_range: (-1.0, 1.0),
        })
    }

    pub fn with_brownian(mut self, sigma: NoiseModel, support_bound: f64) -> Self {
        self.sigma = Some(sigma);
        self.support_bound = self.support_bound.max(support_bound);
        self
    }

    pub fn with_jumps(mut self, jumps: JumpModel, support_bound: f64) -> Self {
        self.jumps = Some(jumps);
        self.support_bound = self.support_bound.max(support_bound);
        self
    }

    pub fn with_state_range(mut self, lo: f64, hi: f64) -> Self {
        self.state_range = (lo, hi);
        self
    }

    /// Strips both noise terms, keeping the deterministic part.
    pub fn without_noise(&self) -> Self {
        let mut s = self.clone();
        s.sigma = None;
        s.jumps = None;
        s
    }

    /// Default validation range `[-2M, 2M]` (the invariant interval of the
    /// noise substep), falling back to the declared state range when `M = 0`.
    pub fn default_validation_range(&self) -> (f64, f64) {
        if self.support_bound > 0.0 {
            (-2.0 * self.support_bound, 2.0 * self.support_bound)
        } else {
            self.state_range
        }
    }
}

/// Outcome of probing one structural assumption.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub passed: bool,
    /// Largest observed violation magnitude (0 when the check passed).
    pub worst_violation: f64,
    pub detail: String,
}

/// Per-assumption validation verdicts for a model.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

const PROBE_TOL: f64 = 1e-9;

struct Probes {
    points: Vec<f64>,
    fd_step: f64,
}

fn probe_points(range: (f64, f64), probes: usize) -> Probes {
    let (lo, hi) = range;
    let n = probes.max(2);
    let points = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    Probes {
        points,
        fd_step: (hi - lo).abs().max(1.0) * 1e-7,
    }
}

/// Right-sided finite-difference Lipschitz probe: worst value of
/// `|g(u+h) - g(u)| - bound*h` across probes.
fn lipschitz_violation<F: Fn(f64) -> f64>(g: F, probes: &Probes, bound: f64) -> f64 {
    let h = probes.fd_step;
    let mut worst = 0.0f64;
    for &u in &probes.points {
        let d = (g(u + h) - g(u)).abs() - bound * h;
        worst = worst.max(d);
    }
    worst
}

/// Probe points strictly outside the support bound, on both sides.
fn outside_support(m: f64, probes: usize) -> Vec<f64> {
    let n = probes.max(2);
    let mut pts = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let u = m * (1.0 + k as f64 / n as f64) + 1e-6;
        pts.push(u);
        pts.push(-u);
    }
    pts
}

fn z_probes() -> [f64; 10] {
    [-2.0, -1.0, -0.5, -0.1, -0.01, 0.01, 0.1, 0.5, 1.0, 2.0]
}

/// Probes the model against the structural assumptions over `state_range`:
/// initial-data regularity is deferred to projection (A1); `phi`
/// nondecreasing with `phi(0)=0` and the declared Lipschitz bound (A2);
/// `f(0)=0`, the flux bound, and EO-split consistency (A3); the `sigma`
/// bound (A4); `sigma` support (A5); the `eta` contraction (A6); `eta`
/// support (A7); finite jump intensity (A8).
///
/// Returns a report; failures are recorded, never raised.
pub fn validate_spec(spec: &ProblemSpec, state_range: (f64, f64), probes: usize) -> ValidationReport {
    assert!(probes >= 2, "need at least two probe points");
    let p = probe_points(state_range, probes);
    let mut checks = Vec::with_capacity(8);

    checks.push(AssumptionCheck {
        id: "A1",
        passed: true,
        worst_violation: 0.0,
        detail: "initial data checked at projection time".into(),
    });

    // A2: phi nondecreasing, phi(0) = 0, Lipschitz.
    {
        let phi = &spec.diffusion.phi;
        let mut worst = phi(0.0).abs();
        for w in p.points.windows(2) {
            worst = worst.max(phi(w[0]) - phi(w[1]));
        }
        worst = worst.max(lipschitz_violation(|u| phi(u), &p, spec.diffusion.lipschitz_bound));
        checks.push(AssumptionCheck {
            id: "A2",
            passed: worst <= PROBE_TOL,
            worst_violation: worst.max(0.0),
            detail: "phi nondecreasing, phi(0)=0, Lipschitz".into(),
        });
    }

    // A3: f(0) = 0, Lipschitz, and the EO split recombines to f.
    {
        let f = &spec.flux.f;
        let mut worst = f(0.0).abs();
        worst = worst.max(lipschitz_violation(|u| f(u), &p, spec.flux.lipschitz_bound));
        if let Some(split) = &spec.flux.split {
            let f0 = f(0.0);
            for &u in &p.points {
                worst = worst.max(((split.positive)(u) + (split.negative)(u) + f0 - f(u)).abs());
            }
            for w in p.points.windows(2) {
                worst = worst.max((split.positive)(w[0]) - (split.positive)(w[1]));
                worst = worst.max((split.negative)(w[1]) - (split.negative)(w[0]));
            }
        }
        checks.push(AssumptionCheck {
            id: "A3",
            passed: worst <= PROBE_TOL,
            worst_violation: worst.max(0.0),
            detail: "f(0)=0, Lipschitz, EO split consistent".into(),
        });
    }

    // A4: sigma Lipschitz.
    {
        let worst = match &spec.sigma {
            Some(nm) => lipschitz_violation(|u| (nm.sigma)(u), &p, nm.lipschitz_bound),
            None => 0.0,
        };
        checks.push(AssumptionCheck {
            id: "A4",
            passed: worst <= PROBE_TOL,
            worst_violation: worst.max(0.0),
            detail: "sigma Lipschitz".into(),
        });
    }

    // A5: sigma(0) = 0 and sigma vanishes outside the support bound.
    {
        let worst = match &spec.sigma {
            Some(nm) => {
                let mut w = (nm.sigma)(0.0).abs();
                for u in outside_support(spec.support_bound, probes) {
                    w = w.max((nm.sigma)(u).abs());
                }
                w
            }
            None => 0.0,
        };
        checks.push(AssumptionCheck {
            id: "A5",
            passed: worst <= PROBE_TOL,
            worst_violation: worst,
            detail: "sigma(0)=0 and sigma=0 for |u|>M".into(),
        });
    }

    // A6: eta contraction in u with factor lambda* min(|z|, 1).
    {
        let worst = match &spec.jumps {
            Some(jm) => {
                let mut w = 0.0f64;
                for z in z_probes() {
                    let bound = jm.lipschitz_factor * z.abs().min(1.0);
                    w = w.max(lipschitz_violation(|u| (jm.eta)(u, z), &p, bound));
                }
                w
            }
            None => 0.0,
        };
        checks.push(AssumptionCheck {
            id: "A6",
            passed: worst <= PROBE_TOL,
            worst_violation: worst.max(0.0),
            detail: "eta Lipschitz in u with factor lambda* min(|z|,1)".into(),
        });
    }

    // A7: eta(0; z) = 0 and eta vanishes outside the support bound.
    {
        let worst = match &spec.jumps {
            Some(jm) => {
                let mut w = 0.0f64;
                for z in z_probes() {
                    w = w.max((jm.eta)(0.0, z).abs());
                    for u in outside_support(spec.support_bound, probes) {
                        w = w.max((jm.eta)(u, z).abs());
                    }
                }
                w
            }
            None => 0.0,
        };
        checks.push(AssumptionCheck {
            id: "A7",
            passed: worst <= PROBE_TOL,
            worst_violation: worst,
            detail: "eta(0;z)=0 and eta=0 for |u|>M".into(),
        });
    }

    // A8: finite jump intensity, monotone quantile table.
    {
        let (passed, detail) = match &spec.jumps {
            Some(jm) => {
                if jm.levy.alpha.is_finite() && jm.levy.alpha >= 0.0 {
                    (true, "jump intensity finite".to_string())
                } else {
                    (false, format!("jump intensity alpha={}", jm.levy.alpha))
                }
            }
            None => (true, "no jump component".to_string()),
        };
        checks.push(AssumptionCheck {
            id: "A8",
            passed,
            worst_violation: 0.0,
            detail,
        });
    }

    ValidationReport { checks }
}
