//! Seeded random streams and the Euler-Maruyama noise substep: one
//! Brownian increment, one compound-Poisson jump batch, and the
//! compensator drift per splitting step, shared across all cells.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Result, SolverError};
use crate::grid::ScalarField;
use crate::model::{JumpFn, ProblemSpec, ScalarFn};
use crate::quadrature::adaptive_simpson;

/// Counter-based deterministic stream: ChaCha12 keyed by the root seed with
/// the path index as the stream number. Identical `(seed, index)` pairs
/// reproduce the draw sequence bit for bit.
pub struct RngStream {
    seed: u64,
    index: u64,
    inner: ChaCha12Rng,
    draws: u64,
}

impl RngStream {
    /// Generator/stream-derivation tag recorded in output metadata.
    pub const ALGORITHM: &'static str = "chacha12-stream/box-muller";

    pub fn new(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Self {
            seed,
            index,
            inner,
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Number of uniform variates consumed so far (instrumentation for the
    /// spatial-coherence contract: draws per step must not depend on the
    /// number of cells).
    pub fn draw_count(&self) -> u64 {
        self.draws
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.inner.random::<f64>()
    }
}

/// Normal draw with variance `dt` (Box-Muller, cosine branch; two uniforms
/// per call).
pub fn sample_brownian_increment(rng: &mut RngStream, dt: f64) -> f64 {
    assert!(dt > 0.0, "dt must be positive");
    let u1 = 1.0 - rng.uniform(); // (0, 1]
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos() * dt.sqrt()
}

/// Poisson draw with mean `alpha * dt`, by counting exponential
/// inter-arrivals (Knuth's uniform-product form). Zero intensity consumes
/// no draws.
pub fn sample_jump_count(rng: &mut RngStream, alpha: f64, dt: f64) -> u64 {
    assert!(alpha >= 0.0, "alpha must be nonnegative");
    assert!(dt > 0.0, "dt must be positive");
    if alpha == 0.0 {
        return 0;
    }
    let limit = (-alpha * dt).exp();
    let mut count = 0u64;
    let mut product = 1.0;
    loop {
        product *= 1.0 - rng.uniform();
        if product <= limit {
            return count;
        }
        count += 1;
    }
}

/// Draws one jump mark with law `m(dz)/alpha` by inverse-CDF sampling.
pub fn sample_mark(rng: &mut RngStream, levy: &LevyMeasure) -> Result<f64> {
    let sampler = levy.sampler.as_ref().ok_or(SolverError::SamplerUnavailable)?;
    Ok(sampler.quantile(rng.uniform()))
}

/// Strategy for drawing marks: turns a uniform variate into a jump size.
pub trait MarkSampler: Send + Sync {
    fn quantile(&self, u: f64) -> f64;
    fn describe(&self) -> String;
}

/// Closed-form inverse CDF.
pub struct InverseCdfSampler(pub ScalarFn);

impl MarkSampler for InverseCdfSampler {
    fn quantile(&self, u: f64) -> f64 {
        (self.0)(u)
    }

    fn describe(&self) -> String {
        "inverse-cdf".into()
    }
}

/// Degenerate law: every mark equals a fixed value.
pub struct PointMassSampler(pub f64);

impl MarkSampler for PointMassSampler {
    fn quantile(&self, _u: f64) -> f64 {
        self.0
    }

    fn describe(&self) -> String {
        format!("point-mass at {}", self.0)
    }
}

/// Tabulated quantiles built once by numeric CDF inversion of a density;
/// sampling is O(1) by linear interpolation.
pub struct QuantileTableSampler {
    table: Vec<f64>,
}

impl QuantileTableSampler {
    pub const DEFAULT_NODES: usize = 1 << 14;

    /// Builds the table from a density on `[support.0, support.1]`. The CDF
    /// is accumulated by the trapezoid rule on a fine grid, normalized, and
    /// inverted at equispaced probability levels.
    pub fn from_density(density: &ScalarFn, support: (f64, f64), nodes: usize) -> Result<Self> {
        let (a, b) = support;
        if !(b > a) || nodes < 2 {
            return Err(SolverError::DomainError(
                "quantile table needs support with positive length and >= 2 nodes".into(),
            ));
        }
        let fine = (4 * nodes).max(1 << 12);
        let h = (b - a) / fine as f64;
        let mut cdf = Vec::with_capacity(fine + 1);
        let mut acc = 0.0;
        let mut prev = density(a).max(0.0);
        cdf.push(0.0);
        for k in 1..=fine {
            let x = a + k as f64 * h;
            let d = density(x).max(0.0);
            if !d.is_finite() || !prev.is_finite() {
                return Err(SolverError::NonFiniteInput {
                    context: "mark density",
                    x,
                });
            }
            acc += 0.5 * (prev + d) * h;
            cdf.push(acc);
            prev = d;
        }
        if acc <= 0.0 {
            return Err(SolverError::DomainError(
                "mark density has zero mass on its support".into(),
            ));
        }
        let total = acc;
        let mut table = Vec::with_capacity(nodes);
        let mut k = 0usize;
        for i in 0..nodes {
            let target = total * i as f64 / (nodes - 1) as f64;
            while k + 1 < cdf.len() && cdf[k + 1] < target {
                k += 1;
            }
            let (c0, c1) = (cdf[k], cdf[(k + 1).min(fine)]);
            let x0 = a + k as f64 * h;
            let x = if c1 > c0 {
                x0 + h * ((target - c0) / (c1 - c0)).clamp(0.0, 1.0)
            } else {
                x0
            };
            table.push(x);
        }
        if table.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolverError::DomainError(
                "tabulated quantiles are not strictly monotone".into(),
            ));
        }
        Ok(Self { table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl MarkSampler for QuantileTableSampler {
    fn quantile(&self, u: f64) -> f64 {
        let n = self.table.len();
        let pos = u.clamp(0.0, 1.0) * (n - 1) as f64;
        let k = (pos.floor() as usize).min(n - 2);
        let frac = pos - k as f64;
        self.table[k] + frac * (self.table[k + 1] - self.table[k])
    }

    fn describe(&self) -> String {
        format!("quantile-table[{}]", self.table.len())
    }
}

/// Strategy for the compensator `c(u) = integral of eta(u; z) m(dz)`.
pub trait Compensator: Send + Sync {
    fn value(&self, eta: &JumpFn, u: f64) -> Result<f64>;
}

/// User-supplied closed form for `c(u)`.
pub struct ClosedFormCompensator(pub ScalarFn);

impl Compensator for ClosedFormCompensator {
    fn value(&self, _eta: &JumpFn, u: f64) -> Result<f64> {
        Ok((self.0)(u))
    }
}

/// Adaptive quadrature of `eta(u; z) rho(z)` over the density support.
pub struct QuadratureCompensator {
    pub density: ScalarFn,
    pub support: (f64, f64),
    pub tol: f64,
}

impl Compensator for QuadratureCompensator {
    fn value(&self, eta: &JumpFn, u: f64) -> Result<f64> {
        let rho = &self.density;
        adaptive_simpson(
            |z| eta(u, z) * rho(z),
            self.support.0,
            self.support.1,
            self.tol,
            40,
        )
    }
}

/// Finite atomic measure: `c(u) = sum_k w_k eta(u; z_k)`.
pub struct AtomicCompensator {
    pub atoms: Vec<(f64, f64)>, // (z, weight)
}

impl Compensator for AtomicCompensator {
    fn value(&self, eta: &JumpFn, u: f64) -> Result<f64> {
        Ok(self.atoms.iter().map(|&(z, w)| w * eta(u, z)).sum())
    }
}

/// Finite-mass Levy measure: total intensity, a mark sampler for the
/// normalized law, and a compensator strategy.
#[derive(Clone)]
pub struct LevyMeasure {
    pub alpha: f64,
    pub sampler: Option<Arc<dyn MarkSampler>>,
    pub compensator: Option<Arc<dyn Compensator>>,
}

impl LevyMeasure {
    pub fn new(
        alpha: f64,
        sampler: Option<Arc<dyn MarkSampler>>,
        compensator: Option<Arc<dyn Compensator>>,
    ) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(SolverError::DomainError(format!(
                "jump intensity must be finite and nonnegative, got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            sampler,
            compensator,
        })
    }

    /// No jumps at all.
    pub fn none() -> Self {
        Self {
            alpha: 0.0,
            sampler: None,
            compensator: None,
        }
    }
}

/// Compensator value `c(u)`; zero when the intensity vanishes.
pub fn compensator_value(levy: &LevyMeasure, eta: &JumpFn, u: f64) -> Result<f64> {
    if levy.alpha == 0.0 {
        return Ok(0.0);
    }
    match &levy.compensator {
        Some(c) => c.value(eta, u),
        None => Err(SolverError::SamplerUnavailable),
    }
}

/// Noise-substep options.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmOptions {
    /// Clamp cells that start inside `[-2M, 2M]` back into that interval
    /// after the update, enforcing the invariant interval pathwise instead
    /// of only statistically.
    pub clip_to_invariant_interval: bool,
}

/// One Euler-Maruyama step of the noise operator:
/// `u_j' = u_j + sigma(u_j) dW - dt c(u_j) + sum_i eta(u_j, xi_i)`.
///
/// The Brownian increment, the jump count, and the marks are drawn once and
/// shared by every cell (the driving noise does not depend on x). All jumps
/// in the step are applied at the pre-step state. A model with neither noise
/// coefficient returns the field unchanged without consuming draws.
pub fn step_em(
    field: &ScalarField,
    spec: &ProblemSpec,
    dt: f64,
    rng: &mut RngStream,
    opts: &EmOptions,
) -> Result<ScalarField> {
    assert!(dt > 0.0, "dt must be positive");
    let jumps = spec
        .jumps
        .as_ref()
        .filter(|jm| jm.levy.alpha > 0.0);
    if spec.sigma.is_none() && jumps.is_none() {
        return Ok(field.clone());
    }

    let dw = spec
        .sigma
        .as_ref()
        .map(|_| sample_brownian_increment(rng, dt));

    let mut marks = Vec::new();
    if let Some(jm) = jumps {
        let count = sample_jump_count(rng, jm.levy.alpha, dt);
        marks.reserve(count as usize);
        for _ in 0..count {
            marks.push(sample_mark(rng, &jm.levy)?);
        }
    }

    let clip_bound = 2.0 * spec.support_bound;
    let mut next = Vec::with_capacity(field.len());
    for &u in field.values() {
        let mut v = u;
        if let (Some(nm), Some(dw)) = (&spec.sigma, dw) {
            v += (nm.sigma)(u) * dw;
        }
        if let Some(jm) = jumps {
            v -= dt * compensator_value(&jm.levy, &jm.eta, u)?;
            for &xi in &marks {
                v += (jm.eta)(u, xi);
            }
        }
        if opts.clip_to_invariant_interval && u.abs() <= clip_bound {
            v = v.clamp(-clip_bound, clip_bound);
        }
        next.push(v);
    }
    ScalarField::from_parts(next, field.grid_fingerprint())
}
