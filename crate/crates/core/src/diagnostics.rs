//! Norms, total variation, grid restriction, convergence-order fits, and
//! bound verdicts for ensemble statistics.

use crate::error::{Result, SolverError};
use crate::grid::{Grid1D, ScalarField};
use crate::model::ProblemSpec;
use crate::splitting::EnsembleStats;

/// Sup norm `max_j |u_j|`.
pub fn linf_norm(field: &ScalarField) -> f64 {
    field.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Discrete total variation over interior interfaces,
/// `sum_j |u_{j+1} - u_j|`. The constant boundary prolongation contributes
/// nothing, so it is deliberately excluded.
pub fn total_variation(field: &ScalarField) -> f64 {
    field
        .values()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .sum()
}

/// `sum_j |a_j - b_j| dx` for fields on the same grid.
pub fn l1_distance(a: &ScalarField, b: &ScalarField, dx: f64) -> Result<f64> {
    if a.grid_fingerprint() != b.grid_fingerprint() {
        return Err(SolverError::GridMismatch);
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * dx)
}

/// Restriction by cell averaging: each coarse value is the mean of the fine
/// cells it covers. Requires the fine grid to refine the coarse one by an
/// integer factor on the same domain.
pub fn restrict(
    fine: &ScalarField,
    fine_grid: &Grid1D,
    coarse_grid: &Grid1D,
) -> Result<ScalarField> {
    if !fine.is_bound_to(fine_grid) {
        return Err(SolverError::GridMismatch);
    }
    let ratio_real = coarse_grid.dx() / fine_grid.dx();
    let ratio = ratio_real.round();
    if ratio < 1.0
        || (ratio_real - ratio).abs() > 1e-9 * ratio
        || (fine_grid.half_width() - coarse_grid.half_width()).abs()
            > 1e-12 * coarse_grid.half_width()
        || fine_grid.num_cells() != coarse_grid.num_cells() * ratio as usize
    {
        return Err(SolverError::IncompatibleRefinement {
            fine_dx: fine_grid.dx(),
            coarse_dx: coarse_grid.dx(),
        });
    }
    let r = ratio as usize;
    let fine_vals = fine.values();
    let values = (0..coarse_grid.num_cells())
        .map(|j| fine_vals[j * r..(j + 1) * r].iter().sum::<f64>() / r as f64)
        .collect();
    ScalarField::new(values, coarse_grid)
}

/// Least-squares slope of `log(error)` against `log(scale)` for a set of
/// `(scale, error)` points. Needs at least three points with positive
/// entries and non-degenerate scales.
pub fn observed_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(SolverError::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(s, e)| !(s > 0.0) || !(e > 0.0)) {
        return Err(SolverError::DegenerateFit(
            "scales and errors must be strictly positive".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return Err(SolverError::DegenerateFit("all scales coincide".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Ok(sxy / sxx)
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceLevel {
    pub dx: f64,
    pub dt: f64,
    pub l1_error: f64,
}

/// Grid-refinement error table with its fitted order.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    pub fitted_order: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

impl ConvergenceReport {
    pub fn from_levels(levels: Vec<ConvergenceLevel>) -> Result<Self> {
        if levels.windows(2).any(|w| w[1].dx >= w[0].dx) {
            return Err(SolverError::DegenerateFit(
                "levels must have strictly decreasing dx".into(),
            ));
        }
        let points: Vec<(f64, f64)> = levels.iter().map(|l| (l.dx, l.l1_error)).collect();
        let fitted_order = observed_order(&points)?;
        let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let n = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let residual = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let pred = ybar + fitted_order * (x - xbar);
                (y - pred) * (y - pred)
            })
            .sum::<f64>()
            / n)
            .sqrt();
        Ok(Self {
            levels,
            fitted_order,
            residual,
        })
    }
}

/// Tolerances for the bound verdicts.
#[derive(Debug, Clone, Copy)]
pub struct VerdictTolerances {
    /// Relative slack on the sup-norm bound.
    pub linf: f64,
    /// Relative slack on the expected-TV bound.
    pub tv: f64,
    /// Largest admissible fraction of `(path, time)` sup-norm violations.
    pub max_linf_violation_fraction: f64,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        Self {
            linf: 0.02,
            tv: 0.05,
            max_linf_violation_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinfVerdict {
    /// The bound `max(2M, ||u0||_inf)`.
    pub bound: f64,
    pub tolerance: f64,
    /// Fraction of `(path, time)` samples with `||u||_inf` beyond the
    /// slackened bound.
    pub violation_fraction: f64,
    pub max_fraction: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct TvVerdict {
    /// `TV(u0)`.
    pub reference: f64,
    pub tolerance: f64,
    /// Largest `mean TV / TV(u0)` over recorded times (absolute TV when the
    /// reference vanishes).
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Pass/fail record for the two a-priori bounds, with measured slack. The
/// verdict reports; it never asserts.
#[derive(Debug, Clone, Copy)]
pub struct VerdictRecord {
    pub linf: LinfVerdict,
    pub tv: TvVerdict,
}

impl VerdictRecord {
    pub fn passed(&self) -> bool {
        self.linf.passed && self.tv.passed
    }
}

/// Checks the ensemble against the uniform sup-norm bound
/// (`||u||_inf <= max(2M, ||u0||_inf)`, statistically) and the expected-TV
/// bound (`E[TV(u^n)] <= TV(u0)`).
pub fn bound_verdicts(
    stats: &EnsembleStats,
    u0: &ScalarField,
    spec: &ProblemSpec,
    tol: &VerdictTolerances,
) -> VerdictRecord {
    let bound = (2.0 * spec.support_bound).max(linf_norm(u0));
    let slackened = bound * (1.0 + tol.linf);
    let mut violations = 0usize;
    let mut samples = 0usize;
    for path in &stats.per_path_linf {
        for &v in path {
            samples += 1;
            if v > slackened {
                violations += 1;
            }
        }
    }
    let violation_fraction = if samples > 0 {
        violations as f64 / samples as f64
    } else {
        0.0
    };
    let linf = LinfVerdict {
        bound,
        tolerance: tol.linf,
        violation_fraction,
        max_fraction: tol.max_linf_violation_fraction,
        passed: violation_fraction <= tol.max_linf_violation_fraction,
    };

    let reference = total_variation(u0);
    let (worst_ratio, tv_passed) = if reference > 0.0 {
        let worst = stats
            .mean_tv
            .iter()
            .fold(0.0f64, |m, &v| m.max(v / reference));
        (worst, worst <= 1.0 + tol.tv)
    } else {
        let worst = stats.mean_tv.iter().fold(0.0f64, |m, &v| m.max(v));
        (worst, worst <= 1e-12)
    };
    let tv = TvVerdict {
        reference,
        tolerance: tol.tv,
        worst_ratio,
        passed: tv_passed,
    };

    VerdictRecord { linf, tv }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::project_initial;

    fn grid(n: usize, dx: f64) -> Grid1D {
        Grid1D::new(n as f64 * dx / 2.0, dx).unwrap()
    }

    #[test]
    fn linf_of_simple_fields() {
        let g = grid(4, 0.5);
        assert_eq!(linf_norm(&ScalarField::constant(-2.5, &g).unwrap()), 2.5);
        assert_eq!(linf_norm(&ScalarField::constant(0.0, &g).unwrap()), 0.0);
    }

    #[test]
    fn linf_of_riemann_step_datum() {
        let g = Grid1D::new(1.0, 0.25).unwrap();
        let f = project_initial(|x| if x < 0.0 { -0.5 } else { 0.5 }, &g).unwrap();
        assert_eq!(linf_norm(&f), 0.5);
        assert_eq!(total_variation(&f), 1.0);
    }

    #[test]
    fn tv_of_monotone_ramp_telescopes() {
        let g = grid(5, 1.0);
        let f = ScalarField::new(vec![-1.0, -0.25, 0.1, 0.4, 2.0], &g).unwrap();
        assert!((total_variation(&f) - 3.0).abs() < 1e-15);
        assert_eq!(total_variation(&ScalarField::constant(7.0, &g).unwrap()), 0.0);
    }

    #[test]
    fn restrict_identity_and_constant() {
        let g = grid(8, 0.25);
        let f = ScalarField::new((0..8).map(|i| i as f64).collect(), &g).unwrap();
        let same = restrict(&f, &g, &g).unwrap();
        assert_eq!(same.values(), f.values());

        let coarse = grid(4, 0.5);
        let c = restrict(&ScalarField::constant(1.5, &g).unwrap(), &g, &coarse).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn restrict_linear_field_hits_coarse_centers() {
        let fine = Grid1D::new(1.0, 0.25).unwrap();
        let coarse = Grid1D::new(1.0, 0.5).unwrap();
        let f = project_initial(|x| x, &fine).unwrap();
        let c = restrict(&f, &fine, &coarse).unwrap();
        for (v, x) in c.values().iter().zip(coarse.cell_centers()) {
            assert!((v - x).abs() < 1e-14);
        }
    }

    #[test]
    fn restrict_rejects_non_integer_ratio() {
        let fine = Grid1D::new(1.0, 0.25).unwrap();
        let coarse = Grid1D::new(1.0, 2.0 / 3.0).unwrap();
        let f = ScalarField::constant(0.0, &fine).unwrap();
        assert!(matches!(
            restrict(&f, &fine, &coarse),
            Err(SolverError::IncompatibleRefinement { .. })
        ));
    }

    #[test]
    fn restrict_preserves_mass() {
        let fine = Grid1D::new(1.0, 0.125).unwrap();
        let coarse = Grid1D::new(1.0, 0.5).unwrap();
        let f = project_initial(|x| (3.0 * x).sin() + x * x, &fine).unwrap();
        let c = restrict(&f, &fine, &coarse).unwrap();
        let mass_f: f64 = f.values().iter().sum::<f64>() * fine.dx();
        let mass_c: f64 = c.values().iter().sum::<f64>() * coarse.dx();
        assert!((mass_f - mass_c).abs() < 1e-12);
    }

    #[test]
    fn observed_order_recovers_exact_slopes() {
        let pts1: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125].iter().map(|&h| (h, 3.0 * h)).collect();
        assert!((observed_order(&pts1).unwrap() - 1.0).abs() < 1e-12);
        let pts2: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|&h| (h, 0.7 * h * h)).collect();
        assert!((observed_order(&pts2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn observed_order_scale_invariant() {
        let pts: Vec<(f64, f64)> = [0.4f64, 0.2, 0.1, 0.05]
            .iter()
            .map(|&h| (h, h.powf(0.5) * (1.0 + 0.01 * h)))
            .collect();
        let a = observed_order(&pts).unwrap();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(h, e)| (h, 42.0 * e)).collect();
        let b = observed_order(&scaled).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((a - 0.5).abs() < 0.02);
    }

    #[test]
    fn observed_order_rejects_degenerate_input() {
        assert!(observed_order(&[(0.5, 1.0), (0.25, 0.5)]).is_err());
        assert!(observed_order(&[(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)]).is_err());
        assert!(observed_order(&[(0.5, 1.0), (0.5, 0.5), (0.5, 0.25)]).is_err());
    }

    #[test]
    fn convergence_report_requires_decreasing_dx() {
        let levels = vec![
            ConvergenceLevel { dx: 0.1, dt: 0.01, l1_error: 0.1 },
            ConvergenceLevel { dx: 0.2, dt: 0.02, l1_error: 0.2 },
            ConvergenceLevel { dx: 0.05, dt: 0.005, l1_error: 0.05 },
        ];
        assert!(ConvergenceReport::from_levels(levels).is_err());
    }
}
