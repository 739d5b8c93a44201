//! Uniform spatial and temporal grids on the symmetric truncated domain,
//! plus cell-averaged fields and initial-data projection.

use crate::error::{Result, SolverError};
use crate::quadrature::{GAUSS_LEGENDRE_5_NODES, GAUSS_LEGENDRE_5_WEIGHTS};

/// Uniform cells tiling `[-half_width, half_width]`.
///
/// Cell `j` covers `[-K + j*dx, -K + (j+1)*dx]` with center
/// `x_j = -K + (j + 1/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    dx: f64,
    num_cells: usize,
}

impl Grid1D {
    /// Builds the grid, requiring `2*half_width` to be an integer multiple of
    /// `dx` (relative slack 1e-12) and at least 3 cells.
    pub fn new(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() || !(dx > 0.0) || !dx.is_finite() {
            return Err(SolverError::DomainError(format!(
                "grid parameters must be positive and finite (half_width={half_width}, dx={dx})"
            )));
        }
        let ratio = 2.0 * half_width / dx;
        let num_cells = ratio.round();
        if num_cells < 3.0 {
            return Err(SolverError::DegenerateGrid {
                cells: num_cells.max(0.0) as usize,
            });
        }
        if (num_cells * dx - 2.0 * half_width).abs() > 1e-12 * half_width {
            return Err(SolverError::NonCommensurate { half_width, dx });
        }
        Ok(Self {
            half_width,
            dx,
            num_cells: num_cells as usize,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Center of cell `j`.
    pub fn cell_center(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.dx
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.num_cells).map(|j| self.cell_center(j)).collect()
    }

    /// Stable identity used to bind fields and stencils to one grid.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for bits in [
            self.half_width.to_bits(),
            self.dx.to_bits(),
            self.num_cells as u64,
        ] {
            h ^= bits;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }
}

/// Uniform partition of `[0, horizon]` into `num_steps` steps of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    dt: f64,
    num_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() || !(dt > 0.0) || !dt.is_finite() {
            return Err(SolverError::DomainError(format!(
                "time parameters must be positive and finite (horizon={horizon}, dt={dt})"
            )));
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-12 * horizon {
            return Err(SolverError::DomainError(format!(
                "horizon {horizon} is not an integer multiple of dt={dt}"
            )));
        }
        Ok(Self {
            horizon,
            dt,
            num_steps: steps as usize,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Cell-averaged solution values at one time level, bound to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    grid_fingerprint: u64,
}

impl ScalarField {
    /// Wraps cell values, rejecting non-finite entries and length mismatch.
    pub fn new(values: Vec<f64>, grid: &Grid1D) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SolverError::GridMismatch);
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteField { cell });
        }
        Ok(Self {
            values,
            grid_fingerprint: grid.fingerprint(),
        })
    }

    pub fn constant(value: f64, grid: &Grid1D) -> Result<Self> {
        Self::new(vec![value; grid.num_cells()], grid)
    }

    /// Internal constructor for fields produced by the kernels, which
    /// already know the grid binding.
    pub(crate) fn from_parts(values: Vec<f64>, grid_fingerprint: u64) -> Result<Self> {
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteField { cell });
        }
        Ok(Self {
            values,
            grid_fingerprint,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid_fingerprint(&self) -> u64 {
        self.grid_fingerprint
    }

    pub fn is_bound_to(&self, grid: &Grid1D) -> bool {
        self.grid_fingerprint == grid.fingerprint()
    }
}

/// L2 projection of `u0` onto cell averages via 5-node Gauss-Legendre
/// quadrature per cell (exact through degree 9).
pub fn project_initial<F: Fn(f64) -> f64>(u0: F, grid: &Grid1D) -> Result<ScalarField> {
    let half_dx = 0.5 * grid.dx();
    let mut values = Vec::with_capacity(grid.num_cells());
    let mut samples = [0.0; 5];
    for j in 0..grid.num_cells() {
        let mid = grid.cell_center(j);
        for (s, node) in samples.iter_mut().zip(GAUSS_LEGENDRE_5_NODES.iter()) {
            let x = mid + half_dx * node;
            let v = u0(x);
            if !v.is_finite() {
                return Err(SolverError::NonFiniteInput {
                    context: "initial data",
                    x,
                });
            }
            *s = v;
        }
        // Accumulate deviations from the midpoint sample (the center node is
        // the midpoint itself) so constant data projects exactly despite the
        // weight sum rounding away from 2.
        let fmid = samples[2];
        let mut acc = 0.0;
        for (s, weight) in samples.iter().zip(GAUSS_LEGENDRE_5_WEIGHTS.iter()) {
            acc += weight * (s - fmid);
        }
        values.push(fmid + 0.5 * acc);
    }
    ScalarField::new(values, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cell_grid_has_expected_centers() {
        let g = Grid1D::new(1.0, 0.5).unwrap();
        assert_eq!(g.num_cells(), 4);
        let centers = g.cell_centers();
        let expected = [-0.75, -0.25, 0.25, 0.75];
        for (c, e) in centers.iter().zip(expected.iter()) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn three_cell_grid_from_thirds() {
        let g = Grid1D::new(1.0, 2.0 / 3.0).unwrap();
        assert_eq!(g.num_cells(), 3);
    }

    #[test]
    fn rejects_non_commensurate_dx() {
        assert!(matches!(
            Grid1D::new(1.0, 0.3),
            Err(SolverError::NonCommensurate { .. })
        ));
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(matches!(
            Grid1D::new(1.0, 1.0),
            Err(SolverError::DegenerateGrid { cells: 2 })
        ));
    }

    #[test]
    fn centers_are_equispaced() {
        let g = Grid1D::new(2.5, 0.125).unwrap();
        let c = g.cell_centers();
        for w in c.windows(2) {
            assert!(((w[1] - w[0]) - g.dx()).abs() <= 1e-12);
        }
    }

    #[test]
    fn time_grid_counts_steps() {
        let t = TimeGrid::new(1.0, 0.002).unwrap();
        assert_eq!(t.num_steps(), 500);
        assert!(TimeGrid::new(1.0, 0.0003).is_err());
    }

    #[test]
    fn projection_of_constant_is_exact() {
        let g = Grid1D::new(1.0, 0.5).unwrap();
        let f = project_initial(|_| 3.25, &g).unwrap();
        for v in f.values() {
            assert_eq!(*v, 3.25);
        }
    }

    #[test]
    fn projection_of_linear_hits_cell_centers() {
        let g = Grid1D::new(1.0, 0.5).unwrap();
        let f = project_initial(|x| x, &g).unwrap();
        for (v, c) in f.values().iter().zip(g.cell_centers()) {
            assert!((v - c).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_exact_for_degree_nine() {
        let g = Grid1D::new(1.0, 0.25).unwrap();
        // p(x) = x^9 - 0.3 x^6 + 2 x^3 - 1; antiderivative evaluated per cell.
        let p = |x: f64| x.powi(9) - 0.3 * x.powi(6) + 2.0 * x.powi(3) - 1.0;
        let pint = |x: f64| x.powi(10) / 10.0 - 0.3 * x.powi(7) / 7.0 + 0.5 * x.powi(4) - x;
        let f = project_initial(p, &g).unwrap();
        for (j, v) in f.values().iter().enumerate() {
            let a = -1.0 + j as f64 * 0.25;
            let exact = (pint(a + 0.25) - pint(a)) / 0.25;
            assert!((v - exact).abs() <= 1e-12, "cell {j}: {v} vs {exact}");
        }
    }

    #[test]
    fn projection_rejects_non_finite_data() {
        let g = Grid1D::new(1.0, 0.5).unwrap();
        let r = project_initial(|x| 1.0 / (x - 0.25), &g);
        assert!(matches!(r, Err(SolverError::NonFiniteInput { .. })));
    }

    #[test]
    fn field_rejects_non_finite_values() {
        let g = Grid1D::new(1.0, 0.5).unwrap();
        let r = ScalarField::new(vec![0.0, f64::NAN, 0.0, 0.0], &g);
        assert!(matches!(r, Err(SolverError::NonFiniteField { cell: 1 })));
    }

    #[test]
    fn fingerprint_distinguishes_grids() {
        let a = Grid1D::new(1.0, 0.5).unwrap();
        let b = Grid1D::new(1.0, 0.25).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), Grid1D::new(1.0, 0.5).unwrap().fingerprint());
    }
}
