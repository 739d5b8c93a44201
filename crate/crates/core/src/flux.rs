//! Engquist-Osher monotone numerical flux and its divergence on a field.

use crate::error::{Result, SolverError};
use crate::grid::ScalarField;
use crate::model::FluxModel;
use crate::quadrature::integrate_from_zero;

const QUAD_TOL: f64 = 1e-10;
const QUAD_DEPTH: u32 = 40;

/// Two-point Engquist-Osher flux
/// `F(u, v) = int_0^u max(f'(s), 0) ds + int_0^v min(f'(s), 0) ds + f(0)`.
///
/// Uses the model's closed-form split when present, otherwise adaptive
/// Simpson quadrature of the two integrals.
pub fn eo_flux(model: &FluxModel, u: f64, v: f64) -> Result<f64> {
    let f0 = (model.f)(0.0);
    if let Some(split) = &model.split {
        return Ok((split.positive)(u) + (split.negative)(v) + f0);
    }
    let fp = &model.f_prime;
    let pos = integrate_from_zero(|s| fp(s).max(0.0), u, QUAD_TOL, QUAD_DEPTH)?;
    let neg = integrate_from_zero(|s| fp(s).min(0.0), v, QUAD_TOL, QUAD_DEPTH)?;
    Ok(pos + neg + f0)
}

/// Upwind flux divergence `[F(u_j, u_{j+1}) - F(u_{j-1}, u_j)] / dx` with
/// the field prolonged constantly by the boundary values.
pub fn eo_divergence(
    model: &FluxModel,
    field: &ScalarField,
    dx: f64,
    boundary_left: f64,
    boundary_right: f64,
) -> Result<ScalarField> {
    let out = eo_divergence_raw(model, field.values(), dx, boundary_left, boundary_right)?;
    ScalarField::from_parts(out, field.grid_fingerprint())
}

pub(crate) fn eo_divergence_raw(
    model: &FluxModel,
    values: &[f64],
    dx: f64,
    boundary_left: f64,
    boundary_right: f64,
) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 {
        return Err(SolverError::GridMismatch);
    }
    // interface_flux[j] = F(u_{j-1}, u_j) with ghost values at both ends
    let mut interface_flux = Vec::with_capacity(n + 1);
    interface_flux.push(eo_flux(model, boundary_left, values[0])?);
    for j in 1..n {
        interface_flux.push(eo_flux(model, values[j - 1], values[j])?);
    }
    interface_flux.push(eo_flux(model, values[n - 1], boundary_right)?);

    Ok((0..n)
        .map(|j| (interface_flux[j + 1] - interface_flux[j]) / dx)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::model::{scalar_fn, FluxModel};

    fn burgers_no_split() -> FluxModel {
        FluxModel::new(scalar_fn(|u| 0.5 * u * u), scalar_fn(|u| u), 1.0)
    }

    #[test]
    fn burgers_closed_form_values() {
        let m = FluxModel::burgers(1.0);
        assert!((eo_flux(&m, 1.0, -1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((eo_flux(&m, 2.0, 3.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_fallback_matches_split() {
        let split = FluxModel::burgers(1.0);
        let quad = burgers_no_split();
        for (u, v) in [(1.0, -1.0), (2.0, 3.0), (-0.7, 0.3), (0.0, 0.0), (-2.0, -1.5)] {
            let a = eo_flux(&split, u, v).unwrap();
            let b = eo_flux(&quad, u, v).unwrap();
            assert!((a - b).abs() < 1e-9, "({u},{v}): {a} vs {b}");
        }
    }

    #[test]
    fn consistency_on_the_diagonal() {
        let m = burgers_no_split();
        for k in 0..100 {
            let u = -2.0 + 4.0 * k as f64 / 99.0;
            let fu = 0.5 * u * u;
            assert!((eo_flux(&m, u, u).unwrap() - fu).abs() <= 1e-9);
        }
    }

    #[test]
    fn monotone_in_both_arguments() {
        let m = FluxModel::burgers(1.0);
        let h = 1e-4;
        for k in 0..50 {
            let u = -1.5 + 3.0 * (k as f64) / 49.0;
            let v = 1.5 - 3.0 * (k as f64) / 49.0;
            let base = eo_flux(&m, u, v).unwrap();
            assert!(eo_flux(&m, u + h, v).unwrap() >= base - 1e-8);
            assert!(eo_flux(&m, u, v + h).unwrap() <= base + 1e-8);
        }
    }

    #[test]
    fn constant_field_has_zero_divergence() {
        let g = Grid1D::new(1.0, 0.5).unwrap();
        let f = ScalarField::constant(0.8, &g).unwrap();
        let m = FluxModel::burgers(1.0);
        let d = eo_divergence(&m, &f, g.dx(), 0.8, 0.8).unwrap();
        for v in d.values() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn burgers_spike_stencil_hand_check() {
        // field {0, 1, 0} with zero extensions; F(u,v) = (u+)^2/2 + (v-)^2/2
        // interfaces: F(0,0)=0, F(0,1)=0, F(1,0)=1/2, F(0,0)=0
        let g = Grid1D::new(1.5, 1.0).unwrap();
        let f = ScalarField::new(vec![0.0, 1.0, 0.0], &g).unwrap();
        let m = FluxModel::burgers(1.0);
        let d = eo_divergence(&m, &f, 1.0, 0.0, 0.0).unwrap();
        let expected = [0.0, 0.5, -0.5];
        for (v, e) in d.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15, "{:?}", d.values());
        }
    }

    #[test]
    fn linear_flux_reduces_to_upwind_difference() {
        let g = Grid1D::new(2.0, 1.0).unwrap();
        let vals = vec![0.3, -0.4, 1.2, 0.0];
        let f = ScalarField::new(vals.clone(), &g).unwrap();
        let m = FluxModel::linear(1.0);
        let d = eo_divergence(&m, &f, 1.0, vals[0], vals[3]).unwrap();
        for j in 0..4 {
            let left = if j == 0 { vals[0] } else { vals[j - 1] };
            assert!((d.values()[j] - (vals[j] - left)).abs() < 1e-15);
        }
    }
}
