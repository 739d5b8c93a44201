//! Restricted descriptor language for model closures in config files:
//! polynomials, clipped polynomials, piecewise-affine interpolants, and a
//! couple of named built-ins. Arbitrary code is deliberately not accepted.

use serde::{Deserialize, Serialize};

use fractsplit_core::{scalar_fn, ScalarFn};

use crate::config::ConfigError;

/// A scalar function description that can be rebuilt from its serialized
/// form bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnDescriptor {
    /// `coeffs[0] + coeffs[1] x + coeffs[2] x^2 + ...`
    Polynomial { coeffs: Vec<f64> },
    /// Polynomial inside `support`, zero outside.
    ClippedPolynomial {
        coeffs: Vec<f64>,
        support: (f64, f64),
    },
    /// Linear interpolation through sorted `(x, y)` points, held constant
    /// beyond the first and last point.
    PiecewiseAffine { points: Vec<(f64, f64)> },
    /// Built-in: `zero` or `identity`.
    Named { name: String },
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
}

impl FnDescriptor {
    pub fn zero() -> Self {
        FnDescriptor::Named {
            name: "zero".into(),
        }
    }

    pub fn identity() -> Self {
        FnDescriptor::Named {
            name: "identity".into(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, FnDescriptor::Named { name } if name == "identity")
    }

    /// Structural validation with a config path for error reporting.
    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        let fail = |message: String| {
            Err(ConfigError::Schema {
                path: path.to_string(),
                message,
            })
        };
        match self {
            FnDescriptor::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return fail("polynomial needs at least one coefficient".into());
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return fail("polynomial coefficients must be finite".into());
                }
            }
            FnDescriptor::ClippedPolynomial { coeffs, support } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return fail("clipped polynomial needs finite coefficients".into());
                }
                if !(support.0 < support.1) {
                    return fail(format!(
                        "support must be an ordered interval, got [{}, {}]",
                        support.0, support.1
                    ));
                }
            }
            FnDescriptor::PiecewiseAffine { points } => {
                if points.len() < 2 {
                    return fail("piecewise-affine needs at least two points".into());
                }
                if points
                    .iter()
                    .any(|(x, y)| !x.is_finite() || !y.is_finite())
                {
                    return fail("piecewise-affine points must be finite".into());
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return fail("piecewise-affine x-coordinates must be strictly increasing".into());
                }
            }
            FnDescriptor::Named { name } => {
                if name != "zero" && name != "identity" {
                    return fail(format!(
                        "unknown built-in '{name}' (available: zero, identity)"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Builds the evaluator.
    pub fn build(&self) -> ScalarFn {
        match self.clone() {
            FnDescriptor::Polynomial { coeffs } => scalar_fn(move |x| horner(&coeffs, x)),
            FnDescriptor::ClippedPolynomial { coeffs, support } => scalar_fn(move |x| {
                if x < support.0 || x > support.1 {
                    0.0
                } else {
                    horner(&coeffs, x)
                }
            }),
            FnDescriptor::PiecewiseAffine { points } => scalar_fn(move |x| {
                if x <= points[0].0 {
                    return points[0].1;
                }
                if x >= points[points.len() - 1].0 {
                    return points[points.len() - 1].1;
                }
                let k = points.partition_point(|p| p.0 <= x) - 1;
                let (x0, y0) = points[k];
                let (x1, y1) = points[k + 1];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }),
            FnDescriptor::Named { name } => match name.as_str() {
                "identity" => scalar_fn(|x| x),
                _ => scalar_fn(|_| 0.0),
            },
        }
    }

    /// Builds the derivative (zero outside a clipped support / beyond the
    /// affine knots).
    pub fn build_derivative(&self) -> ScalarFn {
        match self.clone() {
            FnDescriptor::Polynomial { coeffs } => {
                scalar_fn(move |x| horner_derivative(&coeffs, x))
            }
            FnDescriptor::ClippedPolynomial { coeffs, support } => scalar_fn(move |x| {
                if x < support.0 || x > support.1 {
                    0.0
                } else {
                    horner_derivative(&coeffs, x)
                }
            }),
            FnDescriptor::PiecewiseAffine { points } => scalar_fn(move |x| {
                if x <= points[0].0 || x >= points[points.len() - 1].0 {
                    return 0.0;
                }
                let k = points.partition_point(|p| p.0 <= x) - 1;
                let (x0, y0) = points[k];
                let (x1, y1) = points[k + 1];
                (y1 - y0) / (x1 - x0)
            }),
            FnDescriptor::Named { name } => match name.as_str() {
                "identity" => scalar_fn(|_| 1.0),
                _ => scalar_fn(|_| 0.0),
            },
        }
    }
}
