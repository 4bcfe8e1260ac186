//! Orientation-preserving circle diffeomorphisms `phi = id + f` with
//! periodic displacement `f`, stored in the chart `|f(0)| < 1/2`,
//! `1 + f' > 0`. Composition acts on fields by trigonometric interpolation;
//! inversion is pointwise monotone Newton with a bisection fallback on the
//! lift.

use crate::spectral::Field;
use crate::{Error, Result};

/// Numerical stand-in for the open condition `f' > -1`.
pub const DEFAULT_SLOPE_FLOOR: f64 = 1e-6;

/// Default target for `sup_i |phi(psi(x_i)) - x_i|` in [`Diffeo::invert`].
pub const DEFAULT_INVERSION_TOL: f64 = 1e-12;

const MAX_INVERT_ITER: usize = 100;

/// A circle diffeomorphism, held by the displacement of a lift.
///
/// Immutable after construction; the constructor enforces the chart
/// normalization and the discrete slope condition, so every held value is a
/// valid orientation-preserving diffeomorphism.
#[derive(Debug, Clone)]
pub struct Diffeo {
    f: Field,
    min_slope: f64,
}

impl Diffeo {
    /// The identity map on an `n`-point grid.
    pub fn identity(n: usize) -> Result<Self> {
        Ok(Diffeo {
            f: Field::zeros(n)?,
            min_slope: 1.0,
        })
    }

    /// Build `id + f`, renormalizing the lift into the chart `|f(0)| < 1/2`
    /// (lifts of one circle map differ by integers, so input given in the
    /// alternative chart `0 < f(0) < 1` lands here too) and checking
    /// `1 + f'(x_i) > slope_floor` at all grid points.
    pub fn from_displacement(f: Field, slope_floor: f64) -> Result<Self> {
        let shift = f.values()[0].round();
        let f = if shift == 0.0 { f } else { f.map(|v| v - shift) };
        if f.values()[0].abs() >= 0.5 {
            return Err(Error::InvalidDiffeo {
                reason: format!("displacement at 0 is {:.6}, outside the chart", f.values()[0]),
            });
        }
        let slope = f.deriv(1);
        let min_slope = 1.0 + slope.values().iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_slope > slope_floor) {
            return Err(Error::InvalidDiffeo {
                reason: format!("min slope {min_slope:.3e} at or below floor {slope_floor:.1e}"),
            });
        }
        Ok(Diffeo { f, min_slope })
    }

    /// The periodic displacement `f` of the stored lift.
    pub fn displacement(&self) -> &Field {
        &self.f
    }

    pub fn grid_size(&self) -> usize {
        self.f.len()
    }

    /// Minimum of `1 + f'` over the grid.
    pub fn min_slope(&self) -> f64 {
        self.min_slope
    }

    /// Lift values `phi(x_i) = x_i + f(x_i)`.
    pub fn lift(&self) -> Vec<f64> {
        self.f
            .values()
            .iter()
            .zip(self.f.grid())
            .map(|(&fi, xi)| xi + fi)
            .collect()
    }

    /// Lift evaluated at an arbitrary real (equivariant: `phi(x+1) = phi(x)+1`).
    pub fn eval(&self, x: f64) -> f64 {
        x + self.f.eval(x)
    }

    /// Lift value and slope at an arbitrary real.
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let (v, s) = self.f.eval_with_deriv(x);
        (x + v, 1.0 + s)
    }

    /// `phi' = 1 + f'` as a grid field; strictly positive for valid input.
    pub fn slope(&self) -> Field {
        self.f.deriv(1).map(|s| 1.0 + s)
    }

    /// Numerical inverse: solves `phi(psi_i) = x_i` per grid point by
    /// monotone Newton with bisection fallback on the lift, then
    /// renormalizes the result into the chart.
    ///
    /// Fails with `NoConvergence` when a point needs more than the
    /// iteration cap (signals a near-degenerate slope), or with
    /// `InvalidDiffeo` when the sampled inverse violates the slope floor.
    pub fn invert(&self, tol: f64, slope_floor: f64) -> Result<Diffeo> {
        let n = self.grid_size();
        let fvals = self.f.values();
        let fmax = fvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let fmin = fvals.iter().cloned().fold(f64::INFINITY, f64::min);
        let pad = 1e-9 + 1e-3 * (fmax - fmin);

        let mut disp = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64 / n as f64;
            // Bracket the root of r(y) = y + f(y) - x; r is increasing.
            let mut lo = x - fmax - pad;
            let mut hi = x - fmin + pad;
            for _ in 0..64 {
                if self.eval(lo) <= x {
                    break;
                }
                lo -= 0.5;
            }
            for _ in 0..64 {
                if self.eval(hi) >= x {
                    break;
                }
                hi += 0.5;
            }

            let mut y = x - self.f.eval(x); // exact to O(f^2)
            y = y.clamp(lo, hi);
            let mut converged = false;
            let mut residual = f64::INFINITY;
            for _ in 0..MAX_INVERT_ITER {
                let (phi_y, slope_y) = self.eval_with_slope(y);
                residual = phi_y - x;
                if residual.abs() < tol {
                    converged = true;
                    break;
                }
                if residual > 0.0 {
                    hi = y;
                } else {
                    lo = y;
                }
                let newton = y - residual / slope_y;
                y = if slope_y > f64::EPSILON && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
            }
            if !converged {
                return Err(Error::NoConvergence {
                    iterations: MAX_INVERT_ITER,
                    residual: residual.abs(),
                });
            }
            disp.push(y - x);
        }
        Diffeo::from_displacement(Field::from_values(disp)?, slope_floor)
    }
}

/// Right translation `R_phi u = u o phi`, sampled on the grid via the
/// trigonometric interpolant of `u`.
pub fn compose(u: &Field, phi: &Diffeo) -> Field {
    assert_eq!(u.len(), phi.grid_size(), "compose on mismatched grids");
    let pts = phi.lift();
    Field::from_values(u.interpolate(&pts)).expect("grid size preserved")
}

/// Diffeomorphism composition `phi o psi`, built on lifts:
/// `(phi o psi)(x) = psi(x) + f_phi(psi(x))`.
pub fn compose_diffeos(phi: &Diffeo, psi: &Diffeo, slope_floor: f64) -> Result<Diffeo> {
    if phi.grid_size() != psi.grid_size() {
        return Err(Error::GridMismatch {
            left: phi.grid_size(),
            right: psi.grid_size(),
        });
    }
    let outer_disp = compose(phi.displacement(), psi);
    let disp = psi.displacement().add(&outer_disp);
    Diffeo::from_displacement(disp, slope_floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn small_sine_diffeo(n: usize, amp: f64) -> Diffeo {
        let f = Field::from_fn(n, |x| amp * (TAU * x).sin()).unwrap();
        Diffeo::from_displacement(f, DEFAULT_SLOPE_FLOOR).unwrap()
    }

    #[test]
    fn compose_with_identity() {
        let u = Field::from_fn(64, |x| (TAU * x).sin()).unwrap();
        let id = Diffeo::identity(64).unwrap();
        assert!(compose(&u, &id).sub(&u).sup_norm() < 1e-13);
    }

    #[test]
    fn compose_with_rotation() {
        let n = 64;
        let u = Field::from_fn(n, |x| (TAU * x).sin()).unwrap();
        let rot =
            Diffeo::from_displacement(Field::constant(n, 0.25).unwrap(), DEFAULT_SLOPE_FLOOR)
                .unwrap();
        let expected = Field::from_fn(n, |x| (TAU * x).cos()).unwrap();
        assert!(compose(&u, &rot).sub(&expected).sup_norm() < 1e-10);
    }

    #[test]
    fn compose_matches_closed_form() {
        let n = 128;
        let amp = 0.1 / TAU;
        let u = Field::from_fn(n, |x| (TAU * x).sin()).unwrap();
        let phi = small_sine_diffeo(n, amp);
        let composed = compose(&u, &phi);
        // Oracle: the closed-form composite evaluated directly.
        let exact =
            Field::from_fn(n, |x| (TAU * (x + amp * (TAU * x).sin())).sin()).unwrap();
        assert!(composed.sub(&exact).sup_norm() < 1e-9);
    }

    #[test]
    fn invert_identity() {
        let id = Diffeo::identity(32).unwrap();
        let inv = id.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
        assert!(inv.displacement().sup_norm() < 1e-12);
    }

    #[test]
    fn invert_rotation_negates() {
        let n = 32;
        let c = 0.3;
        let rot = Diffeo::from_displacement(Field::constant(n, c).unwrap(), DEFAULT_SLOPE_FLOOR)
            .unwrap();
        let inv = rot.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
        for &v in inv.displacement().values() {
            assert_abs_diff_eq!(v, -c, epsilon = 1e-11);
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let n = 128;
        let phi = small_sine_diffeo(n, 0.05);
        let psi = phi.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
        // compose(invert(phi), phi) as maps: psi(phi(x)) = x.
        let mut max_err = 0.0f64;
        for i in 0..n {
            let x = i as f64 / n as f64;
            let err = (psi.eval(phi.eval(x)) - x).abs();
            max_err = max_err.max(err);
        }
        assert!(max_err < 1e-10, "inverse defect {max_err:.3e}");
    }

    #[test]
    fn double_inverse_returns_original() {
        let n = 128;
        let phi = small_sine_diffeo(n, 0.08);
        let back = phi
            .invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR)
            .unwrap()
            .invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR)
            .unwrap();
        let err = back
            .displacement()
            .sub(phi.displacement())
            .sup_norm();
        assert!(err < 10.0 * DEFAULT_INVERSION_TOL, "defect {err:.3e}");
    }

    #[test]
    fn right_translation_is_associative() {
        let n = 128;
        let u = Field::from_fn(n, |x| (TAU * x).sin()).unwrap();
        let phi = small_sine_diffeo(n, 0.04);
        let psi = {
            let f = Field::from_fn(n, |x| 0.03 * (2.0 * TAU * x).cos()).unwrap();
            Diffeo::from_displacement(f, DEFAULT_SLOPE_FLOOR).unwrap()
        };
        let lhs = compose(&compose(&u, &phi), &psi);
        let chain = compose_diffeos(&phi, &psi, DEFAULT_SLOPE_FLOOR).unwrap();
        let rhs = compose(&u, &chain);
        assert!(lhs.sub(&rhs).sup_norm() < 1e-8);
    }

    #[test]
    fn slope_of_identity_is_one() {
        let id = Diffeo::identity(32).unwrap();
        assert!(id.slope().map(|s| s - 1.0).sup_norm() < 1e-13);
    }

    #[test]
    fn slope_of_sine_displacement() {
        let n = 64;
        let a = 0.02;
        let phi = small_sine_diffeo(n, a);
        let expected = Field::from_fn(n, |x| 1.0 + TAU * a * (TAU * x).cos()).unwrap();
        assert!(phi.slope().sub(&expected).sup_norm() < 1e-11);
    }

    #[test]
    fn reciprocal_slope_is_pointwise() {
        let n = 64;
        let phi = small_sine_diffeo(n, 0.07);
        let s = phi.slope();
        let recip = Field::constant(n, 1.0).unwrap().pointwise_div(&s);
        for (r, v) in recip.values().iter().zip(s.values()) {
            assert_abs_diff_eq!(r * v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn inverse_slope_identity() {
        // (phi^{-1})' = (1/phi') o phi^{-1}
        let n = 128;
        let phi = small_sine_diffeo(n, 0.05);
        let psi = phi.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
        let lhs = psi.slope();
        let one_over = Field::constant(n, 1.0).unwrap().pointwise_div(&phi.slope());
        let rhs = compose(&one_over, &psi);
        assert!(lhs.sub(&rhs).sup_norm() < 1e-8);
    }

    #[test]
    fn chart_renormalization_accepts_second_chart() {
        // Input in the chart 0 < f(0) < 1 is shifted into |f(0)| < 1/2.
        let n = 32;
        let f = Field::from_fn(n, |x| 0.8 + 0.01 * (TAU * x).sin()).unwrap();
        let phi = Diffeo::from_displacement(f, DEFAULT_SLOPE_FLOOR).unwrap();
        let f0 = phi.displacement().values()[0];
        assert!(f0.abs() < 0.5);
        assert_abs_diff_eq!(f0, -0.2, epsilon = 1e-12);
    }

    #[test]
    fn slope_floor_violation_rejected() {
        let n = 64;
        // 1 + f' reaches 1 - 1.2 < 0.
        let f = Field::from_fn(n, |x| 1.2 / TAU * (TAU * x).sin()).unwrap();
        assert!(matches!(
            Diffeo::from_displacement(f, DEFAULT_SLOPE_FLOOR),
            Err(Error::InvalidDiffeo { .. })
        ));
    }
}
