//! The metric operators `A_k` and `A_k^{-1}`, the quadratic operator `B_k`
//! driving the Euler equation, the conjugated derivatives
//! `D^n(phi, v) = (d_x^n (v o phi^{-1})) o phi`, the conjugated operator
//! `A_k(phi, v) = (A_k (v o phi^{-1})) o phi`, the transported momentum
//! density, and the `H^k` energy.
//!
//! `A_k` acts as the Fourier multiplier `sigma_k(n) = sum_{j<=k} (2 pi n)^{2j}`,
//! which is `>= 1`, so the inverse multiplier is exact on the grid. The
//! conjugated quantities are evaluated through the chain-rule recursion
//! `D^1 = v'/phi'`, `D^{n+1} = (D^n)'/phi'` -- no composition with
//! `phi^{-1}` is performed on this path, which keeps it independent of the
//! inverter and usable as a cross-check against it.

use crate::diffeo::Diffeo;
use crate::spectral::{Field, Multiplier};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Largest supported metric order; `sigma_k` grows like `n^{2k}` and double
/// precision is exhausted near k = 5 at N = 1024.
pub const MAX_METRIC_ORDER: u32 = 4;

/// The integer order `k >= 0` of the Sobolev metric. `k >= 1` for all
/// geodesic operations; `k = 0` is admitted only on the Burgers oracle path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricOrder {
    k: u32,
}

impl MetricOrder {
    pub fn new(k: u32) -> Result<Self> {
        if k > MAX_METRIC_ORDER {
            return Err(Error::InvalidOrder {
                k,
                reason: format!("supported range is 0..={MAX_METRIC_ORDER}"),
            });
        }
        Ok(MetricOrder { k })
    }

    /// The Burgers order k = 0.
    pub fn burgers() -> Self {
        MetricOrder { k: 0 }
    }

    pub fn k(self) -> u32 {
        self.k
    }

    /// Errors unless `k >= 1`.
    pub fn require_geodesic(self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::InvalidOrder {
                k: 0,
                reason: "geodesic operations need k >= 1 (k = 0 only via the Burgers oracle)"
                    .into(),
            });
        }
        Ok(self)
    }
}

/// Symbol of `A_k`: `sigma_k(n) = sum_{j=0}^k (2 pi n)^{2j} >= 1`.
pub fn a_k_symbol(k: MetricOrder, n: i64) -> f64 {
    let w = (2.0 * PI * n as f64).powi(2);
    let mut s = 1.0;
    for _ in 0..k.k() {
        s = 1.0 + w * s;
    }
    s
}

/// `A_k` as a [`Multiplier`] on an `n`-point grid.
pub fn a_k_multiplier(n: usize, k: MetricOrder) -> Result<Multiplier> {
    Multiplier::from_symbol(n, |m| a_k_symbol(k, m))
}

/// `A_k^{-1}` as a [`Multiplier`]; exact two-sided inverse of
/// [`a_k_multiplier`] on the grid.
pub fn a_k_inv_multiplier(n: usize, k: MetricOrder) -> Result<Multiplier> {
    Multiplier::from_symbol(n, |m| 1.0 / a_k_symbol(k, m))
}

pub fn a_k_apply(u: &Field, k: MetricOrder) -> Field {
    a_k_multiplier(u.len(), k)
        .expect("valid grid carried by Field")
        .apply(u)
}

pub fn a_k_inverse(u: &Field, k: MetricOrder) -> Field {
    a_k_inv_multiplier(u.len(), k)
        .expect("valid grid carried by Field")
        .apply(u)
}

/// `B_k(u) = -2 u' A_k u + A_k(u u') - u A_k u'`, evaluated verbatim with
/// (optionally) dealiased products.
pub fn b_k_apply(u: &Field, k: MetricOrder, dealias: bool) -> Field {
    let du = u.deriv(1);
    let t1 = du.product(&a_k_apply(u, k), dealias).scale(-2.0);
    let t2 = a_k_apply(&u.product(&du, dealias), k);
    let t3 = u.product(&a_k_apply(&du, k), dealias);
    t1.add(&t2).sub(&t3)
}

/// Conjugated derivative `D^n(phi, v) = (d_x^n (v o phi^{-1})) o phi`,
/// computed by the recursion `D^1 = v'/phi'`, `D^{n+1} = (D^n)'/phi'`.
pub fn d_n(phi: &Diffeo, v: &Field, n: u32) -> Field {
    assert!(n >= 1, "conjugated derivative needs n >= 1");
    assert!(
        n <= 2 * MAX_METRIC_ORDER,
        "conjugated derivative order {n} exceeds 2 k_max"
    );
    let slope = phi.slope();
    let mut d = v.deriv(1).pointwise_div(&slope);
    for _ in 1..n {
        d = d.deriv(1).pointwise_div(&slope);
    }
    d
}

/// Conjugated operator `A_k(phi, v) = v + sum_{j=1}^k (-1)^j D^{2j}(phi, v)`,
/// equal to `(A_k (v o phi^{-1})) o phi`.
pub fn conj_a_k(phi: &Diffeo, v: &Field, k: MetricOrder) -> Field {
    let slope = phi.slope();
    let mut acc = v.clone();
    let mut d = v.clone();
    let mut sign = 1.0;
    for _ in 1..=k.k() {
        d = d.deriv(1).pointwise_div(&slope);
        d = d.deriv(1).pointwise_div(&slope);
        sign = -sign;
        acc = acc.add_scaled(sign, &d);
    }
    acc
}

/// Momentum density `I_k(phi, v) = A_k(phi, v) (phi')^2`; constant in time
/// along geodesics and equal to `A_k v_0`.
pub fn momentum_density(phi: &Diffeo, v: &Field, k: MetricOrder) -> Field {
    let slope = phi.slope();
    conj_a_k(phi, v, k)
        .product(&slope, false)
        .product(&slope, false)
}

/// `H^k` energy `<u, u>_k = sum_n sigma_k(n) |c_n|^2`; nonnegative, zero
/// iff `u = 0`.
pub fn energy(u: &Field, k: MetricOrder) -> f64 {
    let n = u.len();
    u.spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| a_k_symbol(k, crate::spectral::bin_wavenumber(i, n)) * c.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::{compose, DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TAU: f64 = 2.0 * PI;

    fn k(v: u32) -> MetricOrder {
        MetricOrder::new(v).unwrap()
    }

    fn sine_diffeo(n: usize, amp: f64) -> Diffeo {
        let f = Field::from_fn(n, |x| amp * (TAU * x).sin()).unwrap();
        Diffeo::from_displacement(f, DEFAULT_SLOPE_FLOOR).unwrap()
    }

    #[test]
    fn order_bounds() {
        assert!(MetricOrder::new(5).is_err());
        assert!(MetricOrder::new(0).unwrap().require_geodesic().is_err());
        assert!(MetricOrder::new(1).unwrap().require_geodesic().is_ok());
    }

    #[test]
    fn a_k_fixes_constants() {
        let c = Field::constant(32, 2.5).unwrap();
        for kk in 0..=4 {
            assert!(a_k_apply(&c, k(kk)).sub(&c).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn a_1_on_eigenfunction() {
        let u = Field::from_fn(64, |x| (TAU * x).sin()).unwrap();
        let expected = u.scale(1.0 + TAU * TAU);
        assert!(a_k_apply(&u, k(1)).sub(&expected).sup_norm() < 1e-10);
    }

    #[test]
    fn sigma_2_at_one() {
        let s = a_k_symbol(k(2), 1);
        let expected = 1.0 + TAU.powi(2) + TAU.powi(4);
        assert_abs_diff_eq!(s, expected, epsilon = 1e-9);
    }

    #[test]
    fn symbol_lower_bounds() {
        for kk in 0..=4u32 {
            for n in -32..=32i64 {
                let s = a_k_symbol(k(kk), n);
                assert!(s >= 1.0);
                assert!(s >= (TAU * n as f64).powi(2 * kk as i32) - 1e-9 * s);
            }
        }
    }

    #[test]
    fn a_0_inverse_is_identity() {
        let u = Field::from_fn(32, |x| (TAU * x).sin() + 0.3).unwrap();
        assert!(a_k_inverse(&u, k(0)).sub(&u).sup_norm() < 1e-14);
    }

    #[test]
    fn a_1_inverse_on_eigenfunction() {
        let n = 64;
        let target = Field::from_fn(n, |x| (TAU * x).sin()).unwrap();
        let input = target.scale(1.0 + TAU * TAU);
        assert!(a_k_inverse(&input, k(1)).sub(&target).sup_norm() < 1e-12);
    }

    #[test]
    fn b_k_kills_constants() {
        let c = Field::constant(32, 1.7).unwrap();
        for kk in 0..=3 {
            assert!(b_k_apply(&c, k(kk), true).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn b_0_is_minus_two_u_du() {
        // Oracle: at k = 0 all three terms collapse to -2 u u'.
        let u = Field::from_fn(64, |x| 0.4 * (TAU * x).sin() + 0.2 * (2.0 * TAU * x).cos())
            .unwrap();
        let expected = u.product(&u.deriv(1), true).scale(-2.0);
        assert!(b_k_apply(&u, k(0), true).sub(&expected).sup_norm() < 1e-12);
    }

    #[test]
    fn b_1_on_sine_matches_expansion() {
        // Independent expansion of -2u'(u - u'') + (uu' - (uu')'') - u(u' - u''')
        // for u = sin(2 pi x) gives 2 pi (2 pi^2 - 1) sin(4 pi x).
        let n = 128;
        let u = Field::from_fn(n, |x| (TAU * x).sin()).unwrap();
        let expected =
            Field::from_fn(n, |x| TAU * (2.0 * PI * PI - 1.0) * (2.0 * TAU * x).sin()).unwrap();
        assert!(b_k_apply(&u, k(1), true).sub(&expected).sup_norm() < 1e-10);
    }

    #[test]
    fn b_k_has_zero_mean() {
        // Integration by parts kills every term of B_k; discretely the mean
        // is zero to round-off. The k = 3 output reaches 1e8 in sup, so its
        // mean is checked relative to that scale.
        let u = Field::from_fn(128, |x| {
            0.3 * (TAU * x).sin() + 0.1 * (3.0 * TAU * x).cos()
        })
        .unwrap();
        for kk in 0..=2 {
            assert!(b_k_apply(&u, k(kk), true).mean().abs() < 1e-10);
        }
        let b3 = b_k_apply(&u, k(3), true);
        assert!(b3.mean().abs() < 1e-14 * b3.sup_norm());
    }

    #[test]
    fn d_n_at_identity_is_plain_derivative() {
        let id = Diffeo::identity(64).unwrap();
        let v = Field::from_fn(64, |x| (TAU * x).sin() + 0.2 * (2.0 * TAU * x).cos()).unwrap();
        for n in 1..=4 {
            assert!(d_n(&id, &v, n).sub(&v.deriv(n)).sup_norm() < 1e-6);
        }
    }

    #[test]
    fn d_1_is_quotient_of_derivatives() {
        let n = 128;
        let phi = sine_diffeo(n, 0.05);
        let v = Field::from_fn(n, |x| (TAU * x).cos()).unwrap();
        let expected = v.deriv(1).pointwise_div(&phi.slope());
        assert!(d_n(&phi, &v, 1).sub(&expected).sup_norm() < 1e-13);
    }

    #[test]
    fn d_2_matches_composition_path() {
        let n = 256;
        let phi = sine_diffeo(n, 0.03);
        let v = Field::from_fn(n, |x| 0.05 * (TAU * x).sin()).unwrap();
        let psi = phi.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
        let oracle = compose(&compose(&v, &psi).deriv(2), &phi);
        let err = d_n(&phi, &v, 2).sub(&oracle).sup_norm();
        assert!(err < 1e-7, "cross-path defect {err:.3e}");
    }

    #[test]
    fn conj_a_k_at_identity() {
        let id = Diffeo::identity(64).unwrap();
        let v = Field::from_fn(64, |x| (TAU * x).sin() + 0.1).unwrap();
        for kk in 1..=2 {
            assert!(conj_a_k(&id, &v, k(kk))
                .sub(&a_k_apply(&v, k(kk)))
                .sup_norm()
                < 1e-8);
        }
    }

    #[test]
    fn conj_a_1_is_v_minus_d2() {
        let n = 128;
        let phi = sine_diffeo(n, 0.04);
        let v = Field::from_fn(n, |x| 0.3 * (2.0 * TAU * x).cos()).unwrap();
        let expected = v.sub(&d_n(&phi, &v, 2));
        assert!(conj_a_k(&phi, &v, k(1)).sub(&expected).sup_norm() < 1e-12);
    }

    #[test]
    fn conj_a_k_matches_composition_path() {
        let n = 256;
        let phi = sine_diffeo(n, 0.02);
        let v = Field::from_fn(n, |x| 0.05 * (TAU * x).sin()).unwrap();
        let psi = phi.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
        for kk in 1..=2 {
            let oracle = compose(&a_k_apply(&compose(&v, &psi), k(kk)), &phi);
            let err = conj_a_k(&phi, &v, k(kk)).sub(&oracle).sup_norm();
            assert!(err < 1e-6, "k = {kk}: cross-path defect {err:.3e}");
        }
    }

    #[test]
    fn momentum_at_identity_is_a_k_v() {
        let v = Field::from_fn(64, |x| 0.2 * (TAU * x).sin()).unwrap();
        let id = Diffeo::identity(64).unwrap();
        for kk in 1..=2 {
            assert!(momentum_density(&id, &v, k(kk))
                .sub(&a_k_apply(&v, k(kk)))
                .sup_norm()
                < 1e-10);
        }
    }

    #[test]
    fn momentum_is_linear_in_v_at_identity() {
        let v = Field::from_fn(64, |x| 0.1 * (TAU * x).sin() + 0.05).unwrap();
        let id = Diffeo::identity(64).unwrap();
        let double = momentum_density(&id, &v.scale(2.0), k(1));
        let twice = momentum_density(&id, &v, k(1)).scale(2.0);
        assert!(double.sub(&twice).sup_norm() < 1e-13);
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let z = Field::zeros(32).unwrap();
        assert_abs_diff_eq!(energy(&z, k(1)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_of_sine_k1() {
        let u = Field::from_fn(64, |x| (TAU * x).sin()).unwrap();
        let expected = (1.0 + TAU * TAU) / 2.0;
        assert_abs_diff_eq!(energy(&u, k(1)), expected, epsilon = 1e-10);
    }

    #[test]
    fn energy_matches_refined_quadrature() {
        // Oracle: trapezoid quadrature of sum_j (d^j u)^2 on a 4x refined
        // grid, with the derivatives read off the refined interpolant.
        let n = 64;
        let nf = 4 * n;
        let u = Field::from_fn(n, |x| {
            0.7 * (TAU * x).sin() + 0.2 * (3.0 * TAU * x).cos()
        })
        .unwrap();
        let kk = k(2);
        let fine_pts: Vec<f64> = (0..nf).map(|i| i as f64 / nf as f64).collect();
        let mut quad = 0.0;
        for j in 0..=kk.k() {
            let dju = u.deriv(j);
            let fine = dju.interpolate(&fine_pts);
            quad += fine.iter().map(|v| v * v).sum::<f64>() / nf as f64;
        }
        assert_abs_diff_eq!(energy(&u, kk), quad, epsilon = 1e-10);
    }

    #[test]
    fn energy_is_self_adjoint_pairing() {
        let u = Field::from_fn(64, |x| 0.4 * (TAU * x).sin() + 0.3 * (2.0 * TAU * x).cos())
            .unwrap();
        for kk in 0..=3 {
            let pairing = u.product(&a_k_apply(&u, k(kk)), false).mean();
            assert_abs_diff_eq!(energy(&u, k(kk)), pairing, epsilon = 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_a_k_roundtrip(vals in proptest::collection::vec(-5.0f64..5.0, 64)) {
            let u = Field::from_values(vals).unwrap();
            for kk in 1..=4u32 {
                let back = a_k_inverse(&a_k_apply(&u, k(kk)), k(kk));
                let err = back.sub(&u).sup_norm();
                prop_assert!(err <= 10.0 * f64::EPSILON * (1.0 + u.sup_norm()),
                    "k = {}: {:.3e}", kk, err);
            }
        }

        #[test]
        fn prop_d_n_recursion_consistent_with_composition(amp in 0.005f64..0.03) {
            let n = 256;
            let phi = sine_diffeo(n, amp);
            let v = Field::from_fn(n, |x| 0.1 * (TAU * x).sin()).unwrap();
            let psi = phi.invert(DEFAULT_INVERSION_TOL, DEFAULT_SLOPE_FLOOR).unwrap();
            let oracle = compose(&compose(&v, &psi).deriv(2), &phi);
            prop_assert!(d_n(&phi, &v, 2).sub(&oracle).sup_norm() < 1e-6);
        }
    }
}
