//! The Riemannian exponential map `Exp_k: v0 -> phi(1; v0)`, its directional
//! derivative by central differences of the flow, and the local logarithm by
//! damped Gauss-Newton shooting on a band of Fourier coefficients.
//!
//! The shooting unknowns are the coefficients of `v` on the L2-orthonormal
//! trigonometric basis `{1, sqrt(2) cos(2 pi m x), sqrt(2) sin(2 pi m x)}`
//! for `m <= (M-1)/2`; with that scaling the Gauss-Newton normal matrix is
//! exactly the identity at `v0 = 0`, mirroring `d_0 Exp_k = Id`. The
//! Jacobian columns are independent flow integrations and are computed in
//! parallel; they default to a coarser time step than the residual, which
//! leaves the Newton fixed point untouched (the residual alone defines it)
//! and only perturbs the step direction at the size of the finite-difference
//! noise.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::geodesic::{integrate, SolverConfig};
use crate::spectral::Field;
use crate::{Error, Result};

/// Parameters of the shooting logarithm, on top of a [`SolverConfig`].
#[derive(Debug, Clone)]
pub struct ShootingConfig {
    pub solver: SolverConfig,
    /// Number of shooting modes M (odd): basis `|n| <= (M-1)/2`.
    pub modes: usize,
    /// Stop once `sup |exp(v) - psi|` on lifts falls below this.
    pub newton_tol: f64,
    /// Outer iteration cap.
    pub max_newton: usize,
    /// Directional-derivative step, in [1e-7, 1e-4].
    pub fd_step: f64,
    /// Time step for Jacobian columns; `None` means `4 * solver.dt`.
    pub jacobian_dt: Option<f64>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            solver: SolverConfig::default(),
            modes: 33,
            newton_tol: 1e-10,
            max_newton: 30,
            fd_step: 1e-5,
            jacobian_dt: None,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes % 2 == 0 || self.modes == 0 {
            return Err(Error::InvalidArgument(format!(
                "shooting modes M = {} must be odd",
                self.modes
            )));
        }
        if self.modes > self.solver.grid_size / 3 {
            return Err(Error::InvalidArgument(format!(
                "shooting modes M = {} exceed the dealiased band N/3 = {}",
                self.modes,
                self.solver.grid_size / 3
            )));
        }
        if !(1e-7..=1e-4).contains(&self.fd_step) {
            return Err(Error::InvalidArgument(format!(
                "fd_step {} outside [1e-7, 1e-4]",
                self.fd_step
            )));
        }
        Ok(())
    }

    fn jacobian_solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.jacobian_dt.unwrap_or(4.0 * self.solver.dt).min(0.04),
            ..self.solver.clone()
        }
    }
}

/// Time-1 Lagrangian flow `Exp_k(v0) = phi(1; v0)`; chart-normalized by
/// construction. Needs k >= 1.
pub fn exp_map(v0: &Field, cfg: &SolverConfig) -> Result<crate::diffeo::Diffeo> {
    let traj = integrate(v0, 1.0, cfg)?;
    Ok(traj.into_iter().last().expect("nonempty trajectory").phi)
}

/// Directional derivative `d_{v0} Exp_k(dv)` by a central difference of the
/// flow on lifts, with step `fd_step / sup|dv|`.
pub fn d_exp(v0: &Field, dv: &Field, cfg: &SolverConfig, fd_step: f64) -> Result<Field> {
    let scale = dv.sup_norm();
    if scale == 0.0 {
        return Field::zeros(v0.len());
    }
    let h = fd_step / scale;
    let plus = exp_map(&v0.add_scaled(h, dv), cfg)?;
    let minus = exp_map(&v0.add_scaled(-h, dv), cfg)?;
    Ok(lift_difference(plus.displacement(), minus.displacement()).scale(0.5 / h))
}

/// Difference of two chart-normalized displacements as periodic data,
/// undoing any residual integer winding between the lifts.
fn lift_difference(a: &Field, b: &Field) -> Field {
    let winding = (a.values()[0] - b.values()[0]).round();
    if winding == 0.0 {
        a.sub(b)
    } else {
        a.sub(b).map(|v| v - winding)
    }
}

/// L2-orthonormal shooting basis field for index `j` on an `n`-point grid:
/// `j = 0` is the constant, odd `j = 2m-1` the cosine of mode m, even
/// `j = 2m` the sine of mode m.
fn basis_field(j: usize, n: usize) -> Field {
    let tau = 2.0 * std::f64::consts::PI;
    let sqrt2 = std::f64::consts::SQRT_2;
    match j {
        0 => Field::constant(n, 1.0).expect("valid grid"),
        _ => {
            let m = ((j + 1) / 2) as f64;
            if j % 2 == 1 {
                Field::from_fn(n, |x| sqrt2 * (tau * m * x).cos()).expect("valid grid")
            } else {
                Field::from_fn(n, |x| sqrt2 * (tau * m * x).sin()).expect("valid grid")
            }
        }
    }
}

fn assemble(coeffs: &DVector<f64>, n: usize) -> Field {
    let mut acc = Field::zeros(n).expect("valid grid");
    for (j, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            acc = acc.add_scaled(c, &basis_field(j, n));
        }
    }
    acc
}

/// Coefficients of `f` on the shooting basis (exact band projection).
fn project(f: &Field, modes: usize) -> DVector<f64> {
    let spec = f.spectrum();
    let mut out = DVector::zeros(modes);
    out[0] = spec[0].re;
    let sqrt2 = std::f64::consts::SQRT_2;
    for m in 1..=(modes - 1) / 2 {
        // c_m = (a - i b)/2 for a cos + b sin; basis has the sqrt(2) factor.
        out[2 * m - 1] = sqrt2 * spec[m].re;
        out[2 * m] = -sqrt2 * spec[m].im;
    }
    out
}

/// One row of the Gauss-Newton convergence trace.
#[derive(Debug, Clone)]
pub struct NewtonTraceRow {
    pub iter: usize,
    pub residual: f64,
    pub step_factor: f64,
}

/// Result of the shooting logarithm.
#[derive(Debug, Clone)]
pub struct LogResult {
    /// The recovered initial velocity, band-limited to the shooting modes.
    pub v: Field,
    pub trace: Vec<NewtonTraceRow>,
    /// Condition number of the scaled normal matrix at the first iterate
    /// (reported, not asserted).
    pub normal_condition: f64,
    /// Smallest singular value of the scaled normal matrix.
    pub normal_min_sv: f64,
}

fn residual_vec(v: &Field, target: &Field, cfg: &SolverConfig) -> Result<Field> {
    let phi = exp_map(v, cfg)?;
    Ok(lift_difference(phi.displacement(), target))
}

/// Local inverse of [`exp_map`] by damped Gauss-Newton shooting: finds the
/// band-limited `v` with `sup |exp_map(v) - psi| < newton_tol`.
///
/// The initial guess is the displacement of `psi` projected onto the band
/// (valid since `d_0 Exp = Id`). Each iteration builds the Jacobian from
/// [`d_exp`] applied to the basis modes (in parallel), solves the normal
/// equations, and halves the step up to ten times until the residual
/// decreases; a step that cannot decrease the residual, or running past
/// `max_newton`, fails with `NoConvergence`.
pub fn log_map(psi: &crate::diffeo::Diffeo, cfg: &ShootingConfig) -> Result<LogResult> {
    cfg.validate()?;
    cfg.solver.order.require_geodesic()?;
    let n = cfg.solver.grid_size;
    if psi.grid_size() != n {
        return Err(Error::GridMismatch {
            left: psi.grid_size(),
            right: n,
        });
    }
    let m = cfg.modes;
    let target = psi.displacement();
    let jac_cfg = cfg.jacobian_solver();

    let mut coeffs = project(target, m);
    let mut v = assemble(&coeffs, n);
    let mut res_field = residual_vec(&v, target, &cfg.solver)?;
    let mut res_norm = res_field.sup_norm();

    let mut trace = vec![NewtonTraceRow {
        iter: 0,
        residual: res_norm,
        step_factor: 0.0,
    }];
    let mut normal_condition = 1.0;
    let mut normal_min_sv = 1.0;

    for iter in 1..=cfg.max_newton {
        if res_norm < cfg.newton_tol {
            return Ok(LogResult {
                v,
                trace,
                normal_condition,
                normal_min_sv,
            });
        }

        // Jacobian columns: d Exp in each basis direction, independent flow
        // integrations run in parallel.
        let columns: Vec<Result<Field>> = (0..m)
            .into_par_iter()
            .map(|j| d_exp(&v, &basis_field(j, n), &jac_cfg, cfg.fd_step))
            .collect();
        let mut jac = DMatrix::zeros(n, m);
        for (j, col) in columns.into_iter().enumerate() {
            let col = col?;
            for (i, &val) in col.values().iter().enumerate() {
                jac[(i, j)] = val;
            }
        }

        // Scaled normal matrix; the identity at v = 0 in this basis.
        let gram = jac.transpose() * &jac / n as f64;
        let rhs = jac.transpose() * DVector::from_column_slice(res_field.values()) / n as f64;
        if iter == 1 {
            let svd = gram.clone().svd(false, false);
            let max_sv = svd.singular_values.max();
            let min_sv = svd.singular_values.min();
            normal_condition = max_sv / min_sv.max(f64::MIN_POSITIVE);
            normal_min_sv = min_sv;
        }
        let delta = gram
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .or_else(|| gram.lu().solve(&rhs))
            .ok_or_else(|| Error::NoConvergence {
                iterations: iter,
                residual: res_norm,
            })?;

        // Damped line search: halve up to ten times until the residual drops.
        let mut accepted = false;
        let mut factor = 1.0;
        for _ in 0..=10 {
            let candidate = &coeffs - factor * &delta;
            let v_cand = assemble(&candidate, n);
            match residual_vec(&v_cand, target, &cfg.solver) {
                Ok(r) => {
                    let norm = r.sup_norm();
                    if norm < res_norm {
                        coeffs = candidate;
                        v = v_cand;
                        res_field = r;
                        res_norm = norm;
                        accepted = true;
                        break;
                    }
                }
                Err(Error::BlowUp { .. }) => {} // shrink and retry
                Err(e) => return Err(e),
            }
            factor *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: res_norm,
            });
        }
        trace.push(NewtonTraceRow {
            iter,
            residual: res_norm,
            step_factor: factor,
        });
    }

    if res_norm < cfg.newton_tol {
        Ok(LogResult {
            v,
            trace,
            normal_condition,
            normal_min_sv,
        })
    } else {
        Err(Error::NoConvergence {
            iterations: cfg.max_newton,
            residual: res_norm,
        })
    }
}
