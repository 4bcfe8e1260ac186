//! Fixed-step RK4 integration of the Lagrangian geodesic system
//!
//! ```text
//!   phi_dot = v,   v_dot = F_k(phi, v) = (A_k^{-1} B_k (v o phi^{-1})) o phi,
//! ```
//!
//! together with the running integral `L(t) = int_0^t D^1(phi, v) dtau`
//! carried as extra state. Along the exact flow `phi'(t) = exp(L(t))`, which
//! the monitors check instead of assuming. Eulerian read-out, invariant
//! monitors, and the k = 0 Burgers characteristic oracle live here too.

use crate::diffeo::{compose, Diffeo};
use crate::operators::{a_k_inverse, b_k_apply, energy, momentum_density, MetricOrder};
use crate::spectral::Field;
use crate::{Error, Result};

/// Grid, stepping, and validity parameters shared by the solver stack.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Grid size N (even, >= 16).
    pub grid_size: usize,
    /// Time step (> 0); backward integration negates it internally.
    pub dt: f64,
    /// Metric order k.
    pub order: MetricOrder,
    /// Apply the 2/3 rule inside quadratic terms.
    pub dealias: bool,
    /// Discrete version of the open condition `phi' > 0`.
    pub slope_floor: f64,
    /// Target for the pointwise inversion residual.
    pub inversion_tol: f64,
    /// Tolerance used by consistency monitors (reported, not enforced).
    pub monitor_tol: f64,
    /// Largest admissible |t|; the default mirrors the interval (-2, 2).
    pub t_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_size: 256,
            dt: 1e-3,
            order: MetricOrder::new(1).expect("1 <= MAX_METRIC_ORDER"),
            dealias: true,
            slope_floor: 1e-6,
            inversion_tol: 1e-12,
            monitor_tol: 1e-6,
            t_max: 2.0,
        }
    }
}

/// One snapshot of the Lagrangian trajectory.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub t: f64,
    pub phi: Diffeo,
    pub v: Field,
    /// Running `int_0^t D^1(phi, v) dtau`, integrated by the same stepper.
    pub log_slope_accum: Field,
}

impl GeodesicState {
    /// Initial state `(id, v0)` at t = 0.
    pub fn initial(v0: &Field, cfg: &SolverConfig) -> Result<Self> {
        if v0.len() != cfg.grid_size {
            return Err(Error::GridMismatch {
                left: v0.len(),
                right: cfg.grid_size,
            });
        }
        Ok(GeodesicState {
            t: 0.0,
            phi: Diffeo::identity(v0.len())?,
            v: v0.clone(),
            log_slope_accum: Field::zeros(v0.len())?,
        })
    }

    /// Sup-norm defect of the slope identity `log phi' = int_0^t D^1 dtau`.
    pub fn slope_defect(&self) -> f64 {
        self.phi
            .slope()
            .map(f64::ln)
            .sub(&self.log_slope_accum)
            .sup_norm()
    }
}

struct Rhs {
    dv: Field,
    dlog: Field,
}

/// Time derivative of (v, L) at (phi, v); phi_dot is v itself.
fn rhs(phi: &Diffeo, v: &Field, cfg: &SolverConfig) -> Result<Rhs> {
    let d1 = v.deriv(1).pointwise_div(&phi.slope());
    let dv = if cfg.order.k() == 0 {
        // Burgers path: F_0 collapses to -2 v v' / phi' pointwise.
        v.product(&d1, cfg.dealias).scale(-2.0)
    } else {
        let psi = phi.invert(cfg.inversion_tol, cfg.slope_floor)?;
        let u = compose(v, &psi);
        let w = a_k_inverse(&b_k_apply(&u, cfg.order, cfg.dealias), cfg.order);
        compose(&w, phi)
    };
    Ok(Rhs { dv, dlog: d1 })
}

/// The geodesic vector field `(phi, v) -> (v, F_k(phi, v))`, evaluated as
/// `u = v o phi^{-1}`, `w = A_k^{-1} B_k u`, `F_k = w o phi`. Needs k >= 1.
pub fn vector_field(phi: &Diffeo, v: &Field, cfg: &SolverConfig) -> Result<(Field, Field)> {
    cfg.order.require_geodesic()?;
    let r = rhs(phi, v, cfg)?;
    Ok((v.clone(), r.dv))
}

fn advance_phi(phi: &Diffeo, h: f64, dphi: &Field, cfg: &SolverConfig) -> Result<Diffeo> {
    Diffeo::from_displacement(phi.displacement().add_scaled(h, dphi), cfg.slope_floor)
}

fn blow_up(t: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidDiffeo { reason } => Error::BlowUp { t, reason },
        Error::NoConvergence { iterations, residual } => Error::BlowUp {
            t,
            reason: format!("inversion stalled after {iterations} iterations (residual {residual:.3e})"),
        },
        other => other,
    }
}

/// One classical 4-stage Runge-Kutta step of (signed) size `dt`.
fn step_signed(s: &GeodesicState, dt: f64, cfg: &SolverConfig) -> Result<GeodesicState> {
    let fail = blow_up(s.t);

    let k1 = rhs(&s.phi, &s.v, cfg).map_err(&fail)?;
    let p2 = advance_phi(&s.phi, 0.5 * dt, &s.v, cfg).map_err(&fail)?;
    let v2 = s.v.add_scaled(0.5 * dt, &k1.dv);

    let k2 = rhs(&p2, &v2, cfg).map_err(&fail)?;
    let p3 = advance_phi(&s.phi, 0.5 * dt, &v2, cfg).map_err(&fail)?;
    let v3 = s.v.add_scaled(0.5 * dt, &k2.dv);

    let k3 = rhs(&p3, &v3, cfg).map_err(&fail)?;
    let p4 = advance_phi(&s.phi, dt, &v3, cfg).map_err(&fail)?;
    let v4 = s.v.add_scaled(dt, &k3.dv);

    let k4 = rhs(&p4, &v4, cfg).map_err(&fail)?;

    let sixth = dt / 6.0;
    // phi_dot = v, so the four phi-slopes are v, v2, v3, v4.
    let fnew = s
        .phi
        .displacement()
        .add_scaled(sixth, &s.v)
        .add_scaled(2.0 * sixth, &v2)
        .add_scaled(2.0 * sixth, &v3)
        .add_scaled(sixth, &v4);
    let vnew = s
        .v
        .add_scaled(sixth, &k1.dv)
        .add_scaled(2.0 * sixth, &k2.dv)
        .add_scaled(2.0 * sixth, &k3.dv)
        .add_scaled(sixth, &k4.dv);
    let lnew = s
        .log_slope_accum
        .add_scaled(sixth, &k1.dlog)
        .add_scaled(2.0 * sixth, &k2.dlog)
        .add_scaled(2.0 * sixth, &k3.dlog)
        .add_scaled(sixth, &k4.dlog);

    Ok(GeodesicState {
        t: s.t + dt,
        phi: Diffeo::from_displacement(fnew, cfg.slope_floor).map_err(&fail)?,
        v: vnew,
        log_slope_accum: lnew,
    })
}

/// One RK4 step of size `cfg.dt` forward in time.
pub fn step(s: &GeodesicState, cfg: &SolverConfig) -> Result<GeodesicState> {
    step_signed(s, cfg.dt, cfg)
}

/// Trajectory from `(id, v0)` at t = 0 to t = `t_end` in `|t_end|/dt`
/// fixed steps (negative `t_end` integrates backward). Needs k >= 1.
pub fn integrate(v0: &Field, t_end: f64, cfg: &SolverConfig) -> Result<Vec<GeodesicState>> {
    cfg.order.require_geodesic()?;
    integrate_from(GeodesicState::initial(v0, cfg)?, t_end, cfg)
}

/// Continue a trajectory from `start` for a (signed) duration. Needs k >= 1.
pub fn integrate_from(
    start: GeodesicState,
    duration: f64,
    cfg: &SolverConfig,
) -> Result<Vec<GeodesicState>> {
    cfg.order.require_geodesic()?;
    integrate_impl(start, duration, cfg)
}

fn integrate_impl(
    start: GeodesicState,
    duration: f64,
    cfg: &SolverConfig,
) -> Result<Vec<GeodesicState>> {
    if (start.t + duration).abs() > cfg.t_max + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "target time {:.3} exceeds t_max = {:.3}",
            start.t + duration,
            cfg.t_max
        )));
    }
    let steps = (duration.abs() / cfg.dt).round().max(0.0) as usize;
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(start);
    if steps == 0 {
        return Ok(traj);
    }
    let dt = duration / steps as f64;
    for _ in 0..steps {
        let next = step_signed(traj.last().expect("nonempty"), dt, cfg)?;
        traj.push(next);
    }
    Ok(traj)
}

/// Eulerian velocity `u = v o phi^{-1}`.
pub fn eulerian(s: &GeodesicState, cfg: &SolverConfig) -> Result<Field> {
    let psi = s.phi.invert(cfg.inversion_tol, cfg.slope_floor)?;
    Ok(compose(&s.v, &psi))
}

/// Lagrangian k = 0 (Burgers) trajectory: same stepper, with the direct
/// right-hand side `(v, -2 v v' / phi')`; the configured order is ignored.
pub fn burgers_lagrangian_flow(
    v0: &Field,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Vec<GeodesicState>> {
    let cfg0 = SolverConfig {
        order: MetricOrder::burgers(),
        ..cfg.clone()
    };
    integrate_impl(GeodesicState::initial(v0, &cfg0)?, t_end, &cfg0)
}

/// Pre-shock solution of `u_t + 3 u u' = 0`, `u(0) = v0`, by the method of
/// characteristics: `u(t, x + 3 t v0(x)) = v0(x)`, with the characteristic
/// map inverted by the diffeomorphism inverter.
pub fn burgers_oracle(v0: &Field, t: f64, cfg: &SolverConfig) -> Result<Field> {
    let char_map = Diffeo::from_displacement(v0.scale(3.0 * t), cfg.slope_floor)
        .map_err(|_| Error::ShockFormed { t })?;
    let inv = char_map
        .invert(cfg.inversion_tol, cfg.slope_floor)
        .map_err(|e| match e {
            Error::NoConvergence { .. } | Error::InvalidDiffeo { .. } => Error::ShockFormed { t },
            other => other,
        })?;
    Ok(compose(v0, &inv))
}

/// Drift diagnostics for one trajectory snapshot, measured against the
/// initial data of the trajectory.
#[derive(Debug, Clone)]
pub struct MonitorRow {
    pub t: f64,
    pub energy: f64,
    /// `sup_x |I_k(phi, v) - A_k v0| / sup_x |A_k v0|`.
    pub momentum_err: f64,
    /// `sup_x |log phi' - int_0^t D^1 dtau|`.
    pub slope_err: f64,
    /// `|mean u(t) - mean v0|`.
    pub mean_err: f64,
}

/// Monitor table for a trajectory issued from the identity.
pub fn monitors(traj: &[GeodesicState], cfg: &SolverConfig) -> Result<Vec<MonitorRow>> {
    let first = traj.first().ok_or_else(|| {
        Error::InvalidArgument("monitors need a nonempty trajectory".into())
    })?;
    let u0 = eulerian(first, cfg)?;
    let reference = momentum_density(&first.phi, &first.v, cfg.order);
    let ref_scale = reference.sup_norm().max(f64::MIN_POSITIVE);
    let mean0 = u0.mean();

    let mut rows = Vec::with_capacity(traj.len());
    for s in traj {
        let u = eulerian(s, cfg)?;
        let ik = momentum_density(&s.phi, &s.v, cfg.order);
        rows.push(MonitorRow {
            t: s.t,
            energy: energy(&u, cfg.order),
            momentum_err: ik.sub(&reference).sup_norm() / ref_scale,
            slope_err: s.slope_defect(),
            mean_err: (u.mean() - mean0).abs(),
        });
    }
    Ok(rows)
}
