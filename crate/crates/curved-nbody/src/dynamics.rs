//! Rotating-frame equations of motion for the full (time-dependent) curved
//! problem, an adaptive Runge–Kutta integrator, and the drift check that a
//! continued configuration really is a relative equilibrium.
//!
//! The rotating-frame Lagrangian is
//!
//! ```text
//! L(u, u̇) = ½ Σ m_j λ(u_j) |u̇_j + 𝒥u_j|² + U(u; κ),
//! ```
//!
//! whose Euler–Lagrange equations, per body, read
//!
//! ```text
//! d/dt [λ(u_j)(v_j + 𝒥u_j)] = ½ ∇λ(u_j)|v_j + 𝒥u_j|² − λ(u_j)𝒥(v_j + 𝒥u_j)
//!                              + m_j⁻¹ ∇_{u_j} U.
//! ```
//!
//! At a zero of the steady gradient the right-hand side vanishes with v = 0,
//! so relative equilibria are equilibria of this field.

use nalgebra::{DVector, Vector2};

use crate::error::{Error, Result};
use crate::gradient::grad_pair_potential;
use crate::model::{conformal_factor, pair_potential, Configuration, Masses};

/// Positions and velocities in the rotating frame, flat layout
/// (x_1, y_1, …), any number of bodies ≥ 1.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl PhaseState {
    pub fn at_rest(u: DVector<f64>) -> Self {
        let v = DVector::zeros(u.len());
        PhaseState { u, v }
    }

    pub fn n_bodies(&self) -> usize {
        self.u.len() / 2
    }

    fn point(&self, j: usize) -> Vector2<f64> {
        Vector2::new(self.u[2 * j], self.u[2 * j + 1])
    }

    fn vel(&self, j: usize) -> Vector2<f64> {
        Vector2::new(self.v[2 * j], self.v[2 * j + 1])
    }
}

fn rot90(p: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-p.y, p.x)
}

/// ∇λ(u) = −16κ u / (1 + κ|u|²)³.
fn grad_lambda(p: Vector2<f64>, kappa: f64) -> f64 {
    // returns the scalar c with grad lambda = c * u
    let denom = 1.0 + kappa * p.norm_squared();
    -16.0 * kappa / (denom * denom * denom)
}

/// Gradient of U with respect to body j, for raw phase-space vectors.
fn grad_potential_body(
    u: &DVector<f64>,
    masses: &[f64],
    kappa: f64,
    j: usize,
) -> Result<Vector2<f64>> {
    let n = u.len() / 2;
    let pj = Vector2::new(u[2 * j], u[2 * j + 1]);
    let mut g = Vector2::zeros();
    for k in 0..n {
        if k == j {
            continue;
        }
        let pk = Vector2::new(u[2 * k], u[2 * k + 1]);
        g += masses[j] * masses[k] * grad_pair_potential(pk, pj, kappa)?;
    }
    Ok(g)
}

/// Right-hand side of the first-order system: returns (u̇, v̇).
pub fn eom_rhs(s: &PhaseState, masses: &[f64], kappa: f64) -> Result<PhaseState> {
    let n = s.n_bodies();
    let mut acc = DVector::zeros(2 * n);
    for j in 0..n {
        let p = s.point(j);
        let vel = s.vel(j);
        let lam = conformal_factor(p, kappa)?;
        let gl = grad_lambda(p, kappa); // grad lambda = gl * p
        let w = vel + rot90(p);
        let gu = grad_potential_body(&s.u, masses, kappa, j)?;
        // lambda v' = 1/2 grad_lambda |w|^2 - lambda J w - (grad_lambda . v) w
        //             + m^{-1} grad U  ; then v' -= J v
        let mut a = 0.5 * gl * w.norm_squared() * p - lam * rot90(w)
            - gl * p.dot(&vel) * w
            + gu / masses[j];
        a /= lam;
        a -= rot90(vel);
        acc[2 * j] = a.x;
        acc[2 * j + 1] = a.y;
    }
    Ok(PhaseState {
        u: s.v.clone(),
        v: acc,
    })
}

/// Rotating-frame Lagrangian, full velocity dependence.
pub fn lagrangian_dynamic(s: &PhaseState, masses: &[f64], kappa: f64) -> Result<f64> {
    let n = s.n_bodies();
    let mut total = 0.0;
    for j in 0..n {
        let p = s.point(j);
        let lam = conformal_factor(p, kappa)?;
        let w = s.vel(j) + rot90(p);
        total += 0.5 * masses[j] * lam * w.norm_squared();
        for k in (j + 1)..n {
            total += masses[j] * masses[k] * pair_potential(p, s.point(k), kappa)?;
        }
    }
    Ok(total)
}

/// Rotating-frame Jacobi constant: the quadratic-in-v kinetic part minus the
/// v-independent part minus the potential. Conserved along trajectories.
pub fn jacobi_constant(s: &PhaseState, masses: &[f64], kappa: f64) -> Result<f64> {
    let n = s.n_bodies();
    let mut t2 = 0.0;
    let mut t0 = 0.0;
    let mut pot = 0.0;
    for j in 0..n {
        let p = s.point(j);
        let lam = conformal_factor(p, kappa)?;
        t2 += 0.5 * masses[j] * lam * s.vel(j).norm_squared();
        t0 += 0.5 * masses[j] * lam * p.norm_squared();
        for k in (j + 1)..n {
            pot += masses[j] * masses[k] * pair_potential(p, s.point(k), kappa)?;
        }
    }
    Ok(t2 - t0 - pot)
}

/// One sampled point of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: PhaseState,
}

// Dormand–Prince 5(4) coefficients.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

fn pack(s: &PhaseState) -> DVector<f64> {
    let dim = s.u.len();
    let mut y = DVector::zeros(2 * dim);
    y.rows_mut(0, dim).copy_from(&s.u);
    y.rows_mut(dim, dim).copy_from(&s.v);
    y
}

fn unpack(y: &DVector<f64>) -> PhaseState {
    let dim = y.len() / 2;
    PhaseState {
        u: y.rows(0, dim).into_owned(),
        v: y.rows(dim, dim).into_owned(),
    }
}

/// Adaptive Dormand–Prince 5(4) integration from t = 0 to `t_end`, local
/// tolerance `tol`, sampled at multiples of `sample_dt` and at `t_end`.
pub fn integrate(
    s0: &PhaseState,
    masses: &[f64],
    kappa: f64,
    t_end: f64,
    tol: f64,
    sample_dt: f64,
) -> Result<Vec<TrajectorySample>> {
    let rhs = |y: &DVector<f64>| -> Result<DVector<f64>> {
        eom_rhs(&unpack(y), masses, kappa).map(|d| pack(&d))
    };
    let mut t = 0.0;
    let mut y = pack(s0);
    let mut samples = vec![TrajectorySample {
        t,
        state: s0.clone(),
    }];
    let mut next_sample = sample_dt;
    let mut h = (t_end / 100.0).min(0.05).max(1e-6);
    let time_eps = 1e-12 * t_end.max(1.0);
    let min_step = 1e-13 * t_end.max(1.0);
    let dim = y.len();

    while t < t_end - time_eps {
        let target = next_sample.min(t_end);
        if target - t < time_eps {
            next_sample += sample_dt;
            continue;
        }
        let h_try = h.min(target - t);
        let k0 = rhs(&y)?;
        let mut k = vec![k0; 7];
        for stage in 0..6 {
            let mut yt = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                if DP_A[stage][j] != 0.0 {
                    yt += kj * (h_try * DP_A[stage][j]);
                }
            }
            let _ = DP_C; // stage times are implicit (autonomous system)
            k[stage + 1] = rhs(&yt)?;
        }
        // 5th-order solution is stage 6's argument; recompute it directly
        let mut y5 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if DP_A[5][j] != 0.0 {
                y5 += kj * (h_try * DP_A[5][j]);
            }
        }
        let mut err_vec = DVector::zeros(dim);
        for (j, kj) in k.iter().enumerate() {
            if DP_E[j] != 0.0 {
                err_vec += kj * (h_try * DP_E[j]);
            }
        }
        // error-per-unit-step control: global error stays near tol
        let scale = tol * (1.0 + y.amax()) * (h_try / t_end);
        let err = err_vec.amax() / scale;
        if err <= 1.0 {
            t += h_try;
            y = y5;
            if (t - target).abs() < time_eps {
                samples.push(TrajectorySample {
                    t,
                    state: unpack(&y),
                });
                if (target - next_sample).abs() < time_eps {
                    next_sample += sample_dt;
                }
            }
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.25)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h_try * factor).min(t_end);
        if h < min_step {
            return Err(Error::StepUnderflow { t });
        }
    }
    Ok(samples)
}

/// Integrate from (u*, 0) over [0, period] and return the maximum max-norm
/// deviation of the positions from u*.
///
/// A true relative equilibrium drifts only by integrator noise:
///
/// ```
/// use curved_nbody::dynamics::verify_re;
/// use curved_nbody::model::Masses;
/// use curved_nbody::seeds::{lagrange_triangle, seed_report};
///
/// let seed = seed_report(
///     &lagrange_triangle(1.0, 1.0, 1.0).unwrap(),
///     &Masses::new(vec![1.0, 1.0, 1.0]).unwrap(),
/// ).unwrap();
/// let drift = verify_re(
///     &seed.configuration,
///     &seed.masses,
///     0.0,
///     2.0 * std::f64::consts::PI,
///     1e-10,
/// ).unwrap();
/// assert!(drift < 1e-8);
/// ```
pub fn verify_re(
    u_star: &Configuration,
    m: &Masses,
    kappa: f64,
    period: f64,
    tol: f64,
) -> Result<f64> {
    let s0 = PhaseState::at_rest(u_star.as_vector().clone());
    let samples = integrate(&s0, m.as_slice(), kappa, period, tol, period / 64.0)?;
    let mut drift = 0.0f64;
    for s in &samples {
        drift = drift.max((&s.state.u - u_star.as_vector()).amax());
    }
    Ok(drift)
}
