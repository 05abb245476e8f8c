//! The augmented map F(u, α; κ), its bordered Jacobian, a damped Newton
//! corrector, and natural-parameter continuation in κ.
//!
//! A configuration u is a relative equilibrium at curvature κ iff
//! ∇L(u; κ) + α𝒥u = 0 together with the phase condition ⟨u − a, 𝒥a⟩ = 0,
//! where a is the planar seed. Any zero has α = 0, and at a non-degenerate
//! seed the bordered Jacobian is invertible, so the branch through (a, 0; 0)
//! is locally unique.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{
    default_hessian_step, grad_lagrangian, hessian_fd, min_abs_eigen_restricted,
};
use crate::model::{symplectic_apply, Configuration, Masses};
use crate::seeds::SeedReport;

/// Configuration plus the Lagrange multiplier / unfolding parameter α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedState {
    pub u: Configuration,
    pub alpha: f64,
}

/// Phase (Poincaré-section) anchor. The section vector is e = 𝒥a_ref, which
/// satisfies ⟨e, 𝒥a_ref⟩ ≠ 0 automatically.
#[derive(Debug, Clone)]
pub struct PhaseAnchor {
    pub a_ref: Configuration,
    pub e: DVector<f64>,
}

impl PhaseAnchor {
    pub fn new(a_ref: Configuration) -> Self {
        let e = symplectic_apply(a_ref.as_vector());
        PhaseAnchor { a_ref, e }
    }
}

/// One converged point of a continued branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub kappa: f64,
    pub u: Configuration,
    pub alpha: f64,
    /// Max-norm of F at the stored point.
    pub residual: f64,
    pub newton_iters: usize,
    /// Smallest |eigenvalue| of the Hessian restricted to the complement of
    /// the rotation direction 𝒥u.
    pub min_abs_eig: f64,
    pub step_used: f64,
}

/// Why a continuation run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// κ_limit reached.
    ReachedLimit,
    /// Step halving hit the minimum step: fold or bifurcation suspect.
    StepUnderflow { last_failure_kappa: f64 },
    /// Newton stalls just above the tolerance for 3 consecutive attempts.
    AccuracyFloor { last_failure_kappa: f64 },
    /// Collision, antipodal pair, or disk-boundary violation.
    DomainError { kappa: f64, message: String },
    /// First Newton failure in fixed-step mode.
    FixedStepFailure { kappa: f64 },
}

/// An ordered branch of relative equilibria in κ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationFamily {
    pub records: Vec<FamilyRecord>,
    pub termination: Termination,
    /// +1 or −1.
    pub direction: f64,
}

impl ContinuationFamily {
    /// Last continued curvature.
    pub fn terminal_kappa(&self) -> f64 {
        self.records.last().map(|r| r.kappa).unwrap_or(0.0)
    }
}

/// Continuation direction in κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

/// Newton corrector settings.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Armijo backtracking floor for the damping factor.
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iters: 50,
            min_damping: 2f64.powi(-10),
        }
    }
}

/// Stepper settings.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    /// Adaptive step halving/doubling; `false` reproduces fixed-step
    /// stepping that stops at the first failure.
    pub adaptive: bool,
    pub min_step: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            adaptive: true,
            min_step: 1e-6,
            newton: NewtonOptions::default(),
        }
    }
}

/// Convergence report of one Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iters: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

/// F(u, α; κ) = (∇L(u; κ) + α𝒥u, ⟨u − a_ref, 𝒥a_ref⟩).
pub fn augmented_map(
    s: &AugmentedState,
    m: &Masses,
    kappa: f64,
    anchor: &PhaseAnchor,
) -> Result<DVector<f64>> {
    let dim = s.u.as_vector().len();
    let g = grad_lagrangian(&s.u, m, kappa)?;
    let ju = symplectic_apply(s.u.as_vector());
    let mut f = DVector::zeros(dim + 1);
    for i in 0..dim {
        f[i] = g[i] + s.alpha * ju[i];
    }
    f[dim] = (s.u.as_vector() - anchor.a_ref.as_vector()).dot(&anchor.e);
    Ok(f)
}

/// Bordered Jacobian:
///
/// ```text
/// ( D²L + α𝒥   𝒥u )
/// (    eᵀ       0 )
/// ```
pub fn augmented_jacobian(
    s: &AugmentedState,
    m: &Masses,
    kappa: f64,
    anchor: &PhaseAnchor,
) -> Result<DMatrix<f64>> {
    let dim = s.u.as_vector().len();
    let h = hessian_fd(&s.u, m, kappa, default_hessian_step(&s.u))?;
    let ju = symplectic_apply(s.u.as_vector());
    let mut jac = DMatrix::zeros(dim + 1, dim + 1);
    jac.view_mut((0, 0), (dim, dim)).copy_from(&h);
    for j in 0..dim / 2 {
        // alpha * J blocks: d(alpha Ju)/du
        jac[(2 * j, 2 * j + 1)] += -s.alpha;
        jac[(2 * j + 1, 2 * j)] += s.alpha;
    }
    for i in 0..dim {
        jac[(i, dim)] = ju[i];
        jac[(dim, i)] = anchor.e[i];
    }
    jac[(dim, dim)] = 0.0;
    Ok(jac)
}

/// Damped Newton on the augmented system: full steps with Armijo
/// backtracking on ‖F‖², damping floor from [`NewtonOptions`].
pub fn newton_solve(
    s0: &AugmentedState,
    m: &Masses,
    kappa: f64,
    anchor: &PhaseAnchor,
    tol: f64,
    max_iters: usize,
) -> Result<(AugmentedState, NewtonReport)> {
    let opts = NewtonOptions {
        max_iters,
        ..NewtonOptions::default()
    };
    let mut s = s0.clone();
    let mut f = augmented_map(&s, m, kappa, anchor)?;
    let mut history = vec![f.amax()];
    for iter in 0..opts.max_iters {
        let res = f.amax();
        if res < tol {
            return Ok((
                s,
                NewtonReport {
                    iters: iter,
                    residual: res,
                    residual_history: history,
                },
            ));
        }
        let jac = augmented_jacobian(&s, m, kappa, anchor)?;
        let lu = jac.lu();
        let delta = lu.solve(&-&f).ok_or(Error::SingularJacobian)?;
        if !delta.iter().all(|x| x.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let f2 = f.norm_squared();
        let mut damping = 1.0;
        let mut accepted = None;
        while damping >= opts.min_damping {
            let trial = apply_step(&s, &delta, damping);
            match trial.and_then(|t| augmented_map(&t, m, kappa, anchor).map(|ft| (t, ft))) {
                Ok((t, ft)) if ft.norm_squared() < f2 => {
                    accepted = Some((t, ft));
                    break;
                }
                _ => damping *= 0.5,
            }
        }
        match accepted {
            Some((t, ft)) => {
                s = t;
                f = ft;
                history.push(f.amax());
            }
            None => {
                return Err(Error::NonConvergence {
                    iters: iter,
                    residual: res,
                    last: state_to_flat(&s),
                    history,
                })
            }
        }
    }
    let res = f.amax();
    if res < tol {
        Ok((
            s,
            NewtonReport {
                iters: opts.max_iters,
                residual: res,
                residual_history: history,
            },
        ))
    } else {
        Err(Error::NonConvergence {
            iters: opts.max_iters,
            residual: res,
            last: state_to_flat(&s),
            history,
        })
    }
}

fn apply_step(s: &AugmentedState, delta: &DVector<f64>, damping: f64) -> Result<AugmentedState> {
    let dim = s.u.as_vector().len();
    let u = s.u.as_vector() + delta.rows(0, dim) * damping;
    Ok(AugmentedState {
        u: Configuration::from_flat(u)?,
        alpha: s.alpha + damping * delta[dim],
    })
}

fn state_to_flat(s: &AugmentedState) -> Vec<f64> {
    let mut v: Vec<f64> = s.u.as_vector().iter().copied().collect();
    v.push(s.alpha);
    v
}

/// Natural-parameter continuation from a planar seed toward `kappa_limit`.
///
/// Stepping halves the step on Newton failure (down to `min_step`) and
/// doubles it back toward `delta_kappa` after three consecutive easy
/// successes. The seed itself is stored as the κ = 0 record.
///
/// ```
/// use curved_nbody::continuation::{continue_family, ContinuationOptions, Direction, Termination};
/// use curved_nbody::model::Masses;
/// use curved_nbody::seeds::{lagrange_triangle, seed_report};
///
/// let a = lagrange_triangle(1.0, 1.0, 1.0).unwrap();
/// let m = Masses::new(vec![1.0, 1.0, 1.0]).unwrap();
/// let seed = seed_report(&a, &m).unwrap();
/// let fam = continue_family(
///     &seed, Direction::Negative, 0.01, -0.5, 1e-13,
///     &ContinuationOptions::default(),
/// ).unwrap();
/// assert!(matches!(fam.termination, Termination::ReachedLimit));
/// assert!(fam.records.iter().all(|r| r.alpha.abs() < 1e-10));
/// ```
pub fn continue_family(
    seed: &SeedReport,
    direction: Direction,
    delta_kappa: f64,
    kappa_limit: f64,
    tol: f64,
    opts: &ContinuationOptions,
) -> Result<ContinuationFamily> {
    if seed.degenerate {
        return Err(Error::DegenerateSeed {
            kernel_dimension: seed.kernel_dimension,
        });
    }
    if delta_kappa <= 0.0 || tol <= 0.0 {
        return Err(Error::InvalidInput(
            "delta_kappa and tol must be positive".into(),
        ));
    }
    let dir = direction.sign();
    let anchor = PhaseAnchor::new(seed.configuration.clone());
    let m = &seed.masses;

    let mut records = Vec::new();
    let first = make_record(
        &AugmentedState {
            u: seed.configuration.clone(),
            alpha: 0.0,
        },
        m,
        0.0,
        &anchor,
        0,
        0.0,
    )?;
    records.push(first);

    let mut kappa = 0.0f64;
    let mut state = AugmentedState {
        u: seed.configuration.clone(),
        alpha: 0.0,
    };
    let mut step = delta_kappa;
    let mut easy_successes = 0usize;
    let mut floor_strikes = 0usize;

    let termination = loop {
        if (kappa_limit - kappa) * dir <= 0.0 {
            break Termination::ReachedLimit;
        }
        let mut kappa_try = kappa + dir * step;
        if (kappa_try - kappa_limit) * dir > 0.0 {
            kappa_try = kappa_limit;
        }
        match newton_solve(&state, m, kappa_try, &anchor, tol, opts.newton.max_iters) {
            Ok((s, report)) => {
                let rec = match make_record(&s, m, kappa_try, &anchor, report.iters, step) {
                    Ok(r) => r,
                    Err(e) => {
                        break Termination::DomainError {
                            kappa: kappa_try,
                            message: e.to_string(),
                        }
                    }
                };
                records.push(rec);
                state = s;
                kappa = kappa_try;
                floor_strikes = 0;
                if report.iters <= 3 {
                    easy_successes += 1;
                    if opts.adaptive && easy_successes >= 3 && step < delta_kappa {
                        step = (step * 2.0).min(delta_kappa);
                        easy_successes = 0;
                    }
                } else {
                    easy_successes = 0;
                }
            }
            Err(Error::Collision { .. })
            | Err(Error::Antipodal { .. })
            | Err(Error::DomainBoundary { .. }) => {
                break Termination::DomainError {
                    kappa: kappa_try,
                    message: "domain violation during Newton iteration".into(),
                }
            }
            Err(Error::NonConvergence { residual, .. }) if opts.adaptive => {
                // a stall barely above tol counts toward the accuracy floor
                if residual_is_floor(residual, tol) {
                    floor_strikes += 1;
                    if floor_strikes >= 3 {
                        break Termination::AccuracyFloor {
                            last_failure_kappa: kappa_try,
                        };
                    }
                } else {
                    floor_strikes = 0;
                }
                easy_successes = 0;
                step *= 0.5;
                if step < opts.min_step {
                    break Termination::StepUnderflow {
                        last_failure_kappa: kappa_try,
                    };
                }
            }
            Err(Error::SingularJacobian) if opts.adaptive => {
                floor_strikes = 0;
                easy_successes = 0;
                step *= 0.5;
                if step < opts.min_step {
                    break Termination::StepUnderflow {
                        last_failure_kappa: kappa_try,
                    };
                }
            }
            Err(_) => {
                break Termination::FixedStepFailure { kappa: kappa_try };
            }
        }
    };

    Ok(ContinuationFamily {
        records,
        termination,
        direction: dir,
    })
}

fn residual_is_floor(residual: f64, tol: f64) -> bool {
    residual < 1e3 * tol
}

fn make_record(
    s: &AugmentedState,
    m: &Masses,
    kappa: f64,
    anchor: &PhaseAnchor,
    iters: usize,
    step: f64,
) -> Result<FamilyRecord> {
    let f = augmented_map(s, m, kappa, anchor)?;
    let h = hessian_fd(&s.u, m, kappa, default_hessian_step(&s.u))?;
    let min_abs_eig = min_abs_eigen_restricted(&h, s.u.as_vector())?;
    Ok(FamilyRecord {
        kappa,
        u: s.u.clone(),
        alpha: s.alpha,
        residual: f.amax(),
        newton_iters: iters,
        min_abs_eig,
        step_used: step,
    })
}

/// Per-record diagnostics over a stored family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyDiagnostics {
    pub min_abs_eig: Vec<f64>,
    pub newton_iters: Vec<usize>,
    /// min_j |u_j| per record.
    pub min_distance_to_origin: Vec<f64>,
    /// Indices where min_abs_eig dropped below 1e−6 of its initial value.
    pub eig_collapse_flags: Vec<usize>,
}

/// Trace the restricted-Hessian eigenvalue, Newton effort, and distance to
/// the origin along a family; flag near-singular records.
pub fn family_diagnostics(family: &ContinuationFamily) -> FamilyDiagnostics {
    let min_abs_eig: Vec<f64> = family.records.iter().map(|r| r.min_abs_eig).collect();
    let newton_iters = family.records.iter().map(|r| r.newton_iters).collect();
    let min_distance_to_origin = family
        .records
        .iter()
        .map(|r| {
            (0..r.u.n_bodies())
                .map(|j| r.u.point(j).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let initial = min_abs_eig.first().copied().unwrap_or(0.0);
    let eig_collapse_flags = min_abs_eig
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < 1e-6 * initial)
        .map(|(i, _)| i)
        .collect();
    FamilyDiagnostics {
        min_abs_eig,
        newton_iters,
        min_distance_to_origin,
        eig_collapse_flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::{lagrange_triangle, seed_report};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn equal_mass_seed() -> SeedReport {
        let a = lagrange_triangle(1.0, 1.0, 1.0).unwrap();
        let m = Masses::new(vec![1.0, 1.0, 1.0]).unwrap();
        seed_report(&a, &m).unwrap()
    }

    #[test]
    fn augmented_map_vanishes_at_seed() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let s = AugmentedState {
            u: seed.configuration.clone(),
            alpha: 0.0,
        };
        let f = augmented_map(&s, &seed.masses, 0.0, &anchor).unwrap();
        assert!(f.amax() < 1e-13);
    }

    #[test]
    fn augmented_map_linear_in_alpha() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let s = AugmentedState {
            u: seed.configuration.clone(),
            alpha: 0.5,
        };
        let f = augmented_map(&s, &seed.masses, 0.0, &anchor).unwrap();
        let ju = symplectic_apply(seed.configuration.as_vector());
        let dim = ju.len();
        for i in 0..dim {
            assert_relative_eq!(f[i], 0.5 * ju[i], epsilon = 1e-13);
        }
        assert!(f[dim].abs() < 1e-14);
    }

    #[test]
    fn first_block_projects_to_alpha_norm_squared() {
        // <grad L + alpha Ju, Ju> = alpha |u|^2
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        for _ in 0..20 {
            let u = Configuration::from_points(&[
                nalgebra::Vector2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)),
                nalgebra::Vector2::new(rng.gen_range(0.6..0.9), rng.gen_range(-0.5..0.5)),
                nalgebra::Vector2::new(rng.gen_range(-0.9..-0.6), rng.gen_range(-0.5..0.5)),
            ])
            .unwrap();
            let alpha = rng.gen_range(-2.0..2.0);
            let kappa = rng.gen_range(-0.5..0.3);
            let s = AugmentedState { u: u.clone(), alpha };
            let f = augmented_map(&s, &m, kappa, &anchor).unwrap();
            let ju = symplectic_apply(u.as_vector());
            let proj = f.rows(0, 6).dot(&ju);
            assert_relative_eq!(
                proj,
                alpha * u.as_vector().norm_squared(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn jacobian_block_structure() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u = Configuration::from_points(&[
            nalgebra::Vector2::new(0.3, 0.1),
            nalgebra::Vector2::new(-0.4, 0.2),
            nalgebra::Vector2::new(0.1, -0.45),
        ])
        .unwrap();
        let alpha = rng.gen_range(-1.0..1.0);
        let s = AugmentedState { u: u.clone(), alpha };
        let jac = augmented_jacobian(&s, &seed.masses, 0.1, &anchor).unwrap();
        let dim = 6;
        assert_eq!(jac[(dim, dim)], 0.0);
        let ju = symplectic_apply(u.as_vector());
        for i in 0..dim {
            assert_eq!(jac[(i, dim)], ju[i]);
            assert_eq!(jac[(dim, i)], anchor.e[i]);
        }
        // upper-left equals H + alpha J entry-by-entry
        let h = hessian_fd(&u, &seed.masses, 0.1, default_hessian_step(&u)).unwrap();
        for r in 0..dim {
            for c in 0..dim {
                let mut expect = h[(r, c)];
                if r / 2 == c / 2 {
                    if r % 2 == 0 && c % 2 == 1 {
                        expect -= alpha;
                    } else if r % 2 == 1 && c % 2 == 0 {
                        expect += alpha;
                    }
                }
                assert_relative_eq!(jac[(r, c)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jacobian_invertible_at_seed() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let s = AugmentedState {
            u: seed.configuration.clone(),
            alpha: 0.0,
        };
        let jac = augmented_jacobian(&s, &seed.masses, 0.0, &anchor).unwrap();
        let svd = jac.svd(false, false);
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(smin > 1e-8, "smallest singular value {smin:e}");
    }

    #[test]
    fn jacobian_matches_directional_fd() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let u = Configuration::from_points(&[
            nalgebra::Vector2::new(0.35, 0.05),
            nalgebra::Vector2::new(-0.3, 0.25),
            nalgebra::Vector2::new(0.05, -0.4),
        ])
        .unwrap();
        let s = AugmentedState { u, alpha: 0.3 };
        let kappa = -0.2;
        let jac = augmented_jacobian(&s, &seed.masses, kappa, &anchor).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut d = DVector::zeros(7);
        for i in 0..7 {
            d[i] = rng.gen_range(-1.0..1.0);
        }
        let d = d.normalize();
        let h = 1e-6;
        let eval = |t: f64| {
            let flat = state_to_flat(&s);
            let mut v = DVector::from_vec(flat);
            v += &d * t;
            let st = AugmentedState {
                u: Configuration::from_flat(v.rows(0, 6).into_owned()).unwrap(),
                alpha: v[6],
            };
            augmented_map(&st, &seed.masses, kappa, &anchor).unwrap()
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let jd = &jac * &d;
        assert!(
            (&jd - &fd).amax() < 1e-5 * jd.amax().max(1.0),
            "directional derivative mismatch"
        );
    }

    #[test]
    fn newton_converges_from_exact_seed() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let s = AugmentedState {
            u: seed.configuration.clone(),
            alpha: 0.0,
        };
        let (_, report) = newton_solve(&s, &seed.masses, 0.0, &anchor, 1e-13, 50).unwrap();
        assert!(report.iters <= 1);
    }

    #[test]
    fn newton_quadratic_from_small_perturbation() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut flat = seed.configuration.as_vector().clone();
        for x in flat.iter_mut() {
            *x += rng.gen_range(-1e-4..1e-4);
        }
        let s = AugmentedState {
            u: Configuration::from_flat(flat).unwrap(),
            alpha: 0.0,
        };
        let (sol, report) = newton_solve(&s, &seed.masses, 0.0, &anchor, 1e-13, 50).unwrap();
        assert!(report.iters <= 6, "took {} iterations", report.iters);
        assert!(report.residual < 1e-13);
        assert!(sol.alpha.abs() < 1e-10);
    }

    #[test]
    fn newton_steps_to_small_positive_curvature() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let s = AugmentedState {
            u: seed.configuration.clone(),
            alpha: 0.0,
        };
        let (sol, report) = newton_solve(&s, &seed.masses, 0.01, &anchor, 1e-13, 50).unwrap();
        assert!(report.residual < 1e-13);
        assert!(sol.alpha.abs() < 1e-10);
    }

    #[test]
    fn degenerate_seed_refused() {
        let mut seed = equal_mass_seed();
        seed.degenerate = true;
        seed.kernel_dimension = 2;
        let err = continue_family(
            &seed,
            Direction::Positive,
            0.01,
            0.1,
            1e-13,
            &ContinuationOptions::default(),
        );
        assert!(matches!(err, Err(Error::DegenerateSeed { .. })));
    }

    #[test]
    fn short_positive_run() {
        let seed = equal_mass_seed();
        let fam = continue_family(
            &seed,
            Direction::Positive,
            0.01,
            0.05,
            1e-13,
            &ContinuationOptions::default(),
        )
        .unwrap();
        assert_eq!(fam.termination, Termination::ReachedLimit);
        assert!(fam.records.len() >= 6);
        for r in &fam.records {
            assert!(r.residual < 1e-13);
            assert!(r.alpha.abs() < 1e-10);
        }
        // strictly monotone in kappa
        for w in fam.records.windows(2) {
            assert!(w[1].kappa > w[0].kappa);
        }
    }

    #[test]
    fn phase_condition_pinned_along_family() {
        let seed = equal_mass_seed();
        let anchor = PhaseAnchor::new(seed.configuration.clone());
        let fam = continue_family(
            &seed,
            Direction::Negative,
            0.01,
            -0.1,
            1e-13,
            &ContinuationOptions::default(),
        )
        .unwrap();
        for r in &fam.records {
            let phase = (r.u.as_vector() - anchor.a_ref.as_vector()).dot(&anchor.e);
            assert!(phase.abs() < 1e-12, "phase drift {phase:e} at kappa {}", r.kappa);
        }
    }

    #[test]
    fn continuity_under_step_refinement() {
        let seed = equal_mass_seed();
        let run = |dk: f64| {
            continue_family(
                &seed,
                Direction::Positive,
                dk,
                0.04,
                1e-13,
                &ContinuationOptions::default(),
            )
            .unwrap()
        };
        let coarse = run(0.02);
        let fine = run(0.005);
        // both end at kappa = 0.04; the endpoints must agree
        let uc = coarse.records.last().unwrap();
        let uf = fine.records.last().unwrap();
        assert_relative_eq!(uc.kappa, uf.kappa, epsilon = 1e-15);
        assert!((uc.u.as_vector() - uf.u.as_vector()).amax() < 1e-10);
        // consecutive-record increments shrink with the step
        let max_inc = |f: &ContinuationFamily| {
            f.records
                .windows(2)
                .map(|w| (w[1].u.as_vector() - w[0].u.as_vector()).amax())
                .fold(0.0f64, f64::max)
        };
        assert!(max_inc(&fine) < max_inc(&coarse));
    }

    #[test]
    fn small_kappa_linear_order() {
        // |u(kappa) - a| <= C |kappa| with consistent C on both sides
        let seed = equal_mass_seed();
        let a = seed.configuration.as_vector().clone();
        let mut ratios = Vec::new();
        for (dir, limit) in [(Direction::Positive, 0.05), (Direction::Negative, -0.05)] {
            let fam = continue_family(
                &seed,
                dir,
                0.01,
                limit,
                1e-13,
                &ContinuationOptions::default(),
            )
            .unwrap();
            for r in fam.records.iter().filter(|r| r.kappa != 0.0) {
                ratios.push((r.u.as_vector() - &a).norm() / r.kappa.abs());
            }
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 2.0, "ratio spread {lo}..{hi}");
    }

    #[test]
    fn diagnostics_single_record() {
        let seed = equal_mass_seed();
        let fam = continue_family(
            &seed,
            Direction::Positive,
            0.01,
            0.0,
            1e-13,
            &ContinuationOptions::default(),
        )
        .unwrap();
        assert_eq!(fam.records.len(), 1);
        let d = family_diagnostics(&fam);
        assert!(d.eig_collapse_flags.is_empty());
    }
}
