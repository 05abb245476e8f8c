//! Planar (κ = 0) central-configuration seeds: regular polygons of equal
//! masses, the Lagrange equilateral triangle for arbitrary masses, Newton
//! refinement of user guesses, and the non-degeneracy check that gates
//! continuation.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::continuation::{newton_solve, AugmentedState, NewtonOptions, PhaseAnchor};
use crate::error::{Error, Result};
use crate::gradient::{default_hessian_step, grad_lagrangian, hessian_fd, spectrum};
use crate::model::{symplectic_apply, Configuration, Masses};

/// Residual threshold below which a constructed seed is considered valid.
pub const SEED_RESIDUAL_TOL: f64 = 1e-13;
/// Relative threshold for calling a Hessian eigenvalue zero.
pub const KERNEL_EIG_TOL: f64 = 1e-6;

/// A planar central configuration together with its diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedReport {
    pub configuration: Configuration,
    pub masses: Masses,
    /// Max-norm of ∇L(·; 0).
    pub residual: f64,
    /// Hessian eigenvalues, ascending by absolute value.
    pub hessian_spectrum: Vec<f64>,
    /// Number of eigenvalues below the zero threshold. Always ≥ 1: rotation
    /// contributes the kernel vector 𝒥a.
    pub kernel_dimension: usize,
    pub degenerate: bool,
    /// Routh's mass parameter, reported for triangle seeds only.
    pub routh_beta: Option<f64>,
}

/// Regular n-gon of unit masses with the circumradius that makes it central:
/// r = ½ s₁^{1/3}, s₁ = ¼ Σ_{j=1}^{n−1} 1/sin(jπ/n).
///
/// ```
/// use curved_nbody::seeds::polygon_cc;
///
/// let tri = polygon_cc(3).unwrap();
/// let r = tri.point(0).norm();
/// assert!((r - 0.41634).abs() < 1e-5);
/// ```
pub fn polygon_cc(n: usize) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("polygon needs n >= 2, got {n}")));
    }
    let s1: f64 = 0.25
        * (1..n)
            .map(|j| 1.0 / (j as f64 * std::f64::consts::PI / n as f64).sin())
            .sum::<f64>();
    let r = 0.5 * s1.powf(1.0 / 3.0);
    let pts: Vec<Vector2<f64>> = (0..n)
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            Vector2::new(r * phi.cos(), r * phi.sin())
        })
        .collect();
    Configuration::from_points(&pts)
}

/// Lagrange equilateral triangle for three arbitrary positive masses.
///
/// The side length d³ = M/8 follows from the central-configuration equations
/// with the center of mass at the origin. The first vertex direction is
/// arbitrary; the continuation phase condition pins orientation later.
pub fn lagrange_triangle(m1: f64, m2: f64, m3: f64) -> Result<Configuration> {
    let m = Masses::new(vec![m1, m2, m3])?;
    let total = m.total();
    let d = (total / 8.0).powf(1.0 / 3.0);
    let raw = [
        Vector2::new(0.0, 0.0),
        Vector2::new(d, 0.0),
        Vector2::new(d / 2.0, d * 3f64.sqrt() / 2.0),
    ];
    let com = (m1 * raw[0] + m2 * raw[1] + m3 * raw[2]) / total;
    let pts: Vec<Vector2<f64>> = raw.iter().map(|p| p - com).collect();
    Configuration::from_points(&pts)
}

/// Routh's β = 27(m₁m₂ + m₁m₃ + m₂m₃)/M². Reported as metadata on triangle
/// seeds; β = 1 marks loss of linear stability of the rotating triangle.
pub fn routh_beta(m: &Masses) -> Option<f64> {
    if m.len() != 3 {
        return None;
    }
    let (m1, m2, m3) = (m[0], m[1], m[2]);
    let total = m1 + m2 + m3;
    Some(27.0 * (m1 * m2 + m1 * m3 + m2 * m3) / (total * total))
}

/// Refine a guess to a central configuration by solving the augmented system
/// F(u, α; 0) = 0 with the guess itself as phase anchor.
pub fn refine_cc(u0: &Configuration, m: &Masses, tol: f64) -> Result<SeedReport> {
    u0.check_domain(0.0)?;
    let anchor = PhaseAnchor::new(u0.clone());
    let s0 = AugmentedState {
        u: u0.clone(),
        alpha: 0.0,
    };
    let opts = NewtonOptions::default();
    let (s, _report) = newton_solve(&s0, m, 0.0, &anchor, tol, opts.max_iters)?;
    report_for(&s.u, m)
}

/// Compute the Hessian spectrum at a critical point and report the kernel
/// dimension. Refuses inputs whose gradient residual exceeds 1e−10.
pub fn check_nondegeneracy(a: &Configuration, m: &Masses, tol_zero: f64) -> Result<SeedReport> {
    let residual = grad_lagrangian(a, m, 0.0)?.amax();
    if residual > 1e-10 {
        return Err(Error::NotCritical { residual });
    }
    let h = hessian_fd(a, m, 0.0, default_hessian_step(a))?;
    let (vals, vecs) = spectrum(&h)?;
    let max_abs = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let kernel_dimension = vals.iter().filter(|v| v.abs() < tol_zero * max_abs).count();
    let degenerate = kernel_dimension != 1;
    if kernel_dimension == 1 {
        // the near-kernel vector must align with the rotation direction Ja
        let ja = symplectic_apply(a.as_vector()).normalize();
        let cos = vecs[0].dot(&ja).abs();
        if cos < 0.999 {
            return Err(Error::InvalidInput(format!(
                "kernel vector misaligned with the rotation direction: |cos| = {cos}"
            )));
        }
    }
    Ok(SeedReport {
        configuration: a.clone(),
        masses: m.clone(),
        residual,
        hessian_spectrum: vals,
        kernel_dimension,
        degenerate,
        routh_beta: routh_beta(m),
    })
}

fn report_for(a: &Configuration, m: &Masses) -> Result<SeedReport> {
    check_nondegeneracy(a, m, KERNEL_EIG_TOL)
}

/// Build the full report for a constructed seed (polygon or triangle).
///
/// ```
/// use curved_nbody::model::Masses;
/// use curved_nbody::seeds::{lagrange_triangle, seed_report};
///
/// let a = lagrange_triangle(1.0, 2.0, 3.0).unwrap();
/// let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
/// let report = seed_report(&a, &m).unwrap();
/// assert_eq!(report.kernel_dimension, 1);
/// assert!(!report.degenerate);
/// assert!(report.residual < 1e-13);
/// ```
pub fn seed_report(a: &Configuration, m: &Masses) -> Result<SeedReport> {
    report_for(a, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_masses(n: usize) -> Masses {
        Masses::new(vec![1.0; n]).unwrap()
    }

    fn residual(u: &Configuration, m: &Masses) -> f64 {
        grad_lagrangian(u, m, 0.0).unwrap().amax()
    }

    #[test]
    fn polygon_radii() {
        // n = 3: r = (1/2) 3^{-1/6}
        let tri = polygon_cc(3).unwrap();
        assert_relative_eq!(tri.point(0).norm(), 0.5 * 3f64.powf(-1.0 / 6.0), max_relative = 1e-14);
        assert!((tri.point(0).norm() - 0.41634).abs() < 1e-5);
        // n = 2: s1 = 1/4
        let two = polygon_cc(2).unwrap();
        assert_relative_eq!(two.point(0).norm(), 0.5 * 0.25f64.powf(1.0 / 3.0), max_relative = 1e-14);
        assert!((two.point(0).norm() - 0.314980).abs() < 1e-6);
        // n = 4: s1 = (1 + 2 sqrt(2))/4
        let sq = polygon_cc(4).unwrap();
        let s1 = (1.0 + 2.0 * 2f64.sqrt()) / 4.0;
        assert_relative_eq!(sq.point(0).norm(), 0.5 * s1.powf(1.0 / 3.0), max_relative = 1e-14);
        assert!((sq.point(0).norm() - 0.4927464).abs() < 1e-6);
    }

    #[test]
    fn polygon_residuals() {
        for n in 2..=6 {
            let u = polygon_cc(n).unwrap();
            let r = residual(&u, &unit_masses(n));
            assert!(r < 1e-13, "n = {n}: residual {r:e}");
        }
    }

    #[test]
    fn polygon_rotation_symmetry() {
        // rotating by 2 pi / n permutes the vertex set
        let n = 5;
        let u = polygon_cc(n).unwrap();
        let rot = u.rotated(2.0 * std::f64::consts::PI / n as f64);
        for j in 0..n {
            let expect = u.point((j + 1) % n);
            assert!((rot.point(j) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn lagrange_equal_masses_matches_polygon() {
        let u = lagrange_triangle(1.0, 1.0, 1.0).unwrap();
        for j in 0..3 {
            assert_relative_eq!(
                u.point(j).norm(),
                0.5 * 3f64.powf(-1.0 / 6.0),
                max_relative = 1e-13
            );
        }
        assert!(residual(&u, &unit_masses(3)) < 1e-13);
    }

    #[test]
    fn lagrange_unequal_masses() {
        let u = lagrange_triangle(1.0, 2.0, 3.0).unwrap();
        let d = (u.point(0) - u.point(1)).norm();
        assert_relative_eq!(d, (6.0f64 / 8.0).powf(1.0 / 3.0), max_relative = 1e-14);
        assert!((d - 0.908560).abs() < 1e-6);
        let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(residual(&u, &m) < 1e-13);
        // center of mass at the origin
        let com = m[0] * u.point(0) + m[1] * u.point(1) + m[2] * u.point(2);
        assert!(com.norm() / m.total() < 1e-15);
    }

    #[test]
    fn lagrange_mass_scaling() {
        let c = 2.7;
        let base = lagrange_triangle(1.0, 2.0, 3.0).unwrap();
        let scaled = lagrange_triangle(c * 1.0, c * 2.0, c * 3.0).unwrap();
        let d0 = (base.point(0) - base.point(1)).norm();
        let d1 = (scaled.point(0) - scaled.point(1)).norm();
        assert_relative_eq!(d1, c.powf(1.0 / 3.0) * d0, max_relative = 1e-13);
        let m = Masses::new(vec![c, 2.0 * c, 3.0 * c]).unwrap();
        assert!(residual(&scaled, &m) < 1e-12);
    }

    #[test]
    fn dilated_configuration_is_not_central() {
        // guards against accidental scale invariance of the normalization
        let u = polygon_cc(3).unwrap();
        let dilated = Configuration::from_flat(u.as_vector() * 1.5).unwrap();
        assert!(residual(&dilated, &unit_masses(3)) > 1e-2);
    }

    #[test]
    fn refine_recovers_perturbed_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u = polygon_cc(4).unwrap();
        let mut flat = u.as_vector().clone();
        for x in flat.iter_mut() {
            *x += rng.gen_range(-1e-3..1e-3);
        }
        let guess = Configuration::from_flat(flat).unwrap();
        let report = refine_cc(&guess, &unit_masses(4), 1e-13).unwrap();
        assert!(report.residual < 1e-13);
        // same shape as the square: all radii equal to the polygon radius
        for j in 0..4 {
            assert_relative_eq!(
                report.configuration.point(j).norm(),
                u.point(0).norm(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn refine_exact_seed_is_fixed_point() {
        let u = lagrange_triangle(1.0, 2.0, 3.0).unwrap();
        let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
        let report = refine_cc(&u, &m, 1e-13).unwrap();
        assert!((report.configuration.as_vector() - u.as_vector()).amax() < 1e-12);
    }

    #[test]
    fn refine_finds_collinear_euler() {
        // three equal masses started near a collinear arrangement stay
        // collinear and converge to the Euler configuration
        let guess = Configuration::from_points(&[
            Vector2::new(-0.6, 0.0),
            Vector2::new(0.0, 0.0),
            Vector2::new(0.6, 0.0),
        ])
        .unwrap();
        let report = refine_cc(&guess, &unit_masses(3), 1e-13);
        let report = report.unwrap();
        assert!(report.residual < 1e-13);
        for j in 0..3 {
            assert!(report.configuration.point(j).y.abs() < 1e-10);
        }
    }

    #[test]
    fn nondegeneracy_of_triangles() {
        for (m1, m2, m3) in [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0)] {
            let u = lagrange_triangle(m1, m2, m3).unwrap();
            let m = Masses::new(vec![m1, m2, m3]).unwrap();
            let report = check_nondegeneracy(&u, &m, KERNEL_EIG_TOL).unwrap();
            assert_eq!(report.kernel_dimension, 1);
            assert!(!report.degenerate);
        }
    }

    #[test]
    fn nondegeneracy_rejects_noncritical_input() {
        let u = Configuration::from_points(&[
            Vector2::new(0.5, 0.0),
            Vector2::new(-0.5, 0.1),
            Vector2::new(0.0, 0.7),
        ])
        .unwrap();
        let err = check_nondegeneracy(&u, &unit_masses(3), KERNEL_EIG_TOL);
        assert!(matches!(err, Err(Error::NotCritical { .. })));
    }

    #[test]
    fn routh_beta_values() {
        assert_relative_eq!(routh_beta(&unit_masses(3)).unwrap(), 9.0);
        let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(routh_beta(&m).unwrap(), 27.0 * 11.0 / 36.0);
    }
}
