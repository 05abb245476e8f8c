//! Unified curved-space model: conformal factor, pairwise potential, and the
//! steady (rotating-frame) Lagrangian, all analytic through κ = 0.
//!
//! Positions live on the stereographic plane. For curvature κ the metric
//! weight is λ(u) = 4/(1 + κ|u|²)² and the mutual potential between two
//! bodies is
//!
//! ```text
//! V(u_j, u_k; κ) = N / (2 |u_j − u_k| sqrt(B)),
//! N = 4 (u_j·u_k) κ + (|u_k|²κ − 1)(|u_j|²κ − 1),
//! B = |u_j|²|u_k|² κ² + 2 (u_j·u_k) κ + 1.
//! ```
//!
//! At κ = 0 this reduces to the Newtonian 1/(2r) pair potential.

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separations below this raise [`Error::Collision`].
pub const COLLISION_TOL: f64 = 1e-12;
/// Values of B below this raise [`Error::Antipodal`] (only reachable for κ > 0).
pub const ANTIPODAL_TOL: f64 = 1e-12;
/// Values of 1 + κ|u|² below this raise [`Error::DomainBoundary`].
pub const DOMAIN_TOL: f64 = 1e-12;

/// n positive masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Masses(Vec<f64>);

impl Masses {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 masses, got {}",
                m.len()
            )));
        }
        if let Some(bad) = m.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-positive mass {bad}")));
        }
        Ok(Masses(m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Masses {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// n points u_j = (x_j, y_j) on the stereographic plane, stored flat as
/// (x_1, y_1, …, x_n, y_n) in the rotating frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration(DVector<f64>);

impl Configuration {
    pub fn from_flat(u: DVector<f64>) -> Result<Self> {
        if u.len() < 4 || u.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "flat coordinate vector must have even length >= 4, got {}",
                u.len()
            )));
        }
        Ok(Configuration(u))
    }

    pub fn from_points(points: &[Vector2<f64>]) -> Result<Self> {
        let mut u = DVector::zeros(2 * points.len());
        for (j, p) in points.iter().enumerate() {
            u[2 * j] = p.x;
            u[2 * j + 1] = p.y;
        }
        Self::from_flat(u)
    }

    pub fn n_bodies(&self) -> usize {
        self.0.len() / 2
    }

    pub fn point(&self, j: usize) -> Vector2<f64> {
        Vector2::new(self.0[2 * j], self.0[2 * j + 1])
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    /// Smallest pairwise separation.
    pub fn min_separation(&self) -> f64 {
        let n = self.n_bodies();
        let mut best = f64::INFINITY;
        for j in 0..n {
            for k in (j + 1)..n {
                best = best.min((self.point(j) - self.point(k)).norm());
            }
        }
        best
    }

    /// Fails if any pair is closer than [`COLLISION_TOL`] or, for κ < 0, any
    /// point sits at or beyond the Poincaré disk boundary.
    pub fn check_domain(&self, kappa: f64) -> Result<()> {
        let n = self.n_bodies();
        for j in 0..n {
            check_point_domain(self.point(j), kappa, j)?;
            for k in (j + 1)..n {
                let sep = (self.point(j) - self.point(k)).norm();
                if sep < COLLISION_TOL {
                    return Err(Error::Collision {
                        i: j,
                        j: k,
                        separation: sep,
                    });
                }
            }
        }
        Ok(())
    }

    /// Rotate every body by angle θ about the origin.
    pub fn rotated(&self, theta: f64) -> Configuration {
        let (s, c) = theta.sin_cos();
        let mut out = self.0.clone();
        for j in 0..self.n_bodies() {
            let p = self.point(j);
            out[2 * j] = c * p.x - s * p.y;
            out[2 * j + 1] = s * p.x + c * p.y;
        }
        Configuration(out)
    }
}

/// Curvature κ with its derived sign σ and radius R = 1/√|κ|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curvature(pub f64);

impl Curvature {
    pub fn kappa(&self) -> f64 {
        self.0
    }

    /// σ ∈ {−1, 0, +1}.
    pub fn sigma(&self) -> i8 {
        if self.0 > 0.0 {
            1
        } else if self.0 < 0.0 {
            -1
        } else {
            0
        }
    }

    /// R = 1/√|κ|; `None` at κ = 0.
    pub fn radius(&self) -> Option<f64> {
        if self.0 == 0.0 {
            None
        } else {
            Some(1.0 / self.0.abs().sqrt())
        }
    }
}

fn check_point_domain(p: Vector2<f64>, kappa: f64, body: usize) -> Result<()> {
    let denom = 1.0 + kappa * p.norm_squared();
    if denom <= DOMAIN_TOL {
        return Err(Error::DomainBoundary {
            body,
            norm_sq: p.norm_squared(),
            kappa,
        });
    }
    Ok(())
}

/// Conformal factor λ(u) = 4/(1 + κ|u|²)².
///
/// ```
/// use curved_nbody::model::conformal_factor;
/// use nalgebra::Vector2;
///
/// let lam = conformal_factor(Vector2::new(0.3, 0.0), 0.0).unwrap();
/// assert_eq!(lam, 4.0);
/// ```
pub fn conformal_factor(p: Vector2<f64>, kappa: f64) -> Result<f64> {
    check_point_domain(p, kappa, 0)?;
    let denom = 1.0 + kappa * p.norm_squared();
    Ok(4.0 / (denom * denom))
}

/// Numerator N, denominator factor B, and squared separation A of the pair
/// potential. Shared between the potential and its gradient.
pub(crate) fn pair_terms(
    uj: Vector2<f64>,
    uk: Vector2<f64>,
    kappa: f64,
) -> (f64, f64, f64) {
    let dot = uj.dot(&uk);
    let sj = uj.norm_squared();
    let sk = uk.norm_squared();
    let n = 4.0 * dot * kappa + (sk * kappa - 1.0) * (sj * kappa - 1.0);
    let b = sj * sk * kappa * kappa + 2.0 * dot * kappa + 1.0;
    let a = (uj - uk).norm_squared();
    (n, b, a)
}

fn check_pair(uj: Vector2<f64>, uk: Vector2<f64>, kappa: f64, i: usize, j: usize) -> Result<(f64, f64, f64)> {
    let (n, b, a) = pair_terms(uj, uk, kappa);
    if a.sqrt() < COLLISION_TOL {
        return Err(Error::Collision {
            i,
            j,
            separation: a.sqrt(),
        });
    }
    if b < ANTIPODAL_TOL {
        return Err(Error::Antipodal { i, j, b });
    }
    Ok((n, b, a))
}

/// Pair potential V(u_j, u_k; κ), symmetric in the two points.
pub fn pair_potential(uj: Vector2<f64>, uk: Vector2<f64>, kappa: f64) -> Result<f64> {
    let (n, b, a) = check_pair(uj, uk, kappa, 0, 1)?;
    Ok(n / (2.0 * a.sqrt() * b.sqrt()))
}

/// Gradient of V with respect to the second point, with collision and
/// antipodal checks reporting the offending pair.
pub(crate) fn grad_pair_checked(
    uj: Vector2<f64>,
    uk: Vector2<f64>,
    kappa: f64,
    i: usize,
    j: usize,
) -> Result<Vector2<f64>> {
    let (n, b, a) = check_pair(uj, uk, kappa, i, j)?;
    let sj = uj.norm_squared();
    // dN/du_k = 4 kappa u_j + 2 kappa (|u_j|^2 kappa - 1) u_k
    let dn = 4.0 * kappa * uj + 2.0 * kappa * (sj * kappa - 1.0) * uk;
    // dA/du_k = -2 (u_j - u_k)
    let da = -2.0 * (uj - uk);
    // dB/du_k = 2 |u_j|^2 kappa^2 u_k + 2 kappa u_j
    let db = 2.0 * sj * kappa * kappa * uk + 2.0 * kappa * uj;
    let sab = (a * b).sqrt();
    Ok(dn / (2.0 * sab) - n * (b * da + a * db) / (4.0 * sab * a * b))
}

/// Total potential U = Σ_{j<k} m_j m_k V(u_j, u_k; κ).
pub fn potential_energy(u: &Configuration, m: &Masses, kappa: f64) -> Result<f64> {
    debug_assert_eq!(u.n_bodies(), m.len());
    let n = u.n_bodies();
    let mut total = 0.0;
    for j in 0..n {
        check_point_domain(u.point(j), kappa, j)?;
        for k in (j + 1)..n {
            let (num, b, a) = check_pair(u.point(j), u.point(k), kappa, j, k)?;
            total += m[j] * m[k] * num / (2.0 * a.sqrt() * b.sqrt());
        }
    }
    Ok(total)
}

/// Steady kinetic term T(u; κ) = ½ Σ m_j λ(u_j) |u_j|² (rotation frequency 1).
pub fn kinetic_steady(u: &Configuration, m: &Masses, kappa: f64) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..u.n_bodies() {
        check_point_domain(u.point(j), kappa, j)?;
        let lam = conformal_factor(u.point(j), kappa)?;
        total += 0.5 * m[j] * lam * u.point(j).norm_squared();
    }
    Ok(total)
}

/// Steady Lagrangian L(u; κ) = T(u; κ) + U(u; κ). Central configurations and
/// their curved continuations are its critical points.
///
/// Invariant under simultaneous rotation of every body:
///
/// ```
/// use curved_nbody::model::{lagrangian_steady, Configuration, Masses};
/// use nalgebra::Vector2;
///
/// let u = Configuration::from_points(&[
///     Vector2::new(0.4, 0.0),
///     Vector2::new(-0.4, 0.0),
/// ]).unwrap();
/// let m = Masses::new(vec![1.0, 1.0]).unwrap();
/// let l0 = lagrangian_steady(&u, &m, 0.1).unwrap();
/// let l1 = lagrangian_steady(&u.rotated(1.3), &m, 0.1).unwrap();
/// assert!((l0 - l1).abs() < 1e-12);
/// ```
pub fn lagrangian_steady(u: &Configuration, m: &Masses, kappa: f64) -> Result<f64> {
    Ok(kinetic_steady(u, m, kappa)? + potential_energy(u, m, kappa)?)
}

/// 𝒥u: apply the block rotation generator J = [[0, −1], [1, 0]] to every body.
pub fn symplectic_apply(u: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(u.len());
    for j in 0..u.len() / 2 {
        out[2 * j] = -u[2 * j + 1];
        out[2 * j + 1] = u[2 * j];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    #[test]
    fn conformal_factor_values() {
        assert_relative_eq!(conformal_factor(pt(0.7, -0.3), 0.0).unwrap(), 4.0);
        assert_relative_eq!(conformal_factor(pt(1.0, 0.0), 1.0).unwrap(), 1.0);
        assert_relative_eq!(conformal_factor(pt(1.0, 0.0), -0.5).unwrap(), 16.0);
    }

    #[test]
    fn conformal_factor_disk_boundary() {
        // |u|^2 = 2 at kappa = -0.5 sits exactly on the boundary
        let err = conformal_factor(pt(2f64.sqrt(), 0.0), -0.5);
        assert!(matches!(err, Err(Error::DomainBoundary { .. })));
    }

    #[test]
    fn pair_potential_values() {
        assert_relative_eq!(pair_potential(pt(0.0, 0.0), pt(1.0, 0.0), 0.0).unwrap(), 0.5);
        // N = (kappa|uk|^2 - 1)(kappa|uj|^2 - 1) = 0 * (-1)
        assert_relative_eq!(pair_potential(pt(0.0, 0.0), pt(1.0, 0.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pair_potential_symmetric() {
        let a = pt(0.3, 0.1);
        let b = pt(-0.2, 0.4);
        let v1 = pair_potential(a, b, 0.7).unwrap();
        let v2 = pair_potential(b, a, 0.7).unwrap();
        assert_eq!(v1, v2);
    }

    /// Direct evaluation of the un-simplified positive-curvature form, with
    /// κ^{-1} factors under the square root. Test oracle only.
    fn pair_potential_unsimplified(uj: Vector2<f64>, uk: Vector2<f64>, kappa: f64) -> f64 {
        let dot = uj.dot(&uk);
        let sj = uj.norm_squared();
        let sk = uk.norm_squared();
        let num = 4.0 * dot * kappa + (sk * kappa - 1.0) * (sj * kappa - 1.0);
        let inner = (sk * kappa + 1.0).powi(2) * (sj * kappa + 1.0).powi(2) - num * num;
        num / (inner / kappa).sqrt()
    }

    #[test]
    fn pair_potential_matches_unsimplified_form() {
        let uj = pt(0.3, 0.1);
        let uk = pt(-0.2, 0.4);
        let kappa = 0.7;
        let v = pair_potential(uj, uk, kappa).unwrap();
        let oracle = pair_potential_unsimplified(uj, uk, kappa);
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
    }

    #[test]
    fn collision_detected() {
        let err = pair_potential(pt(0.1, 0.1), pt(0.1, 0.1 + 1e-14), 0.0);
        assert!(matches!(err, Err(Error::Collision { .. })));
    }

    #[test]
    fn antipodal_detected() {
        // On the unit sphere chart, u and -u/|u|^2 are antipodal: B = 0.
        let uj = pt(0.5, 0.0);
        let uk = pt(-2.0, 0.0);
        let err = pair_potential(uj, uk, 1.0);
        assert!(matches!(err, Err(Error::Antipodal { .. })));
    }

    #[test]
    fn potential_energy_two_bodies() {
        let u = Configuration::from_points(&[pt(0.0, 0.0), pt(1.0, 0.0)]).unwrap();
        let m = Masses::new(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(potential_energy(&u, &m, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn potential_energy_equilateral() {
        let d = (3.0f64 / 8.0).powf(1.0 / 3.0);
        let u = Configuration::from_points(&[
            pt(0.0, 0.0),
            pt(d, 0.0),
            pt(d / 2.0, d * 3f64.sqrt() / 2.0),
        ])
        .unwrap();
        let m = Masses::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(
            potential_energy(&u, &m, 0.0).unwrap(),
            3.0 / (2.0 * d),
            max_relative = 1e-14
        );
    }

    #[test]
    fn potential_energy_mass_scaling() {
        let u = Configuration::from_points(&[pt(0.1, 0.2), pt(0.5, -0.3), pt(-0.4, 0.0)]).unwrap();
        let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
        let mc = Masses::new(vec![2.5, 5.0, 7.5]).unwrap();
        let u1 = potential_energy(&u, &m, 0.2).unwrap();
        let u2 = potential_energy(&u, &mc, 0.2).unwrap();
        assert_relative_eq!(u2, 2.5 * 2.5 * u1, max_relative = 1e-14);
    }

    #[test]
    fn kinetic_steady_values() {
        // second body at the origin contributes nothing
        let u = Configuration::from_points(&[pt(1.0, 0.0), pt(0.0, 0.0)]).unwrap();
        let m = Masses::new(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(kinetic_steady(&u, &m, 0.0).unwrap(), 2.0);
        assert_relative_eq!(kinetic_steady(&u, &m, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn lagrangian_rotation_invariance() {
        let u = Configuration::from_points(&[pt(0.3, 0.1), pt(-0.2, 0.4), pt(0.1, -0.5)]).unwrap();
        let m = Masses::new(vec![1.0, 2.0, 3.0]).unwrap();
        for &kappa in &[-0.8, 0.0, 0.3] {
            let l0 = lagrangian_steady(&u, &m, kappa).unwrap();
            for &theta in &[0.37, 1.9, -2.4] {
                let l1 = lagrangian_steady(&u.rotated(theta), &m, kappa).unwrap();
                assert_relative_eq!(l0, l1, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn lagrangian_small_kappa_limit() {
        // |L(kappa) - L(0)| should shrink linearly with kappa
        let u = Configuration::from_points(&[pt(0.3, 0.1), pt(-0.2, 0.4), pt(0.1, -0.5)]).unwrap();
        let m = Masses::new(vec![1.0, 1.0, 1.0]).unwrap();
        let l0 = lagrangian_steady(&u, &m, 0.0).unwrap();
        let mut prev_ratio = None;
        for &kappa in &[1e-3, 1e-4, 1e-5] {
            let diff = (lagrangian_steady(&u, &m, kappa).unwrap() - l0).abs();
            let ratio = diff / kappa;
            if let Some(p) = prev_ratio {
                let p: f64 = p;
                assert!((ratio / p - 1.0).abs() < 0.1, "ratio drifted: {p} vs {ratio}");
            }
            prev_ratio = Some(ratio);
        }
    }

    #[test]
    fn symplectic_apply_rotates_blocks() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let ju = symplectic_apply(&u);
        assert_eq!(ju.as_slice(), &[-2.0, 1.0, -4.0, 3.0]);
        // J^2 = -I
        let jju = symplectic_apply(&ju);
        assert_eq!(jju, -u);
    }
}
