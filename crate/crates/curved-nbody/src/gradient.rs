//! Analytic gradient of the steady Lagrangian in real coordinates, a
//! finite-difference oracle, and a finite-difference Hessian.
//!
//! With A = |u_j − u_k|², B = |u_j|²|u_k|²κ² + 2(u_j·u_k)κ + 1 and
//! N the pair-potential numerator, the derivative of V with respect to the
//! second point is assembled from the partials of N, A and B:
//!
//! ```text
//! ∂V/∂x_k = ∂N/∂x_k / (2 √(AB)) − N (B ∂A/∂x_k + A ∂B/∂x_k) / (4 (AB)^{3/2})
//! ```

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Error, Result};
use crate::model::{
    conformal_factor, grad_pair_checked, lagrangian_steady, symplectic_apply, Configuration,
    Masses,
};

/// Relative FD step for the gradient oracle.
pub const GRAD_FD_STEP: f64 = 1e-6;
/// Relative FD step for the Hessian of the analytic gradient.
pub const HESSIAN_FD_STEP: f64 = 1e-5;

/// Gradient of V(u_j, u_k; κ) with respect to the coordinates of the second
/// point u_k.
pub fn grad_pair_potential(uj: Vector2<f64>, uk: Vector2<f64>, kappa: f64) -> Result<Vector2<f64>> {
    grad_pair_checked(uj, uk, kappa, 0, 1)
}

/// Gradient of the steady Lagrangian, ordered (∂x_1, ∂y_1, …, ∂x_n, ∂y_n).
///
/// Kinetic part: ∂T/∂x_k = m_k λ(u_k) x_k (1 − 2κ|u_k|²/(1 + κ|u_k|²)).
/// Potential part: ∂U/∂x_k = Σ_{j≠k} m_j m_k ∂V/∂x_k.
pub fn grad_lagrangian(u: &Configuration, m: &Masses, kappa: f64) -> Result<DVector<f64>> {
    let n = u.n_bodies();
    debug_assert_eq!(n, m.len());
    let mut g = DVector::zeros(2 * n);
    for k in 0..n {
        let p = u.point(k);
        let lam = conformal_factor(p, kappa)?;
        let s = p.norm_squared();
        let factor = m[k] * lam * (1.0 - 2.0 * kappa * s / (1.0 + kappa * s));
        let mut gk = factor * p;
        for j in 0..n {
            if j == k {
                continue;
            }
            gk += m[j] * m[k] * grad_pair_checked(u.point(j), p, kappa, j, k)?;
        }
        g[2 * k] = gk.x;
        g[2 * k + 1] = gk.y;
    }
    Ok(g)
}

/// Central finite differences of the steady Lagrangian, component step `h`.
pub fn grad_fd_oracle(u: &Configuration, m: &Masses, kappa: f64, h: f64) -> Result<DVector<f64>> {
    let dim = 2 * u.n_bodies();
    let mut g = DVector::zeros(dim);
    let base = u.as_vector();
    for i in 0..dim {
        let mut up = base.clone();
        let mut dn = base.clone();
        up[i] += h;
        dn[i] -= h;
        let lp = lagrangian_steady(&Configuration::from_flat(up)?, m, kappa)?;
        let lm = lagrangian_steady(&Configuration::from_flat(dn)?, m, kappa)?;
        g[i] = (lp - lm) / (2.0 * h);
    }
    Ok(g)
}

/// Default FD step scaled by the configuration size.
pub fn default_grad_step(u: &Configuration) -> f64 {
    GRAD_FD_STEP * u.as_vector().amax().max(1.0)
}

/// Default Hessian FD step scaled by the configuration size.
pub fn default_hessian_step(u: &Configuration) -> f64 {
    HESSIAN_FD_STEP * u.as_vector().amax().max(1.0)
}

/// Central differences of the analytic gradient, symmetrized as (H + Hᵀ)/2.
pub fn hessian_fd(u: &Configuration, m: &Masses, kappa: f64, h: f64) -> Result<DMatrix<f64>> {
    let dim = 2 * u.n_bodies();
    let mut raw = DMatrix::zeros(dim, dim);
    let base = u.as_vector();
    for i in 0..dim {
        let mut up = base.clone();
        let mut dn = base.clone();
        up[i] += h;
        dn[i] -= h;
        let gp = grad_lagrangian(&Configuration::from_flat(up)?, m, kappa)?;
        let gm = grad_lagrangian(&Configuration::from_flat(dn)?, m, kappa)?;
        let col = (gp - gm) / (2.0 * h);
        raw.set_column(i, &col);
    }
    Ok((&raw + raw.transpose()) * 0.5)
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix, sorted
/// ascending by absolute value.
pub fn spectrum(h: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let eig = h
        .clone()
        .try_symmetric_eigen(1e-14, 10_000)
        .ok_or(Error::EigenFailure)?;
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Smallest |eigenvalue| of the Hessian restricted to the orthogonal
/// complement of the rotation direction 𝒥u.
pub fn min_abs_eigen_restricted(h: &DMatrix<f64>, u: &DVector<f64>) -> Result<f64> {
    let dim = h.nrows();
    let q = symplectic_apply(u).normalize();
    // Householder reflector sending q to ±e_1; its remaining columns span
    // the orthogonal complement of q.
    let mut w = q.clone();
    w[0] += w[0].signum() * 1.0;
    let w = w.normalize();
    let mut basis = DMatrix::zeros(dim, dim - 1);
    for c in 1..dim {
        let mut col = DVector::zeros(dim);
        col[c] = 1.0;
        col -= &w * (2.0 * w.dot(&col));
        basis.set_column(c - 1, &col);
    }
    let restricted = basis.transpose() * h * &basis;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let (vals, _) = spectrum(&restricted)?;
    Ok(vals[0].abs())
}
