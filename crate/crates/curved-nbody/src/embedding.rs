//! Inverse stereographic projection: map plane configurations onto the
//! sphere (σ = +1) or the upper hyperboloid sheet (σ = −1), with the
//! rescaling to the unit surface and the optional z-reflection used for
//! plotting.
//!
//! With R = 1/√|κ| the maps are
//!
//! ```text
//! σ = +1: (x, y, z) = (2R²u_x, 2R²u_y, R(|u|² − R²)) / (|u|² + R²)
//! σ = −1: (x, y, z) = (2R²u_x, 2R²u_y, R(R² + |u|²)) / (R² − |u|²)
//! ```
//!
//! Both satisfy x² + y² + σz² = σR² identically, and their metric pullback
//! reproduces the conformal factor λ(u) = 4/(1 + κ|u|²)².

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Configuration;

/// n Cartesian points on the sphere or hyperboloid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddedConfiguration {
    pub points: Vec<Vector3<f64>>,
    /// +1 sphere, −1 hyperboloid.
    pub sigma: i8,
    /// Pre-rescale radius 1/√|κ|.
    pub radius: f64,
    pub rescaled: bool,
    pub reflected: bool,
}

impl EmbeddedConfiguration {
    /// Max-norm defect of x² + y² + σz² = σR² (or σ·1 once rescaled).
    pub fn constraint_defect(&self) -> f64 {
        let s = self.sigma as f64;
        let target = if self.rescaled {
            s
        } else {
            s * self.radius * self.radius
        };
        self.points
            .iter()
            .map(|p| (p.x * p.x + p.y * p.y + s * p.z * p.z - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Embed a plane configuration onto the curved surface for κ ≠ 0.
pub fn embed(u: &Configuration, kappa: f64) -> Result<EmbeddedConfiguration> {
    if kappa == 0.0 {
        return Err(Error::FlatEmbedding);
    }
    let r = 1.0 / kappa.abs().sqrt();
    let r2 = r * r;
    let sigma: i8 = if kappa > 0.0 { 1 } else { -1 };
    let mut points = Vec::with_capacity(u.n_bodies());
    for j in 0..u.n_bodies() {
        let p = u.point(j);
        let s = p.norm_squared();
        let xyz = if sigma > 0 {
            let denom = s + r2;
            Vector3::new(2.0 * r2 * p.x, 2.0 * r2 * p.y, r * (s - r2)) / denom
        } else {
            if s >= r2 {
                return Err(Error::DomainBoundary {
                    body: j,
                    norm_sq: s,
                    kappa,
                });
            }
            let denom = r2 - s;
            Vector3::new(2.0 * r2 * p.x, 2.0 * r2 * p.y, r * (r2 + s)) / denom
        };
        points.push(xyz);
    }
    Ok(EmbeddedConfiguration {
        points,
        sigma,
        radius: r,
        rescaled: false,
        reflected: false,
    })
}

/// Forward stereographic projection back to the plane. Inverse of [`embed`].
pub fn project(ec: &EmbeddedConfiguration) -> Result<Configuration> {
    if ec.rescaled {
        return Err(Error::InvalidInput(
            "project expects an unrescaled configuration".into(),
        ));
    }
    let r = ec.radius;
    let pts: Vec<Vector2<f64>> = ec
        .points
        .iter()
        .map(|p| {
            let scale = if ec.sigma > 0 {
                r / (r - p.z)
            } else {
                r / (r + p.z)
            };
            Vector2::new(p.x * scale, p.y * scale)
        })
        .collect();
    Configuration::from_points(&pts)
}

/// Divide all coordinates by R so that points lie on the unit surface;
/// optionally apply the z → −z reflection.
///
/// ```
/// use curved_nbody::embedding::{embed, latitude_report, rescale_unit};
/// use curved_nbody::model::Configuration;
/// use nalgebra::Vector2;
///
/// let u = Configuration::from_points(&[
///     Vector2::new(0.4, 0.0),
///     Vector2::new(-0.4, 0.0),
/// ]).unwrap();
/// let ec = rescale_unit(&embed(&u, 0.3).unwrap(), false).unwrap();
/// assert!(ec.constraint_defect() < 1e-12);
/// let report = latitude_report(&ec);
/// assert!((report[0].0 - report[1].0).abs() < 1e-14); // same latitude
/// ```
pub fn rescale_unit(ec: &EmbeddedConfiguration, reflect: bool) -> Result<EmbeddedConfiguration> {
    if ec.rescaled {
        return Err(Error::AlreadyRescaled);
    }
    let z_sign = if reflect { -1.0 } else { 1.0 };
    let points = ec
        .points
        .iter()
        .map(|p| Vector3::new(p.x / ec.radius, p.y / ec.radius, z_sign * p.z / ec.radius))
        .collect();
    Ok(EmbeddedConfiguration {
        points,
        sigma: ec.sigma,
        radius: ec.radius,
        rescaled: true,
        reflected: reflect,
    })
}

/// Per-body height z_j and distance ρ_j = √(x_j² + y_j²) to the rotation
/// axis, in body order.
pub fn latitude_report(ec: &EmbeddedConfiguration) -> Vec<(f64, f64)> {
    ec.points
        .iter()
        .map(|p| (p.z, (p.x * p.x + p.y * p.y).sqrt()))
        .collect()
}
