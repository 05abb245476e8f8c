//! Central configurations of the planar Newtonian n-body problem and their
//! numerical continuation, as relative equilibria, to surfaces of constant
//! positive and negative curvature.
//!
//! Positions live on the stereographic plane, so a single chart covers the
//! sphere, the plane, and the hyperbolic disk; the curvature κ enters the
//! conformal factor and the pair potential analytically, and continuation in
//! κ connects the classical planar configurations to their curved
//! counterparts.
//!
//! A complete continuation run from the library:
//!
//! ```
//! use curved_nbody::continuation::{continue_family, ContinuationOptions, Direction};
//! use curved_nbody::model::Masses;
//! use curved_nbody::seeds::{lagrange_triangle, seed_report};
//!
//! let a = lagrange_triangle(1.0, 1.0, 1.0).unwrap();
//! let m = Masses::new(vec![1.0, 1.0, 1.0]).unwrap();
//! let seed = seed_report(&a, &m).unwrap();
//! let family = continue_family(
//!     &seed,
//!     Direction::Positive,
//!     0.01,
//!     0.05,
//!     1e-13,
//!     &ContinuationOptions::default(),
//! )
//! .unwrap();
//! assert!(family.records.iter().all(|r| r.residual < 1e-13));
//! ```
//!
//! The `book/` directory of the repository walks through the underlying
//! model, the augmented system, and the embedding in narrative form; its
//! code snippets are kept in sync with the doc-tests in this crate.

pub mod cli;
pub mod continuation;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod gradient;
pub mod model;
pub mod seeds;

pub use error::{Error, Result};
pub use model::{Configuration, Curvature, Masses};
