//! Holonomic approximation of first-order jet sections by convex integration.
//!
//! Given a section σ = (f, φ) of `J¹(ℝᵐ×ℝ×ℝᵏ, ℝⁿ)` near the cube
//! `A = [0,1]ᵐ × {0} × {0}` and a tolerance ε > 0, this crate produces a
//! graph deformation `A_δ` of the cube and a map `f₁` near `A_δ` whose 1-jet
//! is ε-close to σ, then verifies every constraint numerically on grids with
//! Lipschitz inflation.
//!
//! The construction goes through a first-order relation on pairs
//! `(δ, h) : ℝᵐ → ℝ × ℝⁿ` whose principal slices are intersections of
//! hyperbola interiors with fully closed-form geometry; solutions are built
//! by one-dimensional corrugation, one coordinate direction at a time, and
//! extended off the deformed cube by an explicit ansatz.
//!
//! ```
//! use holoapprox::jetmodel::{Dims, JetSection};
//! use holoapprox::corrugation::{solve, SolveOptions};
//!
//! // walk up the mountain: f = x with prescribed zero slope
//! let sigma = JetSection::from_sources(
//!     Dims::new(1, 0, 1).unwrap(),
//!     &["x1"],
//!     &[vec!["0", "0"]],
//!     0.1,
//! ).unwrap();
//! let (pair, report) = solve(&sigma, 1.0, &SolveOptions::default()).unwrap();
//! assert!(report.final_margin > 0.0);
//! let (delta, _, h, _) = pair.jet(&[0.5]).unwrap();
//! assert!(delta.abs() < 1.0 && (h[0] - 0.5).abs() < 1.0);
//! ```

pub mod corrugation;
pub mod error;
pub mod expr;
pub mod extension;
pub mod jetmodel;
pub mod numcore;
pub mod relation;
pub mod verify;

pub use error::{Error, Result};
