//! Finite-difference laboratory for the quasilinear wave–Klein-Gordon system
//!
//! ```text
//! □u       = N1(v, ∂v) + N2(u, ∂v)
//! (□ + 1)v = N1(v, ∂u) + N2(u, ∂u)
//! ```
//!
//! in two space dimensions, with `N1`, `N2` combinations of the classical
//! null forms. Besides time stepping, the crate provides the geometric
//! machinery used in the long-time analysis of this system: Lorentz vector
//! fields and tangential derivatives, higher and vector-field energies with
//! quasilinear corrections, dyadic cone decompositions with their localized
//! norms, hyperbolic coordinate charts, and an exact polynomial engine that
//! checks the algebraic identities behind all of it.

pub mod data;
pub mod diagnostics;
pub mod energies;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod jet;
pub mod nullforms;
pub mod poly;
pub mod regions;
mod sources;
pub mod tower;
pub mod vectorfields;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolutionConfig, ExitReason, Scheme, Trajectory};
pub use grid::{Axis, Field, Grid, GridSpec, Mask, State};
pub use nullforms::{Form, Frame, NullFormSpec};
pub use poly::{PolyExpr, SurdPoly};
pub use tower::{time_deriv_closure, Closure, TimeTower};
pub use vectorfields::{MultiIndex, VectorField};
