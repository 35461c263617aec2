//! Cut-cell finite elements on a fixed Cartesian grid for convection
//! diffusion on a domain transported by its own solution velocity.
//!
//! The crate is organized bottom up: geometry primitives, closed-curve
//! representations with monotone-piece queries, surface tracking, cut-cell
//! fragmentation and curved-region decomposition, isoparametric transforms,
//! finite element assembly with ghost penalties, discrete flow maps, and the
//! semi-implicit multistep stepper driving the whole pipeline.

pub mod basis;
pub mod curve;
pub mod cut;
pub mod error;
pub mod fem;
pub mod geom;
pub mod grid;
pub mod maps;
pub mod mesh;
pub mod ode;
pub mod problems;
pub mod quadrature;
pub mod sbdf;
pub mod stepper;

pub use error::{Result, SolverError};
pub use geom::{Aabb, Mat2, Vec2};
pub use grid::GridSpec;
pub use sbdf::SbdfScheme;
