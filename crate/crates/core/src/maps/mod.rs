//! Discrete flow maps: patchwise forward images of a step's regions, the
//! Newton-inverted backward map with closest-point extension, the SBDF
//! forward-map evaluator, and the transported L2 projections.

pub mod forward;
pub mod patch;
pub mod transport;

pub use forward::{compose_backward, ForwardMap, HistoryRef};
pub use patch::{Patch, PatchMap, RefEdge};
pub use transport::{transport_project, transported_rhs};
