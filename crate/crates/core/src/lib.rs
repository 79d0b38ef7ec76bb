//! State transition diagrams with a stream-based semantics.
//!
//! The crate parses STD specifications, executes them under a bounded
//! operational semantics, applies and checks refinement rules, and detects
//! feature conflicts as the absence of a common refinement.

pub mod callproc;
pub mod features;
pub mod interp;
pub mod model;
pub mod refine;
pub mod text;
