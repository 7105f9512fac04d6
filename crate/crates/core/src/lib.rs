//! Surfaces with one constant principal curvature in three-dimensional
//! space forms, built as tubes around framed curves.

pub mod ambient;
pub mod curves;
pub mod error;
pub mod examples;
pub mod flow;
pub mod geometry;
pub mod jet;
pub mod profile;
pub mod tubes;

pub use ambient::{PseudoVec, SpaceForm, Vec4};
pub use error::{GeomError, Result};
pub use jet::{Jet, JetShape};
