//! Signaling local polytopes for the two-party, two-input, two-output Bell scenario.
//!
//! Behaviors are 4x4 tables indexed by `(2x + a, 2y + b)`. Vertex sets come from
//! deterministic responses to noisy input channels; membership, facets and
//! projections are decided with exact rational arithmetic.

pub mod behavior;
pub mod catalog;
pub mod channel;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod hull;
pub mod lp;
pub mod optimize;
pub mod poly;
pub mod quantum;
pub mod randomness;
pub mod relabel;
pub mod relax;
pub mod scalar;

pub use behavior::{Behavior, BehaviorF, BehaviorQ, NsConstraint};
pub use channel::{ChannelParams, PolytopeModel, PolytopeSpec};
pub use error::{Error, Result};
pub use scalar::Q;
