//! Certificates for quantum-metric bounds on ideals.
//!
//! Two settings are covered. AF towers are finite Bratteli towers of
//! multi-matrix algebras with a faithful tracial state; their ideals come
//! from edge-closed sets of diagram blocks. For `C(X)` with `X` a finite
//! metric space, ideals are the functions vanishing on a subset `F`.
//! Every quantity the library reports is either an explicit upper bound
//! or a sampled lower estimate that can be checked against it.

pub mod algebra;
pub mod commutative;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod ideals;
pub mod quantum_metric;
pub mod rng;
pub mod tower;

pub use algebra::{op_norm, BlockShape, Element, TraceWeights};
pub use commutative::{FiniteMetricSpace, LipFunction};
pub use error::{Error, Result};
pub use ideals::IdealSupport;
pub use tower::{BetaSequence, BratteliTower, TowerConfig};
