//! Knowledge graph embedding with generalized Householder relation transforms
//! on products of elliptic and hyperbolic spaces.
//!
//! * [`geometry`]: quadratic forms, generalized reflections, `Orth(U, w)` and its factorization.
//! * [`manifolds`]: elliptic and hyperboloid kernels (exponential map, boosts, distances).
//! * [`model`]: parameter layout, scoring, checkpoints and pattern diagnostics.
//! * [`training`]: self-adversarial loss, gradients, Adam and the training loop.
//! * [`data`] and [`evaluation`]: triple files and filtered ranking metrics.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod manifolds;
pub mod model;
pub mod numeric;
pub mod selfcheck;
pub mod synthetic;
pub mod training;

pub use data::{Dataset, FilterIndex, RawTriple, Split, Triple, Vocab};
pub use error::{Error, Result};
pub use evaluation::{evaluate, per_relation_report, rank_triple, MetricsReport, RankResult, RelationReport, Side};
pub use geometry::{ReflectorSet, Reflectors, Weights};
pub use model::checkpoint::Checkpoint;
pub use model::{ComponentSpec, Geometry, ManifoldConfig, Model, ParamClass, Precision};
pub use training::{train, train_from, TrainConfig, TrainOutcome};
