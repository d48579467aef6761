//! First-order penalty method for ε-stationary Stackelberg equilibria of
//! one-leader, k-follower games with strongly monotone follower subgames.
//!
//! The solver path ([`monotone`], [`lagrangian`], [`outer`]) only queries
//! gradients. [`oracle`] holds exact ground truth for affine-quadratic games
//! and is used for verification alone.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

// `!(a > b)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod lagrangian;
pub mod model;
pub mod monotone;
pub mod oracle;
pub mod outer;
pub mod problems;
pub mod scalar;
pub mod vector;

pub use error::{Error, Result};
pub use model::{
    check_epsilon_stationary, check_strong_monotonicity, follower_suboptimality, game_operator, BlockLayout, BoxDomain,
    FollowerCost, GradientSource, JointPoint, LeaderGradient, LeaderObjective, MonotonicityReport, SmoothnessConstants,
    StackelbergProblem, StationarityCertificate,
};
pub use oracle::{GroundTruth, QuadraticOracle};
pub use outer::{run, ScheduleParams, SolveOutcome, SolveStatus};
pub use scalar::Scalar;

pub type Problem = StackelbergProblem<f64>;
pub type Constants = SmoothnessConstants<f64>;
pub type Point = JointPoint<f64>;
pub type Schedule = ScheduleParams<f64>;
pub type Outcome = SolveOutcome<f64>;
pub type Record = outer::IterationRecord<f64>;
pub type CatalogEntry = problems::ProblemCatalogEntry<f64>;
