//! Learnability from indirect supervision on finite spaces.
//!
//! A learner observes annotations `O` drawn through an unknown transition
//! `T0(x)` applied to the gold label `h0(x)`, and fits `(h, T)` jointly by
//! empirical risk minimization. This crate computes the quantities that
//! decide whether that works (separation, concentration and identifiability
//! levels, combinatorial dimensions) exactly on small instances, and runs
//! seeded experiments against the resulting generalization bound.

pub mod cli;
pub mod complexity;
pub mod error;
pub mod joint;
pub mod learning;
pub mod losses;
pub mod scenario;
pub mod separation;
pub mod spaces;
pub mod transition;

pub use error::{Error, Result};
pub use losses::{ConcentrationSets, Loss};
pub use scenario::{Dataset, HypothesisClass, Labeling, Scenario};
pub use spaces::{kl, total_variation, Distribution, DivergenceValue, FiniteSpace};
pub use transition::{ClassSpec, TransitionClass, TransitionHypothesis};
