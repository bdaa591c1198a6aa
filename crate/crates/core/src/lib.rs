//! Tools for exploring the non-adaptive lower bound for k-junta testing:
//! hard-instance generators, exact junta distances, the hidden-set oracle
//! games with their reductions, and analytic binomial bounds.

pub mod binom;
pub mod boolfn;
pub mod distance;
pub mod error;
pub mod hardgen;
pub mod harness;
pub mod matching;
pub mod params;
pub mod scalar;
pub mod tasks;

pub use binom::{BinomialSpec, RoosBound};
pub use boolfn::{BitString, BoolFn, BoolFunction, IndexSet, StructuredFn, TruthTable};
pub use distance::{Distance, DistanceReport, MatchingCertificate};
pub use error::{Error, Result};
pub use hardgen::{RandomStream, Seed};
pub use params::{derive_params, Mode, Params};
pub use scalar::Real;
pub use tasks::{ElementQueryPlan, HiddenSet, SetQueryPlan, StringQueryPlan, Verdict};

/// Double-precision binomial law.
pub type Binomial = BinomialSpec<f64>;
/// Single-precision binomial law.
pub type Binomial32 = BinomialSpec<f32>;
