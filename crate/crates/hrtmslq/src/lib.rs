//! Matching residents to hospitals under tied preferences and soft lower
//! quotas.
//!
//! Hospitals declare a quota interval `[lower, upper]`; the upper quota is
//! hard, the lower one is a service target, and the objective is a stable
//! matching maximizing the total satisfaction `sum_h min(1, load(h)/lower(h))`.
//! With strict lists, stability pins every hospital's load (rural hospitals
//! theorem) and there is nothing to optimize, but ties make the load profile
//! and hence the score vary across stable matchings.
//!
//! The crate provides:
//!
//! - [`model`]: instances, matchings, exact rational scoring, stability.
//! - [`double_proposal`]: a deterministic, strategy-proof solver whose
//!   worst-case score guarantee beats arbitrary tie-breaking.
//! - [`classic`]: tie-breaking policies, plain deferred acceptance, and a
//!   manipulable greedy variant kept as a counterexample.
//! - [`oracle`]: exhaustive stable-matching enumeration (OPT/WST) and the
//!   per-model bound functions.
//! - [`strategyproof`]: the auxiliary-instance equivalence behind
//!   strategy-proofness, plus manipulation probes.
//! - [`instances`]: seeded generators, worst-case gap families, and the
//!   independent-set reduction.
//! - [`io`]: the text formats shared with the command-line tool.

pub mod classic;
pub mod double_proposal;
pub mod instances;
pub mod io;
pub mod model;
pub mod oracle;
pub mod samples;
pub mod score;
pub mod strategyproof;

pub use model::{Instance, Matching, PreferenceOrder};
pub use score::Score;
