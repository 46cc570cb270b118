//! Progressive feature transmission for linear classification over
//! Gaussian-mixture data.
//!
//! A device holds a feature vector and sends it to a server a few features
//! per slot, most discriminative first. After every slot the server decides
//! whether one more slot is worth its cost in expected entropy reduction.
//! The crate contains the statistical model, the classifier, gain-based
//! feature selection, entropy bounds, channel models, stopping rules, the
//! per-sample protocol with two baselines, and a seeded sweep harness.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod gains;
pub mod harness;
pub mod kv;
pub mod linclass;
pub mod protocol;
pub mod quad;
pub mod selftest;
pub mod statmodel;
pub mod stopping;

pub use bounds::{calibrate, calibrate_exp_bound, expected_h_ub, h_ub, BoundFit, DeltaMixture, ExpBoundParams};
pub use channel::{ChannelModel, SlotOutcome};
pub use error::{Error, Result};
pub use gains::{select, GainTable, SelectionPlan};
pub use linclass::{binary_entropy, classify, entropy, PartialFeatureVector, PosteriorVector};
pub use protocol::{metrics, plan_one_shot, Metrics, SchemeKind, Simulator, TrialLog};
pub use statmodel::{GmModel, Sample};
pub use stopping::{StopDecision, StoppingPolicy};
