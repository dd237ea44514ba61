//! Multi-antenna receivers for binary-modulated ambient backscatter.
//!
//! A passive backscatter device (BD) reflects an ambient RF signal `s` with one
//! of two reflection coefficients `x0`, `x1`. An `n_r`-antenna receiver sees
//!
//! ```text
//! y = (alpha + x * beta) * s + n,    n ~ CN(0, I)
//! ```
//!
//! and has to decide `x` without knowing `s`. This crate provides
//!
//! * [`geometry`]: node placement and Friis channel vectors,
//! * [`signal`]: ambient/BD symbol generation and received samples,
//! * [`detector`]: projector beamformers, the decision matrix and its
//!   closed-form eigensystem, the optimum and simplified decision rules,
//! * [`estimation`]: blind beamformer estimation from preambles,
//! * [`special`]: incomplete gamma/beta, Marcum Q and Bessel functions,
//! * [`analytics`]: closed-form error probabilities and ROC quantities,
//! * [`sim`]: the seeded Monte-Carlo harness,
//! * [`validate`]: the invariant suite used by the `validate` CLI command.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod detector;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod linalg;
pub mod scenario;
pub mod signal;
pub mod sim;
pub mod special;
pub mod validate;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use special::Probability;

pub use analytics::{AlParams, DncfParams, ThetaGrid, ThetaMap};
pub use detector::{
    BdSymbol, CompositeChannel, DetectorModel, Hypothesis, MEigen, OptimumDetector, Projector,
    SimplifiedDetector,
};
pub use estimation::{BeamformerEstimate, EstimationMethod, SampleMatrix};
pub use geometry::{ArrayAxis, ArrayGeometry, ChannelPair, DistanceSet, Point2};
pub use scenario::{CsiMode, ReceiverKind, Scenario};
pub use signal::{AmbientKind, AmbientSpec, BdAlphabet, RxSample};
pub use sim::{RocPoint, RunResult};
