//! Irregular repetition slotted ALOHA with two-step successive interference
//! cancellation.
//!
//! * [`frame`] and [`dist`]: frame configuration, degree distributions and
//!   random transmission patterns.
//! * [`sic`]: the peeling decoder and the two-step protocol with feedback.
//! * [`energy`]: closed-form replica split, energy, loss and throughput model.
//! * [`stopset`]: stopping-set catalog, enumeration and canonical forms.
//! * [`mc`]: seeded, parallel Monte Carlo sweeps.

pub mod combin;
pub mod dist;
pub mod energy;
pub mod error;
pub mod frame;
pub mod mc;
pub mod scalar;
pub mod sic;
pub mod stopset;

pub use dist::DegreeDistribution;
pub use energy::{
    AnalyticOptions, EnergyReport, ExpectationMode, GammaSplit, LossEstimate, LossForm,
    ZeroReplicaRule,
};
pub use error::{Error, Result};
pub use frame::{FrameConfig, FrameGraph};
pub use mc::{LoadPointStats, Scheme, SweepSpec};
pub use scalar::Scalar;
pub use sic::{DecodeOutcome, Feedback, TwoStepOutcome};
pub use stopset::{EnumerationBounds, StoppingSet};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type Distribution = DegreeDistribution<f64>;
pub type ExactDistribution = DegreeDistribution<Exact>;
pub type Gamma = GammaSplit<f64>;
pub type ExactGamma = GammaSplit<Exact>;
pub type Report = EnergyReport<f64>;
pub type ExactReport = EnergyReport<Exact>;
