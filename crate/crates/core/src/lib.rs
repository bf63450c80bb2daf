//! Simulation and analysis toolkit for emitters coupled to gas-tuned
//! micro-ring cavities: ring resonances and tuning, Purcell-modified emission,
//! zero-field spin spectroscopy, a Levenberg–Marquardt fitter, and a seeded
//! scenario pipeline that ties them together.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below are the concrete types most callers want.

// `!(x > 0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod decay;
pub mod emitter;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod pulse;
pub mod rng;
pub mod scalar;
pub mod spin;

pub use error::{Error, Result, Warning};
pub use scalar::Real;

pub type RingGeometryF64 = cavity::RingGeometry<f64>;
pub type CavityModeF64 = cavity::CavityMode<f64>;
pub type TuningStateF64 = cavity::TuningState<f64>;
pub type EmitterParamsF64 = emitter::EmitterParams<f64>;
pub type PurcellResultF64 = emitter::PurcellResult<f64>;
pub type DecayTraceF64 = decay::DecayTrace<f64>;
pub type SpinParamsF64 = spin::SpinParams<f64>;
pub type OdmrDatasetF64 = spin::OdmrDataset<f64>;
pub type PulseSequenceF64 = pulse::PulseSequence<f64>;
pub type FitResultF64 = fit::FitResult<f64>;

pub type RingGeometryF32 = cavity::RingGeometry<f32>;
pub type CavityModeF32 = cavity::CavityMode<f32>;
pub type FitResultF32 = fit::FitResult<f32>;
