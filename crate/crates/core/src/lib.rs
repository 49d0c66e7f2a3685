//! Hybrid analog/digital combiner design and Monte Carlo evaluation for
//! uplink receivers built on dynamic metasurface antennas (DMAs) with b-bit
//! ADCs.
//!
//! The crate is generic over the floating point scalar through [`Real`]; the
//! `*64` aliases below fix it to `f64`.

pub mod design;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod quantizer;
pub mod scalar;
pub mod sdp;
pub mod seed;

pub use error::{DmaError, Result};
pub use scalar::{Real, C};

pub use design::{alternating_design, AnalogCombiner, DesignOptions, DesignResult, DigitalCombiner};
pub use model::{make_config, sample_channel, transmit, ChannelRealization, RawConfig, SignalBatch, SystemConfig};
pub use quantizer::{bussgang_stats, make_uniform_quantizer, BussgangStats, QuantizerSpec, Resolution, StatsMode};
pub use sdp::{solve_sdp, SdpMethod, SdpOptions, SdpProblem, SdpSolution};

pub type SystemConfig64 = model::SystemConfig<f64>;
pub type ChannelRealization64 = model::ChannelRealization<f64>;
pub type SignalBatch64 = model::SignalBatch<f64>;
pub type QuantizerSpec64 = quantizer::QuantizerSpec<f64>;
pub type BussgangStats64 = quantizer::BussgangStats<f64>;
pub type AnalogCombiner64 = design::AnalogCombiner<f64>;
pub type DigitalCombiner64 = design::DigitalCombiner<f64>;
pub type QuadraticForm64 = design::QuadraticForm<f64>;
pub type DesignResult64 = design::DesignResult<f64>;
pub type SdpProblem64 = sdp::SdpProblem<f64>;
pub type SdpSolution64 = sdp::SdpSolution<f64>;

pub type SystemConfig32 = model::SystemConfig<f32>;
pub type DesignResult32 = design::DesignResult<f32>;
