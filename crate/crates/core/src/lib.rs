//! Deterministic self-supervision corpus factory for 2D and 3D biomedical
//! images.
//!
//! Raw images are cut into multi-scale windows ([`sampler`]) and each window
//! is degraded four ways: dual masking ([`masking`]), smooth random
//! deformation ([`deformation`]), noisy spatially varying down-sampling
//! ([`lowres`]) and multi-stage sensor noise ([`noising`]). Every random draw
//! comes from a named substream ([`rng`]) so any output can be regenerated
//! bit-exactly from its manifest entry ([`io::manifest`], [`pipeline::verify`]).

pub mod config;
pub mod deformation;
pub mod error;
pub mod grid;
pub mod io;
pub mod lowres;
pub mod masking;
pub mod metrics;
pub mod noising;
pub mod pipeline;
pub mod resample;
pub mod rng;
pub mod sampler;
pub mod synth;

pub use config::{DegradationConfig, SigmaMode};
pub use deformation::{DeformationField, JacobianStats};
pub use error::{Error, Result};
pub use grid::{Grid, LabelGrid};
pub use rng::{rng_substream, Lineage, RngStream};
pub use sampler::{PatchRecord, SamplePlan};
