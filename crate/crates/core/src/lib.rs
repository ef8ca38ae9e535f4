//! Multi-frequency inverse source imaging by direct sampling.
//!
//! A time-dependent source `F(x, t)` supported on `D × (t_min, t_max)` is
//! Fourier transformed over its window; [`forward`] synthesizes far-field
//! (2D) or near-field (3D) data over a band of wavenumbers, [`spectral`]
//! recovers supporting intervals from the inverse transform in `k`, and
//! [`indicator`] images strips, annuli and their intersections on a grid.

mod error;
pub mod forward;
pub mod geometry;
pub mod indicator;
pub mod metrics;
pub mod poly;
pub mod source;
pub mod spectral;

pub use error::{Error, Result};
pub use forward::{FrequencyGrid, MeasurementKind, MeasurementSet, NoiseMode, Stations};
pub use geometry::{Direction, Domain, Interval, Point, Region, SamplingGrid};
pub use indicator::{Endpoint, IndicatorField, Mask, PipelineOptions, Reconstruction};
pub use metrics::{Classification, RecoveryReport};
pub use num_complex::Complex64;
pub use poly::Polynomial;
pub use source::{SourceModel, TimeWindow};
pub use spectral::Profile;
