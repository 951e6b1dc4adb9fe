//! Field-level simulation of IRS-assisted downlinks where the surface is
//! configured from the user's position rather than from channel estimates.
//!
//! * [`geometry`]: points, carrier, the discretized panel and its angles.
//! * [`field`]: reflected field, received power and SNR of a phase profile,
//!   and the per-element baseband model consistent with it.
//! * [`design`]: position-based phase profiles (focusing, wide, far-field,
//!   full illumination).
//! * [`protocol`]: user mobility, LS channel estimation and the
//!   threshold-triggered reconfiguration loop.
//! * [`overhead`]: air-time overhead of the proposed scheme and of
//!   CSI-based benchmarks.
//! * [`config`], [`experiments`], [`verify`]: scenario files and the
//!   experiment drivers behind the `irs-illum` command-line tool.
//!
//! The guide in `book/` walks through each of these with runnable snippets.

pub mod config;
pub mod design;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod io;
pub mod overhead;
pub mod protocol;
pub mod scenario;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FieldSample, PhaseProfile, RadioConfig};
pub use geometry::{AnglePair, Axis, CarrierConfig, IrsPanel, Point3};
pub use scenario::Scenario;

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/field.md")]
    mod field {}
    #[doc = include_str!("../../../book/src/focusing.md")]
    mod focusing {}
    #[doc = include_str!("../../../book/src/wide.md")]
    mod wide {}
    #[doc = include_str!("../../../book/src/far_field.md")]
    mod far_field {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/overhead.md")]
    mod overhead {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
