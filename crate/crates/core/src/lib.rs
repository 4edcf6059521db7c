//! Design toolkit for structured super-hydrophobic ("lotus") surfaces.
//!
//! The crate is split by concern:
//!
//! - [`wetting`]: Cassie-Baxter apparent angles, hysteresis and droplet cap geometry.
//! - [`lattice`]: honeycomb / pillar unit cells, surface fractions, zone tiling and design rules.
//! - [`gradient`]: inverse design of wall-thickness ramps and quasi-static droplet transport.
//! - [`maskio`]: GDSII stream writer/reader, SVG previews and layout statistics.
//!
//! Lengths of pattern geometry are integer nanometers ([`lattice::Nm`]); droplet physics
//! is in SI units. Angles are degrees on every public surface.

pub mod error;
pub mod gradient;
pub mod lattice;
pub mod maskio;
pub mod wetting;

pub use error::{Error, Result};
