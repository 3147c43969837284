//! Formal module laws over local fields at finite p-adic precision.
//!
//! The crate builds one-dimensional formal module laws from Lubin-Tate input
//! series over a two-step tower of local rings, analyzes their torsion by
//! Newton polygons and division towers, and verifies dimension/counting laws
//! on explicit compact matrix groups. The `pitower` binary exposes the same
//! functionality as a CLI with JSON interchange.

pub mod error;
pub mod ring;

pub use error::{Error, Result};
pub mod series;
