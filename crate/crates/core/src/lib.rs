//! Exact-arithmetic toolkit for multiseed Villadsen direct systems: level
//! recursions, certified enclosures of their classification invariants, the
//! ordered `K₀` group, family synthesis and fingerprint comparison.

pub mod cli;
pub mod error;
pub mod fingerprint;
pub mod invariants;
pub mod k0;
pub mod numerics;
pub mod synth;
pub mod system;

pub use error::{Error, Result};
pub use numerics::{Enclosure, Rational};
