//! Shift dynamics on sectors of finite quotients of Euclidean buildings.
//!
//! The crate is organised bottom-up:
//!
//! * [`rootdata`] exact root data, alcove geometry and sector truncations,
//! * [`chamber`] finite chamber systems, importers and local validation,
//! * [`sectors`] sector germs, the ultrametric and the shift maps,
//! * [`transfer`] exact transfer matrices and Lipschitz estimates,
//! * [`spectra`] eigensolver, joint spectra and Koszul complexes.

pub mod chamber;
pub mod error;
pub mod rootdata;
pub mod sectors;
pub mod spectra;
pub mod transfer;

pub use error::{Error, Result};

/// Exact rational scalar used for all geometry and operator identities.
pub type Rational = num_rational::Ratio<i64>;
