//! Reconfiguration of modular robots in the loose sliding-cube model.

pub mod error;
pub mod lattice;
pub mod monotone;
pub mod motion;
pub mod router;
pub mod scaffold;
pub mod transport;

pub use error::{Error, Result};
pub use lattice::{Axis, Cell, CellBox, Configuration, Dimension, ModuleId, UnitStep};
pub mod feature_size;
pub mod fixtures;
pub mod io;
pub mod verifier;
