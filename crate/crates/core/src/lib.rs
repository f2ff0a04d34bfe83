//! Numerics for nonholonomic systems studied through moving frames:
//! structure functions and connections of coframes, Cartan's normalisation
//! for Engel-type constraints, nonholonomic geodesics, Chaplygin-ball
//! dynamics and conformal Hamiltonization tests.

pub mod cartan;
pub mod chaplygin;
pub mod chart;
pub mod coframes;
pub mod diff;
pub mod error;
pub mod exterior;
pub mod expr;
pub mod forms;
pub mod geodesic;
pub mod hamiltonize;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod scalar;
pub mod so3;
pub mod suite;

pub use diff::DiffEngine;
pub use error::{Error, Result};
pub use scalar::{Dual, Real};
