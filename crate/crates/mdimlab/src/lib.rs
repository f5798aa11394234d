//! Numerical laboratory for the metric mean dimension of interval maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`] holds the block sequences `(a_k)`, `(b_k)` and their validation.
//! * [`horseshoe_map`] evaluates the horseshoe map `T_{a,b}` and its closed-form dimension.
//! * [`maps`] defines the map traits shared by the engines, plus a few builtin maps.
//! * [`metric_engine`] counts separated / spanning / mesh sets under Bowen metrics.
//! * [`transition_spectral`] builds ε-cover transition matrices and bounds their spectral radius.
//! * [`orbit_tube`] brackets the volume of orbit tubes in `[0,1]^n`.
//! * [`fractal_dims`] estimates box, Assouad and Assouad-spectrum dimensions of point clouds.
//! * [`cli`] is the command-line front end.
//!
//! Logarithms are natural everywhere.

pub mod cli;
pub mod error;
pub mod fractal_dims;
pub mod horseshoe_map;
pub mod maps;
pub mod metric_engine;
pub mod orbit_tube;
pub mod params;
pub mod transition_spectral;
mod util;

pub use error::{Error, Result};
