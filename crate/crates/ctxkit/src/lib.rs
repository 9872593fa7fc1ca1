//! Possibilistic contextuality analysis.
//!
//! The crate models measurement scenarios and possibilistic empirical
//! models, detects logical and strong contextuality by exhaustive family
//! search, computes Cech cohomology obstructions over GF(2), and builds the
//! tower of joint models that sharpens the cohomological test level by
//! level. A command line tool (`ctxkit`) exposes the analyses over a JSON
//! or text model format.

pub mod cli;
pub mod cohomology;
pub(crate) mod compat;
pub mod cycles;
pub mod dot;
pub mod error;
pub mod gf2;
pub mod io;
pub mod joint;
pub mod model;
pub mod scenario;
pub mod zoo;

pub use error::{Error, Result};
