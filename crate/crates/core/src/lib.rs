//! Orthogonal polynomials for rationally modified measures and for discrete
//! Sobolev inner products with point evaluations off [-1, 1], diagonal Padé
//! denominators for Stieltjes-plus-rational functions, and numerical checks of
//! their relative asymptotics.

pub mod commands;
pub mod error;
pub mod exec;
pub mod joukowski;
pub mod linalg;
pub mod measure;
pub mod modified;
pub mod numeric;
pub mod pade;
pub mod sobolev;
pub mod verify;
pub mod zeros;

pub use error::{Error, Result};
