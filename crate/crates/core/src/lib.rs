//! Numerics for stochastic fractional heat equations with reaction terms:
//! special functions, subordinated kernels, noise, a spectral mild-solution
//! solver with blowup detection, the one-dimensional reduction processes and
//! the Osgood classifier.

pub mod blowup;
pub mod drift;
pub mod error;
pub mod expsum;
pub mod quad;
pub mod reduction;
pub mod kernels;
pub mod model;
pub mod noise;
pub mod osgood;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
