//! Rotationally symmetric graphical mean curvature flow with free boundary on
//! a rotationally symmetric support hypersurface.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod geometry;
pub mod profile;
pub mod solver;
