//! Radiomics engine: global handcrafted features, voxel-wise parametric maps,
//! feature selection and case-level evaluation over 3D volumes.

pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod maps;
pub mod preprocess;
pub mod selection;
pub mod texture;
pub mod features;
pub mod fusion;
pub mod metrics;
pub mod phantoms;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{Geometry, MaskGrid, VolumeGrid};
