//! Rasterization, periodic distance transforms, inradius and cover times on
//! the unit torus.

pub mod cover;
pub mod edt;
pub mod inradius;
pub mod raster;

pub use cover::{cover_identity_check, cover_time, CoverRecord, CoverTracker, IdentityRow};
pub use edt::{distance_field, distance_field_from_mask, inradius, DistanceField, Inradius};
pub use inradius::{
    for_each_checkpoint, inradius_trajectory, mean_inradius_curve, InradiusCurve, InradiusRow, TorusConfig,
};
pub use raster::{rasterize, rasterize_free, TorusOccupancy, VoxelSet};
