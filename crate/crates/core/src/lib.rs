//! Deterministic, virtual-time micro-aerial-vehicle mission simulator.
//!
//! The crate couples a closed-loop drone mission simulation (synthetic voxel
//! worlds, point-mass kinematics, occupancy mapping, motion planning, PD
//! tracking) with a compute model that charges per-kernel latencies to a
//! virtual clock. Mission time, velocity, and battery energy therefore respond
//! to the modeled compute subsystem (core/frequency scaling, map resolution,
//! cloud offload) instead of host machine speed, and every run is reproducible
//! from its seed.

pub mod compute;
pub mod control;
pub mod energy;
pub mod geom;
pub mod grid;
pub mod perception;
pub mod planning;
pub mod rng;
pub mod vehicle;
pub mod workloads;
pub mod world;

pub use geom::{Aabb, Vec3};
