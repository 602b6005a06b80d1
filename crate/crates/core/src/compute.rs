//! Virtual-time compute model.
//!
//! Kernel latencies are defined at a reference operating point (4 cores,
//! 2.2 GHz) and scaled by frequency ratio and an Amdahl-style parallel
//! fraction for core count. The occupancy-map kernel additionally scales with
//! map resolution. A cloud link can replace a kernel's edge latency with
//! transfer + RTT + remote execution. All latencies are charged to a virtual
//! clock, never measured from the host.

use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use thiserror::Error;

pub const REF_CORES: u32 = 4;
pub const REF_FREQUENCY_GHZ: f64 = 2.2;
/// Map resolution at which occupancy-map reference latencies were defined.
pub const REF_MAP_RESOLUTION: f64 = 0.15;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareProfile {
    pub name: String,
    /// Active cores; the supported grid is {2, 3, 4}.
    pub cores: u32,
    /// Clock, GHz; the supported grid is {0.8, 1.5, 2.2}.
    pub frequency: f64,
    /// Average compute power at (4 cores, 2.2 GHz), watts.
    pub base_compute_watts: f64,
    /// Lower bound on compute power after scaling, watts.
    pub compute_watts_floor: f64,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self::tx2(REF_CORES, REF_FREQUENCY_GHZ)
    }
}

impl HardwareProfile {
    /// Built-in embedded-board profile at a grid operating point.
    pub fn tx2(cores: u32, frequency: f64) -> Self {
        Self {
            name: format!("tx2-{cores}c-{frequency}"),
            cores,
            frequency,
            base_compute_watts: 10.0,
            compute_watts_floor: 4.0,
        }
    }

    /// Compute power scales linearly with frequency and active cores, with a
    /// floor for the uncore/idle share.
    pub fn compute_watts(&self) -> f64 {
        let scaled = self.base_compute_watts
            * (self.frequency / REF_FREQUENCY_GHZ)
            * (self.cores as f64 / REF_CORES as f64);
        scaled.max(self.compute_watts_floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    PointCloud,
    OccupancyMap,
    CollisionCheck,
    ObjectDetection,
    TrackingBuffered,
    TrackingRealtime,
    Gps,
    Slam,
    Pid,
    ShortestPath,
    FrontierExploration,
    Lawnmower,
    PathTracking,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelProfile {
    pub kernel: KernelId,
    /// Latency at the reference operating point, milliseconds.
    pub t_ref_ms: f64,
    /// Fraction of the kernel that scales with core count.
    pub parallel_fraction: f64,
    /// Occupancy map only: latency multiplier `(res_ref / res)^exponent`.
    pub resolution_exponent: f64,
}

impl KernelProfile {
    pub fn new(kernel: KernelId, t_ref_ms: f64) -> Self {
        let parallel_fraction = match kernel {
            KernelId::ShortestPath | KernelId::FrontierExploration | KernelId::Lawnmower => 0.8,
            KernelId::OccupancyMap => 0.6,
            KernelId::ObjectDetection => 0.9,
            KernelId::Slam => 0.5,
            _ => 0.0,
        };
        let resolution_exponent = match kernel {
            KernelId::OccupancyMap => 1.5,
            _ => 0.0,
        };
        Self {
            kernel,
            t_ref_ms,
            parallel_fraction,
            resolution_exponent,
        }
    }
}

/// Modeled execution latency in seconds for a kernel on the given hardware.
/// `map_resolution` applies only to kernels with a resolution exponent.
pub fn kernel_latency(
    profile: &KernelProfile,
    hw: &HardwareProfile,
    map_resolution: Option<f64>,
) -> f64 {
    let freq_scale = REF_FREQUENCY_GHZ / hw.frequency;
    let sigma = profile.parallel_fraction;
    let core_scale = (1.0 - sigma) + sigma * (REF_CORES as f64 / hw.cores as f64);
    let res_scale = match map_resolution {
        Some(res) if profile.resolution_exponent > 0.0 => {
            (REF_MAP_RESOLUTION / res).powf(profile.resolution_exponent)
        }
        _ => 1.0,
    };
    profile.t_ref_ms * 1e-3 * freq_scale * core_scale * res_scale
}

/// Per-workload reference latency table at (4 cores, 2.2 GHz).
#[derive(Debug, Clone)]
pub struct KernelTable {
    profiles: Vec<KernelProfile>,
}

impl KernelTable {
    pub fn new(profiles: Vec<KernelProfile>) -> Self {
        Self { profiles }
    }

    pub fn get(&self, kernel: KernelId) -> Option<&KernelProfile> {
        self.profiles.iter().find(|p| p.kernel == kernel)
    }

    pub fn profiles(&self) -> &[KernelProfile] {
        &self.profiles
    }

    pub fn override_profile(&mut self, profile: KernelProfile) {
        if let Some(p) = self.profiles.iter_mut().find(|p| p.kernel == profile.kernel) {
            *p = profile;
        } else {
            self.profiles.push(profile);
        }
    }

    /// Latency in seconds, zero for kernels absent from this table.
    pub fn latency(&self, kernel: KernelId, hw: &HardwareProfile, map_resolution: Option<f64>) -> f64 {
        self.get(kernel)
            .map(|p| kernel_latency(p, hw, map_resolution))
            .unwrap_or(0.0)
    }

    pub fn scanning() -> Self {
        Self::new(vec![
            KernelProfile::new(KernelId::Gps, 0.0),
            KernelProfile::new(KernelId::Lawnmower, 89.0),
            KernelProfile::new(KernelId::PathTracking, 1.0),
        ])
    }

    pub fn aerial_photography() -> Self {
        Self::new(vec![
            KernelProfile::new(KernelId::ObjectDetection, 307.0),
            KernelProfile::new(KernelId::TrackingBuffered, 80.0),
            KernelProfile::new(KernelId::TrackingRealtime, 18.0),
            KernelProfile::new(KernelId::Gps, 0.0),
            KernelProfile::new(KernelId::Pid, 0.0),
            KernelProfile::new(KernelId::PathTracking, 1.0),
        ])
    }

    pub fn package_delivery() -> Self {
        Self::new(vec![
            KernelProfile::new(KernelId::PointCloud, 2.0),
            KernelProfile::new(KernelId::OccupancyMap, 630.0),
            KernelProfile::new(KernelId::CollisionCheck, 1.0),
            KernelProfile::new(KernelId::Gps, 0.0),
            KernelProfile::new(KernelId::Slam, 55.0),
            KernelProfile::new(KernelId::ShortestPath, 182.0),
            KernelProfile::new(KernelId::PathTracking, 1.0),
        ])
    }

    pub fn mapping() -> Self {
        Self::new(vec![
            KernelProfile::new(KernelId::PointCloud, 2.0),
            KernelProfile::new(KernelId::OccupancyMap, 482.0),
            KernelProfile::new(KernelId::CollisionCheck, 1.0),
            KernelProfile::new(KernelId::Gps, 0.0),
            KernelProfile::new(KernelId::Slam, 46.0),
            KernelProfile::new(KernelId::FrontierExploration, 2647.0),
            KernelProfile::new(KernelId::PathTracking, 1.0),
        ])
    }

    pub fn search_and_rescue() -> Self {
        Self::new(vec![
            KernelProfile::new(KernelId::PointCloud, 2.0),
            KernelProfile::new(KernelId::OccupancyMap, 427.0),
            KernelProfile::new(KernelId::CollisionCheck, 1.0),
            KernelProfile::new(KernelId::ObjectDetection, 271.0),
            KernelProfile::new(KernelId::Gps, 0.0),
            KernelProfile::new(KernelId::Slam, 45.0),
            KernelProfile::new(KernelId::FrontierExploration, 2693.0),
            KernelProfile::new(KernelId::PathTracking, 1.0),
        ])
    }

    pub fn slam_circle() -> Self {
        Self::new(vec![
            KernelProfile::new(KernelId::Gps, 0.0),
            KernelProfile::new(KernelId::Slam, 55.0),
            KernelProfile::new(KernelId::PathTracking, 1.0),
        ])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudLink {
    /// Link bandwidth, bits per second.
    pub bandwidth_bps: f64,
    /// Round-trip time, seconds.
    pub rtt: f64,
    /// Remote-over-edge execution speedup, >= 1.
    pub speedup: f64,
    /// Kernels eligible for offload.
    pub kernels: Vec<KernelId>,
    /// Request payload per offloaded invocation, bytes.
    #[serde(default = "default_payload")]
    pub payload_bytes: f64,
}

fn default_payload() -> f64 {
    2_000_000.0
}

#[derive(Debug, Error)]
pub enum OffloadError {
    #[error("kernel {0:?} is not enabled on the cloud link")]
    KernelNotOffloadable(KernelId),
}

/// Offloaded latency: payload transfer + RTT + remote execution.
pub fn offload_latency(
    kernel: KernelId,
    edge_latency: f64,
    link: &CloudLink,
    payload_bytes: f64,
) -> Result<f64, OffloadError> {
    if !link.kernels.contains(&kernel) {
        return Err(OffloadError::KernelNotOffloadable(kernel));
    }
    Ok(payload_bytes * 8.0 / link.bandwidth_bps + link.rtt + edge_latency / link.speedup)
}

/// Deterministic event queue over virtual time. Events due at the same
/// timestamp fire in insertion order.
#[derive(Debug)]
pub struct VirtualClock<T> {
    now: f64,
    seq: u64,
    pending: BinaryHeap<Entry<T>>,
}

#[derive(Debug)]
struct Entry<T> {
    at: f64,
    seq: u64,
    payload: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl<T> Eq for Entry<T> {}
impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed: BinaryHeap is a max-heap, we want earliest (then FIFO)
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> VirtualClock<T> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            seq: 0,
            pending: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Schedule a completion `latency` seconds from now.
    pub fn schedule(&mut self, latency: f64, payload: T) {
        debug_assert!(latency >= 0.0);
        self.pending.push(Entry {
            at: self.now + latency,
            seq: self.seq,
            payload,
        });
        self.seq += 1;
    }

    pub fn advance(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0);
        self.now += dt;
    }

    /// Pop the next event due at or before the current time.
    pub fn pop_due(&mut self) -> Option<(f64, T)> {
        if let Some(top) = self.pending.peek() {
            if top.at <= self.now {
                let e = self.pending.pop().unwrap();
                return Some((e.at, e.payload));
            }
        }
        None
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }
}

impl<T> Default for VirtualClock<T> {
    fn default() -> Self {
        Self::new()
    }
}
