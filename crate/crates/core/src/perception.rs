//! Probabilistic occupancy mapping, sensor noise, and localization models.
//!
//! The belief map is a bounded voxel grid with clamped log-odds per leaf and
//! a three-state classification (free / occupied / unknown). Scan insertion
//! follows the usual discrete update: each scan carves free space along its
//! rays and marks hit endpoints, with endpoint updates taking precedence
//! within a scan so surfaces are never erased by rays grazing past them.

use crate::geom::{Aabb, Pose, Vec3};
use crate::grid::{cell_min, cell_of, Cell, VoxelTraversal};
use crate::rng;
use crate::world::DepthImage;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogOddsParams {
    pub hit: f64,
    pub miss: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    pub occupied_threshold: f64,
    pub free_threshold: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        Self {
            hit: 0.85,
            miss: -0.4,
            clamp_min: -3.5,
            clamp_max: 3.5,
            occupied_threshold: 1.0,
            free_threshold: -1.0,
        }
    }
}

impl LogOddsParams {
    fn classify(&self, lo: f64) -> CellState {
        if lo > self.occupied_threshold {
            CellState::Occupied
        } else if lo < self.free_threshold {
            CellState::Free
        } else {
            CellState::Unknown
        }
    }
}

/// World-frame point cloud from one depth frame. Sentinel (max-range) pixels
/// produce no points.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

/// Back-project a depth image through the camera pose. One point per pixel
/// whose depth is strictly below the no-hit sentinel.
pub fn depth_to_pointcloud(depth: &DepthImage, pose: &Pose) -> PointCloud {
    let mut points = Vec::new();
    let tan_h = (depth.hfov * 0.5).tan();
    let tan_v = (depth.vfov * 0.5).tan();
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.at(u, v);
            if d >= depth.max_range {
                continue;
            }
            let xn = ((u as f64 + 0.5) / depth.width as f64) * 2.0 - 1.0;
            let yn = ((v as f64 + 0.5) / depth.height as f64) * 2.0 - 1.0;
            let dir = Vec3::new(1.0, -xn * tan_h, -yn * tan_v).normalize();
            points.push(pose.position + pose.dir_to_world(dir) * d);
        }
    }
    PointCloud { points }
}

/// Probabilistic, resolution-parameterized belief map over a bounded region.
#[derive(Debug, Clone)]
pub struct OccupancyTree {
    bounds: Aabb,
    resolution: f64,
    params: LogOddsParams,
    cells: BTreeMap<Cell, f64>,
}

impl OccupancyTree {
    pub fn new(bounds: Aabb, resolution: f64, params: LogOddsParams) -> Self {
        assert!(resolution > 0.0);
        Self {
            bounds,
            resolution,
            params,
            cells: BTreeMap::new(),
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn params(&self) -> &LogOddsParams {
        &self.params
    }

    pub fn observed_len(&self) -> usize {
        self.cells.len()
    }

    /// Octree depth equivalent: subdivisions needed for a root cube covering
    /// the bounds to reach leaf edge = resolution.
    pub fn depth(&self) -> u32 {
        let extent = self.bounds.size().iter().cloned().fold(0.0f64, f64::max);
        ((extent / self.resolution).log2().ceil() as u32).max(1)
    }

    pub fn log_odds(&self, cell: Cell) -> Option<f64> {
        self.cells.get(&cell).copied()
    }

    pub fn cell_of(&self, p: Vec3) -> Cell {
        cell_of(p, self.resolution)
    }

    pub fn cell_state(&self, cell: Cell) -> CellState {
        match self.cells.get(&cell) {
            Some(&lo) => self.params.classify(lo),
            None => CellState::Unknown,
        }
    }

    /// Classification of the leaf containing `point`; unknown outside bounds.
    pub fn query_state(&self, point: Vec3) -> CellState {
        if !self.bounds.contains(point) {
            return CellState::Unknown;
        }
        self.cell_state(self.cell_of(point))
    }

    fn in_bounds_cell(&self, cell: Cell) -> bool {
        let min = cell_min(cell, self.resolution);
        let c = min.add_scalar(self.resolution * 0.5);
        self.bounds.contains(c)
    }

    fn apply(&mut self, cell: Cell, delta: f64) {
        if !self.in_bounds_cell(cell) {
            return;
        }
        let lo = self.cells.entry(cell).or_insert(0.0);
        *lo = (*lo + delta).clamp(self.params.clamp_min, self.params.clamp_max);
    }

    /// Integrate one scan: voxels strictly between the origin and each point
    /// receive the miss update, endpoint voxels the hit update. Per scan,
    /// each voxel is updated once and hits win over misses. Rays to points
    /// outside the bounds are truncated at the boundary (free space only).
    pub fn insert_scan(&mut self, cloud: &PointCloud, origin: Vec3) {
        let mut hits: BTreeSet<Cell> = BTreeSet::new();
        let mut misses: BTreeSet<Cell> = BTreeSet::new();
        for &p in &cloud.points {
            let delta = p - origin;
            let dist = delta.norm();
            if dist < 1e-12 {
                continue;
            }
            let dir = delta / dist;
            let mut endpoint_in_bounds = self.bounds.contains(p);
            let mut t_end = dist;
            if !endpoint_in_bounds {
                match self.bounds.ray_interval(origin, dir) {
                    Some((_, t_exit)) if t_exit > 0.0 => t_end = t_exit.min(dist),
                    _ => continue,
                }
            }
            // nudge the endpoint voxel lookup into the hit cell so a point on
            // a shared face books to the occupied side of it
            let end_cell = cell_of(
                origin + dir * (dist + self.resolution * 1e-6),
                self.resolution,
            );
            if endpoint_in_bounds && !self.in_bounds_cell(end_cell) {
                endpoint_in_bounds = false;
            }
            for (cell, t_enter) in VoxelTraversal::new(origin, dir, self.resolution, t_end) {
                if endpoint_in_bounds && cell == end_cell {
                    break;
                }
                if t_enter >= t_end {
                    break;
                }
                misses.insert(cell);
            }
            if endpoint_in_bounds {
                hits.insert(end_cell);
            }
        }
        let (hit, miss) = (self.params.hit, self.params.miss);
        for cell in &hits {
            self.apply(*cell, hit);
        }
        for cell in misses.difference(&hits).copied().collect::<Vec<_>>() {
            self.apply(cell, miss);
        }
    }

    /// Rebuild the map at a new resolution. A target voxel is occupied if any
    /// stored source voxel intersecting it is occupied; free only when its
    /// entire volume is covered by stored free voxels; otherwise unknown.
    pub fn set_resolution(&self, new_res: f64) -> Self {
        assert!(new_res > 0.0);
        let mut out = Self::new(self.bounds, new_res, self.params);
        let mut free_volume: BTreeMap<Cell, f64> = BTreeMap::new();
        let mut occupied: BTreeSet<Cell> = BTreeSet::new();
        for (&cell, &lo) in &self.cells {
            let state = self.params.classify(lo);
            if state == CellState::Unknown {
                continue;
            }
            let lo_corner = cell_min(cell, self.resolution);
            let hi_corner = lo_corner.add_scalar(self.resolution);
            let c0 = cell_of(lo_corner.add_scalar(1e-9), new_res);
            let c1 = cell_of(hi_corner.add_scalar(-1e-9), new_res);
            for x in c0[0]..=c1[0] {
                for y in c0[1]..=c1[1] {
                    for z in c0[2]..=c1[2] {
                        let target = [x, y, z];
                        match state {
                            CellState::Occupied => {
                                occupied.insert(target);
                            }
                            CellState::Free => {
                                let tmin = cell_min(target, new_res);
                                let mut vol = 1.0;
                                for i in 0..3 {
                                    let a = lo_corner[i].max(tmin[i]);
                                    let b = hi_corner[i].min(tmin[i] + new_res);
                                    vol *= (b - a).max(0.0);
                                }
                                *free_volume.entry(target).or_insert(0.0) += vol;
                            }
                            CellState::Unknown => {}
                        }
                    }
                }
            }
        }
        for cell in &occupied {
            if out.in_bounds_cell(*cell) {
                out.cells.insert(*cell, self.params.clamp_max);
            }
        }
        let full = new_res * new_res * new_res;
        for (cell, vol) in free_volume {
            if occupied.contains(&cell) || !out.in_bounds_cell(cell) {
                continue;
            }
            // voxels straddling the region boundary only need their in-bounds
            // volume covered
            let tmin = cell_min(cell, new_res);
            let mut inside = 1.0;
            for i in 0..3 {
                let a = tmin[i].max(self.bounds.min[i]);
                let b = (tmin[i] + new_res).min(self.bounds.max[i]);
                inside *= (b - a).max(0.0);
            }
            if vol + 1e-9 * full >= inside.min(full) {
                out.cells.insert(cell, self.params.clamp_min);
            }
        }
        out
    }

    /// Occupied fraction of the voxel lattice within `radius` of `center`
    /// (intersected with the map bounds).
    pub fn local_occupied_fraction(&self, center: Vec3, radius: f64) -> f64 {
        let r2 = radius * radius;
        let c0 = self.cell_of(self.bounds.clamp_point(center.add_scalar(-radius)));
        let c1 = self.cell_of(self.bounds.clamp_point(center.add_scalar(radius)));
        let mut total = 0usize;
        let mut occ = 0usize;
        for x in c0[0]..=c1[0] {
            for y in c0[1]..=c1[1] {
                for z in c0[2]..=c1[2] {
                    let cc = crate::grid::cell_center([x, y, z], self.resolution);
                    if (cc - center).norm_squared() > r2 || !self.bounds.contains(cc) {
                        continue;
                    }
                    total += 1;
                    if self.cell_state([x, y, z]) == CellState::Occupied {
                        occ += 1;
                    }
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            occ as f64 / total as f64
        }
    }

    /// Count `(unknown, total)` lattice voxels inside `region`.
    pub fn unknown_in_region(&self, region: &Aabb) -> (usize, usize) {
        let c0 = cell_of(
            Vec3::new(region.min[0], region.min[1], region.min[2]).add_scalar(1e-9),
            self.resolution,
        );
        let c1 = cell_of(
            Vec3::new(region.max[0], region.max[1], region.max[2]).add_scalar(-1e-9),
            self.resolution,
        );
        let mut unknown = 0usize;
        let mut total = 0usize;
        for x in c0[0]..=c1[0] {
            for y in c0[1]..=c1[1] {
                for z in c0[2]..=c1[2] {
                    total += 1;
                    if self.cell_state([x, y, z]) == CellState::Unknown {
                        unknown += 1;
                    }
                }
            }
        }
        (unknown, total)
    }

    /// Free voxels adjacent (6-connectivity) to at least one unknown voxel.
    pub fn frontier_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (&cell, &lo) in &self.cells {
            if self.params.classify(lo) != CellState::Free {
                continue;
            }
            let neighbors = [
                [cell[0] + 1, cell[1], cell[2]],
                [cell[0] - 1, cell[1], cell[2]],
                [cell[0], cell[1] + 1, cell[2]],
                [cell[0], cell[1] - 1, cell[2]],
                [cell[0], cell[1], cell[2] + 1],
                [cell[0], cell[1], cell[2] - 1],
            ];
            if neighbors
                .iter()
                .any(|&n| self.in_bounds_cell(n) && self.cell_state(n) == CellState::Unknown)
            {
                out.push(cell);
            }
        }
        out
    }

    /// Iterate stored cells with their classification.
    pub fn iter_classified(&self) -> impl Iterator<Item = (Cell, CellState)> + '_ {
        self.cells
            .iter()
            .map(|(&c, &lo)| (c, self.params.classify(lo)))
    }

    /// Text export: one `x y z state` line per stored voxel, sorted.
    pub fn export(&self) -> String {
        let mut s = String::new();
        for (cell, state) in self.iter_classified() {
            let tag = match state {
                CellState::Free => "free",
                CellState::Occupied => "occupied",
                CellState::Unknown => "unknown",
            };
            let _ = writeln!(s, "{} {} {} {}", cell[0], cell[1], cell[2], tag);
        }
        s
    }

    #[cfg(test)]
    pub(crate) fn set_log_odds(&mut self, cell: Cell, lo: f64) {
        self.cells.insert(cell, lo);
    }
}

/// Additive Gaussian depth noise, deterministic under (seed, frame index).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub depth_std: f64,
    pub seed: u64,
}

pub fn inject_depth_noise(depth: &DepthImage, model: &NoiseModel, frame: u64) -> DepthImage {
    if model.depth_std <= 0.0 {
        return depth.clone();
    }
    let mut rng: ChaCha8Rng = rng::stream_rng(rng::subseed(model.seed, rng::STREAM_DEPTH_NOISE), frame);
    let mut out = depth.clone();
    for d in &mut out.depths {
        let n: f64 = sample_standard_normal(&mut rng);
        *d = (*d + n * model.depth_std).clamp(1e-3, depth.max_range);
    }
    out
}

/// Box-Muller; two uniforms per normal keeps the stream layout obvious.
fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalizationMode {
    Gps,
    Slam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationModel {
    pub mode: LocalizationMode,
    /// Max trackable inter-frame displacement, meters.
    pub d_max: f64,
    /// Hover penalty after a tracking loss, seconds.
    pub t_reloc: f64,
    /// Mission fails once losses exceed this count.
    pub loss_cap: u32,
}

impl Default for LocalizationModel {
    fn default() -> Self {
        Self {
            mode: LocalizationMode::Gps,
            d_max: 0.5,
            t_reloc: 5.0,
            loss_cap: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizeOutcome {
    /// Pose estimate equals ground truth.
    Tracked,
    /// Tracking lost; hover for the re-localization penalty.
    Lost,
}

/// SLAM keeps tracking while the per-frame displacement `speed / fps` stays
/// within `d_max`; GPS always tracks.
pub fn localize(model: &LocalizationModel, speed: f64, fps: f64) -> LocalizeOutcome {
    match model.mode {
        LocalizationMode::Gps => LocalizeOutcome::Tracked,
        LocalizationMode::Slam => {
            debug_assert!(fps > 0.0);
            if speed / fps > model.d_max {
                LocalizeOutcome::Lost
            } else {
                LocalizeOutcome::Tracked
            }
        }
    }
}
