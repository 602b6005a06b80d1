//! Ground-truth voxel environments and depth sensing.
//!
//! Worlds are generated procedurally from an [`EnvironmentSpec`] and a seed:
//! vertical obstacle columns (per-zone densities), wall panels with door-like
//! openings, and spherical dynamic obstacles. Depth sensing ray-casts the
//! voxel set exactly, so the same world always produces the same images.

use crate::geom::{vec3, Aabb, Pose, Vec3};
use crate::grid::{cell_min, Cell, VoxelTraversal};
use crate::rng::{self, cell_hash, unit_f64};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Wall orientation: `X` walls span the y/z plane at a fixed x, `Y` walls the
/// x/z plane at a fixed y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallAxis {
    X,
    Y,
}

/// A full-height wall panel with a rectangular opening.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub axis: WallAxis,
    /// Location of the wall along its axis, meters.
    pub position: f64,
    /// Lateral center of the opening within the wall plane, meters.
    pub opening_center: f64,
    /// Top of the opening, meters above ground (opening starts at z = 0).
    #[serde(default = "default_opening_height")]
    pub opening_height: f64,
}

fn default_opening_height() -> f64 {
    2.0
}

/// Region with a column density overriding the base density.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    pub region: Aabb,
    pub density: f64,
}

/// Obstacle behavior at the end of its waypoint path or at world bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    #[default]
    Loop,
    Reflect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    /// World size in meters; the world occupies `[0, extents]` on each axis.
    pub extents: [f64; 3],
    /// Ground-truth voxel edge, meters.
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    /// Fraction of ground columns carrying an obstacle, outside any zone.
    #[serde(default)]
    pub obstacle_density: f64,
    /// Requested width of wall openings, meters (quantized to `cell_size`).
    #[serde(default = "default_opening_width")]
    pub opening_width: f64,
    /// Density overrides; regions must be disjoint and inside `extents`.
    #[serde(default)]
    pub zones: Vec<ZoneSpec>,
    #[serde(default)]
    pub walls: Vec<WallSpec>,
    /// Add perimeter walls (no openings) so sensor rays terminate at bounds.
    #[serde(default)]
    pub enclosed: bool,
    /// Mark one voxel layer of ground below z=0 as occupied.
    #[serde(default)]
    pub ground: bool,
    /// Column obstacles are removed within this horizontal radius of each
    /// clearing point (start/goal pads).
    #[serde(default)]
    pub clearings: Vec<[f64; 3]>,
    #[serde(default = "default_clearing_radius")]
    pub clearing_radius: f64,
    #[serde(default)]
    pub dynamic_obstacle_count: usize,
    #[serde(default = "default_dynamic_speed")]
    pub dynamic_obstacle_speed: f64,
    #[serde(default = "default_dynamic_radius")]
    pub dynamic_obstacle_radius: f64,
    #[serde(default)]
    pub boundary_policy: BoundaryPolicy,
    /// Column height range as a fraction of the world height.
    #[serde(default = "default_column_height")]
    pub column_height_range: [f64; 2],
}

fn default_cell_size() -> f64 {
    0.25
}
fn default_opening_width() -> f64 {
    0.82
}
fn default_clearing_radius() -> f64 {
    1.5
}
fn default_dynamic_speed() -> f64 {
    1.0
}
fn default_dynamic_radius() -> f64 {
    0.5
}
fn default_column_height() -> [f64; 2] {
    [0.4, 1.0]
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self {
            extents: [50.0, 50.0, 10.0],
            cell_size: default_cell_size(),
            obstacle_density: 0.0,
            opening_width: default_opening_width(),
            zones: Vec::new(),
            walls: Vec::new(),
            enclosed: false,
            ground: false,
            clearings: Vec::new(),
            clearing_radius: default_clearing_radius(),
            dynamic_obstacle_count: 0,
            dynamic_obstacle_speed: default_dynamic_speed(),
            dynamic_obstacle_radius: default_dynamic_radius(),
            boundary_policy: BoundaryPolicy::Loop,
            column_height_range: default_column_height(),
        }
    }
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("opening width {width} m is narrower than one cell ({cell_size} m)")]
    OpeningTooNarrow { width: f64, cell_size: f64 },
    #[error("obstacle density {0} outside [0, 1]")]
    DensityOutOfRange(f64),
    #[error("zone {0} extends outside world extents")]
    ZoneOutOfBounds(usize),
    #[error("zones {0} and {1} overlap")]
    ZoneOverlap(usize, usize),
    #[error("cell size must be positive, got {0}")]
    BadCellSize(f64),
    #[error("extents must be positive, got {0:?}")]
    BadExtents([f64; 3]),
    #[error("clearing at {0:?} lies inside a wall; no free start/goal cell there")]
    ClearingInsideWall([f64; 3]),
    #[error("wall at {0} m lies outside world extents")]
    WallOutOfBounds(f64),
}

/// Spherical moving obstacle following a waypoint path.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicObstacle {
    pub position: Vec3,
    pub velocity: Vec3,
    pub radius: f64,
    pub waypoints: Vec<Vec3>,
    pub next_waypoint: usize,
    pub policy: BoundaryPolicy,
}

impl DynamicObstacle {
    /// Advance along the waypoint path (or ballistically when pathless) by
    /// `speed * dt` meters, looping or reflecting at the path end.
    fn advance(&mut self, dt: f64, bounds: &Aabb) {
        if self.waypoints.is_empty() {
            self.position += self.velocity * dt;
            for i in 0..3 {
                if self.position[i] < bounds.min[i] {
                    self.position[i] = 2.0 * bounds.min[i] - self.position[i];
                    self.velocity[i] = -self.velocity[i];
                } else if self.position[i] > bounds.max[i] {
                    self.position[i] = 2.0 * bounds.max[i] - self.position[i];
                    self.velocity[i] = -self.velocity[i];
                }
            }
            return;
        }
        let speed = self.velocity.norm();
        if speed == 0.0 {
            return;
        }
        let mut remaining = speed * dt;
        while remaining > 1e-12 {
            let target = self.waypoints[self.next_waypoint];
            let to_target = target - self.position;
            let dist = to_target.norm();
            if dist <= remaining {
                self.position = target;
                remaining -= dist;
                match self.policy {
                    BoundaryPolicy::Loop => {
                        self.next_waypoint = (self.next_waypoint + 1) % self.waypoints.len();
                    }
                    BoundaryPolicy::Reflect => {
                        if self.next_waypoint + 1 >= self.waypoints.len() {
                            self.waypoints.reverse();
                            self.next_waypoint = 1.min(self.waypoints.len() - 1);
                        } else {
                            self.next_waypoint += 1;
                        }
                    }
                }
                // degenerate single-waypoint path: stay put
                if self.waypoints.len() == 1 {
                    self.velocity = Vec3::zeros();
                    return;
                }
            } else {
                let dir = to_target / dist;
                self.position += dir * remaining;
                self.velocity = dir * speed;
                remaining = 0.0;
            }
        }
    }
}

/// Pinhole depth camera intrinsics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, radians.
    pub hfov: f64,
    /// Vertical field of view, radians.
    pub vfov: f64,
    pub max_range: f64,
    /// Fixed camera pitch relative to the body, radians (positive = up).
    #[serde(default)]
    pub pitch: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            hfov: std::f64::consts::FRAC_PI_2,
            vfov: 2.0 * (0.75f64 * (std::f64::consts::FRAC_PI_4).tan()).atan(),
            max_range: 20.0,
            pitch: 0.0,
        }
    }
}

impl CameraIntrinsics {
    /// Body-frame ray direction (unit) through the center of pixel `(u, v)`.
    /// Pixel (0,0) is top-left; +u right, +v down.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3 {
        let xn = ((u as f64 + 0.5) / self.width as f64) * 2.0 - 1.0;
        let yn = ((v as f64 + 0.5) / self.height as f64) * 2.0 - 1.0;
        let ty = -xn * (self.hfov * 0.5).tan();
        let tz = -yn * (self.vfov * 0.5).tan();
        vec3(1.0, ty, tz).normalize()
    }
}

/// Depth image; `max_range` is the no-hit sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub hfov: f64,
    pub vfov: f64,
    pub max_range: f64,
    /// Row-major depths, meters, in `(0, max_range]`.
    pub depths: Vec<f64>,
}

impl DepthImage {
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.depths[v * self.width + u]
    }
}

/// Ground-truth 3D environment.
#[derive(Debug, Clone)]
pub struct VoxelWorld {
    bounds: Aabb,
    cell_size: f64,
    dims: [i32; 3],
    occupied: Vec<bool>,
    occupied_count: usize,
    pub dynamic_obstacles: Vec<DynamicObstacle>,
    pub seed: u64,
}

impl VoxelWorld {
    /// Deterministically generate a world from `(spec, seed)`.
    pub fn generate(spec: &EnvironmentSpec, seed: u64) -> Result<Self, WorldError> {
        spec_validate(spec)?;
        let dims = [
            (spec.extents[0] / spec.cell_size).round().max(1.0) as i32,
            (spec.extents[1] / spec.cell_size).round().max(1.0) as i32,
            (spec.extents[2] / spec.cell_size).round().max(1.0) as i32,
        ];
        let mut world = Self {
            bounds: Aabb::from_extents(spec.extents),
            cell_size: spec.cell_size,
            dims,
            occupied: vec![false; (dims[0] as usize) * (dims[1] as usize) * (dims[2] as usize)],
            occupied_count: 0,
            dynamic_obstacles: Vec::new(),
            seed,
        };
        world.place_columns(spec, seed);
        world.carve_clearings(spec);
        world.place_walls(spec)?;
        if spec.enclosed {
            world.place_perimeter();
        }
        world.spawn_dynamic(spec, seed);
        Ok(world)
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> [i32; 3] {
        self.dims
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied_count
    }

    fn index(&self, c: Cell) -> Option<usize> {
        if c[0] < 0 || c[1] < 0 || c[2] < 0 {
            return None;
        }
        if c[0] >= self.dims[0] || c[1] >= self.dims[1] || c[2] >= self.dims[2] {
            return None;
        }
        Some(
            c[0] as usize
                + self.dims[0] as usize * (c[1] as usize + self.dims[1] as usize * c[2] as usize),
        )
    }

    pub fn cell_occupied(&self, c: Cell) -> bool {
        self.index(c).map(|i| self.occupied[i]).unwrap_or(false)
    }

    fn set_cell(&mut self, c: Cell, value: bool) {
        if let Some(i) = self.index(c) {
            if self.occupied[i] != value {
                self.occupied[i] = value;
                if value {
                    self.occupied_count += 1;
                } else {
                    self.occupied_count -= 1;
                }
            }
        }
    }

    /// Occupied cell indices in lexicographic (x, y, z) order.
    pub fn occupied_cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.occupied_count);
        for x in 0..self.dims[0] {
            for y in 0..self.dims[1] {
                for z in 0..self.dims[2] {
                    if self.cell_occupied([x, y, z]) {
                        out.push([x, y, z]);
                    }
                }
            }
        }
        out
    }

    /// Text dump, one `x y z` cell index per line, sorted.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for c in self.occupied_cells() {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
        s
    }

    /// Fraction of ground columns carrying at least one occupied cell within
    /// the x/y footprint of `region`.
    pub fn column_density(&self, region: &Aabb) -> f64 {
        let x0 = ((region.min[0] / self.cell_size).floor() as i32).max(0);
        let x1 = ((region.max[0] / self.cell_size).ceil() as i32).min(self.dims[0]);
        let y0 = ((region.min[1] / self.cell_size).floor() as i32).max(0);
        let y1 = ((region.max[1] / self.cell_size).ceil() as i32).min(self.dims[1]);
        let mut total = 0usize;
        let mut filled = 0usize;
        for x in x0..x1 {
            for y in y0..y1 {
                total += 1;
                if (0..self.dims[2]).any(|z| self.cell_occupied([x, y, z])) {
                    filled += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            filled as f64 / total as f64
        }
    }

    fn place_columns(&mut self, spec: &EnvironmentSpec, seed: u64) {
        // Columns are selected per density group by a stable per-column
        // priority, so raising a density only adds columns (monotone) and the
        // realized fraction is exact up to rounding.
        let col_seed = rng::subseed(seed, rng::STREAM_COLUMNS);
        let h_seed = rng::subseed(seed, rng::STREAM_HEIGHTS);
        let ngroups = spec.zones.len() + 1;
        let mut groups: Vec<Vec<(u64, i32, i32)>> = vec![Vec::new(); ngroups];
        for x in 0..self.dims[0] {
            for y in 0..self.dims[1] {
                let cx = (x as f64 + 0.5) * self.cell_size;
                let cy = (y as f64 + 0.5) * self.cell_size;
                let group = spec
                    .zones
                    .iter()
                    .position(|z| z.region.contains_xy(cx, cy))
                    .map(|i| i + 1)
                    .unwrap_or(0);
                groups[group].push((cell_hash(col_seed, x as i64, y as i64, 0), x, y));
            }
        }
        for (gi, mut cols) in groups.into_iter().enumerate() {
            let density = if gi == 0 {
                spec.obstacle_density
            } else {
                spec.zones[gi - 1].density
            };
            let k = (density * cols.len() as f64).round() as usize;
            cols.sort_unstable();
            for &(_, x, y) in cols.iter().take(k) {
                let u = unit_f64(cell_hash(h_seed, x as i64, y as i64, 1));
                let [hlo, hhi] = spec.column_height_range;
                let frac = hlo + u * (hhi - hlo);
                let h_cells = ((frac * self.dims[2] as f64).ceil() as i32).clamp(1, self.dims[2]);
                for z in 0..h_cells {
                    self.set_cell([x, y, z], true);
                }
            }
        }
        if spec.ground {
            // represented implicitly: rays and collision treat z<0 as solid
        }
    }

    fn carve_clearings(&mut self, spec: &EnvironmentSpec) {
        for p in &spec.clearings {
            let r_cells = (spec.clearing_radius / self.cell_size).ceil() as i32;
            let cx = (p[0] / self.cell_size).floor() as i32;
            let cy = (p[1] / self.cell_size).floor() as i32;
            for x in cx - r_cells..=cx + r_cells {
                for y in cy - r_cells..=cy + r_cells {
                    let dx = (x as f64 + 0.5) * self.cell_size - p[0];
                    let dy = (y as f64 + 0.5) * self.cell_size - p[1];
                    if dx * dx + dy * dy <= spec.clearing_radius * spec.clearing_radius {
                        for z in 0..self.dims[2] {
                            self.set_cell([x, y, z], false);
                        }
                    }
                }
            }
        }
    }

    fn place_walls(&mut self, spec: &EnvironmentSpec) -> Result<(), WorldError> {
        let cs = self.cell_size;
        let nz = self.dims[2];
        let open_cells = (spec.opening_width / cs).round().max(1.0) as i32;
        let open_h_cells = move |h: f64| -> i32 { ((h / cs).round() as i32).clamp(1, nz) };
        for wall in &spec.walls {
            let (lateral_dim, axis_dim) = match wall.axis {
                WallAxis::X => (1usize, 0usize),
                WallAxis::Y => (0usize, 1usize),
            };
            let pos_cell = (wall.position / cs).floor() as i32;
            if pos_cell < 0 || pos_cell >= self.dims[axis_dim] {
                return Err(WorldError::WallOutOfBounds(wall.position));
            }
            // opening edges snap to the cell grid around the requested center
            let lo = (wall.opening_center / cs - open_cells as f64 * 0.5).round() as i32;
            let hi = lo + open_cells; // [lo, hi) open
            let zh = open_h_cells(wall.opening_height);
            for lat in 0..self.dims[lateral_dim] {
                for z in 0..self.dims[2] {
                    let in_opening = lat >= lo && lat < hi && z < zh;
                    if in_opening {
                        continue;
                    }
                    let c = match wall.axis {
                        WallAxis::X => [pos_cell, lat, z],
                        WallAxis::Y => [lat, pos_cell, z],
                    };
                    self.set_cell(c, true);
                }
            }
        }
        for p in &spec.clearings {
            let c = crate::grid::cell_of(vec3(p[0], p[1], p[2]), cs);
            if self.cell_occupied(c) {
                return Err(WorldError::ClearingInsideWall(*p));
            }
        }
        Ok(())
    }

    fn place_perimeter(&mut self) {
        let [nx, ny, nz] = self.dims;
        for z in 0..nz {
            for y in 0..ny {
                self.set_cell([0, y, z], true);
                self.set_cell([nx - 1, y, z], true);
            }
            for x in 0..nx {
                self.set_cell([x, 0, z], true);
                self.set_cell([x, ny - 1, z], true);
            }
        }
    }

    fn spawn_dynamic(&mut self, spec: &EnvironmentSpec, seed: u64) {
        if spec.dynamic_obstacle_count == 0 {
            return;
        }
        let mut rng = rng::stream_rng(seed, rng::STREAM_DYNAMIC);
        let margin = spec.dynamic_obstacle_radius.max(spec.cell_size);
        for _ in 0..spec.dynamic_obstacle_count {
            let rand_point = |rng: &mut rand_chacha::ChaCha8Rng| {
                vec3(
                    rng.random_range(margin..(spec.extents[0] - margin)),
                    rng.random_range(margin..(spec.extents[1] - margin)),
                    rng.random_range(margin..(spec.extents[2] - margin)),
                )
            };
            let start = rand_point(&mut rng);
            let n_wp = rng.random_range(2..=4usize);
            let waypoints: Vec<Vec3> = (0..n_wp).map(|_| rand_point(&mut rng)).collect();
            let dir = (waypoints[0] - start).normalize();
            self.dynamic_obstacles.push(DynamicObstacle {
                position: start,
                velocity: dir * spec.dynamic_obstacle_speed,
                radius: spec.dynamic_obstacle_radius,
                waypoints,
                next_waypoint: 0,
                policy: spec.boundary_policy,
            });
        }
    }

    /// Advance dynamic obstacles by `dt`; static cells never change.
    pub fn step_dynamic(&mut self, dt: f64) {
        let bounds = self.bounds;
        for obs in &mut self.dynamic_obstacles {
            obs.advance(dt, &bounds);
        }
    }

    /// First-hit distance along a single ray, if any, within `t_max`.
    pub fn cast_ray(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<f64> {
        let mut static_hit = None;
        let limit = match self.bounds.ray_interval(origin, dir) {
            Some((_, t_exit)) => t_max.min(t_exit),
            None => -1.0,
        };
        if limit >= 0.0 {
            for (cell, t_enter) in VoxelTraversal::new(origin, dir, self.cell_size, limit) {
                if self.cell_occupied(cell) {
                    static_hit = Some(t_enter);
                    break;
                }
            }
        }
        let mut best = static_hit;
        for obs in &self.dynamic_obstacles {
            if let Some(t) = ray_sphere(origin, dir, obs.position, obs.radius) {
                if t <= t_max && best.map_or(true, |b| t < b) {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Render a depth image from `pose` with the given camera. Each pixel
    /// holds the Euclidean distance along its ray to the first occupied cell
    /// or dynamic obstacle, or `max_range` when nothing is hit.
    pub fn sense_depth(&self, pose: &Pose, camera: &CameraIntrinsics) -> DepthImage {
        let cam_pose = Pose::with_pitch(pose.position, pose.yaw, pose.pitch + camera.pitch);
        let mut depths = vec![camera.max_range; camera.width * camera.height];
        for v in 0..camera.height {
            for u in 0..camera.width {
                let dir = cam_pose.dir_to_world(camera.pixel_ray(u, v));
                if let Some(t) = self.cast_ray(pose.position, dir, camera.max_range) {
                    depths[v * camera.width + u] = t.max(1e-9);
                }
            }
        }
        DepthImage {
            width: camera.width,
            height: camera.height,
            hfov: camera.hfov,
            vfov: camera.vfov,
            max_range: camera.max_range,
            depths,
        }
    }

    /// Ground-truth proximity oracle: true iff any occupied cell or dynamic
    /// obstacle lies within `inflation` of `point`.
    pub fn is_occupied(&self, point: Vec3, inflation: f64) -> bool {
        let r = (inflation / self.cell_size).ceil() as i32 + 1;
        let c = crate::grid::cell_of(point, self.cell_size);
        let infl_sq = inflation * inflation;
        for x in c[0] - r..=c[0] + r {
            for y in c[1] - r..=c[1] + r {
                for z in c[2] - r..=c[2] + r {
                    if !self.cell_occupied([x, y, z]) {
                        continue;
                    }
                    let min = cell_min([x, y, z], self.cell_size);
                    let cell_box = Aabb::new(
                        [min.x, min.y, min.z],
                        [
                            min.x + self.cell_size,
                            min.y + self.cell_size,
                            min.z + self.cell_size,
                        ],
                    );
                    if cell_box.dist_sq(point) <= infl_sq {
                        return true;
                    }
                }
            }
        }
        self.dynamic_obstacles.iter().any(|o| {
            let d = (o.position - point).norm();
            d <= o.radius + inflation
        })
    }
}

fn spec_validate(spec: &EnvironmentSpec) -> Result<(), WorldError> {
    if spec.cell_size <= 0.0 {
        return Err(WorldError::BadCellSize(spec.cell_size));
    }
    if spec.extents.iter().any(|&e| e <= 0.0) {
        return Err(WorldError::BadExtents(spec.extents));
    }
    if !(0.0..=1.0).contains(&spec.obstacle_density) {
        return Err(WorldError::DensityOutOfRange(spec.obstacle_density));
    }
    if !spec.walls.is_empty() && spec.opening_width < spec.cell_size {
        return Err(WorldError::OpeningTooNarrow {
            width: spec.opening_width,
            cell_size: spec.cell_size,
        });
    }
    let world_box = Aabb::from_extents(spec.extents);
    for (i, z) in spec.zones.iter().enumerate() {
        if !(0.0..=1.0).contains(&z.density) {
            return Err(WorldError::DensityOutOfRange(z.density));
        }
        if z.region.min.iter().zip(world_box.min.iter()).any(|(a, b)| a < b)
            || z.region.max.iter().zip(world_box.max.iter()).any(|(a, b)| a > b)
        {
            return Err(WorldError::ZoneOutOfBounds(i));
        }
        for (j, other) in spec.zones.iter().enumerate().skip(i + 1) {
            if z.region.intersects(&other.region) {
                return Err(WorldError::ZoneOverlap(i, j));
            }
        }
    }
    Ok(())
}

fn ray_sphere(origin: Vec3, dir: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let a = dir.dot(&dir);
    let b = 2.0 * oc.dot(&dir);
    let c = oc.dot(&oc) - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    if t >= 0.0 {
        Some(t)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat_spec() -> EnvironmentSpec {
        EnvironmentSpec {
            extents: [50.0, 50.0, 10.0],
            cell_size: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn zero_density_world_is_empty() {
        let w = VoxelWorld::generate(&flat_spec(), 42).unwrap();
        assert_eq!(w.occupied_count(), 0);
    }

    #[test]
    fn realized_density_within_ten_percent() {
        let spec = EnvironmentSpec {
            obstacle_density: 0.2,
            ..flat_spec()
        };
        let w = VoxelWorld::generate(&spec, 7).unwrap();
        let d = w.column_density(&Aabb::from_extents(spec.extents));
        assert!((0.18..=0.22).contains(&d), "density {d}");
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let spec = EnvironmentSpec {
            obstacle_density: 0.2,
            dynamic_obstacle_count: 3,
            ..flat_spec()
        };
        let a = VoxelWorld::generate(&spec, 7).unwrap();
        let b = VoxelWorld::generate(&spec, 7).unwrap();
        assert_eq!(a.dump(), b.dump());
        assert_eq!(a.dynamic_obstacles, b.dynamic_obstacles);
        let c = VoxelWorld::generate(&spec, 8).unwrap();
        assert_ne!(a.dump(), c.dump());
    }

    #[test]
    fn density_monotone_in_request() {
        let mut counts = Vec::new();
        for d in [0.0, 0.1, 0.2, 0.4, 0.8] {
            let spec = EnvironmentSpec {
                obstacle_density: d,
                ..flat_spec()
            };
            counts.push(VoxelWorld::generate(&spec, 7).unwrap().occupied_count());
        }
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn zone_densities_apply_per_region() {
        let spec = EnvironmentSpec {
            obstacle_density: 0.05,
            zones: vec![ZoneSpec {
                region: Aabb::new([30.0, 30.0, 0.0], [50.0, 50.0, 10.0]),
                density: 0.5,
            }],
            ..flat_spec()
        };
        let w = VoxelWorld::generate(&spec, 3).unwrap();
        let dense = w.column_density(&Aabb::new([30.0, 30.0, 0.0], [50.0, 50.0, 10.0]));
        let sparse = w.column_density(&Aabb::new([0.0, 0.0, 0.0], [30.0, 30.0, 10.0]));
        assert!((0.45..=0.55).contains(&dense), "dense {dense}");
        assert!((0.03..=0.08).contains(&sparse), "sparse {sparse}");
    }

    #[test]
    fn infeasible_specs_error() {
        let spec = EnvironmentSpec {
            opening_width: 0.1,
            walls: vec![WallSpec {
                axis: WallAxis::X,
                position: 10.0,
                opening_center: 5.0,
                opening_height: 2.0,
            }],
            ..flat_spec()
        };
        assert!(matches!(
            VoxelWorld::generate(&spec, 0),
            Err(WorldError::OpeningTooNarrow { .. })
        ));
        let spec = EnvironmentSpec {
            obstacle_density: 1.3,
            ..flat_spec()
        };
        assert!(matches!(
            VoxelWorld::generate(&spec, 0),
            Err(WorldError::DensityOutOfRange(_))
        ));
    }

    #[test]
    fn wall_has_opening_of_quantized_width() {
        let spec = EnvironmentSpec {
            extents: [20.0, 12.0, 5.0],
            cell_size: 0.25,
            opening_width: 0.82,
            walls: vec![WallSpec {
                axis: WallAxis::X,
                position: 10.0,
                opening_center: 6.375,
                opening_height: 2.0,
            }],
            ..Default::default()
        };
        let w = VoxelWorld::generate(&spec, 1).unwrap();
        // 0.82 m rounds to 3 cells = 0.75 m: cells y in [24, 27) free at z < 8
        let x = (10.0 / 0.25) as i32;
        for y in 24..27 {
            for z in 0..8 {
                assert!(!w.cell_occupied([x, y, z]), "opening blocked at y={y} z={z}");
            }
        }
        assert!(w.cell_occupied([x, 23, 0]));
        assert!(w.cell_occupied([x, 27, 0]));
        assert!(w.cell_occupied([x, 25, 8])); // lintel above the opening
    }

    #[test]
    fn sense_depth_empty_world_is_max_range() {
        let w = VoxelWorld::generate(&flat_spec(), 0).unwrap();
        let camera = CameraIntrinsics::default();
        let img = w.sense_depth(&Pose::new(vec3(25.0, 25.0, 5.0), 0.0), &camera);
        assert!(img.depths.iter().all(|&d| d == camera.max_range));
    }

    #[test]
    fn sense_depth_single_cell_front_face() {
        // cell centered 5 m ahead on the optical axis, cell size 0.5
        let mut w = VoxelWorld::generate(&flat_spec(), 0).unwrap();
        let pose = Pose::new(vec3(20.0, 25.25, 5.25), 0.0);
        // cell containing (25.0, 25.25, 5.25): front face at x = 24.75
        w.set_cell(crate::grid::cell_of(vec3(25.0, 25.25, 5.25), 0.5), true);
        let camera = CameraIntrinsics {
            width: 65,
            height: 49,
            ..Default::default()
        };
        let img = w.sense_depth(&pose, &camera);
        let center = img.at(32, 24);
        assert!(
            (4.75..=5.0).contains(&center),
            "center depth {center} not on front face"
        );
    }

    #[test]
    fn sense_depth_wall_plane_grows_with_angle() {
        let spec = EnvironmentSpec {
            extents: [20.0, 40.0, 40.0],
            cell_size: 0.5,
            opening_width: 1.0,
            ..Default::default()
        };
        let mut w = VoxelWorld::generate(&spec, 0).unwrap();
        // fill the whole plane x in [10, 10.5)
        for y in 0..w.dims[1] {
            for z in 0..w.dims[2] {
                w.set_cell([20, y, z], true);
            }
        }
        let camera = CameraIntrinsics {
            width: 65,
            height: 49,
            max_range: 60.0,
            ..Default::default()
        };
        let pose = Pose::new(vec3(7.0, 20.25, 20.25), 0.0);
        let img = w.sense_depth(&pose, &camera);
        // every pixel: expected depth = 3 / cos(angle to optical axis)
        for v in 0..camera.height {
            for u in 0..camera.width {
                let dir = camera.pixel_ray(u, v);
                let expected = 3.0 / dir.x;
                assert_relative_eq!(img.at(u, v), expected, epsilon = 1e-9);
            }
        }
        assert_relative_eq!(img.at(32, 24), 3.0, epsilon = 1e-12);
        let min = img.depths.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn step_dynamic_moves_linearly() {
        let mut w = VoxelWorld::generate(&flat_spec(), 0).unwrap();
        w.dynamic_obstacles.push(DynamicObstacle {
            position: vec3(0.0, 0.0, 2.0),
            velocity: vec3(1.0, 0.0, 0.0),
            radius: 0.5,
            waypoints: vec![],
            next_waypoint: 0,
            policy: BoundaryPolicy::Loop,
        });
        let before = w.dump();
        w.step_dynamic(0.5);
        assert_relative_eq!(w.dynamic_obstacles[0].position.x, 0.5);
        assert_eq!(w.dump(), before, "static cells changed");
    }

    #[test]
    fn step_dynamic_loops_at_path_end() {
        let mut w = VoxelWorld::generate(&flat_spec(), 0).unwrap();
        w.dynamic_obstacles.push(DynamicObstacle {
            position: vec3(0.0, 0.0, 2.0),
            velocity: vec3(1.0, 0.0, 0.0),
            radius: 0.5,
            waypoints: vec![vec3(2.0, 0.0, 2.0), vec3(0.0, 0.0, 2.0)],
            next_waypoint: 0,
            policy: BoundaryPolicy::Loop,
        });
        // travel 3 m along a 2 m segment: 2 m to the waypoint, 1 m back
        w.step_dynamic(3.0);
        assert_relative_eq!(w.dynamic_obstacles[0].position.x, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_obstacles_step_is_noop() {
        let mut w = VoxelWorld::generate(&flat_spec(), 0).unwrap();
        let before = w.clone();
        w.step_dynamic(1.0);
        assert_eq!(w.dump(), before.dump());
        assert_eq!(w.dynamic_obstacles.len(), 0);
    }

    #[test]
    fn is_occupied_distance_cases() {
        let mut w = VoxelWorld::generate(&flat_spec(), 0).unwrap();
        assert!(!w.is_occupied(vec3(10.0, 10.0, 5.0), 1.0));
        // occupy cell [20,20,10] spanning [10.0,10.5) x [10.0,10.5) x [5.0,5.5)
        w.set_cell([20, 20, 10], true);
        assert!(w.is_occupied(vec3(10.25, 10.25, 5.25), 0.0));
        // point 0.3 m from the +x face
        let p = vec3(10.8, 10.25, 5.25);
        assert!(w.is_occupied(p, 0.325));
        assert!(!w.is_occupied(p, 0.25));
    }

    #[test]
    fn raycast_soundness_against_brute_force() {
        // DDA first-hit distance equals the min ray/box intersection over all
        // occupied cells, on small random worlds.
        use rand::Rng;
        for seed in 0..50u64 {
            let spec = EnvironmentSpec {
                extents: [10.0, 10.0, 10.0],
                cell_size: 0.5,
                obstacle_density: 0.15,
                ..Default::default()
            };
            let w = VoxelWorld::generate(&spec, seed).unwrap();
            let mut rng = crate::rng::stream_rng(seed, 99);
            for _ in 0..20 {
                let origin = vec3(
                    rng.random_range(0.5..9.5),
                    rng.random_range(0.5..9.5),
                    rng.random_range(0.5..9.5),
                );
                let dir = vec3(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if dir.norm() < 1e-3 || w.is_occupied(origin, 0.0) {
                    continue;
                }
                let dir = dir.normalize();
                let dda = w.cast_ray(origin, dir, 30.0);
                let mut brute = f64::INFINITY;
                for c in w.occupied_cells() {
                    let min = cell_min(c, 0.5);
                    let b = Aabb::new([min.x, min.y, min.z], [min.x + 0.5, min.y + 0.5, min.z + 0.5]);
                    if let Some((t0, t1)) = b.ray_interval(origin, dir) {
                        if t1 >= 0.0 {
                            brute = brute.min(t0.max(0.0));
                        }
                    }
                }
                match dda {
                    Some(t) => assert_relative_eq!(t, brute, epsilon = 1e-9),
                    None => assert!(brute > 30.0, "DDA missed a hit at {brute}"),
                }
            }
        }
    }
}
