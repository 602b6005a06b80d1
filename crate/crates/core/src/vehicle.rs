//! Point-mass drone kinematics with actuation limits.
//!
//! Attitude dynamics are deliberately absent: mission-level conclusions here
//! depend on velocity/acceleration profiles, and gravity/thrust bookkeeping
//! lives in the power model rather than the kinematics.

use crate::geom::{clamp_norm, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub yaw: f64,
    pub sim_time: f64,
}

impl DroneState {
    pub fn at(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            yaw: 0.0,
            sim_time: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DroneParams {
    /// Vehicle mass, kg.
    pub mass: f64,
    /// Acceleration limit, m/s^2.
    pub a_max: f64,
    /// Mechanical top speed, m/s.
    pub v_mech_max: f64,
    /// Half the diagonal width, meters.
    pub body_radius: f64,
}

impl Default for DroneParams {
    fn default() -> Self {
        Self {
            mass: 2.5,
            a_max: 6.0,
            v_mech_max: 15.0,
            body_radius: 0.325,
        }
    }
}

/// Semi-implicit Euler step: clamp the commanded acceleration, update
/// velocity (clamped to the mechanical limit), then position.
pub fn integrate(state: &DroneState, cmd_accel: Vec3, params: &DroneParams, dt: f64) -> DroneState {
    debug_assert!(dt > 0.0);
    let accel = clamp_norm(cmd_accel, params.a_max);
    let velocity = clamp_norm(state.velocity + accel * dt, params.v_mech_max);
    DroneState {
        position: state.position + velocity * dt,
        velocity,
        acceleration: accel,
        yaw: state.yaw,
        sim_time: state.sim_time + dt,
    }
}

/// Acceleration that drives velocity to zero within one step (clamped), and
/// holds position once stationary. Altitude hold is implicit: gravity is
/// folded into the power model, so a zero command hovers.
pub fn hover_command(velocity: Vec3, dt: f64, a_max: f64) -> Vec3 {
    clamp_norm(-velocity / dt, a_max)
}
