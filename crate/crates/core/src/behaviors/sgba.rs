//! Swarm gradient bug navigation for worker robots.
//!
//! Three states cycle: straight-line forward motion while the path ahead is
//! clear and the heading matches the preferred direction; wall following
//! along the contour of whatever blocked the path; rotation back to the
//! preferred angle once the wall is gone. Outbound mode explores along a
//! fixed preferred direction; inbound mode continuously re-aims the
//! preferred direction up the home-beacon gradient, estimated by finite
//! differences of the received strength along the robot's own motion.

use crate::config::Tunables;
use crate::engine::sensors::SensorFrame;
use crate::engine::Command;
use crate::geom::{angle_diff, wrap_angle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgbaMode {
    Outbound,
    Inbound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgbaSub {
    Forward,
    WallFollow,
    RotateToPreferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSide {
    Left,
    Right,
}

impl WallSide {
    /// Wall-follow side alternates with robot id parity.
    pub fn from_id(id: u16) -> Self {
        if id % 2 == 0 {
            WallSide::Left
        } else {
            WallSide::Right
        }
    }

    fn sign(self) -> f64 {
        match self {
            WallSide::Left => 1.0,
            WallSide::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SgbaState {
    pub mode: SgbaMode,
    pub sub: SgbaSub,
    pub wall_side: WallSide,
    pub preferred_direction: f64,
    // Finite-difference beacon memory for inbound homing.
    last_signal: f64,
    last_signal_t: f64,
}

/// Wall-follow distance setpoint from the side rays.
const WALL_SETPOINT: f64 = 0.45;
/// Side ray window half-angle.
const SIDE_WINDOW: f64 = 1.0;
/// Seconds between beacon gradient re-estimates.
const GRADIENT_PERIOD: f64 = 0.6;
/// Turn applied when the beacon signal stops improving.
const GRADIENT_TURN: f64 = 1.2;

impl SgbaState {
    pub fn new(id: u16, preferred_direction: f64) -> Self {
        Self {
            mode: SgbaMode::Outbound,
            sub: SgbaSub::Forward,
            wall_side: WallSide::from_id(id),
            preferred_direction: wrap_angle(preferred_direction),
            last_signal: 0.0,
            last_signal_t: f64::NEG_INFINITY,
        }
    }

    pub fn set_preferred(&mut self, direction: f64) {
        self.preferred_direction = wrap_angle(direction);
    }

    pub fn set_mode(&mut self, mode: SgbaMode) {
        if self.mode != mode {
            self.mode = mode;
            self.last_signal = 0.0;
            self.last_signal_t = f64::NEG_INFINITY;
        }
    }

    /// One navigation step; `heading` is the robot's current heading.
    pub fn step(&mut self, frame: &SensorFrame, heading: f64, t: f64, tun: &Tunables) -> Command {
        if self.mode == SgbaMode::Inbound {
            self.update_gradient(frame.home_beacon, heading, t);
        }

        let tol = tun.sgba_align_tol_deg.to_radians();
        let front = frame.min_ahead(std::f64::consts::FRAC_PI_4);
        let misalign = angle_diff(self.preferred_direction, heading);

        match self.sub {
            SgbaSub::Forward => {
                if front.map_or(false, |d| d < tun.sgba_clear_ahead) {
                    self.sub = SgbaSub::WallFollow;
                    return self.wall_follow(frame, heading, tun);
                }
                if misalign.abs() > tol {
                    self.sub = SgbaSub::RotateToPreferred;
                    return self.rotate(misalign, tun);
                }
                Command {
                    v: tun.v_max,
                    omega: (2.0 * misalign).clamp(-tun.omega_max, tun.omega_max),
                }
            }
            SgbaSub::WallFollow => {
                // Leave the wall once the preferred direction is open again.
                if misalign.abs() <= tol && front.map_or(true, |d| d >= tun.sgba_clear_ahead) {
                    self.sub = SgbaSub::Forward;
                    return Command {
                        v: tun.v_max,
                        omega: 0.0,
                    };
                }
                let side_bearing = self.wall_side.sign() * std::f64::consts::FRAC_PI_2;
                let side = frame.min_toward(side_bearing, SIDE_WINDOW);
                if side.is_none() && front.is_none() {
                    // Wall gone entirely.
                    self.sub = if misalign.abs() > tol {
                        SgbaSub::RotateToPreferred
                    } else {
                        SgbaSub::Forward
                    };
                    return self.rotate(misalign, tun);
                }
                self.wall_follow(frame, heading, tun)
            }
            SgbaSub::RotateToPreferred => {
                if misalign.abs() <= tol {
                    if front.map_or(false, |d| d < tun.sgba_clear_ahead) {
                        self.sub = SgbaSub::WallFollow;
                        return self.wall_follow(frame, heading, tun);
                    }
                    self.sub = SgbaSub::Forward;
                    return Command {
                        v: tun.v_max,
                        omega: 0.0,
                    };
                }
                self.rotate(misalign, tun)
            }
        }
    }

    fn rotate(&self, misalign: f64, tun: &Tunables) -> Command {
        Command {
            v: 0.0,
            omega: (misalign.signum() * 0.8 * tun.omega_max).clamp(-tun.omega_max, tun.omega_max),
        }
    }

    fn wall_follow(&mut self, frame: &SensorFrame, _heading: f64, tun: &Tunables) -> Command {
        let sign = self.wall_side.sign();
        let front = frame.min_ahead(std::f64::consts::FRAC_PI_4);
        let side = frame.min_toward(sign * std::f64::consts::FRAC_PI_2, SIDE_WINDOW);

        if front.map_or(false, |d| d < 0.35) {
            // Blocked: pivot away from the wall side.
            return Command {
                v: 0.03,
                omega: -sign * 0.9 * tun.omega_max,
            };
        }
        match side {
            Some(d) => {
                // Track the contour at the setpoint distance.
                let err = d - WALL_SETPOINT;
                Command {
                    v: 0.7 * tun.v_max,
                    omega: (sign * 2.5 * err).clamp(-tun.omega_max, tun.omega_max),
                }
            }
            None => {
                // Wall fell away on our side: arc toward it to re-acquire
                // the contour around the corner.
                Command {
                    v: 0.5 * tun.v_max,
                    omega: sign * 0.6 * tun.omega_max,
                }
            }
        }
    }

    /// Run-and-turn chemotaxis on the home beacon: keep the heading while
    /// the signal improves, otherwise re-aim by a fixed turn.
    fn update_gradient(&mut self, signal: f64, heading: f64, t: f64) {
        if t - self.last_signal_t < GRADIENT_PERIOD {
            return;
        }
        if self.last_signal_t.is_finite() {
            if signal > self.last_signal * 1.001 {
                self.preferred_direction = heading;
            } else {
                let turn = if matches!(self.wall_side, WallSide::Left) {
                    GRADIENT_TURN
                } else {
                    -GRADIENT_TURN
                };
                self.preferred_direction = wrap_angle(heading + turn);
            }
        }
        self.last_signal = signal;
        self.last_signal_t = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::sensors::RayHit;

    fn empty_frame() -> SensorFrame {
        SensorFrame {
            proximity: vec![],
            ultrasound: vec![],
            lidar: vec![],
            radiation: None,
            neighbors: vec![],
            home_beacon: 0.01,
        }
    }

    fn frame_with_front_hit(d: f64) -> SensorFrame {
        let mut f = empty_frame();
        f.ultrasound.push(RayHit {
            bearing: 0.0,
            distance: d,
        });
        f
    }

    #[test]
    fn clear_and_aligned_goes_forward_at_full_speed() {
        let tun = Tunables::default();
        let mut s = SgbaState::new(0, 0.0);
        let cmd = s.step(&empty_frame(), 0.0, 0.0, &tun);
        assert_eq!(s.sub, SgbaSub::Forward);
        assert_eq!(cmd.v, tun.v_max);
        assert!(cmd.omega.abs() < 1e-9);
    }

    #[test]
    fn front_hit_triggers_wall_follow() {
        let tun = Tunables::default();
        let mut s = SgbaState::new(0, 0.0);
        s.step(&frame_with_front_hit(0.4), 0.0, 0.0, &tun);
        assert_eq!(s.sub, SgbaSub::WallFollow);
        // A hit beyond the clear-ahead distance does not.
        let mut s2 = SgbaState::new(0, 0.0);
        s2.step(&frame_with_front_hit(0.8), 0.0, 0.0, &tun);
        assert_eq!(s2.sub, SgbaSub::Forward);
    }

    #[test]
    fn wall_lost_and_misaligned_rotates_to_preferred() {
        let tun = Tunables::default();
        let mut s = SgbaState::new(0, 0.0);
        s.sub = SgbaSub::WallFollow;
        // 90 degrees off the preferred direction, nothing sensed.
        let cmd = s.step(&empty_frame(), std::f64::consts::FRAC_PI_2, 0.0, &tun);
        assert_eq!(s.sub, SgbaSub::RotateToPreferred);
        // Turn direction is toward the preferred angle (negative diff).
        assert!(cmd.omega < 0.0);
        assert_eq!(cmd.v, 0.0);
    }

    #[test]
    fn rotation_completes_into_forward() {
        let tun = Tunables::default();
        let mut s = SgbaState::new(0, 0.0);
        s.sub = SgbaSub::RotateToPreferred;
        let cmd = s.step(&empty_frame(), 0.05, 0.0, &tun);
        assert_eq!(s.sub, SgbaSub::Forward);
        assert_eq!(cmd.v, tun.v_max);
    }

    #[test]
    fn wall_side_follows_id_parity() {
        assert_eq!(WallSide::from_id(0), WallSide::Left);
        assert_eq!(WallSide::from_id(1), WallSide::Right);
        assert_eq!(WallSide::from_id(2), WallSide::Left);
    }

    #[test]
    fn inbound_gradient_keeps_improving_heading() {
        let tun = Tunables::default();
        let mut s = SgbaState::new(0, 0.0);
        s.set_mode(SgbaMode::Inbound);
        let mut f = empty_frame();
        f.home_beacon = 0.10;
        s.step(&f, 0.3, 0.0, &tun);
        // Signal improves: preferred becomes the current heading.
        f.home_beacon = 0.20;
        s.step(&f, 0.3, 1.0, &tun);
        assert!((angle_diff(s.preferred_direction, 0.3)).abs() < 1e-9);
        // Signal worsens: preferred turns away.
        f.home_beacon = 0.05;
        s.step(&f, 0.3, 2.0, &tun);
        assert!((angle_diff(s.preferred_direction, 0.3)).abs() > 0.5);
    }
}
