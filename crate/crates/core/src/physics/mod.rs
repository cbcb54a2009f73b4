//! Quasi-static planar pushing simulator.
//!
//! The robot is driven kinematically by its velocity command. Objects move
//! only when pushed: each substep, penetrations are removed by position
//! projection in Gauss–Seidel sweeps. In a robot–object contact the object
//! takes a friction-dependent share of the correction and the remainder
//! pushes the robot back; object–object corrections are split by the same
//! shares. Mass does not enter the model. Objects whose centroid leaves the
//! table are flagged as dropped and removed from collision.

mod contact;
mod noise;

pub use contact::{contacts, max_penetration, BodyId, Contact};
pub use noise::{NoiseSpec, VelocityNoise};

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, penetration, Vec2};
use crate::world::{Control, Link, SceneSpec, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    pub substeps: usize,
    pub max_iterations: usize,
    /// Sweeps stop once the largest penetration excess is below this.
    pub tolerance: f64,
    /// Friction at which a pushed object takes the full correction.
    pub reference_friction: f64,
    pub min_transmission: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            substeps: 10,
            max_iterations: 20,
            tolerance: 1e-4,
            reference_friction: 0.4,
            min_transmission: 0.25,
        }
    }
}

impl PhysicsConfig {
    /// Fraction of a push correction an object with this friction absorbs.
    pub fn transmission(&self, friction: f64) -> f64 {
        (self.reference_friction / friction).clamp(self.min_transmission, 1.0)
    }
}

/// The state-transition function bound to one scene.
#[derive(Debug, Clone, Copy)]
pub struct Simulator<'a> {
    pub scene: &'a SceneSpec,
    pub config: PhysicsConfig,
}

impl<'a> Simulator<'a> {
    pub fn new(scene: &'a SceneSpec, config: PhysicsConfig) -> Self {
        Simulator { scene, config }
    }

    /// Advances `state` by one control.
    pub fn step(&self, state: &WorldState, u: &Control, noise: &mut VelocityNoise) -> WorldState {
        let mut s = state.clone();
        let n = s.objects.len();
        let links = Link::ALL.len();
        let transmission: Vec<f64> = self
            .scene
            .objects
            .iter()
            .map(|o| self.config.transmission(o.friction))
            .collect();

        // Pre-existing overlap is tolerated up to its initial depth; only
        // growth is resolved. Penetration-free states start at zero.
        let mut allowance = vec![0.0; (links + n) * n];
        for i in 0..n {
            if s.dropped[i] {
                continue;
            }
            let shape_i = self.scene.object_shape(i, &s.objects[i]);
            for (l, link) in Link::ALL.iter().enumerate() {
                let ls = self.scene.robot.link_shape(&s.robot, *link);
                if let Some(p) = penetration(&ls, &shape_i) {
                    allowance[l * n + i] = p.depth;
                }
            }
            for j in i + 1..n {
                if s.dropped[j] {
                    continue;
                }
                let shape_j = self.scene.object_shape(j, &s.objects[j]);
                if let Some(p) = penetration(&shape_i, &shape_j) {
                    allowance[(links + i) * n + j] = p.depth;
                }
            }
        }

        let substeps = self.config.substeps.max(1);
        let h = u.duration / substeps as f64;
        let grip = &self.scene.robot;
        let mut moving = vec![false; n];
        let mut before = s.objects.clone();
        let jitter = noise.spec.displacement_scale(h);

        for _ in 0..substeps {
            let (mut dx, mut dy, mut dr) = (u.v_x * h, u.v_y * h, u.v_rot * h);
            if noise.active() && noise.spec.robot {
                let [nx, ny, nr] = noise.draw();
                dx += nx * jitter;
                dy += ny * jitter;
                dr += nr * jitter;
            }
            if dx != 0.0 {
                s.robot.x += dx;
            }
            if dy != 0.0 {
                s.robot.y += dy;
            }
            if dr != 0.0 {
                s.robot.rot = normalize_angle(s.robot.rot + dr);
            }
            if u.v_grip != 0.0 {
                s.robot.grip = (s.robot.grip + u.v_grip * h).clamp(grip.grip_min, grip.grip_max);
            }

            if noise.active() {
                for i in 0..n {
                    if moving[i] && !s.dropped[i] {
                        let [nx, ny, nr] = noise.draw();
                        let p = &mut s.objects[i];
                        p.x += nx * jitter;
                        p.y += ny * jitter;
                        p.theta = normalize_angle(p.theta + nr * jitter);
                    }
                }
            }

            before.clone_from(&s.objects);
            self.resolve(&mut s, &transmission, &mut allowance);

            for i in 0..n {
                if s.dropped[i] {
                    moving[i] = false;
                    continue;
                }
                moving[i] = s.objects[i] != before[i];
                if !self.scene.table.contains(s.objects[i].position()) {
                    s.dropped[i] = true;
                    moving[i] = false;
                }
            }
        }
        s
    }

    fn resolve(&self, s: &mut WorldState, transmission: &[f64], allowance: &mut [f64]) {
        let n = s.objects.len();
        let links = Link::ALL.len();
        let robot = &self.scene.robot;
        for _ in 0..self.config.max_iterations {
            let mut worst = 0.0f64;
            for i in 0..n {
                if s.dropped[i] {
                    continue;
                }
                for (l, link) in Link::ALL.iter().enumerate() {
                    let ls = robot.link_shape(&s.robot, *link);
                    let os = self.scene.object_shape(i, &s.objects[i]);
                    let slot = &mut allowance[l * n + i];
                    let Some(p) = penetration(&ls, &os) else {
                        *slot = 0.0;
                        continue;
                    };
                    let excess = p.depth - *slot;
                    if excess <= 0.0 {
                        *slot = p.depth;
                        continue;
                    }
                    worst = worst.max(excess);
                    let share = transmission[i];
                    let push = p.normal * (excess * share);
                    let back = p.normal * (excess * (1.0 - share));
                    s.objects[i].x += push.x;
                    s.objects[i].y += push.y;
                    s.robot.x -= back.x;
                    s.robot.y -= back.y;
                }
            }
            for i in 0..n {
                if s.dropped[i] {
                    continue;
                }
                for j in i + 1..n {
                    if s.dropped[j] {
                        continue;
                    }
                    let a = self.scene.object_shape(i, &s.objects[i]);
                    let b = self.scene.object_shape(j, &s.objects[j]);
                    let slot = &mut allowance[(links + i) * n + j];
                    let Some(p) = penetration(&a, &b) else {
                        *slot = 0.0;
                        continue;
                    };
                    let excess = p.depth - *slot;
                    if excess <= 0.0 {
                        *slot = p.depth;
                        continue;
                    }
                    worst = worst.max(excess);
                    let (mi, mj) = (transmission[i], transmission[j]);
                    let total = mi + mj;
                    let di: Vec2 = p.normal * (excess * mi / total);
                    let dj: Vec2 = p.normal * (excess * mj / total);
                    s.objects[i].x -= di.x;
                    s.objects[i].y -= di.y;
                    s.objects[j].x += dj.x;
                    s.objects[j].y += dj.y;
                }
            }
            if worst <= self.config.tolerance {
                break;
            }
        }
    }

    /// Rolls `controls` out from `x0`. After each step `stop(t, &state)` is
    /// consulted; returning `true` ends the rollout with that state included.
    pub fn rollout_until(
        &self,
        x0: &WorldState,
        controls: &[Control],
        noise: &mut VelocityNoise,
        mut stop: impl FnMut(usize, &WorldState) -> bool,
    ) -> Vec<WorldState> {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0.clone());
        for (t, u) in controls.iter().enumerate() {
            let next = self.step(states.last().expect("nonempty"), u, noise);
            let done = stop(t, &next);
            states.push(next);
            if done {
                break;
            }
        }
        states
    }

    pub fn rollout(
        &self,
        x0: &WorldState,
        controls: &[Control],
        noise: &mut VelocityNoise,
    ) -> Vec<WorldState> {
        self.rollout_until(x0, controls, noise, |_, _| false)
    }
}

/// Whether the target centroid is inside the pre-grasp region and the
/// target is still on the table.
pub fn is_grasped(state: &WorldState, scene: &SceneSpec) -> bool {
    let t = scene.target_index();
    !state.dropped[t]
        && scene
            .robot
            .in_pregrasp_region(&state.robot, state.objects[t].position())
}

pub fn dropped_any_nontarget(state: &WorldState, scene: &SceneSpec) -> bool {
    scene
        .objects
        .iter()
        .zip(&state.dropped)
        .any(|(o, &d)| d && !o.is_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ObjectShape, ObjectSpec, Pose2, RobotSpec, RobotState, Table};

    fn robot_at(x: f64, y: f64, rot: f64) -> RobotSpec {
        RobotSpec {
            initial: RobotState {
                x,
                y,
                rot,
                grip: 0.06,
            },
            ..RobotSpec::default()
        }
    }

    fn circle(x: f64, y: f64, r: f64, friction: f64, target: bool) -> ObjectSpec {
        ObjectSpec {
            shape: ObjectShape::Circle { radius: r },
            mass: 0.5,
            friction,
            pose: Pose2::new(x, y, 0.0),
            is_target: target,
            height: None,
        }
    }

    fn scene(robot: RobotSpec, objects: Vec<ObjectSpec>) -> SceneSpec {
        let s = SceneSpec {
            table: Table::default(),
            robot,
            objects,
        };
        s.validate().unwrap();
        s
    }

    fn push_x(v: f64) -> Control {
        Control {
            v_x: v,
            v_y: 0.0,
            v_rot: 0.0,
            v_grip: 0.0,
            duration: 1.0,
        }
    }

    #[test]
    fn zero_control_is_identity() {
        let sc = scene(
            robot_at(-0.2, 0.0, 0.0),
            vec![circle(0.1, 0.1, 0.04, 0.3, true), circle(-0.1, 0.15, 0.03, 0.5, false)],
        );
        let sim = Simulator::new(&sc, PhysicsConfig::default());
        let x0 = WorldState::initial(&sc);
        let x1 = sim.step(&x0, &Control::zero(1.0), &mut VelocityNoise::none());
        assert_eq!(x0, x1);
    }

    #[test]
    fn free_space_translation_is_exact() {
        let sc = scene(robot_at(-0.2, -0.2, 0.0), vec![circle(0.2, 0.2, 0.04, 0.3, true)]);
        let sim = Simulator::new(&sc, PhysicsConfig::default());
        let x0 = WorldState::initial(&sc);
        let x1 = sim.step(&x0, &push_x(0.04), &mut VelocityNoise::none());
        assert!((x1.robot.x - x0.robot.x - 0.04).abs() < 1e-15);
        assert_eq!(x1.objects, x0.objects);
    }

    #[test]
    fn head_on_push_is_colinear() {
        // Palm face at x = -0.05 + 0.01; circle touching it.
        let sc = scene(robot_at(-0.1, 0.0, 0.0), vec![circle(-0.05, 0.0, 0.04, 0.3, true)]);
        let sim = Simulator::new(&sc, PhysicsConfig::default());
        let x0 = WorldState::initial(&sc);
        let x1 = sim.step(&x0, &push_x(0.04), &mut VelocityNoise::none());
        let d = x1.objects[0].position() - x0.objects[0].position();
        assert!(d.x > 0.03);
        assert!(d.y.atan2(d.x).abs() < 1e-6);
        assert!(max_penetration(&x1, &sc) <= 1e-3);
    }

    #[test]
    fn friction_scales_push() {
        let run = |mu: f64| {
            let sc = scene(robot_at(-0.1, 0.0, 0.0), vec![circle(-0.05, 0.0, 0.04, mu, true)]);
            let sim = Simulator::new(&sc, PhysicsConfig::default());
            let x0 = WorldState::initial(&sc);
            let x1 = sim.step(&x0, &push_x(0.04), &mut VelocityNoise::none());
            x1.objects[0].x - x0.objects[0].x
        };
        let low = run(0.2);
        let high = run(0.8);
        assert!(high < low, "{high} vs {low}");
    }

    #[test]
    fn chain_propagates() {
        let sc = scene(
            robot_at(-0.1, 0.0, 0.0),
            vec![circle(-0.05, 0.0, 0.04, 0.3, true), circle(0.03, 0.0, 0.04, 0.3, false)],
        );
        let sim = Simulator::new(&sc, PhysicsConfig::default());
        let x1 = sim.step(&WorldState::initial(&sc), &push_x(0.05), &mut VelocityNoise::none());
        assert!(x1.objects[1].x > 0.03 + 0.02);
        assert!(max_penetration(&x1, &sc) <= 1e-3);
    }

    #[test]
    fn grasp_region() {
        let rs = robot_at(0.0, 0.0, 0.0);
        let mid = rs.palm_half_depth + rs.finger_half_length;
        let sc = scene(rs, vec![circle(mid, 0.0, 0.01, 0.3, true)]);
        let mut x = WorldState::initial(&sc);
        assert!(is_grasped(&x, &sc));
        x.objects[0] = Pose2::new(1.0, 0.0, 0.0);
        assert!(!is_grasped(&x, &sc));
        x.objects[0] = Pose2::new(rs.fingertip_offset(), 0.0, 0.0);
        assert!(is_grasped(&x, &sc));
        x.objects[0] = Pose2::new(rs.fingertip_offset() + 1e-9, 0.0, 0.0);
        assert!(!is_grasped(&x, &sc));
        x.objects[0] = Pose2::new(mid, 0.0, 0.0);
        x.dropped[0] = true;
        assert!(!is_grasped(&x, &sc));
    }

    #[test]
    fn pushed_off_the_edge() {
        // Non-target circle near the +x edge, pushed out.
        let sc = scene(
            robot_at(0.18, 0.0, 0.0),
            vec![circle(0.245, 0.0, 0.045, 0.2, false), circle(-0.2, 0.2, 0.03, 0.3, true)],
        );
        let sim = Simulator::new(&sc, PhysicsConfig::default());
        let x0 = WorldState::initial(&sc);
        assert!(!dropped_any_nontarget(&x0, &sc));
        let x1 = sim.step(&x0, &push_x(0.1), &mut VelocityNoise::none());
        assert!(x1.objects[0].x > sc.table.half_x);
        assert!(x1.dropped[0]);
        assert!(dropped_any_nontarget(&x1, &sc));

        let mut only_target = x0.clone();
        only_target.dropped[1] = true;
        assert!(!dropped_any_nontarget(&only_target, &sc));
    }

    #[test]
    fn rollout_shapes() {
        let sc = scene(robot_at(-0.2, -0.2, 0.0), vec![circle(0.2, 0.2, 0.04, 0.3, true)]);
        let sim = Simulator::new(&sc, PhysicsConfig::default());
        let x0 = WorldState::initial(&sc);
        assert_eq!(sim.rollout(&x0, &[], &mut VelocityNoise::none()), vec![x0.clone()]);
        let zs = sim.rollout(&x0, &[Control::zero(1.0); 4], &mut VelocityNoise::none());
        assert_eq!(zs.len(), 5);
        assert!(zs.iter().all(|s| *s == x0));
        let cut = sim.rollout_until(&x0, &[push_x(0.01); 5], &mut VelocityNoise::none(), |t, _| t == 1);
        assert_eq!(cut.len(), 3);
    }
}
