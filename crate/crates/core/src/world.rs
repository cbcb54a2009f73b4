//! World description: poses, robot and object state, controls, scenes,
//! plans, and the scene file format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostBreakdown;
use crate::geometry::{normalize_angle, Rot2, Shape, Vec2};
use crate::{Error, Result};

/// Planar object pose. Serialized as `[x, y, theta]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

impl From<[f64; 3]> for Pose2 {
    fn from([x, y, theta]: [f64; 3]) -> Self {
        Pose2::new(x, y, theta)
    }
}

impl From<Pose2> for [f64; 3] {
    fn from(p: Pose2) -> Self {
        [p.x, p.y, p.theta]
    }
}

/// Joint values of the planar free-flying gripper. `(x, y)` is the palm
/// centre (the wrist rotation axis), `rot` the heading of the gripper's
/// forward axis and `grip` the lateral offset of each finger's centre from
/// the palm centre. Serialized as `[x, y, rot, grip]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub rot: f64,
    pub grip: f64,
}

impl From<[f64; 4]> for RobotState {
    fn from([x, y, rot, grip]: [f64; 4]) -> Self {
        RobotState {
            x,
            y,
            rot: normalize_angle(rot),
            grip,
        }
    }
}

impl From<RobotState> for [f64; 4] {
    fn from(r: RobotState) -> Self {
        [r.x, r.y, r.rot, r.grip]
    }
}

impl RobotState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.rot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectShape {
    Circle { radius: f64 },
    Box { half_x: f64, half_y: f64 },
}

impl ObjectShape {
    pub fn placed(&self, pose: &Pose2) -> Shape {
        match *self {
            ObjectShape::Circle { radius } => Shape::Circle {
                center: pose.position(),
                radius,
            },
            ObjectShape::Box { half_x, half_y } => Shape::Obb {
                center: pose.position(),
                rot: Rot2::new(pose.theta),
                half: Vec2::new(half_x, half_y),
            },
        }
    }

    fn dims(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ObjectShape::Circle { radius } => vec![("radius", radius)],
            ObjectShape::Box { half_x, half_y } => vec![("half_x", half_x), ("half_y", half_y)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub shape: ObjectShape,
    pub mass: f64,
    pub friction: f64,
    pub pose: Pose2,
    #[serde(default, rename = "target", skip_serializing_if = "std::ops::Not::not")]
    pub is_target: bool,
    /// Object height. Carried as metadata; the planar model ignores it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub half_x: f64,
    pub half_y: f64,
    pub safe_margin: f64,
}

impl Table {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_x && p.y.abs() <= self.half_y
    }

    /// Inside the table shrunk by the safe margin (boundary included).
    pub fn in_safe_zone(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_x - self.safe_margin && p.y.abs() <= self.half_y - self.safe_margin
    }
}

impl Default for Table {
    fn default() -> Self {
        Table {
            half_x: 0.3,
            half_y: 0.3,
            safe_margin: 0.05,
        }
    }
}

/// Gripper geometry: a palm rectangle with two finger rectangles extending
/// forward from the palm face at lateral offsets `±grip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub palm_half_depth: f64,
    pub palm_half_width: f64,
    pub finger_half_length: f64,
    pub finger_half_width: f64,
    pub grip_min: f64,
    pub grip_max: f64,
    pub initial: RobotState,
}

impl Default for RobotSpec {
    fn default() -> Self {
        RobotSpec {
            palm_half_depth: 0.01,
            palm_half_width: 0.04,
            finger_half_length: 0.03,
            finger_half_width: 0.01,
            grip_min: 0.03,
            grip_max: 0.06,
            initial: RobotState {
                x: 0.0,
                y: -0.28,
                rot: std::f64::consts::FRAC_PI_2,
                grip: 0.06,
            },
        }
    }
}

/// Robot link identifiers, in contact-processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    Palm,
    LeftFinger,
    RightFinger,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::Palm, Link::LeftFinger, Link::RightFinger];
}

impl RobotSpec {
    /// Forward offset of the fingertips from the palm centre.
    pub fn fingertip_offset(&self) -> f64 {
        self.palm_half_depth + 2.0 * self.finger_half_length
    }

    /// Midpoint of the palm's inner face: the fixed point the goal cost
    /// measures from.
    pub fn reference_point(&self, robot: &RobotState) -> Vec2 {
        robot.position() + robot.forward() * self.palm_half_depth
    }

    pub fn link_shape(&self, robot: &RobotState, link: Link) -> Shape {
        let rot = Rot2::new(robot.rot);
        let center = robot.position();
        match link {
            Link::Palm => Shape::Obb {
                center,
                rot,
                half: Vec2::new(self.palm_half_depth, self.palm_half_width),
            },
            Link::LeftFinger | Link::RightFinger => {
                let side = if link == Link::LeftFinger { 1.0 } else { -1.0 };
                let local = Vec2::new(
                    self.palm_half_depth + self.finger_half_length,
                    side * robot.grip,
                );
                Shape::Obb {
                    center: center + rot.apply(local),
                    rot,
                    half: Vec2::new(self.finger_half_length, self.finger_half_width),
                }
            }
        }
    }

    pub fn link_shapes(&self, robot: &RobotState) -> [Shape; 3] {
        Link::ALL.map(|l| self.link_shape(robot, l))
    }

    /// Whether `p` lies in the closed pre-grasp rectangle between the
    /// finger inner faces, from the palm face to the fingertips.
    pub fn in_pregrasp_region(&self, robot: &RobotState, p: Vec2) -> bool {
        let local = Rot2::new(robot.rot).apply_inverse(p - robot.position());
        let lateral = robot.grip - self.finger_half_width;
        local.x >= self.palm_half_depth
            && local.x <= self.fingertip_offset()
            && local.y.abs() <= lateral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub table: Table,
    pub robot: RobotSpec,
    pub objects: Vec<ObjectSpec>,
}

impl SceneSpec {
    pub fn target_index(&self) -> usize {
        self.objects
            .iter()
            .position(|o| o.is_target)
            .expect("validated scene has a target")
    }

    pub fn object_shape(&self, i: usize, pose: &Pose2) -> Shape {
        self.objects[i].shape.placed(pose)
    }

    pub fn from_json(text: &str) -> Result<SceneSpec> {
        let scene: SceneSpec = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "scene".into(),
            source,
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Checks every scene invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let t = &self.table;
        positive("table.half_x", t.half_x)?;
        positive("table.half_y", t.half_y)?;
        if !(t.safe_margin > 0.0 && t.safe_margin < t.half_x.min(t.half_y)) {
            return Err(Error::invalid(
                "table.safe_margin",
                format!("{} not in (0, min(half_x, half_y))", t.safe_margin),
            ));
        }

        let r = &self.robot;
        positive("robot.palm_half_depth", r.palm_half_depth)?;
        positive("robot.palm_half_width", r.palm_half_width)?;
        positive("robot.finger_half_length", r.finger_half_length)?;
        positive("robot.finger_half_width", r.finger_half_width)?;
        positive("robot.grip_min", r.grip_min)?;
        if r.grip_max < r.grip_min {
            return Err(Error::invalid("robot.grip_max", "grip_max < grip_min"));
        }
        if r.grip_min <= r.finger_half_width {
            return Err(Error::invalid(
                "robot.grip_min",
                "fingers would overlap at minimum grip",
            ));
        }
        let init = &r.initial;
        if ![init.x, init.y, init.rot].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("robot.initial", "non-finite joint value"));
        }
        if !(init.grip >= r.grip_min && init.grip <= r.grip_max) {
            return Err(Error::invalid(
                "robot.initial[3]",
                format!("grip {} outside [{}, {}]", init.grip, r.grip_min, r.grip_max),
            ));
        }

        if self.objects.is_empty() {
            return Err(Error::invalid("objects", "scene has no objects"));
        }
        let targets = self.objects.iter().filter(|o| o.is_target).count();
        if targets != 1 {
            return Err(Error::invalid(
                "objects",
                format!("expected exactly one target, found {targets}"),
            ));
        }
        for (i, o) in self.objects.iter().enumerate() {
            for (name, v) in o.shape.dims() {
                positive(&format!("objects[{i}].shape.{name}"), v)?;
            }
            positive(&format!("objects[{i}].mass"), o.mass)?;
            positive(&format!("objects[{i}].friction"), o.friction)?;
            if let Some(h) = o.height {
                positive(&format!("objects[{i}].height"), h)?;
            }
            let p = o.pose;
            if ![p.x, p.y, p.theta].iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("objects[{i}].pose"), "non-finite pose"));
            }
            let shape = o.shape.placed(&p);
            let h = shape.aabb_half();
            if p.x.abs() + h.x > t.half_x || p.y.abs() + h.y > t.half_y {
                return Err(Error::invalid(
                    format!("objects[{i}].pose"),
                    "footprint extends past the table edge",
                ));
            }
        }
        for i in 0..self.objects.len() {
            for j in i + 1..self.objects.len() {
                let a = self.objects[i].shape.placed(&self.objects[i].pose);
                let b = self.objects[j].shape.placed(&self.objects[j].pose);
                if let Some(p) = crate::geometry::penetration(&a, &b) {
                    return Err(Error::invalid(
                        format!("objects[{i}], objects[{j}]"),
                        format!("objects {i} and {j} overlap by {:.4} m", p.depth),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and > 0")))
    }
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneSpec::from_json(&text).map_err(|e| match e {
        Error::Parse { source, .. } => Error::Parse {
            what: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn save_scene(scene: &SceneSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scene.to_json()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robot: RobotState,
    /// Index-aligned with `SceneSpec::objects`, target included.
    pub objects: Vec<Pose2>,
    pub dropped: Vec<bool>,
}

impl WorldState {
    pub fn initial(scene: &SceneSpec) -> Self {
        WorldState {
            robot: scene.robot.initial,
            objects: scene.objects.iter().map(|o| o.pose).collect(),
            dropped: vec![false; scene.objects.len()],
        }
    }

    pub fn target_dropped(&self, scene: &SceneSpec) -> bool {
        self.dropped[scene.target_index()]
    }
}

/// Robot joint velocities held for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub v_x: f64,
    pub v_y: f64,
    pub v_rot: f64,
    pub v_grip: f64,
    pub duration: f64,
}

impl Control {
    pub fn zero(duration: f64) -> Self {
        Control {
            v_x: 0.0,
            v_y: 0.0,
            v_rot: 0.0,
            v_grip: 0.0,
            duration,
        }
    }

    pub fn velocities(&self) -> [f64; 4] {
        [self.v_x, self.v_y, self.v_rot, self.v_grip]
    }

    pub fn with_velocities(&self, [v_x, v_y, v_rot, v_grip]: [f64; 4]) -> Self {
        Control {
            v_x,
            v_y,
            v_rot,
            v_grip,
            duration: self.duration,
        }
    }
}

/// Velocity bounds. The translational bound applies to the resultant
/// `(v_x, v_y)` speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlLimits {
    pub max_linear: f64,
    pub max_angular: f64,
    /// Zero keeps the gripper at its initial opening during approach.
    pub max_grip: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        ControlLimits {
            max_linear: 0.1,
            max_angular: 1.0,
            max_grip: 0.0,
        }
    }
}

impl ControlLimits {
    pub fn clamp(&self, u: Control) -> Control {
        let speed = u.v_x.hypot(u.v_y);
        let (v_x, v_y) = if speed > self.max_linear {
            let s = self.max_linear / speed;
            (u.v_x * s, u.v_y * s)
        } else {
            (u.v_x, u.v_y)
        };
        Control {
            v_x,
            v_y,
            v_rot: u.v_rot.clamp(-self.max_angular, self.max_angular),
            v_grip: u.v_grip.clamp(-self.max_grip, self.max_grip),
            duration: u.duration,
        }
    }

    pub fn admits(&self, u: &Control) -> bool {
        u.v_x.hypot(u.v_y) <= self.max_linear * (1.0 + 1e-12)
            && u.v_rot.abs() <= self.max_angular
            && u.v_grip.abs() <= self.max_grip
    }
}

/// A control sequence with the states it is predicted to produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub controls: Vec<Control>,
    /// `controls.len() + 1` states; the first is the state planned from.
    pub predicted_states: Vec<WorldState>,
    pub total_cost: f64,
    /// Weighted running terms of each transition.
    pub per_step_costs: Vec<CostBreakdown>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn final_state(&self) -> &WorldState {
        self.predicted_states.last().expect("plan has at least one state")
    }

    /// Drops the executed head control and its start state.
    pub fn shift(&mut self) -> Option<Control> {
        if self.controls.is_empty() {
            return None;
        }
        self.predicted_states.remove(0);
        if !self.per_step_costs.is_empty() {
            self.per_step_costs.remove(0);
        }
        Some(self.controls.remove(0))
    }
}

/// Weights of the state-deviation norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviationWeights {
    /// m² per rad²: how much a squared angle error weighs against a squared
    /// translation.
    pub w_ang: f64,
    pub w_robot: f64,
    pub include_robot: bool,
}

impl Default for DeviationWeights {
    fn default() -> Self {
        DeviationWeights {
            w_ang: 0.05,
            w_robot: 1.0,
            include_robot: true,
        }
    }
}

pub(crate) fn pose_delta_sq(a: &Pose2, b: &Pose2, w_ang: f64) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dth = normalize_angle(a.theta - b.theta);
    dx * dx + dy * dy + w_ang * dth * dth
}

/// Weighted Euclidean distance between two states of the same scene.
pub fn state_deviation(a: &WorldState, b: &WorldState, w: &DeviationWeights) -> Result<f64> {
    if a.objects.len() != b.objects.len() {
        return Err(Error::ObjectCountMismatch {
            left: a.objects.len(),
            right: b.objects.len(),
        });
    }
    let mut sum: f64 = a
        .objects
        .iter()
        .zip(&b.objects)
        .map(|(p, q)| pose_delta_sq(p, q, w.w_ang))
        .sum();
    if w.include_robot {
        let (ra, rb) = (&a.robot, &b.robot);
        let dx = ra.x - rb.x;
        let dy = ra.y - rb.y;
        let dr = normalize_angle(ra.rot - rb.rot);
        let dg = ra.grip - rb.grip;
        sum += w.w_robot * (dx * dx + dy * dy + w.w_ang * dr * dr + dg * dg);
    }
    Ok(sum.sqrt())
}
