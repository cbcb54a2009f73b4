//! Random execution worlds, planning-world perturbation and execution noise
//! per uncertainty level.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::penetration;
use crate::physics::NoiseSpec;
use crate::world::{ObjectShape, ObjectSpec, Pose2, RobotSpec, SceneSpec, Table};
use crate::{Error, Result};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyLevel {
    None,
    Low,
    Medium,
    High,
}

impl UncertaintyLevel {
    pub const ALL: [UncertaintyLevel; 4] = [
        UncertaintyLevel::None,
        UncertaintyLevel::Low,
        UncertaintyLevel::Medium,
        UncertaintyLevel::High,
    ];

    /// Scale applied to the low-level perturbation variances.
    pub fn multiplier(self) -> f64 {
        match self {
            UncertaintyLevel::None => 0.0,
            UncertaintyLevel::Low => 1.0,
            UncertaintyLevel::Medium => 2.0,
            UncertaintyLevel::High => 3.0,
        }
    }

    /// Execution velocity-noise variance.
    pub fn beta(self) -> f64 {
        match self {
            UncertaintyLevel::None => 0.0,
            UncertaintyLevel::Low => 0.003,
            UncertaintyLevel::Medium => 0.006,
            UncertaintyLevel::High => 0.009,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UncertaintyLevel::None => "none",
            UncertaintyLevel::Low => "low",
            UncertaintyLevel::Medium => "medium",
            UncertaintyLevel::High => "high",
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for UncertaintyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UncertaintyLevel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(UncertaintyLevel::None),
            "low" => Ok(UncertaintyLevel::Low),
            "medium" => Ok(UncertaintyLevel::Medium),
            "high" => Ok(UncertaintyLevel::High),
            other => Err(format!(
                "unknown uncertainty level `{other}` (expected none|low|medium|high)"
            )),
        }
    }
}

/// Execution-world velocity noise for a level, shared by every linear and
/// angular component.
pub fn noise_spec(level: UncertaintyLevel) -> NoiseSpec {
    NoiseSpec::uniform(level.beta())
}

/// Closed uniform range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneGenParams {
    pub object_count: usize,
    pub table: Table,
    pub robot: RobotSpec,
    /// Full side lengths of boxes.
    pub box_extent: Range,
    pub box_height: Range,
    pub cylinder_radius: Range,
    pub cylinder_height: Range,
    pub mass: Range,
    pub friction: Range,
    /// Per-axis variance of the target position around the table centre, m².
    pub target_variance: f64,
    /// Minimum gap between placed footprints (and the robot).
    pub clearance: f64,
    pub max_attempts: usize,
}

impl Default for SceneGenParams {
    fn default() -> Self {
        SceneGenParams {
            object_count: 6,
            table: Table::default(),
            robot: RobotSpec::default(),
            box_extent: Range::new(0.03, 0.05),
            box_height: Range::new(0.036, 0.04),
            cylinder_radius: Range::new(0.035, 0.04),
            cylinder_height: Range::new(0.04, 0.055),
            mass: Range::new(0.2, 0.8),
            friction: Range::new(0.2, 0.6),
            target_variance: 0.01,
            clearance: 0.002,
            max_attempts: 10_000,
        }
    }
}

impl SceneGenParams {
    pub fn validate(&self) -> Result<()> {
        if self.object_count == 0 {
            return Err(Error::Config("object_count must be at least 1".into()));
        }
        for (name, r) in [
            ("box_extent", self.box_extent),
            ("box_height", self.box_height),
            ("cylinder_radius", self.cylinder_radius),
            ("cylinder_height", self.cylinder_height),
            ("mass", self.mass),
            ("friction", self.friction),
        ] {
            if !r.valid() {
                return Err(Error::Config(format!("range {name} must be positive and ordered")));
            }
        }
        if !(self.target_variance >= 0.0) || !(self.clearance >= 0.0) {
            return Err(Error::Config("variance and clearance must be >= 0".into()));
        }
        Ok(())
    }
}

fn random_object<R: Rng + ?Sized>(p: &SceneGenParams, is_target: bool, rng: &mut R) -> ObjectSpec {
    let is_box = rng.random_bool(0.5);
    let (shape, height) = if is_box {
        let ex = p.box_extent.sample(rng);
        let ey = p.box_extent.sample(rng);
        (
            ObjectShape::Box {
                half_x: ex / 2.0,
                half_y: ey / 2.0,
            },
            p.box_height.sample(rng),
        )
    } else {
        (
            ObjectShape::Circle {
                radius: p.cylinder_radius.sample(rng),
            },
            p.cylinder_height.sample(rng),
        )
    };
    ObjectSpec {
        shape,
        mass: p.mass.sample(rng),
        friction: p.friction.sample(rng),
        pose: Pose2::default(),
        is_target,
        height: Some(height),
    }
}

/// Whether `candidate` can be placed: inside the table and at least
/// `clearance` away from the robot and every placed object.
fn fits(p: &SceneGenParams, placed: &[ObjectSpec], candidate: &ObjectSpec) -> bool {
    let pose = candidate.pose;
    let shape = candidate.shape.placed(&pose);
    let h = shape.aabb_half();
    if pose.x.abs() + h.x > p.table.half_x || pose.y.abs() + h.y > p.table.half_y {
        return false;
    }
    let grown = grow(candidate.shape, p.clearance).placed(&pose);
    let robot = p.robot.link_shapes(&p.robot.initial);
    if robot.iter().any(|l| penetration(l, &grown).is_some()) {
        return false;
    }
    placed
        .iter()
        .all(|o| penetration(&o.shape.placed(&o.pose), &grown).is_none())
}

fn grow(shape: ObjectShape, by: f64) -> ObjectShape {
    match shape {
        ObjectShape::Circle { radius } => ObjectShape::Circle { radius: radius + by },
        ObjectShape::Box { half_x, half_y } => ObjectShape::Box {
            half_x: half_x + by,
            half_y: half_y + by,
        },
    }
}

/// Random scene: the target near the table centre, the other objects
/// scattered by rejection sampling. The target is object 0.
pub fn generate_scene<R: Rng + ?Sized>(params: &SceneGenParams, rng: &mut R) -> Result<SceneSpec> {
    params.validate()?;
    let t = &params.table;
    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(params.object_count);
    let target_sd = params.target_variance.sqrt();

    for i in 0..params.object_count {
        let mut obj = random_object(params, i == 0, rng);
        let mut placed = false;
        for _ in 0..params.max_attempts {
            let (x, y) = if i == 0 {
                let zx: f64 = rng.sample(StandardNormal);
                let zy: f64 = rng.sample(StandardNormal);
                (zx * target_sd, zy * target_sd)
            } else {
                (
                    rng.random_range(-t.half_x..=t.half_x),
                    rng.random_range(-t.half_y..=t.half_y),
                )
            };
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            obj.pose = Pose2::new(x, y, theta);
            if fits(params, &objects, &obj) {
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::SceneGeneration(format!(
                "could not place object {i} after {} attempts",
                params.max_attempts
            )));
        }
        objects.push(obj);
    }

    let scene = SceneSpec {
        table: params.table,
        robot: params.robot,
        objects,
    };
    scene.validate()?;
    Ok(scene)
}

/// Low-level perturbation variances; each level scales them by its
/// multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationVariances {
    pub translation: f64,
    pub rotation: f64,
    /// Box side lengths, cylinder radius and height.
    pub dimension: f64,
    pub mass: f64,
    pub friction: f64,
}

impl Default for PerturbationVariances {
    fn default() -> Self {
        PerturbationVariances {
            translation: 0.005,
            rotation: 0.005,
            dimension: 0.005,
            mass: 0.01,
            friction: 0.005,
        }
    }
}

const MIN_DIMENSION: f64 = 0.001;
const MIN_MASS: f64 = 0.01;
const MIN_FRICTION: f64 = 0.05;

/// Planning-world copy of `scene` with Gaussian noise on every object's
/// pose, size, mass and friction. Draws happen in a fixed order for every
/// level, so the same RNG state gives perturbations that scale with
/// `sqrt(multiplier)`.
pub fn perturb_scene<R: Rng + ?Sized>(
    scene: &SceneSpec,
    level: UncertaintyLevel,
    variances: &PerturbationVariances,
    rng: &mut R,
) -> SceneSpec {
    let m = level.multiplier();
    if m == 0.0 {
        return scene.clone();
    }
    let mut gauss = |var: f64| -> f64 {
        Normal::new(0.0, (var * m).sqrt())
            .expect("finite, non-negative variance")
            .sample(rng)
    };
    let mut out = scene.clone();
    for o in &mut out.objects {
        let dx = gauss(variances.translation);
        let dy = gauss(variances.translation);
        let dth = gauss(variances.rotation);
        o.pose = Pose2::new(o.pose.x + dx, o.pose.y + dy, o.pose.theta + dth);
        o.shape = match o.shape {
            ObjectShape::Circle { radius } => {
                let dr = gauss(variances.dimension);
                ObjectShape::Circle {
                    radius: (radius + dr).max(MIN_DIMENSION),
                }
            }
            ObjectShape::Box { half_x, half_y } => {
                let ex = gauss(variances.dimension);
                let ey = gauss(variances.dimension);
                ObjectShape::Box {
                    half_x: (2.0 * half_x + ex).max(MIN_DIMENSION) / 2.0,
                    half_y: (2.0 * half_y + ey).max(MIN_DIMENSION) / 2.0,
                }
            }
        };
        let dh = gauss(variances.dimension);
        o.height = o.height.map(|h| (h + dh).max(MIN_DIMENSION));
        let dm = gauss(variances.mass);
        o.mass = (o.mass + dm).max(MIN_MASS);
        let df = gauss(variances.friction);
        o.friction = (o.friction + df).max(MIN_FRICTION);
    }
    out
}
