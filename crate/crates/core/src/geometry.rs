//! Planar vectors, oriented shapes and narrow-phase penetration queries.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`. Angles already in range are returned
/// unchanged, so the function is idempotent bit-for-bit.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > PI {
        t -= two_pi;
    }
    // rem_euclid can land exactly on -π after the shift for inputs just
    // below an odd multiple of π.
    if t <= -PI {
        t += two_pi;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A 2D rotation stored as its first column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot2 {
    pub cos: f64,
    pub sin: f64,
}

impl Rot2 {
    pub fn new(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Rot2 { cos, sin }
    }

    pub fn x_axis(self) -> Vec2 {
        Vec2::new(self.cos, self.sin)
    }

    pub fn y_axis(self) -> Vec2 {
        Vec2::new(-self.sin, self.cos)
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.cos * v.x - self.sin * v.y, self.sin * v.x + self.cos * v.y)
    }

    pub fn apply_inverse(self, v: Vec2) -> Vec2 {
        Vec2::new(self.cos * v.x + self.sin * v.y, -self.sin * v.x + self.cos * v.y)
    }
}

/// A shape placed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Circle { center: Vec2, radius: f64 },
    Obb { center: Vec2, rot: Rot2, half: Vec2 },
}

impl Shape {
    pub fn center(&self) -> Vec2 {
        match *self {
            Shape::Circle { center, .. } | Shape::Obb { center, .. } => center,
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Circle { radius, .. } => radius,
            Shape::Obb { half, .. } => half.norm(),
        }
    }

    /// Half extents of the world-axis-aligned bounding box.
    pub fn aabb_half(&self) -> Vec2 {
        match *self {
            Shape::Circle { radius, .. } => Vec2::new(radius, radius),
            Shape::Obb { rot, half, .. } => Vec2::new(
                rot.cos.abs() * half.x + rot.sin.abs() * half.y,
                rot.sin.abs() * half.x + rot.cos.abs() * half.y,
            ),
        }
    }

    pub fn corners(&self) -> Option<[Vec2; 4]> {
        match *self {
            Shape::Circle { .. } => None,
            Shape::Obb { center, rot, half } => {
                let ax = rot.x_axis() * half.x;
                let ay = rot.y_axis() * half.y;
                Some([
                    center + ax + ay,
                    center - ax + ay,
                    center - ax - ay,
                    center + ax - ay,
                ])
            }
        }
    }
}

/// Result of a penetration query. `normal` points from the first shape
/// towards the second; moving the second shape by `normal * depth`
/// separates the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub normal: Vec2,
    pub depth: f64,
    pub point: Vec2,
}

/// Penetration between two shapes, or `None` when they are separated or
/// merely touching.
pub fn penetration(a: &Shape, b: &Shape) -> Option<Penetration> {
    let reach = a.bounding_radius() + b.bounding_radius();
    if (b.center() - a.center()).norm_squared() >= reach * reach {
        return None;
    }
    match (*a, *b) {
        (
            Shape::Circle {
                center: ca,
                radius: ra,
            },
            Shape::Circle {
                center: cb,
                radius: rb,
            },
        ) => circle_circle(ca, ra, cb, rb),
        (Shape::Obb { center, rot, half }, Shape::Circle { center: c, radius }) => {
            box_circle(center, rot, half, c, radius)
        }
        (Shape::Circle { center: c, radius }, Shape::Obb { center, rot, half }) => {
            box_circle(center, rot, half, c, radius).map(|p| Penetration {
                normal: -p.normal,
                ..p
            })
        }
        (Shape::Obb { .. }, Shape::Obb { .. }) => box_box(a, b),
    }
}

fn circle_circle(ca: Vec2, ra: f64, cb: Vec2, rb: f64) -> Option<Penetration> {
    let d = cb - ca;
    let dist = d.norm();
    let depth = ra + rb - dist;
    if depth <= 0.0 {
        return None;
    }
    let normal = if dist > 0.0 {
        d * (1.0 / dist)
    } else {
        Vec2::new(1.0, 0.0)
    };
    Some(Penetration {
        normal,
        depth,
        point: ca + normal * (ra - 0.5 * depth),
    })
}

/// Normal points from the box into the circle.
fn box_circle(center: Vec2, rot: Rot2, half: Vec2, c: Vec2, radius: f64) -> Option<Penetration> {
    let local = rot.apply_inverse(c - center);
    let closest = Vec2::new(
        local.x.clamp(-half.x, half.x),
        local.y.clamp(-half.y, half.y),
    );
    if closest != local {
        let diff = local - closest;
        let dist = diff.norm();
        if dist >= radius {
            return None;
        }
        let normal = rot.apply(diff * (1.0 / dist));
        return Some(Penetration {
            normal,
            depth: radius - dist,
            point: center + rot.apply(closest),
        });
    }
    // Centre inside the box: exit through the nearest face.
    let gap_x = half.x - local.x.abs();
    let gap_y = half.y - local.y.abs();
    let (local_normal, gap, face) = if gap_x <= gap_y {
        let s = if local.x >= 0.0 { 1.0 } else { -1.0 };
        (Vec2::new(s, 0.0), gap_x, Vec2::new(s * half.x, local.y))
    } else {
        let s = if local.y >= 0.0 { 1.0 } else { -1.0 };
        (Vec2::new(0.0, s), gap_y, Vec2::new(local.x, s * half.y))
    };
    Some(Penetration {
        normal: rot.apply(local_normal),
        depth: gap + radius,
        point: center + rot.apply(face),
    })
}

fn project_radius(rot: Rot2, half: Vec2, axis: Vec2) -> f64 {
    half.x * rot.x_axis().dot(axis).abs() + half.y * rot.y_axis().dot(axis).abs()
}

/// Separating-axis test over the four face normals.
fn box_box(a: &Shape, b: &Shape) -> Option<Penetration> {
    let (Shape::Obb {
        center: ca,
        rot: ra,
        half: ha,
    }, Shape::Obb {
        center: cb,
        rot: rb,
        half: hb,
    }) = (*a, *b)
    else {
        unreachable!("box_box called with a circle");
    };
    let d = cb - ca;
    let mut best: Option<(f64, Vec2)> = None;
    for axis in [ra.x_axis(), ra.y_axis(), rb.x_axis(), rb.y_axis()] {
        let dist = d.dot(axis);
        let overlap = project_radius(ra, ha, axis) + project_radius(rb, hb, axis) - dist.abs();
        if overlap <= 0.0 {
            return None;
        }
        if best.is_none_or(|(o, _)| overlap < o) {
            let normal = if dist >= 0.0 { axis } else { -axis };
            best = Some((overlap, normal));
        }
    }
    let (depth, normal) = best?;
    // Deepest corner of b along -normal.
    let point = b
        .corners()
        .expect("b is a box")
        .into_iter()
        .min_by(|p, q| p.dot(normal).total_cmp(&q.dot(normal)))
        .expect("four corners");
    Some(Penetration {
        normal,
        depth,
        point,
    })
}
