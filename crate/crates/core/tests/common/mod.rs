#![allow(dead_code)]

use std::io::Write;

use clutter_mpc::world::{ObjectShape, ObjectSpec, Pose2, RobotSpec, RobotState, SceneSpec, Table};

pub fn circle(x: f64, y: f64, radius: f64, friction: f64, is_target: bool) -> ObjectSpec {
    ObjectSpec {
        shape: ObjectShape::Circle { radius },
        mass: 0.4,
        friction,
        pose: Pose2::new(x, y, 0.0),
        is_target,
        height: None,
    }
}

pub fn block(x: f64, y: f64, theta: f64, half: (f64, f64), friction: f64) -> ObjectSpec {
    ObjectSpec {
        shape: ObjectShape::Box {
            half_x: half.0,
            half_y: half.1,
        },
        mass: 0.4,
        friction,
        pose: Pose2::new(x, y, theta),
        is_target: false,
        height: None,
    }
}

pub fn robot(x: f64, y: f64, rot: f64) -> RobotSpec {
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

pub fn scene(robot: RobotSpec, objects: Vec<ObjectSpec>) -> SceneSpec {
    SceneSpec {
        table: Table::default(),
        robot,
        objects,
    }
}

/// Palm facing +x at the origin's left, target `distance` ahead of the
/// palm face.
pub fn lone_target(distance: f64, radius: f64) -> SceneSpec {
    scene(
        robot(-0.2, 0.0, 0.0),
        vec![circle(-0.19 + distance, 0.0, radius, 0.4, true)],
    )
}

/// Writes one verdict line past the test harness's output capture.
pub fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] criterion {criterion:>2} {verdict}: {name} ({detail})");
}
