use serde::{Deserialize, Serialize};

use crate::geometry::{penetration, Vec2};
use crate::world::{Link, SceneSpec, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyId {
    Robot(Link),
    Object(usize),
}

/// A penetrating pair. `normal` points from `body_a` into `body_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub body_a: BodyId,
    pub body_b: BodyId,
    pub point: Vec2,
    pub normal: Vec2,
    pub depth: f64,
}

/// All penetrating robot–object and object–object pairs, in processing
/// order. Dropped objects are ignored.
pub fn contacts(state: &WorldState, scene: &SceneSpec) -> Vec<Contact> {
    let n = state.objects.len();
    let mut out = Vec::new();
    let live = |i: usize| !state.dropped[i];
    for i in (0..n).filter(|&i| live(i)) {
        let os = scene.object_shape(i, &state.objects[i]);
        for link in Link::ALL {
            let ls = scene.robot.link_shape(&state.robot, link);
            if let Some(p) = penetration(&ls, &os) {
                out.push(Contact {
                    body_a: BodyId::Robot(link),
                    body_b: BodyId::Object(i),
                    point: p.point,
                    normal: p.normal,
                    depth: p.depth,
                });
            }
        }
    }
    for i in (0..n).filter(|&i| live(i)) {
        let a = scene.object_shape(i, &state.objects[i]);
        for j in (i + 1..n).filter(|&j| live(j)) {
            let b = scene.object_shape(j, &state.objects[j]);
            if let Some(p) = penetration(&a, &b) {
                out.push(Contact {
                    body_a: BodyId::Object(i),
                    body_b: BodyId::Object(j),
                    point: p.point,
                    normal: p.normal,
                    depth: p.depth,
                });
            }
        }
    }
    out
}

/// Deepest penetration in the state, 0 when penetration-free.
pub fn max_penetration(state: &WorldState, scene: &SceneSpec) -> f64 {
    contacts(state, scene)
        .iter()
        .map(|c| c.depth)
        .fold(0.0, f64::max)
}
