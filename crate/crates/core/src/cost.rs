//! Trajectory cost: terminal goal term plus per-step disturbance, edge and
//! acceleration terms.
//!
//! ```text
//! J = w_g·c_g(x_n) + Σ_t [ w_a·c_a(u_{t-1}, u_t) + w_d·c_d(x_t, x_{t+1}) + w_e·c_e(x_t, x_{t+1}) ]
//! ```
//!
//! with `u_{-1} = 0`.

use serde::{Deserialize, Serialize};

use crate::world::{pose_delta_sq, Control, SceneSpec, WorldState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub w_g: f64,
    pub w_phi: f64,
    pub w_d: f64,
    pub w_e: f64,
    pub w_a: f64,
    /// Edge-cost exponent scale, 1/m.
    pub k: f64,
    /// Upper bound on the edge-cost exponent.
    pub exp_clamp: f64,
    /// Rotation weight inside the disturbance term (m²/rad²).
    pub w_ang: f64,
    /// Raw goal cost of a state whose target has left the table.
    pub dropped_target_goal: f64,
    pub disturbance_includes_target: bool,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            w_g: 10_000.0,
            w_phi: 1.0,
            w_d: 800.0,
            w_e: 1.0,
            w_a: 0.1,
            k: 1000.0,
            exp_clamp: 50.0,
            w_ang: 0.05,
            dropped_target_goal: 11.0,
            disturbance_includes_target: false,
        }
    }
}

/// Weighted cost contributions. `total` is the sum of the four fields.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub goal: f64,
    pub disturbance: f64,
    pub edge: f64,
    pub acceleration: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn running(disturbance: f64, edge: f64, acceleration: f64) -> Self {
        CostBreakdown {
            goal: 0.0,
            disturbance,
            edge,
            acceleration,
            total: disturbance + edge + acceleration,
        }
    }
}

/// Distance and unsigned bearing from the gripper reference point to the
/// target centroid.
pub fn goal_geometry(x: &WorldState, scene: &SceneSpec) -> (f64, f64) {
    let r = scene.robot.reference_point(&x.robot);
    let v = x.objects[scene.target_index()].position() - r;
    let d = v.norm();
    if d == 0.0 {
        return (0.0, 0.0);
    }
    let f = x.robot.forward();
    let phi = f.cross(v).atan2(f.dot(v)).abs();
    (d, phi)
}

pub fn goal_cost(x: &WorldState, scene: &SceneSpec, w: &CostWeights) -> f64 {
    if x.target_dropped(scene) {
        return w.dropped_target_goal;
    }
    let (d, phi) = goal_geometry(x, scene);
    d * d + w.w_phi * phi * phi
}

pub fn disturbance_cost(
    x_t: &WorldState,
    x_t1: &WorldState,
    scene: &SceneSpec,
    w: &CostWeights,
) -> f64 {
    scene
        .objects
        .iter()
        .zip(x_t.objects.iter().zip(&x_t1.objects))
        .filter(|(o, _)| w.disturbance_includes_target || !o.is_target)
        .map(|(_, (a, b))| pose_delta_sq(a, b, w.w_ang))
        .sum()
}

pub fn edge_cost(x_t: &WorldState, x_t1: &WorldState, scene: &SceneSpec, w: &CostWeights) -> f64 {
    let mut sum = 0.0;
    for i in 0..x_t1.objects.len() {
        if x_t1.dropped[i] {
            sum += w.exp_clamp.exp();
            continue;
        }
        let p1 = x_t1.objects[i].position();
        if scene.table.in_safe_zone(p1) {
            continue;
        }
        let d_e = (p1 - x_t.objects[i].position()).norm();
        sum += (w.k * d_e).min(w.exp_clamp).exp();
    }
    sum
}

pub fn acceleration_cost(u_prev: &Control, u: &Control) -> f64 {
    u_prev
        .velocities()
        .iter()
        .zip(u.velocities())
        .map(|(a, b)| (b - a) * (b - a))
        .sum()
}

/// Incremental cost accumulator for rolling out a trajectory one step at a
/// time; lets the optimizer check the prefix cost without re-summing.
#[derive(Debug, Clone)]
pub struct RunningCost<'a> {
    scene: &'a SceneSpec,
    weights: &'a CostWeights,
    prev_control: Control,
    sum: CostBreakdown,
    steps: Vec<CostBreakdown>,
}

impl<'a> RunningCost<'a> {
    pub fn new(scene: &'a SceneSpec, weights: &'a CostWeights) -> Self {
        RunningCost {
            scene,
            weights,
            prev_control: Control::zero(1.0),
            sum: CostBreakdown::default(),
            steps: Vec::new(),
        }
    }

    /// Adds the running terms of transition `x_t --u--> x_t1`.
    pub fn push(&mut self, u: &Control, x_t: &WorldState, x_t1: &WorldState) {
        let w = self.weights;
        let step = CostBreakdown::running(
            w.w_d * disturbance_cost(x_t, x_t1, self.scene, w),
            w.w_e * edge_cost(x_t, x_t1, self.scene, w),
            w.w_a * acceleration_cost(&self.prev_control, u),
        );
        self.sum.disturbance += step.disturbance;
        self.sum.edge += step.edge;
        self.sum.acceleration += step.acceleration;
        self.sum.total += step.total;
        self.steps.push(step);
        self.prev_control = *u;
    }

    /// Running sum plus the goal term evaluated at `last`, treated as the
    /// terminal state.
    pub fn with_terminal(&self, last: &WorldState) -> CostBreakdown {
        let goal = self.weights.w_g * goal_cost(last, self.scene, self.weights);
        CostBreakdown {
            goal,
            total: self.sum.total + goal,
            ..self.sum
        }
    }

    pub fn into_steps(self) -> Vec<CostBreakdown> {
        self.steps
    }
}

/// Cost of `controls` driving `states`; `states.len()` must be
/// `controls.len() + 1`.
pub fn trajectory_cost(
    controls: &[Control],
    states: &[WorldState],
    scene: &SceneSpec,
    weights: &CostWeights,
) -> Result<CostBreakdown> {
    Ok(evaluate(controls, states, scene, weights)?.0)
}

/// Like [`trajectory_cost`], also returning the per-step running terms.
pub fn evaluate(
    controls: &[Control],
    states: &[WorldState],
    scene: &SceneSpec,
    weights: &CostWeights,
) -> Result<(CostBreakdown, Vec<CostBreakdown>)> {
    if states.len() != controls.len() + 1 {
        return Err(Error::LengthMismatch {
            controls: controls.len(),
            expected: controls.len() + 1,
            actual: states.len(),
        });
    }
    let mut acc = RunningCost::new(scene, weights);
    for (t, u) in controls.iter().enumerate() {
        acc.push(u, &states[t], &states[t + 1]);
    }
    let total = acc.with_terminal(states.last().expect("nonempty"));
    Ok((total, acc.into_steps()))
}

/// Cost of the first `t` controls, with `states[t]` as provisional
/// terminal state.
pub fn prefix_cost(
    controls: &[Control],
    states: &[WorldState],
    t: usize,
    scene: &SceneSpec,
    weights: &CostWeights,
) -> Result<CostBreakdown> {
    if t > controls.len() || states.len() < t + 1 {
        return Err(Error::LengthMismatch {
            controls: t,
            expected: t + 1,
            actual: states.len(),
        });
    }
    trajectory_cost(&controls[..t], &states[..=t], scene, weights)
}
