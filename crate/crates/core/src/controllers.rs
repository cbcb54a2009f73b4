//! Closed-loop execution: online re-planning (OR) and naive re-planning (NR).
//!
//! Both controllers plan against a planning model (possibly a perturbed
//! copy of the scene) and act in an [`ExecutionWorld`]. The first plan is
//! computed from the planning world's own initial state; every later plan
//! starts from the state observed in the execution world.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cost::{trajectory_cost, CostBreakdown, CostWeights};
use crate::geometry::Vec2;
use crate::pbsto::{optimize, PbstoParams, PlanningModel};
use crate::physics::{
    dropped_any_nontarget, is_grasped, NoiseSpec, PhysicsConfig, Simulator, VelocityNoise,
};
use crate::seed;
use crate::world::{state_deviation, Control, DeviationWeights, Plan, SceneSpec, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    Or,
    Nr,
}

impl Planner {
    pub fn name(self) -> &'static str {
        match self {
            Planner::Or => "or",
            Planner::Nr => "nr",
        }
    }
}

impl std::str::FromStr for Planner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "or" => Ok(Planner::Or),
            "nr" => Ok(Planner::Nr),
            other => Err(format!("unknown planner `{other}` (expected or|nr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReplanReason {
    NotPredictedGrasped,
    StateDeviation,
    TooFewControls,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplanDecision {
    pub replan: bool,
    pub reason: ReplanReason,
}

impl ReplanDecision {
    fn fire(reason: ReplanReason) -> Self {
        ReplanDecision {
            replan: reason != ReplanReason::None,
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Grasped,
    NonTargetDropped,
    TargetDropped,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplanEvent {
    /// Number of controls executed when the re-plan happened.
    pub step: usize,
    pub reason: ReplanReason,
    /// Planner wall time, seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub planner: Planner,
    pub executed_controls: Vec<Control>,
    pub observed_states: Vec<WorldState>,
    pub replan_events: Vec<ReplanEvent>,
    pub outcome: Outcome,
    /// Executed control time plus all planner wall time, seconds.
    pub elapsed: f64,
    /// Wall time of the first plan, seconds.
    pub initial_plan_time: f64,
    pub pbsto_calls: usize,
    pub executed_cost: CostBreakdown,
}

impl ExecutionLog {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Grasped
    }

    pub fn replans(&self) -> usize {
        self.replan_events
            .iter()
            .filter(|e| e.reason != ReplanReason::None)
            .count()
    }

    /// Elapsed time counted from the robot's first move.
    pub fn elapsed_from_first_move(&self) -> f64 {
        self.elapsed - self.initial_plan_time
    }

    pub fn mean_replan_time(&self) -> Option<f64> {
        if self.replan_events.is_empty() {
            return None;
        }
        let n = self.replan_events.len() as f64;
        Some(self.replan_events.iter().map(|e| e.wall_time).sum::<f64>() / n)
    }

    pub fn executed_time(&self) -> f64 {
        self.executed_controls.iter().map(|u| u.duration).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    pub pbsto: PbstoParams,
    pub many_iter: usize,
    pub few_iter: usize,
    pub sd_thresh: f64,
    pub deviation: DeviationWeights,
    /// Length of straight-line initial control sequences.
    pub horizon: usize,
    /// Speed of straight-line initial controls, m/s.
    pub nominal_speed: f64,
    pub step_duration: f64,
    /// Budget for planning plus execution, seconds.
    pub timeout: f64,
    /// Stop as soon as a non-target object falls. When false the run
    /// continues to grasp or timeout but is still recorded as a failure.
    pub halt_on_drop: bool,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            pbsto: PbstoParams::default(),
            many_iter: 50,
            few_iter: 1,
            sd_thresh: 0.5,
            deviation: DeviationWeights::default(),
            horizon: 6,
            nominal_speed: 0.04,
            step_duration: 1.0,
            timeout: 120.0,
            halt_on_drop: true,
        }
    }
}

/// The world the robot acts in and observes.
#[derive(Debug, Clone)]
pub struct ExecutionWorld<'a> {
    sim: Simulator<'a>,
    state: WorldState,
    noise: VelocityNoise,
}

impl<'a> ExecutionWorld<'a> {
    pub fn new(scene: &'a SceneSpec, physics: PhysicsConfig, noise: NoiseSpec, seed: u64) -> Self {
        ExecutionWorld {
            sim: Simulator::new(scene, physics),
            state: WorldState::initial(scene),
            noise: VelocityNoise::new(noise, seed),
        }
    }

    pub fn scene(&self) -> &'a SceneSpec {
        self.sim.scene
    }

    pub fn observe(&self) -> WorldState {
        self.state.clone()
    }

    pub fn execute(&mut self, u: &Control) -> &WorldState {
        self.state = self.sim.step(&self.state, u, &mut self.noise);
        &self.state
    }
}

/// Hooks into the control loops, for instrumentation and tests.
pub trait EpisodeObserver {
    /// Called before each execution with the current plan head (OR only)
    /// and the control about to be executed.
    fn on_execute(&mut self, _plan_head: Option<&Control>, _executed: &Control) {}
    /// Called with the current plan at the end of every OR loop iteration.
    fn on_iteration_end(&mut self, _plan: &Plan) {}
    /// Called after every optimizer call.
    fn on_plan(&mut self, _plan: &Plan, _reason: Option<ReplanReason>) {}
}

impl EpisodeObserver for () {}

/// `n` identical controls moving the gripper reference point straight at
/// the target at `speed` while turning the forward axis onto the target
/// evenly over the sequence.
pub fn initial_straight_controls(
    x: &WorldState,
    scene: &SceneSpec,
    n: usize,
    speed: f64,
    duration: f64,
) -> Vec<Control> {
    let r = scene.robot.reference_point(&x.robot);
    let v = x.objects[scene.target_index()].position() - r;
    let d = v.norm();
    if d == 0.0 {
        return vec![Control::zero(duration); n];
    }
    let dir: Vec2 = v * (1.0 / d);
    let f = x.robot.forward();
    let bearing = f.cross(v).atan2(f.dot(v));
    let u = Control {
        v_x: dir.x * speed,
        v_y: dir.y * speed,
        v_rot: bearing / (n as f64 * duration),
        v_grip: 0.0,
        duration,
    };
    vec![u; n]
}

/// Guards of the online re-planner, checked in order.
pub fn needs_replan(
    plan: &Plan,
    observed: &WorldState,
    sd_thresh: f64,
    min_controls: usize,
    deviation: &DeviationWeights,
    scene: &SceneSpec,
) -> ReplanDecision {
    if !is_grasped(plan.final_state(), scene) {
        return ReplanDecision::fire(ReplanReason::NotPredictedGrasped);
    }
    let dev = state_deviation(&plan.predicted_states[0], observed, deviation)
        .expect("plan and observation share a scene");
    if dev > sd_thresh {
        return ReplanDecision::fire(ReplanReason::StateDeviation);
    }
    if plan.controls.len() < min_controls {
        return ReplanDecision::fire(ReplanReason::TooFewControls);
    }
    ReplanDecision::fire(ReplanReason::None)
}

struct Episode<'a, 'b> {
    planning: &'b PlanningModel<'a>,
    params: &'b ControllerParams,
    seed: u64,
    log: ExecutionLog,
    sim_time: f64,
    plan_time: f64,
    saw_nontarget_drop: bool,
}

impl<'a, 'b> Episode<'a, 'b> {
    fn new(
        planner: Planner,
        planning: &'b PlanningModel<'a>,
        params: &'b ControllerParams,
        seed: u64,
        x0: WorldState,
    ) -> Self {
        Episode {
            planning,
            params,
            seed,
            log: ExecutionLog {
                planner,
                executed_controls: Vec::new(),
                observed_states: vec![x0],
                replan_events: Vec::new(),
                outcome: Outcome::Timeout,
                elapsed: 0.0,
                initial_plan_time: 0.0,
                pbsto_calls: 0,
                executed_cost: CostBreakdown::default(),
            },
            sim_time: 0.0,
            plan_time: 0.0,
            saw_nontarget_drop: false,
        }
    }

    fn elapsed(&self) -> f64 {
        self.sim_time + self.plan_time
    }

    /// Whether spending `extra` more seconds would pass the timeout.
    fn timed_out(&self, extra: f64) -> bool {
        self.elapsed() + extra > self.params.timeout
    }

    fn plan(
        &mut self,
        from: &WorldState,
        init: &[Control],
        iterations: usize,
        reason: Option<ReplanReason>,
        obs: &mut impl EpisodeObserver,
    ) -> Plan {
        let params = self.params.pbsto.with_iterations(iterations);
        let call_seed = seed::derive(self.seed, &[self.log.pbsto_calls as u64]);
        let start = Instant::now();
        let out = optimize(from, init, self.planning, &params, call_seed);
        let wall = start.elapsed().as_secs_f64();
        self.plan_time += wall;
        match reason {
            None => self.log.initial_plan_time = wall,
            Some(reason) => self.log.replan_events.push(ReplanEvent {
                step: self.log.executed_controls.len(),
                reason,
                wall_time: wall,
            }),
        }
        self.log.pbsto_calls += 1;
        obs.on_plan(&out.plan, reason);
        out.plan
    }

    fn straight(&self, from: &WorldState, n: usize) -> Vec<Control> {
        initial_straight_controls(
            from,
            self.planning.scene,
            n,
            self.params.nominal_speed,
            self.params.step_duration,
        )
        .into_iter()
        .map(|u| self.planning.limits.clamp(u))
        .collect()
    }

    fn execute(&mut self, world: &mut ExecutionWorld<'_>, u: &Control) -> WorldState {
        let x = world.execute(u).clone();
        self.sim_time += u.duration;
        self.log.executed_controls.push(*u);
        self.log.observed_states.push(x.clone());
        x
    }

    /// Terminal outcome of an observed state, if any.
    fn terminal(&mut self, x: &WorldState, scene: &SceneSpec) -> Option<Outcome> {
        if x.target_dropped(scene) {
            return Some(Outcome::TargetDropped);
        }
        if dropped_any_nontarget(x, scene) {
            self.saw_nontarget_drop = true;
            if self.params.halt_on_drop {
                return Some(Outcome::NonTargetDropped);
            }
        }
        if is_grasped(x, scene) {
            return Some(if self.saw_nontarget_drop {
                Outcome::NonTargetDropped
            } else {
                Outcome::Grasped
            });
        }
        None
    }

    fn finish(mut self, outcome: Outcome, scene: &SceneSpec, weights: &CostWeights) -> ExecutionLog {
        self.log.outcome = if outcome == Outcome::Timeout && self.saw_nontarget_drop {
            Outcome::NonTargetDropped
        } else {
            outcome
        };
        self.log.elapsed = self.elapsed();
        self.log.executed_cost = trajectory_cost(
            &self.log.executed_controls,
            &self.log.observed_states,
            scene,
            weights,
        )
        .expect("log keeps states aligned with controls");
        self.log
    }
}

/// Online re-planning: plan once with many iterations, then execute one
/// control at a time and warm-start a few-iteration re-plan whenever the
/// plan no longer predicts a grasp, the world deviates from the
/// prediction, or the plan runs short.
pub fn run_or(
    world: &mut ExecutionWorld<'_>,
    planning: &PlanningModel<'_>,
    params: &ControllerParams,
    seed: u64,
    obs: &mut impl EpisodeObserver,
) -> ExecutionLog {
    let exec_scene = world.scene();
    let weights = planning.weights;
    let mut ep = Episode::new(Planner::Or, planning, params, seed, world.observe());
    if let Some(outcome) = ep.terminal(&world.observe(), exec_scene) {
        return ep.finish(outcome, exec_scene, weights);
    }

    let belief = WorldState::initial(planning.scene);
    let init = ep.straight(&belief, params.horizon);
    let mut plan = ep.plan(&belief, &init, params.many_iter, None, obs);

    loop {
        let u = plan.controls[0];
        if ep.timed_out(u.duration) {
            return ep.finish(Outcome::Timeout, exec_scene, weights);
        }
        obs.on_execute(plan.controls.first(), &u);
        let x = ep.execute(world, &u);
        plan.shift();
        if let Some(outcome) = ep.terminal(&x, exec_scene) {
            return ep.finish(outcome, exec_scene, weights);
        }

        let decision = needs_replan(
            &plan,
            &x,
            params.sd_thresh,
            params.pbsto.min_steps,
            &params.deviation,
            planning.scene,
        );
        if decision.replan {
            if ep.timed_out(0.0) {
                return ep.finish(Outcome::Timeout, exec_scene, weights);
            }
            let mut controls = plan.controls.clone();
            let tail = if controls.is_empty() {
                &x
            } else {
                plan.final_state()
            };
            controls.extend(ep.straight(tail, 1));
            plan = ep.plan(&x, &controls, params.few_iter, Some(decision.reason), obs);
        }
        debug_assert_eq!(plan.controls.len() + 1, plan.predicted_states.len());
        obs.on_iteration_end(&plan);
    }
}

/// Naive re-planning: plan from scratch with many iterations, execute the
/// whole sequence open-loop, repeat until grasped.
pub fn run_nr(
    world: &mut ExecutionWorld<'_>,
    planning: &PlanningModel<'_>,
    params: &ControllerParams,
    seed: u64,
    obs: &mut impl EpisodeObserver,
) -> ExecutionLog {
    let exec_scene = world.scene();
    let weights = planning.weights;
    let mut ep = Episode::new(Planner::Nr, planning, params, seed, world.observe());
    let mut belief = WorldState::initial(planning.scene);
    let mut first = true;
    loop {
        if let Some(outcome) = ep.terminal(&world.observe(), exec_scene) {
            return ep.finish(outcome, exec_scene, weights);
        }
        if ep.timed_out(0.0) {
            return ep.finish(Outcome::Timeout, exec_scene, weights);
        }
        let init = ep.straight(&belief, params.horizon);
        // An exhausted open-loop sequence is the only re-plan trigger.
        let reason = (!first).then_some(ReplanReason::TooFewControls);
        let plan = ep.plan(&belief, &init, params.many_iter, reason, obs);
        first = false;
        for u in &plan.controls {
            if ep.timed_out(u.duration) {
                return ep.finish(Outcome::Timeout, exec_scene, weights);
            }
            obs.on_execute(None, u);
            let x = ep.execute(world, u);
            if let Some(outcome) = ep.terminal(&x, exec_scene) {
                return ep.finish(outcome, exec_scene, weights);
            }
        }
        belief = world.observe();
    }
}
