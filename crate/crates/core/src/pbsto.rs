//! Physics-based stochastic trajectory optimization.
//!
//! Starting from a candidate control sequence, each iteration perturbs it
//! `K` times with independent Gaussian noise, rolls every perturbation out
//! through the simulator and keeps the cheapest one if it strictly beats
//! the candidate. A rollout whose running cost drops to the success
//! threshold after at least `n_min` steps is returned immediately,
//! truncated at that step.
//!
//! The `K` rollouts of an iteration run in parallel. Rollout `k` of
//! iteration `i` draws from its own stream `derive(seed, [i, k])` and
//! results are gathered in index order, so the output does not depend on
//! scheduling.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{evaluate, CostWeights, RunningCost};
use crate::physics::{NoiseSpec, PhysicsConfig, Simulator, VelocityNoise};
use crate::world::{Control, ControlLimits, Plan, SceneSpec, WorldState};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PbstoParams {
    /// Noisy rollouts per iteration (K).
    pub rollouts: usize,
    /// Per-component control sampling variance (ν), (m/s)².
    pub variance: f64,
    /// Total cost at or below which a trajectory counts as a success.
    pub cost_threshold: f64,
    /// Minimum step index at which a rollout may be truncated.
    pub min_steps: usize,
    pub max_iterations: usize,
}

impl Default for PbstoParams {
    fn default() -> Self {
        PbstoParams {
            rollouts: 8,
            variance: 0.008,
            cost_threshold: 2.0,
            min_steps: 2,
            max_iterations: 50,
        }
    }
}

impl PbstoParams {
    pub fn with_iterations(self, max_iterations: usize) -> Self {
        PbstoParams {
            max_iterations,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rollouts == 0 {
            return Err(Error::Config("rollouts (K) must be at least 1".into()));
        }
        if !(self.variance >= 0.0) {
            return Err(Error::Config("sampling variance must be >= 0".into()));
        }
        if self.min_steps == 0 {
            return Err(Error::Config("min_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything the optimizer needs about the planning world.
#[derive(Debug, Clone, Copy)]
pub struct PlanningModel<'a> {
    pub scene: &'a SceneSpec,
    pub physics: PhysicsConfig,
    pub weights: &'a CostWeights,
    pub limits: ControlLimits,
    /// Dynamics noise inside the planner's own rollouts (normally zero).
    pub noise: NoiseSpec,
}

impl<'a> PlanningModel<'a> {
    pub fn simulator(&self) -> Simulator<'a> {
        Simulator::new(self.scene, self.physics)
    }
}

/// Optimizer output together with its bookkeeping.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub plan: Plan,
    /// Sampling iterations actually run.
    pub iterations: usize,
    /// Rollouts performed, including the initial candidate's.
    pub rollouts: usize,
    /// Whether the plan is a truncated early-success rollout.
    pub truncated: bool,
    /// Candidate cost before the first iteration and after each one.
    pub cost_history: Vec<f64>,
}

/// Adds `N(0, ν)` to every velocity component and clamps to the limits.
pub fn sample_noisy_controls<R: Rng + ?Sized>(
    candidate: &[Control],
    variance: f64,
    limits: &ControlLimits,
    rng: &mut R,
) -> Vec<Control> {
    if variance == 0.0 {
        return candidate.to_vec();
    }
    let sd = variance.sqrt();
    candidate
        .iter()
        .map(|u| {
            let mut v = u.velocities();
            for c in &mut v {
                let z: f64 = rng.sample(StandardNormal);
                *c += sd * z;
            }
            limits.clamp(u.with_velocities(v))
        })
        .collect()
}

/// Index of the smallest cost; ties go to the lowest index.
pub fn select_best(costs: &[f64]) -> Result<usize> {
    if costs.is_empty() {
        return Err(Error::EmptyCosts);
    }
    let mut best = 0;
    for (k, &c) in costs.iter().enumerate().skip(1) {
        if c < costs[best] {
            best = k;
        }
    }
    Ok(best)
}

struct Rollout {
    controls: Vec<Control>,
    states: Vec<WorldState>,
    cost: f64,
    /// Step `t` at which the prefix cost reached the threshold.
    truncated_at: Option<usize>,
}

fn roll(
    model: &PlanningModel<'_>,
    x0: &WorldState,
    controls: Vec<Control>,
    noise_seed: u64,
    truncate: Option<(f64, usize)>,
) -> Rollout {
    let sim = model.simulator();
    let mut noise = VelocityNoise::new(model.noise, noise_seed);
    let mut acc = RunningCost::new(model.scene, model.weights);
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(x0.clone());
    let mut truncated_at = None;
    let mut cost = f64::NAN;
    for (t, u) in controls.iter().enumerate() {
        let next = sim.step(&states[t], u, &mut noise);
        acc.push(u, &states[t], &next);
        states.push(next);
        if let Some((threshold, n_min)) = truncate {
            if t >= n_min {
                let c = acc.with_terminal(&states[t + 1]).total;
                if c <= threshold {
                    truncated_at = Some(t);
                    cost = c;
                    break;
                }
            }
        }
    }
    if truncated_at.is_none() {
        cost = acc.with_terminal(states.last().expect("nonempty")).total;
    }
    let mut controls = controls;
    controls.truncate(states.len() - 1);
    Rollout {
        controls,
        states,
        cost,
        truncated_at,
    }
}

fn into_plan(model: &PlanningModel<'_>, r: Rollout) -> Plan {
    let (total, steps) =
        evaluate(&r.controls, &r.states, model.scene, model.weights).expect("aligned rollout");
    Plan {
        controls: r.controls,
        predicted_states: r.states,
        total_cost: total.total,
        per_step_costs: steps,
    }
}

/// Optimizes `init` from `x0`. `init` must be nonempty.
pub fn optimize(
    x0: &WorldState,
    init: &[Control],
    model: &PlanningModel<'_>,
    params: &PbstoParams,
    seed: u64,
) -> Optimized {
    assert!(!init.is_empty(), "optimize needs an initial control sequence");
    let mut candidate = roll(model, x0, init.to_vec(), seed::derive(seed, &[u64::MAX]), None);
    let mut history = vec![candidate.cost];
    let mut rollouts = 1;
    let mut iterations = 0;

    while iterations < params.max_iterations && candidate.cost > params.cost_threshold {
        let it = iterations as u64;
        let samples: Vec<Rollout> = (0..params.rollouts)
            .into_par_iter()
            .map(|k| {
                let mut rng = seed::rng(seed::derive(seed, &[it, k as u64]));
                let controls = sample_noisy_controls(
                    &candidate.controls,
                    params.variance,
                    &model.limits,
                    &mut rng,
                );
                roll(
                    model,
                    x0,
                    controls,
                    rng.random(),
                    Some((params.cost_threshold, params.min_steps)),
                )
            })
            .collect();
        iterations += 1;
        rollouts += samples.len();

        if let Some(k) = samples.iter().position(|r| r.truncated_at.is_some()) {
            let winner = samples.into_iter().nth(k).expect("index in range");
            history.push(winner.cost);
            return Optimized {
                plan: into_plan(model, winner),
                iterations,
                rollouts,
                truncated: true,
                cost_history: history,
            };
        }

        let costs: Vec<f64> = samples.iter().map(|r| r.cost).collect();
        let best = select_best(&costs).expect("K >= 1");
        if costs[best] < candidate.cost {
            candidate = samples.into_iter().nth(best).expect("index in range");
        }
        history.push(candidate.cost);
    }

    Optimized {
        plan: into_plan(model, candidate),
        iterations,
        rollouts,
        truncated: false,
        cost_history: history,
    }
}
