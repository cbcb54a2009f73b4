//! Acceptance gate. Each test prints one PASS/FAIL line for its criterion
//! and then asserts it.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use clutter_mpc::controllers::{EpisodeObserver, ExecutionLog, Planner, ReplanReason};
use clutter_mpc::cost::{
    acceleration_cost, disturbance_cost, edge_cost, goal_cost, prefix_cost, trajectory_cost,
    CostWeights,
};
use clutter_mpc::harness::{run_episode, run_experiment, ExperimentConfig, ExperimentResult};
use clutter_mpc::pbsto::{optimize, sample_noisy_controls, PbstoParams, PlanningModel};
use clutter_mpc::physics::{max_penetration, NoiseSpec, PhysicsConfig, Simulator, VelocityNoise};
use clutter_mpc::seed;
use clutter_mpc::uncertainty::{
    generate_scene, noise_spec, perturb_scene, PerturbationVariances, SceneGenParams,
    UncertaintyLevel,
};
use clutter_mpc::world::{Control, ControlLimits, ObjectShape, Plan, Pose2, SceneSpec, WorldState};
use common::{block, circle, lone_target, report, robot, scene};
use rand::Rng;

fn model<'a>(scene: &'a SceneSpec, weights: &'a CostWeights) -> PlanningModel<'a> {
    PlanningModel {
        scene,
        physics: PhysicsConfig::default(),
        weights,
        limits: ControlLimits::default(),
        noise: NoiseSpec::default(),
    }
}

fn straight_toward_target(scene: &SceneSpec, n: usize) -> Vec<Control> {
    let x0 = WorldState::initial(scene);
    clutter_mpc::controllers::initial_straight_controls(&x0, scene, n, 0.04, 1.0)
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn criterion_01_pbsto_monotonicity() {
    let weights = CostWeights::default();
    let mut violations = 0;
    let mut runs = 0;
    let start = std::time::Instant::now();
    for r in 0..200u64 {
        let mut rng = seed::rng(seed::derive(101, &[r]));
        let gen = SceneGenParams {
            object_count: rng.random_range(1..=6),
            ..Default::default()
        };
        let Ok(s) = generate_scene(&gen, &mut rng) else {
            continue;
        };
        let params = PbstoParams {
            max_iterations: rng.random_range(1..=12),
            variance: rng.random_range(0.001..0.02),
            ..Default::default()
        };
        let m = model(&s, &weights);
        let init = straight_toward_target(&s, 6);
        let out = optimize(&WorldState::initial(&s), &init, &m, &params, r);
        runs += 1;
        let h = &out.cost_history;
        if h.windows(2).any(|w| w[1] > w[0]) {
            violations += 1;
        }
        if !out.truncated && !rel_close(*h.last().unwrap(), out.plan.total_cost) {
            violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations == 0 && runs == 200 && secs < 120.0;
    report(
        1,
        "PBSTO candidate cost non-increasing",
        pass,
        &format!("{runs} runs, {violations} violations, {secs:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_truncation_contract() {
    let weights = CostWeights::default();
    let mut truncated = 0;
    let mut bad = Vec::new();
    for r in 0..60u64 {
        let mut rng = seed::rng(seed::derive(202, &[r]));
        let distance = rng.random_range(0.08..0.2);
        let s = lone_target(distance, 0.02);
        // Reachable threshold: the palm face keeps the centroid one radius
        // away, so the floor is w_g * r^2 = 4.
        let params = PbstoParams {
            cost_threshold: rng.random_range(8.0..40.0),
            min_steps: rng.random_range(1..=3),
            max_iterations: 30,
            ..Default::default()
        };
        let m = model(&s, &weights);
        let init = vec![Control::zero(1.0); 8];
        let out = optimize(&WorldState::initial(&s), &init, &m, &params, r);
        if !out.truncated {
            continue;
        }
        truncated += 1;
        let p = &out.plan;
        let prefix = prefix_cost(&p.controls, &p.predicted_states, p.len(), &s, &weights)
            .unwrap()
            .total;
        if p.len() < params.min_steps || prefix > params.cost_threshold {
            bad.push((r, p.len(), prefix));
        }
    }
    let pass = bad.is_empty() && truncated >= 20;
    report(
        2,
        "truncated plans respect n_min and C_thresh",
        pass,
        &format!("{truncated} truncated of 60, violations {bad:?}"),
    );
    assert!(pass);
}

fn random_scene(rng: &mut impl Rng, objects: usize) -> SceneSpec {
    let gen = SceneGenParams {
        object_count: objects,
        ..Default::default()
    };
    generate_scene(&gen, rng).expect("sparse scenes generate")
}

fn random_control(rng: &mut impl Rng, limits: &ControlLimits) -> Control {
    limits.clamp(Control {
        v_x: rng.random_range(-0.1..0.1),
        v_y: rng.random_range(-0.1..0.1),
        v_rot: rng.random_range(-0.5..0.5),
        v_grip: 0.0,
        duration: 1.0,
    })
}

#[test]
fn criterion_03_simulator_invariants() {
    let physics = PhysicsConfig::default();
    let limits = ControlLimits::default();
    let mut notes = Vec::new();

    // Rest stability.
    let mut rest_ok = true;
    for r in 0..20u64 {
        let s = random_scene(&mut seed::rng(seed::derive(303, &[r])), 6);
        let sim = Simulator::new(&s, physics);
        let x0 = WorldState::initial(&s);
        let mut x = x0.clone();
        for _ in 0..5 {
            x = sim.step(&x, &Control::zero(1.0), &mut VelocityNoise::none());
        }
        rest_ok &= x == x0;
    }
    notes.push(format!("rest {rest_ok}"));

    // Residual penetration over 10^4 randomized pushes, with clutter denser
    // than the benchmark's.
    let mut worst: f64 = 0.0;
    let mut pushes = 0;
    for episode in 0..100u64 {
        let mut rng = seed::rng(seed::derive(304, &[episode]));
        let s = random_scene(&mut rng, 10);
        let sim = Simulator::new(&s, physics);
        let mut x = WorldState::initial(&s);
        // Drive toward the target so pushes actually happen.
        let toward = straight_toward_target(&s, 1)[0];
        for _ in 0..100 {
            let u = if rng.random_bool(0.5) {
                toward
            } else {
                random_control(&mut rng, &limits)
            };
            x = sim.step(&x, &u, &mut VelocityNoise::none());
            worst = worst.max(max_penetration(&x, &s));
            pushes += 1;
        }
    }
    let pen_ok = worst <= 1e-3;
    notes.push(format!("{pushes} pushes, worst penetration {worst:.2e} m"));

    // Seed determinism.
    let s = random_scene(&mut seed::rng(305), 6);
    let sim = Simulator::new(&s, physics);
    let controls = straight_toward_target(&s, 8);
    let run = |seed| {
        sim.rollout(
            &WorldState::initial(&s),
            &controls,
            &mut VelocityNoise::new(NoiseSpec::uniform(0.009), seed),
        )
    };
    let det_ok = run(9) == run(9) && run(9) != run(10);
    notes.push(format!("determinism {det_ok}"));

    // Friction monotonicity and head-on colinearity.
    let push = Control {
        v_x: 0.04,
        v_y: 0.0,
        v_rot: 0.0,
        v_grip: 0.0,
        duration: 1.0,
    };
    let mut moved = Vec::new();
    let mut worst_angle: f64 = 0.0;
    for friction in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.2, 2.0] {
        for heading in [0.0, 0.7, -2.1] {
            let (c, sn) = (f64::cos(heading), f64::sin(heading));
            // Object dead ahead of the palm face, under the palm.
            let reach = 0.01 + 0.015 + 0.005;
            let r = robot(-0.1 * c, -0.1 * sn, heading);
            let obj = circle(-0.1 * c + reach * c, -0.1 * sn + reach * sn, 0.015, friction, true);
            let mut narrow = r;
            narrow.palm_half_width = 0.04;
            let s = scene(narrow, vec![obj]);
            let u = Control {
                v_x: 0.04 * c,
                v_y: 0.04 * sn,
                ..push
            };
            let x0 = WorldState::initial(&s);
            let x1 = Simulator::new(&s, physics).step(&x0, &u, &mut VelocityNoise::none());
            let d = x1.objects[0].position() - x0.objects[0].position();
            if heading == 0.0 {
                moved.push(d.norm());
            }
            if d.norm() > 0.0 {
                let angle = d.cross(clutter_mpc::geometry::Vec2::new(c, sn)).atan2(d.dot(clutter_mpc::geometry::Vec2::new(c, sn)));
                worst_angle = worst_angle.max(angle.abs());
            }
        }
    }
    let mono_ok = moved.windows(2).all(|w| w[1] <= w[0]) && moved[0] > *moved.last().unwrap();
    let colinear_ok = worst_angle <= 1e-6;
    notes.push(format!("friction monotone {mono_ok}, worst push angle {worst_angle:.1e} rad"));

    let pass = rest_ok && pen_ok && det_ok && mono_ok && colinear_ok;
    report(3, "simulator invariants", pass, &notes.join("; "));
    assert!(pass);
}

#[test]
fn criterion_04_cost_identities() {
    let w = CostWeights::default();
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if !rel_close(got, want) && (got - want).abs() > 1e-15 {
            failures.push(format!("{name}: {got} != {want}"));
        }
    };

    // Goal examples. Reference point of robot(-0.2, 0, 0) is (-0.19, 0).
    let goal_at = |x: f64, y: f64, rot: f64| {
        let s = scene(robot(-0.2, 0.0, rot), vec![circle(x, y, 0.01, 0.4, true)]);
        goal_cost(&WorldState::initial(&s), &s, &w)
    };
    check("goal at reference", goal_at(-0.19, 0.0, 0.0), 0.0);
    let s = scene(robot(0.0, 0.0, 0.0), vec![circle(0.0, 0.0, 0.005, 0.4, true)]);
    let mut x = WorldState::initial(&s);
    x.objects[0] = Pose2::new(0.01 + 0.1 * 0.2f64.cos(), 0.1 * 0.2f64.sin(), 0.0);
    check("goal d=0.1 phi=0.2", goal_cost(&x, &s, &w), 0.05);
    x.objects[0] = Pose2::new(0.01 - 0.1, 0.0, 0.0);
    check("goal behind", goal_cost(&x, &s, &w), 0.01 + PI * PI);

    // Disturbance and edge examples.
    let s = scene(
        robot(0.0, -0.28, PI / 2.0),
        vec![circle(0.0, 0.0, 0.02, 0.4, true), circle(0.1, 0.1, 0.02, 0.4, false)],
    );
    let x0 = WorldState::initial(&s);
    check("disturbance none", disturbance_cost(&x0, &x0, &s, &w), 0.0);
    let mut x1 = x0.clone();
    x1.objects[1].x += 0.1;
    check("disturbance 0.1 m", disturbance_cost(&x0, &x1, &s, &w), 0.01);
    let mut x2 = x0.clone();
    x2.objects[0].x += 0.1;
    check("disturbance target only", disturbance_cost(&x0, &x2, &s, &w), 0.0);
    check("edge safe", edge_cost(&x0, &x0, &s, &w), 0.0);
    let mut e0 = x0.clone();
    e0.objects[1] = Pose2::new(0.27, 0.0, 0.0);
    check("edge unmoved", edge_cost(&e0, &e0, &s, &w), 1.0);
    let mut e1 = e0.clone();
    e1.objects[1].x += 0.001;
    check("edge 1 mm", edge_cost(&e0, &e1, &s, &w), 1f64.exp());

    // Acceleration examples.
    let c = |vx: f64, vy: f64| Control {
        v_x: vx,
        v_y: vy,
        v_rot: 0.0,
        v_grip: 0.0,
        duration: 1.0,
    };
    check("accel same", acceleration_cost(&c(0.03, 0.01), &c(0.03, 0.01)), 0.0);
    check("accel first", acceleration_cost(&Control::zero(1.0), &c(0.04, 0.0)), 0.0016);
    check("accel delta", acceleration_cost(&c(0.02, 0.01), &c(0.03, 0.02)), 0.0002);

    // Trajectory examples.
    let far = scene(robot(0.0, -0.28, PI / 2.0), vec![circle(0.1, 0.1, 0.02, 0.4, true)]);
    let xf = WorldState::initial(&far);
    let g = w.w_g * goal_cost(&xf, &far, &w);
    check("trajectory n=0", trajectory_cost(&[], &[xf.clone()], &far, &w).unwrap().total, g);
    let zeros = vec![Control::zero(1.0); 3];
    check(
        "trajectory stationary",
        trajectory_cost(&zeros, &vec![xf.clone(); 4], &far, &w).unwrap().total,
        g,
    );
    // One step by hand: control (0.04, 0), object 1 moves 0.02 m while
    // outside the safe zone.
    let mut a = e0.clone();
    a.robot.y = -0.2;
    let mut b = a.clone();
    b.robot.x += 0.04;
    b.objects[1].x += 0.002;
    let u = c(0.04, 0.0);
    let (d, phi) = {
        let rp = (b.robot.x, b.robot.y + 0.01);
        let (dx, dy) = (b.objects[0].x - rp.0, b.objects[0].y - rp.1);
        let phi = (dy.atan2(dx) - PI / 2.0).abs();
        ((dx * dx + dy * dy).sqrt(), phi)
    };
    let hand = w.w_g * (d * d + w.w_phi * phi * phi)
        + w.w_a * 0.0016
        + w.w_d * 0.002f64.powi(2)
        + w.w_e * 2f64.exp();
    check(
        "trajectory one step",
        trajectory_cost(&[u], &[a, b], &s, &w).unwrap().total,
        hand,
    );

    // Prefix consistency on random trajectories.
    let physics = PhysicsConfig::default();
    let limits = ControlLimits::default();
    let mut prefix_bad = 0;
    for r in 0..50u64 {
        let mut rng = seed::rng(seed::derive(404, &[r]));
        let s = random_scene(&mut rng, 6);
        let n = rng.random_range(1..10);
        let controls: Vec<Control> = (0..n).map(|_| random_control(&mut rng, &limits)).collect();
        let states = Simulator::new(&s, physics).rollout(
            &WorldState::initial(&s),
            &controls,
            &mut VelocityNoise::none(),
        );
        let full = trajectory_cost(&controls, &states, &s, &w).unwrap().total;
        let at_n = prefix_cost(&controls, &states, n, &s, &w).unwrap().total;
        if !rel_close(full, at_n) {
            prefix_bad += 1;
        }
        for t in 0..=n {
            let p = prefix_cost(&controls, &states, t, &s, &w).unwrap().total;
            let direct = trajectory_cost(&controls[..t], &states[..=t], &s, &w).unwrap().total;
            if !rel_close(p, direct) {
                prefix_bad += 1;
            }
        }
    }
    if prefix_bad > 0 {
        failures.push(format!("{prefix_bad} prefix mismatches"));
    }

    let pass = failures.is_empty();
    report(
        4,
        "cost identities",
        pass,
        &if pass {
            "all examples and 50 random prefixes".to_string()
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn criterion_05_distribution_checks() {
    let mut notes = Vec::new();
    let mut pass = true;

    // Control sampling, away from the speed limits.
    let open = ControlLimits {
        max_linear: f64::INFINITY,
        max_angular: f64::INFINITY,
        max_grip: f64::INFINITY,
    };
    let base = vec![Control::zero(1.0); 10_000];
    let noisy = sample_noisy_controls(&base, 0.008, &open, &mut seed::rng(505));
    for k in 0..4 {
        let xs: Vec<f64> = noisy.iter().map(|u| u.velocities()[k]).collect();
        let v = sample_variance(&xs);
        pass &= (v / 0.008 - 1.0).abs() <= 0.1;
        notes.push(format!("nu[{k}]={v:.5}"));
    }

    // Planning-world perturbation on objects large enough that no clamp
    // engages.
    let n = 5_000;
    let mut objects = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut c = circle(0.0, 0.0, 2.0, 2.0, i == 0);
        c.mass = 10.0;
        c.height = Some(2.0);
        objects.push(c);
        let mut b = block(0.0, 0.0, 0.0, (2.0, 2.0), 2.0);
        b.mass = 10.0;
        b.height = Some(2.0);
        objects.push(b);
    }
    let big = scene(robot(0.0, -0.28, PI / 2.0), objects);
    let var = PerturbationVariances::default();
    for level in [UncertaintyLevel::Low, UncertaintyLevel::Medium, UncertaintyLevel::High] {
        let m = level.multiplier();
        let p = perturb_scene(&big, level, &var, &mut seed::rng(seed::derive(506, &[level.index()])));
        let pairs = || big.objects.iter().zip(&p.objects);
        let mut channels: Vec<(&str, Vec<f64>, f64)> = vec![
            ("x", pairs().map(|(a, b)| b.pose.x - a.pose.x).collect(), var.translation),
            ("y", pairs().map(|(a, b)| b.pose.y - a.pose.y).collect(), var.translation),
            ("theta", pairs().map(|(a, b)| b.pose.theta - a.pose.theta).collect(), var.rotation),
            ("mass", pairs().map(|(a, b)| b.mass - a.mass).collect(), var.mass),
            ("friction", pairs().map(|(a, b)| b.friction - a.friction).collect(), var.friction),
            (
                "height",
                pairs().map(|(a, b)| b.height.unwrap() - a.height.unwrap()).collect(),
                var.dimension,
            ),
        ];
        let mut radius = Vec::new();
        let mut extent = Vec::new();
        for (a, b) in pairs() {
            match (a.shape, b.shape) {
                (ObjectShape::Circle { radius: r0 }, ObjectShape::Circle { radius: r1 }) => {
                    radius.push(r1 - r0)
                }
                (
                    ObjectShape::Box { half_x: x0, half_y: y0 },
                    ObjectShape::Box { half_x: x1, half_y: y1 },
                ) => {
                    extent.push(2.0 * (x1 - x0));
                    extent.push(2.0 * (y1 - y0));
                }
                _ => unreachable!("shape kinds are preserved"),
            }
        }
        channels.push(("radius", radius, var.dimension));
        channels.push(("extent", extent, var.dimension));
        for (name, xs, v) in &channels {
            let got = sample_variance(xs);
            let ok = (got / (v * m) - 1.0).abs() <= 0.1;
            pass &= ok;
            if !ok {
                notes.push(format!("{level} {name}: {got:.5} vs {:.5}", v * m));
            }
        }
    }
    notes.push("perturbation channels checked at 3 levels".into());

    // Execution noise.
    let betas = UncertaintyLevel::ALL.map(|l| noise_spec(l));
    let exact = betas
        .iter()
        .zip([0.0, 0.003, 0.006, 0.009])
        .all(|(n, b)| n.linear == b && n.angular == b);
    pass &= exact;
    notes.push(format!("beta exact {exact}"));

    report(5, "distribution checks", pass, &notes.join(", "));
    assert!(pass);
}

#[derive(Default)]
struct Bookkeeping {
    misaligned: usize,
    iterations: usize,
    foreign_controls: usize,
    plans: usize,
}

impl EpisodeObserver for Bookkeeping {
    fn on_execute(&mut self, plan_head: Option<&Control>, executed: &Control) {
        if plan_head != Some(executed) {
            self.foreign_controls += 1;
        }
    }
    fn on_iteration_end(&mut self, plan: &Plan) {
        self.iterations += 1;
        if plan.controls.len() + 1 != plan.predicted_states.len() {
            self.misaligned += 1;
        }
    }
    fn on_plan(&mut self, _plan: &Plan, _reason: Option<ReplanReason>) {
        self.plans += 1;
    }
}

#[test]
fn criterion_06_or_bookkeeping() {
    let mut config = ExperimentConfig::default();
    config.controller.timeout = 40.0;
    let mut bad = Vec::new();
    let mut total_iterations = 0;
    for r in 0..50usize {
        let level = UncertaintyLevel::ALL[r % 4];
        let mut cfg = config.clone();
        cfg.seed = 600 + r as u64;
        cfg.scene_gen.object_count = 3 + r % 4;
        let exec = cfg.execution_scene(0).unwrap();
        let planning = cfg.planning_scene(&exec, 0, level);
        let mut obs = Bookkeeping::default();
        let log: ExecutionLog = run_episode(
            &cfg,
            &exec,
            &planning,
            level,
            Planner::Or,
            cfg.run_seed(0, level, Planner::Or),
            &mut obs,
        );
        total_iterations += obs.iterations;
        let events_ok = log.replan_events.len() + 1 == log.pbsto_calls && obs.plans == log.pbsto_calls;
        let states_ok = log.observed_states.len() == log.executed_controls.len() + 1;
        if obs.misaligned > 0 || obs.foreign_controls > 0 || !events_ok || !states_ok {
            bad.push(r);
        }
    }
    let pass = bad.is_empty();
    report(
        6,
        "OR plan/state alignment and re-plan accounting",
        pass,
        &format!("50 episodes, {total_iterations} loop iterations, failing episodes {bad:?}"),
    );
    assert!(pass);
}

// Trend criteria share one desk-scale sweep: 20 scenes of 6 objects, four
// levels, both planners, 120 s timeout.
fn sweep() -> &'static ExperimentResult {
    static SWEEP: OnceLock<ExperimentResult> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let config = ExperimentConfig::default();
        assert_eq!(config.scenes, 20);
        assert_eq!(config.scene_gen.object_count, 6);
        assert_eq!(config.controller.timeout, 120.0);
        run_experiment(&config).expect("desk-scale sweep runs")
    })
}

fn cell(level: UncertaintyLevel, planner: Planner) -> clutter_mpc::harness::CellSummary {
    sweep().summary[level.name()][planner.name()]
}

#[test]
fn criterion_07_perfect_model_success() {
    let or = cell(UncertaintyLevel::None, Planner::Or).success_rate;
    let nr = cell(UncertaintyLevel::None, Planner::Nr).success_rate;
    let pass = or >= 0.9 && nr >= 0.9;
    report(
        7,
        "perfect-model success >= 90%",
        pass,
        &format!("OR {:.0}%, NR {:.0}%", 100.0 * or, 100.0 * nr),
    );
    assert!(pass);
}

#[test]
fn criterion_08_robustness_gap() {
    let or = cell(UncertaintyLevel::High, Planner::Or).success_rate;
    let nr = cell(UncertaintyLevel::High, Planner::Nr).success_rate;
    let pass = or - nr >= 0.10 - 1e-12;
    report(
        8,
        "high-uncertainty OR success exceeds NR by >= 10 points",
        pass,
        &format!("OR {:.0}%, NR {:.0}%", 100.0 * or, 100.0 * nr),
    );
    assert!(pass);
}

#[test]
fn criterion_09_replan_growth() {
    let mut pass = true;
    let mut notes = Vec::new();
    for planner in [Planner::Or, Planner::Nr] {
        let cells: Vec<_> = UncertaintyLevel::ALL.iter().map(|&l| cell(l, planner)).collect();
        // 95% half-width back to one standard error.
        let se = |c: &clutter_mpc::harness::CellSummary| c.replans_ci95 / 1.96;
        let mut violations = 0;
        let mut beyond_se = false;
        for w in cells.windows(2) {
            let drop = w[0].replans_mean - w[1].replans_mean;
            if drop > 0.0 {
                violations += 1;
                beyond_se |= drop > se(&w[0]).hypot(se(&w[1]));
            }
        }
        let ok = violations == 0 || (violations == 1 && !beyond_se);
        pass &= ok;
        let means: Vec<String> = cells.iter().map(|c| format!("{:.2}", c.replans_mean)).collect();
        notes.push(format!("{} [{}]", planner.name(), means.join(", ")));
    }
    report(9, "re-plan count grows with uncertainty", pass, &notes.join("; "));
    assert!(pass);
}

#[test]
fn criterion_10_latency_ratio() {
    let logs: Vec<&ExecutionLog> = sweep()
        .logs
        .iter()
        .filter(|l| l.planner == Planner::Or)
        .collect();
    let init: Vec<f64> = logs.iter().map(|l| l.initial_plan_time).collect();
    let quick: Vec<f64> = logs
        .iter()
        .flat_map(|l| l.replan_events.iter().map(|e| e.wall_time))
        .collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let (mi, mq) = (mean(&init), mean(&quick));
    let pass = !quick.is_empty() && mq <= mi / 10.0 && mq <= 0.5;
    report(
        10,
        "quick re-plan at most 1/10 of initial plan and <= 0.5 s",
        pass,
        &format!(
            "initial {:.4} s, quick {:.5} s over {} re-plans, ratio {:.1}",
            mi,
            mq,
            quick.len(),
            mi / mq
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_executed_cost_ordering() {
    let or = cell(UncertaintyLevel::High, Planner::Or).cost_mean;
    let nr = cell(UncertaintyLevel::High, Planner::Nr).cost_mean;
    let pass = matches!((or, nr), (Some(o), Some(n)) if o <= n);
    report(
        11,
        "high-uncertainty OR executed cost <= NR",
        pass,
        &format!("OR {or:?}, NR {nr:?}"),
    );
    assert!(pass);
}
