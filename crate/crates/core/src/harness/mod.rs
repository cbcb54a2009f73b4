//! Experiment orchestration: scenes × uncertainty levels × planners, the
//! metric table, its summary, and trace rendering.

mod render;
mod report;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    run_nr, run_or, ControllerParams, EpisodeObserver, ExecutionLog, ExecutionWorld, Planner,
};
use crate::cost::CostWeights;
use crate::pbsto::PlanningModel;
use crate::physics::{NoiseSpec, PhysicsConfig};
use crate::uncertainty::{
    generate_scene, noise_spec, perturb_scene, PerturbationVariances, SceneGenParams,
    UncertaintyLevel,
};
use crate::world::{ControlLimits, SceneSpec};
use crate::{seed, Error, Result};

pub use render::{frame_count, render_svg, render_trace};
pub use report::{read_csv, read_summary, write_csv, write_summary};

/// Environment variable capping episode and rollout parallelism.
pub const THREADS_ENV: &str = "CLUTTER_MPC_THREADS";

// Stream tags for seed derivation.
const SCENE_STREAM: u64 = 0;
const PERTURB_STREAM: u64 = 1;
const RUN_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenes: usize,
    pub levels: Vec<UncertaintyLevel>,
    pub planners: Vec<Planner>,
    pub seed: u64,
    pub output: PathBuf,
    /// Generation attempts per scene before it is skipped.
    pub scene_retries: usize,
    /// Worker threads; `None` uses the environment or the core count.
    pub threads: Option<usize>,
    pub scene_gen: SceneGenParams,
    pub perturbation: PerturbationVariances,
    /// Whether execution noise also perturbs the robot.
    pub robot_noise: bool,
    /// Engine time step at which execution noise is drawn, s.
    pub noise_timestep: f64,
    pub controller: ControllerParams,
    pub weights: CostWeights,
    pub physics: PhysicsConfig,
    pub limits: ControlLimits,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenes: 20,
            levels: UncertaintyLevel::ALL.to_vec(),
            planners: vec![Planner::Or, Planner::Nr],
            seed: 0,
            output: PathBuf::from("results"),
            scene_retries: 5,
            threads: None,
            scene_gen: SceneGenParams::default(),
            perturbation: PerturbationVariances::default(),
            robot_noise: true,
            noise_timestep: NoiseSpec::default().timestep,
            controller: ControllerParams::default(),
            weights: CostWeights::default(),
            physics: PhysicsConfig::default(),
            limits: ControlLimits::default(),
        }
    }
}

impl ExperimentConfig {
    /// 100 scenes of 15 objects with a 15 minute timeout.
    pub fn full_scale() -> Self {
        let mut c = ExperimentConfig {
            scenes: 100,
            ..Default::default()
        };
        c.scene_gen.object_count = 15;
        c.controller.timeout = 900.0;
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "experiment config".into(),
            source,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenes == 0 {
            return Err(Error::Config("scenes must be at least 1".into()));
        }
        if !(self.controller.timeout > 0.0) {
            return Err(Error::Config("timeout must be positive".into()));
        }
        if self.levels.is_empty() || self.planners.is_empty() {
            return Err(Error::Config("need at least one level and one planner".into()));
        }
        if self.scene_retries == 0 {
            return Err(Error::Config("scene_retries must be at least 1".into()));
        }
        if !(self.noise_timestep > 0.0) {
            return Err(Error::Config("noise_timestep must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.controller.pbsto.validate()?;
        self.scene_gen.validate()
    }

    /// Worker count: config, then the environment, then the core count.
    pub fn worker_threads(&self) -> usize {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok().filter(|&n| n > 0))
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn execution_noise(&self, level: UncertaintyLevel) -> NoiseSpec {
        NoiseSpec {
            robot: self.robot_noise,
            timestep: self.noise_timestep,
            ..noise_spec(level)
        }
    }

    /// Execution world of scene `index`, retrying generation with fresh
    /// streams.
    pub fn execution_scene(&self, index: usize) -> Result<SceneSpec> {
        let mut last = None;
        for attempt in 0..self.scene_retries {
            let s = seed::derive(self.seed, &[SCENE_STREAM, index as u64, attempt as u64]);
            match generate_scene(&self.scene_gen, &mut seed::rng(s)) {
                Ok(scene) => return Ok(scene),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Planning world of scene `index` at `level`. The random stream is
    /// shared across levels, so higher levels perturb strictly further.
    pub fn planning_scene(&self, exec: &SceneSpec, index: usize, level: UncertaintyLevel) -> SceneSpec {
        let s = seed::derive(self.seed, &[PERTURB_STREAM, index as u64]);
        perturb_scene(exec, level, &self.perturbation, &mut seed::rng(s))
    }

    pub fn run_seed(&self, index: usize, level: UncertaintyLevel, planner: Planner) -> u64 {
        seed::derive(
            self.seed,
            &[RUN_STREAM, index as u64, level.index(), planner as u64],
        )
    }
}

/// One episode in its execution world against its planning world.
pub fn run_episode(
    config: &ExperimentConfig,
    exec: &SceneSpec,
    planning: &SceneSpec,
    level: UncertaintyLevel,
    planner: Planner,
    run_seed: u64,
    obs: &mut impl EpisodeObserver,
) -> ExecutionLog {
    let mut world = ExecutionWorld::new(
        exec,
        config.physics,
        config.execution_noise(level),
        seed::derive(run_seed, &[0]),
    );
    let model = PlanningModel {
        scene: planning,
        physics: config.physics,
        weights: &config.weights,
        limits: config.limits,
        noise: NoiseSpec::default(),
    };
    let plan_seed = seed::derive(run_seed, &[1]);
    match planner {
        Planner::Or => run_or(&mut world, &model, &config.controller, plan_seed, obs),
        Planner::Nr => run_nr(&mut world, &model, &config.controller, plan_seed, obs),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scene: usize,
    pub level: UncertaintyLevel,
    pub planner: Planner,
    pub success: bool,
    pub replans: usize,
    pub exec_cost: f64,
    /// Seconds from the robot's first move.
    pub elapsed_s: f64,
    pub init_plan_s: f64,
    pub mean_replan_s: Option<f64>,
}

impl MetricsRow {
    pub fn from_log(scene: usize, level: UncertaintyLevel, log: &ExecutionLog) -> Self {
        MetricsRow {
            scene,
            level,
            planner: log.planner,
            success: log.success(),
            replans: log.replans(),
            exec_cost: log.executed_cost.total,
            elapsed_s: log.elapsed_from_first_move(),
            init_plan_s: log.initial_plan_time,
            mean_replan_s: log.mean_replan_time(),
        }
    }
}

/// Mean and 95% half-width (1.96 standard errors) of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: f64,
}

pub fn mean_ci(xs: &[f64]) -> Option<MeanCi> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ci95 = if xs.len() < 2 {
        0.0
    } else {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        1.96 * (var / n).sqrt()
    };
    Some(MeanCi { mean, ci95 })
}

/// Aggregates of one (level, planner) cell. Cost and time cover
/// successful runs only and are absent when there are none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub runs: usize,
    pub success_rate: f64,
    pub replans_mean: f64,
    pub replans_ci95: f64,
    pub cost_mean: Option<f64>,
    pub cost_ci95: Option<f64>,
    pub time_mean: Option<f64>,
    pub time_ci95: Option<f64>,
}

/// Level name → planner name → aggregates.
pub type Summary = std::collections::BTreeMap<String, std::collections::BTreeMap<String, CellSummary>>;

pub fn summarize(rows: &[MetricsRow]) -> Summary {
    let mut cells: std::collections::BTreeMap<(UncertaintyLevel, Planner), Vec<&MetricsRow>> =
        Default::default();
    for r in rows {
        cells.entry((r.level, r.planner)).or_default().push(r);
    }
    let mut out = Summary::new();
    for ((level, planner), rs) in cells {
        let n = rs.len();
        let successes: Vec<&&MetricsRow> = rs.iter().filter(|r| r.success).collect();
        let replans: Vec<f64> = rs.iter().map(|r| r.replans as f64).collect();
        let costs: Vec<f64> = successes.iter().map(|r| r.exec_cost).collect();
        let times: Vec<f64> = successes.iter().map(|r| r.elapsed_s).collect();
        let rp = mean_ci(&replans).expect("cells are non-empty");
        let cost = mean_ci(&costs);
        let time = mean_ci(&times);
        out.entry(level.name().to_string()).or_default().insert(
            planner.name().to_string(),
            CellSummary {
                runs: n,
                success_rate: successes.len() as f64 / n as f64,
                replans_mean: rp.mean,
                replans_ci95: rp.ci95,
                cost_mean: cost.map(|c| c.mean),
                cost_ci95: cost.map(|c| c.ci95),
                time_mean: time.map(|t| t.mean),
                time_ci95: time.map(|t| t.ci95),
            },
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Ordered by (scene, level, planner) as configured.
    pub rows: Vec<MetricsRow>,
    pub logs: Vec<ExecutionLog>,
    pub summary: Summary,
    /// Scenes whose generation failed on every retry.
    pub skipped_scenes: Vec<usize>,
}

struct Job {
    scene: usize,
    level: UncertaintyLevel,
    planner: Planner,
    planning: usize,
}

/// Runs the full sweep. Episodes run on worker threads; planner rollouts
/// share one rayon pool of the same size.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let threads = config.worker_threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut exec_scenes = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..config.scenes {
        match config.execution_scene(i) {
            Ok(s) => exec_scenes.push((i, s)),
            Err(e) => {
                log::warn!("skipping scene {i}: {e}");
                skipped.push(i);
            }
        }
    }

    let mut planning_scenes = Vec::new();
    let mut jobs = Vec::new();
    for (slot, (i, exec)) in exec_scenes.iter().enumerate() {
        for &level in &config.levels {
            planning_scenes.push((slot, config.planning_scene(exec, *i, level)));
            for &planner in &config.planners {
                jobs.push(Job {
                    scene: *i,
                    level,
                    planner,
                    planning: planning_scenes.len() - 1,
                });
            }
        }
    }

    let results: Mutex<Vec<Option<ExecutionLog>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.min(jobs.len()) {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(j) else { break };
                let (slot, planning) = &planning_scenes[job.planning];
                let exec = &exec_scenes[*slot].1;
                let seed = config.run_seed(job.scene, job.level, job.planner);
                let log = pool.install(|| {
                    run_episode(config, exec, planning, job.level, job.planner, seed, &mut ())
                });
                log::info!(
                    "scene {} {} {}: {:?}",
                    job.scene,
                    job.level,
                    job.planner.name(),
                    log.outcome
                );
                results.lock().expect("worker panicked")[j] = Some(log);
            });
        }
    });

    let logs: Vec<ExecutionLog> = results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|l| l.expect("every job ran"))
        .collect();
    let rows: Vec<MetricsRow> = jobs
        .iter()
        .zip(&logs)
        .map(|(job, log)| MetricsRow::from_log(job.scene, job.level, log))
        .collect();
    let summary = summarize(&rows);
    Ok(ExperimentResult {
        rows,
        logs,
        summary,
        skipped_scenes: skipped,
    })
}
