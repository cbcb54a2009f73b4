use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clutter_mpc::controllers::{ExecutionLog, Planner};
use clutter_mpc::harness::{self, ExperimentConfig};
use clutter_mpc::pbsto::{optimize, PlanningModel};
use clutter_mpc::physics::NoiseSpec;
use clutter_mpc::uncertainty::UncertaintyLevel;
use clutter_mpc::world::{load_scene, save_scene, WorldState};
use clutter_mpc::{controllers, seed, Error, Result};

/// Physics-based stochastic trajectory optimization and online re-planning
/// for planar grasping in clutter.
#[derive(Debug, Parser)]
#[command(name = "clutter-mpc", version)]
struct Cli {
    /// Experiment config (JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate random execution-world scenes as JSON files.
    GenScenes {
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        objects: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "scenes")]
        out: PathBuf,
    },
    /// Run the optimizer once on a scene and print the plan.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one OR or NR episode and write its log and trace.
    Run(RunArgs),
    /// Run the full scenes × levels × planners benchmark.
    Bench(BenchArgs),
    /// Render an execution log as an SVG strip.
    Render {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = "trace.svg")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value = "or")]
    planner: Planner,
    #[arg(long, default_value = "none")]
    level: UncertaintyLevel,
    #[arg(long)]
    seed: Option<u64>,
    /// Execution-world scene; generated from the seed when absent.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Index of the generated scene.
    #[arg(long, default_value_t = 0)]
    scene_index: usize,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, default_value = "run")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    scenes: Option<usize>,
    #[arg(long)]
    objects: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<UncertaintyLevel>>,
    #[arg(long, value_delimiter = ',')]
    planners: Option<Vec<Planner>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-episode timeout, seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Start from 100 scenes of 15 objects with a 15 minute timeout.
    #[arg(long)]
    full_scale: bool,
}

fn base_config(path: Option<&Path>, full_scale: bool) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None if full_scale => Ok(ExperimentConfig::full_scale()),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_log(path: &Path) -> Result<ExecutionLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        what: "execution log".into(),
        source,
    })
}

fn gen_scenes(mut cfg: ExperimentConfig, count: usize, objects: Option<usize>, seed: Option<u64>, out: &Path) -> Result<()> {
    if let Some(n) = objects {
        cfg.scene_gen.object_count = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for i in 0..count {
        let path = out.join(format!("scene_{i:03}.json"));
        save_scene(&cfg.execution_scene(i)?, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn plan(cfg: ExperimentConfig, scene: &Path, iterations: usize, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let scene = load_scene(scene)?;
    let params = cfg.controller.pbsto.with_iterations(iterations);
    params.validate()?;
    let model = PlanningModel {
        scene: &scene,
        physics: cfg.physics,
        weights: &cfg.weights,
        limits: cfg.limits,
        noise: NoiseSpec::default(),
    };
    let x0 = WorldState::initial(&scene);
    let init = controllers::initial_straight_controls(
        &x0,
        &scene,
        cfg.controller.horizon,
        cfg.controller.nominal_speed,
        cfg.controller.step_duration,
    )
    .into_iter()
    .map(|u| cfg.limits.clamp(u))
    .collect::<Vec<_>>();
    let s = seed.unwrap_or(cfg.seed);
    let result = optimize(&x0, &init, &model, &params, seed::derive(s, &[0]));
    log::info!(
        "{} iterations, {} rollouts, cost {:.4}",
        result.iterations,
        result.rollouts,
        result.plan.total_cost
    );
    match out {
        Some(p) => write_json(p, &result.plan),
        None => {
            println!("{}", serde_json::to_string_pretty(&result.plan).expect("serializable"));
            Ok(())
        }
    }
}

fn run(mut cfg: ExperimentConfig, a: &RunArgs) -> Result<()> {
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.timeout {
        cfg.controller.timeout = t;
    }
    cfg.validate()?;
    let exec = match &a.scene {
        Some(p) => load_scene(p)?,
        None => cfg.execution_scene(a.scene_index)?,
    };
    let planning = cfg.planning_scene(&exec, a.scene_index, a.level);
    let run_seed = cfg.run_seed(a.scene_index, a.level, a.planner);
    let log = harness::run_episode(&cfg, &exec, &planning, a.level, a.planner, run_seed, &mut ());
    write_json(&a.out.join("log.json"), &log)?;
    save_scene(&exec, a.out.join("scene.json"))?;
    save_scene(&planning, a.out.join("planning_scene.json"))?;
    harness::render_trace(&log, &exec, a.out.join("trace.svg"), a.stride)?;
    println!(
        "{} {}: {:?} after {} steps, {} re-plans, cost {:.4}",
        a.planner.name(),
        a.level,
        log.outcome,
        log.executed_controls.len(),
        log.replans(),
        log.executed_cost.total
    );
    Ok(())
}

fn bench(mut cfg: ExperimentConfig, a: &BenchArgs) -> Result<()> {
    if let Some(n) = a.scenes {
        cfg.scenes = n;
    }
    if let Some(n) = a.objects {
        cfg.scene_gen.object_count = n;
    }
    if let Some(l) = &a.levels {
        cfg.levels = l.clone();
    }
    if let Some(p) = &a.planners {
        cfg.planners = p.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.timeout {
        cfg.controller.timeout = t;
    }
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if let Some(o) = &a.out {
        cfg.output = o.clone();
    }
    let result = harness::run_experiment(&cfg)?;
    let csv = cfg.output.join("metrics.csv");
    let summary = cfg.output.join("summary.json");
    harness::write_csv(&csv, &result.rows)?;
    harness::write_summary(&summary, &result.summary)?;
    write_json(&cfg.output.join("config.json"), &cfg)?;

    println!("level   planner  success  replans        cost              time_s");
    for (level, cells) in &result.summary {
        for (planner, c) in cells {
            let opt = |m: Option<f64>, ci: Option<f64>| match (m, ci) {
                (Some(m), Some(ci)) => format!("{m:8.3} ± {ci:<7.3}"),
                _ => format!("{:>18}", "-"),
            };
            println!(
                "{level:<7} {planner:<8} {:>6.1}%  {:5.2} ± {:<5.2} {} {}",
                100.0 * c.success_rate,
                c.replans_mean,
                c.replans_ci95,
                opt(c.cost_mean, c.cost_ci95),
                opt(c.time_mean, c.time_ci95)
            );
        }
    }
    if !result.skipped_scenes.is_empty() {
        println!("skipped scenes: {:?}", result.skipped_scenes);
    }
    println!("wrote {} and {}", csv.display(), summary.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::GenScenes {
            count,
            objects,
            seed,
            out,
        } => gen_scenes(base_config(cfg_path, false)?, *count, *objects, *seed, out),
        Command::Plan {
            scene,
            iterations,
            seed,
            out,
        } => plan(base_config(cfg_path, false)?, scene, *iterations, *seed, out.as_deref()),
        Command::Run(a) => run(base_config(cfg_path, false)?, a),
        Command::Bench(a) => bench(base_config(cfg_path, a.full_scale)?, a),
        Command::Render {
            log,
            scene,
            out,
            stride,
        } => {
            let frames = harness::render_trace(&read_log(log)?, &load_scene(scene)?, out, *stride)?;
            println!("wrote {} ({frames} frames)", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
