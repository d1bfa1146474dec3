//! Command-line front end.
//!
//! ```text
//! corral modes     [--config F] [--grid N] [--out DIR]
//! corral simulate  [--config F] [--seed N] [--weights A B] [--propulsion MODE] [--bins N] [--out DIR]
//! corral avgfield  [--config F] [--weights A B] [--mc N] [--seed N] [--grid N] [--out DIR]
//! corral render    GRID.csv [--config F] [--saturation S] [--out FILE]
//! corral calibrate [--config F] [--seed N] [--target MM] [--pilot N]
//! ```
//!
//! Each command writes `metadata.json` into its output directory: the
//! effective configuration, seed, generator, mode `q` values and tool
//! version. No timestamps are recorded, so reruns are byte-identical.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::dynamics::{self, ModePair, Propulsion, GENERATOR, PILOT_STEPS, TARGET_MEAN_STEP};
use crate::export;
use crate::modes::build_mode;
use crate::stats::{self, ModeGrids};

pub use config::{Case, RunConfig};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CORRAL_GIT_DESCRIBE"), ")");

#[derive(Debug, Parser)]
#[command(name = "corral", version = VERSION, about = "Walking droplet in an elliptical corral")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for both eigenmodes and export their grids.
    Modes(ModesArgs),
    /// Run trajectories and export histograms.
    Simulate(SimulateArgs),
    /// Export time-averaged wavefields.
    Avgfield(AvgfieldArgs),
    /// Render a grid CSV as a PGM image.
    Render(RenderArgs),
    /// Find the coupling C that gives the target mean step.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub common: Common,
    /// Grid resolution per axis.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run a single case with these weights instead of the configured cases.
    #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"])]
    pub weights: Option<Vec<f64>>,
    /// perpendicular or anti_gradient.
    #[arg(long)]
    pub propulsion: Option<Propulsion>,
    /// Histogram bins per axis.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AvgfieldArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"])]
    pub weights: Option<Vec<f64>>,
    /// Also compute a Monte Carlo average with this many draws.
    #[arg(long)]
    pub mc: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Grid CSV written by this tool.
    pub csv: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Counts at or above this level render white.
    #[arg(long)]
    pub saturation: Option<f64>,
    /// Image path; defaults to the CSV path with a .pgm extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target mean step (mm).
    #[arg(long, default_value_t = TARGET_MEAN_STEP)]
    pub target: f64,
    /// Pilot run length.
    #[arg(long, default_value_t = PILOT_STEPS)]
    pub pilot: usize,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Modes(a) => cmd_modes(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Avgfield(a) => cmd_avgfield(&a),
        Command::Render(a) => cmd_render(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    }
}

fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    })
}

fn out_dir(cfg: &RunConfig, common: &Common) -> anyhow::Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn weights_case(weights: &Option<Vec<f64>>) -> Option<Case> {
    weights.as_ref().map(|w| Case {
        name: format!("weights_{}_{}", w[0], w[1]),
        alpha: w[0],
        beta: w[1],
    })
}

fn cases(cfg: &RunConfig, weights: &Option<Vec<f64>>) -> Vec<Case> {
    match weights_case(weights) {
        Some(c) => vec![c],
        None if cfg.cases.is_empty() => vec![Case {
            name: "sim".into(),
            alpha: cfg.sim.alpha,
            beta: cfg.sim.beta,
        }],
        None => cfg.cases.clone(),
    }
}

fn build_pair(cfg: &RunConfig, cached: bool) -> anyhow::Result<ModePair> {
    let geom = cfg.geometry()?;
    let cache = (cached && cfg.modes.use_cache).then_some(cfg.modes.cache);
    ModePair::build(&geom, &cfg.modes.alpha_mode, &cfg.modes.beta_mode, cache).context("building eigenmodes")
}

fn write_metadata(dir: &Path, command: &str, cfg: &RunConfig, pair: Option<&ModePair>) -> anyhow::Result<()> {
    let q = pair.map(|m| {
        json!({
            m.alpha_mode.spec.label(): m.alpha_mode.q,
            m.beta_mode.spec.label(): m.beta_mode.q,
        })
    });
    let meta = json!({
        "tool": "corral",
        "version": VERSION,
        "command": command,
        "seed": cfg.sim.seed,
        "generator": GENERATOR,
        "c": cfg.sim.c,
        "q": q,
        "config": cfg,
    });
    let path = dir.join("metadata.json");
    fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn grid_outputs(dir: &Path, stem: &str, grid: &stats::HistogramGrid, saturation: f64) -> anyhow::Result<()> {
    let csv = dir.join(format!("{stem}.csv"));
    export::write_grid_csv(grid, &csv).with_context(|| format!("writing {}", csv.display()))?;
    let pgm = dir.join(format!("{stem}.pgm"));
    export::write_pgm(grid, &pgm, saturation).with_context(|| format!("writing {}", pgm.display()))?;
    Ok(())
}

fn mode_stem(spec: &crate::specfun::ModeSpec) -> String {
    format!("mode_{}_{}_{}", spec.order, spec.radial_index, spec.parity.as_str())
}

pub fn cmd_modes(args: &ModesArgs) -> anyhow::Result<()> {
    let mut cfg = load(args.common.config.as_deref())?;
    if let Some(g) = args.grid {
        cfg.modes.grid = g;
    }
    cfg.validate()?;
    let dir = out_dir(&cfg, &args.common)?;
    let geom = cfg.geometry()?;
    let mut lines = String::new();
    let mut built = Vec::new();
    for spec in [cfg.modes.alpha_mode, cfg.modes.beta_mode] {
        let mode = build_mode(&spec, &geom).with_context(|| format!("mode {}", spec.label()))?;
        println!("q{} = {:.6}", spec.label(), mode.q);
        lines += &format!("{} {:.16e} {:.16e}\n", spec.label(), mode.q, mode.angular.char_value);
        let grid = mode.grid(cfg.modes.grid, cfg.modes.grid)?;
        grid_outputs(&dir, &mode_stem(&spec), &grid, cfg.stats.saturation)?;
        built.push(mode);
    }
    fs::write(dir.join("q_values.txt"), format!("# mode q characteristic_value\n{lines}"))?;
    let pair = ModePair::new(built.remove(0), built.remove(0));
    write_metadata(&dir, "modes", &cfg, Some(&pair))
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = load(args.common.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.sim.seed = s;
    }
    if let Some(p) = args.propulsion {
        cfg.sim.propulsion = p;
    }
    if let Some(b) = args.bins {
        cfg.stats.bins = b;
    }
    let cases = cases(&cfg, &args.weights);
    cfg.cases = cases.clone();
    cfg.validate()?;
    let dir = out_dir(&cfg, &args.common)?;
    let geom = cfg.geometry()?;
    let pair = build_pair(&cfg, true)?;
    let bins = cfg.stats.bins;
    let summaries: anyhow::Result<Vec<_>> = cases
        .par_iter()
        .map(|case| {
            let params = cfg.params(case.alpha, case.beta);
            let traj = dynamics::run(&pair, &params, &geom).with_context(|| format!("case {}", case.name))?;
            let sub = dir.join(&case.name);
            fs::create_dir_all(&sub)?;
            export::write_trajectory_csv(&traj, &sub.join("trajectory.csv"))?;
            let counts = stats::position_histogram(std::slice::from_ref(&traj), &geom, bins, bins);
            let disp = stats::displacement_histogram(std::slice::from_ref(&traj), &geom, bins, bins);
            grid_outputs(&sub, "counts", &counts, cfg.stats.saturation)?;
            grid_outputs(&sub, "displacement", &disp, cfg.stats.saturation)?;
            let summary = json!({
                "case": case.name,
                "alpha": case.alpha,
                "beta": case.beta,
                "states": traj.states.len(),
                "runs": traj.run_count(),
                "escapes": traj.escape_count,
                "mean_step_mm": dynamics::mean_step(&traj),
                "interior_occupancy": stats::interior_occupancy(&counts, &geom),
                "occupancy_displacement_spearman": stats::occupancy_displacement_correlation(&counts, &disp, 20),
            });
            fs::write(sub.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
            Ok(summary)
        })
        .collect();
    for s in summaries? {
        println!(
            "{}: {} states, {} escapes, occupancy {:.3}",
            s["case"].as_str().unwrap_or_default(),
            s["states"],
            s["escapes"],
            s["interior_occupancy"].as_f64().unwrap_or(f64::NAN)
        );
    }
    write_metadata(&dir, "simulate", &cfg, Some(&pair))
}

pub fn cmd_avgfield(args: &AvgfieldArgs) -> anyhow::Result<()> {
    let mut cfg = load(args.common.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.sim.seed = s;
    }
    if let Some(n) = args.mc {
        cfg.stats.mc_draws = n;
    }
    if let Some(g) = args.grid {
        cfg.modes.grid = g;
    }
    let cases = cases(&cfg, &args.weights);
    cfg.cases = cases.clone();
    cfg.validate()?;
    for case in &cases {
        if case.alpha == 0.0 && case.beta == 0.0 {
            bail!("case {}: alpha = beta = 0 gives an identically zero field", case.name);
        }
    }
    let dir = out_dir(&cfg, &args.common)?;
    let pair = build_pair(&cfg, false)?;
    let n = cfg.modes.grid;
    let grids = ModeGrids::new(&pair, n, n)?;
    for case in &cases {
        let analytic = stats::averaged_field_analytic_on(&grids, case.alpha, case.beta)?;
        grid_outputs(&dir, &format!("{}_analytic", case.name), &analytic, cfg.stats.saturation)?;
        if cfg.stats.mc_draws > 0 {
            let mc = stats::averaged_field_mc_on(&grids, case.alpha, case.beta, cfg.stats.mc_draws, cfg.sim.seed)?;
            grid_outputs(&dir, &format!("{}_mc", case.name), &mc, cfg.stats.saturation)?;
            let dev = stats::max_deviation(&analytic, &mc);
            fs::write(
                dir.join(format!("{}_deviation.txt", case.name)),
                format!("max_abs_deviation={dev:.16e}\ndraws={}\n", cfg.stats.mc_draws),
            )?;
            println!("{}: max |MC - analytic| = {dev:.4e} ({} draws)", case.name, cfg.stats.mc_draws);
        } else {
            println!("{}: analytic field written", case.name);
        }
    }
    write_metadata(&dir, "avgfield", &cfg, Some(&pair))
}

pub fn cmd_render(args: &RenderArgs) -> anyhow::Result<()> {
    let cfg = load(args.config.as_deref())?;
    let saturation = args.saturation.unwrap_or(cfg.stats.saturation);
    if !(saturation > 0.0) {
        bail!("saturation must be positive, got {saturation}");
    }
    let grid = export::read_grid_csv(&args.csv)?;
    let out = args.out.clone().unwrap_or_else(|| args.csv.with_extension("pgm"));
    export::write_pgm(&grid, &out, saturation).with_context(|| format!("writing {}", out.display()))?;
    println!("{}", out.display());
    Ok(())
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> anyhow::Result<()> {
    let mut cfg = load(args.common.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.sim.seed = s;
    }
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let pair = build_pair(&cfg, true)?;
    let params = cfg.params(0.5, 0.5);
    let c = dynamics::calibrate_c(&pair, &params, &geom, args.target, args.pilot)?;
    println!("c = {c:.16e}");
    if let Some(dir) = &args.common.out {
        fs::create_dir_all(dir)?;
        cfg.sim.c = c;
        write_metadata(dir, "calibrate", &cfg, Some(&pair))?;
    }
    Ok(())
}
