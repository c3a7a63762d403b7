use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use iwpt::digital::{solve_digital, SolverConfig};
use iwpt::harness::{
    run_imaging_experiment, run_rf_chain_sweep, run_tradeoff_sweep, tradeoff_table, Architecture,
    Experiment, ExperimentConfig, SceneSource,
};
use iwpt::hybrid::match_digital;
use iwpt::imaging::{condition_number, equivalent_channel, BeamVector};
use iwpt::output::{fmt_f64, graymap_p2, Table};
use iwpt::scene::scene_to_toml;
use iwpt::{trace_objective, InteriorPoint};

#[derive(Parser)]
#[command(
    author,
    version,
    about = "Near-field imaging and wireless power transfer experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo reconstructions per illumination scheme, as graymaps and CSV.
    Image(Common),
    /// Sweep the harvested-power threshold and record imaging metrics.
    Tradeoff(Common),
    /// Vary the number of RF chains (array rows) and compare architectures.
    Rfsweep {
        #[command(flatten)]
        common: Common,
        /// Row counts to evaluate.
        #[arg(long, value_delimiter = ',', default_values_t = [6usize, 8, 10])]
        chains: Vec<usize>,
    },
    /// Design a single beam and write it with its diagnostics.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Power threshold as a fraction of the maximum harvestable power.
        #[arg(long, default_value_t = 0.5)]
        er: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

#[derive(Args)]
struct Common {
    /// Scene configuration file (TOML).
    #[arg(long, conflicts_with = "preset")]
    scene: Option<PathBuf>,
    /// Built-in scene.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Threshold fractions of the maximum harvestable power.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
    er_grid: Vec<f64>,
    /// Monte Carlo trials per point.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// digital, hybrid, random, imaging, wpt
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "digital,hybrid,random,imaging,wpt"
    )]
    arch: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit successfully even when some points fail.
    #[arg(long)]
    keep_going: bool,
    /// Write the channel matrices as CSV into this directory.
    #[arg(long)]
    dump_channels: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let source = match (&self.scene, self.preset) {
            (Some(p), _) => SceneSource::File(p.clone()),
            (None, Some(Preset::Paper)) => SceneSource::Paper,
            (None, Some(Preset::Desk)) | (None, None) => SceneSource::Desk,
        };
        let mut cfg = ExperimentConfig::new(source);
        cfg.er_grid = self.er_grid.clone();
        cfg.trials = self.trials;
        cfg.seed = self.seed;
        cfg.architectures = self
            .arch
            .iter()
            .map(|a| a.parse::<Architecture>())
            .collect::<iwpt::Result<_>>()?;
        cfg.out_dir = Some(self.out.clone());
        cfg.check()?;
        Ok(cfg)
    }

    /// Loads the scene, writes `scene.toml` and the optional channel dump.
    fn prepare(&self, cfg: &ExperimentConfig) -> Result<Experiment> {
        let scene = cfg.scene.load().context("loading scene")?;
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        std::fs::write(self.out.join("scene.toml"), scene_to_toml(&scene)?)?;
        let exp = Experiment::new(scene)?;
        if let Some(dir) = &self.dump_channels {
            std::fs::create_dir_all(dir)?;
            exp.channels.dump_csv(dir)?;
        }
        Ok(exp)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether every point succeeded (or failures were tolerated).
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Image(common) => image(&common),
        Command::Tradeoff(common) => tradeoff(&common),
        Command::Rfsweep { common, chains } => rfsweep(&common, &chains),
        Command::Solve { common, er } => solve(&common, er),
    }
}

fn report_failures(failures: &[String], keep_going: bool) -> bool {
    for f in failures {
        eprintln!("failed: {f}");
    }
    failures.is_empty() || keep_going
}

fn image(common: &Common) -> Result<bool> {
    let cfg = common.config()?;
    let exp = common.prepare(&cfg)?;
    let backend = InteriorPoint::default();
    let (rows, cols) = (exp.scene.roi.rows(), exp.scene.roi.cols());
    let truth: Vec<f64> = exp.truth.gamma.iter().map(|z| z.norm()).collect();
    std::fs::write(
        common.out.join("truth.pgm"),
        graymap_p2(&truth, rows, cols, 255),
    )?;

    let mut jobs: Vec<(Architecture, f64)> = Vec::new();
    for &a in &cfg.architectures {
        match a.baseline() {
            Some(_) => jobs.push((a, f64::NAN)),
            None => jobs.extend(cfg.er_grid.iter().map(|&f| (a, f))),
        }
    }
    jobs.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    jobs.dedup();

    let mut summary = Table::new([
        "architecture",
        "er_fraction",
        "condition_number",
        "rmse",
        "file",
    ]);
    let mut failures = Vec::new();
    for (arch, fraction) in jobs {
        let stem = if fraction.is_nan() {
            format!("image_{arch}")
        } else {
            format!("image_{arch}_{}", fmt_f64(fraction))
        };
        let result = exp
            .design_beam(&cfg, &backend, arch, fraction)
            .and_then(|beam| {
                let out = run_imaging_experiment(
                    &exp.channels,
                    exp.scene.noise_power,
                    cfg.trials,
                    cfg.seed,
                    &beam,
                    &exp.truth,
                )?;
                out.write(&common.out, &stem, rows, cols)?;
                Ok((
                    condition_number(&equivalent_channel(&exp.channels, &beam)?)?,
                    out.rmse,
                ))
            });
        let frac = if fraction.is_nan() {
            String::new()
        } else {
            fmt_f64(fraction)
        };
        match result {
            Ok((cond, rmse)) => {
                summary.push(vec![
                    arch.to_string(),
                    frac,
                    fmt_f64(cond),
                    fmt_f64(rmse),
                    format!("{stem}.pgm"),
                ]);
            }
            Err(e) => {
                failures.push(format!("{stem}: {e}"));
                summary.push(vec![
                    arch.to_string(),
                    frac,
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    summary.write(&common.out.join("image_summary.csv"))?;
    Ok(report_failures(&failures, common.keep_going))
}

fn tradeoff(common: &Common) -> Result<bool> {
    let cfg = common.config()?;
    common.prepare(&cfg)?;
    let points = run_tradeoff_sweep(&cfg, &InteriorPoint::default())?;
    let failures: Vec<String> = points
        .iter()
        .filter_map(|p| {
            p.outcome
                .as_ref()
                .err()
                .map(|e| format!("{} at {}: {e}", p.architecture, fmt_f64(p.fraction)))
        })
        .collect();
    print!("{}", tradeoff_table(&points).to_csv());
    Ok(report_failures(&failures, common.keep_going))
}

fn rfsweep(common: &Common, chains: &[usize]) -> Result<bool> {
    let cfg = common.config()?;
    common.prepare(&cfg)?;
    let rows = run_rf_chain_sweep(&cfg, chains, &InteriorPoint::default())?;
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.outcome
                .as_ref()
                .err()
                .map(|e| format!("{} chains at {}: {e}", r.chains, fmt_f64(r.fraction)))
        })
        .collect();
    print!("{}", iwpt::harness::rf_chain_table(&rows).to_csv());
    Ok(report_failures(&failures, common.keep_going))
}

fn write_beam(path: &Path, beam: &BeamVector) -> Result<()> {
    let mut t = Table::new(["index", "re", "im"]);
    for (i, z) in beam.as_vector().iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
    }
    t.write(path)?;
    Ok(())
}

fn solve(common: &Common, fraction: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&fraction) {
        bail!("--er must lie in [0, 1]");
    }
    let cfg = common.config()?;
    let exp = common.prepare(&cfg)?;
    let backend = InteriorPoint::default();
    let solver: &SolverConfig = &cfg.solver;
    let sol = solve_digital(&backend, &exp.problem(fraction * exp.e_max), solver)?;
    let diag = sol.diagnostics.clone();
    diag.write_csv(&common.out.join("diagnostics.csv"))?;
    write_beam(&common.out.join("beam_digital.csv"), &sol.beam)?;
    println!(
        "digital: objective {:e}, condition {:e}, {}",
        trace_objective(&exp.kernel, &sol.beam),
        condition_number(&equivalent_channel(&exp.channels, &sol.beam)?)?,
        diag.summary()
    );
    if cfg.architectures.contains(&Architecture::Hybrid) {
        let h = match_digital(
            &exp.channels,
            sol,
            exp.scene.transmit_power,
            exp.scene.efficiency,
            exp.hybrid_shape(cfg.hybrid_iterations, cfg.seed),
        )?;
        h.precoder.write_csv(&common.out.join("precoder.csv"))?;
        write_beam(&common.out.join("beam_hybrid.csv"), &h.beam)?;
        println!(
            "hybrid: objective {:e}, condition {:e}, harvested {:e} W, residual {:e}",
            h.objective,
            h.condition,
            h.harvested,
            h.residuals.last().copied().unwrap_or(f64::NAN)
        );
    }
    let ok = diag.converged && !diag.wpt_violated;
    if !ok {
        eprintln!("flagged: {}", diag.flags.join("; "));
    }
    Ok(ok || common.keep_going)
}
