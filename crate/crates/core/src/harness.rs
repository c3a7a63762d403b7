//! Experiment drivers: Monte Carlo imaging, trade-off sweeps and RF-chain
//! sweeps, with CSV and graymap outputs.
//!
//! Every random draw derives from the configured base seed, and parallel work
//! is collected in input order before any reduction, so identical
//! configurations give byte-identical files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{build_channels, ChannelSet};
use crate::digital::{
    build_trace_kernel, solve_digital, trace_objective, DigitalSolution, SolverConfig, TraceKernel,
    TradeoffProblem,
};
use crate::hybrid::{match_digital, HybridShape};
use crate::imaging::{
    condition_number, equivalent_channel, pseudo_inverse, rmse, simulate_received, BeamVector,
    PINV_RTOL,
};
use crate::output::{fmt_f64, graymap_p2, grid_csv, Table};
use crate::scene::{
    desk_scene, load_scene, paper_scene, scattering_from_bitmap, Mask, ScatteringField, Scene,
};
use crate::sdp::ConicBackend;
use crate::wpt::{beam_power, e_max, optimal_wpt_beam};
use crate::{CVector, Error, Result, C64};

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Architecture {
    Digital,
    Hybrid,
    Random,
    ImagingOnly,
    WptOnly,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Digital,
        Architecture::Hybrid,
        Architecture::Random,
        Architecture::ImagingOnly,
        Architecture::WptOnly,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Architecture::Digital => "digital",
            Architecture::Hybrid => "hybrid",
            Architecture::Random => "random",
            Architecture::ImagingOnly => "imaging-only",
            Architecture::WptOnly => "wpt-only",
        }
    }

    pub fn baseline(self) -> Option<Baseline> {
        match self {
            Architecture::Random => Some(Baseline::Random),
            Architecture::ImagingOnly => Some(Baseline::ImagingOnly),
            Architecture::WptOnly => Some(Baseline::WptOnly),
            _ => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "digital" => Ok(Architecture::Digital),
            "hybrid" => Ok(Architecture::Hybrid),
            "random" => Ok(Architecture::Random),
            "imaging" | "imaging-only" => Ok(Architecture::ImagingOnly),
            "wpt" | "wpt-only" => Ok(Architecture::WptOnly),
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

/// Reference beams that do not depend on the power threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Random,
    ImagingOnly,
    WptOnly,
}

/// Builds a reference beam. `Random` draws from `seed`; `ImagingOnly` solves
/// the digital problem with no power requirement; `WptOnly` is the closed form.
pub fn baseline_beam(
    kind: Baseline,
    backend: &dyn ConicBackend,
    ch: &ChannelSet,
    transmit_power: f64,
    efficiency: f64,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<BeamVector> {
    match kind {
        Baseline::Random => BeamVector::random(ch.antennas(), transmit_power, seed),
        Baseline::WptOnly => optimal_wpt_beam(&ch.g, transmit_power),
        Baseline::ImagingOnly => {
            let kernel = build_trace_kernel(ch);
            let sol = solve_digital(
                backend,
                &TradeoffProblem {
                    kernel: &kernel,
                    g: &ch.g,
                    transmit_power,
                    threshold: 0.0,
                    efficiency,
                },
                cfg,
            )?;
            Ok(sol.beam)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SceneSource {
    Paper,
    Desk,
    File(PathBuf),
}

impl SceneSource {
    pub fn load(&self) -> Result<Scene> {
        match self {
            SceneSource::Paper => Ok(paper_scene()),
            SceneSource::Desk => Ok(desk_scene()),
            SceneSource::File(p) => load_scene(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scene: SceneSource,
    /// Thresholds as fractions of `E_max`, ascending, within `[0, 1]`.
    pub er_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub architectures: Vec<Architecture>,
    pub out_dir: Option<PathBuf>,
    pub solver: SolverConfig,
    pub hybrid_iterations: usize,
}

impl ExperimentConfig {
    pub fn new(scene: SceneSource) -> Self {
        ExperimentConfig {
            scene,
            er_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            trials: 200,
            seed: 0,
            architectures: Architecture::ALL.to_vec(),
            out_dir: None,
            solver: SolverConfig::default(),
            hybrid_iterations: 10,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.er_grid.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config(
                "threshold fractions must lie in [0, 1]".into(),
            ));
        }
        if self.er_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("threshold grid must be ascending".into()));
        }
        if self.architectures.is_empty() {
            return Err(Error::Config("no architecture selected".into()));
        }
        if self.hybrid_iterations == 0 {
            return Err(Error::Config("hybrid iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Scene plus everything derived from it once per run.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub scene: Scene,
    pub channels: ChannelSet,
    pub kernel: TraceKernel,
    pub e_max: f64,
    /// Glyph pattern over the ROI.
    pub truth: ScatteringField,
}

impl Experiment {
    pub fn new(scene: Scene) -> Result<Self> {
        scene.validate().into_result()?;
        let channels = build_channels(&scene)?;
        let kernel = build_trace_kernel(&channels);
        let e_max = e_max(&channels.g, scene.transmit_power, scene.efficiency)?;
        let mask = Mask::glyph(scene.roi.rows(), scene.roi.cols());
        let truth = scattering_from_bitmap(&scene.roi, &mask)?;
        Ok(Experiment {
            scene,
            channels,
            kernel,
            e_max,
            truth,
        })
    }

    pub fn problem(&self, threshold: f64) -> TradeoffProblem<'_> {
        TradeoffProblem {
            kernel: &self.kernel,
            g: &self.channels.g,
            transmit_power: self.scene.transmit_power,
            threshold,
            efficiency: self.scene.efficiency,
        }
    }

    /// Beam of one architecture. `fraction` (of `E_max`) is ignored by the
    /// baselines.
    pub fn design_beam(
        &self,
        cfg: &ExperimentConfig,
        backend: &dyn ConicBackend,
        arch: Architecture,
        fraction: f64,
    ) -> Result<BeamVector> {
        if let Some(kind) = arch.baseline() {
            return baseline_beam(
                kind,
                backend,
                &self.channels,
                self.scene.transmit_power,
                self.scene.efficiency,
                &cfg.solver,
                cfg.seed,
            );
        }
        let sol = solve_digital(backend, &self.problem(fraction * self.e_max), &cfg.solver)?;
        if arch == Architecture::Digital {
            return Ok(sol.beam);
        }
        let h = match_digital(
            &self.channels,
            sol,
            self.scene.transmit_power,
            self.scene.efficiency,
            self.hybrid_shape(cfg.hybrid_iterations, cfg.seed),
        )?;
        Ok(h.beam)
    }

    pub fn hybrid_shape(&self, iterations: usize, seed: u64) -> HybridShape {
        HybridShape {
            chains: self.scene.array.rows,
            elements: self.scene.array.cols,
            iterations,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImagingOutcome {
    pub rmse: f64,
    /// `|mean γ̂|` per cell, row-major.
    pub mean_magnitude: Vec<f64>,
}

impl ImagingOutcome {
    /// Writes `<stem>.pgm` and `<stem>.csv`.
    pub fn write(&self, dir: &Path, stem: &str, rows: usize, cols: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join(format!("{stem}.pgm")),
            graymap_p2(&self.mean_magnitude, rows, cols, 255),
        )?;
        std::fs::write(
            dir.join(format!("{stem}.csv")),
            grid_csv(&self.mean_magnitude, cols),
        )?;
        Ok(())
    }
}

/// Monte Carlo least-squares imaging; trial `t` (1-based) uses noise seed
/// `seed + t`.
pub fn run_imaging_experiment(
    ch: &ChannelSet,
    noise_power: f64,
    trials: usize,
    seed: u64,
    beam: &BeamVector,
    truth: &ScatteringField,
) -> Result<ImagingOutcome> {
    if trials == 0 {
        return Err(Error::Empty("trial list"));
    }
    let h = equivalent_channel(ch, beam)?;
    let pinv = pseudo_inverse(h.matrix(), PINV_RTOL);
    let indices: Vec<u64> = (1..=trials as u64).collect();
    let estimates = par_map(&indices, |&t| {
        simulate_received(ch, beam, truth, noise_power, seed.wrapping_add(t)).map(|y| &pinv * y)
    })
    .into_iter()
    .collect::<Result<Vec<CVector>>>()?;
    let mut mean = CVector::zeros(truth.len());
    for e in &estimates {
        mean += e;
    }
    mean /= C64::from(trials as f64);
    Ok(ImagingOutcome {
        rmse: rmse(&estimates, &truth.gamma)?,
        mean_magnitude: mean.iter().map(|z| z.norm()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointMetrics {
    /// Sum harvested power, watts.
    pub achieved: f64,
    pub objective: f64,
    pub condition: f64,
    pub rmse: f64,
    /// Achieved power within `1e-6·E_max` of the threshold.
    pub constraint_met: bool,
    /// Solver convergence flag; always true for closed-form beams.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffPoint {
    pub architecture: Architecture,
    /// Threshold as a fraction of `E_max`; for baselines, the achieved fraction.
    pub fraction: f64,
    /// Threshold in watts.
    pub threshold: f64,
    pub outcome: std::result::Result<PointMetrics, String>,
}

impl TradeoffPoint {
    pub fn metrics(&self) -> Option<&PointMetrics> {
        self.outcome.as_ref().ok()
    }
}

pub fn tradeoff_table(points: &[TradeoffPoint]) -> Table {
    let mut t = Table::new([
        "architecture",
        "er_fraction",
        "er_watts",
        "achieved_watts",
        "trace_objective",
        "condition_number",
        "rmse",
        "constraint_met",
        "converged",
        "error",
    ]);
    for p in points {
        let mut row = vec![
            p.architecture.tag().to_string(),
            fmt_f64(p.fraction),
            fmt_f64(p.threshold),
        ];
        match &p.outcome {
            Ok(m) => row.extend([
                fmt_f64(m.achieved),
                fmt_f64(m.objective),
                fmt_f64(m.condition),
                fmt_f64(m.rmse),
                m.constraint_met.to_string(),
                m.converged.to_string(),
                String::new(),
            ]),
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(e.replace([',', '\n'], ";"));
            }
        }
        t.push(row);
    }
    t
}

fn evaluate(
    exp: &Experiment,
    cfg: &ExperimentConfig,
    beam: &BeamVector,
    threshold: f64,
    converged: bool,
) -> Result<PointMetrics> {
    let achieved = beam_power(&exp.channels.g, beam, exp.scene.efficiency);
    let condition = condition_number(&equivalent_channel(&exp.channels, beam)?)?;
    let imaging = run_imaging_experiment(
        &exp.channels,
        exp.scene.noise_power,
        cfg.trials,
        cfg.seed,
        beam,
        &exp.truth,
    )?;
    Ok(PointMetrics {
        achieved,
        objective: trace_objective(&exp.kernel, beam),
        condition,
        rmse: imaging.rmse,
        constraint_met: achieved >= threshold - 1e-6 * exp.e_max,
        converged,
    })
}

enum Job {
    Sweep(f64),
    Baseline(Architecture),
}

/// Runs every selected architecture over the threshold grid and appends one
/// point per selected baseline. Points are sorted by architecture, then
/// threshold; failed points keep their error message. Writes `tradeoff.csv`
/// when an output directory is configured.
pub fn run_tradeoff_sweep(
    cfg: &ExperimentConfig,
    backend: &dyn ConicBackend,
) -> Result<Vec<TradeoffPoint>> {
    cfg.check()?;
    let exp = Experiment::new(cfg.scene.load()?)?;
    run_tradeoff_sweep_on(&exp, cfg, backend)
}

/// [`run_tradeoff_sweep`] on a prepared experiment.
pub fn run_tradeoff_sweep_on(
    exp: &Experiment,
    cfg: &ExperimentConfig,
    backend: &dyn ConicBackend,
) -> Result<Vec<TradeoffPoint>> {
    cfg.check()?;
    let digital = cfg.architectures.contains(&Architecture::Digital);
    let hybrid = cfg.architectures.contains(&Architecture::Hybrid);
    let mut jobs = Vec::new();
    if digital || hybrid {
        jobs.extend(cfg.er_grid.iter().map(|&f| Job::Sweep(f)));
    }
    let mut baselines: Vec<Architecture> = cfg
        .architectures
        .iter()
        .copied()
        .filter(|a| a.baseline().is_some())
        .collect();
    baselines.sort();
    baselines.dedup();
    jobs.extend(baselines.into_iter().map(Job::Baseline));

    let results = par_map(&jobs, |job| -> Vec<TradeoffPoint> {
        match *job {
            Job::Sweep(fraction) => sweep_point(exp, cfg, backend, fraction, digital, hybrid),
            Job::Baseline(arch) => vec![baseline_point(exp, cfg, backend, arch)],
        }
    });
    let mut points: Vec<TradeoffPoint> = results.into_iter().flatten().collect();
    points.sort_by(|a, b| {
        a.architecture
            .cmp(&b.architecture)
            .then(a.fraction.total_cmp(&b.fraction))
    });
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        tradeoff_table(&points).write(&dir.join("tradeoff.csv"))?;
    }
    Ok(points)
}

fn sweep_point(
    exp: &Experiment,
    cfg: &ExperimentConfig,
    backend: &dyn ConicBackend,
    fraction: f64,
    digital: bool,
    hybrid: bool,
) -> Vec<TradeoffPoint> {
    let threshold = fraction * exp.e_max;
    let point = |architecture, outcome| TradeoffPoint {
        architecture,
        fraction,
        threshold,
        outcome,
    };
    let solved: Result<DigitalSolution> =
        solve_digital(backend, &exp.problem(threshold), &cfg.solver);
    let mut out = Vec::new();
    match solved {
        Err(e) => {
            let msg = e.to_string();
            if digital {
                out.push(point(Architecture::Digital, Err(msg.clone())));
            }
            if hybrid {
                out.push(point(Architecture::Hybrid, Err(msg)));
            }
        }
        Ok(sol) => {
            if digital {
                let converged = sol.diagnostics.converged;
                let m =
                    evaluate(exp, cfg, &sol.beam, threshold, converged).map_err(|e| e.to_string());
                out.push(point(Architecture::Digital, m));
            }
            if hybrid {
                let converged = sol.diagnostics.converged;
                let m = match_digital(
                    &exp.channels,
                    sol,
                    exp.scene.transmit_power,
                    exp.scene.efficiency,
                    exp.hybrid_shape(cfg.hybrid_iterations, cfg.seed),
                )
                .and_then(|h| evaluate(exp, cfg, &h.beam, threshold, converged))
                .map_err(|e| e.to_string());
                out.push(point(Architecture::Hybrid, m));
            }
        }
    }
    out
}

fn baseline_point(
    exp: &Experiment,
    cfg: &ExperimentConfig,
    backend: &dyn ConicBackend,
    arch: Architecture,
) -> TradeoffPoint {
    let kind = arch.baseline().expect("baseline architecture");
    let outcome = baseline_beam(
        kind,
        backend,
        &exp.channels,
        exp.scene.transmit_power,
        exp.scene.efficiency,
        &cfg.solver,
        cfg.seed,
    )
    .and_then(|beam| evaluate(exp, cfg, &beam, 0.0, true));
    match outcome {
        Ok(m) => TradeoffPoint {
            architecture: arch,
            fraction: m.achieved / exp.e_max,
            threshold: m.achieved,
            outcome: Ok(m),
        },
        Err(e) => TradeoffPoint {
            architecture: arch,
            fraction: 0.0,
            threshold: 0.0,
            outcome: Err(e.to_string()),
        },
    }
}

/// Threshold fractions used by the RF-chain sweep.
pub const RF_SWEEP_FRACTIONS: [f64; 2] = [0.0, 0.15];

#[derive(Clone, Debug, PartialEq)]
pub struct RfChainRow {
    pub chains: usize,
    pub elements: usize,
    pub antennas: usize,
    pub fraction: f64,
    pub outcome: std::result::Result<(f64, f64), String>,
}

impl RfChainRow {
    pub fn condition_digital(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|c| c.0)
    }

    pub fn condition_hybrid(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|c| c.1)
    }
}

pub fn rf_chain_table(rows: &[RfChainRow]) -> Table {
    let mut t = Table::new([
        "chains",
        "elements",
        "antennas",
        "er_fraction",
        "cond_digital",
        "cond_hybrid",
        "error",
    ]);
    for r in rows {
        let mut row = vec![
            r.chains.to_string(),
            r.elements.to_string(),
            r.antennas.to_string(),
            fmt_f64(r.fraction),
        ];
        match &r.outcome {
            Ok((d, h)) => row.extend([fmt_f64(*d), fmt_f64(*h), String::new()]),
            Err(e) => row.extend([String::new(), String::new(), e.replace([',', '\n'], ";")]),
        }
        t.push(row);
    }
    t
}

/// Varies the number of array rows (RF chains) with the row length fixed,
/// solving both architectures at `E_r ∈ {0, 0.15}·E_max`. Writes
/// `rfsweep.csv` when an output directory is configured.
pub fn run_rf_chain_sweep(
    cfg: &ExperimentConfig,
    chains: &[usize],
    backend: &dyn ConicBackend,
) -> Result<Vec<RfChainRow>> {
    cfg.check()?;
    let base = cfg.scene.load()?;
    run_rf_chain_sweep_on(&base, base.array.cols, cfg, chains, backend)
}

/// [`run_rf_chain_sweep`] from an explicit base scene and row length.
pub fn run_rf_chain_sweep_on(
    base: &Scene,
    elements: usize,
    cfg: &ExperimentConfig,
    chains: &[usize],
    backend: &dyn ConicBackend,
) -> Result<Vec<RfChainRow>> {
    if chains.contains(&0) || elements == 0 {
        return Err(Error::Config(
            "chain and element counts must be positive".into(),
        ));
    }
    let jobs: Vec<(usize, f64)> = chains
        .iter()
        .flat_map(|&n| RF_SWEEP_FRACTIONS.iter().map(move |&f| (n, f)))
        .collect();
    let rows = par_map(&jobs, |&(n_d, fraction)| {
        let outcome =
            rf_point(base, n_d, elements, fraction, cfg, backend).map_err(|e| e.to_string());
        RfChainRow {
            chains: n_d,
            elements,
            antennas: n_d * elements,
            fraction,
            outcome,
        }
    });
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        rf_chain_table(&rows).write(&dir.join("rfsweep.csv"))?;
    }
    Ok(rows)
}

fn rf_point(
    base: &Scene,
    chains: usize,
    elements: usize,
    fraction: f64,
    cfg: &ExperimentConfig,
    backend: &dyn ConicBackend,
) -> Result<(f64, f64)> {
    let exp = Experiment::new(base.with_array_size(chains, elements))?;
    let sol = solve_digital(backend, &exp.problem(fraction * exp.e_max), &cfg.solver)?;
    let cond_digital = condition_number(&equivalent_channel(&exp.channels, &sol.beam)?)?;
    let hybrid = match_digital(
        &exp.channels,
        sol,
        exp.scene.transmit_power,
        exp.scene.efficiency,
        exp.hybrid_shape(cfg.hybrid_iterations, cfg.seed),
    )?;
    Ok((cond_digital, hybrid.condition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::InteriorPoint;

    #[test]
    fn architecture_tags_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(a.tag().parse::<Architecture>().unwrap(), a);
        }
        assert_eq!(
            "imaging".parse::<Architecture>().unwrap(),
            Architecture::ImagingOnly
        );
        assert!("analog".parse::<Architecture>().is_err());
    }

    #[test]
    fn config_checks() {
        let mut c = ExperimentConfig::new(SceneSource::Desk);
        assert!(c.check().is_ok());
        c.er_grid = vec![0.5, 0.25];
        assert!(c.check().is_err());
        c.er_grid = vec![0.0, 1.5];
        assert!(c.check().is_err());
        c.er_grid = vec![0.0];
        c.trials = 0;
        assert!(c.check().is_err());
    }

    #[test]
    fn wpt_baseline_delegates() {
        let s = desk_scene();
        let ch = build_channels(&s).unwrap();
        let b = baseline_beam(
            Baseline::WptOnly,
            &InteriorPoint::default(),
            &ch,
            s.transmit_power,
            s.efficiency,
            &SolverConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(b, optimal_wpt_beam(&ch.g, s.transmit_power).unwrap());
    }

    #[test]
    fn design_beam_dispatch() {
        let exp = Experiment::new(desk_scene()).unwrap();
        let cfg = ExperimentConfig::new(SceneSource::Desk);
        let ip = InteriorPoint::default();
        let p_t = exp.scene.transmit_power;
        let wpt = exp
            .design_beam(&cfg, &ip, Architecture::WptOnly, 0.3)
            .unwrap();
        assert_eq!(wpt, optimal_wpt_beam(&exp.channels.g, p_t).unwrap());
        // a saturated threshold pins both architectures to the power beam
        for arch in [Architecture::Digital, Architecture::Hybrid] {
            let b = exp.design_beam(&cfg, &ip, arch, 1.0).unwrap();
            assert!((b.power() - p_t).abs() < 1e-9 * p_t);
            if arch == Architecture::Digital {
                assert!(b.alignment(&wpt) / p_t > 0.999);
            }
        }
    }

    #[test]
    fn random_baseline_is_reproducible() {
        let s = desk_scene();
        let ch = build_channels(&s).unwrap();
        let run = || {
            baseline_beam(
                Baseline::Random,
                &InteriorPoint::default(),
                &ch,
                s.transmit_power,
                s.efficiency,
                &SolverConfig::default(),
                42,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert!((a.power() - s.transmit_power).abs() < 1e-12);
    }

    #[test]
    fn single_trial_matches_direct_computation() {
        let exp = Experiment::new(desk_scene()).unwrap();
        let beam = BeamVector::random(exp.channels.antennas(), 1.0, 3).unwrap();
        let out = run_imaging_experiment(&exp.channels, 1e-12, 1, 10, &beam, &exp.truth).unwrap();
        let y = simulate_received(&exp.channels, &beam, &exp.truth, 1e-12, 11).unwrap();
        let h = equivalent_channel(&exp.channels, &beam).unwrap();
        let est = crate::imaging::ls_estimate(&h, &y).unwrap();
        let direct = (est - &exp.truth.gamma).norm();
        assert!((out.rmse - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn noiseless_round_trip() {
        let exp = Experiment::new(desk_scene()).unwrap();
        let beam = BeamVector::random(exp.channels.antennas(), 1.0, 4).unwrap();
        let out = run_imaging_experiment(&exp.channels, 0.0, 3, 0, &beam, &exp.truth).unwrap();
        assert!(out.rmse <= 1e-6, "{}", out.rmse);
    }

    #[test]
    fn table_marks_errors() {
        let pts = vec![TradeoffPoint {
            architecture: Architecture::Digital,
            fraction: 1.0,
            threshold: 2.0,
            outcome: Err("infeasible, too much".into()),
        }];
        assert_eq!(
            tradeoff_table(&pts).to_csv().lines().nth(1).unwrap(),
            "digital,1,2,,,,,,,infeasible; too much"
        );
    }
}
