//! Acceptance suite. Runs every criterion at its fixed tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any fails.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iwpt::digital::{
    build_trace_kernel, solve_digital, trace_objective, SolverConfig, TradeoffProblem,
};
use iwpt::harness::{
    run_imaging_experiment, run_rf_chain_sweep_on, run_tradeoff_sweep_on, Architecture, Experiment,
    ExperimentConfig, SceneSource,
};
use iwpt::hybrid::{alternating_optimize, analog_update, HybridPrecoder};
use iwpt::imaging::{condition_number, equivalent_channel, BeamVector};
use iwpt::scene::{desk_scene, ArrayGeometry, ReceiverSet, RoiGrid, Scene};
use iwpt::wpt::{beam_power, optimal_wpt_beam};
use iwpt::{build_channels, CMatrix, CVector, ChannelSet, InteriorPoint, C64};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("runtime {t:.1?} exceeds {limit:?}"))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Small random geometry; used where only the algebra matters.
fn random_small_scene(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize) -> Scene {
    let mut s = desk_scene();
    s.array = ArrayGeometry {
        rows: rng.random_range(1..=max_rows),
        cols: rng.random_range(1..=max_cols),
        ..s.array
    };
    s.roi = RoiGrid {
        cells: [rng.random_range(1..=2), rng.random_range(1..=4)],
        cell_size: 0.1,
        center: [
            uniform(rng, 0.5, 3.0),
            uniform(rng, -0.5, 0.5),
            uniform(rng, -0.5, 0.5),
        ],
        normal: [1.0, 0.0, 0.0],
    };
    let m = rng.random_range(1..=4);
    s.receivers = ReceiverSet {
        positions: (0..m)
            .map(|_| {
                [
                    uniform(rng, 0.5, 2.0),
                    uniform(rng, -1.5, 1.5),
                    uniform(rng, -1.0, 1.0),
                ]
            })
            .collect(),
    };
    s
}

/// Desk-scale scene (6×6 array, 4×4 ROI) with a random ROI position and
/// random receivers, redrawn until it passes validation.
fn random_desk_scene(rng: &mut ChaCha8Rng) -> Scene {
    loop {
        let mut s = desk_scene();
        s.roi.center = [
            uniform(rng, 1.5, 2.2),
            uniform(rng, -0.3, 0.3),
            uniform(rng, -0.3, 0.3),
        ];
        s.receivers.positions = (0..3)
            .map(|_| {
                [
                    uniform(rng, 1.0, 2.0),
                    uniform(rng, -1.5, 1.5),
                    uniform(rng, -1.0, 1.0),
                ]
            })
            .collect();
        if s.validate().is_valid() {
            return s;
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for scene_idx in 0..50 {
        let s = random_small_scene(&mut rng, 3, 4);
        assert!(s.antennas() <= 12 && s.cells() <= 8);
        let ch = build_channels(&s).map_err(|e| e.to_string())?;
        let t = build_trace_kernel(&ch);
        for b in 0..50 {
            let x = BeamVector::random(ch.antennas(), 1.0, scene_idx * 1000 + b).unwrap();
            let h = equivalent_channel(&ch, &x).unwrap();
            let direct = (h.matrix() * h.matrix().adjoint()).trace().re;
            let rel = (trace_objective(&t, &x) - direct).abs() / direct;
            worst = worst.max(rel);
        }
    }
    ensure(worst <= 1e-10, format!("worst relative mismatch {worst:e}"))?;
    within(Duration::from_secs(5), start)?;
    Ok(format!("worst relative mismatch {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for scene_idx in 0..20 {
        let s = random_small_scene(&mut rng, 3, 4);
        let ch = build_channels(&s).map_err(|e| e.to_string())?;
        let x = optimal_wpt_beam(&ch.g, s.transmit_power).map_err(|e| e.to_string())?;
        let achieved = beam_power(&ch.g, &x, s.efficiency);
        let s_max =
            ch.g.clone()
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max);
        let closed = s.efficiency * s.transmit_power * s_max * s_max;
        worst = worst.max((achieved - closed).abs() / closed);
        for b in 0..1000 {
            let r = BeamVector::random(ch.antennas(), s.transmit_power, scene_idx * 10_000 + b)
                .unwrap();
            let p = beam_power(&ch.g, &r, s.efficiency);
            ensure(
                p <= achieved * (1.0 + 1e-12),
                format!("scene {scene_idx}: random beam {b} harvests more"),
            )?;
        }
    }
    ensure(worst <= 1e-10, format!("closed-form mismatch {worst:e}"))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "closed-form mismatch {worst:.1e}, dominates 20×1000 random beams"
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut c = |r: usize, k: usize| {
        CMatrix::from_fn(r, k, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    };
    let ch = ChannelSet::from_parts(c(3, 2), c(2, 2)).unwrap();
    let t = build_trace_kernel(&ch);
    let p_t = 1.0;
    let sol = solve_digital(
        &InteriorPoint::default(),
        &TradeoffProblem {
            kernel: &t,
            g: &ch.g,
            transmit_power: p_t,
            threshold: 0.0,
            efficiency: 0.5,
        },
        &SolverConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let solved = trace_objective(&t, &sol.beam);

    // x = √P_t (cos θ, sin θ e^{jφ}) covers the power sphere up to a global phase
    let mut grid_min = f64::INFINITY;
    for i in 0..100 {
        let theta = i as f64 * (PI / 2.0) / 99.0;
        for j in 0..100 {
            let phi = j as f64 * TAU / 100.0;
            let x = CVector::from_vec(vec![
                C64::new(p_t.sqrt() * theta.cos(), 0.0),
                C64::from_polar(p_t.sqrt() * theta.sin(), phi),
            ]);
            grid_min = grid_min.min(trace_objective(&t, &BeamVector::new(x)));
        }
    }
    let rel = (solved - grid_min).abs() / grid_min;
    ensure(
        rel <= 0.01,
        format!("solver {solved:e} vs grid {grid_min:e} (rel {rel:e})"),
    )?;
    within(Duration::from_secs(30), start)?;
    Ok(format!(
        "solver {solved:.6e} vs grid {grid_min:.6e}, rel {rel:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let cfg = SolverConfig::default();
    let backend = InteriorPoint::default();
    let mut worst_ratio: f64 = 0.0;
    let mut max_iter = 0;
    for scene_idx in 0..10 {
        let s = random_desk_scene(&mut rng);
        assert_eq!(s.antennas(), 36);
        let exp = Experiment::new(s).map_err(|e| e.to_string())?;
        for frac in [0.0, 0.25, 0.5, 0.75] {
            let sol = solve_digital(&backend, &exp.problem(frac * exp.e_max), &cfg)
                .map_err(|e| format!("scene {scene_idx} at {frac}: {e}"))?;
            let d = &sol.diagnostics;
            let slack = cfg.solver_accuracy * exp.scene.transmit_power * exp.kernel.trace();
            ensure(
                d.converged,
                format!(
                    "scene {scene_idx} (ROI at {:?}, receivers {:?}) at {frac}: not converged ({})",
                    exp.scene.roi.center,
                    exp.scene.receivers.positions,
                    d.summary()
                ),
            )?;
            ensure(
                d.final_eigen_ratio <= 1e-3,
                format!(
                    "scene {scene_idx} at {frac}: eigenvalue ratio {:e}",
                    d.final_eigen_ratio
                ),
            )?;
            for w in d.records.windows(2) {
                ensure(
                    w[1].penalized <= w[0].penalized + slack,
                    format!(
                        "scene {scene_idx} at {frac}: penalized objective rose at iteration {}",
                        w[1].iteration
                    ),
                )?;
            }
            worst_ratio = worst_ratio.max(d.final_eigen_ratio);
            max_iter = max_iter.max(d.iterations);
        }
    }
    within(Duration::from_secs(600), start)?;
    Ok(format!(
        "worst eigenvalue ratio {worst_ratio:.1e}, at most {max_iter} iterations"
    ))
}

fn desk_sweep_config(arch: Vec<Architecture>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(SceneSource::Desk);
    cfg.er_grid = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    cfg.trials = 200;
    cfg.seed = 7;
    cfg.architectures = arch;
    cfg
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let cfg = desk_sweep_config(vec![Architecture::Digital]);
    let exp = Experiment::new(desk_scene()).map_err(|e| e.to_string())?;
    let points =
        run_tradeoff_sweep_on(&exp, &cfg, &InteriorPoint::default()).map_err(|e| e.to_string())?;
    let m: Vec<_> = points
        .iter()
        .map(|p| {
            p.metrics()
                .cloned()
                .ok_or_else(|| format!("point {} failed", p.fraction))
        })
        .collect::<Result<_, _>>()?;
    let objective_scale = m.iter().map(|x| x.objective).fold(0.0, f64::max);
    let mut problems = Vec::new();
    for (i, w) in m.windows(2).enumerate() {
        if w[1].objective < w[0].objective - 1e-6 * objective_scale {
            problems.push(format!("objective drops after fraction {}", cfg.er_grid[i]));
        }
        if w[1].condition < w[0].condition - 1e-6 * w[0].condition {
            problems.push(format!(
                "condition number drops {:.4e} -> {:.4e} after fraction {}",
                w[0].condition, w[1].condition, cfg.er_grid[i]
            ));
        }
    }
    let (rmse0, rmse1) = (m[0].rmse, m[m.len() - 1].rmse);
    if rmse1 <= rmse0 {
        problems.push(format!(
            "RMSE at full threshold {rmse1:.4e} not above RMSE at zero {rmse0:.4e}"
        ));
    }
    within(Duration::from_secs(900), start)?;
    let conds: Vec<String> = m.iter().map(|x| format!("{:.3e}", x.condition)).collect();
    if problems.is_empty() {
        Ok(format!(
            "condition numbers [{}], RMSE {rmse0:.3e} -> {rmse1:.3e}",
            conds.join(", ")
        ))
    } else {
        Err(format!(
            "{} (condition numbers [{}])",
            problems.join("; "),
            conds.join(", ")
        ))
    }
}

fn criterion_6() -> Outcome {
    let exp = Experiment::new(desk_scene()).map_err(|e| e.to_string())?;
    let backend = InteriorPoint::default();
    let cfg = SolverConfig::default();
    let full = solve_digital(&backend, &exp.problem(exp.e_max), &cfg).map_err(|e| e.to_string())?;
    let x_star = optimal_wpt_beam(&exp.channels.g, exp.scene.transmit_power).unwrap();
    let align = full.beam.as_vector().dotc(x_star.as_vector()).norm() / exp.scene.transmit_power;
    ensure(align >= 0.999, format!("alignment {align}"))?;
    let zero = solve_digital(&backend, &exp.problem(0.0), &cfg).map_err(|e| e.to_string())?;
    let obj = trace_objective(&exp.kernel, &zero.beam);
    for seed in 0..10 {
        let r =
            BeamVector::random(exp.channels.antennas(), exp.scene.transmit_power, seed).unwrap();
        let robj = trace_objective(&exp.kernel, &r);
        ensure(
            obj < robj,
            format!("random seed {seed} objective {robj:e} beats {obj:e}"),
        )?;
    }
    Ok(format!(
        "alignment {align:.6}, zero-threshold objective {obj:.2e} below all 10 random beams"
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let shapes = [(1, 2), (2, 2), (1, 8), (2, 4), (4, 2), (8, 1)];
    for (idx, &(chains, elements)) in shapes.iter().enumerate() {
        let n = chains * elements;
        assert!(n <= 8);
        let x = BeamVector::random(n, 1.0, idx as u64).unwrap();
        let w = CVector::from_fn(chains, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let phases = analog_update(&w, &x).map_err(|e| e.to_string())?;
        for (k, &p) in phases.iter().enumerate() {
            let xs = x.as_vector()[k];
            let wi = w[k / elements];
            let ours = (xs - wi * C64::from_polar(1.0, p)).norm();
            let grid = (0..3600)
                .map(|g| (xs - wi * C64::from_polar(1.0, (g as f64 * 0.1).to_radians())).norm())
                .fold(f64::INFINITY, f64::min);
            ensure(
                ours <= grid + 1e-12,
                format!("shape {chains}×{elements} element {k}: grid beats phase"),
            )?;
        }

        let p_t = 1.0;
        let phases0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let w0 = CVector::from_fn(chains, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w0 = w0.scale((p_t / elements as f64).sqrt() / w0.norm());
        let composable = HybridPrecoder::new(chains, elements, phases0, w0)
            .unwrap()
            .compose();
        let (_, res) =
            alternating_optimize(&composable, chains, elements, p_t, 10, 70 + idx as u64)
                .map_err(|e| e.to_string())?;
        ensure(
            res[9] <= 1e-8 * p_t.sqrt(),
            format!("shape {chains}×{elements}: residual {:e}", res[9]),
        )?;

        let (_, res) = alternating_optimize(&x, chains, elements, p_t, 10, 80 + idx as u64)
            .map_err(|e| e.to_string())?;
        ensure(
            (res[1] - res[9]).abs() <= 1e-10,
            format!("shape {chains}×{elements}: residual moved after round 2"),
        )?;
    }
    Ok(format!(
        "{} shapes: grid optimality, exact recovery, two-round fixed point",
        shapes.len()
    ))
}

fn criterion_8() -> Outcome {
    let mut cfg = ExperimentConfig::new(SceneSource::Desk);
    cfg.seed = 8;
    let backend = InteriorPoint::default();
    let base = desk_scene();
    let rows =
        run_rf_chain_sweep_on(&base, 6, &cfg, &[6, 8, 10], &backend).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for r in &rows {
        let (d, h) = r
            .outcome
            .clone()
            .map_err(|e| format!("{} chains: {e}", r.chains))?;
        ensure(
            h >= d - 1e-6,
            format!(
                "{} chains at {}: hybrid {h:.4e} below digital {d:.4e}",
                r.chains, r.fraction,
            ),
        )?;
        lines.push(format!("{}×6@{}: {d:.3e}/{h:.3e}", r.chains, r.fraction));
    }
    let single = run_rf_chain_sweep_on(&base, 1, &cfg, &[16, 20, 24], &backend)
        .map_err(|e| e.to_string())?;
    for r in &single {
        let (d, h) = r
            .outcome
            .clone()
            .map_err(|e| format!("{} chains: {e}", r.chains))?;
        ensure(
            h == d || (h - d).abs() <= 1e-6 * d,
            format!(
                "{}×1 at {}: hybrid {h:e} differs from digital {d:e}",
                r.chains, r.fraction
            ),
        )?;
    }
    Ok(format!(
        "digital/hybrid condition numbers {}; one element per chain matches",
        lines.join(", ")
    ))
}

fn criterion_9() -> Outcome {
    let exp = Experiment::new(desk_scene()).map_err(|e| e.to_string())?;
    let beam = BeamVector::random(exp.channels.antennas(), exp.scene.transmit_power, 9).unwrap();
    let cond = condition_number(&equivalent_channel(&exp.channels, &beam).unwrap()).unwrap();
    ensure(cond.is_finite(), "equivalent channel is rank deficient")?;
    let clean = run_imaging_experiment(&exp.channels, 0.0, 1, 0, &beam, &exp.truth)
        .map_err(|e| e.to_string())?;
    ensure(
        clean.rmse <= 1e-6,
        format!("noiseless error {:e}", clean.rmse),
    )?;
    let sigma2 = exp.scene.noise_power;
    let a = run_imaging_experiment(&exp.channels, sigma2, 200, 90, &beam, &exp.truth)
        .map_err(|e| e.to_string())?;
    let b = run_imaging_experiment(&exp.channels, 2.0 * sigma2, 200, 90, &beam, &exp.truth)
        .map_err(|e| e.to_string())?;
    let ratio = b.rmse / a.rmse;
    ensure(
        (ratio / 2f64.sqrt() - 1.0).abs() <= 0.10,
        format!("RMSE ratio {ratio} for doubled noise"),
    )?;
    Ok(format!(
        "noiseless error {:.1e}, doubled-noise RMSE ratio {ratio:.4}",
        clean.rmse
    ))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_iwpt"))
            .args([
                "tradeoff",
                "--preset",
                "desk",
                "--er-grid",
                "0,0.5,1",
                "--trials",
                "20",
                "--seed",
                "5",
            ])
            .arg("--out")
            .arg(&out)
            .arg("--keep-going")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            status.status.success(),
            String::from_utf8_lossy(&status.stderr).into_owned(),
        )?;
        std::fs::read(out.join("tradeoff.csv")).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a")?, run("b")?);
    ensure(!a.is_empty() && a == b, "tradeoff CSVs differ")?;
    Ok(format!("two runs wrote identical {}-byte CSVs", a.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("trace identity", criterion_1),
        ("closed-form power transfer", criterion_2),
        ("two-antenna solver sanity", criterion_3),
        ("rank-one convergence", criterion_4),
        ("trade-off monotonicity", criterion_5),
        ("endpoint consistency", criterion_6),
        ("phase update optimality", criterion_7),
        ("hybrid suboptimality ordering", criterion_8),
        ("imaging round trip", criterion_9),
        ("reproducibility", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.1?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{t:.1?}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
