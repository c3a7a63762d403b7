//! Fully digital illumination design.
//!
//! The imaging surrogate `tr(H H^H)` with `H = H_R diag(H_T x)` equals the
//! quadratic form `x^H T x` with `T = H_T^H D H_T`, where `D` keeps only the
//! diagonal of `H_R^H H_R` (the column energies of `H_R`). The full Gram
//! `H_T^H H_R^H H_R H_T` would add cross terms between cells that the
//! Frobenius norm of `H` does not contain. Lifting `x` to
//! `R = x x^H` turns the trade-off problem into a semidefinite program with a
//! rank-one constraint, which is replaced by the penalty
//! `η (tr R − ‖R‖₂)`. The concave part `−‖R‖₂` is linearized at the previous
//! iterate, giving a sequence of convex subproblems
//!
//! ```text
//! minimize    tr(T R) + η (tr R − ‖R_prev‖₂ − tr(u u^H (R − R_prev)))
//! subject to  ζ tr(G R G^H) ≥ E_r,  tr R = P_t,  R ⪰ 0
//! ```
//!
//! started from the power-optimal covariance. The beam is the scaled
//! dominant eigenvector of the final iterate.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::ChannelSet;
use crate::imaging::BeamVector;
use crate::linalg::{
    embed_hermitian, extract_hermitian, fix_global_phase, hermitian_eigen, hermitian_part, outer,
    trace_product,
};
use crate::output::{fmt_f64, Table};
use crate::sdp::{ConicBackend, LinearConstraint, SdpProblem, SdpStatus};
use crate::wpt::{beam_power, e_max, optimal_wpt_beam, CovarianceMatrix};
use crate::{CMatrix, Error, Result, C64};

/// Relative margin under which a threshold counts as equal to `E_max`.
const SATURATION_TOL: f64 = 1e-9;

/// `T = H_T^H diag(‖H_R[:, k]‖²) H_T`, Hermitian PSD, N×N.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceKernel(CMatrix);

impl TraceKernel {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Objective value of a covariance, `tr(T R)`.
    pub fn evaluate(&self, r: &CMatrix) -> f64 {
        trace_product(&self.0, r).re
    }
}

pub fn build_trace_kernel(ch: &ChannelSet) -> TraceKernel {
    let mut weighted = ch.h_t.clone();
    for (k, mut row) in weighted.row_iter_mut().enumerate() {
        row *= C64::from(ch.h_r.column(k).norm());
    }
    TraceKernel(hermitian_part(&(weighted.adjoint() * weighted)))
}

/// `x^H T x` (real part; the imaginary part is rounding noise).
pub fn trace_objective(t: &TraceKernel, x: &BeamVector) -> f64 {
    let v = x.as_vector();
    v.dotc(&(t.matrix() * v)).re
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Explicit penalty weight η; `None` derives it from the kernel.
    pub penalty: Option<f64>,
    /// Multiplier of `tr(T)/N` when the penalty is derived.
    pub penalty_scale: f64,
    /// Maximum number of convex subproblems.
    pub max_iterations: usize,
    /// Rank-one residual `tr R − ‖R‖₂` tolerance, relative to `P_t`.
    pub rank_tolerance: f64,
    /// Relative change of the penalized objective that counts as stationary;
    /// changes below `solver_accuracy · P_t · tr(T)` always do.
    pub objective_tolerance: f64,
    /// Accuracy passed to the conic backend.
    pub solver_accuracy: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            penalty: None,
            penalty_scale: 1e-4,
            max_iterations: 50,
            rank_tolerance: 1e-6,
            objective_tolerance: 1e-8,
            solver_accuracy: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn penalty_for(&self, t: &TraceKernel) -> f64 {
        self.penalty
            .unwrap_or_else(|| self.penalty_scale * t.trace() / t.dim().max(1) as f64)
    }
}

/// Spectral summary of a Hermitian PSD iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSummary {
    /// `tr R − ‖R‖₂`.
    pub residual: f64,
    /// `λ₂ / λ₁`.
    pub eigen_ratio: f64,
}

pub fn rank_summary(r: &CMatrix) -> RankSummary {
    let (values, _) = hermitian_eigen(r);
    let l1 = values.first().copied().unwrap_or(0.0);
    let l2 = values.get(1).copied().unwrap_or(0.0).max(0.0);
    RankSummary {
        residual: r.trace().re - l1,
        eigen_ratio: if l1 > 0.0 { l2 / l1 } else { 0.0 },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `tr(T R)`.
    pub objective: f64,
    /// `tr R − ‖R‖₂`.
    pub penalty_residual: f64,
    /// `tr(T R) + η (tr R − ‖R‖₂)`.
    pub penalized: f64,
    pub eigen_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveDiagnostics {
    pub penalty: f64,
    /// Iteration 0 is the power-optimal starting point.
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    /// Rank-one and stationarity tolerances both met.
    pub converged: bool,
    pub final_eigen_ratio: f64,
    /// `ζ ‖G x‖² − E_r` at the extracted beam, watts.
    pub power_slack: f64,
    /// `‖x‖² − P_t` at the extracted beam, watts.
    pub trace_slack: f64,
    /// The rank-one extraction lost the power constraint.
    pub wpt_violated: bool,
    pub flags: Vec<String>,
}

impl SolveDiagnostics {
    /// CSV with columns `iteration,objective,penalty_residual,lambda2_over_lambda1`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "iteration",
            "objective",
            "penalty_residual",
            "lambda2_over_lambda1",
        ]);
        for r in &self.records {
            t.push(vec![
                r.iteration.to_string(),
                fmt_f64(r.objective),
                fmt_f64(r.penalty_residual),
                fmt_f64(r.eigen_ratio),
            ]);
        }
        t
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.to_table().write(path)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "iterations={} converged={} lambda2/lambda1={:e} power_slack={:e}",
            self.iterations, self.converged, self.final_eigen_ratio, self.power_slack
        );
        for f in &self.flags {
            let _ = write!(s, " [{f}]");
        }
        s
    }
}

/// Inputs shared by every subproblem of one solve.
#[derive(Clone, Copy, Debug)]
pub struct TradeoffProblem<'a> {
    pub kernel: &'a TraceKernel,
    pub g: &'a CMatrix,
    pub transmit_power: f64,
    /// Required sum harvested power `E_r`, watts.
    pub threshold: f64,
    pub efficiency: f64,
}

impl TradeoffProblem<'_> {
    fn check(&self) -> Result<f64> {
        let n = self.kernel.dim();
        if self.g.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "power channel columns",
                expected: n,
                found: self.g.ncols(),
            });
        }
        let e_max = e_max(self.g, self.transmit_power, self.efficiency)?;
        if self.threshold > e_max * (1.0 + SATURATION_TOL) {
            return Err(Error::Infeasible {
                requested: self.threshold,
                maximum: e_max,
            });
        }
        Ok(e_max)
    }

    fn saturated(&self, e_max: f64) -> bool {
        self.threshold >= e_max * (1.0 - SATURATION_TOL)
    }
}

/// One linearized subproblem, solved through `backend`.
///
/// Complex Hermitian matrices enter the backend through the real embedding
/// `[[Re, −Im], [Im, Re]]`; every coefficient matrix is halved because the
/// embedding doubles traces.
pub fn solve_qsdp_subproblem(
    backend: &dyn ConicBackend,
    problem: &TradeoffProblem<'_>,
    r_prev: &CovarianceMatrix,
    penalty: f64,
    accuracy: f64,
) -> Result<CovarianceMatrix> {
    let e_max = problem.check()?;
    let n = problem.kernel.dim();
    if r_prev.matrix().nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "previous covariance",
            expected: n,
            found: r_prev.matrix().nrows(),
        });
    }
    if problem.saturated(e_max) {
        // the feasible set collapses onto the power-optimal covariance
        let x = optimal_wpt_beam(problem.g, problem.transmit_power)?;
        return Ok(CovarianceMatrix::from_beam(&x));
    }

    let (_, vectors) = hermitian_eigen(r_prev.matrix());
    let u = vectors.column(0).into_owned();
    let objective = problem.kernel.matrix() + (CMatrix::identity(n, n) - outer(&u)).scale(penalty);
    let gram = (problem.g.adjoint() * problem.g).scale(problem.efficiency);

    let sdp = SdpProblem {
        objective: embed_hermitian(&objective).scale(0.5),
        equalities: vec![LinearConstraint {
            coefficients: nalgebra::DMatrix::identity(2 * n, 2 * n).scale(0.5),
            rhs: problem.transmit_power,
        }],
        inequalities: vec![LinearConstraint {
            coefficients: embed_hermitian(&hermitian_part(&gram)).scale(0.5),
            rhs: problem.threshold,
        }],
    };
    let sol = backend.solve(&sdp, accuracy)?;
    let usable = sol.status == SdpStatus::Optimal
        || (sol.primal_infeasibility < 1e2 * accuracy
            && sol.dual_infeasibility < 1e2 * accuracy
            && sol.relative_gap < 1e2 * accuracy);
    if !usable {
        return Err(Error::Solver {
            iterations: sol.iterations,
            reason: format!(
                "{:?}: primal infeasibility {:e}, dual infeasibility {:e}, gap {:e}",
                sol.status, sol.primal_infeasibility, sol.dual_infeasibility, sol.relative_gap
            ),
        });
    }
    CovarianceMatrix::new(extract_hermitian(&sol.primal))
}

/// Result of [`solve_digital`].
#[derive(Clone, Debug)]
pub struct DigitalSolution {
    pub beam: BeamVector,
    pub covariance: CovarianceMatrix,
    pub diagnostics: SolveDiagnostics,
}

fn record(iteration: usize, kernel: &TraceKernel, r: &CMatrix, penalty: f64) -> IterationRecord {
    let objective = kernel.evaluate(r);
    let rank = rank_summary(r);
    IterationRecord {
        iteration,
        objective,
        penalty_residual: rank.residual,
        penalized: objective + penalty * rank.residual,
        eigen_ratio: rank.eigen_ratio,
    }
}

/// Penalized SCA from the power-optimal covariance.
///
/// Stops once the iterate is rank one within `rank_tolerance · P_t` and the
/// penalized objective has stopped moving, or after `max_iterations`
/// subproblems; in the latter case `diagnostics.converged` is false and the
/// best-effort beam is still returned.
pub fn solve_digital(
    backend: &dyn ConicBackend,
    problem: &TradeoffProblem<'_>,
    cfg: &SolverConfig,
) -> Result<DigitalSolution> {
    let e_max = problem.check()?;
    let p_t = problem.transmit_power;
    let kernel = problem.kernel;
    let penalty = cfg.penalty_for(kernel);
    // objective changes below the backend's resolution are noise
    let floor = cfg.solver_accuracy * p_t * kernel.trace();

    let x_star = optimal_wpt_beam(problem.g, p_t)?;
    let mut r = CovarianceMatrix::from_beam(&x_star);
    let mut diag = SolveDiagnostics {
        penalty,
        ..Default::default()
    };
    diag.records.push(record(0, kernel, r.matrix(), penalty));

    if problem.saturated(e_max) {
        diag.converged = true;
    } else {
        for t in 1..=cfg.max_iterations {
            r = solve_qsdp_subproblem(backend, problem, &r, penalty, cfg.solver_accuracy)?;
            let rec = record(t, kernel, r.matrix(), penalty);
            let prev = diag.records.last().expect("initial record").penalized;
            let stationary =
                (rec.penalized - prev).abs() <= cfg.objective_tolerance * prev.abs() + floor;
            let rank_one = rec.penalty_residual < cfg.rank_tolerance * p_t;
            diag.records.push(rec);
            diag.iterations = t;
            if rank_one && stationary {
                diag.converged = true;
                break;
            }
        }
    }

    let (_, vectors) = hermitian_eigen(r.matrix());
    let mut u = vectors.column(0).into_owned();
    fix_global_phase(&mut u);
    let beam = BeamVector::with_power(u, p_t)?;

    let achieved = beam_power(problem.g, &beam, problem.efficiency);
    diag.final_eigen_ratio = diag.records.last().map_or(0.0, |r| r.eigen_ratio);
    diag.power_slack = achieved - problem.threshold;
    diag.trace_slack = beam.power() - p_t;
    if achieved < problem.threshold * (1.0 - 1e-6) {
        diag.wpt_violated = true;
        diag.flags
            .push("rank-1 extraction violated WPT constraint".into());
    }
    if !diag.converged {
        diag.flags.push(format!(
            "no rank-one convergence within {} iterations",
            cfg.max_iterations
        ));
    }
    Ok(DigitalSolution {
        beam,
        covariance: r,
        diagnostics: diag,
    })
}

/// Convenience wrapper building the kernel from channels.
pub fn solve_digital_for_channels(
    backend: &dyn ConicBackend,
    ch: &ChannelSet,
    transmit_power: f64,
    threshold: f64,
    efficiency: f64,
    cfg: &SolverConfig,
) -> Result<DigitalSolution> {
    let kernel = build_trace_kernel(ch);
    solve_digital(
        backend,
        &TradeoffProblem {
            kernel: &kernel,
            g: &ch.g,
            transmit_power,
            threshold,
            efficiency,
        },
        cfg,
    )
}
