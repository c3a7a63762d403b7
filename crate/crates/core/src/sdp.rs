//! Conic backend for the covariance design subproblems.
//!
//! Problems are real symmetric semidefinite programs in standard form
//!
//! ```text
//! minimize    <C, X>
//! subject to  <A_i, X>  = b_i     (equalities)
//!             <A_j, X> >= b_j     (inequalities)
//!             X ⪰ 0
//! ```
//!
//! The beam-design code only talks to [`ConicBackend`]; [`InteriorPoint`] is
//! the bundled implementation, an infeasible-start primal-dual path-following
//! method with the HKM search direction and Mehrotra predictor-corrector
//! steps. Inequalities get a nonnegative slack each.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::{Error, Result};

/// `<coefficients, X> (=|>=) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: DMatrix<f64>,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub objective: DMatrix<f64>,
    pub equalities: Vec<LinearConstraint>,
    pub inequalities: Vec<LinearConstraint>,
}

impl SdpProblem {
    pub fn dim(&self) -> usize {
        self.objective.nrows()
    }

    fn check(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Empty("semidefinite variable"));
        }
        for c in self.equalities.iter().chain(&self.inequalities) {
            if c.coefficients.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    context: "constraint matrix",
                    expected: n,
                    found: c.coefficients.nrows(),
                });
            }
        }
        if self.objective.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "objective matrix",
                expected: n,
                found: self.objective.ncols(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    /// All residuals and the duality gap are below the requested accuracy.
    Optimal,
    /// Iteration budget exhausted; the last iterate is returned.
    MaxIterations,
    /// Step lengths collapsed before reaching the requested accuracy.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub primal: DMatrix<f64>,
    /// Dual multipliers, equalities first, then inequalities (all ≥ 0).
    pub multipliers: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub status: SdpStatus,
    /// Relative residual norms at termination.
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
}

/// Anything that can solve an [`SdpProblem`] to a relative accuracy.
pub trait ConicBackend: Send + Sync {
    fn solve(&self, problem: &SdpProblem, accuracy: f64) -> Result<SdpSolution>;
}

#[derive(Clone, Debug)]
pub struct InteriorPoint {
    pub max_iterations: usize,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        InteriorPoint {
            max_iterations: 100,
        }
    }
}

/// Search direction `(ΔX, Δy, ΔZ, Δs, Δz)`.
type Direction = (DMatrix<f64>, DVector<f64>, DMatrix<f64>, Vec<f64>, Vec<f64>);

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest α with `x + α dx ⪰ 0` (may be infinite); `None` if `x` is not
/// numerically positive definite.
fn max_psd_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(x.clone())?;
    let l = chol.l();
    let tmp = l.solve_lower_triangular(dx)?;
    let mut w = l.solve_lower_triangular(&tmp.transpose())?;
    symmetrize(&mut w);
    let lmin = w
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Some(if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    })
}

fn max_lp_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Normalized internal copy of a problem.
struct Scaled {
    c: DMatrix<f64>,
    a: Vec<DMatrix<f64>>,
    b: DVector<f64>,
    n_eq: usize,
    c_scale: f64,
    a_scale: Vec<f64>,
    x_scale: f64,
}

impl Scaled {
    fn new(p: &SdpProblem) -> Result<Self> {
        let c_norm = p.objective.norm();
        let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut a_scale = Vec::new();
        for con in p.equalities.iter().chain(&p.inequalities) {
            let s = con.coefficients.norm();
            if s == 0.0 {
                return Err(Error::ZeroMatrix("constraint"));
            }
            a.push(con.coefficients.scale(1.0 / s));
            b.push(con.rhs / s);
            a_scale.push(s);
        }
        let b_max = b.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
        let x_scale = b_max.max(1e-300);
        let b = DVector::from_iterator(b.len(), b.into_iter().map(|v| v / x_scale));
        Ok(Scaled {
            c: p.objective.scale(1.0 / c_scale),
            a,
            b,
            n_eq: p.equalities.len(),
            c_scale,
            a_scale,
            x_scale,
        })
    }
}

impl ConicBackend for InteriorPoint {
    fn solve(&self, problem: &SdpProblem, accuracy: f64) -> Result<SdpSolution> {
        problem.check()?;
        let sc = Scaled::new(problem)?;
        let n = problem.dim();
        let m = sc.a.len();
        let n_eq = sc.n_eq;
        let p = m - n_eq;
        let nu = (n + p) as f64;

        // slack j belongs to constraint n_eq + j with coefficient -1
        let xi = 10f64.max((n as f64).sqrt());
        let mut x = DMatrix::identity(n, n).scale(xi);
        let mut z = DMatrix::identity(n, n).scale(xi);
        let mut s = vec![xi; p];
        let mut zl = vec![xi; p];
        let mut y = DVector::zeros(m);

        let b_norm = sc.b.norm();
        let c_norm = sc.c.norm();
        let mut frac = 0.9;
        let mut status = SdpStatus::MaxIterations;
        let mut stalls = 0;
        let mut iter = 0;
        let (mut pinf, mut dinf, mut gap);

        loop {
            // residuals
            let mut rp = sc.b.clone();
            for i in 0..m {
                rp[i] -= inner(&sc.a[i], &x);
            }
            for j in 0..p {
                rp[n_eq + j] += s[j];
            }
            let mut aty = DMatrix::zeros(n, n);
            for i in 0..m {
                aty += sc.a[i].scale(y[i]);
            }
            let rd = &sc.c - &aty - &z;
            let rz: Vec<f64> = (0..p).map(|j| y[n_eq + j] - zl[j]).collect();

            let pobj = inner(&sc.c, &x);
            let dobj = sc.b.dot(&y);
            let compl = inner(&x, &z) + s.iter().zip(&zl).map(|(a, b)| a * b).sum::<f64>();
            let mu = compl / nu;
            pinf = rp.norm() / (1.0 + b_norm);
            let rz_norm = rz.iter().map(|v| v * v).sum::<f64>().sqrt();
            dinf = (rd.norm() + rz_norm) / (1.0 + c_norm);
            gap = (pobj - dobj).abs().max(compl) / (1.0 + pobj.abs() + dobj.abs());

            if pinf < accuracy && dinf < accuracy && gap < accuracy {
                status = SdpStatus::Optimal;
                break;
            }
            if iter >= self.max_iterations {
                break;
            }
            if stalls >= 3 {
                status = SdpStatus::Stalled;
                break;
            }
            iter += 1;

            let zinv = match Cholesky::new(z.clone()) {
                Some(ch) => ch.inverse(),
                None => {
                    status = SdpStatus::Stalled;
                    break;
                }
            };
            let x_a_zinv: Vec<DMatrix<f64>> = sc.a.iter().map(|ai| &x * ai * &zinv).collect();
            let mut schur = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    schur[(i, j)] = inner(&sc.a[i], &x_a_zinv[j]);
                }
            }
            for j in 0..p {
                schur[(n_eq + j, n_eq + j)] += s[j] / zl[j];
            }
            let lu = schur.lu();

            let x_rd_zinv = &x * &rd * &zinv;
            let direction = |target: f64,
                             corr_sdp: Option<&DMatrix<f64>>,
                             corr_lp: Option<&[f64]>|
             -> Option<Direction> {
                let mut k = -&x - &x_rd_zinv;
                if target > 0.0 {
                    k += zinv.scale(target);
                }
                if let Some(c) = corr_sdp {
                    k -= c;
                }
                let k_lp: Vec<f64> = (0..p)
                    .map(|j| {
                        let mut v = target / zl[j] - s[j] - s[j] / zl[j] * rz[j];
                        if let Some(c) = corr_lp {
                            v -= c[j];
                        }
                        v
                    })
                    .collect();
                let mut rhs = rp.clone();
                for i in 0..m {
                    rhs[i] -= inner(&sc.a[i], &k);
                }
                for j in 0..p {
                    rhs[n_eq + j] += k_lp[j];
                }
                let dy = lu.solve(&rhs)?;
                let mut dz = rd.clone();
                for i in 0..m {
                    dz -= sc.a[i].scale(dy[i]);
                }
                let mut dx = k;
                for i in 0..m {
                    dx += x_a_zinv[i].scale(dy[i]);
                }
                symmetrize(&mut dx);
                let dzl: Vec<f64> = (0..p).map(|j| rz[j] + dy[n_eq + j]).collect();
                let ds: Vec<f64> = (0..p)
                    .map(|j| {
                        let mut v = target / zl[j] - s[j] - s[j] / zl[j] * dzl[j];
                        if let Some(c) = corr_lp {
                            v -= c[j];
                        }
                        v
                    })
                    .collect();
                Some((dx, dy, dz, ds, dzl))
            };

            let steps = |dx: &DMatrix<f64>, dz: &DMatrix<f64>, ds: &[f64], dzl: &[f64]| {
                let ap = max_psd_step(&x, dx).map(|a| a.min(max_lp_step(&s, ds)));
                let ad = max_psd_step(&z, dz).map(|a| a.min(max_lp_step(&zl, dzl)));
                (ap, ad)
            };

            // predictor
            let Some((dx_a, _, dz_a, ds_a, dzl_a)) = direction(0.0, None, None) else {
                status = SdpStatus::Stalled;
                break;
            };
            let (Some(ap), Some(ad)) = steps(&dx_a, &dz_a, &ds_a, &dzl_a) else {
                status = SdpStatus::Stalled;
                break;
            };
            let ap = ap.min(1.0);
            let ad = ad.min(1.0);
            let x_aff = &x + dx_a.scale(ap);
            let z_aff = &z + dz_a.scale(ad);
            let lp_aff: f64 = (0..p)
                .map(|j| (s[j] + ap * ds_a[j]) * (zl[j] + ad * dzl_a[j]))
                .sum();
            let mu_aff = (inner(&x_aff, &z_aff) + lp_aff) / nu;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let corr = &dx_a * &dz_a * &zinv;
            let corr_lp: Vec<f64> = (0..p).map(|j| ds_a[j] * dzl_a[j] / zl[j]).collect();
            let Some((dx, dy, dz, ds, dzl)) = direction(sigma * mu, Some(&corr), Some(&corr_lp))
            else {
                status = SdpStatus::Stalled;
                break;
            };
            let (Some(ap), Some(ad)) = steps(&dx, &dz, &ds, &dzl) else {
                status = SdpStatus::Stalled;
                break;
            };
            let ap = (frac * ap).min(1.0);
            let ad = (frac * ad).min(1.0);

            x += dx.scale(ap);
            symmetrize(&mut x);
            z += dz.scale(ad);
            symmetrize(&mut z);
            y += dy.scale(ad);
            for j in 0..p {
                s[j] += ap * ds[j];
                zl[j] += ad * dzl[j];
            }
            frac = 0.9 + 0.09 * ap.min(ad);
            if ap.min(ad) < 1e-10 {
                stalls += 1;
            } else {
                stalls = 0;
            }
        }

        let primal = x.scale(sc.x_scale);
        let multipliers: Vec<f64> = (0..m).map(|i| sc.c_scale * y[i] / sc.a_scale[i]).collect();
        let primal_objective = inner(&problem.objective, &primal);
        let dual_objective: f64 = problem
            .equalities
            .iter()
            .chain(&problem.inequalities)
            .zip(&multipliers)
            .map(|(c, y)| c.rhs * y)
            .sum();
        Ok(SdpSolution {
            primal,
            multipliers,
            primal_objective,
            dual_objective,
            iterations: iter,
            status,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            relative_gap: gap,
        })
    }
}
