//! Partially connected hybrid array.
//!
//! Chain `i` drives the `N_e` antennas `i·N_e .. (i+1)·N_e` through
//! unit-modulus phase shifters, so the analog matrix `Q` (N×N_d) has one
//! nonzero block per column and `Q^H Q = N_e I`. The beam is `x = Q w`.
//! The precoder is fitted to a fully digital beam `x*` by alternating the
//! least-squares digital update and the per-element closed-form phase update.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelSet;
use crate::digital::{
    build_trace_kernel, solve_digital, trace_objective, DigitalSolution, SolverConfig,
    TradeoffProblem,
};
use crate::imaging::{condition_number, equivalent_channel, BeamVector};
use crate::output::{fmt_f64, Table};
use crate::sdp::ConicBackend;
use crate::wpt::beam_power;
use crate::{CMatrix, CVector, Error, Result, C64};

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridPrecoder {
    chains: usize,
    elements: usize,
    /// `φ[i·N_e + l]`, radians in `[0, 2π)`.
    phases: Vec<f64>,
    w: CVector,
}

impl HybridPrecoder {
    pub fn new(chains: usize, elements: usize, phases: Vec<f64>, w: CVector) -> Result<Self> {
        if phases.len() != chains * elements {
            return Err(Error::DimensionMismatch {
                context: "phase count",
                expected: chains * elements,
                found: phases.len(),
            });
        }
        if w.len() != chains {
            return Err(Error::DimensionMismatch {
                context: "digital vector length",
                expected: chains,
                found: w.len(),
            });
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(HybridPrecoder {
            chains,
            elements,
            phases,
            w,
        })
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn digital(&self) -> &CVector {
        &self.w
    }

    /// `x_{i·N_e + l} = e^{jφ_{i,l}} w_i`.
    pub fn compose(&self) -> BeamVector {
        let x = CVector::from_fn(self.chains * self.elements, |n, _| {
            C64::from_polar(1.0, self.phases[n]) * self.w[n / self.elements]
        });
        BeamVector::new(x)
    }

    /// Dense N×N_d analog matrix.
    pub fn analog_matrix(&self) -> CMatrix {
        let mut q = CMatrix::zeros(self.chains * self.elements, self.chains);
        for (n, &p) in self.phases.iter().enumerate() {
            q[(n, n / self.elements)] = C64::from_polar(1.0, p);
        }
        q
    }

    /// Columns `chain,element,phase_radians,w_re,w_im`; `w` repeats per chain.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["chain", "element", "phase_radians", "w_re", "w_im"]);
        for (n, &p) in self.phases.iter().enumerate() {
            let i = n / self.elements;
            t.push(vec![
                i.to_string(),
                (n % self.elements).to_string(),
                fmt_f64(p),
                fmt_f64(self.w[i].re),
                fmt_f64(self.w[i].im),
            ]);
        }
        t
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.to_table().write(path)
    }
}

fn check_len(x: &BeamVector, chains: usize, elements: usize) -> Result<()> {
    if x.len() != chains * elements {
        return Err(Error::DimensionMismatch {
            context: "beam length vs chains × elements",
            expected: chains * elements,
            found: x.len(),
        });
    }
    Ok(())
}

/// Least-squares `w = (Q^H Q)^{-1} Q^H x* = Q^H x* / N_e`, rescaled so that
/// `‖Q w‖² = P_t`, i.e. `‖w‖² = P_t / N_e`.
pub fn digital_update(
    phases: &[f64],
    chains: usize,
    elements: usize,
    x_star: &BeamVector,
    p_t: f64,
) -> Result<CVector> {
    check_len(x_star, chains, elements)?;
    if phases.len() != chains * elements {
        return Err(Error::DimensionMismatch {
            context: "phase count",
            expected: chains * elements,
            found: phases.len(),
        });
    }
    let xs = x_star.as_vector();
    let w = CVector::from_fn(chains, |i, _| {
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..elements {
            let n = i * elements + l;
            acc += C64::from_polar(1.0, -phases[n]) * xs[n];
        }
        acc / elements as f64
    });
    let norm = w.norm();
    if norm == 0.0 {
        return Err(Error::Empty("digital precoder"));
    }
    Ok(w.scale((p_t / elements as f64).sqrt() / norm))
}

/// Per-element optimum for fixed `w`: `φ_{i,l} = ∠x*_{i·N_e+l} − ∠w_i`.
pub fn analog_update(w: &CVector, x_star: &BeamVector) -> Result<Vec<f64>> {
    let chains = w.len();
    if chains == 0 || !x_star.len().is_multiple_of(chains) {
        return Err(Error::DimensionMismatch {
            context: "beam length vs chains",
            expected: chains,
            found: x_star.len(),
        });
    }
    if let Some(i) = w.iter().position(|z| z.norm() == 0.0) {
        return Err(Error::UndefinedPhase(i));
    }
    let elements = x_star.len() / chains;
    Ok(x_star
        .as_vector()
        .iter()
        .enumerate()
        .map(|(n, z)| wrap_phase(z.arg() - w[n / elements].arg()))
        .collect())
}

/// Fits a hybrid precoder to `x_star` from seeded random phases.
///
/// Returns the precoder after `max_iterations` digital/analog rounds and the
/// residual `‖x* − Q w‖` after each round. The fixed point is reached in the
/// second round: the digital update of matched phases keeps every `∠w_i`.
pub fn alternating_optimize(
    x_star: &BeamVector,
    chains: usize,
    elements: usize,
    p_t: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<(HybridPrecoder, Vec<f64>)> {
    check_len(x_star, chains, elements)?;
    if max_iterations == 0 {
        return Err(Error::Config("at least one alternating iteration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases: Vec<f64> = (0..chains * elements)
        .map(|_| rng.random_range(0.0..TAU))
        .collect();
    let mut history = Vec::with_capacity(max_iterations);
    let mut w = CVector::zeros(chains);
    for _ in 0..max_iterations {
        w = digital_update(&phases, chains, elements, x_star, p_t)?;
        phases = analog_update(&w, x_star)?;
        let hp = HybridPrecoder {
            chains,
            elements,
            phases: phases.clone(),
            w: w.clone(),
        };
        history.push((x_star.as_vector() - hp.compose().as_vector()).norm());
    }
    Ok((HybridPrecoder::new(chains, elements, phases, w)?, history))
}

#[derive(Clone, Debug)]
pub struct HybridOutcome {
    pub digital: DigitalSolution,
    pub precoder: HybridPrecoder,
    pub beam: BeamVector,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub condition: f64,
    /// Sum harvested power of the hybrid beam; not clamped to the threshold.
    pub harvested: f64,
}

/// Hybrid trade-off parameters beyond the digital problem.
#[derive(Clone, Copy, Debug)]
pub struct HybridShape {
    pub chains: usize,
    pub elements: usize,
    pub iterations: usize,
    pub seed: u64,
}

/// Digital solve followed by hybrid matching of its beam.
pub fn hybrid_tradeoff(
    backend: &dyn ConicBackend,
    ch: &ChannelSet,
    transmit_power: f64,
    threshold: f64,
    efficiency: f64,
    cfg: &SolverConfig,
    shape: HybridShape,
) -> Result<HybridOutcome> {
    let kernel = build_trace_kernel(ch);
    let digital = solve_digital(
        backend,
        &TradeoffProblem {
            kernel: &kernel,
            g: &ch.g,
            transmit_power,
            threshold,
            efficiency,
        },
        cfg,
    )?;
    match_digital(ch, digital, transmit_power, efficiency, shape)
}

/// Hybrid matching of an existing digital solution.
pub fn match_digital(
    ch: &ChannelSet,
    digital: DigitalSolution,
    transmit_power: f64,
    efficiency: f64,
    shape: HybridShape,
) -> Result<HybridOutcome> {
    let (precoder, residuals) = alternating_optimize(
        &digital.beam,
        shape.chains,
        shape.elements,
        transmit_power,
        shape.iterations,
        shape.seed,
    )?;
    let beam = precoder.compose();
    let kernel = build_trace_kernel(ch);
    let objective = trace_objective(&kernel, &beam);
    let condition = condition_number(&equivalent_channel(ch, &beam)?)?;
    let harvested = beam_power(&ch.g, &beam, efficiency);
    Ok(HybridOutcome {
        digital,
        precoder,
        beam,
        residuals,
        objective,
        condition,
        harvested,
    })
}
