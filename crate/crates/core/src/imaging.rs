//! Equivalent imaging channel, simulated reception, least-squares
//! reconstruction and imaging-quality metrics.

use nalgebra::SVD;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelSet;
use crate::scene::ScatteringField;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative singular-value cutoff of the pseudo-inverse.
pub const PINV_RTOL: f64 = 1e-10;
/// Below this ratio σ_min/σ_max the condition number is reported as infinite.
pub const COND_RTOL: f64 = 1e-14;

/// Illumination weights `x`, one complex entry per antenna (√W).
#[derive(Clone, Debug, PartialEq)]
pub struct BeamVector(CVector);

impl BeamVector {
    /// Wraps `x` as is, without enforcing any power.
    pub fn new(x: CVector) -> Self {
        BeamVector(x)
    }

    /// Rescales `x` to `‖x‖² = power`.
    pub fn with_power(x: CVector, power: f64) -> Result<Self> {
        let norm = x.norm();
        if norm == 0.0 {
            return Err(Error::Empty("beam"));
        }
        Ok(BeamVector(x.scale(power.sqrt() / norm)))
    }

    /// Circularly-symmetric Gaussian direction scaled to `power`.
    pub fn random(len: usize, power: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = CVector::from_fn(len, |_, _| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        Self::with_power(x, power)
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// ‖x‖².
    pub fn power(&self) -> f64 {
        self.0.norm_squared()
    }

    /// |⟨x, y⟩| / (‖x‖ ‖y‖), 1 when the beams agree up to a global phase.
    pub fn alignment(&self, other: &BeamVector) -> f64 {
        self.0.dotc(&other.0).norm() / (self.0.norm() * other.0.norm())
    }
}

/// `H = H_R diag(H_T x)`, N×K.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalentChannel(pub CMatrix);

impl EquivalentChannel {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

pub fn equivalent_channel(ch: &ChannelSet, x: &BeamVector) -> Result<EquivalentChannel> {
    if x.len() != ch.antennas() {
        return Err(Error::DimensionMismatch {
            context: "beam length",
            expected: ch.antennas(),
            found: x.len(),
        });
    }
    let illumination = &ch.h_t * x.as_vector();
    let mut h = ch.h_r.clone();
    for (k, mut col) in h.column_iter_mut().enumerate() {
        col *= illumination[k];
    }
    Ok(EquivalentChannel(h))
}

/// `y = H γ + n` with `n ~ CN(0, σ² I)` drawn from a generator seeded by `seed`.
pub fn simulate_received(
    ch: &ChannelSet,
    x: &BeamVector,
    gamma: &ScatteringField,
    noise_power: f64,
    seed: u64,
) -> Result<CVector> {
    let h = equivalent_channel(ch, x)?;
    if gamma.len() != ch.cells() {
        return Err(Error::DimensionMismatch {
            context: "scattering field length",
            expected: ch.cells(),
            found: gamma.len(),
        });
    }
    let mut y = h.matrix() * &gamma.gamma;
    if noise_power > 0.0 {
        let sigma = (noise_power / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in y.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += C64::new(sigma * re, sigma * im);
        }
    }
    Ok(y)
}

/// Moore-Penrose pseudo-inverse with singular values below `rtol·σ_max` dropped.
pub fn pseudo_inverse(h: &CMatrix, rtol: f64) -> CMatrix {
    let svd = SVD::new(h.clone(), true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rtol * s_max;
    let mut pinv = CMatrix::zeros(h.ncols(), h.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let v = v_t.row(i).adjoint();
            let u_h = u.column(i).adjoint();
            pinv += (v * u_h).scale(1.0 / s);
        }
    }
    pinv
}

/// `γ̂ = H† y`.
pub fn ls_estimate(h: &EquivalentChannel, y: &CVector) -> Result<CVector> {
    let m = h.matrix();
    if y.len() != m.nrows() {
        return Err(Error::DimensionMismatch {
            context: "received vector length",
            expected: m.nrows(),
            found: y.len(),
        });
    }
    Ok(pseudo_inverse(m, PINV_RTOL) * y)
}

/// σ_max / σ_min over the min(N, K) singular values; `+∞` when
/// σ_min < 1e-14 σ_max.
pub fn condition_number(h: &EquivalentChannel) -> Result<f64> {
    let m = h.matrix();
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroMatrix("equivalent channel"));
    }
    let s = m.clone().singular_values();
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let s_min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if s_min < COND_RTOL * s_max {
        Ok(f64::INFINITY)
    } else {
        Ok(s_max / s_min)
    }
}

/// `sqrt(mean_t ‖γ̂_t − γ‖²)`.
pub fn rmse(estimates: &[CVector], truth: &CVector) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Empty("estimate list"));
    }
    let mut acc = 0.0;
    for e in estimates {
        if e.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                context: "estimate length",
                expected: truth.len(),
                found: e.len(),
            });
        }
        acc += (e - truth).norm_squared();
    }
    Ok((acc / estimates.len() as f64).sqrt())
}
