//! Harvested power and the closed-form power-optimal illumination.

use crate::imaging::BeamVector;
use crate::linalg::{dominant_eigenpair, hermitian_asymmetry, outer, trace_product};
use crate::{CMatrix, Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// Transmit covariance `R = x x^H` (or any Hermitian PSD relaxation of it).
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(CMatrix);

impl CovarianceMatrix {
    pub fn new(r: CMatrix) -> Result<Self> {
        let asym = hermitian_asymmetry(&r);
        if asym > HERMITIAN_TOL {
            return Err(Error::NonHermitian(asym));
        }
        Ok(CovarianceMatrix(r))
    }

    pub fn from_beam(x: &BeamVector) -> Self {
        CovarianceMatrix(outer(x.as_vector()))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarvestedPower {
    /// `ζ g_m R g_m^H` per receiver, watts.
    pub per_user: Vec<f64>,
    /// `ζ tr(G R G^H)`, watts.
    pub total: f64,
}

pub fn harvested_power(g: &CMatrix, r: &CovarianceMatrix, zeta: f64) -> Result<HarvestedPower> {
    let r = r.matrix();
    if g.ncols() != r.nrows() {
        return Err(Error::DimensionMismatch {
            context: "covariance size",
            expected: g.ncols(),
            found: r.nrows(),
        });
    }
    let per_user: Vec<f64> = g
        .row_iter()
        .map(|row| {
            let gr = row * r;
            zeta * gr.dot(&row.conjugate()).re.max(0.0)
        })
        .collect();
    let total = zeta * trace_product(&(g * r), &g.adjoint()).re;
    Ok(HarvestedPower { per_user, total })
}

/// Harvested sum power of a beam, `ζ ‖G x‖²`.
pub fn beam_power(g: &CMatrix, x: &BeamVector, zeta: f64) -> f64 {
    zeta * (g * x.as_vector()).norm_squared()
}

fn check_nonzero(g: &CMatrix) -> Result<()> {
    if g.iter().all(|z| z.norm() == 0.0) {
        Err(Error::ZeroMatrix("power channel"))
    } else {
        Ok(())
    }
}

/// `√P_t v₁`, with `v₁` the dominant eigenvector of `G^H G`, phase-fixed so
/// its largest entry is real positive. Any vector in a degenerate top
/// eigenspace is equally optimal; the decomposition's pick is returned.
pub fn optimal_wpt_beam(g: &CMatrix, p_t: f64) -> Result<BeamVector> {
    check_nonzero(g)?;
    let (_, v) = dominant_eigenpair(&(g.adjoint() * g));
    BeamVector::with_power(v, p_t)
}

/// Largest achievable sum harvested power, `ζ P_t σ_max(G)²`.
pub fn e_max(g: &CMatrix, p_t: f64, zeta: f64) -> Result<f64> {
    check_nonzero(g)?;
    let (lambda, _) = dominant_eigenpair(&(g.adjoint() * g));
    Ok(zeta * p_t * lambda)
}
