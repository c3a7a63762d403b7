//! Line-of-sight near-field channels between the array, the ROI cells and
//! the energy receivers.

use std::path::Path;

use nalgebra::Vector3;

use crate::output::write_matrix_csv;
use crate::scene::Scene;
use crate::{CMatrix, Error, Result, C64};

/// Element radiation profile `cos^q(θ)` on the front hemisphere, zero behind.
pub fn element_gain(theta: f64, exponent: f64) -> f64 {
    if theta > std::f64::consts::FRAC_PI_2 {
        return 0.0;
    }
    let c = theta.cos().max(0.0);
    if exponent == 0.0 {
        1.0
    } else {
        c.powf(exponent)
    }
}

/// `F(Θ) λ/(4πd) exp(-j 2π d/λ)` for one antenna/target pair.
pub fn link_coefficient(
    antenna: &Vector3<f64>,
    target: &Vector3<f64>,
    normal: &Vector3<f64>,
    wavelength: f64,
    exponent: f64,
) -> Option<C64> {
    let delta = target - antenna;
    let d = delta.norm();
    if d == 0.0 {
        return None;
    }
    let cos_theta = (delta.dot(normal) / d).clamp(-1.0, 1.0);
    let gain = element_gain(cos_theta.acos(), exponent);
    let amplitude = gain * wavelength / (4.0 * std::f64::consts::PI * d);
    let phase = -2.0 * std::f64::consts::PI * d / wavelength;
    Some(C64::from_polar(amplitude, phase))
}

/// The three channel matrices of a scene.
///
/// `h_t` is K×N (antennas to ROI cells), `h_r` is N×K and equals the plain
/// transpose of `h_t`, `g` is M×N with row `m` the channel to receiver `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h_t: CMatrix,
    pub h_r: CMatrix,
    pub g: CMatrix,
}

impl ChannelSet {
    /// Builds a set from a transmit channel and a power channel; the receive
    /// channel is the transpose of the transmit one.
    pub fn from_parts(h_t: CMatrix, g: CMatrix) -> Result<Self> {
        if g.nrows() > 0 && g.ncols() != h_t.ncols() {
            return Err(Error::DimensionMismatch {
                context: "power channel columns",
                expected: h_t.ncols(),
                found: g.ncols(),
            });
        }
        let h_r = h_t.transpose();
        Ok(ChannelSet { h_t, h_r, g })
    }

    pub fn antennas(&self) -> usize {
        self.h_t.ncols()
    }

    pub fn cells(&self) -> usize {
        self.h_t.nrows()
    }

    pub fn users(&self) -> usize {
        self.g.nrows()
    }

    /// Writes `h_t.csv`, `h_r.csv` and `g.csv` with columns `row,col,re,im`.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_matrix_csv(&dir.join("h_t.csv"), &self.h_t)?;
        write_matrix_csv(&dir.join("h_r.csv"), &self.h_r)?;
        write_matrix_csv(&dir.join("g.csv"), &self.g)?;
        Ok(())
    }
}

fn channel_matrix(
    targets: &[Vector3<f64>],
    antennas: &[Vector3<f64>],
    normal: &Vector3<f64>,
    wavelength: f64,
    exponent: f64,
) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(targets.len(), antennas.len());
    for (k, t) in targets.iter().enumerate() {
        for (n, a) in antennas.iter().enumerate() {
            m[(k, n)] = link_coefficient(a, t, normal, wavelength, exponent).ok_or(
                Error::ZeroDistance {
                    antenna: n,
                    target: k,
                },
            )?;
        }
    }
    Ok(m)
}

/// Deterministic LOS channels for a scene.
pub fn build_channels(s: &Scene) -> Result<ChannelSet> {
    let antennas = s.array.positions();
    let normal = s.array.unit_normal();
    let lambda = s.wavelength();
    let q = s.pattern_exponent;
    let h_t = channel_matrix(&s.roi.centers(), &antennas, &normal, lambda, q)?;
    let g = channel_matrix(&s.receivers.points(), &antennas, &normal, lambda, q)?;
    ChannelSet::from_parts(h_t, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{desk_scene, paper_scene, ArrayGeometry, ReceiverSet, RoiGrid};
    use std::f64::consts::PI;

    fn single(d: f64, q: f64) -> Scene {
        let mut s = paper_scene();
        s.array = ArrayGeometry {
            rows: 1,
            cols: 1,
            spacing: 0.01,
            reference: [0.0; 3],
            normal: [1.0, 0.0, 0.0],
        };
        s.roi = RoiGrid {
            cells: [1, 1],
            cell_size: 0.1,
            center: [d, 0.0, 0.0],
            normal: [1.0, 0.0, 0.0],
        };
        s.receivers = ReceiverSet::default();
        s.pattern_exponent = q;
        s
    }

    #[test]
    fn gain_values() {
        assert_eq!(element_gain(0.0, 1.0), 1.0);
        assert_eq!(element_gain(PI / 2.0 + 0.1, 1.0), 0.0);
        assert_eq!(element_gain(PI / 2.0 + 0.1, 0.0), 0.0);
        assert!((element_gain(PI / 3.0, 2.0) - 0.25).abs() < 1e-15);
        assert_eq!(element_gain(1.0, 0.0), 1.0);
    }

    #[test]
    fn single_link_formula() {
        let d = 1.7;
        let s = single(d, 0.0);
        let ch = build_channels(&s).unwrap();
        let lambda = s.wavelength();
        let expected = C64::from_polar(lambda / (4.0 * PI * d), -2.0 * PI * d / lambda);
        assert_eq!(ch.h_t.shape(), (1, 1));
        assert!((ch.h_t[(0, 0)] - expected).norm() < 1e-18);
        assert_eq!(ch.g.shape(), (0, 1));
    }

    #[test]
    fn full_scene_shapes() {
        let ch = build_channels(&paper_scene()).unwrap();
        assert_eq!(ch.h_t.shape(), (100, 169));
        assert_eq!(ch.h_r.shape(), (169, 100));
        assert_eq!(ch.g.shape(), (3, 169));
    }

    #[test]
    fn reciprocity_is_exact() {
        let ch = build_channels(&desk_scene()).unwrap();
        for k in 0..ch.cells() {
            for n in 0..ch.antennas() {
                assert_eq!(ch.h_r[(n, k)], ch.h_t[(k, n)]);
            }
        }
    }

    #[test]
    fn free_space_decay() {
        let a = build_channels(&single(1.0, 1.0)).unwrap().h_t[(0, 0)].norm();
        let b = build_channels(&single(2.0, 1.0)).unwrap().h_t[(0, 0)].norm();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_bounded_by_nearest_distance() {
        let s = desk_scene();
        let ch = build_channels(&s).unwrap();
        let d_min = s
            .roi
            .centers()
            .iter()
            .chain(s.receivers.points().iter())
            .flat_map(|t| s.array.positions().into_iter().map(move |a| (t - a).norm()))
            .fold(f64::INFINITY, f64::min);
        let bound = s.wavelength() / (4.0 * PI * d_min);
        assert!(ch
            .h_t
            .iter()
            .chain(ch.g.iter())
            .all(|z| z.norm() <= bound * (1.0 + 1e-12)));
    }

    #[test]
    fn zero_distance_fails() {
        let mut s = single(1.0, 1.0);
        s.roi.center = [0.0, 0.0, 0.0];
        assert!(matches!(
            build_channels(&s),
            Err(Error::ZeroDistance { .. })
        ));
    }
}
