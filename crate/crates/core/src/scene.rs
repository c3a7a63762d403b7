//! Experiment geometry and physical constants.
//!
//! Everything downstream (channels, beam design, experiments) reads its
//! geometry and power budget from a [`Scene`]. Powers are watts throughout;
//! dBm only appears in [`SceneConfig`], the on-disk representation.

use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{CVector, Error, Result, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Positions closer than this (meters) are treated as coincident.
const COINCIDENCE_TOL: f64 = 1e-9;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

fn vec3(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

/// In-plane unit axes `(col_axis, row_axis)` for a plane with the given normal.
///
/// For the +x normal used by the default scenes columns run along +y and rows
/// along +z.
fn plane_axes(normal: Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let n = normal.normalize();
    let up = if n.cross(&Vector3::z()).norm() > 1e-9 {
        Vector3::z()
    } else {
        Vector3::y()
    };
    let col_axis = up.cross(&n).normalize();
    let row_axis = n.cross(&col_axis).normalize();
    (col_axis, row_axis)
}

fn lattice(
    rows: usize,
    cols: usize,
    pitch: f64,
    center: Vector3<f64>,
    normal: Vector3<f64>,
) -> Vec<Vector3<f64>> {
    let (col_axis, row_axis) = plane_axes(normal);
    let r0 = (rows as f64 - 1.0) / 2.0;
    let c0 = (cols as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(
                center
                    + col_axis * ((c as f64 - c0) * pitch)
                    + row_axis * ((r as f64 - r0) * pitch),
            );
        }
    }
    out
}

/// Uniform rectangular array centered on `reference`. Antenna `n` sits at
/// row `n / cols`, column `n % cols`; each row is one hybrid subarray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element pitch in meters.
    pub spacing: f64,
    pub reference: [f64; 3],
    pub normal: [f64; 3],
}

impl ArrayGeometry {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        lattice(
            self.rows,
            self.cols,
            self.spacing,
            vec3(self.reference),
            vec3(self.normal),
        )
    }

    pub fn unit_normal(&self) -> Vector3<f64> {
        vec3(self.normal).normalize()
    }

    /// Longest edge of the element-center rectangle.
    pub fn side_extent(&self) -> f64 {
        (self.rows.max(self.cols).saturating_sub(1)) as f64 * self.spacing
    }

    /// Diagonal of the element-center rectangle; used as the aperture diameter.
    pub fn diameter(&self) -> f64 {
        let h = self.rows.saturating_sub(1) as f64 * self.spacing;
        let w = self.cols.saturating_sub(1) as f64 * self.spacing;
        h.hypot(w)
    }
}

/// Planar grid of square ROI cells, parallel to the array by default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiGrid {
    /// Cells per axis as `[rows, cols]`.
    pub cells: [usize; 2],
    pub cell_size: f64,
    pub center: [f64; 3],
    #[serde(default = "default_normal")]
    pub normal: [f64; 3],
}

fn default_normal() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl RoiGrid {
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> usize {
        self.cells[0]
    }

    pub fn cols(&self) -> usize {
        self.cells[1]
    }

    pub fn centers(&self) -> Vec<Vector3<f64>> {
        lattice(
            self.cells[0],
            self.cells[1],
            self.cell_size,
            vec3(self.center),
            vec3(self.normal),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSet {
    pub positions: Vec<[f64; 3]>,
}

impl ReceiverSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn points(&self) -> Vec<Vector3<f64>> {
        self.positions.iter().copied().map(vec3).collect()
    }
}

/// Complete experiment description. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub array: ArrayGeometry,
    pub roi: RoiGrid,
    pub receivers: ReceiverSet,
    /// Hz.
    pub carrier_frequency: f64,
    /// W.
    pub transmit_power: f64,
    /// W, integrated over the signal bandwidth.
    pub noise_power: f64,
    /// Energy conversion efficiency in (0, 1).
    pub efficiency: f64,
    /// Exponent `q` of the cos^q element pattern.
    pub pattern_exponent: f64,
}

impl Scene {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn antennas(&self) -> usize {
        self.array.len()
    }

    pub fn cells(&self) -> usize {
        self.roi.len()
    }

    pub fn users(&self) -> usize {
        self.receivers.len()
    }

    /// Fraunhofer distance 2D²/λ with D the aperture diagonal.
    pub fn fraunhofer_distance(&self) -> f64 {
        let d = self.array.diameter();
        2.0 * d * d / self.wavelength()
    }

    /// Same scene with a different array size (everything else kept).
    pub fn with_array_size(&self, rows: usize, cols: usize) -> Scene {
        let mut s = self.clone();
        s.array.rows = rows;
        s.array.cols = cols;
        s
    }

    pub fn validate(&self) -> ValidationReport {
        scene_validate(self)
    }
}

/// One violated scene invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneIssue {
    EmptyArray,
    EmptyRoi,
    NonPositiveSpacing,
    NonPositiveCellSize,
    NonPositiveFrequency,
    NonPositiveTransmitPower,
    NonPositiveNoisePower,
    EfficiencyOutOfRange(f64),
    NegativePatternExponent(f64),
    DuplicateAntennas,
    ReceiverCoincidesWithAntenna {
        receiver: usize,
        antenna: usize,
    },
    OutsideNearField {
        what: &'static str,
        index: usize,
        distance: f64,
        limit: f64,
    },
}

impl fmt::Display for SceneIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneIssue::EmptyArray => write!(f, "array has no elements"),
            SceneIssue::EmptyRoi => write!(f, "ROI has no cells"),
            SceneIssue::NonPositiveSpacing => write!(f, "element spacing must be positive"),
            SceneIssue::NonPositiveCellSize => write!(f, "cell size must be positive"),
            SceneIssue::NonPositiveFrequency => write!(f, "carrier frequency must be positive"),
            SceneIssue::NonPositiveTransmitPower => write!(f, "transmit power must be positive"),
            SceneIssue::NonPositiveNoisePower => write!(f, "noise power must be positive"),
            SceneIssue::EfficiencyOutOfRange(z) => {
                write!(f, "efficiency out of range: {z} not in (0, 1)")
            }
            SceneIssue::NegativePatternExponent(q) => {
                write!(f, "pattern exponent must be nonnegative, got {q}")
            }
            SceneIssue::DuplicateAntennas => write!(f, "antenna positions are not distinct"),
            SceneIssue::ReceiverCoincidesWithAntenna { receiver, antenna } => write!(
                f,
                "receiver coincides with antenna (receiver {receiver}, antenna {antenna})"
            ),
            SceneIssue::OutsideNearField {
                what,
                index,
                distance,
                limit,
            } => write!(
                f,
                "{what} {index} outside radiating near field ({distance:.3} m >= {limit:.3} m)"
            ),
        }
    }
}

/// Every violated invariant of a scene; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<SceneIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.to_string().contains(needle))
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
            Err(Error::InvalidScene(msgs.join("; ")))
        }
    }
}

// negated comparisons also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn scene_validate(s: &Scene) -> ValidationReport {
    let mut issues = Vec::new();
    if s.array.is_empty() {
        issues.push(SceneIssue::EmptyArray);
    }
    if s.roi.is_empty() {
        issues.push(SceneIssue::EmptyRoi);
    }
    if !(s.array.spacing > 0.0) {
        issues.push(SceneIssue::NonPositiveSpacing);
    }
    if !(s.roi.cell_size > 0.0) {
        issues.push(SceneIssue::NonPositiveCellSize);
    }
    if !(s.carrier_frequency > 0.0) {
        issues.push(SceneIssue::NonPositiveFrequency);
    }
    if !(s.transmit_power > 0.0) {
        issues.push(SceneIssue::NonPositiveTransmitPower);
    }
    if !(s.noise_power > 0.0) {
        issues.push(SceneIssue::NonPositiveNoisePower);
    }
    if !(s.efficiency > 0.0 && s.efficiency < 1.0) {
        issues.push(SceneIssue::EfficiencyOutOfRange(s.efficiency));
    }
    if !(s.pattern_exponent >= 0.0) {
        issues.push(SceneIssue::NegativePatternExponent(s.pattern_exponent));
    }

    let antennas = s.array.positions();
    let duplicate = antennas.iter().enumerate().any(|(i, a)| {
        antennas[i + 1..]
            .iter()
            .any(|b| (a - b).norm() < COINCIDENCE_TOL)
    });
    if duplicate {
        issues.push(SceneIssue::DuplicateAntennas);
    }

    for (m, p) in s.receivers.points().iter().enumerate() {
        if let Some(n) = antennas
            .iter()
            .position(|a| (a - p).norm() < COINCIDENCE_TOL)
        {
            issues.push(SceneIssue::ReceiverCoincidesWithAntenna {
                receiver: m,
                antenna: n,
            });
        }
    }

    if s.carrier_frequency > 0.0 && !antennas.is_empty() {
        let limit = s.fraunhofer_distance();
        let farthest =
            |p: &Vector3<f64>| antennas.iter().map(|a| (a - p).norm()).fold(0.0, f64::max);
        for (k, r) in s.roi.centers().iter().enumerate() {
            let d = farthest(r);
            if d >= limit {
                issues.push(SceneIssue::OutsideNearField {
                    what: "ROI cell",
                    index: k,
                    distance: d,
                    limit,
                });
            }
        }
        for (m, p) in s.receivers.points().iter().enumerate() {
            let d = farthest(p);
            if d >= limit {
                issues.push(SceneIssue::OutsideNearField {
                    what: "receiver",
                    index: m,
                    distance: d,
                    limit,
                });
            }
        }
    }

    ValidationReport { issues }
}

pub const PAPER_FREQUENCY: f64 = 28e9;
pub const PAPER_BANDWIDTH: f64 = 120e3;
pub const PAPER_NOISE_DENSITY_DBM_HZ: f64 = -170.0;
pub const PAPER_RECEIVERS: [[f64; 3]; 3] = [[1.5, 1.0, 1.0], [1.0, -1.5, 0.0], [1.5, -1.0, 0.0]];

/// Noise power in watts from a density in dBm/Hz over a bandwidth in Hz.
pub fn noise_power_from_density(density_dbm_hz: f64, bandwidth: f64) -> f64 {
    dbm_to_watts(density_dbm_hz + 10.0 * bandwidth.log10())
}

/// Reference configuration: 13×13 array at the origin on the YZ plane,
/// pitch 3λ/2, 10×10 ROI of 0.1 m cells centered at (2, 0, 0) m, three
/// energy receivers, 28 GHz, 30 dBm, ζ = 0.5.
pub fn paper_scene() -> Scene {
    let wavelength = SPEED_OF_LIGHT / PAPER_FREQUENCY;
    Scene {
        array: ArrayGeometry {
            rows: 13,
            cols: 13,
            spacing: 1.5 * wavelength,
            reference: [0.0, 0.0, 0.0],
            normal: [1.0, 0.0, 0.0],
        },
        roi: RoiGrid {
            cells: [10, 10],
            cell_size: 0.1,
            center: [2.0, 0.0, 0.0],
            normal: [1.0, 0.0, 0.0],
        },
        receivers: ReceiverSet {
            positions: PAPER_RECEIVERS.to_vec(),
        },
        carrier_frequency: PAPER_FREQUENCY,
        transmit_power: dbm_to_watts(30.0),
        noise_power: noise_power_from_density(PAPER_NOISE_DENSITY_DBM_HZ, PAPER_BANDWIDTH),
        efficiency: 0.5,
        pattern_exponent: 1.0,
    }
}

/// Desk-scale variant of [`paper_scene`]: 6×6 array, 4×4 ROI.
pub fn desk_scene() -> Scene {
    let mut s = paper_scene().with_array_size(6, 6);
    s.roi.cells = [4, 4];
    s
}

/// Scattering coefficients of the ROI cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringField {
    pub gamma: CVector,
    pub cell_size: f64,
}

impl ScatteringField {
    /// Checks `|γ_k| ≤ Δ`.
    pub fn new(gamma: CVector, cell_size: f64) -> Result<Self> {
        if let Some(k) = gamma
            .iter()
            .position(|g| g.norm() > cell_size * (1.0 + 1e-12))
        {
            return Err(Error::Config(format!(
                "scattering coefficient {k} exceeds the cell size bound"
            )));
        }
        Ok(ScatteringField { gamma, cell_size })
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn support(&self) -> usize {
        self.gamma.iter().filter(|g| g.norm() > 0.0).count()
    }
}

/// Binary occupancy mask over the ROI cells, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

/// 10×10 reference glyph (a ring with a diagonal bar).
const GLYPH: [&str; 10] = [
    "..........",
    "...####...",
    "..#....#..",
    ".#....#.#.",
    ".#...#..#.",
    ".#..#...#.",
    ".#.#....#.",
    "..#....#..",
    "...####...",
    "..........",
];

impl Mask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "mask",
                expected: rows * cols,
                found: bits.len(),
            });
        }
        Ok(Mask { rows, cols, bits })
    }

    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        Mask {
            rows,
            cols,
            bits: vec![value; rows * cols],
        }
    }

    pub fn checkerboard(rows: usize, cols: usize) -> Self {
        let bits = (0..rows * cols)
            .map(|i| (i / cols + i % cols).is_multiple_of(2))
            .collect();
        Mask { rows, cols, bits }
    }

    /// The standard test pattern, nearest-neighbour resampled to `rows × cols`.
    pub fn glyph(rows: usize, cols: usize) -> Self {
        let g: Vec<&[u8]> = GLYPH.iter().map(|l| l.as_bytes()).collect();
        let mut bits = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let gr = ((r as f64 + 0.5) * 10.0 / rows as f64) as usize;
                let gc = ((c as f64 + 0.5) * 10.0 / cols as f64) as usize;
                bits.push(g[gr.min(9)][gc.min(9)] == b'#');
            }
        }
        // small grids can lose every pixel of the glyph
        if bits.iter().all(|b| !b) {
            return Mask::checkerboard(rows, cols);
        }
        Mask { rows, cols, bits }
    }
}

/// γ_k = Δ where the mask is set and 0 elsewhere.
pub fn scattering_from_bitmap(grid: &RoiGrid, mask: &Mask) -> Result<ScatteringField> {
    if mask.rows != grid.rows() {
        return Err(Error::DimensionMismatch {
            context: "mask rows",
            expected: grid.rows(),
            found: mask.rows,
        });
    }
    if mask.cols != grid.cols() {
        return Err(Error::DimensionMismatch {
            context: "mask cols",
            expected: grid.cols(),
            found: mask.cols,
        });
    }
    let delta = grid.cell_size;
    let gamma = CVector::from_iterator(
        mask.bits.len(),
        mask.bits.iter().map(|&b| {
            if b {
                C64::new(delta, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    );
    ScatteringField::new(gamma, delta)
}

/// On-disk scene description. Lengths in meters, frequency in Hz, powers in dBm.
///
/// ```toml
/// carrier_frequency = 28e9
/// transmit_power_dbm = 30.0
/// noise_density_dbm_hz = -170.0
/// bandwidth = 120e3
/// efficiency = 0.5
/// pattern_exponent = 1.0
/// receivers = [[1.5, 1.0, 1.0], [1.0, -1.5, 0.0]]
///
/// [array]
/// rows = 6
/// cols = 6
/// spacing = 0.016
/// reference = [0.0, 0.0, 0.0]
/// normal = [1.0, 0.0, 0.0]
///
/// [roi]
/// cells = [4, 4]
/// cell_size = 0.1
/// center = [2.0, 0.0, 0.0]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub carrier_frequency: f64,
    pub transmit_power_dbm: f64,
    /// Total noise power; takes precedence over density × bandwidth.
    #[serde(default)]
    pub noise_power_dbm: Option<f64>,
    #[serde(default)]
    pub noise_density_dbm_hz: Option<f64>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    pub efficiency: f64,
    #[serde(default = "default_pattern_exponent")]
    pub pattern_exponent: f64,
    #[serde(default)]
    pub receivers: Vec<[f64; 3]>,
    pub array: ArrayGeometry,
    pub roi: RoiGrid,
}

fn default_pattern_exponent() -> f64 {
    1.0
}

impl SceneConfig {
    pub fn from_scene(s: &Scene) -> Self {
        SceneConfig {
            carrier_frequency: s.carrier_frequency,
            transmit_power_dbm: watts_to_dbm(s.transmit_power),
            noise_power_dbm: Some(watts_to_dbm(s.noise_power)),
            noise_density_dbm_hz: None,
            bandwidth: None,
            efficiency: s.efficiency,
            pattern_exponent: s.pattern_exponent,
            receivers: s.receivers.positions.clone(),
            array: s.array.clone(),
            roi: s.roi.clone(),
        }
    }

    pub fn into_scene(self) -> Result<Scene> {
        let noise_power = match (
            self.noise_power_dbm,
            self.noise_density_dbm_hz,
            self.bandwidth,
        ) {
            (Some(p), _, _) => dbm_to_watts(p),
            (None, Some(d), Some(b)) => noise_power_from_density(d, b),
            _ => {
                return Err(Error::Config(
                    "noise needs noise_power_dbm or noise_density_dbm_hz with bandwidth".into(),
                ))
            }
        };
        Ok(Scene {
            array: self.array,
            roi: self.roi,
            receivers: ReceiverSet {
                positions: self.receivers,
            },
            carrier_frequency: self.carrier_frequency,
            transmit_power: dbm_to_watts(self.transmit_power_dbm),
            noise_power,
            efficiency: self.efficiency,
            pattern_exponent: self.pattern_exponent,
        })
    }
}

pub fn parse_scene(text: &str) -> Result<Scene> {
    let cfg: SceneConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.into_scene()
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    parse_scene(&std::fs::read_to_string(path)?)
}

pub fn scene_to_toml(s: &Scene) -> Result<String> {
    toml::to_string(&SceneConfig::from_scene(s)).map_err(|e| Error::Config(e.to_string()))
}
