//! Integrated imaging and wireless power transfer (IWPT) in the radiating near field.
//!
//! A colocated transmit/receive array illuminates a gridded region of interest
//! (ROI) while energy receivers nearby harvest power from the same beam. The
//! crate builds the line-of-sight channels, reconstructs the ROI scattering
//! coefficients by least squares, and designs the illumination beam that trades
//! the equivalent-channel trace surrogate against harvested power, for fully
//! digital and partially connected hybrid arrays.
//!
//! Module map:
//!
//! - [`scene`]: geometry, physical constants, scattering fields.
//! - [`channel`]: near-field LOS channel matrices.
//! - [`imaging`]: equivalent channel, simulated reception, LS reconstruction, metrics.
//! - [`wpt`]: harvested power and the closed-form power-optimal beam.
//! - [`sdp`]: conic backend interface and a primal-dual interior-point solver.
//! - [`digital`]: trace kernel, penalized SCA beam design for the digital array.
//! - [`hybrid`]: phase-shifter precoder and alternating optimization.
//! - [`harness`]: Monte Carlo and sweep drivers with CSV / graymap outputs.

pub mod channel;
pub mod digital;
mod error;
pub mod harness;
pub mod hybrid;
pub mod imaging;
pub mod linalg;
pub mod output;
pub mod scene;
pub mod sdp;
pub mod wpt;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

/// Complex double.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;

pub use channel::{build_channels, element_gain, ChannelSet};
pub use digital::{
    build_trace_kernel, solve_digital, solve_qsdp_subproblem, trace_objective, DigitalSolution,
    SolveDiagnostics, SolverConfig, TraceKernel,
};
pub use hybrid::{alternating_optimize, hybrid_tradeoff, HybridPrecoder};
pub use imaging::{
    condition_number, equivalent_channel, ls_estimate, rmse, simulate_received, BeamVector,
    EquivalentChannel,
};
pub use scene::{paper_scene, ScatteringField, Scene};
pub use sdp::{ConicBackend, InteriorPoint};
pub use wpt::{e_max, harvested_power, optimal_wpt_beam, CovarianceMatrix};
