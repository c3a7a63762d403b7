//! Browser bindings for the desk-scale scene.
//!
//! [`Demo`] builds the channels once and answers three queries: the
//! imaging/power trade-off table, a Monte Carlo reconstruction and the
//! illumination of the region of interest. Everything runs on the calling
//! thread; the desk scene keeps each query within a few seconds.

use wasm_bindgen::prelude::*;

use iwpt::harness::{
    run_imaging_experiment, run_tradeoff_sweep_on, tradeoff_table, Architecture, Experiment,
    ExperimentConfig, SceneSource,
};
use iwpt::imaging::{condition_number, equivalent_channel};
use iwpt::wpt::beam_power;
use iwpt::InteriorPoint;

fn js_err(e: iwpt::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    exp: Experiment,
    cfg: ExperimentConfig,
}

/// Result of [`Demo::reconstruct`].
#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    magnitudes: Vec<f64>,
    rmse: f64,
    condition: f64,
}

#[wasm_bindgen]
impl Reconstruction {
    /// `|mean γ̂|` per cell, row-major.
    #[wasm_bindgen(getter)]
    pub fn magnitudes(&self) -> Vec<f64> {
        self.magnitudes.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rmse(&self) -> f64 {
        self.rmse
    }

    #[wasm_bindgen(getter)]
    pub fn condition(&self) -> f64 {
        self.condition
    }
}

/// Result of [`Demo::illuminate`].
#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Illumination {
    intensity: Vec<f64>,
    harvested: f64,
}

#[wasm_bindgen]
impl Illumination {
    /// `|[H_T x]_k|²` per cell, row-major.
    #[wasm_bindgen(getter)]
    pub fn intensity(&self) -> Vec<f64> {
        self.intensity.clone()
    }

    /// Sum harvested power, watts.
    #[wasm_bindgen(getter)]
    pub fn harvested(&self) -> f64 {
        self.harvested
    }
}

impl Demo {
    pub fn try_new() -> iwpt::Result<Demo> {
        let cfg = ExperimentConfig::new(SceneSource::Desk);
        let exp = Experiment::new(cfg.scene.load()?)?;
        Ok(Demo { exp, cfg })
    }

    pub fn tradeoff(&self, fractions: &[f64], seed: u64) -> iwpt::Result<String> {
        let mut cfg = self.cfg.clone();
        cfg.er_grid = fractions.to_vec();
        cfg.trials = 20;
        cfg.seed = seed;
        let points = run_tradeoff_sweep_on(&self.exp, &cfg, &InteriorPoint::default())?;
        Ok(tradeoff_table(&points).to_csv())
    }

    pub fn reconstruction(
        &self,
        arch: &str,
        fraction: f64,
        trials: usize,
        seed: u64,
    ) -> iwpt::Result<Reconstruction> {
        let mut cfg = self.cfg.clone();
        cfg.seed = seed;
        let beam =
            self.exp
                .design_beam(&cfg, &InteriorPoint::default(), arch.parse()?, fraction)?;
        let out = run_imaging_experiment(
            &self.exp.channels,
            self.exp.scene.noise_power,
            trials,
            seed,
            &beam,
            &self.exp.truth,
        )?;
        Ok(Reconstruction {
            magnitudes: out.mean_magnitude,
            rmse: out.rmse,
            condition: condition_number(&equivalent_channel(&self.exp.channels, &beam)?)?,
        })
    }

    pub fn illumination(&self, arch: &str, fraction: f64, seed: u64) -> iwpt::Result<Illumination> {
        let mut cfg = self.cfg.clone();
        cfg.seed = seed;
        let arch: Architecture = arch.parse()?;
        let beam = self
            .exp
            .design_beam(&cfg, &InteriorPoint::default(), arch, fraction)?;
        let field = &self.exp.channels.h_t * beam.as_vector();
        Ok(Illumination {
            intensity: field.iter().map(|z| z.norm_sqr()).collect(),
            harvested: beam_power(&self.exp.channels.g, &beam, self.exp.scene.efficiency),
        })
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsValue> {
        Demo::try_new().map_err(js_err)
    }

    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.exp.scene.roi.rows()
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.exp.scene.roi.cols()
    }

    /// Maximum harvestable power, watts.
    #[wasm_bindgen(getter, js_name = eMax)]
    pub fn e_max(&self) -> f64 {
        self.exp.e_max
    }

    /// Ground-truth magnitudes, row-major.
    pub fn truth(&self) -> Vec<f64> {
        self.exp.truth.gamma.iter().map(|z| z.norm()).collect()
    }

    /// Trade-off table as CSV for the given threshold fractions.
    #[wasm_bindgen(js_name = tradeoffCsv)]
    pub fn tradeoff_csv(&self, fractions: Vec<f64>, seed: u64) -> Result<String, JsValue> {
        self.tradeoff(&fractions, seed).map_err(js_err)
    }

    /// Monte Carlo reconstruction with the beam of `arch` at `fraction·E_max`.
    pub fn reconstruct(
        &self,
        arch: &str,
        fraction: f64,
        trials: usize,
        seed: u64,
    ) -> Result<Reconstruction, JsValue> {
        self.reconstruction(arch, fraction, trials, seed)
            .map_err(js_err)
    }

    /// Illumination pattern over the ROI and the harvested power.
    pub fn illuminate(
        &self,
        arch: &str,
        fraction: f64,
        seed: u64,
    ) -> Result<Illumination, JsValue> {
        self.illumination(arch, fraction, seed).map_err(js_err)
    }
}
