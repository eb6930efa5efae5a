//! Browser bindings for the reconstruction pipeline.
//!
//! A [`Demo`] holds one phantom and its sinogram; the page asks it for the
//! phantom, the sinogram, and reconstructions under chosen `(a, b)` weights
//! next to the FBP and SART baselines.

use tomoqubo::phantom::prepare;
use tomoqubo::prelude::*;
use wasm_bindgen::prelude::*;

/// One reconstructed image with its scores.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pixels: Vec<f64>,
    abs_error: f64,
    tv_squared: f64,
    energy: Option<f64>,
    target_energy: Option<f64>,
}

#[wasm_bindgen]
impl Reconstruction {
    pub fn pixels(&self) -> Vec<f64> {
        self.pixels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn abs_error(&self) -> f64 {
        self.abs_error
    }

    #[wasm_bindgen(getter)]
    pub fn tv_squared(&self) -> f64 {
        self.tv_squared
    }

    /// Energy reached by the solver, `NaN` for the classical baselines.
    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> f64 {
        self.energy.unwrap_or(f64::NAN)
    }

    /// Energy of the true image in the same model, `NaN` for the baselines.
    #[wasm_bindgen(getter)]
    pub fn target_energy(&self) -> f64 {
        self.target_energy.unwrap_or(f64::NAN)
    }

    #[wasm_bindgen(getter)]
    pub fn error_free(&self) -> bool {
        self.abs_error == 0.0
    }
}

#[wasm_bindgen]
pub struct Demo {
    truth: Image,
    geometry: ProjectionGeometry,
    matrix: SystemMatrix,
    sinogram: Sinogram,
}

#[wasm_bindgen]
impl Demo {
    /// Single-level Shepp-Logan phantom of `size × size`, blurred by `blur`
    /// and thresholded at `threshold`, projected at `projections` angles.
    /// A positive `noise` adds relative Gaussian noise drawn from `seed`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        size: usize,
        blur: f64,
        threshold: f64,
        projections: usize,
        noise: f64,
        seed: u64,
    ) -> std::result::Result<Demo, JsError> {
        Demo::build(size, blur, threshold, projections, noise, seed).map_err(to_js)
    }

    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.truth.width()
    }

    pub fn phantom(&self) -> Vec<f64> {
        self.truth.pixels().to_vec()
    }

    #[wasm_bindgen(getter)]
    pub fn angles(&self) -> usize {
        self.sinogram.num_angles()
    }

    #[wasm_bindgen(getter)]
    pub fn bins(&self) -> usize {
        self.sinogram.num_bins()
    }

    /// Row-major, one row per angle.
    pub fn sinogram(&self) -> Vec<f64> {
        self.sinogram.values().to_vec()
    }

    /// Anneal `a·Q1 + b·Q2` and decode the best assignment.
    pub fn reconstruct(
        &self,
        a: f64,
        b: f64,
        restarts: usize,
        sweeps: usize,
        seed: u64,
    ) -> std::result::Result<Reconstruction, JsError> {
        self.solve(a, b, restarts, sweeps, seed).map_err(to_js)
    }

    pub fn fbp(&self) -> std::result::Result<Reconstruction, JsError> {
        fbp(&self.sinogram, &self.geometry)
            .and_then(|img| self.score(img, None, None))
            .map_err(to_js)
    }

    pub fn sart(&self, iterations: usize) -> std::result::Result<Reconstruction, JsError> {
        let config = SartConfig {
            iterations,
            ..SartConfig::default()
        };
        sart(&self.sinogram, &self.matrix, &config)
            .and_then(|img| self.score(img, None, None))
            .map_err(to_js)
    }
}

impl Demo {
    pub fn build(
        size: usize,
        blur: f64,
        threshold: f64,
        projections: usize,
        noise: f64,
        seed: u64,
    ) -> Result<Demo> {
        let levels = MacLevels::new(vec![1.0])?;
        let source = shepp_logan(size.max(128))?;
        let truth = prepare(&source, size, blur, &levels, Some(&[threshold]))?;
        let geometry =
            ProjectionGeometry::with_default_detector(size, size, isometric_angles(projections)?)?;
        let matrix = build_system_matrix(&geometry);
        let ideal = forward_project(&truth, &matrix)?;
        let sinogram = add_noise(&ideal, noise, seed)?;
        Ok(Demo {
            truth,
            geometry,
            matrix,
            sinogram,
        })
    }

    pub fn solve(
        &self,
        a: f64,
        b: f64,
        restarts: usize,
        sweeps: usize,
        seed: u64,
    ) -> Result<Reconstruction> {
        if !(a >= 0.0 && b >= 0.0) || a + b == 0.0 {
            return Err(Error::Validation(format!(
                "weights must be non-negative and not both zero, got a = {a}, b = {b}"
            )));
        }
        let scheme = EncodingScheme::mac_difference(&MacLevels::new(vec![1.0])?);
        let map = VariableMap::for_scheme(self.truth.width(), self.truth.height(), &scheme);
        let q1 = build_q1(&self.sinogram, &self.matrix, &scheme, &map)?;
        let model = combine(&q1, &build_q2(&scheme, &map), a, b)?;
        let config = SolveConfig {
            restarts,
            sweeps_per_restart: sweeps,
            seed,
            ..SolveConfig::default()
        };
        let result = anneal(&model, &config)?;
        let truth_bits = encode_ground_truth(&self.truth, &scheme)?;
        let target = energy(&model, &truth_bits)?;
        let img = decode(&result.best_bits, &scheme, &map)?;
        self.score(img, Some(result.best_energy), Some(target))
    }

    fn score(
        &self,
        img: Image,
        energy: Option<f64>,
        target: Option<f64>,
    ) -> Result<Reconstruction> {
        Ok(Reconstruction {
            abs_error: abs_error(&img, &self.truth)?,
            tv_squared: tv_squared(&img),
            pixels: img.into_pixels(),
            energy,
            target_energy: target,
        })
    }
}

fn to_js(err: Error) -> JsError {
    JsError::new(&err.to_string())
}
