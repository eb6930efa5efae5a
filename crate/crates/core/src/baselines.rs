//! Classical reconstructions used for comparison: ramp-filtered back
//! projection and SART.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction, ProjectionGeometry, Sinogram, SystemMatrix};
use crate::phantom::Image;

/// Filtered back projection with the Ram-Lak ramp.
///
/// Each projection is zero-padded to a power of two (at least twice the bin
/// count), multiplied in frequency space by the transform of the
/// spatial-domain ramp kernel, then back-projected with linear
/// interpolation and scaled by `π / (2 · angles)`. Output is not clipped.
pub fn fbp(sino: &Sinogram, geom: &ProjectionGeometry) -> Result<Image> {
    if !sino.matches(geom) {
        return Err(Error::mismatch(format!(
            "sinogram is {}x{} but geometry has {} angles and {} bins",
            sino.num_angles(),
            sino.num_bins(),
            geom.angles.len(),
            geom.detector_bins
        )));
    }
    let bins = geom.detector_bins;
    let len = (2 * bins).next_power_of_two().max(64);
    let tau = geom.bin_width;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    // h[0] = 1/(4τ²), h[±n] = -1/(nπτ)² for odd n, 0 for even n
    let mut kernel = vec![Complex::new(0.0, 0.0); len];
    kernel[0].re = 1.0 / (4.0 * tau * tau);
    for n in (1..len / 2).step_by(2) {
        let v = -1.0 / (n as f64 * std::f64::consts::PI * tau).powi(2);
        kernel[n].re = v;
        kernel[len - n].re = v;
    }
    forward.process(&mut kernel);
    // 2τ·H, folded together with the 1/len of the unnormalized inverse
    let response: Vec<f64> = kernel
        .iter()
        .map(|c| 2.0 * tau * c.re / len as f64)
        .collect();

    let filtered: Vec<Vec<f64>> = (0..sino.num_angles())
        .map(|a| {
            let mut buf: Vec<Complex<f64>> = sino
                .row(a)
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(len)
                .collect();
            forward.process(&mut buf);
            for (b, &r) in buf.iter_mut().zip(&response) {
                *b *= r;
            }
            inverse.process(&mut buf);
            buf[..bins].iter().map(|c| c.re).collect()
        })
        .collect();

    let (w, h) = (geom.image_width, geom.image_height);
    let mut out = vec![0.0; w * h];
    for (a, &deg) in geom.angles.iter().enumerate() {
        let (c, s) = direction(deg);
        let row = &filtered[a];
        for i in 0..h {
            let y = 0.5 * h as f64 - i as f64 - 0.5;
            for j in 0..w {
                let x = j as f64 + 0.5 - 0.5 * w as f64;
                let pos = geom.bin_position(x * c + y * s);
                let lo = pos.floor();
                let frac = pos - lo;
                let sample = |k: f64| -> f64 {
                    if k >= 0.0 && (k as usize) < bins {
                        row[k as usize]
                    } else {
                        0.0
                    }
                };
                out[i * w + j] += (1.0 - frac) * sample(lo) + frac * sample(lo + 1.0);
            }
        }
    }
    let scale = std::f64::consts::PI / (2.0 * geom.angles.len() as f64);
    out.iter_mut().for_each(|v| *v *= scale);
    Image::from_vec(w, h, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SartConfig {
    pub iterations: usize,
    /// In `(0, 2]`.
    pub relaxation: f64,
}

impl Default for SartConfig {
    fn default() -> Self {
        SartConfig {
            iterations: 6,
            relaxation: 1.0,
        }
    }
}

impl SartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("SART needs at least one iteration"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 2.0) {
            return Err(Error::invalid(format!(
                "SART relaxation {} outside (0, 2]",
                self.relaxation
            )));
        }
        Ok(())
    }
}

/// Simultaneous algebraic reconstruction, one angle per sub-iteration,
/// starting from zero.
///
/// For the rays of one angle, `x_j += λ · Σ_i a_ij r_i / Σ_i a_ij` with
/// `r_i = (P_i − A_i x) / Σ_j a_ij`.
pub fn sart(sino: &Sinogram, sm: &SystemMatrix, config: &SartConfig) -> Result<Image> {
    config.validate()?;
    let geom = sm.geometry();
    if !sino.matches(geom) {
        return Err(Error::mismatch(format!(
            "sinogram is {}x{} but geometry has {} angles and {} bins",
            sino.num_angles(),
            sino.num_bins(),
            geom.angles.len(),
            geom.detector_bins
        )));
    }
    let npix = geom.num_pixels();
    let bins = geom.detector_bins;
    let row_sums: Vec<f64> = (0..sm.num_rows()).map(|r| sm.row_sum(r)).collect();
    let mut x = vec![0.0; npix];
    let mut num = vec![0.0; npix];
    let mut den = vec![0.0; npix];
    for _ in 0..config.iterations {
        for a in 0..geom.angles.len() {
            num.iter_mut().for_each(|v| *v = 0.0);
            den.iter_mut().for_each(|v| *v = 0.0);
            for (r, &row_sum) in row_sums.iter().enumerate().skip(a * bins).take(bins) {
                if row_sum <= 0.0 {
                    continue;
                }
                let (px, w) = sm.row(r);
                let projected: f64 = px.iter().zip(w).map(|(&p, &wt)| wt * x[p]).sum();
                let resid = (sino.values()[r] - projected) / row_sum;
                for (&p, &wt) in px.iter().zip(w) {
                    num[p] += wt * resid;
                    den[p] += wt;
                }
            }
            for p in 0..npix {
                if den[p] > 0.0 {
                    x[p] += config.relaxation * num[p] / den[p];
                }
            }
        }
    }
    Image::from_vec(geom.image_width, geom.image_height, x)
}
