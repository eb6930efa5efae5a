//! Reconstruction quality: absolute error, total variation, the target energy
//! of the combined model, and tabular reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Sinogram;
use crate::phantom::Image;

/// `Σ |recon − truth|` over all pixels.
pub fn abs_error(recon: &Image, truth: &Image) -> Result<f64> {
    if !recon.same_shape(truth) {
        return Err(Error::mismatch(format!(
            "reconstruction is {}x{} but truth is {}x{}",
            recon.width(),
            recon.height(),
            truth.width(),
            truth.height()
        )));
    }
    Ok(recon
        .pixels()
        .iter()
        .zip(truth.pixels())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

fn neighbour_differences(img: &Image) -> impl Iterator<Item = f64> + '_ {
    let (w, h) = (img.width(), img.height());
    (0..h).flat_map(move |i| {
        (0..w).flat_map(move |j| {
            let right = (j + 1 < w).then(|| img.get(i, j) - img.get(i, j + 1));
            let down = (i + 1 < h).then(|| img.get(i, j) - img.get(i + 1, j));
            right.into_iter().chain(down)
        })
    })
}

/// Sum of squared differences over horizontal and vertical neighbours.
pub fn tv_squared(img: &Image) -> f64 {
    neighbour_differences(img).map(|d| d * d).sum()
}

/// Sum of absolute differences over horizontal and vertical neighbours.
pub fn tv_absolute(img: &Image) -> f64 {
    neighbour_differences(img).map(f64::abs).sum()
}

/// Energy of the true image in `a·Q1 + b·Q2`: `−a·Σ P² + b·tv_squared`.
///
/// Only meaningful when `sino` is the ideal projection of `phantom`.
pub fn target_energy(phantom: &Image, sino: &Sinogram, a: f64, b: f64) -> f64 {
    -a * sino.sum_squares() + b * tv_squared(phantom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub method: String,
    pub scenario: String,
    pub projections: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub abs_error: f64,
    pub tv_squared: f64,
    pub tv_absolute: f64,
    pub achieved_energy: Option<f64>,
    pub target_energy: Option<f64>,
    pub error_free: bool,
}

impl ReconstructionReport {
    pub fn evaluate(
        method: impl Into<String>,
        scenario: impl Into<String>,
        projections: usize,
        recon: &Image,
        truth: &Image,
    ) -> Result<Self> {
        let err = abs_error(recon, truth)?;
        Ok(ReconstructionReport {
            method: method.into(),
            scenario: scenario.into(),
            projections,
            a: None,
            b: None,
            abs_error: err,
            tv_squared: tv_squared(recon),
            tv_absolute: tv_absolute(recon),
            achieved_energy: None,
            target_energy: None,
            error_free: err == 0.0,
        })
    }

    pub fn with_weights(mut self, a: f64, b: f64) -> Self {
        self.a = Some(a);
        self.b = Some(b);
        self
    }

    pub fn with_energies(mut self, achieved: f64, target: Option<f64>) -> Self {
        self.achieved_energy = Some(achieved);
        self.target_energy = target;
        self
    }
}

const METHOD_ORDER: [&str; 4] = ["SART", "FBP", "QTR", "QCSTR"];

/// Absolute errors laid out with methods as columns and scenarios as rows.
pub fn format_table(reports: &[ReconstructionReport]) -> String {
    let mut methods: Vec<String> = METHOD_ORDER
        .iter()
        .filter(|m| reports.iter().any(|r| r.method.eq_ignore_ascii_case(m)))
        .map(|m| m.to_string())
        .collect();
    let extra: BTreeSet<String> = reports
        .iter()
        .map(|r| r.method.to_uppercase())
        .filter(|m| !METHOD_ORDER.contains(&m.as_str()))
        .collect();
    methods.extend(extra);

    let mut scenarios: Vec<&str> = Vec::new();
    for r in reports {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }

    let first = scenarios.iter().map(|s| s.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:<first$}", "scenario");
    for m in &methods {
        write!(out, " {m:>10}").unwrap();
    }
    out.push('\n');
    for s in scenarios {
        write!(out, "{s:<first$}").unwrap();
        for m in &methods {
            let cell = reports
                .iter()
                .find(|r| r.scenario == s && r.method.eq_ignore_ascii_case(m))
                .map(|r| format!("{:.2}", r.abs_error))
                .unwrap_or_else(|| "-".into());
            write!(out, " {cell:>10}").unwrap();
        }
        out.push('\n');
    }
    out
}
