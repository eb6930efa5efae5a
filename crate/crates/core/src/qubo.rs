//! QUBO assembly: the projection-fidelity model, the total-variation model,
//! their linear combination, energy evaluation and JSON interchange.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::{coefficients, EncodingScheme, VariableMap};
use crate::error::{Error, Result};
use crate::geometry::{Sinogram, SystemMatrix};

/// `E(x) = offset + Σ linear[v]·x_v + Σ_{i<j} quadratic[i,j]·x_i·x_j`.
///
/// Terms are kept sorted by index with exact zeros removed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuboModel {
    num_vars: usize,
    offset: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
}

impl QuboModel {
    pub fn empty(num_vars: usize) -> Self {
        QuboModel {
            num_vars,
            ..Default::default()
        }
    }

    /// Build from arbitrary terms; duplicates are summed and `(j, i)` pairs
    /// folded onto `(i, j)`. Diagonal pairs `(i, i)` fold into the linear
    /// part since `x² = x` for binary `x`.
    pub fn from_terms(
        num_vars: usize,
        offset: f64,
        linear: impl IntoIterator<Item = (usize, f64)>,
        quadratic: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut acc = Accumulator::new(num_vars);
        for (v, c) in linear {
            if v >= num_vars {
                return Err(Error::invalid(format!(
                    "linear index {v} out of range for {num_vars} variables"
                )));
            }
            acc.add_linear(v, c);
        }
        for (i, j, c) in quadratic {
            if i >= num_vars || j >= num_vars {
                return Err(Error::invalid(format!(
                    "quadratic index ({i}, {j}) out of range for {num_vars} variables"
                )));
            }
            if i == j {
                acc.add_linear(i, c);
            } else {
                acc.add_pair(i, j, c);
            }
        }
        acc.offset = offset;
        let model = acc.finish();
        model.check_finite()?;
        Ok(model)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &[(usize, f64)] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn linear_coeff(&self, v: usize) -> f64 {
        self.linear
            .binary_search_by_key(&v, |&(k, _)| k)
            .map(|idx| self.linear[idx].1)
            .unwrap_or(0.0)
    }

    pub fn quadratic_coeff(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.quadratic
            .binary_search_by_key(&key, |&(a, b, _)| (a, b))
            .map(|idx| self.quadratic[idx].2)
            .unwrap_or(0.0)
    }

    pub fn is_trivial(&self) -> bool {
        self.linear.is_empty() && self.quadratic.is_empty()
    }

    /// All stored coefficients, linear then quadratic.
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.linear
            .iter()
            .map(|t| t.1)
            .chain(self.quadratic.iter().map(|t| t.2))
    }

    fn check_finite(&self) -> Result<()> {
        if !self.offset.is_finite() || self.coefficients().any(|c| !c.is_finite()) {
            return Err(Error::Validation("QUBO coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&QuboJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: QuboJson = serde_json::from_str(text).map_err(|e| {
            Error::parse(
                "qubo json",
                format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        doc.into_model()
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct QuboJson {
    num_vars: usize,
    offset: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
}

impl From<&QuboModel> for QuboJson {
    fn from(m: &QuboModel) -> Self {
        QuboJson {
            num_vars: m.num_vars,
            offset: m.offset,
            linear: m.linear.clone(),
            quadratic: m.quadratic.clone(),
        }
    }
}

impl QuboJson {
    fn into_model(mut self) -> Result<QuboModel> {
        let invalid = |msg: String| Err(Error::Validation(msg));
        for &(v, c) in &self.linear {
            if v >= self.num_vars {
                return invalid(format!("linear index {v} >= num_vars {}", self.num_vars));
            }
            if c == 0.0 || !c.is_finite() {
                return invalid(format!("linear coefficient {c} for variable {v}"));
            }
        }
        for &(i, j, c) in &self.quadratic {
            if i >= j || j >= self.num_vars {
                return invalid(format!(
                    "quadratic key ({i}, {j}) must satisfy i < j < {}",
                    self.num_vars
                ));
            }
            if c == 0.0 || !c.is_finite() {
                return invalid(format!("quadratic coefficient {c} for ({i}, {j})"));
            }
        }
        if !self.offset.is_finite() {
            return invalid("offset must be finite".into());
        }
        self.linear.sort_by_key(|t| t.0);
        self.quadratic.sort_by_key(|t| (t.0, t.1));
        if self.linear.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("duplicate linear entry".into());
        }
        if self
            .quadratic
            .windows(2)
            .any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return invalid("duplicate quadratic entry".into());
        }
        Ok(QuboModel {
            num_vars: self.num_vars,
            offset: self.offset,
            linear: self.linear,
            quadratic: self.quadratic,
        })
    }
}

// Each key sees its additions in a fixed order, so results do not depend on
// hash iteration order.
struct Accumulator {
    num_vars: usize,
    offset: f64,
    linear: Vec<f64>,
    pairs: HashMap<(usize, usize), f64>,
}

impl Accumulator {
    fn new(num_vars: usize) -> Self {
        Accumulator {
            num_vars,
            offset: 0.0,
            linear: vec![0.0; num_vars],
            pairs: HashMap::new(),
        }
    }

    fn add_linear(&mut self, v: usize, c: f64) {
        self.linear[v] += c;
    }

    fn add_pair(&mut self, i: usize, j: usize, c: f64) {
        *self.pairs.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
    }

    fn finish(self) -> QuboModel {
        let linear = self
            .linear
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .collect();
        let mut quadratic: Vec<(usize, usize, f64)> = self
            .pairs
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|((i, j), c)| (i, j, c))
            .collect();
        quadratic.sort_unstable_by_key(|t| (t.0, t.1));
        QuboModel {
            num_vars: self.num_vars,
            offset: self.offset,
            linear,
            quadratic,
        }
    }
}

fn check_layout(scheme: &EncodingScheme, map: &VariableMap) -> Result<Vec<f64>> {
    let coeffs = coefficients(scheme);
    if coeffs.len() != map.bits_per_pixel {
        return Err(Error::mismatch(format!(
            "scheme has {} bits per pixel, the variable map {}",
            coeffs.len(),
            map.bits_per_pixel
        )));
    }
    Ok(coeffs)
}

/// Projection-fidelity model `Σ_{θ,s} (Σ_v w_v q_v − P)² − Σ P²`.
///
/// With `w_v = c_ij · coeff_k` for `v = index(i, j, k)`, each ray adds
/// `w_v² − 2 w_v P` to the linear terms and `2 w_u w_v` to each pair. The
/// constant `+P²` of the expansion cancels against `−P²`, so the offset is 0
/// and an image reproducing the sinogram exactly scores `−Σ P²`.
pub fn build_q1(
    sino: &Sinogram,
    sm: &SystemMatrix,
    scheme: &EncodingScheme,
    map: &VariableMap,
) -> Result<QuboModel> {
    let g = sm.geometry();
    if !sino.matches(g) {
        return Err(Error::mismatch(format!(
            "sinogram is {}x{} but geometry has {} angles and {} bins",
            sino.num_angles(),
            sino.num_bins(),
            g.angles.len(),
            g.detector_bins
        )));
    }
    if map.width != g.image_width || map.height != g.image_height {
        return Err(Error::mismatch(format!(
            "variable map is {}x{} but geometry is {}x{}",
            map.width, map.height, g.image_width, g.image_height
        )));
    }
    let coeffs = check_layout(scheme, map)?;

    let mut acc = Accumulator::new(map.total_vars());
    let mut terms: Vec<(usize, f64)> = Vec::new();
    for (r, &p) in sino.values().iter().enumerate() {
        terms.clear();
        let (pixels, weights) = sm.row(r);
        for (&px, &c) in pixels.iter().zip(weights) {
            for (k, &coef) in coeffs.iter().enumerate() {
                terms.push((map.pixel_bit(px, k), c * coef));
            }
        }
        for (a, &(u, wu)) in terms.iter().enumerate() {
            acc.add_linear(u, wu * wu - 2.0 * wu * p);
            for &(v, wv) in &terms[a + 1..] {
                acc.add_pair(u, v, 2.0 * wu * wv);
            }
        }
    }
    Ok(acc.finish())
}

/// Total-variation model: `Σ (I_p − I_p')²` over horizontally and vertically
/// adjacent pixel pairs, visited row-major (right neighbour, then below).
pub fn build_q2(scheme: &EncodingScheme, map: &VariableMap) -> QuboModel {
    let coeffs = coefficients(scheme);
    let bpp = map.bits_per_pixel;
    debug_assert_eq!(coeffs.len(), bpp);
    let mut acc = Accumulator::new(map.total_vars());

    let mut add_pair = |p: usize, q: usize| {
        for pixel in [p, q] {
            for k in 0..bpp {
                acc.add_linear(map.pixel_bit(pixel, k), coeffs[k] * coeffs[k]);
                for l in k + 1..bpp {
                    acc.add_pair(
                        map.pixel_bit(pixel, k),
                        map.pixel_bit(pixel, l),
                        2.0 * coeffs[k] * coeffs[l],
                    );
                }
            }
        }
        for k in 0..bpp {
            for l in 0..bpp {
                acc.add_pair(
                    map.pixel_bit(p, k),
                    map.pixel_bit(q, l),
                    -2.0 * coeffs[k] * coeffs[l],
                );
            }
        }
    };

    for i in 0..map.height {
        for j in 0..map.width {
            let p = i * map.width + j;
            if j + 1 < map.width {
                add_pair(p, p + 1);
            }
            if i + 1 < map.height {
                add_pair(p, p + map.width);
            }
        }
    }
    acc.finish()
}

/// Coefficient-wise `a·q1 + b·q2`, zeros pruned.
pub fn combine(q1: &QuboModel, q2: &QuboModel, a: f64, b: f64) -> Result<QuboModel> {
    if q1.num_vars != q2.num_vars {
        return Err(Error::mismatch(format!(
            "models have {} and {} variables",
            q1.num_vars, q2.num_vars
        )));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("combination weights must be finite"));
    }
    let linear = merge_sorted(&q1.linear, &q2.linear, |t| t.0, |t| t.1, a, b)
        .into_iter()
        .map(|((v, _), c)| (v, c))
        .collect();
    let quadratic = merge_sorted(&q1.quadratic, &q2.quadratic, |t| (t.0, t.1), |t| t.2, a, b)
        .into_iter()
        .map(|((i, j, _), c)| (i, j, c))
        .collect();
    Ok(QuboModel {
        num_vars: q1.num_vars,
        offset: a * q1.offset + b * q2.offset,
        linear,
        quadratic,
    })
}

fn merge_sorted<T: Copy, K: Ord>(
    xs: &[T],
    ys: &[T],
    key: impl Fn(&T) -> K,
    val: impl Fn(&T) -> f64,
    a: f64,
    b: f64,
) -> Vec<(T, f64)> {
    let mut out = Vec::with_capacity(xs.len().max(ys.len()));
    let (mut i, mut j) = (0, 0);
    while i < xs.len() || j < ys.len() {
        let (item, c) = match (xs.get(i), ys.get(j)) {
            (Some(x), Some(y)) => match key(x).cmp(&key(y)) {
                std::cmp::Ordering::Less => {
                    i += 1;
                    (*x, a * val(x))
                }
                std::cmp::Ordering::Greater => {
                    j += 1;
                    (*y, b * val(y))
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (*x, a * val(x) + b * val(y))
                }
            },
            (Some(x), None) => {
                i += 1;
                (*x, a * val(x))
            }
            (None, Some(y)) => {
                j += 1;
                (*y, b * val(y))
            }
            (None, None) => unreachable!(),
        };
        if c != 0.0 {
            out.push((item, c));
        }
    }
    out
}

/// Energy of an assignment.
pub fn energy(model: &QuboModel, bits: &[bool]) -> Result<f64> {
    if bits.len() != model.num_vars {
        return Err(Error::mismatch(format!(
            "{} bits for a model of {} variables",
            bits.len(),
            model.num_vars
        )));
    }
    Ok(energy_unchecked(model, bits))
}

pub(crate) fn energy_unchecked(model: &QuboModel, bits: &[bool]) -> f64 {
    let lin: f64 = model
        .linear
        .iter()
        .filter(|&&(v, _)| bits[v])
        .map(|&(_, c)| c)
        .sum();
    let quad: f64 = model
        .quadratic
        .iter()
        .filter(|&&(i, j, _)| bits[i] && bits[j])
        .map(|&(_, _, c)| c)
        .sum();
    model.offset + lin + quad
}
