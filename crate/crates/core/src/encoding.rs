//! Binary pixel encodings and the flat variable layout.
//!
//! Every pixel is a weighted sum of binary variables `Σ_k c_k q_k`. Three
//! coefficient families are supported:
//!
//! * radix-2: `c_k = 2^k` for `k = -m1..=m2`;
//! * attenuation levels: `c_k = α_k`;
//! * level differences: `c_1 = α_1`, `c_k = α_k − α_{k-1}`, so that setting
//!   the first `t` bits yields exactly `α_t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{Image, MacLevels};

/// A solver assignment, one entry per QUBO variable.
pub type Bits = Vec<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingKind {
    Radix2,
    Mac,
    MacDifference,
}

impl std::str::FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radix2" | "radix-2" => Ok(EncodingKind::Radix2),
            "mac" => Ok(EncodingKind::Mac),
            "mac-difference" | "mac_difference" => Ok(EncodingKind::MacDifference),
            other => Err(Error::invalid(format!(
                "unknown encoding {other:?} (expected radix2, mac or mac-difference)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EncodingScheme {
    Radix2 { m1: i32, m2: i32 },
    Mac { levels: Vec<f64> },
    MacDifference { levels: Vec<f64> },
}

impl EncodingScheme {
    pub fn radix2(m1: i32, m2: i32) -> Result<Self> {
        if m1 + m2 < 0 {
            return Err(Error::invalid(format!(
                "radix-2 range -{m1}..={m2} holds no bits"
            )));
        }
        Ok(EncodingScheme::Radix2 { m1, m2 })
    }

    pub fn mac(levels: &MacLevels) -> Self {
        EncodingScheme::Mac {
            levels: levels.levels().to_vec(),
        }
    }

    pub fn mac_difference(levels: &MacLevels) -> Self {
        EncodingScheme::MacDifference {
            levels: levels.levels().to_vec(),
        }
    }

    pub fn from_kind(kind: EncodingKind, levels: &MacLevels) -> Self {
        match kind {
            EncodingKind::Mac => Self::mac(levels),
            EncodingKind::MacDifference => Self::mac_difference(levels),
            EncodingKind::Radix2 => {
                // smallest non-negative integer range covering the top level
                let top = levels.max().ceil().max(1.0) as u64;
                let m2 = (64 - top.leading_zeros()) as i32 - 1;
                EncodingScheme::Radix2 { m1: 0, m2 }
            }
        }
    }

    /// Re-checks invariants; used after deserializing.
    pub fn validate(&self) -> Result<()> {
        match self {
            EncodingScheme::Radix2 { m1, m2 } => Self::radix2(*m1, *m2).map(|_| ()),
            EncodingScheme::Mac { levels } | EncodingScheme::MacDifference { levels } => {
                MacLevels::new(levels.clone()).map(|_| ())
            }
        }
    }

    pub fn kind(&self) -> EncodingKind {
        match self {
            EncodingScheme::Radix2 { .. } => EncodingKind::Radix2,
            EncodingScheme::Mac { .. } => EncodingKind::Mac,
            EncodingScheme::MacDifference { .. } => EncodingKind::MacDifference,
        }
    }

    pub fn bits_per_pixel(&self) -> usize {
        match self {
            EncodingScheme::Radix2 { m1, m2 } => (m1 + m2 + 1) as usize,
            EncodingScheme::Mac { levels } | EncodingScheme::MacDifference { levels } => {
                levels.len()
            }
        }
    }
}

/// Per-bit multipliers of a scheme, lowest bit first.
pub fn coefficients(scheme: &EncodingScheme) -> Vec<f64> {
    match scheme {
        EncodingScheme::Radix2 { m1, m2 } => (-m1..=*m2).map(|k| 2f64.powi(k)).collect(),
        EncodingScheme::Mac { levels } => levels.clone(),
        EncodingScheme::MacDifference { levels } => {
            let mut prev = 0.0;
            levels
                .iter()
                .map(|&a| {
                    let beta = a - prev;
                    prev = a;
                    beta
                })
                .collect()
        }
    }
}

/// Flat index of bit `k` of pixel `(i, j)`: `((i·W) + j)·B + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMap {
    pub width: usize,
    pub height: usize,
    pub bits_per_pixel: usize,
}

impl VariableMap {
    pub fn new(width: usize, height: usize, bits_per_pixel: usize) -> Self {
        VariableMap {
            width,
            height,
            bits_per_pixel,
        }
    }

    pub fn for_scheme(width: usize, height: usize, scheme: &EncodingScheme) -> Self {
        Self::new(width, height, scheme.bits_per_pixel())
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.width + j) * self.bits_per_pixel + k
    }

    /// Index of bit `k` of the row-major pixel `p`.
    pub fn pixel_bit(&self, p: usize, k: usize) -> usize {
        p * self.bits_per_pixel + k
    }

    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn total_vars(&self) -> usize {
        self.num_pixels() * self.bits_per_pixel
    }
}

/// Pixel `(i, j) = Σ_k coefficients[k] · bits[index(i, j, k)]`.
pub fn decode(bits: &[bool], scheme: &EncodingScheme, map: &VariableMap) -> Result<Image> {
    if bits.len() != map.total_vars() {
        return Err(Error::mismatch(format!(
            "{} bits supplied, the variable map has {}",
            bits.len(),
            map.total_vars()
        )));
    }
    let coeffs = coefficients(scheme);
    if coeffs.len() != map.bits_per_pixel {
        return Err(Error::mismatch(format!(
            "scheme has {} bits per pixel, the variable map {}",
            coeffs.len(),
            map.bits_per_pixel
        )));
    }
    let pixels = bits
        .chunks(map.bits_per_pixel)
        .map(|chunk| pixel_value(&coeffs, chunk))
        .collect();
    Image::from_vec(map.width, map.height, pixels)
}

fn pixel_value(coeffs: &[f64], bits: &[bool]) -> f64 {
    coeffs
        .iter()
        .zip(bits)
        .fold(0.0, |acc, (&c, &b)| if b { acc + c } else { acc })
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Canonical bit pattern for every pixel of `img`.
///
/// Level-difference encodings use the thermometer pattern (`α_t` sets bits
/// `1..=t`), level encodings the fewest bits summing to the value, and
/// radix-2 the binary expansion.
pub fn encode_ground_truth(img: &Image, scheme: &EncodingScheme) -> Result<Bits> {
    let coeffs = coefficients(scheme);
    let bpp = coeffs.len();
    let mut bits = Vec::with_capacity(img.len() * bpp);
    for i in 0..img.height() {
        for j in 0..img.width() {
            let value = img.get(i, j);
            let pattern = encode_pixel(value, scheme, &coeffs).ok_or(Error::Unrepresentable {
                row: i,
                col: j,
                value,
            })?;
            bits.extend(pattern);
        }
    }
    Ok(bits)
}

fn encode_pixel(value: f64, scheme: &EncodingScheme, coeffs: &[f64]) -> Option<Vec<bool>> {
    let bpp = coeffs.len();
    match scheme {
        EncodingScheme::MacDifference { .. } => (0..=bpp).find_map(|t| {
            let pattern: Vec<bool> = (0..bpp).map(|k| k < t).collect();
            same_value(pixel_value(coeffs, &pattern), value).then_some(pattern)
        }),
        EncodingScheme::Mac { .. } => {
            if bpp > 20 {
                return None;
            }
            let mut masks: Vec<u32> = (0..1u32 << bpp).collect();
            masks.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
            masks.into_iter().find_map(|m| {
                let pattern: Vec<bool> = (0..bpp).map(|k| m >> k & 1 == 1).collect();
                same_value(pixel_value(coeffs, &pattern), value).then_some(pattern)
            })
        }
        EncodingScheme::Radix2 { m1, .. } => {
            let scaled = value * 2f64.powi(*m1);
            if scaled < 0.0 || scaled.fract() != 0.0 || scaled >= 2f64.powi(bpp as i32) {
                return None;
            }
            let n = scaled as u64;
            Some((0..bpp).map(|k| n >> k & 1 == 1).collect())
        }
    }
}

/// One line of `0`/`1` characters, LF-terminated.
pub fn bits_to_string(bits: &[bool]) -> String {
    let mut s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
    s.push('\n');
    s
}

pub fn parse_bits(text: &str) -> Result<Bits> {
    let line = text.strip_suffix('\n').unwrap_or(text);
    line.chars()
        .enumerate()
        .map(|(pos, ch)| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::parse(
                "bitstring",
                format!("offset {pos}"),
                format!("expected '0' or '1', found {other:?}"),
            )),
        })
        .collect()
}
