//! Test images: Shepp-Logan rasterization, resizing, blurring, quantization
//! to attenuation levels, and PGM/CSV image files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rectangular grid of attenuation values, row-major, row 0 at the top.
///
/// Values are finite. Phantoms are non-negative; reconstructions from the
/// classical baselines may dip below zero and are kept as produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn from_vec(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::mismatch(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(pos) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "pixel ({}, {}) is not finite",
                pos / width,
                pos % width
            )));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    /// Value at row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.pixels[i * self.width + j] = value;
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.pixels.iter().all(|&v| v >= 0.0)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Image> {
        Image::from_vec(
            self.width,
            self.height,
            self.pixels.iter().map(|&v| f(v)).collect(),
        )
    }

    /// True when every pixel is 0 or one of `levels`.
    pub fn is_quantized_to(&self, levels: &MacLevels) -> bool {
        self.pixels
            .iter()
            .all(|&v| v == 0.0 || levels.levels().contains(&v))
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Image {
        let mut out = self.clone();
        for i in 0..self.height {
            for j in 0..self.width {
                out.set(i, j, self.get(i, self.width - 1 - j));
            }
        }
        out
    }
}

/// Strictly increasing positive attenuation levels `α_1 < … < α_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacLevels(Vec<f64>);

impl MacLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("at least one attenuation level is required"));
        }
        if levels.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::invalid(format!(
                "attenuation levels must be finite and positive, got {levels:?}"
            )));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "attenuation levels must be strictly increasing, got {levels:?}"
            )));
        }
        Ok(MacLevels(levels))
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

// Modified Shepp-Logan (Toft): intensity, semi-axis x, semi-axis y, x0, y0, angle in degrees.
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
];

/// Rasterize the ten-ellipse Shepp-Logan phantom at `size × size`,
/// sampling each pixel center over `[-1, 1]²` with `y` pointing up.
///
/// Output values are clamped into `[0, 1]` (overlapping ellipses can
/// otherwise round to tiny negatives).
pub fn shepp_logan(size: usize) -> Result<Image> {
    if size < 2 {
        return Err(Error::invalid(format!(
            "phantom size must be at least 2, got {size}"
        )));
    }
    let n = size as f64;
    // numerator is an exact integer, so x_j == -x_{n-1-j}
    let coord = |k: usize| ((2 * k + 1) as f64 - n) / n;
    let mut pixels = Vec::with_capacity(size * size);
    for i in 0..size {
        let y = -coord(i);
        for j in 0..size {
            let x = coord(j);
            let mut v = 0.0;
            for &[value, a, b, x0, y0, phi] in &SHEPP_LOGAN {
                let (s, c) = phi.to_radians().sin_cos();
                let dx = x - x0;
                let dy = y - y0;
                let u = dx * c + dy * s;
                let w = -dx * s + dy * c;
                if (u * u) / (a * a) + (w * w) / (b * b) <= 1.0 {
                    v += value;
                }
            }
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    Image::from_vec(size, size, pixels)
}

/// Area-average resampling to `width × height`.
///
/// Each output pixel is the mean of the input area it covers, with partial
/// overlaps weighted by their fraction.
pub fn resize_area(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("target size must be positive"));
    }
    let cols = area_weights(img.width(), width);
    let rows = area_weights(img.height(), height);

    let mut tmp = vec![0.0; img.height() * width];
    for i in 0..img.height() {
        for (oj, taps) in cols.iter().enumerate() {
            tmp[i * width + oj] = taps.iter().map(|&(j, w)| w * img.get(i, j)).sum();
        }
    }
    let mut out = vec![0.0; height * width];
    for (oi, taps) in rows.iter().enumerate() {
        for oj in 0..width {
            out[oi * width + oj] = taps.iter().map(|&(i, w)| w * tmp[i * width + oj]).sum();
        }
    }
    Image::from_vec(width, height, out)
}

// For each output cell, the (input index, weight) pairs of the input cells it overlaps.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|k| {
                    let overlap = (hi.min((k + 1) as f64) - lo.max(k as f64)).max(0.0);
                    (overlap > 0.0).then_some((k, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Separable Gaussian blur, kernel truncated at `3σ`, borders clamped.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!(
            "blur sigma must be a finite non-negative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut tmp = vec![0.0; img.len()];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                let jj = (j + t as isize - radius).clamp(0, w - 1);
                acc += k * img.get(i as usize, jj as usize);
            }
            tmp[(i * w + j) as usize] = acc;
        }
    }
    let mut out = vec![0.0; img.len()];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                let ii = (i + t as isize - radius).clamp(0, h - 1);
                acc += k * tmp[(ii * w + j) as usize];
            }
            out[(i * w + j) as usize] = acc;
        }
    }
    Image::from_vec(img.width(), img.height(), out)
}

/// Map each pixel onto `{0} ∪ levels` by thresholds.
///
/// `v < thresholds[0]` becomes 0, `thresholds[k-1] <= v < thresholds[k]`
/// becomes `levels[k-1]`, and anything at or above the last threshold becomes
/// the last level.
pub fn quantize(img: &Image, levels: &MacLevels, thresholds: &[f64]) -> Result<Image> {
    if thresholds.len() != levels.len() {
        return Err(Error::invalid(format!(
            "{} thresholds given for {} levels",
            thresholds.len(),
            levels.len()
        )));
    }
    if !thresholds[0].is_finite()
        || thresholds[0] <= 0.0
        || thresholds.iter().any(|t| t.is_nan())
        || thresholds.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::invalid(format!(
            "thresholds must be positive and strictly increasing, got {thresholds:?}"
        )));
    }
    img.map(|v| {
        let k = thresholds.partition_point(|&t| t <= v);
        if k == 0 {
            0.0
        } else {
            levels.levels()[k - 1]
        }
    })
}

/// Midpoints between consecutive levels (with 0 prepended), expressed on the
/// `[0, 1]` scale of a min-max normalized image.
pub fn default_thresholds(levels: &MacLevels) -> Vec<f64> {
    let top = levels.max();
    let mut prev = 0.0;
    levels
        .levels()
        .iter()
        .map(|&l| {
            let norm = l / top;
            let t = 0.5 * (prev + norm);
            prev = norm;
            t
        })
        .collect()
}

/// Min-max normalize into `[0, 1]`. A constant image maps to all zeros.
pub fn normalize(img: &Image) -> Image {
    let lo = img.pixels().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = img
        .pixels()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 {
        return Image::zeros(img.width(), img.height()).expect("same valid shape");
    }
    img.map(|v| (v - lo) / span)
        .expect("normalized values are finite")
}

/// Full phantom preparation: resize, blur, then quantize.
///
/// When `thresholds` is `None` the blurred image is min-max normalized and
/// quantized at [`default_thresholds`]; explicit thresholds apply to the raw
/// blurred values.
pub fn prepare(
    source: &Image,
    size: usize,
    sigma: f64,
    levels: &MacLevels,
    thresholds: Option<&[f64]>,
) -> Result<Image> {
    let resized = if source.width() == size && source.height() == size {
        source.clone()
    } else {
        resize_area(source, size, size)?
    };
    let blurred = gaussian_blur(&resized, sigma)?;
    match thresholds {
        Some(t) => quantize(&blurred, levels, t),
        None => quantize(&normalize(&blurred), levels, &default_thresholds(levels)),
    }
}

/// Load a `.pgm` (binary P5, maxval 255) or `.csv` image.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pgm") => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_pgm(&bytes)
        }
        Some("csv") => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text)
        }
        _ => Err(Error::UnsupportedFormat(format!(
            "{} (expected .pgm or .csv)",
            path.display()
        ))),
    }
}

/// Save as `.pgm` or `.csv` according to the extension.
///
/// PGM requires every pixel to be an integer in `0..=255`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path).as_deref() {
        Some("pgm") => to_pgm(img)?,
        Some("csv") => to_csv(img).into_bytes(),
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "{} (expected .pgm or .csv)",
                path.display()
            )))
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

pub fn to_csv(img: &Image) -> String {
    let mut out = String::new();
    for i in 0..img.height() {
        for j in 0..img.width() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", img.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Image> {
    let mut width = None;
    let mut pixels = Vec::new();
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(
                    "image csv",
                    format!("line {}, field {}", lineno + 1, col + 1),
                    format!("not a number: {field:?}"),
                )
            })?;
            pixels.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::parse(
                    "image csv",
                    format!("line {}", lineno + 1),
                    format!("expected {w} fields, found {count}"),
                ))
            }
            _ => {}
        }
        height += 1;
    }
    let width =
        width.ok_or_else(|| Error::parse("image csv", "line 1", "file contains no rows"))?;
    Image::from_vec(width, height, pixels)
}

/// Encode as binary PGM. Values must be integers in `0..=255`.
pub fn to_pgm(img: &Image) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    for (idx, &v) in img.pixels().iter().enumerate() {
        if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
            return Err(Error::invalid(format!(
                "pixel ({}, {}) = {v} cannot be stored in an 8-bit PGM",
                idx / img.width(),
                idx % img.width()
            )));
        }
        out.push(v as u8);
    }
    Ok(out)
}

/// Rescale so the maximum maps to 255, for viewing.
pub fn to_pgm_preview(img: &Image) -> Vec<u8> {
    let hi = img.pixels().iter().copied().fold(0.0, f64::max);
    let scale = if hi > 0.0 { 255.0 / hi } else { 0.0 };
    let preview = img
        .map(|v| (v.max(0.0) * scale).round().min(255.0))
        .expect("finite");
    to_pgm(&preview).expect("preview values are 8-bit integers")
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(
                "pgm header",
                format!("byte {start}"),
                "unexpected end of header",
            ));
        }
        fields.push((
            start,
            String::from_utf8_lossy(&bytes[start..pos]).into_owned(),
        ));
    }
    if fields[0].1 != "P5" {
        return Err(Error::UnsupportedFormat(format!(
            "pgm magic {:?} (only binary P5 is supported)",
            fields[0].1
        )));
    }
    let num = |k: usize| -> Result<usize> {
        fields[k].1.parse().map_err(|_| {
            Error::parse(
                "pgm header",
                format!("byte {}", fields[k].0),
                format!("expected an integer, found {:?}", fields[k].1),
            )
        })
    };
    let (width, height, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "pgm maxval {maxval} (only 255 is supported)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let needed = width * height;
    let available = bytes.len().saturating_sub(pos);
    if available < needed {
        return Err(Error::parse(
            "pgm raster",
            format!("byte {}", pos + available),
            format!("truncated payload: expected {needed} bytes, found {available}"),
        ));
    }
    let pixels = bytes[pos..pos + needed].iter().map(|&b| b as f64).collect();
    Image::from_vec(width, height, pixels)
}
