//! Parallel-beam geometry: Siddon ray tracing into a sparse system matrix,
//! forward projection, and multiplicative Gaussian measurement noise.
//!
//! The image occupies `[-W/2, W/2] × [-H/2, H/2]` in pixel units with row 0
//! at the top. The ray for angle `θ` and detector offset `t` is the line
//! `x cos θ + y sin θ = t`, so `θ = 0` integrates down image columns.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::Image;

// Segments shorter than this are tracing noise from coincident crossings.
const MIN_SEGMENT: f64 = 1e-10;

/// `count` equally spaced angles `0, dθ, …, 180 − dθ` in degrees.
pub fn isometric_angles(count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("at least one projection angle is required"));
    }
    Ok((0..count)
        .map(|k| 180.0 * k as f64 / count as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionGeometry {
    pub image_width: usize,
    pub image_height: usize,
    /// Degrees, strictly increasing, each in `[0, 180)`.
    pub angles: Vec<f64>,
    pub detector_bins: usize,
    pub bin_width: f64,
}

impl ProjectionGeometry {
    pub fn new(
        image_width: usize,
        image_height: usize,
        angles: Vec<f64>,
        detector_bins: usize,
        bin_width: f64,
    ) -> Result<Self> {
        let geom = ProjectionGeometry {
            image_width,
            image_height,
            angles,
            detector_bins,
            bin_width,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Detector of unit-width bins spanning the image diagonal.
    ///
    /// The bin count is `ceil(√2 · max(W, H))`, bumped by one when its parity
    /// differs from `max(W, H)` so that bin centers land on pixel centers at
    /// 0° and 90° (odd images therefore get a central bin).
    pub fn with_default_detector(
        image_width: usize,
        image_height: usize,
        angles: Vec<f64>,
    ) -> Result<Self> {
        let side = image_width.max(image_height);
        let mut bins = (std::f64::consts::SQRT_2 * side as f64).ceil() as usize;
        let diagonal = ((image_width.pow(2) + image_height.pow(2)) as f64).sqrt();
        if (bins as f64) < diagonal {
            bins += 1;
        }
        if bins % 2 != side % 2 {
            bins += 1;
        }
        Self::new(image_width, image_height, angles, bins, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if self.angles.is_empty() {
            return Err(Error::invalid("at least one projection angle is required"));
        }
        if self
            .angles
            .iter()
            .any(|a| !a.is_finite() || !(0.0..180.0).contains(a))
        {
            return Err(Error::invalid(format!(
                "angles must lie in [0, 180), got {:?}",
                self.angles
            )));
        }
        if self.angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("angles must be strictly increasing"));
        }
        if self.detector_bins == 0 || !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::invalid(
                "detector needs at least one bin of positive width",
            ));
        }
        let span = self.detector_bins as f64 * self.bin_width;
        if span + 1e-9 < self.diagonal() {
            return Err(Error::invalid(format!(
                "detector span {span} does not cover the image diagonal {}",
                self.diagonal()
            )));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        ((self.image_width.pow(2) + self.image_height.pow(2)) as f64).sqrt()
    }

    pub fn num_pixels(&self) -> usize {
        self.image_width * self.image_height
    }

    pub fn num_rays(&self) -> usize {
        self.angles.len() * self.detector_bins
    }

    /// Signed detector coordinate of a bin center.
    pub fn bin_offset(&self, bin: usize) -> f64 {
        (bin as f64 - 0.5 * (self.detector_bins as f64 - 1.0)) * self.bin_width
    }

    /// Fractional bin index for a detector coordinate; inverse of [`bin_offset`](Self::bin_offset).
    pub fn bin_position(&self, offset: f64) -> f64 {
        offset / self.bin_width + 0.5 * (self.detector_bins as f64 - 1.0)
    }
}

/// `(cos θ, sin θ)` with exact values on the axes.
pub(crate) fn direction(deg: f64) -> (f64, f64) {
    if deg == 0.0 {
        (1.0, 0.0)
    } else if deg == 90.0 {
        (0.0, 1.0)
    } else {
        let (s, c) = deg.to_radians().sin_cos();
        (c, s)
    }
}

/// Sparse ray-pixel weights in compressed-row form.
///
/// Row `a * bins + b` is the ray at angle index `a` through bin `b`; each
/// entry is `(pixel index, intersection length)` with pixels indexed
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    geometry: ProjectionGeometry,
    offsets: Vec<usize>,
    pixels: Vec<usize>,
    weights: Vec<f64>,
}

impl SystemMatrix {
    pub fn geometry(&self) -> &ProjectionGeometry {
        &self.geometry
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
        (&self.pixels[lo..hi], &self.weights[lo..hi])
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    /// `Aᵀ y` as a flat pixel vector.
    pub fn back_project(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.geometry.num_pixels()];
        for (r, &v) in values.iter().enumerate() {
            let (px, w) = self.row(r);
            for (&p, &wt) in px.iter().zip(w) {
                out[p] += wt * v;
            }
        }
        out
    }

    /// `A x` for a flat pixel vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_rows())
            .map(|r| {
                let (px, w) = self.row(r);
                px.iter().zip(w).map(|(&p, &wt)| wt * x[p]).sum()
            })
            .collect()
    }
}

/// Trace one ray through the pixel grid, returning `(pixel, length)` pairs in
/// traversal order.
pub fn trace_ray(width: usize, height: usize, angle_deg: f64, offset: f64) -> Vec<(usize, f64)> {
    let (c, s) = direction(angle_deg);
    let (half_w, half_h) = (0.5 * width as f64, 0.5 * height as f64);
    let origin = (offset * c, offset * s);
    let dir = (-s, c);

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (o, d, half) in [(origin.0, dir.0, half_w), (origin.1, dir.1, half_h)] {
        if d == 0.0 {
            if o <= -half || o >= half {
                return Vec::new();
            }
        } else {
            let a = (-half - o) / d;
            let b = (half - o) / d;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    if hi - lo <= MIN_SEGMENT {
        return Vec::new();
    }

    let mut alphas = vec![lo, hi];
    if dir.0 != 0.0 {
        for k in 0..=width {
            let a = (k as f64 - half_w - origin.0) / dir.0;
            if a > lo && a < hi {
                alphas.push(a);
            }
        }
    }
    if dir.1 != 0.0 {
        for k in 0..=height {
            let a = (k as f64 - half_h - origin.1) / dir.1;
            if a > lo && a < hi {
                alphas.push(a);
            }
        }
    }
    alphas.sort_by(f64::total_cmp);

    let mut out: Vec<(usize, f64)> = Vec::new();
    for pair in alphas.windows(2) {
        let len = pair[1] - pair[0];
        if len <= MIN_SEGMENT {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let x = origin.0 + mid * dir.0;
        let y = origin.1 + mid * dir.1;
        let col = ((x + half_w).floor() as isize).clamp(0, width as isize - 1) as usize;
        let row = ((half_h - y).floor() as isize).clamp(0, height as isize - 1) as usize;
        let pixel = row * width + col;
        match out.last_mut() {
            Some((p, l)) if *p == pixel => *l += len,
            _ => out.push((pixel, len)),
        }
    }
    out
}

/// Intersection-length system matrix for a validated geometry.
pub fn build_system_matrix(geom: &ProjectionGeometry) -> SystemMatrix {
    let per_angle = |deg: f64| -> Vec<Vec<(usize, f64)>> {
        (0..geom.detector_bins)
            .map(|b| trace_ray(geom.image_width, geom.image_height, deg, geom.bin_offset(b)))
            .collect()
    };

    #[cfg(feature = "parallel")]
    let rays: Vec<Vec<Vec<(usize, f64)>>> = {
        use rayon::prelude::*;
        geom.angles.par_iter().map(|&d| per_angle(d)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rays: Vec<Vec<Vec<(usize, f64)>>> = geom.angles.iter().map(|&d| per_angle(d)).collect();

    let mut offsets = Vec::with_capacity(geom.num_rays() + 1);
    let mut pixels = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for ray in rays.into_iter().flatten() {
        for (p, w) in ray {
            pixels.push(p);
            weights.push(w);
        }
        offsets.push(pixels.len());
    }
    SystemMatrix {
        geometry: geom.clone(),
        offsets,
        pixels,
        weights,
    }
}

/// Projection measurements `P(θ, s)`: one row per angle, one column per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: usize,
    bins: usize,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn from_vec(angles: usize, bins: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != angles * bins {
            return Err(Error::mismatch(format!(
                "{} values for a {angles}x{bins} sinogram",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sinogram values must be finite"));
        }
        Ok(Sinogram {
            angles,
            bins,
            values,
        })
    }

    pub fn num_angles(&self) -> usize {
        self.angles
    }

    pub fn num_bins(&self) -> usize {
        self.bins
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, angle: usize, bin: usize) -> f64 {
        self.values[angle * self.bins + bin]
    }

    pub fn row(&self, angle: usize) -> &[f64] {
        &self.values[angle * self.bins..(angle + 1) * self.bins]
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn matches(&self, geom: &ProjectionGeometry) -> bool {
        self.angles == geom.angles.len() && self.bins == geom.detector_bins
    }

    /// CSV with a `# angles=<a> bins=<b>` header and one row per angle.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# angles={} bins={}\n", self.angles, self.bins);
        for a in 0..self.angles {
            for (b, v) in self.row(a).iter().enumerate() {
                if b > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("sinogram csv", "line 1", "empty file"))?;
        let (angles, bins) = parse_header(header)?;
        let mut values = Vec::with_capacity(angles * bins);
        let mut rows = 0;
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for (col, field) in line.split(',').enumerate() {
                values.push(field.trim().parse::<f64>().map_err(|_| {
                    Error::parse(
                        "sinogram csv",
                        format!("line {}, field {}", lineno + 1, col + 1),
                        format!("not a number: {field:?}"),
                    )
                })?);
            }
            if values.len() - before != bins {
                return Err(Error::parse(
                    "sinogram csv",
                    format!("line {}", lineno + 1),
                    format!("expected {bins} values, found {}", values.len() - before),
                ));
            }
            rows += 1;
        }
        if rows != angles {
            return Err(Error::parse(
                "sinogram csv",
                format!("line {}", text.lines().count()),
                format!("header declares {angles} angles but {rows} rows follow"),
            ));
        }
        Sinogram::from_vec(angles, bins, values)
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::parse(
            "sinogram csv",
            "line 1",
            format!("expected '# angles=<a> bins=<b>', found {line:?}"),
        )
    };
    let rest = line.strip_prefix('#').ok_or_else(bad)?;
    let mut angles = None;
    let mut bins = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("angles", v)) => angles = v.parse().ok(),
            Some(("bins", v)) => bins = v.parse().ok(),
            _ => return Err(bad()),
        }
    }
    Ok((angles.ok_or_else(bad)?, bins.ok_or_else(bad)?))
}

/// `P(θ, s) = Σ c_ij · I_ij` over the matrix row for `(θ, s)`.
pub fn forward_project(img: &Image, sm: &SystemMatrix) -> Result<Sinogram> {
    let g = sm.geometry();
    if img.width() != g.image_width || img.height() != g.image_height {
        return Err(Error::mismatch(format!(
            "image is {}x{} but geometry expects {}x{}",
            img.width(),
            img.height(),
            g.image_width,
            g.image_height
        )));
    }
    Sinogram::from_vec(g.angles.len(), g.detector_bins, sm.apply(img.pixels()))
}

/// Multiplicative Gaussian noise: each `v` becomes `v + level·v·z`, with `z`
/// drawn from a ChaCha8 stream seeded by `seed`.
pub fn add_noise(sino: &Sinogram, level: f64, seed: u64) -> Result<Sinogram> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::invalid(format!(
            "noise level must be finite and non-negative, got {level}"
        )));
    }
    if level == 0.0 {
        return Ok(sino.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = sino
        .values()
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + level * v * z
        })
        .collect();
    Sinogram::from_vec(sino.num_angles(), sino.num_bins(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isometric_angle_sets() {
        assert_eq!(isometric_angles(3).unwrap(), vec![0.0, 60.0, 120.0]);
        assert_eq!(isometric_angles(1).unwrap(), vec![0.0]);
        assert_eq!(
            isometric_angles(6).unwrap(),
            vec![0.0, 30.0, 60.0, 90.0, 120.0, 150.0]
        );
        assert!(isometric_angles(0).is_err());
    }

    #[test]
    fn default_detector_covers_diagonal_and_matches_parity() {
        for n in 1..40 {
            let g = ProjectionGeometry::with_default_detector(n, n, vec![0.0]).unwrap();
            assert!(g.detector_bins as f64 >= g.diagonal());
            assert_eq!(g.detector_bins % 2, n % 2);
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(ProjectionGeometry::new(2, 2, vec![0.0, 180.0], 4, 1.0).is_err());
        assert!(ProjectionGeometry::new(2, 2, vec![10.0, 5.0], 4, 1.0).is_err());
        assert!(ProjectionGeometry::new(2, 2, vec![0.0], 2, 1.0).is_err());
        assert!(ProjectionGeometry::new(2, 2, vec![0.0], 4, 0.0).is_err());
        assert!(ProjectionGeometry::new(2, 2, vec![0.0], 4, 1.0).is_ok());
    }

    #[test]
    fn unit_pixel_single_centered_bin() {
        let g = ProjectionGeometry::new(1, 1, vec![0.0], 1, 1.5).unwrap();
        let sm = build_system_matrix(&g);
        let (px, w) = sm.row(0);
        assert_eq!(px, &[0]);
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn column_aligned_rays_cross_two_pixels_each() {
        let g = ProjectionGeometry::new(2, 2, vec![0.0], 4, 1.0).unwrap();
        let sm = build_system_matrix(&g);
        assert!(sm.row(0).0.is_empty());
        assert!(sm.row(3).0.is_empty());
        let mut left: Vec<usize> = sm.row(1).0.to_vec();
        left.sort();
        assert_eq!(left, vec![0, 2]);
        let mut right: Vec<usize> = sm.row(2).0.to_vec();
        right.sort();
        assert_eq!(right, vec![1, 3]);
        for r in [1, 2] {
            assert!(sm.row(r).1.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        }

        let ones = Image::filled(2, 2, 1.0).unwrap();
        let p = forward_project(&ones, &sm).unwrap();
        assert_eq!(p.row(0)[1], 2.0);
        assert_eq!(p.row(0)[2], 2.0);
    }

    #[test]
    fn diagonal_ray_has_diagonal_length() {
        let g = ProjectionGeometry::with_default_detector(2, 2, vec![45.0]).unwrap();
        let sm = build_system_matrix(&g);
        let center = (0..g.detector_bins).find(|&b| g.bin_offset(b).abs() < 1e-12);
        // even bin count: trace the central ray directly
        let ray = match center {
            Some(b) => sm.row(b).1.to_vec(),
            None => trace_ray(2, 2, 45.0, 0.0)
                .into_iter()
                .map(|(_, w)| w)
                .collect(),
        };
        let total: f64 = ray.iter().sum();
        assert!((total - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
    }

    // Chord length of a line x cos + y sin = t through a w×h box, computed by
    // clipping the line against the four edges.
    fn chord(w: f64, h: f64, deg: f64, t: f64) -> f64 {
        let (c, s) = direction(deg);
        let p = (t * c, t * s);
        let d = (-s, c);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (o, dd, half) in [(p.0, d.0, w / 2.0), (p.1, d.1, h / 2.0)] {
            if dd.abs() < 1e-300 {
                if o.abs() >= half {
                    return 0.0;
                }
            } else {
                let a = (-half - o) / dd;
                let b = (half - o) / dd;
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        }
        (hi - lo).max(0.0)
    }

    #[test]
    fn row_sums_equal_chord_lengths() {
        let g = ProjectionGeometry::with_default_detector(7, 5, vec![0.0, 13.0, 45.0, 90.0, 121.5])
            .unwrap();
        let sm = build_system_matrix(&g);
        for (a, &deg) in g.angles.iter().enumerate() {
            for b in 0..g.detector_bins {
                let r = a * g.detector_bins + b;
                let expected = chord(7.0, 5.0, deg, g.bin_offset(b));
                assert!(
                    (sm.row_sum(r) - expected).abs() < 1e-9,
                    "angle {deg} bin {b}"
                );
                assert!(sm.row_sum(r) <= g.diagonal() + 1e-9);
                assert!(sm.row(r).1.iter().all(|&w| w > 0.0 && w.is_finite()));
            }
        }
    }

    #[test]
    fn zero_image_projects_to_zero() {
        let g =
            ProjectionGeometry::with_default_detector(5, 5, isometric_angles(4).unwrap()).unwrap();
        let sm = build_system_matrix(&g);
        let p = forward_project(&Image::zeros(5, 5).unwrap(), &sm).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert!(forward_project(&Image::zeros(4, 5).unwrap(), &sm).is_err());
    }

    #[test]
    fn axis_aligned_projections_conserve_mass() {
        let img = crate::phantom::shepp_logan(16).unwrap();
        let g = ProjectionGeometry::with_default_detector(16, 16, vec![0.0, 90.0]).unwrap();
        let p = forward_project(&img, &build_system_matrix(&g)).unwrap();
        let total: f64 = p.values().iter().sum();
        let expected = img.sum() * 2.0;
        assert!((total - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn noise_zero_level_and_determinism() {
        let s = Sinogram::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(add_noise(&s, 0.0, 9).unwrap(), s);
        let a = add_noise(&s, 0.05, 9).unwrap();
        let b = add_noise(&s, 0.05, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, s);
        assert_ne!(a, add_noise(&s, 0.05, 10).unwrap());
        assert!(add_noise(&s, -0.1, 9).is_err());
    }

    #[test]
    fn sinogram_csv_round_trip_and_errors() {
        let s = Sinogram::from_vec(2, 3, vec![0.1, 2.0, 1.0 / 3.0, 4.0, 0.0, 6.5]).unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("# angles=2 bins=3\n"));
        assert_eq!(Sinogram::from_csv(&text).unwrap(), s);
        assert!(Sinogram::from_csv("angles=2 bins=3\n").is_err());
        assert!(Sinogram::from_csv("# angles=2 bins=3\n1,2,3\n").is_err());
        assert!(Sinogram::from_csv("# angles=1 bins=3\n1,2\n").is_err());
    }
}
