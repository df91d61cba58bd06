//! Dataset generators and loaders.
//!
//! * ensembles: many k-means clusterings of the same items, each encoded as
//!   `k` binary membership vectors in `R^items`;
//! * images: intensity grids reduced to `k` weighted 2D points by weighted
//!   k-means on pixel coordinates;
//! * Gaussian patterns around shared centers, and identical copies.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::pattern::{Instance, Pattern};

pub const DEFAULT_SEPARATION: f64 = 2.5;
pub const DEFAULT_TOTAL_WEIGHT: u64 = 1000;

/// Generated instance plus ground-truth item labels when the generator has them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub instance: Instance,
    pub labels: Option<Vec<usize>>,
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::invalid("sd", e.to_string()))
}

/// `k` binary vectors in `R^items`; vector `j` has ones at the items assigned to `j`.
pub fn clustering_to_pattern(assignments: &[usize], k: usize) -> Result<Pattern> {
    let items = assignments.len();
    if items == 0 {
        return Err(Error::Empty("clustering has no items"));
    }
    let mut coords = vec![0.0; k * items];
    for (i, &j) in assignments.iter().enumerate() {
        if j >= k {
            return Err(Error::invalid("assignments", format!("cluster {j} out of range for k={k}")));
        }
        coords[j * items + i] = 1.0;
    }
    Pattern::from_flat(k, items, coords, None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub items: usize,
    pub k: usize,
    pub dims: usize,
    pub solutions: usize,
    /// Standard deviation of the Gaussian centers; points have unit spread.
    pub separation: f64,
}

/// Samples items from `k` Gaussians, clusters them `solutions` times with
/// k-means and returns one binary-membership pattern per clustering together
/// with the generating component of every item.
pub fn gen_ensemble_instance<R: Rng + ?Sized>(
    items: usize,
    k: usize,
    dims: usize,
    solutions: usize,
    rng: &mut R,
) -> Result<(Instance, Vec<usize>)> {
    gen_ensemble(EnsembleParams { items, k, dims, solutions, separation: DEFAULT_SEPARATION }, rng)
}

pub fn gen_ensemble<R: Rng + ?Sized>(p: EnsembleParams, rng: &mut R) -> Result<(Instance, Vec<usize>)> {
    if p.k == 0 || p.dims == 0 || p.solutions == 0 {
        return Err(Error::invalid("ensemble", "k, dims and solutions must be at least 1"));
    }
    if p.k > p.items {
        return Err(Error::invalid("k", format!("k={} exceeds items={}", p.k, p.items)));
    }
    let centers_dist = normal(0.0, p.separation)?;
    let unit = normal(0.0, 1.0)?;
    let centers: Vec<f64> = (0..p.k * p.dims).map(|_| centers_dist.sample(rng)).collect();
    let mut labels: Vec<usize> = (0..p.items).map(|i| i % p.k).collect();
    labels.shuffle(rng);
    let mut points = Vec::with_capacity(p.items * p.dims);
    for &l in &labels {
        points.extend(centers[l * p.dims..(l + 1) * p.dims].iter().map(|c| c + unit.sample(rng)));
    }
    let mut patterns = Vec::with_capacity(p.solutions);
    for _ in 0..p.solutions {
        let km = kmeans(&points, p.dims, None, p.k, rng)?;
        patterns.push(clustering_to_pattern(&km.assignments, p.k)?);
    }
    Ok((Instance::new(patterns)?, labels))
}

/// `n` copies of the encoding of one random balanced clustering.
pub fn identical_instance<R: Rng + ?Sized>(n: usize, items: usize, k: usize, rng: &mut R) -> Result<(Instance, Vec<usize>)> {
    if n == 0 {
        return Err(Error::Empty("instance has no patterns"));
    }
    if k == 0 || k > items {
        return Err(Error::invalid("k", format!("need 1 <= k <= items, got k={k}, items={items}")));
    }
    let mut labels: Vec<usize> = (0..items).map(|i| i % k).collect();
    labels.shuffle(rng);
    let p = clustering_to_pattern(&labels, k)?;
    Ok((Instance::new(vec![p; n])?, labels))
}

/// `n` patterns of `k` points; point `j` of every pattern is drawn around a
/// shared center `c_j ~ N(0, spread^2 I)` with unit-free `noise`, and the
/// point order inside each pattern is shuffled.
pub fn gaussian_instance<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    d: usize,
    spread: f64,
    noise: f64,
    rng: &mut R,
) -> Result<Instance> {
    if n == 0 || k == 0 || d == 0 {
        return Err(Error::invalid("gaussian", "n, k and d must be at least 1"));
    }
    let cdist = normal(0.0, spread)?;
    let ndist = normal(0.0, noise)?;
    let centers: Vec<f64> = (0..k * d).map(|_| cdist.sample(rng)).collect();
    let mut patterns = Vec::with_capacity(n);
    let mut order: Vec<usize> = (0..k).collect();
    for _ in 0..n {
        order.shuffle(rng);
        let coords: Vec<f64> = order
            .iter()
            .flat_map(|&j| centers[j * d..(j + 1) * d].iter().map(|c| c + ndist.sample(rng)).collect::<Vec<_>>())
            .collect();
        patterns.push(Pattern::from_flat(k, d, coords, None)?);
    }
    Instance::new(patterns)
}

/// Row-major grid of non-negative intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Data(format!("image buffer has {} values, expected {}", pixels.len(), width * height)));
        }
        if pixels.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Data("image intensities must be finite and non-negative".into()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Splits `total` into integers proportional to `mass`, largest remainder
/// first (ties to the lower index).
pub fn largest_remainder(mass: &[f64], total: u64) -> Result<Vec<u64>> {
    let sum: f64 = mass.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let exact: Vec<f64> = mass.iter().map(|m| m / sum * total as f64).collect();
    let mut out: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &j in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[j] += 1;
    }
    // Rounding can push the floors one unit over; take it back from the smallest remainders.
    let mut excess = assigned.saturating_sub(total);
    for &j in order.iter().rev() {
        if excess == 0 {
            break;
        }
        if out[j] > 0 {
            out[j] -= 1;
            excess -= 1;
        }
    }
    Ok(out)
}

/// Weighted k-means on the positive pixels (`x` = column, `y` = row), one
/// output point per cluster center. Weights are cluster intensity sums scaled
/// to `total_weight`.
pub fn image_to_weighted_pattern<R: Rng + ?Sized>(
    image: &GrayImage,
    k: usize,
    total_weight: u64,
    rng: &mut R,
) -> Result<Pattern> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if total_weight == 0 {
        return Err(Error::ZeroTotalWeight);
    }
    let mut coords = Vec::new();
    let mut mass = Vec::new();
    for row in 0..image.height {
        for col in 0..image.width {
            let v = image.get(row, col);
            if v > 0.0 {
                coords.extend([col as f64, row as f64]);
                mass.push(v);
            }
        }
    }
    if mass.is_empty() {
        return Err(Error::Data("image has no positive pixel".into()));
    }
    let km = kmeans(&coords, 2, Some(&mass), k, rng)?;
    let mut cluster_mass = vec![0.0; k];
    for (i, &j) in km.assignments.iter().enumerate() {
        cluster_mass[j] += mass[i];
    }
    let weights = largest_remainder(&cluster_mass, total_weight)?;
    Pattern::from_flat(k, 2, km.centers, Some(weights))
}

type Stroke = &'static [(f64, f64)];

/// Polylines of ten digit-like glyphs in the unit square (`y` points down).
const GLYPHS: [&[Stroke]; 10] = [
    &[&[
        (0.5, 0.15),
        (0.68, 0.22),
        (0.75, 0.4),
        (0.75, 0.6),
        (0.68, 0.78),
        (0.5, 0.85),
        (0.32, 0.78),
        (0.25, 0.6),
        (0.25, 0.4),
        (0.32, 0.22),
        (0.5, 0.15),
    ]],
    &[&[(0.4, 0.27), (0.52, 0.15), (0.52, 0.85)]],
    &[&[(0.3, 0.3), (0.4, 0.18), (0.6, 0.18), (0.7, 0.3), (0.65, 0.45), (0.3, 0.85), (0.72, 0.85)]],
    &[&[(0.3, 0.2), (0.65, 0.2), (0.5, 0.48), (0.7, 0.65), (0.6, 0.85), (0.3, 0.82)]],
    &[&[(0.62, 0.85), (0.62, 0.15), (0.28, 0.6), (0.75, 0.6)]],
    &[&[(0.7, 0.15), (0.35, 0.15), (0.32, 0.45), (0.6, 0.45), (0.7, 0.65), (0.6, 0.85), (0.3, 0.82)]],
    &[&[(0.65, 0.15), (0.4, 0.4), (0.32, 0.65), (0.45, 0.85), (0.65, 0.78), (0.65, 0.58), (0.45, 0.52), (0.33, 0.62)]],
    &[&[(0.28, 0.18), (0.72, 0.18), (0.45, 0.85)]],
    &[
        &[(0.5, 0.17), (0.64, 0.24), (0.64, 0.4), (0.5, 0.47), (0.36, 0.4), (0.36, 0.24), (0.5, 0.17)],
        &[(0.5, 0.47), (0.68, 0.56), (0.68, 0.76), (0.5, 0.85), (0.32, 0.76), (0.32, 0.56), (0.5, 0.47)],
    ],
    &[
        &[(0.5, 0.18), (0.66, 0.26), (0.66, 0.44), (0.5, 0.52), (0.34, 0.44), (0.34, 0.26), (0.5, 0.18)],
        &[(0.66, 0.35), (0.6, 0.85)],
    ],
];

pub const GLYPH_COUNT: usize = GLYPHS.len();

fn segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (dx, dy) = (p.0 - a.0 - t * vx, p.1 - a.1 - t * vy);
    dx * dx + dy * dy
}

/// Renders glyph `glyph` on a `side x side` grid with a random shift,
/// scale and rotation. Faint pixels are cut to zero.
pub fn blob_image<R: Rng + ?Sized>(glyph: usize, side: usize, rng: &mut R) -> Result<GrayImage> {
    let strokes = GLYPHS.get(glyph).ok_or_else(|| Error::invalid("glyph", format!("must be < {GLYPH_COUNT}")))?;
    if side < 4 {
        return Err(Error::invalid("side", "must be at least 4"));
    }
    let s = side as f64;
    let scale = rng.random_range(0.85..1.15);
    let angle: f64 = rng.random_range(-0.15..0.15);
    let shift = (rng.random_range(-0.07..0.07), rng.random_range(-0.07..0.07));
    let (sin, cos) = angle.sin_cos();
    let place = |(x, y): (f64, f64)| {
        let (cx, cy) = (x - 0.5, y - 0.5);
        let rx = scale * (cos * cx - sin * cy) + 0.5 + shift.0;
        let ry = scale * (sin * cx + cos * cy) + 0.5 + shift.1;
        (rx * s, ry * s)
    };
    let segments: Vec<((f64, f64), (f64, f64))> = strokes
        .iter()
        .flat_map(|st| st.windows(2).map(|w| (place(w[0]), place(w[1]))).collect::<Vec<_>>())
        .collect();
    let pen = 0.045 * s;
    let mut pixels = vec![0.0; side * side];
    for row in 0..side {
        for col in 0..side {
            let p = (col as f64 + 0.5, row as f64 + 0.5);
            let d2 = segments.iter().map(|&(a, b)| segment_dist2(p, a, b)).fold(f64::INFINITY, f64::min);
            let v = (-d2 / (2.0 * pen * pen)).exp();
            pixels[row * side + col] = if v < 0.1 { 0.0 } else { v };
        }
    }
    GrayImage::new(side, side, pixels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageParams {
    pub count: usize,
    pub k: usize,
    pub side: usize,
    pub total_weight: u64,
    /// Share of images drawn from a different glyph than `glyph`.
    pub noise_fraction: f64,
    pub glyph: usize,
}

/// Synthetic images of one glyph (with a fraction of other glyphs mixed
/// in), each reduced to a weighted pattern.
pub fn gen_image_instance<R: Rng + ?Sized>(p: ImageParams, rng: &mut R) -> Result<Instance> {
    if p.count == 0 {
        return Err(Error::Empty("no images requested"));
    }
    if !(0.0..=1.0).contains(&p.noise_fraction) {
        return Err(Error::invalid("noise_fraction", "must lie in [0, 1]"));
    }
    let mut patterns = Vec::with_capacity(p.count);
    for _ in 0..p.count {
        let glyph = if rng.random_bool(p.noise_fraction) {
            (p.glyph + rng.random_range(1..GLYPH_COUNT)) % GLYPH_COUNT
        } else {
            p.glyph
        };
        let img = blob_image(glyph, p.side, rng)?;
        patterns.push(image_to_weighted_pattern(&img, p.k, p.total_weight, rng)?);
    }
    Instance::new(patterns)
}

fn pgm_tokens(bytes: &[u8], count: usize) -> Result<(Vec<usize>, usize)> {
    let mut out = Vec::with_capacity(count);
    let mut pos = 0;
    while out.len() < count {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Data("truncated or malformed PGM".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        out.push(text.parse().map_err(|_| Error::Data(format!("bad PGM number `{text}`")))?);
    }
    Ok((out, pos))
}

/// Parses plain (`P2`) or binary (`P5`) PGM; intensities are scaled to `[0, 1]`.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(Error::Data("not a P2/P5 PGM file".into()));
    }
    let binary = bytes[1] == b'5';
    let body = &bytes[2..];
    let (head, pos) = pgm_tokens(body, 3)?;
    let (width, height, maxval) = (head[0], head[1], head[2]);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Data(format!("bad PGM header {width}x{height}, maxval {maxval}")));
    }
    let n = width * height;
    let raw: Vec<usize> = if binary {
        let data = &body[(pos + 1).min(body.len())..];
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        if data.len() < need {
            return Err(Error::Data("truncated PGM raster".into()));
        }
        if wide {
            data[..need].chunks_exact(2).map(|c| ((c[0] as usize) << 8) | c[1] as usize).collect()
        } else {
            data[..n].iter().map(|&b| b as usize).collect()
        }
    } else {
        pgm_tokens(&body[pos..], n)?.0
    };
    if raw.iter().any(|&v| v > maxval) {
        return Err(Error::Data("PGM sample exceeds maxval".into()));
    }
    GrayImage::new(width, height, raw.into_iter().map(|v| v as f64 / maxval as f64).collect())
}

/// Every `*.pgm` file in `dir`, in file-name order.
pub fn load_pgm_dir(dir: &Path) -> Result<Vec<GrayImage>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no .pgm files in {}", dir.display())));
    }
    paths.iter().map(|p| parse_pgm(&std::fs::read(p)?)).collect()
}

/// Ground-truth labels stored as a JSON array of non-negative integers.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
