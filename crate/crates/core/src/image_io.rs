//! Grayscale image container, raster loading, resampling to the working
//! resolution and synthetic phantoms.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working resolution used when nothing else is requested.
pub const DEFAULT_WORKING_SIZE: usize = 32;

/// Row-major image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::InvalidImage(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self { width, height, pixels })
    }

    /// Builds an image by evaluating `f(row, col)`; values are clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    /// Side length of a square image.
    pub fn side(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.width)
        } else {
            Err(Error::NotSquare {
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn transpose(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for col in 0..self.width {
            for row in 0..self.height {
                pixels.push(self.get(row, col));
            }
        }
        Self {
            width: self.height,
            height: self.width,
            pixels,
        }
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }
}

/// Loads a PNG, PGM/PNM or BMP file as luminance scaled to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let read_err = |source| Error::ImageRead {
        path: path.to_path_buf(),
        source,
    };
    let reader = image::ImageReader::open(path)
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .with_guessed_format()
        .map_err(|e| read_err(image::ImageError::IoError(e)))?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat(path.to_path_buf()));
    }
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(_) => Error::UnsupportedFormat(path.to_path_buf()),
        other => read_err(other),
    })?;
    let luma = decoded.to_luma8();
    let (width, height) = (luma.width() as usize, luma.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    let pixels = luma.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    GrayImage::new(width, height, pixels)
}

/// Writes a binary PGM (P5, maxval 255), quantizing intensities to 8 bits.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = img.pixels.iter().map(|v| (v * 255.0).round() as u8).collect();
    write_pgm_bytes(path.as_ref(), img.width, img.height, &bytes)
}

pub(crate) fn write_pgm_bytes(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

/// Per-output-sample source indices and weights along one axis.
fn axis_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    if n_in == n_out {
        return (0..n_out).map(|i| vec![(i, 1.0)]).collect();
    }
    let scale = n_in as f64 / n_out as f64;
    if n_out < n_in {
        // area average over the footprint [j*scale, (j+1)*scale)
        (0..n_out)
            .map(|j| {
                let lo = j as f64 * scale;
                let hi = (j + 1) as f64 * scale;
                let first = lo.floor() as usize;
                let last = (hi.ceil() as usize).min(n_in);
                (first..last)
                    .filter_map(|i| {
                        let overlap = hi.min((i + 1) as f64) - lo.max(i as f64);
                        (overlap > 0.0).then_some((i, overlap / scale))
                    })
                    .collect()
            })
            .collect()
    } else {
        (0..n_out)
            .map(|j| {
                let src = ((j as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = src.floor() as usize;
                let frac = src - i0 as f64;
                if i0 + 1 < n_in && frac > 0.0 {
                    vec![(i0, 1.0 - frac), (i0 + 1, frac)]
                } else {
                    vec![(i0, 1.0)]
                }
            })
            .collect()
    }
}

/// Resamples to `rows x cols`: area averaging on shrinking axes, bilinear on
/// growing axes. Resampling to the current size is the identity.
pub fn normalize(img: &GrayImage, rows: usize, cols: usize) -> Result<GrayImage> {
    if rows == 0 || cols == 0 {
        return Err(Error::DegenerateSize { rows, cols });
    }
    if rows == img.height && cols == img.width {
        return Ok(img.clone());
    }
    let col_w = axis_weights(img.width, cols);
    let row_w = axis_weights(img.height, rows);

    // horizontal pass: height x cols
    let mut tmp = vec![0.0; img.height * cols];
    for r in 0..img.height {
        let src = &img.pixels[r * img.width..(r + 1) * img.width];
        for (c, weights) in col_w.iter().enumerate() {
            tmp[r * cols + c] = weights.iter().map(|&(i, w)| w * src[i]).sum();
        }
    }
    let mut pixels = vec![0.0; rows * cols];
    for (r, weights) in row_w.iter().enumerate() {
        for c in 0..cols {
            let v: f64 = weights.iter().map(|&(i, w)| w * tmp[i * cols + c]).sum();
            pixels[r * cols + c] = v.clamp(0.0, 1.0);
        }
    }
    GrayImage::new(cols, rows, pixels)
}

/// Built-in synthetic test images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    SheppLogan,
    Disk,
    Square,
    Gradient,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 4] = [
        PhantomKind::SheppLogan,
        PhantomKind::Disk,
        PhantomKind::Square,
        PhantomKind::Gradient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::SheppLogan => "shepp-logan",
            PhantomKind::Disk => "disk",
            PhantomKind::Square => "square",
            PhantomKind::Gradient => "gradient",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhantomKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPhantom(s.to_string()))
    }
}

// (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
const SHEPP_LOGAN_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

fn shepp_logan_value(x: f64, y: f64) -> f64 {
    SHEPP_LOGAN_ELLIPSES
        .iter()
        .filter(|&&(_, a, b, x0, y0, phi)| {
            let (s, c) = phi.to_radians().sin_cos();
            let (dx, dy) = (x - x0, y - y0);
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            (u / a).powi(2) + (v / b).powi(2) <= 1.0
        })
        .map(|e| e.0)
        .sum()
}

/// Deterministic synthetic image of `size x size` pixels.
///
/// * `shepp-logan`: the modified (high-contrast) head phantom, peak intensity 1.
/// * `disk`: 1 inside a centered disk of radius `0.375 * size`, 0 outside.
/// * `square`: 1 inside a centered axis-aligned square of side `size / 2`.
/// * `gradient`: row `k` holds the constant value `k / (size - 1)`.
pub fn make_phantom(kind: PhantomKind, size: usize) -> Result<GrayImage> {
    if size < 16 {
        return Err(Error::PhantomTooSmall(size));
    }
    build_phantom(kind, size)
}

pub(crate) fn build_phantom(kind: PhantomKind, size: usize) -> Result<GrayImage> {
    let center = (size as f64 - 1.0) / 2.0;
    let n = size as f64;
    match kind {
        PhantomKind::SheppLogan => GrayImage::from_fn(size, size, |row, col| {
            let x = (2.0 * col as f64 + 1.0) / n - 1.0;
            let y = 1.0 - (2.0 * row as f64 + 1.0) / n;
            shepp_logan_value(x, y)
        }),
        PhantomKind::Disk => {
            let radius = 0.375 * n;
            GrayImage::from_fn(size, size, |row, col| {
                let (dx, dy) = (col as f64 - center, row as f64 - center);
                if dx * dx + dy * dy <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            })
        }
        PhantomKind::Square => {
            let half = n / 4.0;
            GrayImage::from_fn(size, size, |row, col| {
                let inside = (col as f64 - center).abs() < half && (row as f64 - center).abs() < half;
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
        }
        PhantomKind::Gradient => GrayImage::from_fn(size, size, |row, _| row as f64 / (size as f64 - 1.0)),
    }
}
