//! Discrete forward Radon transform over parallel-beam geometry.
//!
//! Pixel `(row, col)` of a `side x side` image sits at `x = col - c`,
//! `y = c - row` with `c = (side - 1) / 2`. Its mass is split linearly
//! between the two detector bins adjacent to `rho = x cos(theta) + y sin(theta)`.
//! Bin `(L - 1) / 2` is centered on `rho = 0`, where `L` is the smallest odd
//! integer `>= sqrt(2) * side`, so every angle yields a zero-padded vector of
//! the same length.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::GrayImage;

/// Sorted, duplicate-free set of projection angles in degrees, each in `[0, 180)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AngleSet(Vec<f64>);

impl AngleSet {
    /// Validates and sorts `angles`. Input order does not matter.
    pub fn new(mut angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidAngles("empty angle set".into()));
        }
        if let Some(bad) = angles.iter().find(|a| !(a.is_finite() && (0.0..180.0).contains(*a))) {
            return Err(Error::InvalidAngles(format!("angle {bad} outside [0, 180)")));
        }
        angles.sort_by(f64::total_cmp);
        if angles.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidAngles("duplicate angles".into()));
        }
        Ok(Self(angles))
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Angles rounded to whole degrees for reporting.
    pub fn display_degrees(&self) -> Vec<i64> {
        self.0.iter().map(|a| a.round() as i64).collect()
    }

    /// Picks the angles at `indices` (which must be valid and distinct).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<f64>> for AngleSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AngleSet> for Vec<f64> {
    fn from(a: AngleSet) -> Self {
        a.0
    }
}

/// `{k * 180 / n_theta : k = 0..n_theta}`.
pub fn equidistant_angles(n_theta: usize) -> Result<AngleSet> {
    if !(1..=180).contains(&n_theta) {
        return Err(Error::AngleCountOutOfRange(n_theta));
    }
    AngleSet::new((0..n_theta).map(|k| k as f64 * 180.0 / n_theta as f64).collect())
}

/// Detector length for a square image: smallest odd integer `>= sqrt(2) * side`.
pub fn bin_length(side: usize) -> usize {
    let l = (std::f64::consts::SQRT_2 * side as f64).ceil() as usize;
    if l.is_multiple_of(2) {
        l + 1
    } else {
        l
    }
}

/// `(cos, sin)` of an angle in degrees, exact on the axes.
pub(crate) fn direction(theta_deg: f64) -> (f64, f64) {
    match theta_deg {
        0.0 => (1.0, 0.0),
        90.0 => (0.0, 1.0),
        t => {
            let (s, c) = t.to_radians().sin_cos();
            (c, s)
        }
    }
}

fn project_into(img: &GrayImage, side: usize, theta: f64, out: &mut [f64]) {
    let len = out.len();
    let center = (side as f64 - 1.0) / 2.0;
    let offset = (len as f64 - 1.0) / 2.0;
    let (cos, sin) = direction(theta);
    let pixels = img.pixels();
    for row in 0..side {
        let y = center - row as f64;
        let base = y * sin + offset;
        for col in 0..side {
            let mass = pixels[row * side + col];
            if mass == 0.0 {
                continue;
            }
            let pos = (col as f64 - center) * cos + base;
            let i0 = pos.floor();
            let frac = pos - i0;
            let i0 = i0 as usize;
            out[i0] += mass * (1.0 - frac);
            if frac > 0.0 {
                out[i0 + 1] += mass * frac;
            }
        }
    }
}

/// Projection of a square image along the parallel lines at `theta` degrees.
pub fn project(img: &GrayImage, theta: f64) -> Result<Vec<f64>> {
    let side = img.side()?;
    if !(theta.is_finite() && (0.0..180.0).contains(&theta)) {
        return Err(Error::InvalidAngles(format!("angle {theta} outside [0, 180)")));
    }
    let mut out = vec![0.0; bin_length(side)];
    project_into(img, side, theta, &mut out);
    Ok(out)
}

/// Projections for every angle, stored row-major (one row per angle).
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: AngleSet,
    bin_length: usize,
    bins: Vec<f64>,
}

impl Sinogram {
    pub fn from_rows(angles: AngleSet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != angles.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows for {} angles",
                rows.len(),
                angles.len()
            )));
        }
        let bin_length = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != bin_length) {
            return Err(Error::DimensionMismatch("ragged sinogram rows".into()));
        }
        Ok(Self {
            angles,
            bin_length,
            bins: rows.concat(),
        })
    }

    pub fn angles(&self) -> &AngleSet {
        &self.angles
    }

    pub fn bin_length(&self) -> usize {
        self.bin_length
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.bins[i * self.bin_length..(i + 1) * self.bin_length]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.bins.chunks_exact(self.bin_length.max(1))
    }

    /// CSV with one row per angle; first column is the angle in degrees.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for (angle, row) in self.angles.angles().iter().zip(self.rows()) {
            let mut record = Vec::with_capacity(row.len() + 1);
            record.push(angle.to_string());
            record.extend(row.iter().map(f64::to_string));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stacks [`project`] for each angle of `angles`.
pub fn sinogram(img: &GrayImage, angles: &AngleSet) -> Result<Sinogram> {
    let side = img.side()?;
    let len = bin_length(side);
    let mut bins = vec![0.0; len * angles.len()];
    for (theta, out) in angles.angles().iter().zip(bins.chunks_exact_mut(len)) {
        project_into(img, side, *theta, out);
    }
    Ok(Sinogram {
        angles: angles.clone(),
        bin_length: len,
        bins,
    })
}
