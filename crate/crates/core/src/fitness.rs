//! Correlation objective shared by the exhaustive and evolutionary searches.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::GrayImage;
use crate::radon::{sinogram, AngleSet};
use crate::reconstruct::{inverse_radon, Reconstruction};

/// Pearson correlation in `[-1, 1]`, or undefined when either input has zero
/// variance. Serializes as a number or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrelationScore(Option<f64>);

impl CorrelationScore {
    pub const UNDEFINED: Self = Self(None);

    pub fn defined(value: f64) -> Self {
        Self(Some(value.clamp(-1.0, 1.0)))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }

    /// Value used for ranking: undefined scores rank below everything.
    pub fn rank(self) -> f64 {
        self.0.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn cmp_rank(self, other: Self) -> Ordering {
        self.rank().total_cmp(&other.rank())
    }
}

impl fmt::Display for CorrelationScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("undefined"),
        }
    }
}

/// Pearson correlation of two equally long samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<CorrelationScore> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    if a.is_empty() {
        return Ok(CorrelationScore::UNDEFINED);
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // a constant whose mean is not exactly representable leaves rounding noise
    let negligible = |ss: f64, xs: &[f64]| {
        let peak = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ss <= n * peak * peak * 1e-24
    };
    if negligible(saa, a) || negligible(sbb, b) {
        return Ok(CorrelationScore::UNDEFINED);
    }
    Ok(CorrelationScore::defined(sab / (saa * sbb).sqrt()))
}

/// Correlation between an image and a reconstruction of the same size.
pub fn correlation(f: &GrayImage, fhat: &Reconstruction) -> Result<CorrelationScore> {
    if f.width() != fhat.side() || f.height() != fhat.side() {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs reconstruction {}x{}",
            f.width(),
            f.height(),
            fhat.side(),
            fhat.side()
        )));
    }
    pearson(f.pixels(), fhat.values())
}

/// Correlation between `img` and its reconstruction from the projections at `angles`.
pub fn reconstruction_fitness(img: &GrayImage, angles: &AngleSet) -> Result<CorrelationScore> {
    let side = img.side()?;
    let recon = inverse_radon(&sinogram(img, angles)?, side)?;
    correlation(img, &recon)
}
