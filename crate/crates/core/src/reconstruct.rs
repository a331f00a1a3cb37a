//! Filtered back-projection from an arbitrary (possibly tiny) angle subset.
//!
//! Each projection is ramp-filtered in the frequency domain and smeared back
//! over the image plane with linear interpolation between detector bins,
//! using the same geometry as [`crate::radon`]. The ramp response is the
//! transform of the discrete Ram-Lak kernel (`1/4` at the origin,
//! `-1/(pi n)^2` at odd offsets, zero elsewhere) rather than a sampled `|w|`,
//! which keeps the DC term consistent with a finite detector.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image_io::write_pgm_bytes;
use crate::radon::{bin_length, direction, Sinogram};

/// Unclamped reconstructed image on a `side x side` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    side: usize,
    values: Vec<f64>,
}

impl Reconstruction {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != side * side {
            return Err(Error::DimensionMismatch(format!(
                "{} values for side {side}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite reconstruction value".into()));
        }
        Ok(Self { side, values })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Display dump: affine rescale of `[min, max]` onto `[0, 255]`.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    ((v - lo) / span * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect();
        write_pgm_bytes(path.as_ref(), self.side, self.side, &bytes)
    }
}

struct RampFilter {
    padded: usize,
    response: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RampFilter {
    fn new(bins: usize, planner: &mut FftPlanner<f64>) -> Self {
        let padded = (2 * bins).next_power_of_two().max(64);
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);

        let mut kernel: Vec<Complex<f64>> = (0..padded)
            .map(|i| {
                let n = if i <= padded / 2 {
                    i as isize
                } else {
                    i as isize - padded as isize
                };
                let re = if n == 0 {
                    0.25
                } else if n % 2 != 0 {
                    -1.0 / (PI * n as f64).powi(2)
                } else {
                    0.0
                };
                Complex::new(re, 0.0)
            })
            .collect();
        forward.process(&mut kernel);
        let response = kernel.iter().map(|c| 2.0 * c.re).collect();
        Self {
            padded,
            response,
            forward,
            inverse,
        }
    }

    fn apply(&self, row: &[f64], out: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        scratch.clear();
        scratch.extend(row.iter().map(|&v| Complex::new(v, 0.0)));
        scratch.resize(self.padded, Complex::new(0.0, 0.0));
        self.forward.process(scratch);
        for (c, h) in scratch.iter_mut().zip(&self.response) {
            *c *= *h;
        }
        self.inverse.process(scratch);
        let norm = 1.0 / self.padded as f64;
        for (o, c) in out.iter_mut().zip(scratch.iter()) {
            *o = c.re * norm;
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static FILTERS: RefCell<HashMap<usize, Arc<RampFilter>>> = RefCell::new(HashMap::new());
}

fn ramp_filter(bins: usize) -> Arc<RampFilter> {
    FILTERS.with(|cache| {
        cache
            .borrow_mut()
            .entry(bins)
            .or_insert_with(|| PLANNER.with(|p| Arc::new(RampFilter::new(bins, &mut p.borrow_mut()))))
            .clone()
    })
}

/// Ramp-filters every projection row; output has the sinogram's shape.
pub fn filter_rows(s: &Sinogram) -> Vec<Vec<f64>> {
    let filter = ramp_filter(s.bin_length());
    let mut scratch = Vec::with_capacity(filter.padded);
    s.rows()
        .map(|row| {
            let mut out = vec![0.0; row.len()];
            filter.apply(row, &mut out, &mut scratch);
            out
        })
        .collect()
}

/// Adds the back-projection of one filtered row (at `theta` degrees) into `acc`.
pub(crate) fn back_project_into(filtered: &[f64], theta: f64, side: usize, acc: &mut [f64]) {
    let len = filtered.len();
    let center = (side as f64 - 1.0) / 2.0;
    let offset = (len as f64 - 1.0) / 2.0;
    let (cos, sin) = direction(theta);
    for row in 0..side {
        let base = (center - row as f64) * sin + offset;
        let acc_row = &mut acc[row * side..(row + 1) * side];
        for (col, a) in acc_row.iter_mut().enumerate() {
            let pos = (col as f64 - center) * cos + base;
            let i0 = pos.floor();
            let frac = pos - i0;
            let i0 = i0 as usize;
            let mut v = filtered[i0] * (1.0 - frac);
            if frac > 0.0 {
                v += filtered[i0 + 1] * frac;
            }
            *a += v;
        }
    }
}

/// Filtered back-projection onto a `side x side` grid, weighted by
/// `pi / number_of_angles`.
pub fn inverse_radon(s: &Sinogram, side: usize) -> Result<Reconstruction> {
    if s.angles().is_empty() || s.bin_length() == 0 {
        return Err(Error::EmptySinogram);
    }
    let expected = bin_length(side);
    if side == 0 || s.bin_length() != expected {
        return Err(Error::SideMismatch {
            side,
            bins: s.bin_length(),
            expected,
        });
    }
    let filtered = filter_rows(s);
    let mut values = vec![0.0; side * side];
    for (theta, row) in s.angles().angles().iter().zip(&filtered) {
        back_project_into(row, *theta, side, &mut values);
    }
    let weight = PI / s.angles().len() as f64;
    values.iter_mut().for_each(|v| *v *= weight);
    Reconstruction::new(side, values)
}
