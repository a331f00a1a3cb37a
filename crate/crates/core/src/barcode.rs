//! Radon barcodes: per-angle projections thresholded at the median of their
//! nonzero values and concatenated fragment by fragment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image_io::{write_pgm_bytes, GrayImage};
use crate::radon::{sinogram, AngleSet};

/// Height of the rendered stripe image in pixels.
pub const STRIPE_HEIGHT: usize = 16;

/// Lower median of the nonzero entries: sorted index `(k - 1) / 2`.
pub fn nonzero_median(p: &[f64]) -> Option<f64> {
    let mut nz: Vec<f64> = p.iter().copied().filter(|&v| v != 0.0).collect();
    if nz.is_empty() {
        return None;
    }
    nz.sort_by(f64::total_cmp);
    Some(nz[(nz.len() - 1) / 2])
}

/// `bit[i] = p[i] >= T` with `T` the nonzero median; all-zero input gives all zeros.
pub fn binarize_projection(p: &[f64]) -> Vec<bool> {
    match nonzero_median(p) {
        Some(t) => p.iter().map(|&v| v >= t).collect(),
        None => vec![false; p.len()],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadonBarcode {
    angles: AngleSet,
    fragment_len: usize,
    bits: Vec<bool>,
}

impl RadonBarcode {
    pub fn from_fragments(angles: AngleSet, fragments: Vec<Vec<bool>>) -> Result<Self> {
        if fragments.len() != angles.len() {
            return Err(Error::BarcodeMismatch(format!(
                "{} fragments for {} angles",
                fragments.len(),
                angles.len()
            )));
        }
        let fragment_len = fragments[0].len();
        if fragments.iter().any(|f| f.len() != fragment_len) {
            return Err(Error::BarcodeMismatch("fragments differ in length".into()));
        }
        Ok(Self {
            angles,
            fragment_len,
            bits: fragments.concat(),
        })
    }

    pub fn angles(&self) -> &AngleSet {
        &self.angles
    }

    pub fn fragment_len(&self) -> usize {
        self.fragment_len
    }

    pub fn total_bits(&self) -> usize {
        self.bits.len()
    }

    /// Fragment-major, rho-minor bit sequence.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn fragment(&self, i: usize) -> &[bool] {
        &self.bits[i * self.fragment_len..(i + 1) * self.fragment_len]
    }

    pub fn fragments(&self) -> impl Iterator<Item = &[bool]> {
        self.bits.chunks_exact(self.fragment_len.max(1))
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Writes the stripe image to `path` (PGM, one column per bit, set bits
    /// black) and the text form to `path` with a `.txt` extension. Returns the
    /// text path.
    pub fn render(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        let row: Vec<u8> = self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect();
        let stripe = row.repeat(STRIPE_HEIGHT);
        write_pgm_bytes(path, self.bits.len(), STRIPE_HEIGHT, &stripe)?;
        let text_path = path.with_extension("txt");
        std::fs::write(&text_path, format!("{self}\n"))?;
        Ok(text_path)
    }
}

/// `<angle;angle;...>|<bits>`
impl fmt::Display for RadonBarcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let angles: Vec<String> = self.angles.angles().iter().map(f64::to_string).collect();
        write!(f, "{}|{}", angles.join(";"), self.bit_string())
    }
}

impl FromStr for RadonBarcode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (angle_part, bit_part) = s
            .split_once('|')
            .ok_or_else(|| Error::BarcodeParse("missing '|' separator".into()))?;
        let angles = angle_part
            .split(';')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::BarcodeParse(format!("bad angle '{a}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let angles = AngleSet::new(angles)?;
        let bits = bit_part
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::BarcodeParse(format!("unexpected character '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() || bits.len() % angles.len() != 0 {
            return Err(Error::BarcodeParse(format!(
                "{} bits cannot split into {} fragments",
                bits.len(),
                angles.len()
            )));
        }
        Ok(Self {
            fragment_len: bits.len() / angles.len(),
            angles,
            bits,
        })
    }
}

/// Barcode of an image already at working size, one fragment per angle in
/// ascending angle order.
pub fn generate_barcode(img: &GrayImage, angles: &AngleSet) -> Result<RadonBarcode> {
    let s = sinogram(img, angles)?;
    let fragments = s.rows().map(binarize_projection).collect();
    RadonBarcode::from_fragments(angles.clone(), fragments)
}

pub fn hamming_distance(a: &RadonBarcode, b: &RadonBarcode) -> Result<usize> {
    if a.angles != b.angles {
        return Err(Error::BarcodeMismatch("angle sets differ".into()));
    }
    if a.bits.len() != b.bits.len() {
        return Err(Error::BarcodeMismatch(format!(
            "{} vs {} bits",
            a.bits.len(),
            b.bits.len()
        )));
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}
