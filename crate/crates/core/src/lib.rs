//! Radon barcodes for grayscale images, with projection-angle selection by
//! exhaustive search or micro differential evolution.
//!
//! The pipeline: [`image_io`] brings an image to a square working resolution,
//! [`radon`] projects it, [`barcode`] thresholds the projections into a
//! barcode. To pick *which* angles to project along, [`fitness`] scores an
//! angle set by how well [`reconstruct`] recovers the image from those
//! projections alone; [`search`] and [`microde`] maximize that score, and
//! [`experiments`] runs both over image collections.

pub mod barcode;
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod image_io;
pub mod microde;
pub mod radon;
pub mod reconstruct;
pub mod search;

pub use barcode::{binarize_projection, generate_barcode, hamming_distance, RadonBarcode};
pub use error::{Error, Result};
pub use experiments::{
    phantom_suite, run_series1, run_series2, ExperimentOutput, ExperimentReport, LabeledImage, MethodTag, RunSettings,
};
pub use fitness::{correlation, reconstruction_fitness, CorrelationScore};
pub use image_io::{load_image, make_phantom, normalize, save_pgm, GrayImage, PhantomKind, DEFAULT_WORKING_SIZE};
pub use microde::{decode_genome, mde_optimize, DEConfig};
pub use radon::{equidistant_angles, project, sinogram, AngleSet, Sinogram};
pub use reconstruct::{inverse_radon, Reconstruction};
pub use search::{count_combinations, exhaustive_search, SearchResult, DEFAULT_BUDGET_CAP};
