//! Per-pixel feature vectors for the KNN classifier.
//!
//! Components are `(l, a, b, gx_l, gx_a, gx_b, gy_l, gy_a, gy_b)` with an
//! optional `(coord_x, coord_y)` tail, all on the same 0..255 scale.

use rayon::prelude::*;

use crate::error::{MattingError, Result};
use crate::imaging::{GradientMaps, LabImage};

pub const COLOR_DIMS: usize = 9;
pub const SPATIAL_DIMS: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&[f64]> for FeatureVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

/// Dense row-major field of feature vectors, one per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    width: usize,
    height: usize,
    dims: usize,
    data: Vec<f64>,
}

impl FeatureField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn vector(&self, i: usize) -> FeatureVector {
        FeatureVector::from(self.get(i))
    }

    pub fn uses_coords(&self) -> bool {
        self.dims == SPATIAL_DIMS
    }
}

fn scaled_coord(v: usize, extent: usize) -> f64 {
    if extent > 1 {
        (v * 255) as f64 / (extent - 1) as f64
    } else {
        0.0
    }
}

pub fn build_features(
    lab: &LabImage,
    grads: &GradientMaps,
    with_coords: bool,
) -> Result<FeatureField> {
    let (w, h) = (lab.width(), lab.height());
    if grads.width != w || grads.height != h {
        return Err(MattingError::DimensionMismatch(format!(
            "lab image is {w}x{h}, gradients are {}x{}",
            grads.width, grads.height
        )));
    }
    let dims = if with_coords {
        SPATIAL_DIMS
    } else {
        COLOR_DIMS
    };
    let mut data = vec![0.0; w * h * dims];
    data.par_chunks_mut(dims).enumerate().for_each(|(i, out)| {
        out[0..3].copy_from_slice(&lab.color(i));
        out[3..6].copy_from_slice(&grads.gx[3 * i..3 * i + 3]);
        out[6..9].copy_from_slice(&grads.gy[3 * i..3 * i + 3]);
        if with_coords {
            out[9] = scaled_coord(i % w, w);
            out[10] = scaled_coord(i / w, h);
        }
    });
    Ok(FeatureField {
        width: w,
        height: h,
        dims,
        data,
    })
}

/// Squared Euclidean distance, summed in component order.
#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

pub fn feature_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    slice_distance(a.as_slice(), b.as_slice())
}

pub fn slice_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MattingError::FeatureLength(a.len(), b.len()));
    }
    Ok(squared_distance(a, b).sqrt())
}
