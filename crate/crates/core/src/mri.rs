//! Single-coil Cartesian MRI forward model `E = S F R*` and its adjoint
//! `E* = Re F^-1 S*`.
//!
//! `R*` embeds a real image into the complex grid, `F` is the unitary 2D DFT
//! (scaled by `1/sqrt(N)` in both directions) and `S` picks the sampled
//! k-space cells in pattern order. Flat indices are 0-based, row-major, in
//! standard DFT layout (DC at index 0).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_shape, Error, Result};
use crate::grid::Image;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        Self {
            height,
            width,
            data: vec![Complex64::new(0.0, 0.0); height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                found: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Embeds a real image with zero imaginary part.
    pub fn from_real(v: &Image) -> Self {
        Self {
            height: v.height(),
            width: v.width(),
            data: v.as_slice().iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn real_part(&self) -> Image {
        Image::from_vec(
            self.height,
            self.width,
            self.data.iter().map(|z| z.re).collect(),
        )
        .expect("shape preserved")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Real inner product `Re(x^H y)`.
    pub fn dot(&self, other: &ComplexImage) -> f64 {
        real_dot(&self.data, &other.data)
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

pub(crate) fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Planned unitary 2D DFT for one grid shape. Immutable after creation and
/// shareable across threads.
#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            scale: ((height * width) as f64).sqrt().recip(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_inv, &self.col_inv);
    }

    pub fn forward(&self, x: &ComplexImage) -> ComplexImage {
        let mut out = x.clone();
        self.forward_in_place(&mut out.data);
        out
    }

    pub fn inverse(&self, x: &ComplexImage) -> ComplexImage {
        let mut out = x.clone();
        self.inverse_in_place(&mut out.data);
        out
    }

    fn transform(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w, "buffer does not match planned shape");
        rows.process(data);

        let mut transposed = vec![Complex64::new(0.0, 0.0); h * w];
        transpose(data, &mut transposed, h, w);
        cols.process(&mut transposed);
        transpose(&transposed, data, w, h);

        for z in data.iter_mut() {
            *z *= self.scale;
        }
    }
}

// src is rows x cols, dst becomes cols x rows
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

pub fn dft2(v: &ComplexImage) -> ComplexImage {
    Fft2::new(v.height, v.width).forward(v)
}

pub fn idft2(v: &ComplexImage) -> ComplexImage {
    Fft2::new(v.height, v.width).inverse(v)
}

/// Ordered sequence of sampled k-space cells. Repeats are allowed and count
/// with multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingPattern {
    height: usize,
    width: usize,
    indices: Vec<usize>,
}

impl SamplingPattern {
    pub fn new(height: usize, width: usize, indices: Vec<usize>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("pattern grid dimensions must be positive"));
        }
        if indices.is_empty() {
            return Err(Error::invalid("sampling pattern must not be empty"));
        }
        let len = height * width;
        if let Some(&index) = indices.iter().find(|&&i| i >= len) {
            return Err(Error::IndexOutOfRange { index, len });
        }
        Ok(Self {
            height,
            width,
            indices,
        })
    }

    /// Every cell once, in flat order.
    pub fn full(height: usize, width: usize) -> Self {
        Self::new(height, width, (0..height * width).collect()).expect("full pattern is valid")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn grid_len(&self) -> usize {
        self.height * self.width
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of samples `M`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Complex measurements aligned with a [`SamplingPattern`].
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceData {
    values: Vec<Complex64>,
}

impl KSpaceData {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("k-space sample".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &KSpaceData) -> f64 {
        real_dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn check_pattern(&self, p: &SamplingPattern) -> Result<()> {
        if self.len() == p.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: p.len(),
                found: self.len(),
            })
        }
    }
}

/// `(S x)_k = x[s[k]]`.
pub fn sample(p: &SamplingPattern, x: &ComplexImage) -> Result<KSpaceData> {
    check_shape(p.shape(), x.shape())?;
    Ok(KSpaceData {
        values: p.indices.iter().map(|&i| x.data[i]).collect(),
    })
}

/// Scatter-add of `d` into the grid; repeated indices accumulate.
pub fn sample_adjoint(p: &SamplingPattern, d: &KSpaceData) -> Result<ComplexImage> {
    d.check_pattern(p)?;
    let mut out = ComplexImage::zeros(p.height, p.width);
    for (&i, &z) in p.indices.iter().zip(&d.values) {
        out.data[i] += z;
    }
    Ok(out)
}

/// Diagonal of `S* S`: how often each cell is sampled.
pub fn mask_counts(p: &SamplingPattern) -> Image {
    let mut counts = Image::zeros(p.height, p.width);
    let data = counts.as_mut_slice();
    for &i in &p.indices {
        data[i] += 1.0;
    }
    counts
}

pub fn forward(p: &SamplingPattern, v: &Image) -> Result<KSpaceData> {
    MriOperator::new(p.clone()).forward(v)
}

pub fn adjoint(p: &SamplingPattern, d: &KSpaceData) -> Result<Image> {
    MriOperator::new(p.clone()).adjoint(d)
}

/// Forward model with a cached transform plan.
#[derive(Clone, Debug)]
pub struct MriOperator {
    pattern: SamplingPattern,
    fft: Fft2,
}

impl MriOperator {
    pub fn new(pattern: SamplingPattern) -> Self {
        let (h, w) = pattern.shape();
        Self {
            fft: Fft2::new(h, w),
            pattern,
        }
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn forward(&self, v: &Image) -> Result<KSpaceData> {
        check_shape(self.pattern.shape(), v.shape())?;
        let spectrum = self.fft.forward(&ComplexImage::from_real(v));
        sample(&self.pattern, &spectrum)
    }

    pub fn adjoint(&self, d: &KSpaceData) -> Result<Image> {
        let grid = sample_adjoint(&self.pattern, d)?;
        Ok(self.fft.inverse(&grid).real_part())
    }
}
