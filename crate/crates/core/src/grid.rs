//! Images, gradient fields and the discrete differential operators on them.
//!
//! The gradient uses forward differences; the difference that would reach
//! past the last row (column) is zero. The divergence is the exact negative
//! adjoint, so `<div g, v> = -<g, grad v>` holds to rounding and
//! `|grad|^2 <= 8`.

use crate::error::{check_shape, Error, Result};

/// Real scalar field on an `height x width` grid, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("image value at flat index {pos}")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut img = Self::zeros(height, width);
        for r in 0..height {
            for c in 0..width {
                img.data[r * width + c] = f(r, c);
            }
        }
        img
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
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

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn dot(&self, other: &Image) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Image) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-pixel 2-vector field `(d_row, d_col)`, the codomain of [`gradient`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

impl GradientField {
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "field dimensions must be positive");
        Self {
            height,
            width,
            rows: vec![0.0; height * width],
            cols: vec![0.0; height * width],
        }
    }

    pub fn from_parts(height: usize, width: usize, rows: Vec<f64>, cols: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("field dimensions must be positive"));
        }
        for comp in [&rows, &cols] {
            if comp.len() != height * width {
                return Err(Error::LengthMismatch {
                    expected: height * width,
                    found: comp.len(),
                });
            }
            if comp.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("gradient field component".into()));
            }
        }
        Ok(Self {
            height,
            width,
            rows,
            cols,
        })
    }

    /// Field with the same vector at every pixel.
    pub fn uniform(height: usize, width: usize, vector: (f64, f64)) -> Self {
        let mut g = Self::zeros(height, width);
        g.rows.fill(vector.0);
        g.cols.fill(vector.1);
        g
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Vector at flat pixel index `idx`.
    pub fn at(&self, idx: usize) -> (f64, f64) {
        (self.rows[idx], self.cols[idx])
    }

    pub fn set(&mut self, idx: usize, vector: (f64, f64)) {
        self.rows[idx] = vector.0;
        self.cols[idx] = vector.1;
    }

    /// Row-difference and column-difference components.
    pub fn components(&self) -> (&[f64], &[f64]) {
        (&self.rows, &self.cols)
    }

    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.rows, &mut self.cols)
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        let r: f64 = self.rows.iter().zip(&other.rows).map(|(a, b)| a * b).sum();
        let c: f64 = self.cols.iter().zip(&other.cols).map(|(a, b)| a * b).sum();
        r + c
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().chain(&self.cols).all(|v| v.is_finite())
    }

    /// Largest pointwise vector norm.
    pub fn max_magnitude(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.cols)
            .map(|(r, c)| r.hypot(*c))
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: f64) {
        self.rows.iter_mut().for_each(|v| *v *= factor);
        self.cols.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Per-pixel linear map applied to gradient vectors before taking norms.
#[derive(Clone, Debug, PartialEq)]
pub enum Anisotropy {
    /// `M_i = Id`, plain total variation.
    Identity,
    /// `M_i = w_i Id` with `0 <= w_i <= 1`.
    Isotropic(Vec<f64>),
    /// `M_i = Id - xi_i xi_i^T` with `|xi_i| <= 1`.
    Directional(GradientField),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnisotropyField {
    height: usize,
    width: usize,
    kind: Anisotropy,
}

impl AnisotropyField {
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            kind: Anisotropy::Identity,
        }
    }

    pub fn isotropic(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::invalid(format!("isotropic weight {w} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            kind: Anisotropy::Isotropic(weights),
        })
    }

    pub fn directional(xi: GradientField) -> Result<Self> {
        let (rows, cols) = xi.components();
        if let Some(i) = (0..xi.len()).find(|&i| rows[i] * rows[i] + cols[i] * cols[i] > 1.0) {
            return Err(Error::invalid(format!(
                "direction vector at pixel {i} has norm above 1"
            )));
        }
        Ok(Self {
            height: xi.height(),
            width: xi.width(),
            kind: Anisotropy::Directional(xi),
        })
    }

    pub fn kind(&self) -> &Anisotropy {
        &self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Applies the field to `g` in place. The map is symmetric, so this is
    /// also the adjoint.
    pub fn apply_in_place(&self, g: &mut GradientField) {
        debug_assert_eq!(self.shape(), g.shape());
        match &self.kind {
            Anisotropy::Identity => {}
            Anisotropy::Isotropic(w) => {
                let (rows, cols) = g.components_mut();
                for ((r, c), wi) in rows.iter_mut().zip(cols.iter_mut()).zip(w) {
                    *r *= wi;
                    *c *= wi;
                }
            }
            Anisotropy::Directional(xi) => {
                let (xr, xc) = xi.components();
                let (rows, cols) = g.components_mut();
                for i in 0..rows.len() {
                    let proj = xr[i] * rows[i] + xc[i] * cols[i];
                    rows[i] -= proj * xr[i];
                    cols[i] -= proj * xc[i];
                }
            }
        }
    }
}

/// Forward-difference gradient.
pub fn gradient(v: &Image) -> GradientField {
    let mut g = GradientField::zeros(v.height, v.width);
    gradient_into(v, &mut g);
    g
}

pub fn gradient_into(v: &Image, g: &mut GradientField) {
    debug_assert_eq!(v.shape(), g.shape());
    let (h, w) = v.shape();
    let x = &v.data;
    for r in 0..h {
        let row = r * w;
        for c in 0..w {
            let i = row + c;
            g.rows[i] = if r + 1 < h { x[i + w] - x[i] } else { 0.0 };
            g.cols[i] = if c + 1 < w { x[i + 1] - x[i] } else { 0.0 };
        }
    }
}

/// Backward-difference divergence, the negative adjoint of [`gradient`].
pub fn divergence(g: &GradientField) -> Image {
    let mut out = Image::zeros(g.height, g.width);
    divergence_into(g, &mut out);
    out
}

pub fn divergence_into(g: &GradientField, out: &mut Image) {
    debug_assert_eq!(g.shape(), out.shape());
    let (h, w) = g.shape();
    let (p, q) = (&g.rows, &g.cols);
    for r in 0..h {
        let row = r * w;
        for c in 0..w {
            let i = row + c;
            let mut d = 0.0;
            if r + 1 < h {
                d += p[i];
            }
            if r > 0 {
                d -= p[i - w];
            }
            if c + 1 < w {
                d += q[i];
            }
            if c > 0 {
                d -= q[i - 1];
            }
            out.data[i] = d;
        }
    }
}

pub fn apply_anisotropy(m: &AnisotropyField, g: &GradientField) -> Result<GradientField> {
    check_shape(m.shape(), g.shape())?;
    let mut out = g.clone();
    m.apply_in_place(&mut out);
    Ok(out)
}

/// `sqrt(d_row^2 + d_col^2)` per pixel.
pub fn pointwise_norm(g: &GradientField) -> Image {
    Image {
        height: g.height,
        width: g.width,
        data: g.rows.iter().zip(&g.cols).map(|(r, c)| r.hypot(*c)).collect(),
    }
}

/// Pointwise `y / max(1, |y|)`.
pub fn project_unit_ball(y: &GradientField) -> GradientField {
    let mut out = y.clone();
    project_unit_ball_in_place(&mut out);
    out
}

pub fn project_unit_ball_in_place(y: &mut GradientField) {
    let (rows, cols) = y.components_mut();
    for (r, c) in rows.iter_mut().zip(cols.iter_mut()) {
        let n2 = *r * *r + *c * *c;
        if n2 > 1.0 {
            let s = n2.sqrt().recip();
            *r *= s;
            *c *= s;
        }
    }
}

/// Pointwise `max(v, 0)`.
pub fn project_nonneg(v: &Image) -> Image {
    v.map(|x| x.max(0.0))
}

pub fn project_nonneg_in_place(v: &mut Image) {
    v.data.iter_mut().for_each(|x| *x = x.max(0.0));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(rows: &[&[f64]]) -> Image {
        let h = rows.len();
        let w = rows[0].len();
        Image::from_vec(h, w, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = gradient(&Image::filled(5, 7, 5.0));
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn gradient_two_by_two() {
        let g = gradient(&img(&[&[0.0, 1.0], &[2.0, 3.0]]));
        let (r, c) = g.components();
        assert_eq!(r, &[2.0, 2.0, 0.0, 0.0]);
        assert_eq!(c, &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn gradient_of_row_ramp() {
        let v = Image::from_fn(6, 4, |r, _| r as f64);
        let g = gradient(&v);
        let (rows, cols) = g.components();
        for r in 0..6 {
            for c in 0..4 {
                let expected = if r == 5 { 0.0 } else { 1.0 };
                assert_eq!(rows[r * 4 + c], expected);
                assert_eq!(cols[r * 4 + c], 0.0);
            }
        }
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        assert_eq!(divergence(&GradientField::zeros(3, 4)).norm(), 0.0);
    }

    #[test]
    fn divergence_matches_basis_adjoint() {
        // <div g, e_k> = -<g, grad e_k> for every basis image e_k.
        let v = img(&[&[0.0, 1.0], &[2.0, 3.0]]);
        let g = gradient(&v);
        let div = divergence(&g);
        for k in 0..4 {
            let mut e = Image::zeros(2, 2);
            e.as_mut_slice()[k] = 1.0;
            let expected = -g.dot(&gradient(&e));
            assert_eq!(div.as_slice()[k], expected);
        }
        assert_eq!(div.as_slice(), &[3.0, 1.0, -1.0, -3.0]);
    }

    #[test]
    fn anisotropy_examples() {
        let g = GradientField::uniform(2, 2, (3.0, 4.0));
        let id = apply_anisotropy(&AnisotropyField::identity(2, 2), &g).unwrap();
        assert_eq!(id, g);

        let xi = GradientField::uniform(2, 2, (1.0, 0.0));
        let dir = AnisotropyField::directional(xi).unwrap();
        assert_eq!(apply_anisotropy(&dir, &g).unwrap().at(0), (0.0, 4.0));

        let iso = AnisotropyField::isotropic(2, 2, vec![0.5; 4]).unwrap();
        let g2 = GradientField::uniform(2, 2, (2.0, -2.0));
        assert_eq!(apply_anisotropy(&iso, &g2).unwrap().at(3), (1.0, -1.0));
    }

    #[test]
    fn anisotropy_shape_mismatch() {
        let g = GradientField::zeros(2, 3);
        let err = apply_anisotropy(&AnisotropyField::identity(3, 2), &g).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn anisotropy_rejects_invalid_fields() {
        assert!(AnisotropyField::isotropic(1, 2, vec![0.5, 1.5]).is_err());
        assert!(AnisotropyField::directional(GradientField::uniform(1, 2, (0.9, 0.9))).is_err());
    }

    #[test]
    fn pointwise_norm_examples() {
        let mut g = GradientField::zeros(1, 3);
        g.set(0, (3.0, 4.0));
        g.set(2, (1.0, 1.0));
        let n = pointwise_norm(&g);
        assert_eq!(n.as_slice()[0], 5.0);
        assert_eq!(n.as_slice()[1], 0.0);
        assert!((n.as_slice()[2] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_ball_projection_examples() {
        let mut g = GradientField::zeros(1, 3);
        g.set(0, (0.3, 0.4));
        g.set(1, (3.0, 4.0));
        let p = project_unit_ball(&g);
        assert_eq!(p.at(0), (0.3, 0.4));
        let (a, b) = p.at(1);
        assert!((a - 0.6).abs() < 1e-15 && (b - 0.8).abs() < 1e-15);
        assert_eq!(p.at(2), (0.0, 0.0));
    }

    #[test]
    fn nonneg_projection_examples() {
        assert_eq!(project_nonneg(&img(&[&[-1.0, 2.0]])).as_slice(), &[0.0, 2.0]);
        let pos = Image::from_fn(3, 3, |r, c| (r + c) as f64);
        assert_eq!(project_nonneg(&pos), pos);
        assert_eq!(project_nonneg(&Image::filled(3, 3, -2.0)).norm(), 0.0);
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(Image::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::from_vec(0, 2, vec![]).is_err());
        assert!(Image::from_vec(1, 2, vec![0.0, f64::NAN]).is_err());
    }
}
