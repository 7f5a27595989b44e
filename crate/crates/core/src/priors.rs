//! Total variation and its structure-guided variants.
//!
//! All three regularizers share the form `R(v) = sum_i |M_i (grad v)_i|`:
//! plain TV uses the identity, weighted TV scales by `w_i = eta / |grad w_i|_eta`
//! and directional TV projects with `Id - xi_i xi_i^T`, where
//! `xi_i = grad w_i / |grad w_i|_eta` and `|x|_eta = sqrt(|x|^2 + eta^2)`.
//!
//! Side images are rescaled so that their largest gradient magnitude is 1
//! before weights or directions are derived, which makes `eta` a fraction of
//! the strongest edge.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_shape, Error, Result};
use crate::grid::{gradient, AnisotropyField, GradientField, Image};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorKind {
    Tv,
    Wtv,
    Dtv,
}

impl PriorKind {
    pub const ALL: [PriorKind; 3] = [PriorKind::Tv, PriorKind::Wtv, PriorKind::Dtv];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorKind::Tv => "tv",
            PriorKind::Wtv => "wtv",
            PriorKind::Dtv => "dtv",
        }
    }

    pub fn uses_side_info(self) -> bool {
        !matches!(self, PriorKind::Tv)
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tv" => Ok(PriorKind::Tv),
            "wtv" => Ok(PriorKind::Wtv),
            "dtv" => Ok(PriorKind::Dtv),
            other => Err(Error::invalid(format!("unknown prior '{other}'"))),
        }
    }
}

/// Edge parameter `eta > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EdgeParam(f64);

impl EdgeParam {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta.is_finite() {
            Ok(Self(eta))
        } else {
            Err(Error::invalid(format!("edge parameter must be positive, got {eta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `sqrt(|g_i|^2 + eta^2)` per pixel.
pub fn smoothed_magnitude(g: &GradientField, eta: EdgeParam) -> Image {
    let e2 = eta.0 * eta.0;
    let (r, c) = g.components();
    let data = r
        .iter()
        .zip(c)
        .map(|(a, b)| (a * a + b * b + e2).sqrt())
        .collect();
    Image::from_vec(g.height(), g.width(), data).expect("shape taken from field")
}

/// Gradient of the side image after rescaling to unit maximal gradient
/// magnitude. A constant image yields the zero field.
pub fn normalized_side_gradient(side: &Image) -> GradientField {
    let mut g = gradient(side);
    let max = g.max_magnitude();
    if max > 0.0 {
        g.scale(max.recip());
    }
    g
}

/// Weights `eta / |g_i|_eta` for an already normalized side gradient.
pub fn weights_from_gradient(g: &GradientField, eta: EdgeParam) -> AnisotropyField {
    let weights = smoothed_magnitude(g, eta)
        .as_slice()
        .iter()
        .map(|m| (eta.0 / m).min(1.0))
        .collect();
    AnisotropyField::isotropic(g.height(), g.width(), weights).expect("weights lie in (0, 1]")
}

/// Directions `g_i / |g_i|_eta` for an already normalized side gradient.
pub fn directions_from_gradient(g: &GradientField, eta: EdgeParam) -> AnisotropyField {
    let mag = smoothed_magnitude(g, eta);
    let (r, c) = g.components();
    let m = mag.as_slice();
    let rows = r.iter().zip(m).map(|(a, m)| a / m).collect();
    let cols = c.iter().zip(m).map(|(a, m)| a / m).collect();
    let xi = GradientField::from_parts(g.height(), g.width(), rows, cols)
        .expect("shape taken from field");
    AnisotropyField::directional(xi).expect("directions have norm below 1")
}

pub fn weights_from_side_info(side: &Image, eta: EdgeParam) -> AnisotropyField {
    weights_from_gradient(&normalized_side_gradient(side), eta)
}

pub fn direction_from_side_info(side: &Image, eta: EdgeParam) -> AnisotropyField {
    directions_from_gradient(&normalized_side_gradient(side), eta)
}

/// Builds the anisotropy field for `kind`. `shape` fixes the grid for TV;
/// WTV and DTV take their shape from `side`, which they require.
pub fn make_anisotropy(
    kind: PriorKind,
    shape: (usize, usize),
    side: Option<&Image>,
    eta: EdgeParam,
) -> Result<AnisotropyField> {
    match (kind, side) {
        (PriorKind::Tv, _) => Ok(AnisotropyField::identity(shape.0, shape.1)),
        (_, None) => Err(Error::MissingSideInfo(kind)),
        (PriorKind::Wtv, Some(side)) => {
            check_shape(shape, side.shape())?;
            Ok(weights_from_side_info(side, eta))
        }
        (PriorKind::Dtv, Some(side)) => {
            check_shape(shape, side.shape())?;
            Ok(direction_from_side_info(side, eta))
        }
    }
}

/// `sum_i |M_i (grad v)_i|`.
pub fn eval_regularizer(m: &AnisotropyField, v: &Image) -> Result<f64> {
    check_shape(m.shape(), v.shape())?;
    let mut g = gradient(v);
    m.apply_in_place(&mut g);
    let (r, c) = g.components();
    Ok(r.iter().zip(c).map(|(a, b)| a.hypot(*b)).sum())
}
