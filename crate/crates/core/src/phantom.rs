//! Two-contrast Shepp-Logan phantom and k-space data simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::mri::{KSpaceData, MriOperator, SamplingPattern};

/// Ellipse `(x0, y0, a, b, phi_deg)` on `[-1, 1]^2`, `y` pointing up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub b: f64,
    pub phi_deg: f64,
}

impl Ellipse {
    const fn new(x0: f64, y0: f64, a: f64, b: f64, phi_deg: f64) -> Self {
        Self { x0, y0, a, b, phi_deg }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.phi_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.x0, y - self.y0);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// Geometry of the Shepp-Logan head.
pub const SHEPP_LOGAN_ELLIPSES: [Ellipse; 10] = [
    Ellipse::new(0.0, 0.0, 0.69, 0.92, 0.0),
    Ellipse::new(0.0, -0.0184, 0.6624, 0.874, 0.0),
    Ellipse::new(0.22, 0.0, 0.11, 0.31, -18.0),
    Ellipse::new(-0.22, 0.0, 0.16, 0.41, 18.0),
    Ellipse::new(0.0, 0.35, 0.21, 0.25, 0.0),
    Ellipse::new(0.0, 0.1, 0.046, 0.046, 0.0),
    Ellipse::new(0.0, -0.1, 0.046, 0.046, 0.0),
    Ellipse::new(-0.08, -0.605, 0.046, 0.023, 0.0),
    Ellipse::new(0.0, -0.606, 0.023, 0.023, 0.0),
    Ellipse::new(0.06, -0.605, 0.023, 0.046, 0.0),
];

/// Additive amplitudes of the modified (high-contrast) Shepp-Logan phantom.
pub const T1_AMPLITUDES: [f64; 10] = [1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];

/// Second contrast on the same geometry: dimmer skull, the two large dark
/// ellipses turned bright, small features at half strength.
pub const T2_AMPLITUDES: [f64; 10] = [0.8, -0.8, 0.3, 0.3, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05];

pub const MIN_PHANTOM_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomPair {
    pub t1: Image,
    pub t2: Image,
}

/// Rasterizes additive ellipses by point-sampling pixel centres, clipped
/// to `[0, 1]`.
pub fn render_ellipses(size: usize, ellipses: &[Ellipse], amplitudes: &[f64]) -> Image {
    debug_assert_eq!(ellipses.len(), amplitudes.len());
    let n = size as f64;
    Image::from_fn(size, size, |r, c| {
        let x = (2.0 * c as f64 + 1.0) / n - 1.0;
        let y = 1.0 - (2.0 * r as f64 + 1.0) / n;
        let v: f64 = ellipses
            .iter()
            .zip(amplitudes)
            .filter(|(e, _)| e.contains(x, y))
            .map(|(_, a)| a)
            .sum();
        // sums like 1 - 0.8 carry rounding noise; snap to a fine lattice
        ((v * 1e9).round() / 1e9).clamp(0.0, 1.0)
    })
}

pub fn shepp_logan_pair(size: usize) -> Result<PhantomPair> {
    if size < MIN_PHANTOM_SIZE {
        return Err(Error::invalid(format!(
            "phantom size must be at least {MIN_PHANTOM_SIZE}, got {size}"
        )));
    }
    Ok(PhantomPair {
        t1: render_ellipses(size, &SHEPP_LOGAN_ELLIPSES, &T1_AMPLITUDES),
        t2: render_ellipses(size, &SHEPP_LOGAN_ELLIPSES, &T2_AMPLITUDES),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Noise level relative to the noise-free full data norm.
    pub fraction: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            fraction: 0.05,
            seed: 0,
        }
    }
}

/// Per-component standard deviation `fraction |F gt| / sqrt(2N)`, so that
/// for full sampling `E|noise|^2 = fraction^2 |F gt|^2`.
pub fn noise_sigma(gt: &Image, fraction: f64) -> f64 {
    // F is unitary, so |F gt| = |gt|.
    fraction * gt.norm() / (2.0 * gt.len() as f64).sqrt()
}

/// Noise-free forward data plus i.i.d. complex Gaussian noise.
pub fn simulate(gt: &Image, p: &SamplingPattern, noise: NoiseSpec) -> Result<KSpaceData> {
    if !(noise.fraction >= 0.0 && noise.fraction.is_finite()) {
        return Err(Error::invalid(format!(
            "noise fraction must be nonnegative, got {}",
            noise.fraction
        )));
    }
    let mut data = MriOperator::new(p.clone()).forward(gt)?;
    let sigma = noise_sigma(gt, noise.fraction);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("positive finite sigma");
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for z in data.values_mut() {
            z.re += normal.sample(&mut rng);
            z.im += normal.sample(&mut rng);
        }
    }
    Ok(data)
}
