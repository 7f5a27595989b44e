//! PSNR and SSIM.
//!
//! SSIM uses an 11x11 Gaussian window with standard deviation 1.5,
//! `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` with dynamic range `L = 1`, and
//! replicate padding so the map has the image's shape. The index is the mean
//! of the map.

use crate::error::{check_shape, Result};
use crate::grid::Image;

pub const SSIM_WINDOW_RADIUS: usize = 5;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `10 log10(peak^2 / MSE)`; `+inf` for identical images.
pub fn psnr(reference: &Image, test: &Image, peak: f64) -> Result<f64> {
    check_shape(reference.shape(), test.shape())?;
    let mse = reference.distance(test).powi(2) / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ssim {
    pub mean: f64,
    pub map: Image,
}

/// Normalized 1D Gaussian taps of length `2 * SSIM_WINDOW_RADIUS + 1`.
pub fn gaussian_taps() -> Vec<f64> {
    let r = SSIM_WINDOW_RADIUS as i64;
    let taps: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

pub fn ssim(reference: &Image, test: &Image) -> Result<Ssim> {
    check_shape(reference.shape(), test.shape())?;
    let (h, w) = reference.shape();
    let taps = gaussian_taps();
    let a = reference.as_slice();
    let b = test.as_slice();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    };

    let mu_a = blur(a, h, w, &taps);
    let mu_b = blur(b, h, w, &taps);
    let aa = blur(&prod(&|x, _| x * x), h, w, &taps);
    let bb = blur(&prod(&|_, y| y * y), h, w, &taps);
    let ab = blur(&prod(&|x, y| x * y), h, w, &taps);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let map: Vec<f64> = (0..h * w)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect();
    let mean = map.iter().sum::<f64>() / map.len() as f64;
    Ok(Ssim {
        mean,
        map: Image::from_vec(h, w, map)?,
    })
}

// Separable filtering with replicate padding.
fn blur(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as i64;
    let clamp = |k: i64, n: usize| k.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            tmp[row * w + col] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * src[row * w + clamp(col as i64 + k as i64 - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            out[row * w + col] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[clamp(row as i64 + k as i64 - r, h) * w + col])
                .sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn structured(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |r, c| {
            if (r / 4 + c / 5) % 2 == 0 {
                0.8
            } else {
                0.1 + 0.01 * r as f64
            }
        })
    }

    // Direct evaluation of the windowed statistics with an explicit 2D
    // kernel, independent of the separable filter above.
    fn ssim_direct(a: &Image, b: &Image) -> f64 {
        let (h, w) = a.shape();
        let r = SSIM_WINDOW_RADIUS as i64;
        let mut kernel = vec![vec![0.0; 11]; 11];
        let mut total = 0.0;
        for i in -r..=r {
            for j in -r..=r {
                let v = (-((i * i + j * j) as f64) / (2.0 * 1.5 * 1.5)).exp();
                kernel[(i + r) as usize][(j + r) as usize] = v;
                total += v;
            }
        }
        let mut sum = 0.0;
        for row in 0..h as i64 {
            for col in 0..w as i64 {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in -r..=r {
                    for j in -r..=r {
                        let k = kernel[(i + r) as usize][(j + r) as usize] / total;
                        let rr = (row + i).clamp(0, h as i64 - 1) as usize;
                        let cc = (col + j).clamp(0, w as i64 - 1) as usize;
                        let (x, y) = (a.get(rr, cc), b.get(rr, cc));
                        ma += k * x;
                        mb += k * y;
                        saa += k * x * x;
                        sbb += k * y * y;
                        sab += k * x * y;
                    }
                }
                let (c1, c2) = (1e-4, 9e-4);
                let num = (2.0 * ma * mb + c1) * (2.0 * (sab - ma * mb) + c2);
                let den = (ma * ma + mb * mb + c1) * (saa - ma * ma + sbb - mb * mb + c2);
                sum += num / den;
            }
        }
        sum / (h * w) as f64
    }

    #[test]
    fn psnr_examples() {
        let a = structured(10, 12);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = a.map(|x| x + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let c = a.map(|x| x + 0.01);
        assert!((psnr(&a, &c, 1.0).unwrap() - 40.0).abs() < 1e-9);
        let d = a.map(|x| x - 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - psnr(&a, &d, 1.0).unwrap()).abs() < 1e-9);
        assert!(psnr(&a, &Image::zeros(3, 3), 1.0).is_err());
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = structured(20, 17);
        let s = ssim(&a, &a).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!(s.map.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ssim_of_negative_is_low() {
        let a = structured(24, 24);
        let neg = a.map(|x| 1.0 - x);
        assert!(ssim(&a, &neg).unwrap().mean < 0.2);
    }

    #[test]
    fn ssim_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..5 {
            let (h, w) = (12 + trial, 15);
            let a = Image::from_fn(h, w, |_, _| rng.random_range(0.0..1.0));
            let b = Image::from_fn(h, w, |r, c| (a.get(r, c) + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0));
            let fast = ssim(&a, &b).unwrap().mean;
            let direct = ssim_direct(&a, &b);
            assert!((fast - direct).abs() < 1e-10, "{fast} vs {direct}");
        }
    }

    #[test]
    fn ssim_is_symmetric_and_bounded() {
        let a = structured(16, 16);
        let b = a.map(|x| (x * 0.7 + 0.05).sqrt());
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        assert!((ab.mean - ba.mean).abs() < 1e-12);
        assert!(ab.map.as_slice().iter().all(|&v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn taps_are_normalized() {
        let t = gaussian_taps();
        assert_eq!(t.len(), 11);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
