//! Browser demo: phantom and sampling view, prior field view and a
//! stepwise reconstruction. [`Session`] holds the state and is plain Rust;
//! [`Demo`] wraps it for JavaScript.

use sgtv::grid::Anisotropy;
use sgtv::metrics::{psnr, ssim};
use sgtv::phantom::{shepp_logan_pair, simulate, NoiseSpec};
use sgtv::sampling::{generate, undersampling_factor, LineAxis, PatternSpec, Scheme};
use sgtv::{make_anisotropy, AdmmConfig, AdmmSolver, EdgeParam, Image, KSpaceData, PriorKind, SamplingPattern};
use wasm_bindgen::prelude::*;

pub fn gray_rgba(img: &Image, lo: f64, hi: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.len() * 4);
    for &v in img.as_slice() {
        let g = ((v - lo) / (hi - lo) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8;
        out.extend_from_slice(&[g, g, g, 255]);
    }
    out
}

// Hue from angle, brightness from magnitude in [0, 1].
fn hue_rgb(angle: f64, mag: f64) -> [u8; 3] {
    let h = (angle.rem_euclid(std::f64::consts::PI) / std::f64::consts::PI) * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let s = |c: f64| (c * mag.clamp(0.0, 1.0) * 255.0).round() as u8;
    [s(r), s(g), s(b)]
}

pub struct Session {
    size: usize,
    target: Image,
    side: Image,
    pattern: SamplingPattern,
    data: Option<KSpaceData>,
    solver: Option<AdmmSolver>,
}

impl Session {
    pub fn new(size: usize, contrast: &str) -> Result<Self, String> {
        let pair = shepp_logan_pair(size).map_err(|e| e.to_string())?;
        let (target, side) = match contrast {
            "t1" => (pair.t1, pair.t2),
            "t2" => (pair.t2, pair.t1),
            _ => return Err(format!("unknown contrast '{contrast}'")),
        };
        Ok(Self {
            size,
            target,
            side,
            pattern: SamplingPattern::full(size, size),
            data: None,
            solver: None,
        })
    }

    pub fn target(&self) -> &Image {
        &self.target
    }

    pub fn side(&self) -> &Image {
        &self.side
    }

    /// Returns the undersampling factor.
    pub fn set_pattern(&mut self, kind: &str, param: f64, seed: u64) -> Result<f64, String> {
        let count = param.max(1.0) as usize;
        let scheme = match kind {
            "cartesian_random" => Scheme::CartesianRandom { fraction: param, seed, axis: LineAxis::Rows },
            "cartesian_skip" => Scheme::CartesianSkip { step: count, axis: LineAxis::Rows },
            "radial_golden" => Scheme::RadialGolden { spokes: count },
            "radial_uniform" => Scheme::RadialUniform { spokes: count },
            "spiral_phyllotaxis" => Scheme::SpiralPhyllotaxis { points: count },
            _ => return Err(format!("unknown pattern '{kind}'")),
        };
        self.pattern = generate(&PatternSpec::new(scheme, self.size, self.size)).map_err(|e| e.to_string())?;
        self.data = None;
        self.solver = None;
        Ok(undersampling_factor(&self.pattern))
    }

    /// Sampling mask with the k-space origin in the middle.
    pub fn mask(&self) -> Image {
        let n = self.size;
        let mut img = Image::zeros(n, n);
        for &i in self.pattern.indices() {
            let (r, c) = ((i / n + n / 2) % n, (i % n + n / 2) % n);
            img.set(r, c, 1.0);
        }
        img
    }

    /// WTV weights as gray levels, DTV directions as hue with magnitude
    /// as brightness, TV as a flat field.
    pub fn prior_rgba(&self, prior: &str, eta: f64) -> Result<Vec<u8>, String> {
        let kind: PriorKind = prior.parse().map_err(|e: sgtv::Error| e.to_string())?;
        let eta = EdgeParam::new(eta).map_err(|e| e.to_string())?;
        let m = make_anisotropy(kind, (self.size, self.size), Some(&self.side), eta).map_err(|e| e.to_string())?;
        Ok(match m.kind() {
            Anisotropy::Identity => gray_rgba(&Image::filled(self.size, self.size, 1.0), 0.0, 1.0),
            Anisotropy::Isotropic(w) => {
                gray_rgba(&Image::from_vec(self.size, self.size, w.clone()).map_err(|e| e.to_string())?, 0.0, 1.0)
            }
            Anisotropy::Directional(xi) => {
                let mut out = Vec::with_capacity(xi.len() * 4);
                for i in 0..xi.len() {
                    let (a, b) = xi.at(i);
                    let [r, g, bl] = hue_rgb(a.atan2(b), a.hypot(b));
                    out.extend_from_slice(&[r, g, bl, 255]);
                }
                out
            }
        })
    }

    pub fn start(&mut self, prior: &str, alpha: f64, eta: f64, noise: f64, seed: u64) -> Result<(), String> {
        let kind: PriorKind = prior.parse().map_err(|e: sgtv::Error| e.to_string())?;
        let data = simulate(&self.target, &self.pattern, NoiseSpec { fraction: noise, seed }).map_err(|e| e.to_string())?;
        let eta = EdgeParam::new(eta).map_err(|e| e.to_string())?;
        let m = make_anisotropy(kind, (self.size, self.size), Some(&self.side), eta).map_err(|e| e.to_string())?;
        let cfg = AdmmConfig { alpha, outer_iterations: usize::MAX, tolerance: 0.0, ..AdmmConfig::default() };
        self.solver = Some(AdmmSolver::new(&data, &self.pattern, &m, &cfg).map_err(|e| e.to_string())?);
        self.data = Some(data);
        Ok(())
    }

    /// Runs `n` more iterations; returns the total count.
    pub fn step(&mut self, n: usize) -> Result<usize, String> {
        let solver = self.solver.as_mut().ok_or("reconstruction not started")?;
        for _ in 0..n {
            solver.advance().map_err(|e| e.to_string())?;
        }
        Ok(solver.state().iteration)
    }

    pub fn current(&self) -> Option<&Image> {
        self.solver.as_ref().map(|s| &s.state().v)
    }

    /// `(psnr_db, ssim)` of the current iterate.
    pub fn quality(&self) -> Option<(f64, f64)> {
        let v = self.current()?;
        Some((psnr(&self.target, v, 1.0).ok()?, ssim(&self.target, v).ok()?.mean))
    }
}

#[wasm_bindgen]
pub struct Demo {
    inner: Session,
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, contrast: &str) -> Result<Demo, JsError> {
        Session::new(size, contrast).map(|inner| Demo { inner }).map_err(js)
    }

    pub fn size(&self) -> usize {
        self.inner.size
    }

    pub fn target_rgba(&self) -> Vec<u8> {
        gray_rgba(self.inner.target(), 0.0, 1.0)
    }

    pub fn side_rgba(&self) -> Vec<u8> {
        gray_rgba(self.inner.side(), 0.0, 1.0)
    }

    pub fn set_pattern(&mut self, kind: &str, param: f64, seed: u64) -> Result<f64, JsError> {
        self.inner.set_pattern(kind, param, seed).map_err(js)
    }

    pub fn mask_rgba(&self) -> Vec<u8> {
        gray_rgba(&self.inner.mask(), 0.0, 1.0)
    }

    pub fn prior_rgba(&self, prior: &str, eta: f64) -> Result<Vec<u8>, JsError> {
        self.inner.prior_rgba(prior, eta).map_err(js)
    }

    pub fn start(&mut self, prior: &str, alpha: f64, eta: f64, noise: f64, seed: u64) -> Result<(), JsError> {
        self.inner.start(prior, alpha, eta, noise, seed).map_err(js)
    }

    pub fn step(&mut self, n: usize) -> Result<usize, JsError> {
        self.inner.step(n).map_err(js)
    }

    pub fn recon_rgba(&self) -> Vec<u8> {
        self.inner.current().map(|v| gray_rgba(v, 0.0, 1.0)).unwrap_or_default()
    }

    /// `[psnr_db, ssim]`, empty before the first step.
    pub fn quality(&self) -> Vec<f64> {
        self.inner.quality().map(|(p, s)| vec![p, s]).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn session_runs_and_improves() {
        let mut s = Session::new(32, "t1").unwrap();
        let r = s.set_pattern("radial_golden", 8.0, 0).unwrap();
        assert!(r > 1.0);
        assert_eq!(s.mask().as_slice().iter().filter(|&&v| v == 1.0).count(), s.pattern.len());
        s.start("dtv", 5e-3, 1e-2, 0.02, 1).unwrap();
        assert_eq!(s.step(5).unwrap(), 5);
        let early = s.quality().unwrap().0;
        s.step(25).unwrap();
        assert!(s.quality().unwrap().0 > early);
    }

    #[test]
    fn prior_views_have_image_size() {
        let s = Session::new(32, "t2").unwrap();
        for p in ["tv", "wtv", "dtv"] {
            assert_eq!(s.prior_rgba(p, 1e-2).unwrap().len(), 32 * 32 * 4);
        }
        assert!(s.prior_rgba("l1", 1e-2).is_err());
        assert!(Session::new(32, "pd").is_err());
    }

    #[test]
    fn step_before_start_fails() {
        let mut s = Session::new(32, "t1").unwrap();
        assert!(s.step(1).is_err());
    }
}
