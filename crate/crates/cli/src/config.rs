//! Experiment configuration.
//!
//! Plain text, one `key = value` per line, `#` starts a comment, list values
//! are comma-separated. Relative paths resolve against the config file's
//! directory.
//!
//! ```text
//! ground_truth = phantom:t1, phantom:t2
//! side_info    = phantom:t2, phantom:t1
//! prior        = tv, wtv, dtv
//! pattern      = radial_golden:16, cartesian_random:0.125, spiral_phyllotaxis:2048
//! alpha        = logspace:5e-4:5e-2:7
//! eta          = 1e-4, 1e-3, 1e-2, 1e-1, 1
//! ```
//!
//! A phantom used as side information stands for a previously acquired scan
//! of the other contrast: it is passed through a fully sampled simulation
//! with noise level `side_noise` and reconstructed by the inverse DFT.
//! Side images read from files are used as they are.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sgtv::mri::adjoint;
use sgtv::phantom::{shepp_logan_pair, simulate, NoiseSpec, PhantomPair};
use sgtv::sampling::{LineAxis, Scheme};
use sgtv::{AdmmConfig, Image, PriorKind, SamplingPattern};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contrast {
    T1,
    T2,
}

/// Where an image comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Phantom(Contrast),
    File(PathBuf),
}

impl Source {
    pub fn parse(value: &str, base: &Path) -> Result<Self> {
        match value {
            "phantom:t1" => Ok(Source::Phantom(Contrast::T1)),
            "phantom:t2" => Ok(Source::Phantom(Contrast::T2)),
            v if v.starts_with("phantom:") => Err(CliError::usage(format!("unknown phantom contrast '{v}'"))),
            v => Ok(Source::File(resolve(base, v))),
        }
    }

    /// `(dataset, contrast)` labels for reports.
    pub fn labels(&self) -> (String, String) {
        match self {
            Source::Phantom(Contrast::T1) => ("shepp_logan".into(), "t1".into()),
            Source::Phantom(Contrast::T2) => ("shepp_logan".into(), "t2".into()),
            Source::File(path) => (
                "file".into(),
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "image".into()),
            ),
        }
    }

    pub fn load(&self, phantom_size: usize) -> Result<Image> {
        match self {
            Source::Phantom(c) => {
                let PhantomPair { t1, t2 } = shepp_logan_pair(phantom_size)?;
                Ok(if *c == Contrast::T1 { t1 } else { t2 })
            }
            Source::File(path) => sgtv::io::load_image(path).map_err(|e| CliError::data(path, e)),
        }
    }
}

/// Loads a side image; phantoms become a noisy fully sampled scan.
pub fn load_side(source: &Source, phantom_size: usize, noise: f64, seed: u64) -> Result<Image> {
    let clean = source.load(phantom_size)?;
    if !matches!(source, Source::Phantom(_)) || noise == 0.0 {
        return Ok(clean);
    }
    let (h, w) = clean.shape();
    let full = SamplingPattern::full(h, w);
    let data = simulate(&clean, &full, NoiseSpec { fraction: noise, seed })?;
    Ok(adjoint(&full, &data)?)
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// A sampling scheme as written in the config, e.g. `radial_golden:16`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternEntry {
    pub label: String,
    pub scheme: Scheme,
}

impl PatternEntry {
    /// Parses `name:param[:param...]`. `seed` feeds random Cartesian lines.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let bad = || CliError::usage(format!("malformed pattern '{text}'"));
        let num = |i: usize| -> Result<f64> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let int = |i: usize| -> Result<usize> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let axis = |i: usize| -> Result<LineAxis> {
            parts.get(i).map_or(Ok(LineAxis::Rows), |s| s.parse().map_err(|_| bad()))
        };
        let max_parts = |n: usize| if parts.len() > n { Err(bad()) } else { Ok(()) };
        let scheme = match parts[0] {
            "cartesian_skip" => {
                max_parts(3)?;
                Scheme::CartesianSkip { step: int(1)?, axis: axis(2)? }
            }
            "cartesian_random" => {
                max_parts(3)?;
                Scheme::CartesianRandom { fraction: num(1)?, seed, axis: axis(2)? }
            }
            "radial_uniform" => {
                max_parts(2)?;
                Scheme::RadialUniform { spokes: int(1)? }
            }
            "radial_golden" => {
                max_parts(2)?;
                Scheme::RadialGolden { spokes: int(1)? }
            }
            "spiral_vd" => {
                max_parts(4)?;
                Scheme::SpiralVarDensity {
                    turns: num(1)?,
                    points: int(2)?,
                    density_power: if parts.len() > 3 { num(3)? } else { 2.0 },
                }
            }
            "spiral_phyllotaxis" => {
                max_parts(2)?;
                Scheme::SpiralPhyllotaxis { points: int(1)? }
            }
            _ => return Err(bad()),
        };
        Ok(Self {
            label: parts.join(":"),
            scheme,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub ground_truth: Vec<Source>,
    /// Aligned with `ground_truth`; `None` means no side information.
    pub side_info: Vec<Option<Source>>,
    pub phantom_size: usize,
    pub priors: Vec<PriorKind>,
    pub patterns: Vec<PatternEntry>,
    pub noise_fraction: f64,
    pub side_noise: f64,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    /// Solver settings; its `alpha` is overridden per run.
    pub admm: AdmmConfig,
    pub output: PathBuf,
    /// Inputs of `reconstruct`.
    pub data: Option<PathBuf>,
    pub pattern_file: Option<PathBuf>,
    pub peak: f64,
}

const SIDE_STREAM: u64 = 0x5eed_0000_0000_0000;

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

pub fn default_alpha_grid() -> Vec<f64> {
    log_space(5e-4, 5e-2, 7)
}

pub fn default_eta_grid() -> Vec<f64> {
    log_space(1e-4, 1.0, 5)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ground_truth: vec![Source::Phantom(Contrast::T1), Source::Phantom(Contrast::T2)],
            side_info: vec![
                Some(Source::Phantom(Contrast::T2)),
                Some(Source::Phantom(Contrast::T1)),
            ],
            phantom_size: 128,
            priors: PriorKind::ALL.to_vec(),
            patterns: vec![PatternEntry::parse("radial_golden:16", 0).expect("valid default")],
            noise_fraction: 0.05,
            side_noise: 0.05,
            seed: 0,
            alphas: default_alpha_grid(),
            etas: default_eta_grid(),
            admm: AdmmConfig::default(),
            output: PathBuf::from("out"),
            data: None,
            pattern_file: None,
            peak: 1.0,
        }
    }
}

fn split_list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::usage(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

/// Numeric grid: comma list or `logspace:lo:hi:n`.
fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>> {
    let v = value.trim();
    let grid = if let Some(spec) = v.strip_prefix("logspace:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::usage(format!("'{key}' expects logspace:lo:hi:n")));
        }
        let lo: f64 = parse_num(key, parts[0])?;
        let hi: f64 = parse_num(key, parts[1])?;
        let n: usize = parse_num(key, parts[2])?;
        if !(lo > 0.0 && hi > 0.0 && n > 0) {
            return Err(CliError::usage(format!("'{key}' logspace needs positive bounds and count")));
        }
        log_space(lo, hi, n)
    } else {
        split_list(v)
            .into_iter()
            .map(|s| parse_num(key, s))
            .collect::<Result<Vec<f64>>>()?
    };
    if grid.is_empty() {
        return Err(CliError::usage(format!("'{key}' grid is empty")));
    }
    Ok(grid)
}

/// Splits the text into ordered `key -> value` pairs, rejecting duplicates.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected 'key = value'", n + 1)))?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::usage(format!("config line {}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e.into()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let pairs = parse_pairs(text)?;
        let mut side_set = false;
        let mut pattern_text: Option<String> = None;

        for (key, value) in &pairs {
            let k = key.as_str();
            match k {
                "ground_truth" => {
                    cfg.ground_truth = split_list(value)
                        .into_iter()
                        .map(|v| Source::parse(v, base))
                        .collect::<Result<_>>()?;
                }
                "side_info" => {
                    side_set = true;
                    cfg.side_info = split_list(value)
                        .into_iter()
                        .map(|v| if v == "none" { Ok(None) } else { Source::parse(v, base).map(Some) })
                        .collect::<Result<_>>()?;
                }
                "phantom_size" => cfg.phantom_size = parse_num(k, value)?,
                "prior" => {
                    cfg.priors = split_list(value)
                        .into_iter()
                        .map(|v| v.parse::<PriorKind>().map_err(|e| CliError::usage(e.to_string())))
                        .collect::<Result<_>>()?;
                }
                "pattern" => pattern_text = Some(value.clone()),
                "noise_fraction" => cfg.noise_fraction = parse_num(k, value)?,
                "side_noise" => cfg.side_noise = parse_num(k, value)?,
                "seed" => cfg.seed = parse_num(k, value)?,
                "alpha" => cfg.alphas = parse_grid(k, value)?,
                "eta" => cfg.etas = parse_grid(k, value)?,
                "outer_iterations" => cfg.admm.outer_iterations = parse_num(k, value)?,
                "inner_iterations" => cfg.admm.inner_prox_iterations = parse_num(k, value)?,
                "rho0" => cfg.admm.rho0 = parse_num(k, value)?,
                "rho_mu" => cfg.admm.rho_mu = parse_num(k, value)?,
                "rho_tau" => cfg.admm.rho_tau = parse_num(k, value)?,
                "adapt_rho" => cfg.admm.adapt_rho = parse_bool(k, value)?,
                "warm_start" => cfg.admm.warm_start_dual = parse_bool(k, value)?,
                "tolerance" => cfg.admm.tolerance = parse_num(k, value)?,
                "output" => cfg.output = resolve(base, value),
                "data" => cfg.data = Some(resolve(base, value)),
                "pattern_file" => cfg.pattern_file = Some(resolve(base, value)),
                "peak" => cfg.peak = parse_num(k, value)?,
                _ => return Err(CliError::usage(format!("unknown config key '{k}'"))),
            }
        }
        if let Some(p) = pattern_text {
            cfg.set_patterns(&p)?;
        }
        if !side_set && cfg.ground_truth != ExperimentConfig::default().ground_truth {
            cfg.side_info = vec![None; cfg.ground_truth.len()];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_patterns(&mut self, text: &str) -> Result<()> {
        self.patterns = split_list(text)
            .into_iter()
            .map(|p| PatternEntry::parse(p, self.seed))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Replaces the seed, including the one baked into random patterns.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        for p in &mut self.patterns {
            if let Scheme::CartesianRandom { seed: s, .. } = &mut p.scheme {
                *s = seed;
            }
        }
    }

    /// Noise seed for the `index`-th ground truth.
    pub fn noise_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    /// Noise seed for the side scan of the `index`-th ground truth; a
    /// separate stream from [`noise_seed`](Self::noise_seed).
    pub fn side_seed(&self, index: usize) -> u64 {
        self.noise_seed(index) ^ SIDE_STREAM
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(CliError::usage(m.to_string()));
        if self.side_info.len() != self.ground_truth.len() {
            return fail("side_info must list one entry (or 'none') per ground_truth entry");
        }
        if self.priors.is_empty() || self.patterns.is_empty() {
            return fail("prior and pattern lists must be nonempty");
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0)) {
            return fail("alpha values must be nonnegative");
        }
        if self.etas.iter().any(|e| !(*e > 0.0)) {
            return fail("eta values must be positive");
        }
        if !(self.noise_fraction >= 0.0 && self.side_noise >= 0.0) {
            return fail("noise levels must be nonnegative");
        }
        if !(self.peak > 0.0) {
            return fail("peak must be positive");
        }
        self.admm.validate().map_err(|e| CliError::usage(e.to_string()))
    }
}
