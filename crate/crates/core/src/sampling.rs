//! k-space sampling pattern generation.
//!
//! Cartesian schemes pick whole lines in DFT layout. Radial and spiral
//! trajectories are laid out in centered coordinates (DC at the grid centre),
//! each continuous point is rounded to the nearest cell, out-of-grid points
//! are dropped and repeats are removed keeping first occurrence. The DC cell
//! is appended if a trajectory misses it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mri::SamplingPattern;

/// Golden-angle spoke increment in degrees, `180 (sqrt 5 - 1) / 2`.
pub const GOLDEN_ANGLE_DEG: f64 = 111.246_117_974_981_07;

/// Divergence angle of the Vogel phyllotaxis model in degrees.
pub const PHYLLOTAXIS_ANGLE_DEG: f64 = 137.507_76;

/// Which grid direction a Cartesian line runs along.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LineAxis {
    /// Sampled lines are full rows.
    #[default]
    Rows,
    /// Sampled lines are full columns.
    Cols,
}

impl FromStr for LineAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rows" | "row" => Ok(LineAxis::Rows),
            "cols" | "col" | "columns" => Ok(LineAxis::Cols),
            other => Err(Error::invalid(format!("unknown line axis '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    CartesianSkip {
        step: usize,
        axis: LineAxis,
    },
    CartesianRandom {
        fraction: f64,
        seed: u64,
        axis: LineAxis,
    },
    RadialUniform {
        spokes: usize,
    },
    RadialGolden {
        spokes: usize,
    },
    SpiralVarDensity {
        turns: f64,
        points: usize,
        density_power: f64,
    },
    SpiralPhyllotaxis {
        points: usize,
    },
}

impl Scheme {
    /// Short label used in reports, e.g. `radial_golden16`.
    pub fn label(&self) -> String {
        match self {
            Scheme::CartesianSkip { step, .. } => format!("cartesian_skip{step}"),
            Scheme::CartesianRandom { fraction, .. } => format!("cartesian_random{fraction}"),
            Scheme::RadialUniform { spokes } => format!("radial_uniform{spokes}"),
            Scheme::RadialGolden { spokes } => format!("radial_golden{spokes}"),
            Scheme::SpiralVarDensity { turns, .. } => format!("spiral_vd{turns}"),
            Scheme::SpiralPhyllotaxis { points } => format!("spiral_phyllotaxis{points}"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternSpec {
    pub scheme: Scheme,
    pub height: usize,
    pub width: usize,
}

impl PatternSpec {
    pub fn new(scheme: Scheme, height: usize, width: usize) -> Self {
        Self {
            scheme,
            height,
            width,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::invalid("pattern grid dimensions must be positive"));
        }
        let ok = match &self.scheme {
            Scheme::CartesianSkip { step, .. } => *step > 0,
            Scheme::CartesianRandom { fraction, .. } => *fraction > 0.0 && *fraction <= 1.0,
            Scheme::RadialUniform { spokes } | Scheme::RadialGolden { spokes } => *spokes > 0,
            Scheme::SpiralVarDensity {
                turns,
                points,
                density_power,
            } => *points > 0 && *turns > 0.0 && *density_power > 0.0,
            Scheme::SpiralPhyllotaxis { points } => *points > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate sampling scheme {:?}", self.scheme)))
        }
    }
}

pub fn generate(spec: &PatternSpec) -> Result<SamplingPattern> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut acc = IndexSet::new(h, w);
    match &spec.scheme {
        Scheme::CartesianSkip { step, axis } => {
            let n = line_count(*axis, h, w);
            for line in (0..n).step_by(*step) {
                acc.push_line(*axis, line);
            }
        }
        Scheme::CartesianRandom {
            fraction,
            seed,
            axis,
        } => {
            let n = line_count(*axis, h, w);
            let wanted = ((fraction * n as f64).floor() as usize).clamp(1, n);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut lines: Vec<usize> = index::sample(&mut rng, n - 1, wanted - 1)
                .into_iter()
                .map(|j| j + 1)
                .collect();
            lines.push(0);
            lines.sort_unstable();
            for line in lines {
                acc.push_line(*axis, line);
            }
        }
        Scheme::RadialUniform { spokes } => {
            for j in 0..*spokes {
                acc.push_spoke(PI * j as f64 / *spokes as f64);
            }
        }
        Scheme::RadialGolden { spokes } => {
            for j in 0..*spokes {
                let deg = (j as f64 * GOLDEN_ANGLE_DEG) % 180.0;
                acc.push_spoke(deg.to_radians());
            }
        }
        Scheme::SpiralVarDensity {
            turns,
            points,
            density_power,
        } => {
            let r_max = acc.max_radius();
            let denom = (*points).saturating_sub(1).max(1) as f64;
            for k in 0..*points {
                let s = k as f64 / denom;
                let radius = r_max * s.powf(*density_power);
                let angle = 2.0 * PI * turns * s;
                acc.push_point(radius * angle.sin(), radius * angle.cos());
            }
        }
        Scheme::SpiralPhyllotaxis { points } => {
            let r_max = acc.max_radius();
            for n in 0..*points {
                let radius = r_max * (n as f64 / *points as f64).sqrt();
                let angle = (n as f64 * PHYLLOTAXIS_ANGLE_DEG).to_radians();
                acc.push_point(radius * angle.sin(), radius * angle.cos());
            }
        }
    }
    acc.push_cell(0);
    SamplingPattern::new(h, w, acc.indices)
}

/// `N / M`.
pub fn undersampling_factor(p: &SamplingPattern) -> f64 {
    p.grid_len() as f64 / p.len() as f64
}

fn line_count(axis: LineAxis, h: usize, w: usize) -> usize {
    match axis {
        LineAxis::Rows => h,
        LineAxis::Cols => w,
    }
}

/// Maps a centered offset (DC at 0) to the DFT-layout flat index, or `None`
/// outside the grid.
pub fn centered_to_index(h: usize, w: usize, row: i64, col: i64) -> Option<usize> {
    let in_range = |off: i64, n: usize| {
        let lo = -((n / 2) as i64);
        let hi = (n - n / 2) as i64 - 1;
        (lo..=hi).contains(&off)
    };
    if !in_range(row, h) || !in_range(col, w) {
        return None;
    }
    let r = row.rem_euclid(h as i64) as usize;
    let c = col.rem_euclid(w as i64) as usize;
    Some(r * w + c)
}

/// Inverse of [`centered_to_index`].
pub fn index_to_centered(h: usize, w: usize, index: usize) -> (i64, i64) {
    let wrap = |k: usize, n: usize| {
        if k < n - n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    };
    (wrap(index / w, h), wrap(index % w, w))
}

struct IndexSet {
    h: usize,
    w: usize,
    seen: Vec<bool>,
    indices: Vec<usize>,
}

impl IndexSet {
    fn new(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            seen: vec![false; h * w],
            indices: Vec::new(),
        }
    }

    // Largest radius whose mirrored point is still on the grid.
    fn max_radius(&self) -> f64 {
        ((self.h.min(self.w) - 1) / 2) as f64
    }

    fn push_cell(&mut self, idx: usize) {
        if !self.seen[idx] {
            self.seen[idx] = true;
            self.indices.push(idx);
        }
    }

    fn push_line(&mut self, axis: LineAxis, line: usize) {
        match axis {
            LineAxis::Rows => (0..self.w).for_each(|c| self.push_cell(line * self.w + c)),
            LineAxis::Cols => (0..self.h).for_each(|r| self.push_cell(r * self.w + line)),
        }
    }

    fn push_point(&mut self, row: f64, col: f64) {
        if let Some(idx) = centered_to_index(self.h, self.w, row.round() as i64, col.round() as i64)
        {
            self.push_cell(idx);
        }
    }

    // Full diameter through DC at angle `theta` from the column axis, one
    // sample per unit radius.
    fn push_spoke(&mut self, theta: f64) {
        let r = self.max_radius() as i64;
        let (s, c) = theta.sin_cos();
        for t in -r..=r {
            let t = t as f64;
            self.push_point(t * s, t * c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn gen(scheme: Scheme, h: usize, w: usize) -> SamplingPattern {
        generate(&PatternSpec::new(scheme, h, w)).unwrap()
    }

    fn assert_valid(p: &SamplingPattern) {
        let set: HashSet<_> = p.indices().iter().collect();
        assert_eq!(set.len(), p.len(), "indices must be unique");
        assert!(p.indices().contains(&0), "DC must be sampled");
    }

    #[test]
    fn golden_angle_constant() {
        assert!((GOLDEN_ANGLE_DEG - 180.0 * (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((GOLDEN_ANGLE_DEG - 111.2461).abs() < 1e-4);
    }

    #[test]
    fn centered_index_round_trip() {
        for (h, w) in [(4, 5), (7, 6), (1, 3)] {
            for idx in 0..h * w {
                let (r, c) = index_to_centered(h, w, idx);
                assert_eq!(centered_to_index(h, w, r, c), Some(idx));
            }
        }
        assert_eq!(centered_to_index(4, 4, -2, 1), Some(2 * 4 + 1));
        assert_eq!(centered_to_index(4, 4, 2, 0), None);
    }

    #[test]
    fn skip_one_is_full_sampling() {
        let p = gen(Scheme::CartesianSkip { step: 1, axis: LineAxis::Rows }, 9, 6);
        assert_eq!(p.len(), 54);
        assert_valid(&p);
        assert_eq!(undersampling_factor(&p), 1.0);
    }

    #[test]
    fn skip_seven_on_seventy_rows() {
        let p = gen(Scheme::CartesianSkip { step: 7, axis: LineAxis::Rows }, 70, 64);
        assert_eq!(p.len(), 640);
        assert_valid(&p);
        let cols = gen(Scheme::CartesianSkip { step: 7, axis: LineAxis::Cols }, 64, 70);
        assert_eq!(cols.len(), 640);
    }

    #[test]
    fn random_lines_count_and_factor() {
        for axis in [LineAxis::Rows, LineAxis::Cols] {
            let p = gen(Scheme::CartesianRandom { fraction: 0.25, seed: 42, axis }, 64, 64);
            assert_valid(&p);
            assert_eq!(p.len(), 16 * 64);
            assert!((undersampling_factor(&p) - 4.0).abs() < 1e-12);
        }
        let a = gen(Scheme::CartesianRandom { fraction: 0.3, seed: 1, axis: LineAxis::Rows }, 40, 8);
        let b = gen(Scheme::CartesianRandom { fraction: 0.3, seed: 1, axis: LineAxis::Rows }, 40, 8);
        let c = gen(Scheme::CartesianRandom { fraction: 0.3, seed: 2, axis: LineAxis::Rows }, 40, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let full = gen(Scheme::CartesianRandom { fraction: 1.0, seed: 3, axis: LineAxis::Rows }, 5, 5);
        assert_eq!(full.len(), 25);
    }

    #[test]
    fn two_uniform_spokes_are_orthogonal_diameters() {
        let (h, w) = (64, 64);
        let p = gen(Scheme::RadialUniform { spokes: 2 }, h, w);
        assert_valid(&p);
        assert!(p.len() <= 2 * 64);
        let cells: HashSet<(i64, i64)> =
            p.indices().iter().map(|&i| index_to_centered(h, w, i)).collect();
        for &(r, c) in &cells {
            assert!(r == 0 || c == 0, "({r},{c}) is off both axes");
            assert!(cells.contains(&(-r, -c)), "({r},{c}) lacks its mirror");
        }
    }

    #[test]
    fn golden_spokes_cover_more_angles() {
        let p8 = gen(Scheme::RadialGolden { spokes: 8 }, 64, 64);
        let p16 = gen(Scheme::RadialGolden { spokes: 16 }, 64, 64);
        assert_valid(&p16);
        assert!(p16.len() > p8.len());
        assert!(p16.indices().starts_with(p8.indices()));
    }

    #[test]
    fn spirals_are_valid() {
        let vd = gen(
            Scheme::SpiralVarDensity {
                turns: 8.0,
                points: 4000,
                density_power: 2.0,
            },
            48,
            40,
        );
        assert_valid(&vd);
        let phyl = gen(Scheme::SpiralPhyllotaxis { points: 500 }, 48, 40);
        assert_valid(&phyl);
        assert!(phyl.len() <= 500);
        assert!(phyl.len() > 300);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        for scheme in [
            Scheme::CartesianSkip { step: 0, axis: LineAxis::Rows },
            Scheme::CartesianRandom { fraction: 0.0, seed: 0, axis: LineAxis::Rows },
            Scheme::CartesianRandom { fraction: 1.5, seed: 0, axis: LineAxis::Rows },
            Scheme::RadialUniform { spokes: 0 },
            Scheme::RadialGolden { spokes: 0 },
            Scheme::SpiralPhyllotaxis { points: 0 },
            Scheme::SpiralVarDensity { turns: 1.0, points: 0, density_power: 2.0 },
        ] {
            assert!(generate(&PatternSpec::new(scheme, 8, 8)).is_err());
        }
    }
}
