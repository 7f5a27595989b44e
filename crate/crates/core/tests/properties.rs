use num_complex::Complex64;
use proptest::prelude::*;

use sgtv::grid::{apply_anisotropy, divergence, gradient, pointwise_norm};
use sgtv::mri::{adjoint, forward};
use sgtv::priors::eval_regularizer;
use sgtv::sampling::{generate, LineAxis, PatternSpec, Scheme};
use sgtv::{
    make_anisotropy, prox_structured_tv, AnisotropyField, Constraint, EdgeParam, GradientField, Image,
    KSpaceData, PriorKind, ProxProblem, SamplingPattern,
};

fn image(max_side: usize) -> impl Strategy<Value = Image> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(h, w)| {
        prop::collection::vec(-2.0..2.0f64, h * w).prop_map(move |d| Image::from_vec(h, w, d).unwrap())
    })
}

fn image_pair(max_side: usize) -> impl Strategy<Value = (Image, Image)> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(h, w)| {
        let v = || prop::collection::vec(-1.0..1.0f64, h * w);
        (v(), v()).prop_map(move |(a, b)| (Image::from_vec(h, w, a).unwrap(), Image::from_vec(h, w, b).unwrap()))
    })
}

fn field_like(img: &Image, seed: &[f64]) -> GradientField {
    let n = img.len();
    let rows = (0..n).map(|i| seed[i % seed.len()] * ((i * 7 % 5) as f64 - 2.0)).collect();
    let cols = (0..n).map(|i| seed[(i + 1) % seed.len()] * ((i * 3 % 7) as f64 - 3.0)).collect();
    GradientField::from_parts(img.height(), img.width(), rows, cols).unwrap()
}

fn side_priors(side: &Image, eta: f64) -> Vec<AnisotropyField> {
    let eta = EdgeParam::new(eta).unwrap();
    PriorKind::ALL
        .iter()
        .map(|&k| make_anisotropy(k, side.shape(), Some(side), eta).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_is_negative_adjoint(x in image(12), seed in prop::collection::vec(-1.0..1.0f64, 1..9)) {
        let y = field_like(&x, &seed);
        let lhs = gradient(&x).dot(&y);
        let rhs = -x.dot(&divergence(&y));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gradient_norm_bound(x in image(12)) {
        prop_assert!(gradient(&x).norm_sq() <= 8.0 * x.norm_sq() * (1.0 + 1e-12));
    }

    #[test]
    fn mri_dot_test(x in image(10), picks in prop::collection::vec((0usize..1000, -1.0..1.0f64, -1.0..1.0f64), 1..40)) {
        let (h, w) = x.shape();
        let idx = picks.iter().map(|p| p.0 % (h * w)).collect();
        let p = SamplingPattern::new(h, w, idx).unwrap();
        let d = KSpaceData::new(picks.iter().map(|p| Complex64::new(p.1, p.2)).collect()).unwrap();
        let ex = forward(&p, &x).unwrap();
        let lhs = ex.dot(&d);
        let rhs = x.dot(&adjoint(&p, &d).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + ex.norm() * d.norm()));
    }

    #[test]
    fn parallel_level_sets(a in -5.0..5.0f64, b in -5.0..5.0f64, r in 0.0..=1.0f64, phi in 0.0..6.3f64) {
        let xi = GradientField::uniform(1, 1, (r * phi.cos(), r * phi.sin()));
        let m = AnisotropyField::directional(xi).unwrap();
        let g = GradientField::uniform(1, 1, (a, b));
        let lhs = pointwise_norm(&apply_anisotropy(&m, &g).unwrap()).get(0, 0);
        let s = (2.0 - r * r).sqrt();
        let proj = s * r * (a * phi.cos() + b * phi.sin());
        // squared form: the square root amplifies rounding near zero
        let rhs = a * a + b * b - proj * proj;
        prop_assert!((lhs * lhs - rhs).abs() <= 1e-12 * (a * a + b * b).max(1.0));
    }

    #[test]
    fn structured_priors_are_dominated_by_tv((v, side) in image_pair(10), eta in 1e-3..1.0f64) {
        let ms = side_priors(&side, eta);
        let tv = eval_regularizer(&ms[0], &v).unwrap();
        for m in &ms[1..] {
            prop_assert!(eval_regularizer(m, &v).unwrap() <= tv * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn regularizers_are_convex_and_homogeneous((a, b) in image_pair(9), t in 0.0..1.0f64, c in -3.0..3.0f64) {
        let side = Image::from_fn(a.height(), a.width(), |r, col| ((r * 3 + col) % 4) as f64);
        for m in side_priors(&side, 0.05) {
            let mix = Image::from_fn(a.height(), a.width(), |r, col| t * a.get(r, col) + (1.0 - t) * b.get(r, col));
            let ra = eval_regularizer(&m, &a).unwrap();
            let rb = eval_regularizer(&m, &b).unwrap();
            let rm = eval_regularizer(&m, &mix).unwrap();
            prop_assert!(rm <= t * ra + (1.0 - t) * rb + 1e-12);
            let scaled = a.map(|x| c * x);
            prop_assert!((eval_regularizer(&m, &scaled).unwrap() - c.abs() * ra).abs() <= 1e-10 * (1.0 + ra));
        }
    }

    #[test]
    fn prox_reduces_to_tv_for_constant_side(f in image(8), level in -1.0..1.0f64, alpha in 0.0..0.5f64) {
        let (h, w) = f.shape();
        let side = Image::filled(h, w, level);
        let ms = side_priors(&side, 1e-2);
        let run = |m: &AnisotropyField| {
            prox_structured_tv(&ProxProblem::new(alpha, &f, m).constraint(Constraint::NonNegative).iterations(50))
                .unwrap()
                .v
        };
        let tv = run(&ms[0]);
        for m in &ms[1..] {
            prop_assert!(run(m).distance(&tv) <= 1e-8 * (1.0 + tv.norm()));
        }
    }

    #[test]
    fn prox_output_is_feasible(f in image(8), alpha in 0.0..1.0f64) {
        let m = AnisotropyField::identity(f.height(), f.width());
        let v = prox_structured_tv(&ProxProblem::new(alpha, &f, &m).constraint(Constraint::NonNegative).iterations(30))
            .unwrap()
            .v;
        prop_assert!(v.min() >= 0.0);
    }

    #[test]
    fn patterns_are_valid(h in 8usize..40, w in 8usize..40, kind in 0usize..6, k in 1usize..30, seed in any::<u64>()) {
        let scheme = match kind {
            0 => Scheme::CartesianSkip { step: k, axis: LineAxis::Cols },
            1 => Scheme::CartesianRandom { fraction: (k as f64 / 30.0).max(0.05), seed, axis: LineAxis::Rows },
            2 => Scheme::RadialUniform { spokes: k },
            3 => Scheme::RadialGolden { spokes: k },
            4 => Scheme::SpiralVarDensity { turns: k as f64 / 3.0, points: 40 * k, density_power: 2.0 },
            _ => Scheme::SpiralPhyllotaxis { points: 30 * k },
        };
        let p = generate(&PatternSpec::new(scheme, h, w)).unwrap();
        prop_assert!(p.indices().contains(&0));
        let mut sorted = p.indices().to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), p.len());
        prop_assert!(sorted.iter().all(|&i| i < h * w));
    }

    #[test]
    fn image_files_roundtrip_bit_exact(x in image(9)) {
        let mut buf = Vec::new();
        sgtv::io::write_image(&mut buf, &x).unwrap();
        let back = sgtv::io::read_image(&buf[..]).unwrap();
        prop_assert!(back.as_slice().iter().zip(x.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn sig_reparses_closely(x in prop::num::f64::NORMAL) {
        let back: f64 = sgtv::format::sig(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }
}
