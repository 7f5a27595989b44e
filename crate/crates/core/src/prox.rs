//! Proximal operator of `alpha R + chi_C` for the structured TV family,
//! computed by fast gradient projection on the dual problem.
//!
//! For `R(v) = sum_i |M_i (grad v)_i|` the prox
//! `argmin_{v in C} 1/2 |v - f|^2 + alpha R(v)` has the dual
//! `max_{|y_i| <= 1} 1/2 |h - P_C h|^2 - 1/2 |h|^2 + 1/2 |f|^2` with
//! `h = f + alpha div(M y)`. Its gradient is `alpha M grad P_C(h)` and its
//! Lipschitz constant is bounded by `8 alpha^2` because `|M| <= 1` and
//! `|grad|^2 <= 8`.

use crate::error::{check_shape, Error, Result};
use crate::grid::{
    divergence_into, gradient_into, project_unit_ball_in_place, AnisotropyField, GradientField,
    Image,
};
use crate::priors::eval_regularizer;

/// Convex set the prox is restricted to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Constraint {
    #[default]
    None,
    NonNegative,
}

impl Constraint {
    fn project(self, v: &mut [f64]) {
        if self == Constraint::NonNegative {
            v.iter_mut().for_each(|x| *x = x.max(0.0));
        }
    }

    pub fn contains(self, v: &Image) -> bool {
        match self {
            Constraint::None => true,
            Constraint::NonNegative => v.as_slice().iter().all(|&x| x >= 0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProxProblem<'a> {
    pub alpha: f64,
    pub f: &'a Image,
    pub anisotropy: &'a AnisotropyField,
    pub constraint: Constraint,
    pub iterations: usize,
    /// Initial dual variable; zero when absent.
    pub y0: Option<&'a GradientField>,
    pub track_dual_objective: bool,
}

impl<'a> ProxProblem<'a> {
    pub fn new(alpha: f64, f: &'a Image, anisotropy: &'a AnisotropyField) -> Self {
        Self {
            alpha,
            f,
            anisotropy,
            constraint: Constraint::None,
            iterations: 100,
            y0: None,
            track_dual_objective: false,
        }
    }

    pub fn constraint(mut self, constraint: Constraint) -> Self {
        self.constraint = constraint;
        self
    }

    pub fn iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn warm_start(mut self, y0: &'a GradientField) -> Self {
        self.y0 = Some(y0);
        self
    }

    pub fn track_dual_objective(mut self, on: bool) -> Self {
        self.track_dual_objective = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "regularization weight must be nonnegative, got {}",
                self.alpha
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("prox needs at least one iteration"));
        }
        check_shape(self.f.shape(), self.anisotropy.shape())?;
        if let Some(y0) = self.y0 {
            check_shape(self.f.shape(), y0.shape())?;
            if y0.max_magnitude() > 1.0 + 1e-12 {
                return Err(Error::invalid("initial dual variable leaves the unit ball"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ProxResult {
    pub v: Image,
    pub y: GradientField,
    pub dual_objective_trace: Option<Vec<f64>>,
}

/// Primal objective `1/2 |v - f|^2 + alpha R(v)`; infinite when `v` lies
/// outside the constraint set.
pub fn prox_objective(p: &ProxProblem<'_>, v: &Image) -> Result<f64> {
    check_shape(p.f.shape(), v.shape())?;
    if !p.constraint.contains(v) {
        return Ok(f64::INFINITY);
    }
    let fidelity = 0.5 * v.distance(p.f).powi(2);
    Ok(fidelity + p.alpha * eval_regularizer(p.anisotropy, v)?)
}

/// Dual objective at `y` for the given problem.
pub fn prox_dual_objective(p: &ProxProblem<'_>, y: &GradientField) -> Result<f64> {
    check_shape(p.f.shape(), y.shape())?;
    let (h, w) = p.f.shape();
    let mut my = y.clone();
    p.anisotropy.apply_in_place(&mut my);
    let mut hp = Image::zeros(h, w);
    divergence_into(&my, &mut hp);
    Ok(dual_value(p.f, p.alpha, p.constraint, &mut hp))
}

// `hp` holds div(M y) on entry and is overwritten.
fn dual_value(f: &Image, alpha: f64, constraint: Constraint, hp: &mut Image) -> f64 {
    let mut acc = 0.0;
    for (h, &fi) in hp.as_mut_slice().iter_mut().zip(f.as_slice()) {
        *h = fi + alpha * *h;
        let resid = match constraint {
            Constraint::None => 0.0,
            Constraint::NonNegative => *h - h.max(0.0),
        };
        acc += 0.5 * resid * resid - 0.5 * *h * *h + 0.5 * fi * fi;
    }
    acc
}

pub fn prox_structured_tv(p: &ProxProblem<'_>) -> Result<ProxResult> {
    p.validate()?;
    let (h, w) = p.f.shape();
    let mut y = p.y0.cloned().unwrap_or_else(|| GradientField::zeros(h, w));
    let mut solver = FgpSolver::new(h, w);
    let mut trace = p.track_dual_objective.then(Vec::new);
    let mut v = Image::zeros(h, w);
    solver.run(
        p.alpha,
        p.f,
        p.anisotropy,
        p.constraint,
        p.iterations,
        &mut y,
        &mut v,
        trace.as_mut(),
    );
    Ok(ProxResult {
        v,
        y,
        dual_objective_trace: trace,
    })
}

/// Reusable work buffers for repeated prox evaluations on one grid.
#[derive(Clone, Debug)]
pub struct FgpSolver {
    y_prev: GradientField,
    y_bar: GradientField,
    work: GradientField,
    primal: Image,
}

impl FgpSolver {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            y_prev: GradientField::zeros(height, width),
            y_bar: GradientField::zeros(height, width),
            work: GradientField::zeros(height, width),
            primal: Image::zeros(height, width),
        }
    }

    /// Runs `iterations` dual steps starting from `y`, leaves the final dual
    /// in `y` and the primal `P_C(f + alpha div(M y))` in `v`. Shapes must
    /// already agree.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &mut self,
        alpha: f64,
        f: &Image,
        m: &AnisotropyField,
        constraint: Constraint,
        iterations: usize,
        y: &mut GradientField,
        v: &mut Image,
        mut trace: Option<&mut Vec<f64>>,
    ) {
        if alpha == 0.0 {
            v.as_mut_slice().copy_from_slice(f.as_slice());
            constraint.project(v.as_mut_slice());
            return;
        }
        let step = (8.0 * alpha * alpha).recip();
        let mut t = 1.0f64;
        self.y_bar.clone_from(y);

        for _ in 0..iterations {
            // gradient of the dual at y_bar: alpha M grad P_C(f + alpha div(M y_bar))
            self.work.clone_from(&self.y_bar);
            m.apply_in_place(&mut self.work);
            self.primal_from_dual(alpha, f, constraint);
            gradient_into(&self.primal, &mut self.work);
            m.apply_in_place(&mut self.work);

            // y_new = P_B(y_bar + step * alpha * M grad P_C(...)), written into work
            let scale = step * alpha;
            {
                let (wr, wc) = self.work.components_mut();
                let (br, bc) = self.y_bar.components();
                for i in 0..wr.len() {
                    wr[i] = br[i] + scale * wr[i];
                    wc[i] = bc[i] + scale * wc[i];
                }
            }
            project_unit_ball_in_place(&mut self.work);

            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            t = t_next;

            // rotate: y_prev <- y, y <- y_new, y_bar <- y_new + momentum (y_new - y_prev)
            std::mem::swap(&mut self.y_prev, y);
            std::mem::swap(y, &mut self.work);
            {
                let (nr, nc) = y.components();
                let (pr, pc) = self.y_prev.components();
                let (br, bc) = self.y_bar.components_mut();
                for i in 0..nr.len() {
                    br[i] = nr[i] + momentum * (nr[i] - pr[i]);
                    bc[i] = nc[i] + momentum * (nc[i] - pc[i]);
                }
            }

            if let Some(trace) = trace.as_deref_mut() {
                self.work.clone_from(y);
                m.apply_in_place(&mut self.work);
                divergence_into(&self.work, &mut self.primal);
                trace.push(dual_value(f, alpha, constraint, &mut self.primal));
            }
        }

        self.work.clone_from(y);
        m.apply_in_place(&mut self.work);
        self.primal_from_dual(alpha, f, constraint);
        v.as_mut_slice().copy_from_slice(self.primal.as_slice());
    }

    // primal <- P_C(f + alpha div(work)); work must already hold M y.
    fn primal_from_dual(&mut self, alpha: f64, f: &Image, constraint: Constraint) {
        divergence_into(&self.work, &mut self.primal);
        for (p, fi) in self.primal.as_mut_slice().iter_mut().zip(f.as_slice()) {
            *p = fi + alpha * *p;
        }
        constraint.project(self.primal.as_mut_slice());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient;
    use crate::priors::{make_anisotropy, EdgeParam, PriorKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, |_, _| rng.random_range(-0.5..1.0))
    }

    #[test]
    fn tiny_alpha_reduces_to_projection() {
        let f = random_image(8, 8, 1);
        let m = AnisotropyField::identity(8, 8);
        let p = ProxProblem::new(1e-12, &f, &m)
            .constraint(Constraint::NonNegative)
            .iterations(50);
        let out = prox_structured_tv(&p).unwrap();
        let expected = crate::grid::project_nonneg(&f);
        assert!(out.v.distance(&expected) < 1e-8);
    }

    #[test]
    fn constant_input_is_fixed_point() {
        let f = Image::filled(6, 7, 0.4);
        let side = random_image(6, 7, 3);
        for kind in PriorKind::ALL {
            let m = make_anisotropy(kind, (6, 7), Some(&side), EdgeParam::new(0.05).unwrap())
                .unwrap();
            for alpha in [0.01, 1.0, 10.0] {
                let p = ProxProblem::new(alpha, &f, &m)
                    .constraint(Constraint::NonNegative)
                    .iterations(100);
                let out = prox_structured_tv(&p).unwrap();
                assert!(out.v.distance(&f) < 1e-12, "{kind} alpha={alpha}");
            }
        }
    }

    #[test]
    fn iterates_stay_feasible() {
        let f = random_image(9, 7, 5);
        let side = random_image(9, 7, 6);
        let m = make_anisotropy(PriorKind::Dtv, (9, 7), Some(&side), EdgeParam::new(0.1).unwrap())
            .unwrap();
        let p = ProxProblem::new(0.3, &f, &m)
            .constraint(Constraint::NonNegative)
            .iterations(37);
        let out = prox_structured_tv(&p).unwrap();
        assert!(out.y.max_magnitude() <= 1.0 + 1e-15);
        assert!(out.v.min() >= 0.0);
    }

    #[test]
    fn objective_helpers() {
        let f = Image::filled(4, 4, 1.0);
        let m = AnisotropyField::identity(4, 4);
        let p = ProxProblem::new(0.5, &f, &m);
        assert_eq!(prox_objective(&p, &f).unwrap(), 0.0);
        let shifted = f.map(|x| x + 0.25);
        let expected = 0.5 * 16.0 * 0.25 * 0.25;
        assert!((prox_objective(&p, &shifted).unwrap() - expected).abs() < 1e-15);

        let v = random_image(4, 4, 9);
        let recomposed = 0.5 * v.distance(&f).powi(2)
            + 0.5 * crate::priors::eval_regularizer(&m, &v).unwrap();
        assert!((prox_objective(&p, &v).unwrap() - recomposed).abs() < 1e-14);

        let neg = Image::filled(4, 4, -1.0);
        let pc = ProxProblem::new(0.5, &f, &m).constraint(Constraint::NonNegative);
        assert_eq!(prox_objective(&pc, &neg).unwrap(), f64::INFINITY);
    }

    #[test]
    fn duality_gap_closes() {
        let f = random_image(8, 8, 11);
        let m = AnisotropyField::identity(8, 8);
        let p = ProxProblem::new(0.1, &f, &m)
            .constraint(Constraint::NonNegative)
            .iterations(2000);
        let out = prox_structured_tv(&p).unwrap();
        let primal = prox_objective(&p, &out.v).unwrap();
        let dual = prox_dual_objective(&p, &out.y).unwrap();
        assert!(primal >= dual - 1e-12);
        assert!((primal - dual) / primal < 1e-5, "gap {}", primal - dual);
    }

    #[test]
    fn dual_trace_is_recorded() {
        let f = random_image(5, 5, 2);
        let m = AnisotropyField::identity(5, 5);
        let p = ProxProblem::new(0.2, &f, &m).iterations(30).track_dual_objective(true);
        let out = prox_structured_tv(&p).unwrap();
        let trace = out.dual_objective_trace.unwrap();
        assert_eq!(trace.len(), 30);
        let last = prox_dual_objective(&p, &out.y).unwrap();
        assert!((trace[29] - last).abs() < 1e-12);
    }

    #[test]
    fn warm_start_is_used() {
        let f = random_image(6, 6, 4);
        let m = AnisotropyField::identity(6, 6);
        let p = ProxProblem::new(0.2, &f, &m).iterations(500);
        let converged = prox_structured_tv(&p).unwrap();
        let warm = ProxProblem::new(0.2, &f, &m).iterations(1).warm_start(&converged.y);
        let cold = ProxProblem::new(0.2, &f, &m).iterations(1);
        let target = prox_objective(&p, &converged.v).unwrap();
        let warm_obj = prox_objective(&p, &prox_structured_tv(&warm).unwrap().v).unwrap();
        let cold_obj = prox_objective(&p, &prox_structured_tv(&cold).unwrap().v).unwrap();
        assert!(warm_obj - target < cold_obj - target);
    }

    #[test]
    fn rejects_bad_problems() {
        let f = Image::zeros(3, 3);
        let m = AnisotropyField::identity(3, 3);
        assert!(prox_structured_tv(&ProxProblem::new(-1.0, &f, &m)).is_err());
        assert!(prox_structured_tv(&ProxProblem::new(1.0, &f, &m).iterations(0)).is_err());
        let y = GradientField::uniform(3, 3, (2.0, 0.0));
        assert!(prox_structured_tv(&ProxProblem::new(1.0, &f, &m).warm_start(&y)).is_err());
        let m2 = AnisotropyField::identity(3, 4);
        assert!(prox_structured_tv(&ProxProblem::new(1.0, &f, &m2)).is_err());
    }

    #[test]
    fn gradient_of_result_is_shrunk() {
        let f = random_image(10, 10, 8);
        let m = AnisotropyField::identity(10, 10);
        let out = prox_structured_tv(&ProxProblem::new(0.2, &f, &m).iterations(200)).unwrap();
        assert!(gradient(&out.v).norm() < gradient(&f).norm());
    }
}
