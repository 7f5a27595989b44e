//! Double-split ADMM for
//! `min_{v >= 0} 1/2 |S F v - d|^2 + alpha R(v)`.
//!
//! The splitting `v = z`, `x = F z` puts the prox of `alpha R + chi_{v >= 0}`
//! and the diagonal k-space solve in the first block and a closed-form
//! averaging step for `z` in the second. Multipliers `b` (k-space) and `u`
//! (image) are scaled by `rho`.

use num_complex::Complex64;

use crate::error::{check_shape, Error, Result};
use crate::grid::{AnisotropyField, GradientField, Image};
use crate::mri::{mask_counts, real_dot, sample_adjoint, ComplexImage, KSpaceData, MriOperator, SamplingPattern};
use crate::priors::eval_regularizer;
use crate::prox::{Constraint, FgpSolver};

#[derive(Clone, Debug, PartialEq)]
pub struct AdmmConfig {
    pub alpha: f64,
    pub rho0: f64,
    pub outer_iterations: usize,
    pub inner_prox_iterations: usize,
    /// Residual ratio that triggers a `rho` change.
    pub rho_mu: f64,
    /// Factor `rho` is multiplied or divided by.
    pub rho_tau: f64,
    pub adapt_rho: bool,
    pub warm_start_dual: bool,
    /// Early stop once both relative residuals fall below this; 0 disables.
    pub tolerance: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            alpha: 5e-3,
            rho0: 1.0,
            outer_iterations: 200,
            inner_prox_iterations: 20,
            rho_mu: 10.0,
            rho_tau: 2.0,
            adapt_rho: true,
            warm_start_dual: true,
            tolerance: 1e-6,
        }
    }
}

impl AdmmConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !positive(self.rho0) {
            return Err(Error::invalid(format!("rho0 must be positive, got {}", self.rho0)));
        }
        if self.outer_iterations == 0 || self.inner_prox_iterations == 0 {
            return Err(Error::invalid("iteration counts must be positive"));
        }
        if !(self.rho_mu >= 1.0 && self.rho_tau > 1.0) {
            return Err(Error::invalid("rho adaptation needs mu >= 1 and tau > 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        Ok(())
    }
}

/// Iterates of the outer loop.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub v: Image,
    pub x: ComplexImage,
    pub z: Image,
    pub z_prev: Image,
    /// Cached `F z` for the current `z`.
    pub fz: ComplexImage,
    pub b: ComplexImage,
    pub u: Image,
    pub rho: f64,
    pub y: GradientField,
    pub iteration: usize,
}

impl AdmmState {
    pub fn new(height: usize, width: usize, rho: f64) -> Self {
        Self {
            v: Image::zeros(height, width),
            x: ComplexImage::zeros(height, width),
            z: Image::zeros(height, width),
            z_prev: Image::zeros(height, width),
            fz: ComplexImage::zeros(height, width),
            b: ComplexImage::zeros(height, width),
            u: Image::zeros(height, width),
            rho,
            y: GradientField::zeros(height, width),
            iteration: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl Diagnostics {
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// CSV with header `iteration,objective,primal_residual,dual_residual,rho`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,primal_residual,dual_residual,rho\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                crate::format::sig(r.objective),
                crate::format::sig(r.primal_residual),
                crate::format::sig(r.dual_residual),
                crate::format::sig(r.rho)
            ));
        }
        out
    }
}

/// `(S*S + rho)^-1 [S* d + rho (F z - b)]` for one k-space cell set.
pub fn x_update(
    d: &KSpaceData,
    p: &SamplingPattern,
    z: &Image,
    b: &ComplexImage,
    rho: f64,
) -> Result<ComplexImage> {
    check_shape(p.shape(), z.shape())?;
    check_shape(p.shape(), b.shape())?;
    let op = MriOperator::new(p.clone());
    let fz = op.fft().forward(&ComplexImage::from_real(z));
    let scattered = sample_adjoint(p, d)?;
    let counts = mask_counts(p);
    let mut x = ComplexImage::zeros(p.shape().0, p.shape().1);
    x_update_into(&scattered, counts.as_slice(), &fz, b, rho, &mut x);
    Ok(x)
}

fn x_update_into(
    scattered: &ComplexImage,
    counts: &[f64],
    fz: &ComplexImage,
    b: &ComplexImage,
    rho: f64,
    x: &mut ComplexImage,
) {
    let (sd, fz, b) = (scattered.as_slice(), fz.as_slice(), b.as_slice());
    for (i, xi) in x.as_mut_slice().iter_mut().enumerate() {
        *xi = (sd[i] + rho * (fz[i] - b[i])) / (counts[i] + rho);
    }
}

/// Primal residual `|(x - F z, v - z)|` and dual residual
/// `rho |(F(z - z_prev), z - z_prev)|`, the latter via unitarity of `F`.
pub fn residuals(state: &AdmmState) -> (f64, f64) {
    let kspace: f64 = state
        .x
        .as_slice()
        .iter()
        .zip(state.fz.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let image = state.v.distance(&state.z).powi(2);
    let primal = (kspace + image).sqrt();
    let dual = state.rho * std::f64::consts::SQRT_2 * state.z.distance(&state.z_prev);
    (primal, dual)
}

/// Residual balancing: grows `rho` when the primal residual dominates,
/// shrinks it when the dual residual does, and rescales the multipliers.
/// Returns whether `rho` changed.
pub fn rho_adapt(state: &mut AdmmState, primal: f64, dual: f64, mu: f64, tau: f64) -> bool {
    let factor = if primal > mu * dual {
        tau
    } else if dual > mu * primal {
        tau.recip()
    } else {
        return false;
    };
    state.rho *= factor;
    let inv = factor.recip();
    state.b.as_mut_slice().iter_mut().for_each(|z| *z *= inv);
    state.u.as_mut_slice().iter_mut().for_each(|x| *x *= inv);
    true
}

/// Stepwise solver; [`reconstruct`] runs it to completion.
#[derive(Clone, Debug)]
pub struct AdmmSolver {
    op: MriOperator,
    data: KSpaceData,
    scattered: ComplexImage,
    counts: Vec<f64>,
    anisotropy: AnisotropyField,
    cfg: AdmmConfig,
    fgp: FgpSolver,
    state: AdmmState,
    prox_point: Image,
    scratch: ComplexImage,
    diagnostics: Diagnostics,
}

impl AdmmSolver {
    pub fn new(
        d: &KSpaceData,
        p: &SamplingPattern,
        anisotropy: &AnisotropyField,
        cfg: &AdmmConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        d.check_pattern(p)?;
        check_shape(p.shape(), anisotropy.shape())?;
        let (h, w) = p.shape();
        Ok(Self {
            op: MriOperator::new(p.clone()),
            data: d.clone(),
            scattered: sample_adjoint(p, d)?,
            counts: mask_counts(p).into_vec(),
            anisotropy: anisotropy.clone(),
            cfg: cfg.clone(),
            fgp: FgpSolver::new(h, w),
            state: AdmmState::new(h, w, cfg.rho0),
            prox_point: Image::zeros(h, w),
            scratch: ComplexImage::zeros(h, w),
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn config(&self) -> &AdmmConfig {
        &self.cfg
    }

    /// `1/2 |E v - d|^2 + alpha R(v)`.
    pub fn objective(&self, v: &Image) -> Result<f64> {
        let ev = self.op.forward(v)?;
        let misfit: f64 = ev
            .values()
            .iter()
            .zip(self.data.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok(0.5 * misfit + self.cfg.alpha * eval_regularizer(&self.anisotropy, v)?)
    }

    /// One outer iteration.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let st = &mut self.state;
        let rho = st.rho;

        // first block: prox step on v and diagonal solve for x
        for ((p, z), u) in self
            .prox_point
            .as_mut_slice()
            .iter_mut()
            .zip(st.z.as_slice())
            .zip(st.u.as_slice())
        {
            *p = z - u;
        }
        if !self.cfg.warm_start_dual {
            st.y = GradientField::zeros(st.y.height(), st.y.width());
        }
        self.fgp.run(
            self.cfg.alpha / rho,
            &self.prox_point,
            &self.anisotropy,
            Constraint::NonNegative,
            self.cfg.inner_prox_iterations,
            &mut st.y,
            &mut st.v,
            None,
        );
        x_update_into(&self.scattered, &self.counts, &st.fz, &st.b, rho, &mut st.x);

        // second block: z = 1/2 [Re F^-1(x + b) + v + u]
        for ((s, x), b) in self
            .scratch
            .as_mut_slice()
            .iter_mut()
            .zip(st.x.as_slice())
            .zip(st.b.as_slice())
        {
            *s = x + b;
        }
        self.op.fft().inverse_in_place(self.scratch.as_mut_slice());
        std::mem::swap(&mut st.z, &mut st.z_prev);
        {
            let z = st.z.as_mut_slice();
            let (s, v, u) = (self.scratch.as_slice(), st.v.as_slice(), st.u.as_slice());
            for i in 0..z.len() {
                z[i] = 0.5 * (s[i].re + v[i] + u[i]);
            }
        }
        for (f, &z) in st.fz.as_mut_slice().iter_mut().zip(st.z.as_slice()) {
            *f = Complex64::new(z, 0.0);
        }
        self.op.fft().forward_in_place(st.fz.as_mut_slice());

        // multipliers
        for ((b, x), fz) in st
            .b
            .as_mut_slice()
            .iter_mut()
            .zip(st.x.as_slice())
            .zip(st.fz.as_slice())
        {
            *b += x - fz;
        }
        for ((u, v), z) in st
            .u
            .as_mut_slice()
            .iter_mut()
            .zip(st.v.as_slice())
            .zip(st.z.as_slice())
        {
            *u += v - z;
        }
        st.iteration += 1;

        if !(st.v.is_finite() && st.z.is_finite() && st.u.is_finite()) {
            return Err(Error::NonFinite(format!(
                "ADMM iterate at iteration {}",
                st.iteration
            )));
        }

        let (primal, dual) = residuals(st);
        let record = IterationRecord {
            iteration: st.iteration,
            objective: self.objective(&self.state.v)?,
            primal_residual: primal,
            dual_residual: dual,
            rho,
        };
        if !record.objective.is_finite() {
            return Err(Error::NonFinite("objective value".into()));
        }
        self.diagnostics.records.push(record);
        Ok(record)
    }

    /// Relative residuals used for the stopping test.
    pub fn relative_residuals(&self, primal: f64, dual: f64) -> (f64, f64) {
        let st = &self.state;
        let lhs = (st.v.norm_sq() + st.x.norm_sq()).sqrt();
        let rhs = (st.z.norm_sq() + st.fz.norm_sq()).sqrt();
        let primal_scale = lhs.max(rhs);
        let dual_scale = st.rho * (st.u.norm_sq() + real_dot(st.b.as_slice(), st.b.as_slice())).sqrt();
        let rel = |r: f64, s: f64| if s > 0.0 { r / s } else if r == 0.0 { 0.0 } else { f64::INFINITY };
        (rel(primal, primal_scale), rel(dual, dual_scale))
    }

    /// True once the iteration budget is spent or the residuals converged.
    pub fn is_done(&self) -> bool {
        self.diagnostics.converged || self.state.iteration >= self.cfg.outer_iterations
    }

    /// [`step`](Self::step) followed by the stopping test and `rho` update.
    pub fn advance(&mut self) -> Result<IterationRecord> {
        let rec = self.step()?;
        if self.cfg.tolerance > 0.0 {
            let (rp, rd) = self.relative_residuals(rec.primal_residual, rec.dual_residual);
            if rp < self.cfg.tolerance && rd < self.cfg.tolerance {
                self.diagnostics.converged = true;
                return Ok(rec);
            }
        }
        if self.cfg.adapt_rho {
            rho_adapt(
                &mut self.state,
                rec.primal_residual,
                rec.dual_residual,
                self.cfg.rho_mu,
                self.cfg.rho_tau,
            );
        }
        Ok(rec)
    }

    /// Runs the remaining iterations, stopping early on convergence.
    pub fn run(mut self) -> Result<(Image, Diagnostics)> {
        while !self.is_done() {
            self.advance()?;
        }
        Ok((self.state.v, self.diagnostics))
    }
}

pub fn reconstruct(
    d: &KSpaceData,
    p: &SamplingPattern,
    anisotropy: &AnisotropyField,
    cfg: &AdmmConfig,
) -> Result<(Image, Diagnostics)> {
    AdmmSolver::new(d, p, anisotropy, cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mri::forward;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn x_update_cell_rules() {
        let p = SamplingPattern::new(2, 2, vec![1]).unwrap();
        let d = KSpaceData::new(vec![c(4.0, 2.0)]).unwrap();
        let z = Image::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = ComplexImage::from_vec(2, 2, vec![c(0.5, 0.5); 4]).unwrap();
        let fz = crate::mri::dft2(&ComplexImage::from_real(&z));

        let x = x_update(&d, &p, &z, &b, 1.0).unwrap();
        let target = |i: usize| fz.as_slice()[i] - b.as_slice()[i];
        // unsampled cells
        for i in [0, 2, 3] {
            assert!((x.as_slice()[i] - target(i)).norm() < 1e-14);
        }
        // sampled once with rho = 1
        let expected = (c(4.0, 2.0) + target(1)) / 2.0;
        assert!((x.as_slice()[1] - expected).norm() < 1e-14);

        let big = x_update(&d, &p, &z, &b, 1e12).unwrap();
        assert!((big.as_slice()[1] - target(1)).norm() < 1e-10);
    }

    #[test]
    fn residuals_vanish_at_consensus() {
        let mut st = AdmmState::new(3, 3, 1.0);
        st.z = Image::from_fn(3, 3, |r, c| (r + c) as f64);
        st.z_prev = st.z.clone();
        st.v = st.z.clone();
        st.fz = crate::mri::dft2(&ComplexImage::from_real(&st.z));
        st.x = st.fz.clone();
        assert_eq!(residuals(&st), (0.0, 0.0));
    }

    #[test]
    fn first_step_has_positive_primal_residual() {
        let p = SamplingPattern::full(8, 8);
        let gt = Image::from_fn(8, 8, |r, c| if (2..6).contains(&r) && c > 3 { 1.0 } else { 0.2 });
        let d = forward(&p, &gt).unwrap();
        let m = AnisotropyField::identity(8, 8);
        let mut solver = AdmmSolver::new(&d, &p, &m, &AdmmConfig::with_alpha(0.01)).unwrap();
        let rec = solver.step().unwrap();
        assert!(rec.primal_residual > 0.0);
    }

    #[test]
    fn rho_adaptation_rules() {
        let mut st = AdmmState::new(2, 2, 1.0);
        st.b = ComplexImage::from_vec(2, 2, vec![c(2.0, -2.0); 4]).unwrap();
        st.u = Image::filled(2, 2, 4.0);
        assert!(!rho_adapt(&mut st, 1.0, 1.0, 10.0, 2.0));
        assert_eq!(st.rho, 1.0);

        assert!(rho_adapt(&mut st, 100.0, 1.0, 10.0, 2.0));
        assert_eq!(st.rho, 2.0);
        assert_eq!(st.b.as_slice()[0], c(1.0, -1.0));
        assert_eq!(st.u.as_slice()[0], 2.0);

        assert!(rho_adapt(&mut st, 1.0, 100.0, 10.0, 2.0));
        assert_eq!(st.rho, 1.0);
        assert_eq!(st.u.as_slice()[0], 4.0);
    }

    #[test]
    fn fixed_rho_stays_constant() {
        let p = SamplingPattern::new(8, 8, (0..64).step_by(3).collect()).unwrap();
        let gt = Image::from_fn(8, 8, |r, _| r as f64 / 8.0);
        let d = forward(&p, &gt).unwrap();
        let cfg = AdmmConfig {
            adapt_rho: false,
            outer_iterations: 30,
            tolerance: 0.0,
            ..AdmmConfig::with_alpha(0.01)
        };
        let (_, diag) = reconstruct(&d, &p, &AnisotropyField::identity(8, 8), &cfg).unwrap();
        assert_eq!(diag.records.len(), 30);
        assert!(diag.records.iter().all(|r| r.rho == 1.0));
    }

    #[test]
    fn zero_data_gives_zero_image() {
        let p = SamplingPattern::new(8, 8, (0..64).step_by(2).collect()).unwrap();
        let d = KSpaceData::zeros(p.len());
        let cfg = AdmmConfig::with_alpha(10.0);
        let (v, _) = reconstruct(&d, &p, &AnisotropyField::identity(8, 8), &cfg).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn alpha_zero_full_sampling_recovers_image() {
        let p = SamplingPattern::full(16, 12);
        let gt = Image::from_fn(16, 12, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0 - 0.2);
        let d = forward(&p, &gt).unwrap();
        let cfg = AdmmConfig {
            outer_iterations: 100,
            ..AdmmConfig::with_alpha(0.0)
        };
        let (v, _) = reconstruct(&d, &p, &AnisotropyField::identity(16, 12), &cfg).unwrap();
        let expected = crate::grid::project_nonneg(&gt);
        assert!(v.distance(&expected) < 1e-6, "{}", v.distance(&expected));
        assert!(v.min() >= 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let p = SamplingPattern::full(4, 4);
        let m = AnisotropyField::identity(4, 4);
        assert!(reconstruct(&KSpaceData::zeros(3), &p, &m, &AdmmConfig::default()).is_err());
        let bad = AdmmConfig {
            rho0: 0.0,
            ..AdmmConfig::default()
        };
        assert!(reconstruct(&KSpaceData::zeros(16), &p, &m, &bad).is_err());
        let m2 = AnisotropyField::identity(4, 5);
        assert!(reconstruct(&KSpaceData::zeros(16), &p, &m2, &AdmmConfig::default()).is_err());
    }

    #[test]
    fn diagnostics_csv_layout() {
        let diag = Diagnostics {
            records: vec![IterationRecord {
                iteration: 1,
                objective: 0.5,
                primal_residual: 1.0,
                dual_residual: 0.25,
                rho: 2.0,
            }],
            converged: false,
        };
        assert_eq!(
            diag.to_csv(),
            "iteration,objective,primal_residual,dual_residual,rho\n1,0.5,1,0.25,2\n"
        );
    }
}
