//! Parameter sweeps over datasets, patterns, priors, `alpha` and `eta`.
//!
//! Every reconstruction is an independent job. Jobs run on a rayon pool but
//! results are gathered in job order, so the reports do not depend on the
//! number of threads.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sgtv::format::sig;
use sgtv::metrics::{psnr, ssim};
use sgtv::phantom::{simulate, NoiseSpec};
use sgtv::sampling::{generate, PatternSpec};
use sgtv::{make_anisotropy, EdgeParam, reconstruct, AdmmConfig, Image, KSpaceData, PriorKind, SamplingPattern};

use crate::config::{load_side, ExperimentConfig};
use crate::error::{CliError, Result};

pub const STATS_HEADER: [&str; 9] = [
    "dataset", "contrast", "prior", "pattern", "alpha", "eta", "psnr_db", "ssim", "seed",
];

/// One ground truth with its optional side image.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub dataset: String,
    pub contrast: String,
    pub ground_truth: Image,
    pub side: Option<Image>,
    pub noise_seed: u64,
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset>> {
    cfg.ground_truth
        .iter()
        .zip(&cfg.side_info)
        .enumerate()
        .map(|(i, (gt, side))| {
            let (dataset, contrast) = gt.labels();
            let ground_truth = gt.load(cfg.phantom_size)?;
            let side = side
                .as_ref()
                .map(|s| load_side(s, cfg.phantom_size, cfg.side_noise, cfg.side_seed(i)))
                .transpose()?;
            if let Some(s) = &side {
                if s.shape() != ground_truth.shape() {
                    return Err(CliError::Input(sgtv::Error::ShapeMismatch {
                        expected: ground_truth.shape(),
                        found: s.shape(),
                    }));
                }
            }
            Ok(Dataset {
                dataset,
                contrast,
                ground_truth,
                side,
                noise_seed: cfg.noise_seed(i),
            })
        })
        .collect()
}

/// Image quality of one reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quality {
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn quality(gt: &Image, recon: &Image, peak: f64) -> Result<Quality> {
    Ok(Quality {
        psnr_db: psnr(gt, recon, peak)?,
        ssim: ssim(gt, recon)?.mean,
    })
}

/// Reconstructs with one prior and parameter pair.
pub fn reconstruct_with(
    data: &KSpaceData,
    pattern: &SamplingPattern,
    prior: PriorKind,
    side: Option<&Image>,
    alpha: f64,
    eta: f64,
    admm: &AdmmConfig,
) -> Result<Image> {
    let side = if prior.uses_side_info() { side } else { None };
    let m = make_anisotropy(prior, pattern.shape(), side, EdgeParam::new(eta)?)?;
    let cfg = AdmmConfig { alpha, ..admm.clone() };
    Ok(reconstruct(data, pattern, &m, &cfg)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsRow {
    pub dataset: String,
    pub contrast: String,
    pub prior: PriorKind,
    pub pattern: String,
    pub alpha: f64,
    pub eta: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub seed: u64,
}

impl StatsRow {
    fn record(&self) -> [String; 9] {
        [
            self.dataset.clone(),
            self.contrast.clone(),
            self.prior.to_string(),
            self.pattern.clone(),
            sig(self.alpha),
            sig(self.eta),
            sig(self.psnr_db),
            sig(self.ssim),
            self.seed.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timing {
    pub dataset: String,
    pub contrast: String,
    pub prior: PriorKind,
    pub pattern: String,
    pub alpha: f64,
    pub eta: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<StatsRow>,
    pub timings: Vec<Timing>,
}

struct Job {
    case: usize,
    prior: PriorKind,
    alpha: f64,
    /// `None` for TV, whose result does not depend on `eta`.
    eta: Option<f64>,
}

struct Case {
    dataset: usize,
    pattern_label: String,
    pattern: SamplingPattern,
    data: KSpaceData,
}

/// Runs the full grid. `jobs = 0` uses all cores.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepOutput> {
    cfg.validate()?;
    let datasets = load_datasets(cfg)?;

    let mut cases = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        let (h, w) = ds.ground_truth.shape();
        for entry in &cfg.patterns {
            let pattern = generate(&PatternSpec::new(entry.scheme.clone(), h, w))?;
            let noise = NoiseSpec {
                fraction: cfg.noise_fraction,
                seed: ds.noise_seed,
            };
            let data = simulate(&ds.ground_truth, &pattern, noise)?;
            cases.push(Case {
                dataset: di,
                pattern_label: entry.label.clone(),
                pattern,
                data,
            });
        }
    }

    let mut work = Vec::new();
    for (ci, case) in cases.iter().enumerate() {
        for &prior in &cfg.priors {
            if prior.uses_side_info() && datasets[case.dataset].side.is_none() {
                return Err(CliError::usage(format!(
                    "prior {prior} needs side_info for {}/{}",
                    datasets[case.dataset].dataset, datasets[case.dataset].contrast
                )));
            }
            for &alpha in &cfg.alphas {
                if prior.uses_side_info() {
                    work.extend(cfg.etas.iter().map(|&eta| Job { case: ci, prior, alpha, eta: Some(eta) }));
                } else {
                    work.push(Job { case: ci, prior, alpha, eta: None });
                }
            }
        }
    }

    let run = |job: &Job| -> Result<(Quality, f64)> {
        let case = &cases[job.case];
        let ds = &datasets[case.dataset];
        let start = Instant::now();
        let eta = job.eta.unwrap_or(1.0);
        let recon = reconstruct_with(
            &case.data,
            &case.pattern,
            job.prior,
            ds.side.as_ref(),
            job.alpha,
            eta,
            &cfg.admm,
        )?;
        let q = quality(&ds.ground_truth, &recon, cfg.peak)?;
        Ok((q, start.elapsed().as_secs_f64()))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot build thread pool: {e}")))?;
    let results: Vec<(Quality, f64)> =
        pool.install(|| work.par_iter().map(run).collect::<Result<Vec<_>>>())?;

    let mut out = SweepOutput::default();
    for (job, (q, secs)) in work.iter().zip(results) {
        let case = &cases[job.case];
        let ds = &datasets[case.dataset];
        let row = |eta: f64| StatsRow {
            dataset: ds.dataset.clone(),
            contrast: ds.contrast.clone(),
            prior: job.prior,
            pattern: case.pattern_label.clone(),
            alpha: job.alpha,
            eta,
            psnr_db: q.psnr_db,
            ssim: q.ssim,
            seed: ds.noise_seed,
        };
        match job.eta {
            Some(eta) => out.rows.push(row(eta)),
            None => out.rows.extend(cfg.etas.iter().map(|&eta| row(eta))),
        }
        out.timings.push(Timing {
            dataset: ds.dataset.clone(),
            contrast: ds.contrast.clone(),
            prior: job.prior,
            pattern: case.pattern_label.clone(),
            alpha: job.alpha,
            eta: job.eta,
            wall_time_s: secs,
        });
    }
    sort_rows(&mut out.rows);
    Ok(out)
}

/// Sorts by dataset, contrast, pattern, prior, alpha, eta.
pub fn sort_rows(rows: &mut [StatsRow]) {
    rows.sort_by(|a, b| {
        (&a.dataset, &a.contrast, &a.pattern, a.prior)
            .cmp(&(&b.dataset, &b.contrast, &b.pattern, b.prior))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.eta.total_cmp(&b.eta))
    });
}

/// Best row per (dataset, contrast, pattern, prior) by SSIM; ties keep the
/// earliest row in sorted order.
pub fn best_rows(rows: &[StatsRow]) -> Vec<StatsRow> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut best: Vec<StatsRow> = Vec::new();
    for r in sorted {
        match best.last_mut() {
            Some(b)
                if (&b.dataset, &b.contrast, &b.pattern, b.prior)
                    == (&r.dataset, &r.contrast, &r.pattern, r.prior) =>
            {
                if r.ssim > b.ssim {
                    *b = r;
                }
            }
            _ => best.push(r),
        }
    }
    best
}

pub fn write_stats(path: &Path, rows: &[StatsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(STATS_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats(path: &Path) -> Result<Vec<StatsRow>> {
    let bad = |m: String| CliError::data(path, sgtv::Error::Format { what: "stats table", reason: m });
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(STATS_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| f(i).parse::<f64>().map_err(|_| bad(format!("bad number '{}'", f(i))));
        rows.push(StatsRow {
            dataset: f(0).into(),
            contrast: f(1).into(),
            prior: f(2).parse().map_err(|_| bad(format!("bad prior '{}'", f(2))))?,
            pattern: f(3).into(),
            alpha: num(4)?,
            eta: num(5)?,
            psnr_db: num(6)?,
            ssim: num(7)?,
            seed: f(8).parse().map_err(|_| bad(format!("bad seed '{}'", f(8))))?,
        });
    }
    Ok(rows)
}

pub fn write_timings(path: &Path, timings: &[Timing]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "contrast", "prior", "pattern", "alpha", "eta", "wall_time_s"])?;
    for t in timings {
        w.write_record([
            t.dataset.clone(),
            t.contrast.clone(),
            t.prior.to_string(),
            t.pattern.clone(),
            sig(t.alpha),
            t.eta.map(sig).unwrap_or_default(),
            format!("{:.6}", t.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table of the best rows.
pub fn report(best: &[StatsRow]) -> String {
    let mut s = format!(
        "{:<12} {:<8} {:<26} {:<5} {:>10} {:>10} {:>9} {:>8}\n",
        "dataset", "contrast", "pattern", "prior", "alpha", "eta", "psnr_db", "ssim"
    );
    for r in best {
        s.push_str(&format!(
            "{:<12} {:<8} {:<26} {:<5} {:>10.3e} {:>10.3e} {:>9.3} {:>8.4}\n",
            r.dataset, r.contrast, r.pattern, r.prior.as_str(), r.alpha, r.eta, r.psnr_db, r.ssim
        ));
    }
    s
}
