//! Full-data versus coreset comparison runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{Clock, DatasetSpec, ExperimentConfig, Jl};
use super::data::{self, Dataset, EnsembleParams, ImageParams};
use super::metrics::{misclustered_percentage, ratio, write_csv, x_over_ave, MetricsRow};
use crate::coreset::{self, Coreset};
use crate::error::{Error, Result};
use crate::io;
use crate::pattern::{Instance, Prototype};
use crate::prototype::{self, SolveReport};
use crate::reduce::{self, Projection};
use crate::seed::{subseed, substream};

pub const METRICS_FILE: &str = "metrics.csv";
pub const PROTOTYPES_FILE: &str = "prototypes.jsonl";
pub const META_FILE: &str = "run.json";
pub const DATASET_FILE: &str = "dataset.jsonl";

/// Builds the dataset described by `spec`; generators draw from the
/// `dataset` substream of `seed`.
pub fn build_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    let mut rng = substream(seed, "dataset", 0);
    match *spec {
        DatasetSpec::File { ref path, ref labels } => {
            let instance = io::load_patterns(path)?;
            let labels = labels.as_deref().map(data::load_labels).transpose()?;
            Ok(Dataset { instance, labels })
        }
        DatasetSpec::Ensemble { items, k, dims, solutions, separation } => {
            let (instance, labels) =
                data::gen_ensemble(EnsembleParams { items, k, dims, solutions, separation }, &mut rng)?;
            Ok(Dataset { instance, labels: Some(labels) })
        }
        DatasetSpec::Images { count, k, side, total_weight, noise_fraction, glyph } => {
            let instance =
                data::gen_image_instance(ImageParams { count, k, side, total_weight, noise_fraction, glyph }, &mut rng)?;
            Ok(Dataset { instance, labels: None })
        }
        DatasetSpec::Pgm { ref path, k, total_weight } => {
            let images = data::load_pgm_dir(path)?;
            let patterns = images
                .iter()
                .map(|img| data::image_to_weighted_pattern(img, k, total_weight, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(Dataset { instance: Instance::new(patterns)?, labels: None })
        }
        DatasetSpec::Gaussian { n, k, d, spread, noise } => {
            let instance = data::gaussian_instance(n, k, d, spread, noise, &mut rng)?;
            Ok(Dataset { instance, labels: None })
        }
        DatasetSpec::Identical { n, items, k } => {
            let (instance, labels) = data::identical_instance(n, items, k, &mut rng)?;
            Ok(Dataset { instance, labels: Some(labels) })
        }
    }
}

/// One solved configuration (the baseline or one coreset size).
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub label: String,
    pub fraction: f64,
    /// Number of sampled patterns (`n` for the baseline).
    pub size: usize,
    pub prototype: Prototype,
    pub objective: f64,
    pub seconds: f64,
    pub solve: SolveReport,
    pub coreset: Option<Coreset>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub runs: Vec<RunRecord>,
    pub projection: Option<Projection>,
    pub fingerprint: u64,
    pub dir: PathBuf,
}

/// Nominal cost of `matchings` exact matchings of `k` points in `R^d`.
fn work_units(matchings: usize, k: usize, d: usize) -> f64 {
    let k = k as f64;
    matchings as f64 * (k * k * d as f64 + k * k * k)
}

const WORK_SECONDS: f64 = 1e-9;

struct Stopwatch {
    clock: Clock,
    start: Instant,
    work: f64,
}

impl Stopwatch {
    fn start(clock: Clock) -> Self {
        Self { clock, start: Instant::now(), work: 0.0 }
    }

    fn add(&mut self, units: f64) {
        self.work += units;
    }

    fn seconds(&self) -> f64 {
        match self.clock {
            Clock::Wall => self.start.elapsed().as_secs_f64().max(1e-9),
            Clock::Work => (self.work * WORK_SECONDS).max(1e-9),
        }
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    original: &'a Instance,
    work: &'a Instance,
    projected: bool,
}

impl Context<'_> {
    /// Solves on `inst` from a `pick_init` start and lifts if projected.
    fn solve(&self, inst: &Instance, init_stream: (&str, u64), sw: &mut Stopwatch) -> Result<(Prototype, SolveReport)> {
        let (k, dw) = (self.work.k(), self.work.d());
        let metric = self.cfg.metric;
        let mut rng = substream(self.cfg.seed, init_stream.0, init_stream.1);
        let pivot = prototype::pick_init(inst, self.cfg.trials, metric, &mut rng)?;
        sw.add(work_units(pivot.matchings, k, dw));
        let report = prototype::alternating_minimize(inst, inst.pattern(pivot.index), metric, self.cfg.solver())?;
        sw.add(work_units(report.matchings, k, dw));
        let proto = if self.projected {
            let lift = reduce::lift_solution(self.original, self.work, &report.prototype, metric)?;
            sw.add(work_units(lift.matchings, k, dw) + (self.original.n() * k * self.original.d()) as f64);
            lift.prototype
        } else {
            report.prototype.clone()
        };
        Ok((proto, report))
    }

    fn coreset_run(&self, label: &str, index: u64, r: usize) -> Result<RunRecord> {
        let cfg = self.cfg;
        let (k, dw) = (self.work.k(), self.work.d());
        let mut sw = Stopwatch::start(cfg.clock);
        let mut rng = substream(cfg.seed, "coreset-pivot", index);
        let (profile, matchings) =
            coreset::pivot_profile(self.work, cfg.trials, cfg.alpha, cfg.metric, cfg.cost_mode, &mut rng)?;
        let per = match cfg.cost_mode {
            coreset::CostMode::Exact => work_units(matchings, k, dw),
            coreset::CostMode::Approx => matchings as f64 * (k * k * dw) as f64,
        };
        sw.add(per);
        let mut rng = substream(cfg.seed, "coreset-sample", index);
        let mut cs = coreset::sample_coreset(&profile, r, &mut rng)?;
        cs.seed = Some(cfg.seed);
        let sub = cs.to_instance(self.work)?;
        let (prototype, solve) = self.solve(&sub, ("coreset-init", index), &mut sw)?;
        let seconds = sw.seconds();
        let objective = prototype::objective(self.original, &prototype, cfg.metric)?;
        Ok(RunRecord {
            label: label.to_string(),
            fraction: r as f64 / self.work.n() as f64,
            size: r,
            prototype,
            objective,
            seconds,
            solve,
            coreset: Some(cs),
        })
    }
}

#[derive(Serialize)]
struct MetaRun<'a> {
    label: &'a str,
    fraction: f64,
    size: usize,
    rounds: usize,
    converged: bool,
    empty_slots: &'a [usize],
    objective_history: &'a [f64],
}

#[derive(Serialize)]
struct MetaProjection {
    source_dim: usize,
    target_dim: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a ExperimentConfig,
    fingerprint: String,
    n: usize,
    k: usize,
    d: usize,
    total_weight: Option<u64>,
    projection: Option<MetaProjection>,
    threads: usize,
    runs: Vec<MetaRun<'a>>,
}

/// Target dimension for the configured projection, or `None` when the
/// projection would not reduce the dimension.
pub fn projection_dim(cfg: &ExperimentConfig, inst: &Instance) -> Result<Option<usize>> {
    let m = match cfg.jl {
        Jl::Off => return Ok(None),
        Jl::Auto => reduce::target_dim(inst.n(), inst.k(), inst.d(), cfg.jl_eps, cfg.jl_constant)?,
        Jl::Dim(m) if m > inst.d() => {
            return Err(Error::Config(format!("jl dimension {m} exceeds the data dimension {}", inst.d())));
        }
        Jl::Dim(m) => m,
    };
    Ok((m < inst.d()).then_some(m))
}

/// Runs the baseline and every coreset size, writes the artifacts under
/// `cfg.output` and returns the rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = cfg.clone().validated()?;
    let dataset = build_dataset(&cfg.dataset, cfg.seed)?;
    run_on_dataset(&cfg, &dataset)
}

/// Like [`run_experiment`] with an already built dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<ExperimentOutput> {
    let original = &dataset.instance;
    let metric = cfg.metric;
    if metric.is_weighted() != original.is_weighted() {
        return Err(Error::Config(format!(
            "metric {metric} needs {} patterns",
            if metric.is_weighted() { "weighted" } else { "unweighted" }
        )));
    }
    if let Some(labels) = &dataset.labels {
        if labels.len() != original.d() {
            return Err(Error::Data(format!("{} labels for d={}", labels.len(), original.d())));
        }
    }
    let fingerprint = original.fingerprint();

    let (projected, projection) = match projection_dim(cfg, original)? {
        Some(m) => {
            let (low, proj) = reduce::jl_project(original, m, subseed(cfg.seed, "jl", 0))?;
            (Some(low), Some(proj))
        }
        None => (None, None),
    };
    let work = projected.as_ref().unwrap_or(original);
    // Coresets are tied to their source by fingerprint; hash once, outside the timed stages.
    work.fingerprint();
    let ctx = Context { cfg, original, work, projected: projected.is_some() };

    let mut sw = Stopwatch::start(cfg.clock);
    let (base_proto, base_solve) = ctx.solve(work, ("baseline-init", 0), &mut sw)?;
    let base_seconds = sw.seconds();
    let base_objective = prototype::objective(original, &base_proto, metric)?;
    let mut runs = vec![RunRecord {
        label: "full".into(),
        fraction: 1.0,
        size: original.n(),
        prototype: base_proto,
        objective: base_objective,
        seconds: base_seconds,
        solve: base_solve,
        coreset: None,
    }];

    let n = original.n();
    for (fi, &f) in cfg.fractions.iter().enumerate() {
        let r = ((f * n as f64).round() as usize).max(1);
        let mut run = ctx.coreset_run("coreset", fi as u64, r)?;
        run.fraction = f;
        runs.push(run);
    }
    if let Some(eps) = cfg.eps {
        let r = match work.total_weight() {
            Some(w) => coreset::recommended_size_weighted(work.k(), work.d(), w, eps, cfg.size_constant)?,
            None => coreset::recommended_size(work.k(), work.d(), eps, cfg.size_constant)?,
        };
        runs.push(ctx.coreset_run("coreset-eps", cfg.fractions.len() as u64, r)?);
    }

    let base = &runs[0];
    let mut rows = Vec::with_capacity(runs.len());
    for run in &runs {
        let truth = match &dataset.labels {
            Some(labels) => misclustered_percentage(&run.prototype, labels)?,
            None => x_over_ave(&base.prototype, &run.prototype, original, metric)?,
        };
        rows.push(MetricsRow {
            run_label: run.label.clone(),
            fraction: run.fraction,
            objective: run.objective,
            normalized_objective: ratio(run.objective, base.objective),
            wall_time_s: run.seconds,
            normalized_time: run.seconds / base.seconds,
            ground_truth_metric: truth,
            seed: cfg.seed,
        });
    }

    let dir = cfg.output.clone();
    write_artifacts(cfg, &dir, dataset, &rows, &runs, projection.as_ref(), fingerprint)?;
    Ok(ExperimentOutput { rows, runs, projection, fingerprint, dir })
}

fn write_artifacts(
    cfg: &ExperimentConfig,
    dir: &Path,
    dataset: &Dataset,
    rows: &[MetricsRow],
    runs: &[RunRecord],
    projection: Option<&Projection>,
    fingerprint: u64,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let original = &dataset.instance;
    io::write_atomic(&dir.join(METRICS_FILE), |w| write_csv(rows, w))?;

    let protos = Instance::new(runs.iter().map(|r| r.prototype.clone()).collect())?;
    io::save_patterns(&protos, &dir.join(PROTOTYPES_FILE))?;

    let mut ci = 0;
    for run in runs {
        if let Some(cs) = &run.coreset {
            let mut cs = cs.clone();
            cs.fingerprint = fingerprint;
            io::save_coreset(&cs, &dir.join(format!("coreset-{ci:02}.jsonl")))?;
            ci += 1;
        }
    }
    if cfg.write_dataset {
        io::save_patterns(original, &dir.join(DATASET_FILE))?;
        if let Some(labels) = &dataset.labels {
            io::write_atomic(&dir.join("labels.json"), |w| Ok(serde_json::to_writer(w, labels)?))?;
        }
    }

    let meta = Meta {
        config: cfg,
        fingerprint: io::fingerprint_hex(fingerprint),
        n: original.n(),
        k: original.k(),
        d: original.d(),
        total_weight: original.total_weight(),
        projection: projection.map(|p| MetaProjection { source_dim: p.source_dim, target_dim: p.target_dim, seed: p.seed }),
        threads: rayon::current_num_threads(),
        runs: runs
            .iter()
            .map(|r| MetaRun {
                label: &r.label,
                fraction: r.fraction,
                size: r.size,
                rounds: r.solve.rounds,
                converged: r.solve.converged,
                empty_slots: &r.solve.empty_slots,
                objective_history: &r.solve.objective_history,
            })
            .collect(),
    };
    io::write_atomic(&dir.join(META_FILE), |w| Ok(serde_json::to_writer_pretty(w, &meta)?))?;
    Ok(())
}

/// Which quantity the ground-truth column holds for `dataset`.
pub fn ground_truth_kind(dataset: &Dataset) -> &'static str {
    if dataset.labels.is_some() {
        "misclustered_percent"
    } else {
        "x_over_ave"
    }
}
