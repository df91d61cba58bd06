use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use protoset::coreset::{self, CostMode};
use protoset::harness::config::{Clock, DatasetSpec, ExperimentConfig, Jl};
use protoset::harness::{experiment, metrics, suites};
use protoset::parallel::{threads_from_env, with_threads};
use protoset::prototype::{self, SolverConfig};
use protoset::seed::{subseed, substream};
use protoset::{io, reduce, Error, Instance, Metric, Result};

#[derive(Parser)]
#[command(name = "protoset", version, about = "Geometric prototypes, coresets and experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// sq | l1 | emd1 | emd2
    #[arg(long, global = true)]
    metric: Option<Metric>,
    /// Coreset size as a share of the patterns.
    #[arg(long, global = true)]
    fraction: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// exact | approx
    #[arg(long, global = true)]
    cost_mode: Option<CostMode>,
    /// Target dimension, `auto` or `off`.
    #[arg(long, global = true)]
    jl: Option<Jl>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset as a pattern file.
    Gen(GenArgs),
    /// Build a sensitivity profile and sample a coreset.
    Coreset(InputArgs),
    /// Compute a prototype, optionally on a coreset.
    Solve(SolveArgs),
    /// Randomly project a pattern file.
    Project(InputArgs),
    /// Run a full-versus-coreset experiment.
    Eval(EvalArgs),
    /// Run the randomized self-check suites.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenArgs {
    /// ensemble | images | gaussian | identical (ignored with --config)
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 500)]
    items: usize,
    #[arg(long, default_value_t = 5)]
    dims: usize,
    #[arg(long, default_value_t = 28)]
    side: usize,
    #[arg(long, default_value_t = 1000)]
    total_weight: u64,
    #[arg(long, default_value_t = 0.1)]
    noise_fraction: f64,
    #[arg(long, default_value_t = 0)]
    glyph: usize,
}

#[derive(Args)]
struct InputArgs {
    /// Pattern file.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Coreset sidecar to solve on instead of the full input.
    #[arg(long)]
    coreset: Option<PathBuf>,
    #[arg(long, default_value_t = prototype::DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,
    #[arg(long, default_value_t = prototype::DEFAULT_REL_TOL)]
    rel_tol: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// wall | work
    #[arg(long)]
    clock: Option<Clock>,
}

#[derive(Args)]
struct ValidateArgs {
    /// all | oracle | inequalities | estimator
    #[arg(long, default_value = "all")]
    suite: String,
    /// Cases per suite (defaults: 500 pairs, 10000 triples, 100000 draws).
    #[arg(long)]
    count: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|threads| with_threads(threads, || run(cli))).and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Gen(a) => gen(c, a),
        Command::Coreset(a) => build_coreset(c, &a.input),
        Command::Solve(a) => solve(c, a),
        Command::Project(a) => project(c, &a.input),
        Command::Eval(a) => eval(c, a),
        Command::Validate(a) => validate(c, a),
    }
}

fn required_out(c: &Common) -> Result<&Path> {
    c.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
}

fn default_metric(inst: &Instance, c: &Common) -> Metric {
    c.metric.unwrap_or(if inst.is_weighted() { Metric::Emd2 } else { Metric::SquaredL2 })
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn gen(c: &Common, a: &GenArgs) -> Result<()> {
    let (spec, seed) = match &c.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            (cfg.dataset, c.seed.unwrap_or(cfg.seed))
        }
        None => {
            let spec = match a.kind.as_str() {
                "ensemble" => DatasetSpec::Ensemble {
                    items: a.items,
                    k: a.k,
                    dims: a.dims,
                    solutions: a.n,
                    separation: protoset::harness::data::DEFAULT_SEPARATION,
                },
                "images" => DatasetSpec::Images {
                    count: a.n,
                    k: a.k,
                    side: a.side,
                    total_weight: a.total_weight,
                    noise_fraction: a.noise_fraction,
                    glyph: a.glyph,
                },
                "gaussian" => DatasetSpec::Gaussian { n: a.n, k: a.k, d: a.d, spread: 10.0, noise: 1.0 },
                "identical" => DatasetSpec::Identical { n: a.n, items: a.items, k: a.k },
                other => return Err(Error::Config(format!("unknown dataset kind `{other}`"))),
            };
            (spec, c.seed.unwrap_or(0))
        }
    };
    let out = required_out(c)?;
    let ds = experiment::build_dataset(&spec, seed)?;
    io::save_patterns(&ds.instance, out)?;
    if let Some(labels) = &ds.labels {
        io::write_atomic(&sidecar(out, ".labels.json"), |w| Ok(serde_json::to_writer(w, labels)?))?;
    }
    let inst = &ds.instance;
    println!(
        "n={} k={} d={} W={} fingerprint={}",
        inst.n(),
        inst.k(),
        inst.d(),
        inst.total_weight().map_or("-".into(), |w| w.to_string()),
        io::fingerprint_hex(inst.fingerprint())
    );
    Ok(())
}

fn build_coreset(c: &Common, input: &Path) -> Result<()> {
    let inst = io::load_patterns(input)?;
    let metric = default_metric(&inst, c);
    let seed = c.seed.unwrap_or(0);
    let n = inst.n();
    let r = match (c.fraction, c.eps) {
        (Some(f), _) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("--fraction must lie in (0, 1], got {f}")));
            }
            ((f * n as f64).round() as usize).max(1)
        }
        (None, Some(eps)) => match inst.total_weight() {
            Some(w) => coreset::recommended_size_weighted(inst.k(), inst.d(), w, eps, coreset::DEFAULT_SIZE_CONSTANT)?,
            None => coreset::recommended_size(inst.k(), inst.d(), eps, coreset::DEFAULT_SIZE_CONSTANT)?,
        },
        (None, None) => ((0.1 * n as f64).round() as usize).max(1),
    };
    let (profile, _) = coreset::pivot_profile(
        &inst,
        c.trials.unwrap_or(coreset::DEFAULT_TRIALS),
        c.alpha.unwrap_or(coreset::DEFAULT_ALPHA),
        metric,
        c.cost_mode.unwrap_or_default(),
        &mut substream(seed, "coreset-pivot", 0),
    )?;
    let mut cs = coreset::sample_coreset(&profile, r, &mut substream(seed, "coreset-sample", 0))?;
    cs.seed = Some(seed);
    io::save_coreset(&cs, required_out(c)?)?;
    println!(
        "r={} T={} pivot={} delta_tilde={} degenerate={} fingerprint={}",
        cs.r,
        cs.t_sum,
        cs.pivot,
        cs.delta_tilde,
        profile.degenerate,
        io::fingerprint_hex(cs.fingerprint)
    );
    Ok(())
}

fn solve(c: &Common, a: &SolveArgs) -> Result<()> {
    let inst = io::load_patterns(&a.input)?;
    let metric = default_metric(&inst, c);
    let seed = c.seed.unwrap_or(0);
    let cfg = SolverConfig { max_rounds: a.max_rounds, rel_tol: a.rel_tol };

    let projection = match c.jl.unwrap_or_default() {
        Jl::Off => None,
        Jl::Auto => {
            let m = reduce::target_dim(inst.n(), inst.k(), inst.d(), c.eps.unwrap_or(0.3), reduce::DEFAULT_JL_CONSTANT)?;
            (m < inst.d()).then_some(m)
        }
        Jl::Dim(m) => Some(m),
    };
    let low = match projection {
        Some(m) => {
            reduce::check_projectable(metric)?;
            Some(reduce::jl_project(&inst, m, subseed(seed, "jl", 0))?.0)
        }
        None => None,
    };
    let work = low.as_ref().unwrap_or(&inst);
    let target = match &a.coreset {
        Some(path) => {
            let mut cs = io::load_coreset(path)?;
            cs.check_source(&inst)?;
            cs.fingerprint = work.fingerprint();
            cs.to_instance(work)?
        }
        None => work.clone(),
    };
    let pivot = prototype::pick_init(
        &target,
        c.trials.unwrap_or(coreset::DEFAULT_TRIALS),
        metric,
        &mut substream(seed, "solve-init", 0),
    )?;
    let report = prototype::alternating_minimize(&target, target.pattern(pivot.index), metric, cfg)?;
    let q = match &low {
        Some(low) => reduce::lift_solution(&inst, low, &report.prototype, metric)?.prototype,
        None => report.prototype.clone(),
    };
    let objective = prototype::objective(&inst, &q, metric)?;
    if let Some(out) = &c.out {
        io::save_patterns(&Instance::new(vec![q])?, out)?;
    }
    println!("objective={objective} rounds={} converged={}", report.rounds, report.converged);
    Ok(())
}

fn project(c: &Common, input: &Path) -> Result<()> {
    let inst = io::load_patterns(input)?;
    if let Some(m) = c.metric {
        reduce::check_projectable(m)?;
    }
    let eps = c.eps.unwrap_or(0.3);
    let m = match c.jl.unwrap_or(Jl::Auto) {
        Jl::Off => return Err(Error::Config("`project` needs --jl auto or a dimension".into())),
        Jl::Auto => reduce::target_dim(inst.n(), inst.k(), inst.d(), eps, reduce::DEFAULT_JL_CONSTANT)?,
        Jl::Dim(m) => m,
    };
    let seed = subseed(c.seed.unwrap_or(0), "jl", 0);
    let (low, proj) = reduce::jl_project(&inst, m, seed)?;
    let out = required_out(c)?;
    io::save_patterns(&low, out)?;
    let meta = serde_json::json!({
        "source_dim": proj.source_dim,
        "target_dim": proj.target_dim,
        "seed": proj.seed,
        "source_fingerprint": io::fingerprint_hex(inst.fingerprint()),
    });
    io::write_atomic(&sidecar(out, ".projection.json"), |w| Ok(serde_json::to_writer(w, &meta)?))?;
    println!("source_dim={} target_dim={} seed={}", proj.source_dim, proj.target_dim, proj.seed);
    Ok(())
}

fn eval(c: &Common, a: &EvalArgs) -> Result<()> {
    let path = c.config.as_deref().ok_or_else(|| Error::Config("`eval` needs --config".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(m) = c.metric {
        cfg.metric = m;
    }
    if let Some(f) = c.fraction {
        cfg.fractions = vec![f];
    }
    if let Some(e) = c.eps {
        cfg.eps = Some(e);
    }
    if let Some(al) = c.alpha {
        cfg.alpha = al;
    }
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(m) = c.cost_mode {
        cfg.cost_mode = m;
    }
    if let Some(j) = c.jl {
        cfg.jl = j;
    }
    if let Some(o) = &c.out {
        cfg.output = o.clone();
    }
    if let Some(clock) = a.clock {
        cfg.clock = clock;
    }
    let out = experiment::run_experiment(&cfg)?;
    metrics::write_csv(&out.rows, std::io::stdout().lock())?;
    Ok(())
}

fn validate(c: &Common, a: &ValidateArgs) -> Result<()> {
    let seed = c.seed.unwrap_or(0);
    let want = |name: &str| a.suite == "all" || a.suite == name;
    if !["all", "oracle", "inequalities", "estimator"].contains(&a.suite.as_str()) {
        return Err(Error::Config(format!("unknown suite `{}`", a.suite)));
    }
    let mut failed = Vec::new();
    let mut report = |r: suites::SuiteReport| -> Result<()> {
        println!("{}", serde_json::to_string(&r)?);
        if !r.passed() {
            failed.push(r.name);
        }
        Ok(())
    };
    if want("oracle") {
        report(suites::oracle_suite(a.count.unwrap_or(500), seed)?)?;
    }
    if want("inequalities") {
        report(suites::inequality_suite(a.count.unwrap_or(10_000), seed)?)?;
    }
    if want("estimator") {
        let est = suites::estimator_suite(a.count.unwrap_or(100_000), seed)?;
        println!("{}", serde_json::to_string(&est)?);
        if !est.passed() {
            failed.push("estimator");
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("suites with violations: {}", failed.join(", "))))
    }
}
