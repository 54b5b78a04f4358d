//! `snacs` subcommands.
//!
//! Exit codes: 0 ok, 1 usage, 2 I/O, 3 malformed input or failed validation.
//! Settings come from an optional JSON file (`--config`) and are overridden
//! by flags. One master seed (`--seed`) feeds every random choice, and
//! outputs do not depend on `--threads`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use snacs_core::estimator::hash::derive_seed;
use snacs_core::estimator::oracle::{exact_ami_bounds_discrete, exact_cmi_discrete, JointPmf, PairPmf};
use snacs_core::planner::probe::{quality_curves, ProbeOptions, ProbeRanking};
use snacs_core::planner::TopRule;
use snacs_core::sensitivity::{compute_sensitivity, lambda_histogram};
use snacs_core::toynet::teacher_fixture;
use snacs_core::validation::{
    mse_vs_dimension, mse_vs_samples, CurvePoint, ValidationConfig, DIM_GRID, DIM_SAMPLES, EPSILON_SWEEP,
    SAMPLE_GRID,
};
use snacs_core::{
    assign_gammas, estimate_acmi, estimate_ami, prune_network, DType, EdgeRule, Matrix,
    PhiSpec, PhiVariant, PruneConfig, PrunePlan, QualityCurve, Tensor,
};

use crate::bench::{estimator_time_vs_n, runtime_vs_groups, scaling_exponent, Timing, GROUP_GRID, TIMING_SAMPLES};
use crate::bundle::{export_fixture, load_bundle, mlp_from_network, LoadedBundle};
use crate::error::{AppError, Result};
use crate::formats::{
    curves_csv, histogram_csv, parse_curves_csv, plan_json, read_json, report_csv, to_json, validation_csv,
    write_text, MaskFile,
};
use crate::npy::{read_tensor_spec, write_npy_file, write_npz_file};
use crate::parallel::RayonExecutor;
use crate::plot::{Chart, Series};

#[derive(Debug, Parser)]
#[command(name = "snacs", version, about = "Connectivity-based pruning masks for feed-forward networks")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed; every sub-seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON settings file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate ACMI(X; Y | Z), or AMI(X; Y) without --z, and print JSON.
    Estimate(EstimateArgs),
    /// Exact value for a discrete pmf; optionally draw samples from it.
    Oracle(OracleArgs),
    /// Score and prune every adjacent layer pair of a bundle.
    Prune(PruneArgs),
    /// Measure quality curves and assign per-layer limits for a total tau.
    Plan(PlanArgs),
    /// Estimator experiments on conditionally independent Gaussians.
    Validate(ValidateArgs),
    /// Filter sensitivities and their histograms.
    Sensitivity(SensitivityArgs),
    /// Write a random-teacher toy network as a bundle.
    Fixture(FixtureArgs),
}

fn parse_phi(s: &str) -> std::result::Result<PhiVariant, String> {
    PhiVariant::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = PhiVariant::ALL.iter().map(|v| v.name()).collect();
        format!("unknown phi {s:?}; expected one of {}", names.join(", "))
    })
}

/// Score threshold; `max`, `inf` and `none` mean unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta(pub Option<f64>);

fn parse_delta(s: &str) -> std::result::Result<Delta, String> {
    match s {
        "max" | "inf" | "none" => Ok(Delta(None)),
        _ => match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(Delta(Some(v))),
            _ => Err(format!("delta must be a non-negative number or max, got {s:?}")),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EdgeArg {
    Completed,
    Observed,
}

impl From<EdgeArg> for EdgeRule {
    fn from(e: EdgeArg) -> Self {
        match e {
            EdgeArg::Completed => EdgeRule::Completed,
            EdgeArg::Observed => EdgeRule::Observed,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// NPY file or `archive.npz:entry`; 1-D or samples x dims.
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub z: Option<String>,
    #[arg(long, value_parser = parse_phi, default_value = "constant_one")]
    pub phi: PhiVariant,
    /// Pair weight in [0, 1] for weight-based phi.
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub c_h: Option<u32>,
    #[arg(long, value_enum)]
    pub edges: Option<EdgeArg>,
    /// Quantize the raw values instead of standardized ones.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// JSON {"shape": [nx, ny, nz] or [nx, ny], "p": [...], "phi": [...]}.
    #[arg(long)]
    pub pmf: PathBuf,
    /// Draw this many samples into x.npy, y.npy (and z.npy) under --out.
    #[arg(long, requires = "out")]
    pub draw: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct ProbeArgs {
    /// Ranking used to build the quality curves.
    #[arg(long, value_enum)]
    pub ranking: Option<RankingArg>,
    /// Layers to probe, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',')]
    pub probe_layers: Option<Vec<usize>>,
    /// Read quality curves (layer,c,alpha) instead of measuring them.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub num_classes: Option<usize>,
    /// Fraction for the top-layer rule (range based).
    #[arg(long)]
    pub top_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankingArg {
    Acmi,
    Magnitude,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    /// Plan JSON written by `plan`.
    #[arg(long, group = "limits")]
    pub plan: Option<PathBuf>,
    /// Total limit; a plan is computed first.
    #[arg(long, group = "limits")]
    pub tau: Option<f64>,
    /// Per-layer limits, one per layer including the input.
    #[arg(long, group = "limits", value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_delta)]
    pub delta: Option<Delta>,
    #[arg(long, value_parser = parse_phi)]
    pub phi: Option<PhiVariant>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub protect: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub c_h: Option<u32>,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, requires = "manifest")]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Network depth when only --curves is given.
    #[arg(long)]
    pub n_layers: Option<usize>,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, value_parser = parse_phi)]
    pub phi: Option<PhiVariant>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    MseN,
    MseD,
    Runtime,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Also run every epsilon in {0.1, 0.25, 0.5}.
    #[arg(long)]
    pub sweep: bool,
    /// Use exp(-||act||^2 / 2) as phi.
    #[arg(long)]
    pub gauss_act: bool,
    #[arg(long)]
    pub no_svg: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, value_delimiter = ',', default_value = "20,32,32,32,32,10")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Contents of `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub prune: PruneConfig,
    pub probe: ProbeOptions,
    pub top_rule: TopRule,
    pub validation: ValidationConfig,
}

struct Context {
    seed: u64,
    exec: RayonExecutor,
    file: FileConfig,
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn emit(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)?;
    eprintln!("snacs: wrote {}", path.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let file: FileConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    let exec = RayonExecutor::new(threads).map_err(|e| AppError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let ctx = Context { seed, exec, file };
    match cli.command {
        Command::Estimate(a) => estimate(&ctx, a),
        Command::Oracle(a) => oracle(&ctx, a),
        Command::Prune(a) => prune(&ctx, a),
        Command::Plan(a) => plan(&ctx, a),
        Command::Validate(a) => validate(&ctx, a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Fixture(a) => fixture(&ctx, a),
    }
}

fn load_matrix(spec: &str) -> Result<Matrix> {
    let t = read_tensor_spec(spec)?;
    t.to_matrix().map_err(|e| AppError::format(spec, e.to_string()))
}

#[derive(Serialize)]
struct EstimateConfigOut {
    epsilon: f64,
    b_offset: f64,
    c_h: u32,
    seed: u64,
    n_buckets: u64,
    edges: EdgeRule,
    standardize: bool,
}

#[derive(Serialize)]
struct EstimateOut {
    value: f64,
    n: usize,
    config: EstimateConfigOut,
    phi: PhiSpec,
}

fn estimate(ctx: &Context, a: EstimateArgs) -> Result<()> {
    let x = load_matrix(&a.x)?;
    let y = load_matrix(&a.y)?;
    let z = a.z.as_deref().map(load_matrix).transpose()?;
    let mut phi = PhiSpec::new(a.phi);
    if let Some(w) = a.weight {
        phi = phi.with_weight(w);
    }
    let mut cfg = ctx.file.prune.estimator;
    cfg.seed = ctx.seed;
    cfg.epsilon = a.epsilon.or(cfg.epsilon);
    cfg.c_h = a.c_h.unwrap_or(cfg.c_h);
    cfg.standardize = cfg.standardize && !a.raw;
    if let Some(e) = a.edges {
        cfg.edges = e.into();
    }
    let est = match &z {
        Some(z) => estimate_acmi(&x, &y, z, &phi, &cfg)?,
        None => estimate_ami(&x, &y, &phi, &cfg)?,
    };
    let out = EstimateOut {
        value: est.value,
        n: est.n_samples,
        config: EstimateConfigOut {
            epsilon: est.config.epsilon,
            b_offset: est.config.b_offset,
            c_h: est.config.c_h,
            seed: est.config.seed,
            n_buckets: est.config.n_buckets(est.n_samples),
            edges: cfg.edges,
            standardize: cfg.standardize,
        },
        phi: est.phi,
    };
    print!("{}", to_json(&out));
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PmfFile {
    shape: Vec<usize>,
    p: Vec<f64>,
    #[serde(default)]
    phi: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct OracleOut {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
}

fn oracle(ctx: &Context, a: OracleArgs) -> Result<()> {
    let f: PmfFile = read_json(&a.pmf)?;
    let phi = f.phi.clone().unwrap_or_else(|| vec![1.0; f.p.len()]);
    let bad = |e: snacs_core::Error| AppError::format(&a.pmf, e.to_string());
    let out = match f.shape.as_slice() {
        &[nx, ny, nz] => {
            let pmf = JointPmf::new(nx, ny, nz, f.p.clone()).map_err(bad)?;
            OracleOut {
                value: exact_cmi_discrete(&pmf, &phi).map_err(bad)?,
                lower: None,
                upper: None,
            }
        }
        &[nx, ny] => {
            let pmf = PairPmf::new(nx, ny, f.p.clone()).map_err(bad)?;
            let b = exact_ami_bounds_discrete(&pmf, &phi).map_err(bad)?;
            OracleOut {
                value: b.value,
                lower: Some(b.lower),
                upper: Some(b.upper),
            }
        }
        s => return Err(AppError::format(&a.pmf, format!("shape must have 2 or 3 axes, got {s:?}"))),
    };
    print!("{}", to_json(&out));

    if let (Some(n), Some(dir)) = (a.draw, &a.out) {
        out_dir(dir)?;
        let dist = WeightedIndex::new(&f.p).map_err(|e| AppError::format(&a.pmf, e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, &[0x5A3]));
        let axes = f.shape.len();
        let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); axes];
        for _ in 0..n {
            let mut cell = dist.sample(&mut rng);
            for ax in (0..axes).rev() {
                cols[ax].push((cell % f.shape[ax]) as f64);
                cell /= f.shape[ax];
            }
        }
        for (name, col) in ["x", "y", "z"].iter().zip(cols) {
            let path = dir.join(format!("{name}.npy"));
            let t = Tensor::new(DType::F64, vec![n], col).map_err(|e| AppError::format(&path, e.to_string()))?;
            write_npy_file(&path, &t)?;
            eprintln!("snacs: wrote {}", path.display());
        }
    }
    Ok(())
}

fn probe_options(ctx: &Context, p: &ProbeArgs, phi: Option<PhiVariant>, groups: Option<usize>) -> ProbeOptions {
    let mut opts = ctx.file.probe.clone();
    opts.estimator.seed = ctx.seed;
    opts.svm.seed = derive_seed(ctx.seed, &[0x5F3]);
    if let Some(r) = p.ranking {
        opts.ranking = match r {
            RankingArg::Acmi => ProbeRanking::Acmi,
            RankingArg::Magnitude => ProbeRanking::Magnitude,
        };
    }
    if let Some(l) = &p.probe_layers {
        opts.layers = Some(l.clone());
    }
    if let Some(v) = phi {
        opts.phi = v;
    }
    if let Some(g) = groups {
        opts.groups = g;
    }
    opts
}

fn num_classes(flag: Option<usize>, bundle: Option<&LoadedBundle>) -> Result<usize> {
    if let Some(k) = flag {
        return Ok(k);
    }
    if let Some(b) = bundle {
        if let Some(k) = b.num_classes {
            return Ok(k);
        }
        if let Some(l) = b.network.labels() {
            return Ok(l.iter().max().map_or(0, |m| m + 1));
        }
    }
    Err(AppError::Usage("the class count is unknown; pass --num-classes".into()))
}

/// Curves (read or measured) and the plan for `tau`. The flag says whether
/// the curves were measured here.
fn make_plan(
    ctx: &Context,
    bundle: Option<&LoadedBundle>,
    n_layers: usize,
    tau: f64,
    p: &ProbeArgs,
    opts: &ProbeOptions,
) -> Result<(Vec<QualityCurve>, PrunePlan, bool)> {
    let (curves, measured) = match (&p.curves, bundle) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
            (parse_curves_csv(&text).map_err(|r| AppError::format(path, r))?, false)
        }
        (None, Some(b)) => {
            let labels = b
                .network
                .labels()
                .ok_or_else(|| AppError::Usage("measuring quality curves needs labels in the bundle".into()))?;
            let (spec, inputs) = mlp_from_network(&b.network)?;
            (quality_curves(&spec, &inputs, labels, opts, &ctx.exec)?, true)
        }
        (None, None) => return Err(AppError::Usage("pass --curves or a bundle to plan from".into())),
    };
    let rule = match p.top_fraction {
        Some(f) => TopRule::Range(f),
        None => ctx.file.top_rule,
    };
    let k = num_classes(p.num_classes, bundle)?;
    let plan = assign_gammas(&curves, tau, k, n_layers, rule)?;
    Ok((curves, plan, measured))
}

fn write_plan_outputs(out: &Path, curves: &[QualityCurve], plan: &PrunePlan, measured: bool) -> Result<()> {
    if measured {
        emit(&out.join("curves.csv"), &curves_csv(curves))?;
    }
    emit(&out.join("plan.json"), &plan_json(plan))
}

fn prune(ctx: &Context, a: PruneArgs) -> Result<()> {
    let loaded = load_bundle(&a.bundle.manifest, &a.bundle.bundle)?;
    let net = &loaded.network;
    out_dir(&a.out)?;
    let mut cfg = ctx.file.prune.clone();
    cfg.estimator.seed = ctx.seed;
    if let Some(d) = a.delta {
        cfg.delta = d.0;
    }
    if let Some(p) = a.phi {
        cfg.phi = p;
    }
    if let Some(g) = a.groups {
        cfg.groups = g;
    }
    if let Some(f) = a.protect {
        cfg.protect_fraction = f;
    }
    if let Some(e) = a.epsilon {
        cfg.estimator.epsilon = Some(e);
    }
    if let Some(c) = a.c_h {
        cfg.estimator.c_h = c;
    }
    if let Some(path) = &a.plan {
        let plan: PrunePlan = read_json(path)?;
        if plan.gamma.len() != net.len() {
            return Err(AppError::format(
                path,
                format!("plan has {} limits for {} layers", plan.gamma.len(), net.len()),
            ));
        }
        cfg.gamma = plan.gamma;
    } else if let Some(tau) = a.tau {
        let opts = probe_options(ctx, &a.probe, a.phi, a.groups);
        let (curves, plan, measured) = make_plan(ctx, Some(&loaded), net.len(), tau, &a.probe, &opts)?;
        write_plan_outputs(&a.out, &curves, &plan, measured)?;
        cfg.gamma = plan.gamma;
    } else if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    if cfg.gamma.is_empty() {
        return Err(AppError::Usage("give the limits with --plan, --tau or --gamma".into()));
    }
    if cfg.gamma.len() != net.len() {
        return Err(AppError::Usage(format!(
            "{} limits for {} layers (the input layer needs an entry too)",
            cfg.gamma.len(),
            net.len()
        )));
    }
    let result = prune_network(net, &cfg, &ctx.exec)?;
    emit(&a.out.join("masks.json"), &to_json(&MaskFile::from_masks(net, &result.masks)))?;
    emit(&a.out.join("report.json"), &to_json(&result.report))?;
    emit(&a.out.join("report.csv"), &report_csv(&result.report))?;
    eprintln!(
        "snacs: compression {:.4}% of {} parameters",
        result.report.totals.compression_percent, result.report.totals.params
    );
    Ok(())
}

fn plan(ctx: &Context, a: PlanArgs) -> Result<()> {
    let loaded = match (&a.bundle, &a.manifest) {
        (Some(b), Some(m)) => Some(load_bundle(m, b)?),
        _ => None,
    };
    let n_layers = match (&loaded, &a.manifest, a.n_layers) {
        (_, _, Some(n)) => n,
        (Some(b), _, None) => b.network.len(),
        (None, Some(m), None) => crate::bundle::Manifest::load(m)?.layers.len(),
        (None, None, None) => return Err(AppError::Usage("pass --n-layers or --manifest".into())),
    };
    if loaded.is_none() && a.probe.curves.is_none() {
        return Err(AppError::Usage("pass --curves or --bundle with --manifest".into()));
    }
    out_dir(&a.out)?;
    let opts = probe_options(ctx, &a.probe, a.phi, a.groups);
    let (curves, plan, measured) = make_plan(ctx, loaded.as_ref(), n_layers, a.tau, &a.probe, &opts)?;
    write_plan_outputs(&a.out, &curves, &plan, measured)?;
    print!("{}", plan_json(&plan));
    Ok(())
}

fn curve_series<'a>(label: &'a str, points: &[CurvePoint]) -> Series<'a> {
    Series {
        label,
        points: points.iter().map(|p| (p.x, p.median)).collect(),
        band: Some(points.iter().map(|p| (p.x, p.q25, p.q75)).collect()),
    }
}

fn timing_csv(header: &[&str], rows: &[(String, &Timing)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for (tag, t) in rows {
        let mut rec = vec![t.x.to_string()];
        if !tag.is_empty() {
            rec.push(tag.clone());
        }
        rec.push(t.seconds.to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn validate(ctx: &Context, a: ValidateArgs) -> Result<()> {
    out_dir(&a.out)?;
    let mut cfg = ctx.file.validation;
    cfg.seed = ctx.seed;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(e) = a.epsilon {
        cfg.epsilon = Some(e);
    }
    if a.gauss_act {
        cfg = cfg.with_gauss_act_phi();
    }
    let (stem, x_label) = match a.experiment {
        Experiment::MseN => ("mse_n", "samples N"),
        Experiment::MseD => ("mse_d", "dimension d"),
        Experiment::Runtime => return validate_runtime(ctx, &a),
    };
    let run = |c: &ValidationConfig| match a.experiment {
        Experiment::MseN => mse_vs_samples(c, &SAMPLE_GRID, &ctx.exec),
        _ => mse_vs_dimension(c, DIM_SAMPLES, &DIM_GRID, &ctx.exec),
    };
    let main = run(&cfg)?;
    emit(&a.out.join(format!("{stem}.csv")), &validation_csv(&main))?;
    let main_label = match cfg.epsilon {
        Some(e) => format!("epsilon {e}"),
        None => "default epsilon".to_string(),
    };
    let mut labelled = vec![(main_label, main)];
    if a.sweep {
        for &e in &EPSILON_SWEEP {
            let pts = run(&ValidationConfig {
                epsilon: Some(e),
                ..cfg
            })?;
            emit(&a.out.join(format!("{stem}_eps{e}.csv")), &validation_csv(&pts))?;
            labelled.push((format!("epsilon {e}"), pts));
        }
    }
    if !a.no_svg {
        let chart = Chart {
            title: "squared estimate under conditional independence",
            x_label,
            y_label: "median squared error",
            log_y: true,
            series: labelled.iter().map(|(l, p)| curve_series(l, p)).collect(),
        };
        emit(&a.out.join(format!("{stem}.svg")), &chart.render())?;
    }
    Ok(())
}

fn validate_runtime(ctx: &Context, a: &ValidateArgs) -> Result<()> {
    let by_n = estimator_time_vs_n(&TIMING_SAMPLES, 3, ctx.seed)?;
    let rows: Vec<(String, &Timing)> = by_n.iter().map(|t| (String::new(), t)).collect();
    emit(&a.out.join("runtime_n.csv"), &timing_csv(&["n", "seconds"], &rows))?;
    eprintln!("snacs: time ~ N^{:.3}", scaling_exponent(&by_n));
    let mut per_phi = BTreeMap::new();
    for phi in [PhiVariant::ConstantOne, PhiVariant::GaussWeight] {
        per_phi.insert(
            phi.name(),
            runtime_vs_groups(&GROUP_GRID, 256, 2000, phi, 1, ctx.seed, &ctx.exec)?,
        );
    }
    let rows: Vec<(String, &Timing)> = per_phi
        .iter()
        .flat_map(|(name, ts)| ts.iter().map(move |t| (name.to_string(), t)))
        .collect();
    emit(&a.out.join("runtime_groups.csv"), &timing_csv(&["groups", "phi", "seconds"], &rows))?;
    if !a.no_svg {
        let chart = Chart {
            title: "layer-pair scoring time",
            x_label: "groups G",
            y_label: "seconds",
            log_y: false,
            series: per_phi
                .iter()
                .map(|(name, ts)| Series {
                    label: name,
                    points: ts.iter().map(|t| (t.x, t.seconds)).collect(),
                    band: None,
                })
                .collect(),
        };
        emit(&a.out.join("runtime_groups.svg"), &chart.render())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SensitivityOut<'a> {
    layer: usize,
    name: &'a str,
    downstream: &'a str,
    lambda: Vec<f64>,
    skipped_rows: Vec<usize>,
}

fn sensitivity(a: SensitivityArgs) -> Result<()> {
    let loaded = load_bundle(&a.bundle.manifest, &a.bundle.bundle)?;
    let layers = loaded.network.layers();
    out_dir(&a.out)?;
    let mut all = Vec::new();
    for l in 0..layers.len().saturating_sub(1) {
        let kernel = layers[l + 1].kernel.as_ref().expect("network checks kernels");
        let s = compute_sensitivity(kernel).map_err(|e| AppError::Core(snacs_core::Error::Layer {
            layer: layers[l + 1].name.clone(),
            reason: e.to_string(),
        }))?;
        let name = layers[l].name.as_str();
        emit(
            &a.out.join(format!("lambda_{name}.csv")),
            &histogram_csv(&lambda_histogram(&s.lambda, a.bins)),
        )?;
        all.push(SensitivityOut {
            layer: l,
            name,
            downstream: &layers[l + 1].name,
            lambda: s.lambda,
            skipped_rows: s.skipped_rows,
        });
    }
    emit(&a.out.join("sensitivity.json"), &to_json(&all))
}

fn fixture(ctx: &Context, a: FixtureArgs) -> Result<()> {
    let fix = teacher_fixture(&a.sizes, a.samples, a.separation, ctx.seed)?;
    let (manifest, entries) = export_fixture(&fix);
    out_dir(&a.out)?;
    let npz = a.out.join("bundle.npz");
    write_npz_file(&npz, &entries)?;
    eprintln!("snacs: wrote {}", npz.display());
    emit(&a.out.join("manifest.json"), &manifest.to_json())
}
