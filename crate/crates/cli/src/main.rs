use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgfmax_core::bench::{self, CostModel, ExperimentConfig, Method, ReportFormat};
use mgfmax_core::error_analysis::{self, McMode};
use mgfmax_core::he_softmax::SoftmaxReport;
use mgfmax_core::mgf_core::Family;
use mgfmax_core::poly_approx::{self, ExpApproxSpec};
use mgfmax_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

#[derive(Parser)]
#[command(name = "mgfmax", version, about = "MGF-softmax under a simulated homomorphic backend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one softmax pipeline and report counters, cost and accuracy.
    SoftmaxEval(EvalArgs),
    /// Depth / multiplication / rotation / bootstrap counts across k.
    DepthTable(DepthArgs),
    /// Analytic vs Monte-Carlo deviation probabilities.
    ErrorSweep(SweepArgs),
    /// Estimated runtime from operation counts and unit times.
    CostEstimate(CostArgs),
    /// Proposed vs baseline on the same input.
    Compare(CompareArgs),
}

/// Flags overriding fields of the experiment config.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON experiment config (falls back to $MGFMAX_CONFIG).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Inputs are drawn from [-M, 0].
    #[arg(long = "input-max")]
    input_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    family: Option<Family>,
    /// Domain-scaling exponent of the exp approximation (MGF) or number of
    /// normalize-and-square rounds (baseline).
    #[arg(long)]
    k: Option<u32>,
    /// chebyshev, limit or taylor.
    #[arg(long)]
    variant: Option<String>,
    /// Polynomial degree for chebyshev / taylor.
    #[arg(long, default_value_t = 15)]
    degree: usize,
    /// Named k preset, e.g. vit-base-chebyshev.
    #[arg(long)]
    preset: Option<String>,
    /// Goldschmidt iterations for the baseline.
    #[arg(long = "gs-iters")]
    gs_iters: Option<u32>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::resolve(self.config.as_deref())?;
        if let Some(v) = self.rows {
            cfg.rows = v;
        }
        if let Some(v) = self.cols {
            cfg.cols = v;
        }
        if let Some(v) = self.input_max {
            cfg.input_max = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.slots {
            cfg.he.slot_count = v;
        }
        if let Some(v) = self.levels {
            cfg.he.max_level = v;
        }
        if let Some(v) = self.family {
            cfg.family = v;
        }
        if let Some(name) = &self.preset {
            cfg.exp_spec = Some(
                poly_approx::preset(name).ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?,
            );
        }
        if self.variant.is_some() || (self.k.is_some() && self.preset.is_none()) {
            let k = self
                .k
                .unwrap_or_else(|| cfg.exp_spec_or_default().k().max(1));
            cfg.exp_spec = Some(match self.variant.as_deref().unwrap_or("chebyshev") {
                "chebyshev" => ExpApproxSpec::chebyshev(self.degree, k),
                "limit" => ExpApproxSpec::Limit { k },
                "taylor" => ExpApproxSpec::Taylor {
                    degree: self.degree,
                    x0: -4.0,
                },
                other => return Err(Error::Config(format!("unknown variant '{other}'"))),
            });
        }
        let mut base = cfg.baseline_or_default();
        if let Some(k) = self.k {
            base.k = k;
        }
        if self.gs_iters.is_some() {
            base.gs_iters = self.gs_iters;
        }
        cfg.baseline = Some(base);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// mgf or baseline.
    #[arg(long)]
    method: Option<Method>,
    /// Headerless CSV matrix to use instead of a random one.
    #[arg(long = "input-csv")]
    input_csv: Option<PathBuf>,
    /// JSON report path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-row error CSV path.
    #[arg(long = "errors-csv")]
    errors_csv: Option<PathBuf>,
}

#[derive(Args)]
struct DepthArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    ks: Vec<u32>,
    #[arg(long = "table-variant", default_value = "chebyshev")]
    table_variant: String,
    /// json, csv or markdown.
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    deltas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
    ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Compare against true (default) or estimated M_X(1).
    #[arg(long, default_value = "true")]
    mode: String,
    /// CSV output path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// JSON softmax report; its counts replace the count flags.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    add: u64,
    #[arg(long, default_value_t = 0)]
    pmult: u64,
    #[arg(long, default_value_t = 0)]
    cmult: u64,
    #[arg(long, default_value_t = 0)]
    rot: u64,
    #[arg(long, default_value_t = 0)]
    boot: u64,
    #[arg(long = "t-add")]
    t_add: Option<f64>,
    #[arg(long = "t-pmult")]
    t_pmult: Option<f64>,
    #[arg(long = "t-cmult")]
    t_cmult: Option<f64>,
    #[arg(long = "t-rot")]
    t_rot: Option<f64>,
    #[arg(long = "t-boot")]
    t_boot: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn softmax_eval(args: EvalArgs) -> Result<(), Error> {
    let mut cfg = args.cfg.resolve()?;
    if let Some(m) = args.method {
        cfg.method = m;
    }
    let result = match &args.input_csv {
        Some(p) => {
            let input = bench::read_matrix_csv(p)?;
            cfg.rows = input.len();
            cfg.cols = input[0].len();
            bench::run_on(&cfg, &input)?
        }
        None => bench::run_experiment(&cfg)?,
    };
    let mut paths = cfg.output.clone();
    if args.out.is_some() {
        paths.report = args.out.clone();
    }
    if args.errors_csv.is_some() {
        paths.errors_csv = args.errors_csv.clone();
    }
    bench::write_outputs(&result, &paths)?;
    if paths.report.is_none() {
        print!("{}", bench::render_report(std::slice::from_ref(&result), ReportFormat::Json)?);
    }
    Ok(())
}

fn depth_table(args: DepthArgs) -> Result<(), Error> {
    let cfg = args.cfg.resolve()?;
    let reports = bench::depth_table(&cfg, &args.ks, &args.table_variant)?;
    let text = match args.format {
        ReportFormat::Json => serde_json::to_string_pretty(&reports)? + "\n",
        ReportFormat::Csv => {
            let mut s = String::from("variant,k,depth,expected_depth,cmult_per_stream,rot,boot,boot_per_stream\n");
            for r in &reports {
                s += &format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.variant,
                    r.k,
                    r.depth,
                    expected(r),
                    r.cmult_per_stream,
                    r.rot,
                    r.boot,
                    r.boot_per_stream
                );
            }
            s
        }
        ReportFormat::Markdown => {
            let mut s = String::from(
                "| Variant | k | Depth | Expected depth | CMult / stream | Rot | Boot | Boot / stream |\n|---|---|---|---|---|---|---|---|\n",
            );
            for r in &reports {
                s += &format!(
                    "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
                    r.variant,
                    r.k,
                    r.depth,
                    expected(r),
                    r.cmult_per_stream,
                    r.rot,
                    r.boot,
                    r.boot_per_stream
                );
            }
            s
        }
    };
    emit(&text, args.out.as_deref())
}

fn expected(r: &SoftmaxReport) -> u32 {
    r.spec.as_ref().map_or(0, mgfmax_core::he_softmax::expected_depth)
}

fn error_sweep(args: SweepArgs) -> Result<(), Error> {
    let mode = match args.mode.as_str() {
        "true" => McMode::True,
        "estimated" => McMode::Estimated,
        other => return Err(Error::Config(format!("unknown mode '{other}'"))),
    };
    if args.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let rows = error_analysis::sweep(&args.deltas, &args.ns, &args.sigmas, args.trials, args.seed, mode)?;
    let mut buf = Vec::new();
    error_analysis::write_sweep_csv(&rows, &mut buf)?;
    emit(&String::from_utf8_lossy(&buf), args.out.as_deref())
}

fn cost_estimate(args: CostArgs) -> Result<(), Error> {
    let mut report = match &args.report {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            // accept a bare report, an experiment result, or a list of results
            let v = match v {
                serde_json::Value::Array(mut a) if !a.is_empty() => a.swap_remove(0),
                other => other,
            };
            let v = v.get("report").cloned().unwrap_or(v);
            serde_json::from_value::<SoftmaxReport>(v).map_err(|e| Error::Config(e.to_string()))?
        }
        None => SoftmaxReport {
            method: "manual".into(),
            variant: String::new(),
            k: 0,
            depth: 0,
            add: args.add,
            pmult: args.pmult,
            cmult: args.cmult,
            rot: args.rot,
            boot: args.boot,
            streams: 1,
            cmult_per_stream: args.cmult,
            boot_per_stream: args.boot,
            spec: None,
        },
    };
    report.spec = None;
    let d = CostModel::default();
    let cost = CostModel {
        t_add: args.t_add.unwrap_or(d.t_add),
        t_pmult: args.t_pmult.unwrap_or(d.t_pmult),
        t_cmult: args.t_cmult.unwrap_or(d.t_cmult),
        t_rot: args.t_rot.unwrap_or(d.t_rot),
        t_boot: args.t_boot.unwrap_or(d.t_boot),
    };
    cost.validate()?;
    let breakdown = bench::estimate_cost(&report, &cost);
    println!("{}", serde_json::to_string_pretty(&breakdown)?);
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), Error> {
    let cfg = args.cfg.resolve()?;
    let cmp = bench::compare(&cfg)?;
    let mut text = bench::render_report(&[cmp.proposed.clone(), cmp.baseline.clone()], args.format)?;
    if args.format == ReportFormat::Markdown {
        text += &format!("\nEstimated speedup: {:.2}x\n", cmp.speedup);
    }
    emit(&text, args.out.as_deref())
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidParams(_) | Error::Interval { .. } | Error::Json(_)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::SoftmaxEval(a) => softmax_eval(a),
        Command::DepthTable(a) => depth_table(a),
        Command::ErrorSweep(a) => error_sweep(a),
        Command::CostEstimate(a) => cost_estimate(a),
        Command::Compare(a) => compare(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_config_error(&e) { EXIT_CONFIG } else { EXIT_PIPELINE })
        }
    }
}
