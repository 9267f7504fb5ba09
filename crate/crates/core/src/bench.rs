//! Experiment driver: configuration, seeded inputs, cost model and report
//! rendering shared by the command-line tool and the acceptance tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baseline::{self, BaselineSpec};
use crate::error::{Error, Result};
use crate::he_sim::{Engine, HeParams};
use crate::he_softmax::{self, HeSoftmaxOptions, SoftmaxReport};
use crate::mgf_core::{self, Family};
use crate::poly_approx::ExpApproxSpec;

/// Environment variable consulted when no config path is given.
pub const CONFIG_ENV: &str = "MGFMAX_CONFIG";

/// Seconds per homomorphic operation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub t_add: f64,
    pub t_pmult: f64,
    pub t_cmult: f64,
    pub t_rot: f64,
    pub t_boot: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            t_add: 1.4e-3,
            t_pmult: 2.1e-3,
            t_cmult: 8.9e-2,
            t_rot: 5.9e-2,
            t_boot: 14.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.t_add, self.t_pmult, self.t_cmult, self.t_rot, self.t_boot];
        if all.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Config("unit op times must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Per-operation estimated seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub add: f64,
    pub pmult: f64,
    pub cmult: f64,
    pub rot: f64,
    pub boot: f64,
    pub total: f64,
}

/// `Σ count × unit time`, per operation and in total.
pub fn estimate_cost(report: &SoftmaxReport, cost: &CostModel) -> CostBreakdown {
    let add = report.add as f64 * cost.t_add;
    let pmult = report.pmult as f64 * cost.t_pmult;
    let cmult = report.cmult as f64 * cost.t_cmult;
    let rot = report.rot as f64 * cost.t_rot;
    let boot = report.boot as f64 * cost.t_boot;
    CostBreakdown {
        add,
        pmult,
        cmult,
        rot,
        boot,
        total: add + pmult + cmult + rot + boot,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mgf,
    Baseline,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mgf" | "proposed" => Ok(Self::Mgf),
            "baseline" => Ok(Self::Baseline),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Distribution of the random test matrix entries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputDist {
    /// Uniform over `[−M, 0]`.
    #[default]
    Uniform,
    /// Per row, one of `components` Gaussians with means uniform in
    /// `[−M, 0]` and the given spread; samples are clamped to `[−M, 0]`.
    GaussianMixture { components: usize, sigma: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON report.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Per-row error CSV.
    #[serde(default)]
    pub errors_csv: Option<PathBuf>,
}

fn default_rows() -> usize {
    256
}
fn default_m() -> f64 {
    128.0
}

/// Everything one run needs. Missing fields fall back to the 256×256,
/// `[−128, 0]`, `s = 2^15`, `L = 10` setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub he: HeParams,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_rows")]
    pub cols: usize,
    /// Inputs are drawn from `[−input_max, 0]`.
    #[serde(default = "default_m")]
    pub input_max: f64,
    #[serde(default)]
    pub method: Method,
    /// Exponential approximation for the MGF pipeline. Defaults to
    /// Chebyshev degree 15 on `[−8, 0]` with the smallest `k` covering the
    /// input range.
    #[serde(default)]
    pub exp_spec: Option<ExpApproxSpec>,
    /// Baseline settings. Defaults to `k = ⌈log2 M − log2 ln n⌉`.
    #[serde(default)]
    pub baseline: Option<BaselineSpec>,
    #[serde(default)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: InputDist,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config uses defaults")
    }
}

/// Smallest `k` with `M / 2^k ≤ 8`, i.e. the scaled input of the MGF
/// exponent fits the `[−8, 0]` fit interval.
pub fn k_for_range(m: f64) -> u32 {
    (m / 8.0).log2().ceil().max(0.0) as u32
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Explicit path, else `$MGFMAX_CONFIG`, else defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("matrix dimensions must be positive".into()));
        }
        if !(self.input_max > 0.0) || !self.input_max.is_finite() {
            return Err(Error::Config(format!("input_max {} must be positive", self.input_max)));
        }
        if let InputDist::GaussianMixture { components, sigma } = self.input {
            if components == 0 || !(sigma >= 0.0) {
                return Err(Error::Config("gaussian mixture needs components >= 1 and sigma >= 0".into()));
            }
        }
        self.he.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.cost.validate()?;
        if let Some(s) = &self.exp_spec {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(b) = &self.baseline {
            b.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn exp_spec_or_default(&self) -> ExpApproxSpec {
        self.exp_spec
            .clone()
            .unwrap_or_else(|| ExpApproxSpec::chebyshev(15, k_for_range(self.input_max)))
    }

    pub fn baseline_or_default(&self) -> BaselineSpec {
        self.baseline
            .clone()
            .unwrap_or_else(|| BaselineSpec::new(BaselineSpec::k_for_range(self.input_max, self.cols)))
    }
}

/// Seeded test matrix for `cfg`.
pub fn generate_matrix(cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.input_max;
    match cfg.input {
        InputDist::Uniform => Ok((0..cfg.rows)
            .map(|_| (0..cfg.cols).map(|_| -rng.random_range(0.0..=m)).collect())
            .collect()),
        InputDist::GaussianMixture { components, sigma } => {
            let means: Vec<f64> = (0..components).map(|_| -rng.random_range(0.0..=m)).collect();
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
            Ok((0..cfg.rows)
                .map(|_| {
                    let mu = means[rng.random_range(0..components)];
                    (0..cfg.cols)
                        .map(|_| (mu + noise.sample(&mut rng)).clamp(-m, 0.0))
                        .collect()
                })
                .collect())
        }
    }
}

/// Reads a headerless numeric CSV, one matrix row per line.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Config(format!("bad number '{f}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{} holds no rows", path.display())));
    }
    Ok(rows)
}

pub fn write_matrix_csv(path: &Path, a: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in a {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-row max-abs deviation of the decrypted output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub row: usize,
    pub vs_softmax: f64,
    pub vs_mgf_plain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub max_vs_softmax: f64,
    pub mean_vs_softmax: f64,
    pub max_vs_mgf_plain: f64,
    pub mean_vs_mgf_plain: f64,
    /// Largest `|Σ_j out[i, j] − 1|` over rows.
    pub max_row_sum_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: Method,
    pub rows: usize,
    pub cols: usize,
    pub input_max: f64,
    pub seed: u64,
    pub slot_count: usize,
    pub max_level: u32,
    pub report: SoftmaxReport,
    pub cost: CostBreakdown,
    pub accuracy: AccuracySummary,
    #[serde(skip)]
    pub row_errors: Vec<RowError>,
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs one pipeline on `input`, which must already satisfy the config's
/// shape.
pub fn run_on(cfg: &ExperimentConfig, input: &[Vec<f64>]) -> Result<ExperimentResult> {
    let engine = Engine::<f64>::with_seed(cfg.he, cfg.seed)?;
    let packed = he_softmax::pack(&engine, input)?;
    let opts = HeSoftmaxOptions::default();
    let (out, report) = match cfg.method {
        Method::Mgf => {
            let aexp = cfg.exp_spec_or_default().compile()?;
            he_softmax::he_mgf_softmax(&engine, &packed, &aexp, cfg.family, opts)?
        }
        Method::Baseline => baseline::he_softmax_baseline(&engine, &packed, &cfg.baseline_or_default(), opts)?,
    };
    let got = he_softmax::unpack(&engine, &out);
    let mut row_errors = Vec::with_capacity(got.len());
    let mut max_row_sum_dev = 0.0f64;
    for (i, (x, y)) in input.iter().zip(&got).enumerate() {
        let exact = mgf_core::softmax_exact(x)?;
        let mgf = mgf_core::mgf_softmax_plain(x, cfg.family)?;
        row_errors.push(RowError {
            row: i,
            vs_softmax: max_abs(y, &exact),
            vs_mgf_plain: max_abs(y, &mgf),
        });
        max_row_sum_dev = max_row_sum_dev.max((y.iter().sum::<f64>() - 1.0).abs());
    }
    let n = row_errors.len().max(1) as f64;
    let accuracy = AccuracySummary {
        max_vs_softmax: row_errors.iter().map(|r| r.vs_softmax).fold(0.0, f64::max),
        mean_vs_softmax: row_errors.iter().map(|r| r.vs_softmax).sum::<f64>() / n,
        max_vs_mgf_plain: row_errors.iter().map(|r| r.vs_mgf_plain).fold(0.0, f64::max),
        mean_vs_mgf_plain: row_errors.iter().map(|r| r.vs_mgf_plain).sum::<f64>() / n,
        max_row_sum_dev,
    };
    Ok(ExperimentResult {
        method: cfg.method,
        rows: cfg.rows,
        cols: cfg.cols,
        input_max: cfg.input_max,
        seed: cfg.seed,
        slot_count: cfg.he.slot_count,
        max_level: cfg.he.max_level,
        cost: estimate_cost(&report, &cfg.cost),
        report,
        accuracy,
        row_errors,
    })
}

/// Generates the seeded input and runs the configured pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let input = generate_matrix(cfg)?;
    run_on(cfg, &input)
}

/// Writes the JSON report and per-row CSV named in `paths`.
pub fn write_outputs(result: &ExperimentResult, paths: &OutputPaths) -> Result<()> {
    if let Some(p) = &paths.report {
        std::fs::write(p, render_json(std::slice::from_ref(result))?)?;
    }
    if let Some(p) = &paths.errors_csv {
        let mut w = csv::Writer::from_path(p)?;
        for r in &result.row_errors {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Proposed and baseline runs on the same input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub proposed: ExperimentResult,
    pub baseline: ExperimentResult,
    /// Baseline over proposed estimated total time.
    pub speedup: f64,
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    cfg.validate()?;
    let input = generate_matrix(cfg)?;
    let proposed = run_on(
        &ExperimentConfig {
            method: Method::Mgf,
            ..cfg.clone()
        },
        &input,
    )?;
    let baseline = run_on(
        &ExperimentConfig {
            method: Method::Baseline,
            ..cfg.clone()
        },
        &input,
    )?;
    let speedup = baseline.cost.total / proposed.cost.total;
    Ok(Comparison {
        proposed,
        baseline,
        speedup,
    })
}

/// MGF pipeline counters for each `k` on the config's seeded matrix.
pub fn depth_table(cfg: &ExperimentConfig, ks: &[u32], variant: &str) -> Result<Vec<SoftmaxReport>> {
    let input = generate_matrix(cfg)?;
    ks.iter()
        .map(|&k| {
            let spec = match variant {
                "chebyshev" => ExpApproxSpec::chebyshev(15, k),
                "limit" => ExpApproxSpec::Limit { k },
                other => return Err(Error::Config(format!("unknown variant '{other}'"))),
            };
            let run = ExperimentConfig {
                method: Method::Mgf,
                exp_spec: Some(spec),
                ..cfg.clone()
            };
            Ok(run_on(&run, &input)?.report)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Columns of the CSV rendering, in order.
pub const REPORT_CSV_COLUMNS: [&str; 18] = [
    "method",
    "variant",
    "k",
    "depth",
    "add",
    "pmult",
    "cmult",
    "rot",
    "boot",
    "streams",
    "time_add",
    "time_pmult",
    "time_cmult",
    "time_rot",
    "time_boot",
    "time_total",
    "max_vs_softmax",
    "max_vs_mgf_plain",
];

fn label(m: Method) -> &'static str {
    match m {
        Method::Mgf => "Proposed",
        Method::Baseline => "Baseline",
    }
}

fn render_json(results: &[ExperimentResult]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(results)?;
    s.push('\n');
    Ok(s)
}

fn render_csv(results: &[ExperimentResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_CSV_COLUMNS)?;
    for r in results {
        let rep = &r.report;
        let c = &r.cost;
        w.write_record([
            label(r.method).to_string(),
            rep.variant.clone(),
            rep.k.to_string(),
            rep.depth.to_string(),
            rep.add.to_string(),
            rep.pmult.to_string(),
            rep.cmult.to_string(),
            rep.rot.to_string(),
            rep.boot.to_string(),
            rep.streams.to_string(),
            format!("{:.6}", c.add),
            format!("{:.6}", c.pmult),
            format!("{:.6}", c.cmult),
            format!("{:.6}", c.rot),
            format!("{:.6}", c.boot),
            format!("{:.6}", c.total),
            format!("{:.3e}", r.accuracy.max_vs_softmax),
            format!("{:.3e}", r.accuracy.max_vs_mgf_plain),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render_markdown(results: &[ExperimentResult]) -> String {
    let mut s = String::new();
    s.push_str("| Method | k | Depth | CMult | Rot | Boot | Add (s) | PMult (s) | CMult (s) | Rot (s) | Boot (s) | Total (s) |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in results {
        let (rep, c) = (&r.report, &r.cost);
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |",
            label(r.method),
            rep.k,
            rep.depth,
            rep.cmult,
            rep.rot,
            rep.boot,
            c.add,
            c.pmult,
            c.cmult,
            c.rot,
            c.boot,
            c.total
        );
    }
    s
}

/// Renders results; output depends only on the results themselves.
pub fn render_report(results: &[ExperimentResult], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => render_json(results),
        ReportFormat::Csv => render_csv(results),
        ReportFormat::Markdown => Ok(render_markdown(results)),
    }
}

/// Renders and writes to `path`.
pub fn emit_report(results: &[ExperimentResult], format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(results, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(add: u64, pmult: u64, cmult: u64, rot: u64, boot: u64) -> SoftmaxReport {
        SoftmaxReport {
            method: "mgf".into(),
            variant: "chebyshev".into(),
            k: 0,
            depth: 0,
            add,
            pmult,
            cmult,
            rot,
            boot,
            streams: 1,
            cmult_per_stream: cmult,
            boot_per_stream: boot,
            spec: None,
        }
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            he: HeParams::new(256, 10).unwrap(),
            rows: 8,
            cols: 32,
            input_max: 16.0,
            seed: 7,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn cost_examples() {
        let m = CostModel::default();
        assert_eq!(estimate_cost(&report(0, 0, 0, 0, 0), &m).total, 0.0);
        let c = estimate_cost(&report(220, 50, 20, 13, 0), &m);
        assert!((c.total - 2.96).abs() < 1e-12);
        let b = estimate_cost(&report(0, 0, 0, 0, 1), &m);
        assert_eq!(b.boot, 14.0);
    }

    #[test]
    fn cost_is_monotone() {
        let m = CostModel::default();
        let base = estimate_cost(&report(3, 3, 3, 3, 3), &m).total;
        for r in [
            report(4, 3, 3, 3, 3),
            report(3, 4, 3, 3, 3),
            report(3, 3, 4, 3, 3),
            report(3, 3, 3, 4, 3),
            report(3, 3, 3, 3, 4),
        ] {
            assert!(estimate_cost(&r, &m).total >= base);
        }
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = ExperimentConfig::default();
        assert_eq!((c.rows, c.cols, c.input_max), (256, 256, 128.0));
        assert_eq!(c.exp_spec_or_default(), ExpApproxSpec::chebyshev(15, 4));
        assert_eq!(c.baseline_or_default().k, 5);
        assert!(ExperimentConfig::from_json(r#"{"rows": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"nope": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"input_max": -1}"#).is_err());
        let c = ExperimentConfig::from_json(
            r#"{"method":"baseline","rows":4,"cols":8,"baseline":{"k":2},"input":{"dist":"gaussian_mixture","components":2,"sigma":1.5}}"#,
        )
        .unwrap();
        assert_eq!(c.method, Method::Baseline);
        assert_eq!(c.baseline_or_default().k, 2);
        assert_eq!(k_for_range(8.0), 0);
        assert_eq!(k_for_range(9.0), 1);
    }

    #[test]
    fn generated_inputs_in_range() {
        let mut cfg = small_cfg();
        for input in [
            InputDist::Uniform,
            InputDist::GaussianMixture {
                components: 3,
                sigma: 4.0,
            },
        ] {
            cfg.input = input;
            let a = generate_matrix(&cfg).unwrap();
            assert_eq!(a, generate_matrix(&cfg).unwrap());
            assert!(a.iter().flatten().all(|v| (-16.0..=0.0).contains(v)));
        }
    }

    #[test]
    fn mgf_run_on_constant_matrix() {
        let cfg = small_cfg();
        let input = vec![vec![-3.0; 32]; 8];
        let r = run_on(&cfg, &input).unwrap();
        assert!(r.accuracy.max_vs_softmax <= 1e-6);
        assert_eq!(r.report.depth, he_softmax::expected_depth(&cfg.exp_spec_or_default()));
        assert_eq!(r.report.depth, 7);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small_cfg();
        let cmp = compare(&cfg).unwrap();
        let again = compare(&cfg).unwrap();
        let results = [cmp.proposed.clone(), cmp.baseline.clone()];
        for f in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown] {
            let a = render_report(&results, f).unwrap();
            let b = render_report(&[again.proposed.clone(), again.baseline.clone()], f).unwrap();
            assert_eq!(a, b);
        }
        let md = render_report(&results, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| Proposed |") && md.contains("| Baseline |"));
        let csv = render_report(&results, ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().next().unwrap(), REPORT_CSV_COLUMNS.join(","));
        assert!(cmp.speedup > 1.0);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let a = vec![vec![0.5, -1.25, 3.0], vec![1e-9, -128.0, 0.0]];
        write_matrix_csv(&p, &a).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), a);
        std::fs::write(&p, "1,x\n").unwrap();
        assert!(matches!(read_matrix_csv(&p), Err(Error::Config(_))));
    }

    #[test]
    fn writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let paths = OutputPaths {
            report: Some(dir.path().join("r.json")),
            errors_csv: Some(dir.path().join("e.csv")),
        };
        let r = run_experiment(&small_cfg()).unwrap();
        write_outputs(&r, &paths).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "row,vs_softmax,vs_mgf_plain");
        assert_eq!(csv.lines().count(), 9);
        let bad = OutputPaths {
            report: Some(dir.path().join("missing/r.json")),
            errors_csv: None,
        };
        assert!(matches!(write_outputs(&r, &bad), Err(Error::Io(_))));
    }
}
