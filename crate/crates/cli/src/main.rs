mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minvarx::blockops::{lq_multi_lag, orthogonality_residual, parameterize, BlockMatrixG, LqFactorization, OrthoParam};
use minvarx::estimation::{
    fit, fit_from, full_ols_fit, predict, scan, scan_surface, select_structure, Criterion, FitMethod, FitOptions,
};
use minvarx::likelihood::{build_lag_data, ConcentratedModel, LagDataset, MomentMatrices};
use minvarx::simulation::{random_stable_model, simulate, GeneratedModel, SimulationMode, DEFAULT_BURN_IN};
use minvarx::{enumerate_structures, StructureParams};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use io::{csv_text, json_bytes, num, read_json, read_series, series_csv, CliError, CliResult, Outputs};

#[derive(Parser)]
#[command(name = "minvarx", version, about = "Minimal state-space realizations of vector autoregressions")]
struct Cli {
    /// Seed for every random draw; required by simulate, fit and select.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Main output file (default: stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// List every structure with largest exponent p and total rank at most h.
    Enumerate(EnumerateArgs),
    /// Draw a random stable model and simulate data from it.
    Simulate(SimulateArgs),
    /// Fit G for one structure.
    Fit(FitArgs),
    /// Fit a family of structures and rank them.
    Select(SelectArgs),
    /// Forecast from a fitted or generated model.
    Predict(PredictArgs),
    /// Normalize G by the multi-lag LQ factorization.
    Lq(LqArgs),
    /// Objective along the circle (and tangent coefficients) for two regressors.
    Scan(ScanArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    /// Bound on the total rank allocation.
    #[arg(long)]
    h: usize,
    #[arg(long)]
    p: usize,
    /// Response dimension, for the parameter reduction column.
    #[arg(long, requires = "m")]
    k: Option<usize>,
    #[arg(long, requires = "k")]
    m: Option<usize>,
}

#[derive(Args)]
struct DataArgs {
    /// Responses, one row per time point, header row required.
    #[arg(long)]
    y: PathBuf,
    /// Regressors in the same layout; omit with --autoregressive.
    #[arg(long, conflicts_with = "autoregressive")]
    x: Option<PathBuf>,
    /// Use the responses as regressors.
    #[arg(long)]
    autoregressive: bool,
}

impl DataArgs {
    fn load(&self) -> CliResult<(DMatrix<f64>, DMatrix<f64>)> {
        let y = read_series(&self.y)?;
        let x = match (&self.x, self.autoregressive) {
            (Some(px), false) => read_series(px)?,
            (None, true) => y.clone(),
            _ => return Err(CliError::usage("give either --x or --autoregressive")),
        };
        if x.ncols() != y.ncols() {
            return Err(CliError::data(format!(
                "regressors have {} rows but responses have {}",
                x.ncols(),
                y.ncols()
            )));
        }
        Ok((x, y))
    }

    fn lagged(&self, p: usize) -> CliResult<LagDataset> {
        let (x, y) = self.load()?;
        let mut d = build_lag_data(&x, &y, p)?;
        d.autoregressive = self.autoregressive || d.autoregressive;
        Ok(d)
    }
}

#[derive(Args, Clone)]
struct FitOptionArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Newton)]
    method: MethodArg,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    /// Skip the periodic LQ renormalization of G.
    #[arg(long)]
    no_lq: bool,
    /// Grid size for --method grid-scan.
    #[arg(long, default_value_t = 2000)]
    scan_points: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Gradient,
    Newton,
    GridScan,
}

impl FitOptionArgs {
    fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            method: match self.method {
                MethodArg::Gradient => FitMethod::Gradient,
                MethodArg::Newton => FitMethod::Newton,
                MethodArg::GridScan => FitMethod::GridScan,
            },
            restarts: self.restarts,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            seed,
            use_lq_normalization: !self.no_lq,
            scan_points: self.scan_points,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Structure, e.g. "[(2, 2), (1, 2)]" or the d-vector "2,2".
    #[arg(long, required_unless_present = "model")]
    structure: Option<String>,
    #[arg(long, required_unless_present = "model")]
    k: Option<usize>,
    #[arg(long, required_unless_present = "model")]
    m: Option<usize>,
    /// Simulate from this model instead of drawing one.
    #[arg(long, conflicts_with_all = ["structure", "k", "m"])]
    model: Option<PathBuf>,
    /// Number of samples kept.
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Autoregressive)]
    mode: ModeArg,
    /// CSV file for the simulated responses.
    #[arg(long)]
    y_out: PathBuf,
    /// CSV file for the regressors (exogenous mode only).
    #[arg(long)]
    x_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Autoregressive,
    Exogenous,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Structure to fit; not used with --full-ols.
    #[arg(long, required_unless_present = "full_ols")]
    structure: Option<String>,
    /// Unrestricted least squares on p lags instead of a structured fit.
    #[arg(long, requires = "p")]
    full_ols: bool,
    #[arg(long)]
    p: Option<usize>,
    /// Start from this G (a local fit with no random restarts).
    #[arg(long, conflicts_with = "full_ols")]
    init: Option<PathBuf>,
    #[command(flatten)]
    opts: FitOptionArgs,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    p: usize,
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    criterion: CriterionArg,
    /// Semicolon-separated structures to compare (default: all).
    #[arg(long)]
    structures: Option<String>,
    #[command(flatten)]
    opts: FitOptionArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Aic,
    Bic,
    LlkGap,
}

#[derive(Args)]
struct PredictArgs {
    /// Output of fit or simulate.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1)]
    steps: usize,
}

#[derive(Args)]
struct LqArgs {
    /// JSON with the structure and the rows of G.
    #[arg(long)]
    g: PathBuf,
    /// Make the first entry of every G_{r,0} row positive.
    #[arg(long)]
    positive_signs: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    structure: String,
    /// Number of angles in [0, π).
    #[arg(long, default_value_t = 1000)]
    points: usize,
    /// Evaluate the (t, c) surface on this grid "start:stop:count" instead of
    /// minimizing over c.
    #[arg(long, allow_hyphen_values = true)]
    c_grid: Option<String>,
}

fn require_seed(seed: Option<u64>, cmd: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::usage(format!("{cmd} draws random numbers, so --seed is required")))
}

fn parse_structure(text: &str) -> CliResult<StructureParams> {
    text.parse::<StructureParams>().map_err(CliError::from)
}

fn json_only(format: Format, cmd: &str) -> CliResult<()> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::usage(format!("{cmd} writes JSON only"))),
    }
}

#[derive(Serialize)]
struct EnumerateRow {
    structure: StructureParams,
    dvec: Vec<usize>,
    n_min: usize,
    rank_alloc: usize,
    centralizer_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    param_reduction: Option<usize>,
}

#[derive(Serialize)]
struct EnumerateReport {
    h: usize,
    p: usize,
    count: usize,
    rows: Vec<EnumerateRow>,
}

fn cmd_enumerate(cli: &Cli, a: &EnumerateArgs, out: &mut Outputs) -> CliResult<()> {
    if a.h == 0 || a.p == 0 {
        return Err(CliError::usage("--h and --p must be positive"));
    }
    let km = a.k.zip(a.m);
    let rows = enumerate_structures(a.h, a.p)
        .into_iter()
        .map(|s| {
            let reduction = match km {
                Some((k, m)) => Some(s.param_reduction(k, m)?),
                None => None,
            };
            Ok(EnumerateRow {
                dvec: s.dvec().to_vec(),
                n_min: s.n_min(),
                rank_alloc: s.rank_alloc(),
                centralizer_dim: s.centralizer_dim(),
                param_reduction: reduction,
                structure: s,
            })
        })
        .collect::<minvarx::Result<Vec<_>>>()?;
    eprintln!("{} structures with p = {} and total rank <= {}", rows.len(), a.p, a.h);
    let bytes = match cli.format {
        Format::Json => json_bytes(
            "enumerate",
            &EnumerateReport { h: a.h, p: a.p, count: rows.len(), rows },
        )?,
        Format::Csv => {
            let mut header: Vec<String> = ["structure", "dvec", "n_min", "rank_alloc", "centralizer_dim"]
                .map(String::from)
                .to_vec();
            if km.is_some() {
                header.push("param_reduction".into());
            }
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![
                        r.structure.to_string(),
                        r.dvec.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "),
                        r.n_min.to_string(),
                        r.rank_alloc.to_string(),
                        r.centralizer_dim.to_string(),
                    ];
                    if let Some(x) = r.param_reduction {
                        v.push(x.to_string());
                    }
                    v
                })
                .collect();
            csv_text(&header, &body)?
        }
    };
    out.main(cli.output.as_deref(), bytes);
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    model: &'a GeneratedModel,
    mode: SimulationMode,
    t: usize,
    burn_in: usize,
    data_seed: u64,
}

/// A bare model, or the output of an earlier simulate run.
#[derive(Deserialize)]
#[serde(untagged)]
enum ModelInput {
    Bare(GeneratedModel),
    Wrapped { model: GeneratedModel },
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, out: &mut Outputs) -> CliResult<()> {
    json_only(cli.format, "simulate")?;
    let seed = require_seed(cli.seed, "simulate")?;
    if a.t == 0 {
        return Err(CliError::usage("--t must be positive"));
    }
    let mode = match a.mode {
        ModeArg::Autoregressive => SimulationMode::Autoregressive,
        ModeArg::Exogenous => SimulationMode::Exogenous,
    };
    match (mode, &a.x_out) {
        (SimulationMode::Exogenous, None) => return Err(CliError::usage("exogenous simulation needs --x-out")),
        (SimulationMode::Autoregressive, Some(_)) => {
            return Err(CliError::usage("--x-out is only used in exogenous mode (regressors equal the responses)"))
        }
        _ => {}
    }
    let model = match &a.model {
        Some(path) => match read_json::<ModelInput>(path)? {
            ModelInput::Bare(m) | ModelInput::Wrapped { model: m } => m,
        },
        None => {
            let s = parse_structure(a.structure.as_deref().expect("clap requires it"))?;
            random_stable_model(&s, a.k.expect("clap"), a.m.expect("clap"), seed)?
        }
    };
    let data_seed = seed.wrapping_add(1);
    let sim = simulate(&model, a.t, data_seed, a.burn_in, mode)?;
    if let Some(rho) = model.spectral_radius {
        eprintln!("structure {}  spectral radius {rho:.6}", model.structure);
    }
    out.file(&a.y_out, series_csv(&sim.y, "y")?);
    if let Some(px) = &a.x_out {
        out.file(px, series_csv(&sim.x, "x")?);
    }
    let report = SimulateReport { model: &model, mode, t: a.t, burn_in: a.burn_in, data_seed };
    out.main(cli.output.as_deref(), json_bytes("simulate", &report)?);
    Ok(())
}

fn cmd_fit(cli: &Cli, a: &FitArgs, out: &mut Outputs) -> CliResult<()> {
    json_only(cli.format, "fit")?;
    if a.full_ols {
        let p = a.p.expect("clap requires it");
        if p == 0 {
            return Err(CliError::usage("--p must be positive"));
        }
        let ols = full_ols_fit(&a.data.lagged(p)?)?;
        eprintln!("full least squares, p = {p}: neg_log_lik {}", num(ols.neg_log_lik));
        out.main(cli.output.as_deref(), json_bytes("fit-full-ols", &ols)?);
        return Ok(());
    }
    let s = parse_structure(a.structure.as_deref().expect("clap requires it"))?;
    if let Some(p) = a.p {
        if p != s.p() {
            return Err(CliError::usage(format!("--p {p} disagrees with the structure's largest exponent {}", s.p())));
        }
    }
    let (x, y) = a.data.load()?;
    s.validate_for(y.nrows(), x.nrows())?;
    let mut data = build_lag_data(&x, &y, s.p())?;
    data.autoregressive |= a.data.autoregressive;
    let res = match &a.init {
        Some(path) => {
            let g = read_g(path)?;
            if g.structure() != &s {
                return Err(CliError::usage(format!("--init has structure {}, expected {s}", g.structure())));
            }
            fit_from(&data, &g, &a.opts.options(cli.seed.unwrap_or(0)))?
        }
        None => fit(&data, &s, &a.opts.options(require_seed(cli.seed, "fit")?))?,
    };
    eprintln!("structure        {}", res.structure);
    eprintln!("n_min            {}", res.structure.n_min());
    eprintln!("neg_log_lik      {}", num(res.neg_log_lik));
    eprintln!("gradient norm    {:.3e}", res.grad_norm);
    eprintln!("converged        {} ({} iterations)", res.converged, res.iterations);
    eprintln!(
        "minimality       G rank {}/{} {}, H rank {}/{} {}",
        res.minimality_g.rank,
        res.minimality_g.required,
        if res.minimality_g.passed { "ok" } else { "FAILED" },
        res.minimality_h.rank,
        res.minimality_h.required,
        if res.minimality_h.passed { "ok" } else { "FAILED" },
    );
    if res.diverged {
        return Err(CliError::numeric(format!(
            "fit diverged after {} iterations (|G| grew without bound, neg_log_lik {})",
            res.iterations,
            num(res.neg_log_lik)
        )));
    }
    out.main(cli.output.as_deref(), json_bytes("fit", &res)?);
    Ok(())
}

fn cmd_select(cli: &Cli, a: &SelectArgs, out: &mut Outputs) -> CliResult<()> {
    let seed = require_seed(cli.seed, "select")?;
    if a.p == 0 {
        return Err(CliError::usage("--p must be positive"));
    }
    let subset = a
        .structures
        .as_deref()
        .map(|txt| txt.split(';').filter(|t| !t.trim().is_empty()).map(parse_structure).collect::<CliResult<Vec<_>>>())
        .transpose()?;
    let criterion = match a.criterion {
        CriterionArg::Aic => Criterion::Aic,
        CriterionArg::Bic => Criterion::Bic,
        CriterionArg::LlkGap => Criterion::LlkGap,
    };
    let data = a.data.lagged(a.p)?;
    let report = select_structure(&data, a.p, criterion, &a.opts.options(seed), subset.as_deref())?;
    if let Some(best) = report.rows.first() {
        eprintln!("{} structures fitted, best {} ", report.rows.len(), best.structure);
    }
    let bytes = match cli.format {
        Format::Json => json_bytes("select", &report)?,
        Format::Csv => {
            let header = [
                "structure", "n_min", "param_reduction", "free_params", "neg_log_lik", "criterion", "converged", "diverged", "error",
            ]
            .map(String::from);
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.structure.to_string(),
                        r.n_min.to_string(),
                        r.param_reduction.to_string(),
                        r.free_params.to_string(),
                        opt(r.neg_log_lik),
                        opt(r.criterion),
                        r.converged.to_string(),
                        r.diverged.to_string(),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_text(&header, &rows)?
        }
    };
    out.main(cli.output.as_deref(), bytes);
    Ok(())
}

/// The part of a fit or simulate output that forecasting needs.
#[derive(Deserialize)]
struct LagModel {
    #[serde(rename = "Phi", with = "minvarx::json::matrix_vec")]
    phi: Vec<DMatrix<f64>>,
    #[serde(default)]
    autoregressive: Option<bool>,
}

#[derive(Deserialize)]
struct SimulatedModel {
    model: LagModel,
}

#[derive(Serialize)]
struct Forecast {
    steps: usize,
    #[serde(with = "minvarx::json::matrix")]
    forecast: DMatrix<f64>,
}

fn cmd_predict(cli: &Cli, a: &PredictArgs, out: &mut Outputs) -> CliResult<()> {
    let model = read_json::<LagModel>(&a.model).or_else(|e| read_json::<SimulatedModel>(&a.model).map(|s| s.model).map_err(|_| e))?;
    let (x, _) = a.data.load()?;
    let p = model.phi.len();
    if x.ncols() < p {
        return Err(CliError::data(format!("need at least {p} rows of recent data, got {}", x.ncols())));
    }
    let recent = x.columns(x.ncols() - p, p).clone_owned();
    let ar = a.data.autoregressive || model.autoregressive.unwrap_or(false);
    let f = predict(&model.phi, &recent, a.steps, ar)?;
    let bytes = match cli.format {
        Format::Json => json_bytes("predict", &Forecast { steps: a.steps, forecast: f.transpose() })?,
        Format::Csv => series_csv(&f, "y")?,
    };
    out.main(cli.output.as_deref(), bytes);
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GInput {
    Bare(BlockMatrixG),
    Named {
        #[serde(rename = "G")]
        g: BlockMatrixG,
    },
}

fn read_g(path: &Path) -> CliResult<BlockMatrixG> {
    Ok(match read_json::<GInput>(path)? {
        GInput::Bare(g) | GInput::Named { g } => g,
    })
}

#[derive(Serialize)]
struct LqReport {
    #[serde(flatten)]
    lq: LqFactorization,
    #[serde(with = "minvarx::json::fixed")]
    orthogonality_residual: f64,
    param: OrthoParam,
}

fn cmd_lq(cli: &Cli, a: &LqArgs, out: &mut Outputs) -> CliResult<()> {
    json_only(cli.format, "lq")?;
    let g = read_g(&a.g)?;
    let mut lq = lq_multi_lag(&g)?;
    if a.positive_signs {
        lq = lq.with_positive_signs();
    }
    let param = parameterize(&lq.g_o)?;
    let resid = orthogonality_residual(&lq.g_o);
    eprintln!("G_o =");
    for r in lq.g_o.data().row_iter() {
        eprintln!("  {}", r.iter().map(|x| format!("{x:>10.5}")).collect::<String>());
    }
    eprintln!("S =");
    for r in lq.s.realize().row_iter() {
        eprintln!("  {}", r.iter().map(|x| format!("{x:>10.5}")).collect::<String>());
    }
    let report = LqReport { lq, orthogonality_residual: resid, param };
    out.main(cli.output.as_deref(), json_bytes("lq", &report)?);
    Ok(())
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::usage(format!("--c-grid expects start:stop:count, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

#[derive(Serialize)]
struct SurfaceRow {
    #[serde(with = "minvarx::json::fixed")]
    t: f64,
    #[serde(with = "minvarx::json::fixed")]
    c: f64,
    #[serde(with = "minvarx::json::fixed")]
    neg_log_lik: f64,
}

fn cmd_scan(cli: &Cli, a: &ScanArgs, out: &mut Outputs) -> CliResult<()> {
    let s = parse_structure(&a.structure)?;
    if a.points == 0 {
        return Err(CliError::usage("--points must be positive"));
    }
    let data = a.data.lagged(s.p())?;
    let model = ConcentratedModel::new(s, MomentMatrices::from_data(&data)?)?;
    if let Some(grid) = &a.c_grid {
        let cs = parse_grid(grid)?;
        let rows: Vec<SurfaceRow> = scan_surface(&model, a.points, &cs)?
            .into_iter()
            .map(|(t, c, v)| SurfaceRow { t, c, neg_log_lik: v })
            .collect();
        let bytes = match cli.format {
            Format::Json => json_bytes("scan-surface", &rows)?,
            Format::Csv => csv_text(
                &["t", "c", "neg_log_lik"].map(String::from),
                &rows.iter().map(|r| vec![num(r.t), num(r.c), num(r.neg_log_lik)]).collect::<Vec<_>>(),
            )?,
        };
        out.main(cli.output.as_deref(), bytes);
        return Ok(());
    }
    let sc = scan(&model, a.points)?;
    eprintln!("scan minimum {} at t = {}", num(sc.best_value), num(sc.best_t));
    let bytes = match cli.format {
        Format::Json => json_bytes("scan", &sc)?,
        Format::Csv => {
            let q = sc.coefs.first().map_or(0, Vec::len);
            let mut header = vec!["t".to_string()];
            header.extend((1..=q).map(|i| format!("c{i}")));
            header.extend(["neg_log_lik".to_string(), "argmin".to_string()]);
            let rows: Vec<Vec<String>> = (0..sc.t.len())
                .map(|i| {
                    let mut r = vec![num(sc.t[i])];
                    r.extend(sc.coefs[i].iter().map(|&c| num(c)));
                    r.push(num(sc.values[i]));
                    r.push(u8::from(sc.t[i] == sc.best_t).to_string());
                    r
                })
                .collect();
            csv_text(&header, &rows)?
        }
    };
    out.main(cli.output.as_deref(), bytes);
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let mut out = Outputs::default();
    match &cli.command {
        Command::Enumerate(a) => cmd_enumerate(cli, a, &mut out),
        Command::Simulate(a) => cmd_simulate(cli, a, &mut out),
        Command::Fit(a) => cmd_fit(cli, a, &mut out),
        Command::Select(a) => cmd_select(cli, a, &mut out),
        Command::Predict(a) => cmd_predict(cli, a, &mut out),
        Command::Lq(a) => cmd_lq(cli, a, &mut out),
        Command::Scan(a) => cmd_scan(cli, a, &mut out),
    }?;
    out.commit()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { io::EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
