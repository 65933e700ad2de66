//! `fracpow`: seeded, configurable experiment runs for fractional powers of
//! black-box unitaries, emitting CSV/JSON records and optional SVG plots.
//!
//! Exit codes: 0 ok, 2 validation, 3 resource limit, 4 regression assertion.

use clap::{Args, Parser, Subcommand};
use fracpow::error::Error;
use fracpow::estimation::AncillaConfig;
use fracpow::experiment::{
    measure_error, records_to_csv, records_to_json, sweep_m, ExperimentFixture, ExperimentRecord,
    Measurement, PowerRequest, RunMode, TValue,
};
use fracpow::fixtures::{dyadic_fixture, load_fixture, qft_fixture, third_fixture, SpectralFixture};
use fracpow::power::RunOptions;
use fracpow::rational::{primorial, PrimeSpectrumFixture};
use fracpow::search::{
    entangled_search, estimate_subspace_dim, magnification_experiment, predicted_success,
};
use num_bigint::BigUint;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "fracpow",
    version,
    about = "Dense simulation and experiment harness for fractional powers of black-box unitaries"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply U^t on Haar-random inputs and record error/query statistics
    Power(PowerCmd),
    /// Sweep the precision parameter m; reports the log2-error slope
    #[command(name = "sweep-m")]
    SweepM(SweepCmd),
    /// Fractional QFT check: two ancilla bits, exactly six controlled queries
    Fqft(FqftCmd),
    /// Prime-denominator spectra: exact powers at t-independent query cost
    Primorial(PrimorialCmd),
    /// Generalized search success table over an unknown eigenbasis
    Search(SearchCmd),
    /// Error-magnification experiment (approximate vs exact square root)
    Magnify(MagnifyCmd),
}

#[derive(Args, Clone)]
struct OutputOpts {
    /// Output path (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a JSON array instead of CSV
    #[arg(long)]
    json: bool,
    /// Write an SVG line plot (sweep-m, search, magnify)
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EngineOpts {
    /// Maximum simulated circuit width in qubits
    #[arg(long, default_value_t = fracpow::estimation::DEFAULT_MAX_WIDTH)]
    max_width: usize,
    /// Skip the spectral-gap validation
    #[arg(long)]
    force: bool,
    /// Worker threads for sweep grids (0 = available parallelism)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl EngineOpts {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            max_width: self.max_width,
            force: self.force,
            ..RunOptions::default()
        }
    }
}

#[derive(Args)]
struct PowerCmd {
    /// Fixture: dyadic | third | qft | prime:B | file:PATH
    #[arg(long, default_value = "dyadic")]
    spectrum: String,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Precision bits (estimate granularity 1/2^m)
    #[arg(long)]
    m: usize,
    /// Estimation repetitions (odd; default 2m+1)
    #[arg(long)]
    r: Option<usize>,
    /// Power to apply (decimal)
    #[arg(long)]
    t: String,
    /// Override the fixture's declared gap
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// standard | inverse-free | exact-rational
    #[arg(long, default_value = "standard")]
    mode: String,
    #[command(flatten)]
    engine: EngineOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct SweepCmd {
    /// m range, inclusive (e.g. 3..8) or a single value
    #[arg(long)]
    m: String,
    #[arg(long, default_value = "third")]
    spectrum: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Fixed repetition count (default per point: 2m+1)
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value = "0.5")]
    t: String,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    engine: EngineOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct FqftCmd {
    /// QFT register size in qubits
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value = "0.5")]
    t: String,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    engine: EngineOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct PrimorialCmd {
    /// Number of primes in the spectrum
    #[arg(long)]
    b: usize,
    /// Integer power (arbitrary precision)
    #[arg(long)]
    t: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: Option<usize>,
    /// Fixture dimension (default: smallest power of two above b)
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 4)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    engine: EngineOpts,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct SearchCmd {
    /// Search space dimension N (power of two)
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Flagged subspace dimension
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Emit rows for k = 0..=k_max
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    /// Also run subspace-dimension estimation with this many bits
    #[arg(long)]
    estimate_bits: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct MagnifyCmd {
    /// Root-of-unity density: the fixture carries every 2^m-th root
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k_max: usize,
    /// Replace the approximate square root by the exact one (null case)
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputOpts,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Power(args) => cmd_power(args),
        Cmd::SweepM(args) => cmd_sweep_m(args),
        Cmd::Fqft(args) => cmd_fqft(args),
        Cmd::Primorial(args) => cmd_primorial(args),
        Cmd::Search(args) => cmd_search(args),
        Cmd::Magnify(args) => cmd_magnify(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(exit_code_for(&err));
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::WidthLimit { .. } | Error::ResourceLimit(_) => 3,
        Error::Regression(_) => 4,
        _ => 2,
    }
}

/// Builds the fixture named by a `--spectrum` value.
fn build_fixture(
    spectrum: &str,
    dim: usize,
    m: usize,
    seed: u64,
    gap_override: Option<f64>,
) -> Result<ExperimentFixture, Error> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "--dim must be a power of two >= 2, got {dim}"
        )));
    }
    let fixture = match spectrum {
        "dyadic" => ExperimentFixture::Plain(dyadic_fixture(dim, m, seed)?),
        "third" => {
            if dim != 2 {
                return Err(Error::InvalidParameter(
                    "spectrum `third` is a 1-qubit fixture; use --dim 2".into(),
                ));
            }
            ExperimentFixture::Plain(third_fixture(seed))
        }
        "qft" => ExperimentFixture::Plain(qft_fixture(dim.trailing_zeros() as usize)?),
        other => {
            if let Some(b) = other.strip_prefix("prime:") {
                let b: usize = b.parse().map_err(|_| {
                    Error::InvalidParameter(format!("bad prime spectrum `{other}`"))
                })?;
                ExperimentFixture::Prime(PrimeSpectrumFixture::new(b, dim, seed)?)
            } else if let Some(path) = other.strip_prefix("file:") {
                ExperimentFixture::Plain(load_fixture(Path::new(path))?)
            } else {
                return Err(Error::InvalidParameter(format!(
                    "unknown spectrum `{other}` (expected dyadic | third | qft | prime:B | file:PATH)"
                )));
            }
        }
    };
    match gap_override {
        None => Ok(fixture),
        Some(gap) => match fixture {
            ExperimentFixture::Plain(f) => Ok(ExperimentFixture::Plain(SpectralFixture::new(
                f.eigenbasis().clone(),
                f.eigenphases().to_vec(),
                gap,
            )?)),
            ExperimentFixture::Prime(_) => Err(Error::InvalidParameter(
                "prime fixtures derive their gap from the assignment; --gap not applicable".into(),
            )),
        },
    }
}

fn parse_t_real(t: &str) -> Result<f64, Error> {
    let v: f64 = t
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad decimal --t `{t}`")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "--t must be finite and >= 0, got {t}"
        )));
    }
    Ok(v)
}

fn parse_t_value(t: &str, mode: RunMode) -> Result<TValue, Error> {
    if mode == RunMode::ExactRational && !t.contains('.') {
        let big = BigUint::parse_bytes(t.as_bytes(), 10)
            .ok_or_else(|| Error::InvalidParameter(format!("bad integer --t `{t}`")))?;
        return Ok(TValue::Integer(big));
    }
    Ok(TValue::Real(parse_t_real(t)?))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_text(path: Option<&PathBuf>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn emit_records(records: &[ExperimentRecord], output: &OutputOpts) -> Result<(), Error> {
    let text = if output.json {
        let mut s = records_to_json(records)?;
        s.push('\n');
        s
    } else {
        records_to_csv(records)
    };
    write_text(output.out.as_ref(), &text)
}

#[allow(clippy::too_many_arguments)]
fn record_from(
    run_id: String,
    subcommand: &str,
    cfg: AncillaConfig,
    t: &str,
    mode: RunMode,
    meas: &Measurement,
    seed: u64,
    wall_ms: u64,
) -> ExperimentRecord {
    ExperimentRecord::from_measurement(
        run_id,
        subcommand,
        cfg.m(),
        cfg.r(),
        t,
        mode,
        meas,
        seed,
        wall_ms,
    )
}

fn cmd_power(args: PowerCmd) -> Result<(), Error> {
    let mode = RunMode::parse(&args.mode)?;
    if mode == RunMode::ExactRational && !args.spectrum.starts_with("prime:") {
        return Err(Error::InvalidParameter(
            "exact-rational mode needs --spectrum prime:B".into(),
        ));
    }
    if args.output.svg.is_some() {
        return Err(Error::InvalidParameter(
            "--svg applies to sweep-m, search and magnify".into(),
        ));
    }
    let fixture = build_fixture(&args.spectrum, args.dim, args.m, args.seed, args.gap)?;
    let r = args.r.unwrap_or(2 * args.m + 1);
    let cfg = AncillaConfig::new(args.m, r)?;
    let req = PowerRequest {
        t: parse_t_value(&args.t, mode)?,
        cfg,
        mode,
        phase_fn: None,
    };
    let opts = args.engine.run_options();
    let start = Instant::now();
    let meas = measure_error(&fixture, &req, args.samples, args.seed, &opts)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let run_id = format!(
        "power-{}-dim{}-m{}-r{}-t{}-seed{}",
        sanitize(&args.spectrum),
        fixture.dim(),
        args.m,
        r,
        sanitize(&args.t),
        args.seed
    );
    let record = record_from(run_id, "power", cfg, &args.t, mode, &meas, args.seed, wall_ms);
    emit_records(&[record], &args.output)
}

fn parse_m_range(spec: &str) -> Result<Vec<usize>, Error> {
    let parse_one = |s: &str| -> Result<usize, Error> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad m value `{s}`")))
    };
    let values = if let Some((lo, hi)) = spec.split_once("..") {
        let lo = parse_one(lo)?;
        let hi = parse_one(hi)?;
        if hi < lo {
            Vec::new()
        } else {
            (lo..=hi).collect()
        }
    } else {
        vec![parse_one(spec)?]
    };
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("empty m range `{spec}`")));
    }
    if values.iter().any(|&m| m == 0) {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    Ok(values)
}

fn cmd_sweep_m(args: SweepCmd) -> Result<(), Error> {
    let ms = parse_m_range(&args.m)?;
    // build the fixture at the smallest m: dyadic phases on the 1/2^{m_min}
    // grid stay grid-exact at every larger m in the sweep
    let m_build = *ms.iter().min().expect("nonempty");
    let fixture = build_fixture(&args.spectrum, args.dim, m_build, args.seed, args.gap)?;
    let t = parse_t_real(&args.t)?;
    let opts = args.engine.run_options();
    let start = Instant::now();
    let points = sweep_m(
        &fixture,
        &ms,
        t,
        args.r,
        args.samples,
        args.seed,
        &opts,
        args.engine.threads,
    )?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let slope = fracpow::experiment::log2_error_slope(&points);

    let mut records = Vec::with_capacity(points.len() + 1);
    for p in &points {
        let run_id = format!(
            "sweep-m-{}-dim{}-m{}-r{}-t{}-seed{}",
            sanitize(&args.spectrum),
            fixture.dim(),
            p.m,
            p.r,
            sanitize(&args.t),
            args.seed
        );
        let cfg = AncillaConfig::new(p.m, p.r)?;
        records.push(record_from(
            run_id,
            "sweep-m",
            cfg,
            &args.t,
            RunMode::Standard,
            &p.measurement,
            args.seed,
            wall_ms,
        ));
    }
    // footer row carrying the fitted slope of log2(max_err) vs m
    let mut footer = records[0].clone();
    footer.run_id = format!(
        "sweep-m-{}-slope-seed{}",
        sanitize(&args.spectrum),
        args.seed
    );
    footer.m = 0;
    footer.r = 0;
    footer.mode = "slope".into();
    footer.max_err = slope;
    footer.mean_err = 0.0;
    footer.residual_ancilla = 0.0;
    footer.calls_u = 0;
    footer.calls_cu = 0;
    footer.calls_uinv = 0;
    footer.calls_cuinv = 0;
    footer.wall_ms = wall_ms;
    records.push(footer);

    if let Some(svg_path) = &args.output.svg {
        let pts: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.m as f64, p.measurement.max_err.max(1e-15).log2()))
            .collect();
        let svg = fracpow::plot::line_plot(
            &format!("log2(max_err) vs m (slope {slope:.3})"),
            "m",
            "log2(max_err)",
            &pts,
        );
        std::fs::write(svg_path, svg)?;
    }
    emit_records(&records, &args.output)
}

fn cmd_fqft(args: FqftCmd) -> Result<(), Error> {
    if args.output.svg.is_some() {
        return Err(Error::InvalidParameter(
            "--svg applies to sweep-m, search and magnify".into(),
        ));
    }
    let fixture = ExperimentFixture::Plain(qft_fixture(args.n)?);
    let cfg = AncillaConfig::new(2, 1)?;
    let t = parse_t_real(&args.t)?;
    let req = PowerRequest {
        t: TValue::Real(t),
        cfg,
        mode: RunMode::Standard,
        phase_fn: None,
    };
    let opts = args.engine.run_options();
    let start = Instant::now();
    let meas = measure_error(&fixture, &req, args.samples, args.seed, &opts)?;
    let wall_ms = start.elapsed().as_millis() as u64;

    let units = meas.ledger.controlled_units();
    println!(
        "fqft: controlled-query units = {units} (stage I {} + stage III {}), max_err = {}",
        meas.ledger.calls_cu, meas.ledger.calls_cuinv, meas.max_err
    );
    if t.fract() != 0.0 && units != 6 {
        return Err(Error::Regression(format!(
            "fractional QFT must use exactly 6 controlled-query units, ledger shows {units}"
        )));
    }
    if meas.max_err > 1e-10 {
        return Err(Error::Regression(format!(
            "fractional QFT is an exact regime; max_err = {}",
            meas.max_err
        )));
    }
    let run_id = format!("fqft-n{}-t{}-seed{}", args.n, sanitize(&args.t), args.seed);
    let record = record_from(
        run_id,
        "fqft",
        cfg,
        &args.t,
        RunMode::Standard,
        &meas,
        args.seed,
        wall_ms,
    );
    emit_records(&[record], &args.output)
}

fn cmd_primorial(args: PrimorialCmd) -> Result<(), Error> {
    if args.output.svg.is_some() {
        return Err(Error::InvalidParameter(
            "--svg applies to sweep-m, search and magnify".into(),
        ));
    }
    let dim = args.dim.unwrap_or_else(|| (args.b + 1).next_power_of_two());
    let fixture = build_fixture(&format!("prime:{}", args.b), dim, args.m, args.seed, None)?;
    let r = args.r.unwrap_or(2 * args.m + 1);
    let cfg = AncillaConfig::new(args.m, r)?;
    let t_small = BigUint::parse_bytes(args.t.as_bytes(), 10)
        .ok_or_else(|| Error::InvalidParameter(format!("bad integer --t `{}`", args.t)))?;
    let t_big = &t_small * BigUint::from(1_000_000u64);
    let opts = args.engine.run_options();

    let start = Instant::now();
    let mut records = Vec::new();
    let mut ledgers = Vec::new();
    for (label, t) in [(args.t.clone(), t_small), (format!("{}e6", args.t), t_big)] {
        let req = PowerRequest {
            t: TValue::Integer(t),
            cfg,
            mode: RunMode::ExactRational,
            phase_fn: None,
        };
        let meas = measure_error(&fixture, &req, args.samples, args.seed, &opts)?;
        ledgers.push(meas.ledger);
        let wall_ms = start.elapsed().as_millis() as u64;
        let run_id = format!(
            "primorial-b{}-dim{dim}-m{}-r{r}-t{}-seed{}",
            args.b,
            args.m,
            sanitize(&label),
            args.seed
        );
        records.push(record_from(
            run_id,
            "primorial",
            cfg,
            &label,
            RunMode::ExactRational,
            &meas,
            args.seed,
            wall_ms,
        ));
    }
    println!(
        "primorial(b={}) = {}; queries at t={}: cu={} cuinv={} | at t*10^6: cu={} cuinv={}",
        args.b,
        primorial(args.b),
        args.t,
        ledgers[0].calls_cu,
        ledgers[0].calls_cuinv,
        ledgers[1].calls_cu,
        ledgers[1].calls_cuinv
    );
    if ledgers[0] != ledgers[1] {
        return Err(Error::Regression(
            "query ledger must not depend on t in exact-rational mode".into(),
        ));
    }
    emit_records(&records, &args.output)
}

fn table_to_csv(header: &str, rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (k, val, pred) in rows {
        out.push_str(&format!("{k},{val},{pred}\n"));
    }
    out
}

fn table_to_json(fields: (&str, &str, &str), rows: &[(usize, f64, f64)]) -> String {
    let items: Vec<serde_json::Value> = rows
        .iter()
        .map(|(k, v, p)| serde_json::json!({ fields.0: k, fields.1: v, fields.2: p }))
        .collect();
    let mut s = serde_json::to_string_pretty(&items).expect("json");
    s.push('\n');
    s
}

fn cmd_search(args: SearchCmd) -> Result<(), Error> {
    if !args.dim.is_power_of_two() || args.dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "--dim must be a power of two >= 2, got {}",
            args.dim
        )));
    }
    if args.d == 0 || args.d > args.dim {
        return Err(Error::InvalidParameter(format!(
            "--d must be in 1..={}, got {}",
            args.dim, args.d
        )));
    }
    let qubits = args.dim.trailing_zeros() as usize;
    let fixture = dyadic_fixture(args.dim, qubits.max(1), args.seed)?;
    let flagged: Vec<usize> = (0..args.d).collect();
    let mut rows = Vec::new();
    for k in 0..=args.k_max {
        let run = entangled_search(&fixture, &flagged, k)?;
        rows.push((k, run.success_prob, predicted_success(run.theta, k)));
    }
    if let Some(bits) = args.estimate_bits {
        let est = estimate_subspace_dim(&fixture, &flagged, bits)?;
        eprintln!(
            "search: subspace dimension estimate = {} (modal outcome {} of {} bits, true d = {})",
            est.d_hat, est.modal_outcome, bits, args.d
        );
    }
    if let Some(svg_path) = &args.output.svg {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.1)).collect();
        let svg = fracpow::plot::line_plot(
            &format!("search success, N={}, d={}", args.dim, args.d),
            "k",
            "success_prob",
            &pts,
        );
        std::fs::write(svg_path, svg)?;
    }
    let text = if args.output.json {
        table_to_json(("k", "success_prob", "predicted"), &rows)
    } else {
        table_to_csv("k,success_prob,predicted", &rows)
    };
    write_text(args.output.out.as_ref(), &text)
}

fn cmd_magnify(args: MagnifyCmd) -> Result<(), Error> {
    let ks: Vec<usize> = (0..=args.k_max).collect();
    let result = magnification_experiment(args.m, &ks, args.seed, args.exact)?;
    eprintln!(
        "magnify: flagged {} of {} eigenvectors; discarded ancilla weight {:.3e}",
        result.flagged_count,
        1usize << args.m,
        result.discarded_weight
    );
    let rows: Vec<(usize, f64, f64)> = result
        .rows
        .iter()
        .map(|r| (r.k, r.error_prob, r.predicted))
        .collect();
    if let Some(svg_path) = &args.output.svg {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.1)).collect();
        let svg = fracpow::plot::line_plot(
            &format!("error magnification, m={}", args.m),
            "k",
            "error_prob",
            &pts,
        );
        std::fs::write(svg_path, svg)?;
    }
    let text = if args.output.json {
        table_to_json(("k", "error_prob", "predicted"), &rows)
    } else {
        table_to_csv("k,error_prob,predicted", &rows)
    };
    write_text(args.output.out.as_ref(), &text)
}
