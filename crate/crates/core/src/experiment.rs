//! Reproducible experiment harness: seeded Haar-sampled error measurement
//! against the spectral oracle, precision sweeps, and the flat-file record
//! formats the CLI emits.
//!
//! Determinism contract: sample i of a run with seed s is drawn from
//! ChaCha12 seeded with s on stream i, so records depend only on
//! (configuration, seed) — never on scheduling or platform.

use crate::blackbox::{BlackBox, Capabilities, QueryLedger};
use crate::error::{Error, Result};
use crate::estimation::AncillaConfig;
use crate::fixtures::SpectralFixture;
use crate::linalg::{cis, haar_state_vector, pure_trace_distance, C64};
use crate::power::{
    fractional_apply, function_apply, inverse_free_apply, power_apply, RunOptions, RunResult,
};
use crate::rational::{exact_power_apply, modular_phase_numerator, PrimeSpectrumFixture};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Fixture under measurement; the exact-rational mode needs the prime
/// structure alongside the plain spectral data.
#[derive(Debug, Clone)]
pub enum ExperimentFixture {
    Plain(SpectralFixture),
    Prime(PrimeSpectrumFixture),
}

impl ExperimentFixture {
    pub fn spectral(&self) -> &SpectralFixture {
        match self {
            ExperimentFixture::Plain(f) => f,
            ExperimentFixture::Prime(p) => p.underlying(),
        }
    }

    pub fn dim(&self) -> usize {
        self.spectral().dim()
    }
}

/// Execution mode of a power request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Standard,
    InverseFree,
    ExactRational,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Standard => "standard",
            RunMode::InverseFree => "inverse-free",
            RunMode::ExactRational => "exact-rational",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(RunMode::Standard),
            "inverse-free" => Ok(RunMode::InverseFree),
            "exact-rational" => Ok(RunMode::ExactRational),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Requested exponent: a double, or an exact integer for the rational
/// pipeline.
#[derive(Debug, Clone)]
pub enum TValue {
    Real(f64),
    Integer(BigUint),
}

impl TValue {
    pub fn as_real(&self) -> Result<f64> {
        match self {
            TValue::Real(t) => Ok(*t),
            TValue::Integer(b) => {
                if b.bits() > 52 {
                    Err(Error::InvalidParameter(
                        "exponent too large for the floating-point pipeline; use exact-rational mode"
                            .into(),
                    ))
                } else {
                    Ok(b.iter_u64_digits().next().unwrap_or(0) as f64)
                }
            }
        }
    }
}

/// One power request: exponent, ancilla configuration, mode, optional phase
/// function replacing the linear `f(λ) = tλ`.
#[derive(Clone)]
pub struct PowerRequest {
    pub t: TValue,
    pub cfg: AncillaConfig,
    pub mode: RunMode,
    pub phase_fn: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

/// Aggregated measurement over Haar samples.
#[derive(Debug, Clone, Copy)]
pub struct Measurement {
    pub max_err: f64,
    pub mean_err: f64,
    pub max_residual: f64,
    /// Query counts of a single run (identical across samples).
    pub ledger: QueryLedger,
    pub dim: usize,
    pub gap: f64,
}

fn run_one(
    fixture: &ExperimentFixture,
    req: &PowerRequest,
    s: &crate::linalg::StateVector,
    opts: &RunOptions,
) -> Result<RunResult> {
    match req.mode {
        RunMode::Standard => {
            let mut bb = BlackBox::new(fixture.spectral().clone(), Capabilities::ALL);
            match &req.phase_fn {
                Some(f) => {
                    let f = Arc::clone(f);
                    function_apply(&mut bb, s, move |x| f(x), req.cfg, opts)
                }
                None => power_apply(&mut bb, s, req.t.as_real()?, req.cfg, opts),
            }
        }
        RunMode::InverseFree => {
            let mut bb = BlackBox::new(fixture.spectral().clone(), Capabilities::NO_INVERSE);
            inverse_free_apply(&mut bb, s, req.t.as_real()?, req.cfg, opts)
        }
        RunMode::ExactRational => {
            let pf = match fixture {
                ExperimentFixture::Prime(p) => p,
                ExperimentFixture::Plain(_) => {
                    return Err(Error::InvalidParameter(
                        "exact-rational mode needs a prime-spectrum fixture".into(),
                    ))
                }
            };
            match &req.t {
                TValue::Integer(t) => exact_power_apply(pf, s, t, req.cfg, opts),
                TValue::Real(t) => exact_rational_real(pf, s, *t, req.cfg, opts),
            }
        }
    }
}

/// Real exponent through the exact pipeline: the integer part runs the
/// rational recovery, the remainder runs the standard fractional stage on its
/// output; the error is taken against the composite oracle.
fn exact_rational_real(
    pf: &PrimeSpectrumFixture,
    s: &crate::linalg::StateVector,
    t: f64,
    cfg: AncillaConfig,
    opts: &RunOptions,
) -> Result<RunResult> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("power t = {t}")));
    }
    let whole = BigUint::from(t.floor() as u64);
    let frac = t.fract();
    let int_run = exact_power_apply(pf, s, &whole, cfg, opts)?;
    if frac == 0.0 {
        return Ok(int_run);
    }
    let mut bb = BlackBox::new(pf.underlying().clone(), Capabilities::ALL);
    let frac_run = fractional_apply(&mut bb, &int_run.out_state, frac, cfg, opts)?;
    // composite oracle: exact modular phase for the integer part, spectral
    // phase for the remainder
    let fixture = pf.underlying();
    let phases: Vec<C64> = pf
        .fractions()
        .iter()
        .zip(fixture.eigenphases())
        .map(|(f, &lam)| {
            let (num, den) = modular_phase_numerator(&whole, *f);
            cis(TAU * (num as f64 / den as f64)) * cis(TAU * lam * frac)
        })
        .collect();
    let alpha = fixture.to_eigenbasis(&s.clone())?;
    let coords: Vec<C64> = alpha.iter().zip(&phases).map(|(a, p)| a * p).collect();
    let oracle = fixture.from_eigenbasis(&coords)?;
    let err = pure_trace_distance(&frac_run.out_state, &oracle)?;
    Ok(RunResult {
        out_state: frac_run.out_state,
        ledger: QueryLedger {
            calls_u: int_run.ledger.calls_u + frac_run.ledger.calls_u,
            calls_cu: int_run.ledger.calls_cu + frac_run.ledger.calls_cu,
            calls_uinv: int_run.ledger.calls_uinv + frac_run.ledger.calls_uinv,
            calls_cuinv: int_run.ledger.calls_cuinv + frac_run.ledger.calls_cuinv,
        },
        residual_ancilla_weight: (1.0
            - (1.0 - int_run.residual_ancilla_weight) * (1.0 - frac_run.residual_ancilla_weight))
            .max(0.0),
        err_vs_oracle: err,
    })
}

/// Runs the request on `n_samples` Haar-random inputs and aggregates the
/// error against the exact oracle; fully determined by the seed.
pub fn measure_error(
    fixture: &ExperimentFixture,
    req: &PowerRequest,
    n_samples: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Measurement> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let dim = fixture.dim();
    let mut max_err = 0.0f64;
    let mut sum_err = 0.0f64;
    let mut max_residual = 0.0f64;
    let mut ledger = QueryLedger::default();
    for i in 0..n_samples {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let s = haar_state_vector(dim, &mut rng);
        let run = run_one(fixture, req, &s, opts)?;
        max_err = max_err.max(run.err_vs_oracle);
        sum_err += run.err_vs_oracle;
        max_residual = max_residual.max(run.residual_ancilla_weight);
        if i == 0 {
            ledger = run.ledger;
        }
    }
    Ok(Measurement {
        max_err,
        mean_err: sum_err / n_samples as f64,
        max_residual,
        ledger,
        dim,
        gap: fixture.spectral().gap(),
    })
}

/// One sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub m: usize,
    pub r: usize,
    pub measurement: Measurement,
}

/// Sweeps the precision parameter over `ms` (worker pool, rows ordered by m).
/// `fixed_r` pins the repetition count; otherwise each point uses `2m + 1`.
pub fn sweep_m(
    fixture: &ExperimentFixture,
    ms: &[usize],
    t: f64,
    fixed_r: Option<usize>,
    n_samples: usize,
    seed: u64,
    opts: &RunOptions,
    threads: usize,
) -> Result<Vec<SweepPoint>> {
    if ms.is_empty() {
        return Err(Error::InvalidParameter("empty m range".into()));
    }
    let work = |&m: &usize| -> Result<SweepPoint> {
        let r = fixed_r.unwrap_or(2 * m + 1);
        let cfg = AncillaConfig::new(m, r)?;
        let req = PowerRequest {
            t: TValue::Real(t),
            cfg,
            mode: RunMode::Standard,
            phase_fn: None,
        };
        let measurement = measure_error(fixture, &req, n_samples, seed, opts)?;
        Ok(SweepPoint { m, r, measurement })
    };
    let mut points: Vec<SweepPoint> = if threads == 1 {
        ms.iter().map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads) // 0 = available parallelism
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            ms.par_iter().map(work).collect::<Result<Vec<_>>>()
        })?
    };
    points.sort_by_key(|p| p.m);
    Ok(points)
}

/// Least-squares slope of `log2(max_err)` against m; errors are floored at
/// 1e-15 so exact-regime sweeps stay finite.
pub fn log2_error_slope(points: &[SweepPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.m as f64).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| p.measurement.max_err.max(1e-15).log2())
        .collect();
    least_squares_slope(&xs, &ys)
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// One flat-file row; the CSV column order is exactly this field order, with
/// the volatile wall-clock column last.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub run_id: String,
    pub subcommand: String,
    pub m: usize,
    pub r: usize,
    pub t: String,
    pub dim: usize,
    pub gap: f64,
    pub mode: String,
    pub max_err: f64,
    pub mean_err: f64,
    pub residual_ancilla: f64,
    pub calls_u: u64,
    pub calls_cu: u64,
    pub calls_uinv: u64,
    pub calls_cuinv: u64,
    pub seed: u64,
    pub wall_ms: u64,
}

impl ExperimentRecord {
    pub const CSV_HEADER: &'static str = "run_id,subcommand,m,r,t,dim,gap,mode,max_err,mean_err,residual_ancilla,calls_u,calls_cu,calls_uinv,calls_cuinv,seed,wall_ms";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.subcommand,
            self.m,
            self.r,
            self.t,
            self.dim,
            self.gap,
            self.mode,
            self.max_err,
            self.mean_err,
            self.residual_ancilla,
            self.calls_u,
            self.calls_cu,
            self.calls_uinv,
            self.calls_cuinv,
            self.seed,
            self.wall_ms
        )
    }

    pub fn from_measurement(
        run_id: String,
        subcommand: &str,
        m: usize,
        r: usize,
        t: &str,
        mode: RunMode,
        meas: &Measurement,
        seed: u64,
        wall_ms: u64,
    ) -> Self {
        ExperimentRecord {
            run_id,
            subcommand: subcommand.to_string(),
            m,
            r,
            t: t.to_string(),
            dim: meas.dim,
            gap: meas.gap,
            mode: mode.as_str().to_string(),
            max_err: meas.max_err,
            mean_err: meas.mean_err,
            residual_ancilla: meas.max_residual,
            calls_u: meas.ledger.calls_u,
            calls_cu: meas.ledger.calls_cu,
            calls_uinv: meas.ledger.calls_uinv,
            calls_cuinv: meas.ledger.calls_cuinv,
            seed,
            wall_ms,
        }
    }
}

/// Renders records as CSV (header always present, LF endings).
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(ExperimentRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Renders records as a JSON array.
pub fn records_to_json(records: &[ExperimentRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{dyadic_fixture, identity_fixture, third_fixture};

    fn std_request(m: usize, r: usize, t: f64) -> PowerRequest {
        PowerRequest {
            t: TValue::Real(t),
            cfg: AncillaConfig::new(m, r).unwrap(),
            mode: RunMode::Standard,
            phase_fn: None,
        }
    }

    #[test]
    fn identity_fixture_measures_zero() {
        let fx = ExperimentFixture::Plain(identity_fixture(4));
        let meas =
            measure_error(&fx, &std_request(3, 3, 0.5), 8, 1, &RunOptions::default()).unwrap();
        assert!(meas.max_err < 1e-12);
        assert!(meas.max_residual < 1e-12);
    }

    #[test]
    fn dyadic_fixture_measures_exact_regime() {
        let fx = ExperimentFixture::Plain(dyadic_fixture(4, 2, 6).unwrap());
        let meas =
            measure_error(&fx, &std_request(2, 1, 0.5), 8, 2, &RunOptions::default()).unwrap();
        assert!(meas.max_err <= 1e-10, "max err {}", meas.max_err);
    }

    #[test]
    fn measurement_is_deterministic() {
        let fx = ExperimentFixture::Plain(third_fixture(9));
        let a = measure_error(&fx, &std_request(4, 9, 0.5), 16, 7, &RunOptions::default()).unwrap();
        let b = measure_error(&fx, &std_request(4, 9, 0.5), 16, 7, &RunOptions::default()).unwrap();
        assert_eq!(a.max_err.to_bits(), b.max_err.to_bits());
        assert_eq!(a.mean_err.to_bits(), b.mean_err.to_bits());
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn sweep_is_sorted_and_parallel_matches_serial() {
        let fx = ExperimentFixture::Plain(third_fixture(12));
        let opts = RunOptions::default();
        let serial = sweep_m(&fx, &[5, 3, 4], 0.5, None, 4, 3, &opts, 1).unwrap();
        let parallel = sweep_m(&fx, &[5, 3, 4], 0.5, None, 4, 3, &opts, 0).unwrap();
        let order: Vec<usize> = serial.iter().map(|p| p.m).collect();
        assert_eq!(order, vec![3, 4, 5]);
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.measurement.max_err.to_bits(), b.measurement.max_err.to_bits());
        }
    }

    #[test]
    fn error_scaling_slope_in_band() {
        // the desk-scale restatement of the O(1/2^m) error class
        let fx = ExperimentFixture::Plain(third_fixture(33));
        let points = sweep_m(
            &fx,
            &[3, 4, 5, 6, 7, 8],
            0.5,
            None,
            16,
            20081020,
            &RunOptions::default(),
            0,
        )
        .unwrap();
        let slope = log2_error_slope(&points);
        assert!(
            (-1.5..=-0.7).contains(&slope),
            "slope {slope} outside [-1.5, -0.7]; errs: {:?}",
            points.iter().map(|p| p.measurement.max_err).collect::<Vec<_>>()
        );
    }

    #[test]
    fn csv_schema_is_exact_field_order() {
        let rec = ExperimentRecord {
            run_id: "x".into(),
            subcommand: "power".into(),
            m: 2,
            r: 1,
            t: "0.5".into(),
            dim: 4,
            gap: 0.25,
            mode: "standard".into(),
            max_err: 1e-12,
            mean_err: 5e-13,
            residual_ancilla: 0.0,
            calls_u: 0,
            calls_cu: 3,
            calls_uinv: 0,
            calls_cuinv: 3,
            seed: 7,
            wall_ms: 12,
        };
        let csv = records_to_csv(&[rec]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), ExperimentRecord::CSV_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("x,power,2,1,0.5,4,0.25,standard,"));
        assert!(row.ends_with(",7,12"));
    }
}
