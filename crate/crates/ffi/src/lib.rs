//! C ABI over the fracpow simulator. Fixtures travel as opaque handles;
//! every fallible call returns an [`FpStatus`] code and writes results
//! through out-pointers. The generated header lives at `include/fracpow.h`.
//!
//! Panics never cross the boundary: all entry points catch unwinds and map
//! them to `FP_STATUS_INTERNAL`.

use fracpow::estimation::AncillaConfig;
use fracpow::experiment::{measure_error, ExperimentFixture, PowerRequest, RunMode, TValue};
use fracpow::fixtures::{dyadic_fixture, qft_fixture, third_fixture, FixtureFile};
use fracpow::power::RunOptions;
use fracpow::rational::PrimeSpectrumFixture;
use fracpow::Error;
use num_bigint::BigUint;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Opaque fixture handle; create with one of the `fp_fixture_*` constructors
/// and release with [`fp_fixture_free`].
pub struct FpFixture {
    inner: ExperimentFixture,
}

/// Status codes; nonzero means the out-parameters were not written.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpStatus {
    Ok = 0,
    /// Unspecified internal failure (a bug, not bad input).
    Internal = 1,
    /// Invalid argument, fixture, gap promise or premise.
    Invalid = 2,
    /// Width or size limit exceeded.
    Resource = 3,
}

/// Aggregated statistics of one seeded error measurement.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FpRunStats {
    /// Max pure-state trace distance to the exact spectral oracle.
    pub max_err: f64,
    pub mean_err: f64,
    /// Largest ancilla weight discarded by the all-zeros projection.
    pub max_residual: f64,
    /// Query counts of one run: plain, controlled, inverse, controlled-inverse.
    pub calls_u: u64,
    pub calls_cu: u64,
    pub calls_uinv: u64,
    pub calls_cuinv: u64,
    pub dim: u32,
    pub gap: f64,
}

/// Execution mode selector for [`fp_measure_power`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpMode {
    Standard = 0,
    InverseFree = 1,
    /// Requires a prime fixture and an integral exponent.
    ExactRational = 2,
}

fn status_of(err: &Error) -> FpStatus {
    match err {
        Error::WidthLimit { .. } | Error::ResourceLimit(_) => FpStatus::Resource,
        _ => FpStatus::Invalid,
    }
}

fn finish_fixture(
    result: Result<ExperimentFixture, Error>,
    out: *mut *mut FpFixture,
) -> FpStatus {
    match result {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(FpFixture { inner })) };
            FpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

fn guarded<F: FnOnce() -> FpStatus>(f: F) -> FpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(FpStatus::Internal)
}

/// Seeded fixture with eigenphases on the 1/2^m grid and a Haar eigenbasis.
///
/// # Safety
/// `out` must be a valid pointer to an `FpFixture*`.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_dyadic(
    dim: u32,
    m: u32,
    seed: u64,
    out: *mut *mut FpFixture,
) -> FpStatus {
    if out.is_null() {
        return FpStatus::Invalid;
    }
    guarded(|| {
        finish_fixture(
            dyadic_fixture(dim as usize, m as usize, seed).map(ExperimentFixture::Plain),
            out,
        )
    })
}

/// The fixed 1-qubit fixture with eigenphases {0, 1/3}.
///
/// # Safety
/// `out` must be a valid pointer to an `FpFixture*`.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_third(seed: u64, out: *mut *mut FpFixture) -> FpStatus {
    if out.is_null() {
        return FpStatus::Invalid;
    }
    guarded(|| finish_fixture(Ok(ExperimentFixture::Plain(third_fixture(seed))), out))
}

/// The quantum Fourier transform on `qubits` qubits as a fixture.
///
/// # Safety
/// `out` must be a valid pointer to an `FpFixture*`.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_qft(qubits: u32, out: *mut *mut FpFixture) -> FpStatus {
    if out.is_null() {
        return FpStatus::Invalid;
    }
    guarded(|| {
        finish_fixture(
            qft_fixture(qubits as usize).map(ExperimentFixture::Plain),
            out,
        )
    })
}

/// Prime-denominator spectrum over the first `b` primes.
///
/// # Safety
/// `out` must be a valid pointer to an `FpFixture*`.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_prime(
    b: u32,
    dim: u32,
    seed: u64,
    out: *mut *mut FpFixture,
) -> FpStatus {
    if out.is_null() {
        return FpStatus::Invalid;
    }
    guarded(|| {
        finish_fixture(
            PrimeSpectrumFixture::new(b as usize, dim as usize, seed)
                .map(ExperimentFixture::Prime),
            out,
        )
    })
}

/// Loads a fixture from a JSON document (the CLI `file:` schema:
/// `{dim, eigvecs: [[re,im],...] row-major, eigphases, gap}`).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_from_json(
    json: *const c_char,
    out: *mut *mut FpFixture,
) -> FpStatus {
    if json.is_null() || out.is_null() {
        return FpStatus::Invalid;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => return FpStatus::Invalid,
    };
    guarded(|| {
        let parsed: Result<ExperimentFixture, Error> = serde_json::from_str::<FixtureFile>(text)
            .map_err(Error::Json)
            .and_then(|doc| Ok(ExperimentFixture::Plain(doc.into_fixture()?)));
        finish_fixture(parsed, out)
    })
}

/// Releases a fixture handle. Accepts NULL.
///
/// # Safety
/// `fx` must be NULL or a pointer obtained from an `fp_fixture_*` constructor,
/// not freed before.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_free(fx: *mut FpFixture) {
    if !fx.is_null() {
        drop(Box::from_raw(fx));
    }
}

/// Hilbert-space dimension of the fixture; 0 on NULL.
///
/// # Safety
/// `fx` must be NULL or a live fixture handle.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_dim(fx: *const FpFixture) -> u32 {
    if fx.is_null() {
        return 0;
    }
    (*fx).inner.dim() as u32
}

/// Declared spectral gap of the fixture; 0 on NULL.
///
/// # Safety
/// `fx` must be NULL or a live fixture handle.
#[no_mangle]
pub unsafe extern "C" fn fp_fixture_gap(fx: *const FpFixture) -> f64 {
    if fx.is_null() {
        return 0.0;
    }
    (*fx).inner.spectral().gap()
}

/// Runs `U^t` on `samples` seeded Haar inputs and writes the aggregated error
/// and query statistics. `r = 0` selects the default repetition count 2m+1.
/// In `ExactRational` mode `t` must be a nonnegative integer below 2^53.
///
/// # Safety
/// `fx` must be a live fixture handle and `out` a valid stats pointer.
#[no_mangle]
pub unsafe extern "C" fn fp_measure_power(
    fx: *const FpFixture,
    t: f64,
    m: u32,
    r: u32,
    mode: FpMode,
    samples: u32,
    seed: u64,
    out: *mut FpRunStats,
) -> FpStatus {
    if fx.is_null() || out.is_null() {
        return FpStatus::Invalid;
    }
    let fixture = &(*fx).inner;
    guarded(|| {
        let reps = if r == 0 { 2 * m as usize + 1 } else { r as usize };
        let cfg = match AncillaConfig::new(m as usize, reps) {
            Ok(c) => c,
            Err(e) => return status_of(&e),
        };
        let (run_mode, t_value) = match mode {
            FpMode::Standard => (RunMode::Standard, TValue::Real(t)),
            FpMode::InverseFree => (RunMode::InverseFree, TValue::Real(t)),
            FpMode::ExactRational => {
                if !(t.is_finite() && t >= 0.0 && t.fract() == 0.0 && t < 9.0e15) {
                    return FpStatus::Invalid;
                }
                (RunMode::ExactRational, TValue::Integer(BigUint::from(t as u64)))
            }
        };
        let req = PowerRequest {
            t: t_value,
            cfg,
            mode: run_mode,
            phase_fn: None,
        };
        match measure_error(fixture, &req, samples as usize, seed, &RunOptions::default()) {
            Ok(meas) => {
                *out = FpRunStats {
                    max_err: meas.max_err,
                    mean_err: meas.mean_err,
                    max_residual: meas.max_residual,
                    calls_u: meas.ledger.calls_u,
                    calls_cu: meas.ledger.calls_cu,
                    calls_uinv: meas.ledger.calls_uinv,
                    calls_cuinv: meas.ledger.calls_cuinv,
                    dim: meas.dim as u32,
                    gap: meas.gap,
                };
                FpStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fp_status_message(status: FpStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        FpStatus::Ok => b"ok\0",
        FpStatus::Internal => b"internal error\0",
        FpStatus::Invalid => b"invalid argument or fixture\0",
        FpStatus::Resource => b"width or size limit exceeded\0",
    };
    msg.as_ptr() as *const c_char
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
