//! Exact dense state-vector simulation of fractional powers of a black-box
//! unitary, with a query-counted oracle model and a reproducible experiment
//! harness.
//!
//! The algorithm runs in three stages: coherent eigenvalue estimation onto
//! ancilla registers (with a majority-vote mode register for amplification),
//! a phase shift `e^{2πi l t / 2^m}` conditioned on the estimate, and exact
//! uncomputation. On spectra whose eigenphases are multiples of `1/2^m` the
//! construction is exact; in general the error falls off as `O(1/2^m)` under
//! a spectral-gap promise, measured here against the exact spectral oracle.
//!
//! Variants included: continued-fraction recovery for prime-denominator
//! spectra (exact arbitrary integer powers at t-independent query cost), an
//! inverse-free uncomputation for `t ≥ 2^m`, the controlled-SWAP construction
//! of a controlled box from an uncontrolled one, and generalized search over
//! an unknown eigenbasis with subspace-dimension estimation.
//!
//! Determinism: every randomized path draws from ChaCha12 (a counter-based
//! stream cipher RNG) seeded explicitly, with per-sample substreams, so all
//! experiment output is reproducible cross-platform from `(config, seed)`.

pub mod blackbox;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod fixtures;
pub mod linalg;
pub mod plot;
pub mod power;
pub mod rational;
pub mod search;

pub use blackbox::{BlackBox, Capabilities, ControlledSource, KitaevReference, QueryLedger};
pub use error::{Error, Result};
pub use estimation::{qft, AncillaConfig};
pub use experiment::{measure_error, ExperimentFixture, ExperimentRecord, PowerRequest, RunMode};
pub use fixtures::SpectralFixture;
pub use linalg::{
    apply, operator_error_sample, pure_trace_distance, tensor, DenseUnitary, StateVector,
};
pub use power::{
    fractional_apply, function_apply, gap_check, inverse_free_apply, power_apply,
    precision_for_gap_bound, RunOptions, RunResult,
};
pub use rational::{convergents, primorial, recover_eigenphase, PrimeSpectrumFixture};
pub use search::{entangled_search, estimate_subspace_dim, magnification_experiment, FlagOracle};
