//! Continued-fraction eigenphase recovery for prime-denominator spectra and
//! the exact large-power pipeline: estimate, snap the estimate to the unique
//! nearby small-denominator fraction, apply `e^{2πi (t·ℓ mod p)/p}` with
//! exact integer arithmetic, uncompute. Oracle cost depends on (m, r) only,
//! never on t.

use crate::blackbox::{BlackBox, Capabilities};
use crate::error::{Error, Result};
use crate::estimation::AncillaConfig;
use crate::fixtures::SpectralFixture;
use crate::linalg::{cis, haar_unitary, C64, StateVector};
use crate::power::{run_pipeline, RunOptions, RunResult, UncomputeKind};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;
use std::fmt;

/// Reduced fraction; phase fractions keep `0 ≤ num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Fraction {
            num: num / g,
            den: den / g,
        }
    }

    /// Reduces to the `[0,1)` phase representative (num mod den, re-reduced).
    pub fn phase_reduced(self) -> Self {
        Fraction::new(self.num % self.den, self.den)
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// All convergents of `h/q` in order of increasing denominator, ending at
/// `h/q` in lowest terms. Requires `0 ≤ h < q`.
pub fn convergents(h: u64, q: u64) -> Vec<Fraction> {
    assert!(q > 0 && h < q, "need 0 <= h < q");
    // Euclid on (h, q); standard recurrences seeded with the virtual
    // convergents p_{-2}/q_{-2} = 0/1 and p_{-1}/q_{-1} = 1/0
    let (mut a, mut b) = (h, q);
    let (mut p_prev, mut p_curr) = (0u64, 1u64);
    let (mut q_prev, mut q_curr) = (1u64, 0u64);
    let mut out = Vec::new();
    loop {
        let digit = if b == 0 { break } else { a / b };
        let p_next = digit * p_curr + p_prev;
        let q_next = digit * q_curr + q_prev;
        // first digit of h/q with h < q is 0 → first convergent 0/1
        out.push(Fraction {
            num: p_next,
            den: q_next,
        });
        let rem = a % b;
        a = b;
        b = rem;
        p_prev = p_curr;
        p_curr = p_next;
        q_prev = q_curr;
        q_curr = q_next;
    }
    out
}

/// Snaps the m-bit estimate `h/2^m` to the unique convergent with denominator
/// at most `p_max` within distance `1/2^m`; the comparison is exact integer
/// arithmetic. The result is reduced to its `[0,1)` phase representative, so
/// a wrapped estimate of phase 0 recovers `0/1`.
pub fn recover_eigenphase(h: u64, m: usize, p_max: u64) -> Option<Fraction> {
    let q = 1u64 << m;
    for conv in convergents(h, q) {
        if conv.den > p_max {
            continue;
        }
        // |h/q - num/den| <= 1/q  ⇔  |h·den - num·q| <= den
        let lhs = (h as i128 * conv.den as i128 - conv.num as i128 * q as i128).unsigned_abs();
        if lhs <= conv.den as u128 {
            return Some(conv.phase_reduced());
        }
    }
    None
}

/// First `b` primes.
pub fn first_primes(b: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(b);
    let mut n = 2u64;
    while primes.len() < b {
        if primes.iter().all(|&p| n % p != 0) {
            primes.push(n);
        }
        n += 1;
    }
    primes
}

/// Product of the first `b` primes, arbitrary precision.
pub fn primorial(b: usize) -> BigUint {
    assert!(b >= 1);
    first_primes(b)
        .into_iter()
        .fold(BigUint::from(1u32), |acc, p| acc * BigUint::from(p))
}

/// A fixture whose eigenphases are fractions `ℓ_k/p_k` with denominators
/// among the first `b` primes; the unitary's order is the primorial when
/// every prime occurs with a nonzero numerator.
#[derive(Debug, Clone)]
pub struct PrimeSpectrumFixture {
    b: usize,
    primes: Vec<u64>,
    fractions: Vec<Fraction>,
    underlying: SpectralFixture,
}

impl PrimeSpectrumFixture {
    /// Seeded builder: eigenvector 0 carries `0/1`, eigenvectors `1..=b`
    /// carry `1/p_k` (so every prime is present), the rest draw seeded
    /// random `ℓ/p`. Requires `dim ≥ b + 1`.
    pub fn new(b: usize, dim: usize, seed: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidParameter("b must be >= 1".into()));
        }
        if dim < b + 1 {
            return Err(Error::InvalidParameter(format!(
                "dim {dim} too small for b = {b} (need >= {})",
                b + 1
            )));
        }
        let primes = first_primes(b);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut fractions = vec![Fraction::new(0, 1)];
        for &p in &primes {
            fractions.push(Fraction::new(1, p));
        }
        while fractions.len() < dim {
            let p = primes[rng.gen_range(0..primes.len())];
            let l = rng.gen_range(0..p);
            fractions.push(Fraction::new(l, p));
        }
        Self::with_fractions(b, fractions, seed)
    }

    /// Builds from explicit fractions (validated against the first-b-primes
    /// denominator rule) and a seeded Haar eigenbasis.
    pub fn with_fractions(b: usize, fractions: Vec<Fraction>, seed: u64) -> Result<Self> {
        let primes = first_primes(b);
        let dim = fractions.len();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        for f in &fractions {
            if f.den != 1 && !primes.contains(&f.den) {
                return Err(Error::InvalidFixture(format!(
                    "denominator {} is not among the first {b} primes",
                    f.den
                )));
            }
            if f.num >= f.den {
                return Err(Error::InvalidFixture(format!(
                    "fraction {f} is not a phase representative"
                )));
            }
        }
        let phases: Vec<f64> = fractions.iter().map(|f| f.value()).collect();
        let max_phase = phases.iter().cloned().fold(0.0f64, f64::max);
        let gap = 1.0 - max_phase;
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
        let basis = haar_unitary(dim, &mut rng);
        let underlying = SpectralFixture::new(basis, phases, gap)?;
        Ok(PrimeSpectrumFixture {
            b,
            primes,
            fractions,
            underlying,
        })
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn fractions(&self) -> &[Fraction] {
        &self.fractions
    }

    pub fn underlying(&self) -> &SpectralFixture {
        &self.underlying
    }

    pub fn dim(&self) -> usize {
        self.underlying.dim()
    }

    pub fn largest_prime(&self) -> u64 {
        *self.primes.last().expect("b >= 1")
    }

    fn second_largest_prime(&self) -> u64 {
        if self.b >= 2 {
            self.primes[self.b - 2]
        } else {
            1
        }
    }

    /// Smallest `m` satisfying the uniqueness premise `2^m > 2 p_b p_{b-1}`.
    pub fn required_m(&self) -> usize {
        let bound = 2 * self.largest_prime() * self.second_largest_prime();
        let mut m = 1usize;
        while (1u64 << m) <= bound {
            m += 1;
        }
        m
    }

    pub fn premise_holds(&self, m: usize) -> bool {
        m >= self.required_m()
    }

    /// Exact per-eigenvector oracle phases `e^{2πi (t ℓ_k mod p_k)/p_k}`; the
    /// exponent numerator is computed with integer arithmetic, so arbitrary
    /// `t` loses no precision.
    pub fn oracle_phases(&self, t: &BigUint) -> Vec<C64> {
        self.fractions
            .iter()
            .map(|f| {
                let (num, den) = modular_phase_numerator(t, *f);
                cis(TAU * num as f64 / den as f64)
            })
            .collect()
    }
}

/// `(t·ℓ mod p, p)` with exact arithmetic.
pub fn modular_phase_numerator(t: &BigUint, frac: Fraction) -> (u64, u64) {
    let p = frac.den;
    let tp_big = t % BigUint::from(p);
    let tp = tp_big.iter_u64_digits().next().unwrap_or(0);
    let num = ((tp as u128 * frac.num as u128) % p as u128) as u64;
    (num, p)
}

/// Stage II table for the recovery pipeline: mode value `l` recovers
/// `(ℓ, p)` and contributes `e^{2πi (t ℓ mod p)/p}`; unrecoverable values
/// contribute no phase.
pub fn recovery_phase_table(t: &BigUint, m: usize, p_max: u64) -> Vec<C64> {
    (0..1u64 << m)
        .map(|l| match recover_eigenphase(l, m, p_max) {
            Some(frac) => {
                let (num, den) = modular_phase_numerator(t, frac);
                cis(TAU * num as f64 / den as f64)
            }
            None => C64::new(1.0, 0.0),
        })
        .collect()
}

/// Applies `U^t` for an arbitrary-precision integer `t`: estimation, coherent
/// continued-fraction recovery on the mode register, the exact modular phase,
/// and uncomputation. Query counts are a function of (m, r, dim) only.
pub fn exact_power_apply(
    pf: &PrimeSpectrumFixture,
    s: &StateVector,
    t: &BigUint,
    cfg: AncillaConfig,
    opts: &RunOptions,
) -> Result<RunResult> {
    if !pf.premise_holds(cfg.m()) {
        return Err(Error::PremiseViolation {
            required_m: pf.required_m(),
        });
    }
    if !opts.force {
        let report = crate::power::gap_check(pf.underlying(), pf.underlying().gap(), cfg.m());
        if !report.ok() {
            return Err(Error::GapViolation(report.describe()));
        }
    }
    let mut bb = BlackBox::new(pf.underlying().clone(), Capabilities::ALL);
    let table = recovery_phase_table(t, cfg.m(), pf.largest_prime());
    let oracle_phases = pf.oracle_phases(t);
    run_pipeline(
        &mut bb,
        s,
        &table,
        &oracle_phases,
        cfg,
        UncomputeKind::Inverse,
        opts,
    )
}
