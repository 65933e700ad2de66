//! Eigenvalue estimation: the QFT, standard single-register estimation, the
//! coherent majority-vote estimator with a reversible mode register, and its
//! exact uncomputation.
//!
//! Two computation routes live here:
//! - a dense circuit on an explicit `[c0..c{r-1}, mode, target]` register
//!   layout, bounded by the configured maximum width;
//! - closed-form single-run amplitudes plus a capped exponential-generating-
//!   function sum over outcome tuples, which evaluates per-eigenvector mode
//!   statistics without materializing the tuple space.

use crate::blackbox::{BlackBox, ControlledSource};
use crate::error::{Error, Result};
use crate::linalg::{cis, phase_dist_mod1, C64, DenseUnitary, Layout, StateVector};
use ndarray::Array2;
use std::f64::consts::TAU;

/// Hard default on the total simulated circuit width in qubits.
pub const DEFAULT_MAX_WIDTH: usize = 24;

/// Precision parameter `m` (grid 1/2^m) and odd repetition count `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncillaConfig {
    m: usize,
    r: usize,
}

impl AncillaConfig {
    pub fn new(m: usize, r: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        if r == 0 || r % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "repetition count r = {r} must be a positive odd integer"
            )));
        }
        Ok(AncillaConfig { m, r })
    }

    /// Default repetition count `r = 2m + 1`.
    pub fn with_default_r(m: usize) -> Result<Self> {
        AncillaConfig::new(m, 2 * m + 1)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn grid(&self) -> usize {
        1 << self.m
    }

    /// Total circuit width for a target of `n` qubits: r estimation blocks,
    /// the mode register, and the target.
    pub fn circuit_width(&self, n: usize) -> usize {
        self.m * self.r + self.m + n
    }

    pub fn check_width(&self, n: usize, max_width: usize) -> Result<()> {
        let needed = self.circuit_width(n);
        if needed > max_width {
            return Err(Error::WidthLimit {
                needed,
                max: max_width,
            });
        }
        Ok(())
    }
}

/// QFT on `m` qubits as a dense matrix; the oracle cost model counts only
/// black-box calls, so no gate decomposition is made.
pub fn qft(m: usize) -> Result<DenseUnitary> {
    if m == 0 || m > 14 {
        return Err(Error::WidthLimit { needed: m, max: 14 });
    }
    let dim = 1usize << m;
    let scale = 1.0 / (dim as f64).sqrt();
    Ok(DenseUnitary::new_unchecked(Array2::from_shape_fn(
        (dim, dim),
        |(j, k)| scale * cis(TAU * ((j * k) % dim) as f64 / dim as f64),
    )))
}

/// Most frequent value of the tuple; ties broken by the smallest value.
pub fn mode_of_tuple(tuple: &[usize]) -> usize {
    assert!(!tuple.is_empty(), "mode of an empty tuple");
    let mut best_val = usize::MAX;
    let mut best_count = 0usize;
    for &v in tuple {
        let count = tuple.iter().filter(|&&w| w == v).count();
        if count > best_count || (count == best_count && v < best_val) {
            best_count = count;
            best_val = v;
        }
    }
    best_val
}

/// Register names for the estimation circuit.
pub fn block_name(b: usize) -> String {
    format!("c{b}")
}
pub const MODE_REG: &str = "mode";
pub const TARGET_REG: &str = "target";

/// Layout `[c0(m), ..., c{r-1}(m), mode(m), target(n)]`.
pub fn circuit_layout(cfg: AncillaConfig, n: usize) -> Layout {
    let names: Vec<String> = (0..cfg.r()).map(block_name).collect();
    let mut regs: Vec<(&str, usize)> = names.iter().map(|s| (s.as_str(), cfg.m())).collect();
    regs.push((MODE_REG, cfg.m()));
    regs.push((TARGET_REG, n));
    Layout::new(regs)
}

/// Prepares `|0...0⟩ ⊗ s` on the estimation circuit layout.
pub fn prepare_circuit_state(cfg: AncillaConfig, s: &StateVector) -> Result<StateVector> {
    let n = s.dim().trailing_zeros() as usize;
    let layout = circuit_layout(cfg, n);
    let dim = layout.dim();
    let mut amps = vec![C64::default(); dim];
    amps[..s.dim()].copy_from_slice(s.amps());
    // target occupies the least significant bits, ancilla all zero
    StateVector::new(amps, layout)
}

/// Stage I over every block: QFT, controlled powers 2^0..2^{m-1}, inverse
/// QFT. Charges `r (2^m - 1)` controlled units.
pub fn stage1(
    bb: &mut BlackBox,
    state: &mut StateVector,
    cfg: AncillaConfig,
    src: ControlledSource,
) -> Result<()> {
    let f = qft(cfg.m())?;
    let f_inv = f.dagger();
    for b in 0..cfg.r() {
        let reg = block_name(b);
        state.apply_on(&f, &reg)?;
        for bit in 0..cfg.m() {
            bb.controlled_power_via(src, 1 << bit, state, &reg, bit, TARGET_REG)?;
        }
        state.apply_on(&f_inv, &reg)?;
    }
    Ok(())
}

/// Exact inverse of Stage I, charging controlled-inverse units symmetrically.
pub fn stage1_inverse(
    bb: &mut BlackBox,
    state: &mut StateVector,
    cfg: AncillaConfig,
    src: ControlledSource,
) -> Result<()> {
    let f = qft(cfg.m())?;
    let f_inv = f.dagger();
    for b in 0..cfg.r() {
        let reg = block_name(b);
        state.apply_on(&f, &reg)?;
        for bit in 0..cfg.m() {
            bb.controlled_inverse_power_via(src, 1 << bit, state, &reg, bit, TARGET_REG)?;
        }
        state.apply_on(&f_inv, &reg)?;
    }
    Ok(())
}

/// Inverse-free replacement for Stage III: per block, `QFT · C · QFT^{-1}`
/// with the *forward* controlled powers. Composed with Stage I this yields
/// the `U^{2^m}`-per-block behavior and never touches an inverse oracle.
pub fn stage3_inverse_free(
    bb: &mut BlackBox,
    state: &mut StateVector,
    cfg: AncillaConfig,
    src: ControlledSource,
) -> Result<()> {
    let f = qft(cfg.m())?;
    let f_inv = f.dagger();
    for b in 0..cfg.r() {
        let reg = block_name(b);
        state.apply_on(&f_inv, &reg)?;
        for bit in 0..cfg.m() {
            bb.controlled_power_via(src, 1 << bit, state, &reg, bit, TARGET_REG)?;
        }
        state.apply_on(&f, &reg)?;
    }
    Ok(())
}

/// Reversible mode computation: XORs `mode(y)` of the block tuple `y` into
/// the fresh mode register. Involutive, hence also the uncomputation.
pub fn toggle_mode_register(state: &mut StateVector, cfg: AncillaConfig) -> Result<()> {
    let layout = state.layout().clone();
    let m = cfg.m();
    let r = cfg.r();
    let mode_off = layout.offset_of(MODE_REG)?;
    let n = layout.width_of(TARGET_REG)?;
    let block_bits = m * r;
    let mode_and_target = m + n;
    // blocks occupy the top r*m bits: value v over them is (c0, .., c{r-1})
    let mut tuple = vec![0usize; r];
    let amps = state.amps_mut();
    for blocks in 0..(1usize << block_bits) {
        for (b, t) in tuple.iter_mut().enumerate() {
            *t = (blocks >> (m * (r - 1 - b))) & ((1 << m) - 1);
        }
        let v = mode_of_tuple(&tuple);
        if v == 0 {
            continue;
        }
        let hi = blocks << mode_and_target;
        for rest in 0..(1usize << mode_and_target) {
            let idx = hi | rest;
            let flipped = idx ^ (v << mode_off);
            if idx < flipped {
                amps.swap(idx, flipped);
            }
        }
    }
    Ok(())
}

/// Standard single-register estimation: returns the entangled
/// `(ctrl ⊗ target)` state after QFT / controlled powers / inverse QFT.
pub fn estimate_standard(
    bb: &mut BlackBox,
    s: &StateVector,
    m: usize,
    src: ControlledSource,
    max_width: usize,
) -> Result<StateVector> {
    let n = s.dim().trailing_zeros() as usize;
    if m + n > max_width {
        return Err(Error::WidthLimit {
            needed: m + n,
            max: max_width,
        });
    }
    let layout = Layout::new(vec![("ctrl", m), (TARGET_REG, n)]);
    let mut amps = vec![C64::default(); layout.dim()];
    amps[..s.dim()].copy_from_slice(s.amps());
    let mut state = StateVector::new(amps, layout)?;
    let f = qft(m)?;
    state.apply_on(&f, "ctrl")?;
    for bit in 0..m {
        bb.controlled_power_via(src, 1 << bit, &mut state, "ctrl", bit, TARGET_REG)?;
    }
    state.apply_on(&f.dagger(), "ctrl")?;
    Ok(state)
}

/// Coherent majority-vote estimation: r independent standard estimations in
/// tensor, then the reversible mode computation into a fresh m-bit register.
pub fn estimate_majority(
    bb: &mut BlackBox,
    s: &StateVector,
    cfg: AncillaConfig,
    src: ControlledSource,
    max_width: usize,
) -> Result<StateVector> {
    let n = s.dim().trailing_zeros() as usize;
    cfg.check_width(n, max_width)?;
    let mut state = prepare_circuit_state(cfg, s)?;
    stage1(bb, &mut state, cfg, src)?;
    toggle_mode_register(&mut state, cfg)?;
    Ok(state)
}

/// Stage III: uncomputes the mode register and then the r estimations. With
/// `inverse_free` the uncomputation uses only forward controlled calls.
pub fn uncompute_estimation(
    bb: &mut BlackBox,
    mut state: StateVector,
    cfg: AncillaConfig,
    src: ControlledSource,
    inverse_free: bool,
) -> Result<StateVector> {
    toggle_mode_register(&mut state, cfg)?;
    if inverse_free {
        stage3_inverse_free(bb, &mut state, cfg, src)?;
    } else {
        stage1_inverse(bb, &mut state, cfg, src)?;
    }
    Ok(state)
}

/// Closed-form single-run estimation amplitude
/// `c_l(λ) = (1/2^m) Σ_j e^{2πi j (λ - l/2^m)}`, exact on dyadic λ.
pub fn single_run_amplitude(lambda: f64, m: usize, l: usize) -> C64 {
    let grid = (1u64 << m) as f64;
    let delta = lambda - l as f64 / grid;
    let scaled = delta * grid;
    if scaled == scaled.round() {
        // λ on the estimation grid: exact concentration
        return if delta == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::default()
        };
    }
    // geometric sum: e^{πi(M-1)Δ} sin(πMΔ) / (M sin(πΔ))
    let pi = std::f64::consts::PI;
    let mag = (pi * scaled).sin() / (grid * (pi * delta).sin());
    cis(pi * (grid - 1.0) * delta) * mag
}

/// All single-run amplitudes for one eigenphase.
pub fn single_run_amplitudes(lambda: f64, m: usize) -> Vec<C64> {
    (0..1usize << m)
        .map(|l| single_run_amplitude(lambda, m, l))
        .collect()
}

/// Single-run outcome distribution `|c_l(λ)|²`.
pub fn single_run_distribution(lambda: f64, m: usize) -> Vec<f64> {
    single_run_amplitudes(lambda, m)
        .into_iter()
        .map(|a| a.norm_sqr())
        .collect()
}

/// Mode-resolved weighted sums over outcome tuples:
/// `S(l) = Σ_{y ∈ K^r : mode(y) = l} Π_i u(y_i)`.
///
/// For a fixed mode value `l` attained with count `c`, earlier values must
/// occur at most `c-1` times and later values at most `c` times; summing
/// multinomial weights under those caps reduces to coefficient extraction
/// from products of truncated exponential series, assembled here with prefix
/// and suffix products per cap.
pub fn mode_weighted_sums(u: &[C64], r: usize) -> Vec<C64> {
    let k = u.len();
    assert!(r >= 1);
    // factorials up to r (exact in f64 for any sane r)
    let mut fact = vec![1.0f64; r + 1];
    for i in 1..=r {
        fact[i] = fact[i - 1] * i as f64;
    }
    // truncated series E_cap(u x) as coefficient vectors of degree <= r
    let series = |uj: C64, cap: usize| -> Vec<C64> {
        let top = cap.min(r);
        let mut coeffs = vec![C64::default(); r + 1];
        let mut pow = C64::new(1.0, 0.0);
        for (n, coeff) in coeffs.iter_mut().enumerate().take(top + 1) {
            *coeff = pow / fact[n];
            pow *= uj;
        }
        coeffs
    };
    let mul_trunc = |a: &[C64], b: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::default(); r + 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == C64::default() {
                continue;
            }
            for (j, &bj) in b.iter().enumerate().take(r + 1 - i) {
                out[i + j] += ai * bj;
            }
        }
        out
    };

    let mut sums = vec![C64::default(); k];
    let one = {
        let mut p = vec![C64::default(); r + 1];
        p[0] = C64::new(1.0, 0.0);
        p
    };
    for count in 1..=r {
        // prefix products with cap count-1, suffix products with cap count
        let mut prefix: Vec<Vec<C64>> = Vec::with_capacity(k + 1);
        prefix.push(one.clone());
        for &uj in u.iter() {
            let next = mul_trunc(prefix.last().unwrap(), &series(uj, count - 1));
            prefix.push(next);
        }
        let mut suffix: Vec<Vec<C64>> = vec![one.clone(); k + 1];
        for l in (0..k).rev() {
            suffix[l] = mul_trunc(&suffix[l + 1], &series(u[l], count));
        }
        let rem = r - count;
        for l in 0..k {
            // u_l^count x^count / count!  ×  prefix(<l) × suffix(>l), coefficient of x^r
            let mut coeff = C64::default();
            for a in 0..=rem {
                coeff += prefix[l][a] * suffix[l + 1][rem - a];
            }
            let upow = u[l].powu(count as u32);
            sums[l] += coeff * upow / fact[count] * fact[r];
        }
    }
    sums
}

/// Exact mode distribution of r i.i.d. draws from `p`.
pub fn mode_distribution(p: &[f64], r: usize) -> Vec<f64> {
    let u: Vec<C64> = p.iter().map(|&x| C64::new(x, 0.0)).collect();
    mode_weighted_sums(&u, r).into_iter().map(|s| s.re).collect()
}

/// Weight of mode outcomes whose phase parameter lies farther than `1/2^m`
/// (mod 1) from λ.
pub fn failure_weight(mode_dist: &[f64], lambda: f64, m: usize) -> f64 {
    let grid = (1u64 << m) as f64;
    mode_dist
        .iter()
        .enumerate()
        .filter(|(l, _)| phase_dist_mod1(*l as f64 / grid, lambda) > 1.0 / grid)
        .map(|(_, &q)| q)
        .sum()
}

/// Distribution over full outcome tuples together with the modal estimate.
/// Only available when the tuple space `2^{m r}` is enumerable.
#[derive(Debug, Clone)]
pub struct EstimationOutcome {
    /// `(tuple, probability)` for every outcome tuple with nonzero weight.
    pub raw_tuples: Vec<(Vec<usize>, f64)>,
    /// Most probable mode value under the smallest-value tie rule.
    pub mode_value: usize,
    /// `mode_value / 2^m`.
    pub est_phase: f64,
}

/// Enumerates the exact tuple distribution for one eigenphase.
pub fn estimation_outcome(lambda: f64, cfg: AncillaConfig) -> Result<EstimationOutcome> {
    let bits = cfg.m() * cfg.r();
    if bits > 22 {
        return Err(Error::WidthLimit {
            needed: bits,
            max: 22,
        });
    }
    let grid = cfg.grid();
    let p = single_run_distribution(lambda, cfg.m());
    let mut raw = Vec::new();
    let mut mode_dist = vec![0.0; grid];
    let mut tuple = vec![0usize; cfg.r()];
    for packed in 0..(1usize << bits) {
        let mut prob = 1.0;
        for (b, t) in tuple.iter_mut().enumerate() {
            *t = (packed >> (cfg.m() * (cfg.r() - 1 - b))) & (grid - 1);
            prob *= p[*t];
        }
        if prob > 0.0 {
            mode_dist[mode_of_tuple(&tuple)] += prob;
            raw.push((tuple.clone(), prob));
        }
    }
    let mode_value = argmax_smallest(&mode_dist);
    Ok(EstimationOutcome {
        raw_tuples: raw,
        mode_value,
        est_phase: mode_value as f64 / grid as f64,
    })
}

/// Index of the maximum, smallest index on ties.
pub fn argmax_smallest(xs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::{BlackBox, Capabilities};
    use crate::fixtures::{dyadic_fixture, identity_fixture, SpectralFixture};
    use crate::linalg::{c, DenseUnitary, l2_distance};
    use proptest::prelude::*;

    #[test]
    fn qft_one_qubit_is_hadamard() {
        let f = qft(1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.entry(0, 0) - c(s, 0.0)).norm() < 1e-15);
        assert!((f.entry(1, 1) - c(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn qft_on_zero_is_uniform() {
        for m in 1..=4 {
            let f = qft(m).unwrap();
            let dim = 1 << m;
            let expect = 1.0 / (dim as f64).sqrt();
            for row in 0..dim {
                assert!((f.entry(row, 0) - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn qft_fourth_power_is_identity() {
        for m in 1..=4 {
            let f = qft(m).unwrap();
            let f4 = f.mul(&f).unwrap().mul(&f).unwrap().mul(&f).unwrap();
            assert!(f4.max_entry_diff(&DenseUnitary::identity(1 << m)) < 1e-12);
        }
    }

    #[test]
    fn qft_is_unitary() {
        for m in 1..=5 {
            let f = qft(m).unwrap();
            DenseUnitary::new(f.matrix().clone()).expect("QFT passes unitarity check");
        }
    }

    #[test]
    fn mode_of_tuple_cases() {
        assert_eq!(mode_of_tuple(&[3, 3, 5]), 3);
        assert_eq!(mode_of_tuple(&[2, 7, 7, 2, 1]), 2);
        assert_eq!(mode_of_tuple(&[4]), 4);
    }

    #[test]
    fn single_run_amplitude_matches_brute_sum() {
        for &lambda in &[0.0, 1.0 / 3.0, 0.2137, 0.625] {
            for m in 1..=5usize {
                let grid = 1usize << m;
                for l in 0..grid {
                    let direct: C64 = (0..grid)
                        .map(|j| {
                            cis(TAU * j as f64 * (lambda - l as f64 / grid as f64))
                        })
                        .sum::<C64>()
                        / grid as f64;
                    let closed = single_run_amplitude(lambda, m, l);
                    assert!(
                        (closed - direct).norm() < 1e-10,
                        "λ={lambda} m={m} l={l}: {closed} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn dyadic_estimation_is_exact() {
        // fixture λ = l0/2^m: control register is exactly |l0⟩
        let fx = SpectralFixture::new(DenseUnitary::identity(2), vec![0.375, 0.0], 0.25).unwrap();
        let mut bb = BlackBox::new(fx.clone(), Capabilities::ALL);
        let out = estimate_standard(
            &mut bb,
            &fx.eigenvector(0),
            3,
            ControlledSource::Direct,
            DEFAULT_MAX_WIDTH,
        )
        .unwrap();
        let dist = out.register_distribution("ctrl").unwrap();
        assert!((dist[3] - 1.0).abs() < 1e-12); // 0.375 = 3/8
        assert_eq!(bb.ledger().calls_cu, 7); // 2^3 - 1
    }

    #[test]
    fn zero_phase_estimation_lands_on_zero() {
        let fx = identity_fixture(2);
        let mut bb = BlackBox::new(fx, Capabilities::ALL);
        let s = StateVector::basis(Layout::single(TARGET_REG, 1), 1).unwrap();
        let out =
            estimate_standard(&mut bb, &s, 4, ControlledSource::Direct, DEFAULT_MAX_WIDTH)
                .unwrap();
        let dist = out.register_distribution("ctrl").unwrap();
        assert!((dist[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generic_phase_two_point_mass_exceeds_eight_over_pi_squared() {
        let lambda = 1.0 / 3.0;
        for m in 2..=6usize {
            let dist = single_run_distribution(lambda, m);
            let grid = (1usize << m) as f64;
            let lo = (lambda * grid).floor() as usize % (1 << m);
            let hi = (lambda * grid).ceil() as usize % (1 << m);
            let mass = dist[lo] + dist[hi];
            assert!(
                mass >= 8.0 / (std::f64::consts::PI * std::f64::consts::PI) - 1e-12,
                "m={m}: two-point mass {mass}"
            );
        }
    }

    #[test]
    fn circuit_distribution_matches_closed_form() {
        let lambda = 0.2137;
        let fx = SpectralFixture::new(DenseUnitary::identity(2), vec![lambda, 0.0], 0.5).unwrap();
        let mut bb = BlackBox::new(fx.clone(), Capabilities::ALL);
        let out = estimate_standard(
            &mut bb,
            &fx.eigenvector(0),
            4,
            ControlledSource::Direct,
            DEFAULT_MAX_WIDTH,
        )
        .unwrap();
        let dist = out.register_distribution("ctrl").unwrap();
        let expect = single_run_distribution(lambda, 4);
        for (a, b) in dist.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn majority_failure_weight_decreases_with_r() {
        let lambda = 1.0 / 3.0;
        let p = single_run_distribution(lambda, 3);
        let f1 = failure_weight(&mode_distribution(&p, 1), lambda, 3);
        let f5 = failure_weight(&mode_distribution(&p, 5), lambda, 3);
        assert!(f1 > 0.0);
        assert!(f5 < f1, "failure weight should shrink: r=1 {f1}, r=5 {f5}");
    }

    #[test]
    fn dp_matches_brute_force_enumeration() {
        // m = 3, r = 5: full enumeration over 8^5 outcome tuples
        let lambda = 1.0 / 3.0;
        let cfg = AncillaConfig::new(3, 5).unwrap();
        let p = single_run_distribution(lambda, 3);
        let dp = mode_distribution(&p, 5);
        let outcome = estimation_outcome(lambda, cfg).unwrap();
        let mut brute = vec![0.0; 8];
        for (tuple, prob) in &outcome.raw_tuples {
            brute[mode_of_tuple(tuple)] += prob;
        }
        for (a, b) in dp.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // and the tail agrees
        let tail_dp = failure_weight(&dp, lambda, 3);
        let tail_brute = failure_weight(&brute, lambda, 3);
        assert!((tail_dp - tail_brute).abs() < 1e-12);
    }

    #[test]
    fn dyadic_mode_register_is_deterministic() {
        let fx = SpectralFixture::new(DenseUnitary::identity(2), vec![0.25, 0.0], 0.5).unwrap();
        let cfg = AncillaConfig::new(2, 3).unwrap();
        let mut bb = BlackBox::new(fx.clone(), Capabilities::ALL);
        let out = estimate_majority(
            &mut bb,
            &fx.eigenvector(0),
            cfg,
            ControlledSource::Direct,
            DEFAULT_MAX_WIDTH,
        )
        .unwrap();
        let dist = out.register_distribution(MODE_REG).unwrap();
        assert!((dist[1] - 1.0).abs() < 1e-12); // 0.25 = 1/4 → mode 1
        let q = mode_distribution(&single_run_distribution(0.25, 2), 3);
        assert!(failure_weight(&q, 0.25, 2) < 1e-15);
    }

    #[test]
    fn circuit_mode_distribution_matches_dp() {
        let lambda = 1.0 / 3.0;
        let fx =
            SpectralFixture::new(DenseUnitary::identity(2), vec![lambda, 0.0], 0.5).unwrap();
        let cfg = AncillaConfig::new(3, 3).unwrap();
        let mut bb = BlackBox::new(fx.clone(), Capabilities::ALL);
        let out = estimate_majority(
            &mut bb,
            &fx.eigenvector(0),
            cfg,
            ControlledSource::Direct,
            DEFAULT_MAX_WIDTH,
        )
        .unwrap();
        assert_eq!(bb.ledger().calls_cu, 3 * 7);
        let dist = out.register_distribution(MODE_REG).unwrap();
        let dp = mode_distribution(&single_run_distribution(lambda, 3), 3);
        for (a, b) in dist.iter().zip(&dp) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mode_toggle_is_a_basis_permutation() {
        // reversibility on every basis input for a small width
        let cfg = AncillaConfig::new(2, 3).unwrap();
        let layout = circuit_layout(cfg, 1);
        for idx in 0..layout.dim() {
            let mut s = StateVector::basis(layout.clone(), idx).unwrap();
            toggle_mode_register(&mut s, cfg).unwrap();
            let hits: Vec<usize> = s
                .amps()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.5)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(hits.len(), 1, "permutation must map basis to basis");
            toggle_mode_register(&mut s, cfg).unwrap();
            assert!((s.amps()[idx] - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn stage1_then_inverse_is_identity() {
        let fx = dyadic_fixture(2, 2, 3).unwrap();
        let cfg = AncillaConfig::new(2, 3).unwrap();
        let mut bb = BlackBox::new(fx, Capabilities::ALL);
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha12Rng::seed_from_u64(8)
        };
        let s = crate::linalg::haar_state_vector(2, &mut rng)
            .with_layout(Layout::single(TARGET_REG, 1))
            .unwrap();
        let entangled = estimate_majority(
            &mut bb,
            &s,
            cfg,
            ControlledSource::Direct,
            DEFAULT_MAX_WIDTH,
        )
        .unwrap();
        let restored =
            uncompute_estimation(&mut bb, entangled, cfg, ControlledSource::Direct, false)
                .unwrap();
        let expect = prepare_circuit_state(cfg, &s).unwrap();
        assert!(l2_distance(&restored, &expect).unwrap() < 1e-12);
        assert_eq!(bb.ledger().calls_cu, bb.ledger().calls_cuinv);
    }

    proptest! {
        #[test]
        fn mode_sums_total_is_power_of_sum(
            res in proptest::collection::vec(-1.0f64..1.0, 2..6),
            ims in proptest::collection::vec(-1.0f64..1.0, 2..6),
            r in 1usize..6,
        ) {
            let k = res.len().min(ims.len());
            let u: Vec<C64> = (0..k).map(|i| C64::new(res[i], ims[i])).collect();
            let sums = mode_weighted_sums(&u, r);
            let total: C64 = sums.into_iter().sum();
            let direct = u.iter().sum::<C64>().powu(r as u32);
            prop_assert!((total - direct).norm() < 1e-9 * (1.0 + direct.norm()));
        }

        #[test]
        fn mode_distribution_is_a_distribution(
            weights in proptest::collection::vec(0.0f64..1.0, 2..8),
            r in prop::sample::select(vec![1usize, 3, 5]),
        ) {
            let total: f64 = weights.iter().sum();
            prop_assume!(total > 1e-6);
            let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let q = mode_distribution(&p, r);
            prop_assert!(q.iter().all(|&x| x >= -1e-12));
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
