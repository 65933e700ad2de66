//! Spectral fixtures: test unitaries stored as an explicit eigenbasis plus
//! eigenphases, so every approximation in the crate can be checked against an
//! exact oracle. No general eigensolver exists here on purpose — fixtures
//! carry their own ground truth.

use crate::error::{Error, Result};
use crate::linalg::{c, cis, haar_unitary, C64, DenseUnitary, Layout, StateVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

/// A unitary given as eigenvectors (columns of `eigvecs`) and eigenphases
/// `λ_k ∈ [0,1)` (eigenvalue `e^{2πiλ_k}`), with a declared spectral gap `g`:
/// no eigenphase lies in the open interval `(1-g, 1)`.
#[derive(Debug, Clone)]
pub struct SpectralFixture {
    eigvecs: DenseUnitary,
    phases: Vec<f64>,
    gap: f64,
}

impl SpectralFixture {
    /// Validates the eigenbasis (unitary), the phase range and the gap
    /// promise. Phases are reduced mod 1 and otherwise stored as supplied.
    pub fn new(eigvecs: DenseUnitary, phases: Vec<f64>, gap: f64) -> Result<Self> {
        if !eigvecs.dim().is_power_of_two() {
            return Err(Error::InvalidFixture(format!(
                "dimension {} is not a power of two",
                eigvecs.dim()
            )));
        }
        if phases.len() != eigvecs.dim() {
            return Err(Error::InvalidFixture(format!(
                "{} eigenphases for dimension {}",
                phases.len(),
                eigvecs.dim()
            )));
        }
        if !(gap > 0.0 && gap <= 1.0) {
            return Err(Error::InvalidFixture(format!("gap {gap} not in (0,1]")));
        }
        let phases: Vec<f64> = phases
            .into_iter()
            .map(|p| {
                if !p.is_finite() {
                    return Err(Error::InvalidFixture("non-finite eigenphase".into()));
                }
                Ok(if (0.0..1.0).contains(&p) { p } else { p.rem_euclid(1.0) })
            })
            .collect::<Result<_>>()?;
        for (k, &p) in phases.iter().enumerate() {
            if p > 1.0 - gap {
                return Err(Error::InvalidFixture(format!(
                    "eigenphase {p} of eigenvector {k} violates the gap promise (must be <= {})",
                    1.0 - gap
                )));
            }
        }
        Ok(SpectralFixture {
            eigvecs,
            phases,
            gap,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigvecs.dim()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn eigenphases(&self) -> &[f64] {
        &self.phases
    }

    pub fn eigenbasis(&self) -> &DenseUnitary {
        &self.eigvecs
    }

    /// Eigenvector `k` as a state on a single `target` register.
    pub fn eigenvector(&self, k: usize) -> StateVector {
        StateVector::from_parts_unchecked(
            self.eigvecs.column(k),
            Layout::single("target", self.qubits()),
        )
    }

    /// The exact oracle: `U^t = P diag(e^{2πi λ_k t}) P†`, using the
    /// primitive branch on the `[0,1)` phase representatives. Accepts any
    /// finite `t` (negative powers are used internally for uncomputation).
    pub fn spectral_power(&self, t: f64) -> DenseUnitary {
        assert!(t.is_finite(), "power exponent must be finite");
        let d = self.dim();
        let p = self.eigvecs.matrix();
        let mut scaled = Array2::from_elem((d, d), C64::default());
        for k in 0..d {
            let phase = cis(TAU * self.phases[k] * t);
            for i in 0..d {
                scaled[(i, k)] = p[(i, k)] * phase;
            }
        }
        DenseUnitary::new_unchecked(scaled.dot(&self.eigvecs.dagger().matrix().view()))
    }

    /// The fixture's assembled matrix, `spectral_power(1)`.
    pub fn matrix(&self) -> DenseUnitary {
        self.spectral_power(1.0)
    }

    /// Coordinates of `s` in the eigenbasis: `α = P† s`.
    pub fn to_eigenbasis(&self, s: &StateVector) -> Result<Vec<C64>> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        Ok(self.eigvecs.dagger().apply_vec(s.amps())?)
    }

    /// Rebuilds a state from eigenbasis coordinates (normalizing).
    pub fn from_eigenbasis(&self, coeffs: &[C64]) -> Result<StateVector> {
        let v = self.eigvecs.apply_vec(coeffs)?;
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidParameter("zero-norm eigenbasis image".into()));
        }
        Ok(StateVector::from_parts_unchecked(
            v.into_iter().map(|a| a / norm).collect(),
            Layout::single("target", self.qubits()),
        ))
    }

    /// Same fixture with every eigenphase shifted by `-delta` (mod 1); the
    /// spectrum of `e^{-2πi delta} U`. The gap is recomputed from the shifted
    /// phases.
    pub fn phase_shifted(&self, delta: f64) -> Result<SpectralFixture> {
        let phases: Vec<f64> = self
            .phases
            .iter()
            .map(|p| (p - delta).rem_euclid(1.0))
            .collect();
        let max = phases.iter().cloned().fold(0.0f64, f64::max);
        let gap = (1.0 - max).max(f64::MIN_POSITIVE);
        SpectralFixture::new(self.eigvecs.clone(), phases, gap)
    }
}

/// Identity spectrum: all eigenphases zero, computational eigenbasis.
pub fn identity_fixture(dim: usize) -> SpectralFixture {
    SpectralFixture::new(DenseUnitary::identity(dim), vec![0.0; dim], 1.0)
        .expect("identity fixture is valid")
}

/// Pauli-Z spectrum {0, 1/2} in the computational basis.
pub fn z_fixture() -> SpectralFixture {
    SpectralFixture::new(DenseUnitary::identity(2), vec![0.0, 0.5], 0.5)
        .expect("Z fixture is valid")
}

/// The fixed 1-qubit fixture λ = {0, 1/3} used by the error-scaling sweeps,
/// with a seeded Haar eigenbasis.
pub fn third_fixture(seed: u64) -> SpectralFixture {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let basis = haar_unitary(2, &mut rng);
    SpectralFixture::new(basis, vec![0.0, 1.0 / 3.0], 0.5).expect("third fixture is valid")
}

/// Seeded dyadic fixture: eigenphases `ℓ_k / 2^m` with a Haar eigenbasis and
/// declared gap `1/2^m`.
pub fn dyadic_fixture(dim: usize, m: usize, seed: u64) -> Result<SpectralFixture> {
    if m == 0 || m > 20 {
        return Err(Error::InvalidParameter(format!("dyadic m = {m}")));
    }
    let grid = 1u64 << m;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..dim)
        .map(|_| rng.gen_range(0..grid) as f64 / grid as f64)
        .collect();
    let basis = haar_unitary(dim, &mut rng);
    SpectralFixture::new(basis, phases, 1.0 / grid as f64)
}

/// Seeded gapped fixture with arbitrary (non-dyadic) eigenphases in
/// `[0, 1-gap]` and a Haar eigenbasis.
pub fn random_gapped_fixture(dim: usize, gap: f64, seed: u64) -> Result<SpectralFixture> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * (1.0 - gap)).collect();
    let basis = haar_unitary(dim, &mut rng);
    SpectralFixture::new(basis, phases, gap)
}

/// Every `2^m`-th root of unity once (equal multiplicities), eigenphases
/// `k/2^m`, with a seeded Haar eigenbasis. The spectrum fills the circle, so
/// the declared gap is the smallest representable positive value; this
/// fixture deliberately has no usable gap.
pub fn all_roots_fixture(m: usize, seed: u64) -> Result<SpectralFixture> {
    let dim = 1usize << m;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let basis = haar_unitary(dim, &mut rng);
    let phases: Vec<f64> = (0..dim).map(|k| k as f64 / dim as f64).collect();
    let gap = 1.0 / dim as f64;
    SpectralFixture::new(basis, phases, gap)
}

/// The QFT matrix on `n` qubits: entries `e^{2πi jk / 2^n} / sqrt(2^n)`.
pub fn qft_matrix(n: usize) -> DenseUnitary {
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    DenseUnitary::new_unchecked(Array2::from_shape_fn((dim, dim), |(j, k)| {
        scale * cis(TAU * ((j * k) % dim) as f64 / dim as f64)
    }))
}

/// QFT as a spectral fixture. The QFT has order four, so its eigenvalues are
/// fourth roots of unity (phases 0, 1/4, 1/2, 3/4) and an explicit eigenbasis
/// can be built from the projectors `P_s = (1/4) Σ_a i^{-as} F^a` without a
/// general eigensolver: orthonormalize each projector's columns.
pub fn qft_fixture(n: usize) -> Result<SpectralFixture> {
    let dim = 1usize << n;
    let f = qft_matrix(n);
    let f2 = f.mul(&f)?;
    let f3 = f2.mul(&f)?;
    let powers = [DenseUnitary::identity(dim), f, f2, f3];

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(dim);
    let mut phases: Vec<f64> = Vec::with_capacity(dim);
    for s in 0..4usize {
        // P_s = (1/4) Σ_a ω^{-as} F^a with ω = i
        let mut proj = Array2::from_elem((dim, dim), C64::default());
        for (a, fp) in powers.iter().enumerate() {
            let w = cis(-TAU * (a * s) as f64 / 4.0) * c(0.25, 0.0);
            proj += &fp.matrix().mapv(|v| v * w);
        }
        let rank = {
            let tr: C64 = (0..dim).map(|i| proj[(i, i)]).sum();
            tr.re.round() as usize
        };
        let mut kept = 0usize;
        for col in 0..dim {
            if kept == rank {
                break;
            }
            let mut v: Vec<C64> = (0..dim).map(|r| proj[(r, col)]).collect();
            for _pass in 0..2 {
                for prev in &columns {
                    let ov: C64 = prev.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, p) in v.iter_mut().zip(prev) {
                        *x -= ov * p;
                    }
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for x in &mut v {
                    *x /= norm;
                }
                columns.push(v);
                phases.push(s as f64 / 4.0);
                kept += 1;
            }
        }
        if kept != rank {
            return Err(Error::InvalidFixture(format!(
                "QFT eigenspace for phase {s}/4 has rank {rank}, extracted {kept}"
            )));
        }
    }
    let basis = DenseUnitary::new(Array2::from_shape_fn((dim, dim), |(r, col)| {
        columns[col][r]
    }))?;
    SpectralFixture::new(basis, phases, 0.25)
}

/// Serializable fixture document used by the CLI `--spectrum file:` loader.
#[derive(Debug, Serialize, Deserialize)]
pub struct FixtureFile {
    pub dim: usize,
    /// Row-major eigenvector matrix, one `[re, im]` pair per entry.
    pub eigvecs: Vec<[f64; 2]>,
    pub eigphases: Vec<f64>,
    pub gap: f64,
}

impl FixtureFile {
    pub fn from_fixture(fx: &SpectralFixture) -> Self {
        let d = fx.dim();
        let mut eigvecs = Vec::with_capacity(d * d);
        for r in 0..d {
            for col in 0..d {
                let e = fx.eigenbasis().entry(r, col);
                eigvecs.push([e.re, e.im]);
            }
        }
        FixtureFile {
            dim: d,
            eigvecs,
            eigphases: fx.eigenphases().to_vec(),
            gap: fx.gap(),
        }
    }

    pub fn into_fixture(self) -> Result<SpectralFixture> {
        if !self.dim.is_power_of_two() {
            return Err(Error::InvalidFixture(format!(
                "dim {} is not a power of two",
                self.dim
            )));
        }
        if self.eigvecs.len() != self.dim * self.dim {
            return Err(Error::InvalidFixture(format!(
                "eigvecs has {} entries, expected {}",
                self.eigvecs.len(),
                self.dim * self.dim
            )));
        }
        let d = self.dim;
        let mat = Array2::from_shape_fn((d, d), |(r, col)| {
            let e = self.eigvecs[r * d + col];
            c(e[0], e[1])
        });
        SpectralFixture::new(DenseUnitary::new(mat)?, self.eigphases, self.gap)
    }
}

pub fn load_fixture(path: &Path) -> Result<SpectralFixture> {
    let text = std::fs::read_to_string(path)?;
    let doc: FixtureFile = serde_json::from_str(&text)?;
    doc.into_fixture()
}

pub fn save_fixture(fx: &SpectralFixture, path: &Path) -> Result<()> {
    let doc = FixtureFile::from_fixture(fx);
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{apply, l2_distance, pure_trace_distance};

    #[test]
    fn identity_spectrum_any_power_is_identity() {
        let fx = identity_fixture(4);
        let half = fx.spectral_power(0.5);
        assert!(half.max_entry_diff(&DenseUnitary::identity(4)) < 1e-14);
    }

    #[test]
    fn z_fixture_half_power_is_s_gate() {
        // e^{2πi (1/2)(1/2)} = e^{iπ/2} = i, forced by the primitive branch
        let fx = z_fixture();
        let s = fx.spectral_power(0.5);
        assert!((s.entry(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((s.entry(1, 1) - c(0.0, 1.0)).norm() < 1e-14);
        assert!(s.entry(0, 1).norm() < 1e-14 && s.entry(1, 0).norm() < 1e-14);
    }

    #[test]
    fn quarter_spectrum_square_matches_matrix_product() {
        // QFT-like spectrum {0, 1/4, 1/2, 3/4} on a Haar basis
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let basis = haar_unitary(4, &mut rng);
        let fx = SpectralFixture::new(basis, vec![0.0, 0.25, 0.5, 0.75], 0.25).unwrap();
        let sq = fx.spectral_power(2.0);
        let direct = fx.matrix().mul(&fx.matrix()).unwrap();
        assert!(sq.max_entry_diff(&direct) < 1e-10);
    }

    #[test]
    fn spectral_power_one_is_assembled_matrix() {
        let fx = dyadic_fixture(8, 3, 99).unwrap();
        assert!(fx.spectral_power(1.0).max_entry_diff(&fx.matrix()) < 1e-10);
        DenseUnitary::new(fx.matrix().matrix().clone()).expect("assembled matrix is unitary");
    }

    #[test]
    fn spectral_power_group_law() {
        let fx = random_gapped_fixture(4, 0.3, 5).unwrap();
        for (a, b) in [(0.25, 0.5), (0.1, 0.7), (1.0, 1.5)] {
            let lhs = fx.spectral_power(a).mul(&fx.spectral_power(b)).unwrap();
            let rhs = fx.spectral_power(a + b);
            assert!(lhs.max_entry_diff(&rhs) < 1e-9);
        }
    }

    #[test]
    fn eigenvector_roundtrip() {
        let fx = dyadic_fixture(4, 2, 1).unwrap();
        let v = fx.eigenvector(2);
        let coeffs = fx.to_eigenbasis(&v).unwrap();
        for (k, cf) in coeffs.iter().enumerate() {
            let expect = if k == 2 { 1.0 } else { 0.0 };
            assert!((cf.norm() - expect).abs() < 1e-10);
        }
        let back = fx.from_eigenbasis(&coeffs).unwrap();
        assert!(l2_distance(&v, &back).unwrap() < 1e-10);
    }

    #[test]
    fn eigenvector_is_fixed_by_power_up_to_phase() {
        let fx = random_gapped_fixture(4, 0.4, 8).unwrap();
        let v = fx.eigenvector(1);
        let out = apply(&fx.spectral_power(0.5), &v).unwrap();
        assert!(pure_trace_distance(&v, &out).unwrap() < 1e-10);
    }

    #[test]
    fn qft_fixture_reassembles_qft() {
        for n in 1..=3 {
            let fx = qft_fixture(n).unwrap();
            let err = fx.matrix().max_entry_diff(&qft_matrix(n));
            assert!(err < 1e-10, "n={n}: reassembly error {err:.3e}");
        }
    }

    #[test]
    fn gap_promise_enforced() {
        let bad = SpectralFixture::new(DenseUnitary::identity(2), vec![0.0, 0.99], 0.05);
        assert!(bad.is_err());
    }

    #[test]
    fn fixture_file_roundtrip() {
        let fx = dyadic_fixture(4, 2, 13).unwrap();
        let doc = FixtureFile::from_fixture(&fx);
        let text = serde_json::to_string(&doc).unwrap();
        let back: FixtureFile = serde_json::from_str(&text).unwrap();
        let fx2 = back.into_fixture().unwrap();
        assert!(fx.matrix().max_entry_diff(&fx2.matrix()) < 1e-12);
        assert_eq!(fx.eigenphases(), fx2.eigenphases());
    }
}
