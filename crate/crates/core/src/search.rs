//! Generalized quantum search over an unknown eigenbasis: a maximally
//! entangled start gives equal support on every eigenvector, the flip oracle
//! marks a d-dimensional eigenspace, and the amplitude-amplification iterate
//! `Q = -A U_0 A^{-1} O` rotates by 2θ per step with `sin²θ = d/N`.
//! Also: subspace-dimension estimation via phase estimation of Q, and the
//! error-magnification experiment pitting an exact inverse square root
//! against this library's approximate square root.

use crate::error::{Error, Result};
use crate::estimation::{argmax_smallest, qft, AncillaConfig};
use crate::fixtures::{all_roots_fixture, qft_matrix, SpectralFixture};
use crate::linalg::{c, cis, C64, DenseUnitary, Layout, StateVector};
use crate::power::{per_eigenvector_gammas, phase_table, UncomputeKind};
use ndarray::Array2;
use std::f64::consts::{PI, TAU};

/// Phase-flip oracle marking an orthonormal set of flagged states:
/// `O|φ⟩ = -|φ⟩` on their span, identity on the complement.
#[derive(Debug, Clone)]
pub struct FlagOracle {
    dim: usize,
    flagged: Vec<Vec<C64>>,
}

impl FlagOracle {
    pub fn new(dim: usize, flagged: Vec<Vec<C64>>) -> Result<Self> {
        if flagged.is_empty() || flagged.len() > dim {
            return Err(Error::InvalidParameter(format!(
                "flagged subspace dimension {} not in 1..={dim}",
                flagged.len()
            )));
        }
        for (i, v) in flagged.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            for (j, w) in flagged.iter().enumerate().take(i + 1) {
                let ov: C64 = w.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (ov.norm() - expect).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(
                        "flagged states must be orthonormal".into(),
                    ));
                }
            }
        }
        Ok(FlagOracle { dim, flagged })
    }

    /// Flags eigenvectors of a fixture by index.
    pub fn from_fixture(fixture: &SpectralFixture, indices: &[usize]) -> Result<Self> {
        let flagged = indices
            .iter()
            .map(|&k| {
                if k >= fixture.dim() {
                    return Err(Error::InvalidParameter(format!(
                        "eigenvector index {k} out of range"
                    )));
                }
                Ok(fixture.eigenbasis().column(k))
            })
            .collect::<Result<Vec<_>>>()?;
        FlagOracle::new(fixture.dim(), flagged)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flagged_dim(&self) -> usize {
        self.flagged.len()
    }

    /// O on an N-dimensional vector.
    pub fn reflect(&self, v: &mut [C64]) {
        for phi in &self.flagged {
            let ov: C64 = phi.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, p) in v.iter_mut().zip(phi) {
                *x -= 2.0 * ov * p;
            }
        }
    }

    /// O ⊗ I on an N²-dimensional vector (first register flagged).
    pub fn reflect_first_register(&self, v: &mut [C64]) {
        let n = self.dim;
        for phi in &self.flagged {
            for y in 0..n {
                let mut ov = C64::default();
                for x in 0..n {
                    ov += phi[x].conj() * v[x * n + y];
                }
                for x in 0..n {
                    v[x * n + y] -= 2.0 * ov * phi[x];
                }
            }
        }
    }

    pub fn matrix(&self) -> DenseUnitary {
        let mut mat = Array2::from_shape_fn((self.dim, self.dim), |(i, j)| {
            if i == j {
                c(1.0, 0.0)
            } else {
                C64::default()
            }
        });
        for phi in &self.flagged {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    mat[(i, j)] -= 2.0 * phi[i] * phi[j].conj();
                }
            }
        }
        DenseUnitary::new_unchecked(mat)
    }
}

/// The search iterate `Q = -A U_0 A^{-1} O` as an explicit operator. When
/// `A` acts on the oracle's space the plain oracle is used; when `A` acts on
/// its square (the entangled construction) the oracle extends as `O ⊗ I`.
pub fn search_iterate(a: &DenseUnitary, oracle: &FlagOracle) -> Result<DenseUnitary> {
    let n = oracle.dim();
    let o = if a.dim() == n {
        oracle.matrix()
    } else if a.dim() == n * n {
        crate::linalg::tensor(&oracle.matrix(), &DenseUnitary::identity(n))?
    } else {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.dim(),
        });
    };
    let dim = a.dim();
    let mut u0 = Array2::from_shape_fn((dim, dim), |(i, j)| {
        if i == j {
            c(1.0, 0.0)
        } else {
            C64::default()
        }
    });
    u0[(0, 0)] = c(-1.0, 0.0);
    let u0 = DenseUnitary::new_unchecked(u0);
    let q = a.mul(&u0)?.mul(&a.dagger())?.mul(&o)?;
    Ok(DenseUnitary::new_unchecked(q.matrix().mapv(|v| -v)))
}

/// One run of the entangled generalized search.
#[derive(Debug, Clone)]
pub struct SearchRun {
    pub k: usize,
    pub theta: f64,
    pub success_prob: f64,
    pub out_state: StateVector,
}

/// State preparation `A: |0,0⟩ ↦ Σ_x |x⟩|x⟩ / √N`, realized as the QFT on the
/// left register followed by a transversal XOR copy. Applies matrix-free.
struct EntangleA {
    n: usize,
    f: DenseUnitary,
    f_inv: DenseUnitary,
}

impl EntangleA {
    fn new(qubits: usize) -> Result<Self> {
        let f = qft(qubits)?;
        let f_inv = f.dagger();
        Ok(EntangleA {
            n: 1 << qubits,
            f,
            f_inv,
        })
    }

    fn apply_left(&self, v: &mut [C64], u: &DenseUnitary) {
        let n = self.n;
        let mut col = vec![C64::default(); n];
        for y in 0..n {
            for (x, cv) in col.iter_mut().enumerate() {
                *cv = v[x * n + y];
            }
            for x in 0..n {
                let mut acc = C64::default();
                for (xp, cv) in col.iter().enumerate() {
                    acc += u.entry(x, xp) * cv;
                }
                v[x * n + y] = acc;
            }
        }
    }

    fn xor_copy(&self, v: &mut [C64]) {
        // |x⟩|y⟩ → |x⟩|y ⊕ x⟩, an involutive permutation
        let n = self.n;
        for x in 0..n {
            for y in 0..n {
                let yx = y ^ x;
                if y < yx {
                    v.swap(x * n + y, x * n + yx);
                }
            }
        }
    }

    fn forward(&self, v: &mut [C64]) {
        self.apply_left(v, &self.f);
        self.xor_copy(v);
    }

    fn inverse(&self, v: &mut [C64]) {
        self.xor_copy(v);
        self.apply_left(v, &self.f_inv);
    }
}

/// Applies `Q^k` to the entangled start and reports the overlap with the
/// ideal flagged entangled target `Σ_{j<d} |φ_j⟩|φ_j^*⟩ / √d`.
pub fn entangled_search(
    fixture: &SpectralFixture,
    flagged_indices: &[usize],
    k: usize,
) -> Result<SearchRun> {
    let oracle = FlagOracle::from_fixture(fixture, flagged_indices)?;
    let n = fixture.dim();
    let qubits = fixture.qubits();
    let d = oracle.flagged_dim();
    let theta = ((d as f64 / n as f64).sqrt()).asin();
    let a = EntangleA::new(qubits)?;

    let mut v = vec![C64::default(); n * n];
    v[0] = c(1.0, 0.0);
    a.forward(&mut v);
    for _ in 0..k {
        oracle.reflect_first_register(&mut v);
        a.inverse(&mut v);
        v[0] = -v[0];
        a.forward(&mut v);
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    // target = Σ_{j<d} |φ_j⟩|φ_j^*⟩ / √d
    let mut overlap = C64::default();
    let scale = 1.0 / (d as f64).sqrt();
    for &j in flagged_indices {
        let phi = fixture.eigenbasis().column(j);
        for x in 0..n {
            for y in 0..n {
                // ⟨φ_j, φ_j^*| v: conj(φ[x] · conj(φ[y])) · v[x,y]
                overlap += phi[x].conj() * phi[y] * v[x * n + y] * scale;
            }
        }
    }
    let layout = Layout::new(vec![("left", qubits), ("right", qubits)]);
    Ok(SearchRun {
        k,
        theta,
        success_prob: overlap.norm_sqr(),
        out_state: StateVector::from_parts_unchecked(v, layout),
    })
}

/// Closed-form success probability `sin²((2k+1)θ)`.
pub fn predicted_success(theta: f64, k: usize) -> f64 {
    ((2 * k + 1) as f64 * theta).sin().powi(2)
}

/// Outcome of subspace-dimension estimation.
#[derive(Debug, Clone)]
pub struct DimEstimate {
    /// `round(N sin²(π l/2^p))` at the modal outcome l.
    pub d_hat: usize,
    pub modal_outcome: usize,
    /// Full outcome distribution of the p-bit estimate.
    pub distribution: Vec<f64>,
}

/// Estimates the flagged-subspace dimension by phase estimation of the
/// search iterate on the entangled start: the iterate rotates by 2θ, so the
/// p-bit estimate l maps to `d ≈ N sin²(π l / 2^p)`.
pub fn estimate_subspace_dim(
    fixture: &SpectralFixture,
    flagged_indices: &[usize],
    precision_bits: usize,
) -> Result<DimEstimate> {
    let n = fixture.dim();
    if n > 16 {
        return Err(Error::ResourceLimit(format!(
            "dimension estimation simulates the N² iterate densely; N = {n} > 16"
        )));
    }
    let oracle = FlagOracle::from_fixture(fixture, flagged_indices)?;
    let qubits = fixture.qubits();
    let a_mat = {
        // A as a matrix: columns are A|x,y⟩, built from the matrix-free form
        let a = EntangleA::new(qubits)?;
        let dim = n * n;
        let mut mat = Array2::from_elem((dim, dim), C64::default());
        for col in 0..dim {
            let mut v = vec![C64::default(); dim];
            v[col] = c(1.0, 0.0);
            a.forward(&mut v);
            for (row, val) in v.into_iter().enumerate() {
                mat[(row, col)] = val;
            }
        }
        DenseUnitary::new_unchecked(mat)
    };
    let q = search_iterate(&a_mat, &oracle)?;

    // phase estimation of q on A|0,0⟩
    let p = precision_bits;
    let tgt_qubits = 2 * qubits;
    let layout = Layout::new(vec![("ctrl", p), ("tgt", tgt_qubits)]);
    let mut amps = vec![C64::default(); layout.dim()];
    {
        let mut v = vec![C64::default(); n * n];
        v[0] = c(1.0, 0.0);
        EntangleA::new(qubits)?.forward(&mut v);
        amps[..n * n].copy_from_slice(&v);
    }
    let mut state = StateVector::new(amps, layout)?;
    let f = qft(p)?;
    state.apply_on(&f, "ctrl")?;
    let mut q_pow = q;
    for bit in 0..p {
        state.apply_controlled_on(&q_pow, "ctrl", bit, "tgt")?;
        if bit + 1 < p {
            q_pow = q_pow.mul(&q_pow)?;
        }
    }
    state.apply_on(&f.dagger(), "ctrl")?;
    let distribution = state.register_distribution("ctrl")?;
    let modal = argmax_smallest(&distribution);
    let angle = PI * modal as f64 / (1u64 << p) as f64;
    let d_hat = (n as f64 * angle.sin().powi(2)).round() as usize;
    Ok(DimEstimate {
        d_hat,
        modal_outcome: modal,
        distribution,
    })
}

/// One row of the magnification experiment.
#[derive(Debug, Clone, Copy)]
pub struct MagnificationRow {
    pub k: usize,
    pub error_prob: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone)]
pub struct MagnificationResult {
    pub rows: Vec<MagnificationRow>,
    /// Number of eigenvectors whose composed phase fell in the flag window.
    pub flagged_count: usize,
    /// Largest per-eigenvector ancilla weight discarded when idealizing the
    /// approximate square root as a unitary.
    pub discarded_weight: f64,
    pub theta: f64,
}

/// Error-magnification experiment: the fixture carries every 2^m-th root of
/// unity with equal multiplicities, shifted by `-ε` with `ε = 1/2^m` radians
/// so one eigenphase wraps across the branch cut. `U₁` is the exact inverse
/// square root; `U₂` is this library's approximate square root idealized as a
/// unitary (ancilla-zero projection, renormalized per eigenvector, discarded
/// weight reported). Generalized search then hunts for eigenvectors of
/// `U₁U₂` with phase within `π/2^{m-1}` of π; with the exact square root in
/// place of `U₂` the flag set is empty and the error column sits at the
/// floor.
pub fn magnification_experiment(
    m: usize,
    k_list: &[usize],
    seed: u64,
    exact_sqrt: bool,
) -> Result<MagnificationResult> {
    if m < 2 || m > 7 {
        return Err(Error::InvalidParameter(format!(
            "magnification experiment supports m in 2..=7, got {m}"
        )));
    }
    let n = 1usize << m;
    let fixture = all_roots_fixture(m, seed)?;
    // e^{iθ}U with θ = -ε: eigenphases shift down by ε' = ε/2π and the
    // phase-0 eigenvector wraps to 1 - ε'
    let eps_radians = 1.0 / n as f64;
    let eps = eps_radians / TAU;
    let shifted = fixture.phase_shifted(eps)?;

    let cfg = AncillaConfig::with_default_r(m)?;
    let table = phase_table(m, |x| 0.5 * x);
    let (phases_u2, discarded_weight): (Vec<C64>, f64) = if exact_sqrt {
        (
            shifted
                .eigenphases()
                .iter()
                .map(|&mu| cis(PI * mu))
                .collect(),
            0.0,
        )
    } else {
        let gammas = per_eigenvector_gammas(&shifted, &table, cfg, UncomputeKind::Inverse);
        let mut discarded = 0.0f64;
        let phases = gammas
            .iter()
            .map(|g| {
                let mag = g.norm();
                discarded = discarded.max(1.0 - mag * mag);
                if mag < 1e-12 {
                    c(1.0, 0.0)
                } else {
                    g / mag
                }
            })
            .collect();
        (phases, discarded)
    };

    // U₁U₂ eigenvalues and the phase-window flag set
    let window = PI / (1u64 << (m - 1)) as f64;
    let mut flagged = Vec::new();
    for (k, (&mu, u2)) in shifted.eigenphases().iter().zip(&phases_u2).enumerate() {
        let v = cis(-PI * mu) * u2;
        let phase = v.arg().rem_euclid(TAU);
        if (phase - PI).abs() <= window {
            flagged.push(k);
        }
    }
    let d = flagged.len();
    let theta = ((d as f64 / n as f64).sqrt()).asin();
    let rows = k_list
        .iter()
        .map(|&k| {
            if d == 0 {
                return Ok(MagnificationRow {
                    k,
                    error_prob: 0.0,
                    predicted: 0.0,
                });
            }
            let run = entangled_search(&fixture, &flagged, k)?;
            Ok(MagnificationRow {
                k,
                error_prob: run.success_prob,
                predicted: predicted_success(theta, k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MagnificationResult {
        rows,
        flagged_count: d,
        discarded_weight,
        theta,
    })
}

/// Uniform-superposition preparation on an N-dimensional space (plain Grover
/// A), provided for the non-entangled iterate tests.
pub fn uniform_preparation(qubits: usize) -> Result<DenseUnitary> {
    Ok(qft_matrix(qubits))
}
