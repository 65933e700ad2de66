//! Dense complex linear algebra: labeled-register state vectors, unitary
//! matrices, tensor products and the pure-state distance metrics used by the
//! error analysis.
//!
//! Conventions:
//! - A state over registers `[r0, r1, ...]` stores `r0` in the most
//!   significant bits of the basis index, so `a ⊗ b` acts with `a` on the
//!   leading register.
//! - All stored states are normalized to 1 within [`NORM_TOL`]; unitarity is
//!   checked entrywise within [`UNITARY_TOL`] by the validating constructor.

use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;

pub const NORM_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

/// Default ceiling on dense matrix dimension (14 qubits).
pub const MAX_MATRIX_DIM: usize = 1 << 14;

pub type C64 = Complex64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// e^{i*angle}
pub fn cis(angle: f64) -> C64 {
    C64::new(angle.cos(), angle.sin())
}

/// A named register inside a state-vector layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub qubits: usize,
}

/// Ordered list of named registers; the first register occupies the most
/// significant bits of the basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    regs: Vec<Register>,
}

impl Layout {
    pub fn new(regs: Vec<(&str, usize)>) -> Self {
        Layout {
            regs: regs
                .into_iter()
                .map(|(name, qubits)| Register {
                    name: name.to_string(),
                    qubits,
                })
                .collect(),
        }
    }

    pub fn single(name: &str, qubits: usize) -> Self {
        Layout::new(vec![(name, qubits)])
    }

    pub fn total_qubits(&self) -> usize {
        self.regs.iter().map(|r| r.qubits).sum()
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    /// Bit offset of a register (shift of its least significant bit).
    pub fn offset_of(&self, name: &str) -> Result<usize> {
        let pos = self.position(name)?;
        Ok(self.regs[pos + 1..].iter().map(|r| r.qubits).sum())
    }

    pub fn width_of(&self, name: &str) -> Result<usize> {
        let pos = self.position(name)?;
        Ok(self.regs[pos].qubits)
    }

    /// Value held by register `name` in basis index `idx`.
    pub fn value_of(&self, idx: usize, name: &str) -> Result<usize> {
        let off = self.offset_of(name)?;
        let w = self.width_of(name)?;
        Ok((idx >> off) & ((1 << w) - 1))
    }
}

/// Normalized complex amplitude vector over a labeled register layout.
#[derive(Debug, Clone)]
pub struct StateVector {
    amps: Vec<C64>,
    layout: Layout,
}

impl StateVector {
    /// Builds a state from raw amplitudes, validating finiteness, the norm
    /// invariant and the layout width.
    pub fn new(amps: Vec<C64>, layout: Layout) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "state norm^2 = {n}, not 1 within {NORM_TOL}"
            )));
        }
        Ok(StateVector { amps, layout })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: Layout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dim {dim}"
            )));
        }
        let mut amps = vec![C64::default(); dim];
        amps[index] = c(1.0, 0.0);
        Ok(StateVector { amps, layout })
    }

    /// All-zeros state on a single anonymous register.
    pub fn zero(qubits: usize) -> Self {
        StateVector::basis(Layout::single("q", qubits), 0).expect("valid basis state")
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product `self ⊗ other`, concatenating layouts.
    pub fn kron(&self, other: &StateVector) -> Result<StateVector> {
        let dim = self.dim() * other.dim();
        if dim > MAX_MATRIX_DIM * MAX_MATRIX_DIM {
            return Err(Error::ResourceLimit(format!("state dim {dim}")));
        }
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut regs = self.layout.regs.clone();
        regs.extend(other.layout.regs.clone());
        Ok(StateVector {
            amps,
            layout: Layout { regs },
        })
    }

    /// Applies a unitary on the full index space.
    pub fn apply_full(&mut self, u: &DenseUnitary) -> Result<()> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        let mut out = vec![C64::default(); self.dim()];
        for (row, out_a) in out.iter_mut().enumerate() {
            let mut acc = C64::default();
            for (col, a) in self.amps.iter().enumerate() {
                acc += u.mat[(row, col)] * a;
            }
            *out_a = acc;
        }
        self.amps = out;
        Ok(())
    }

    /// Applies a `2^w x 2^w` unitary to the named register.
    pub fn apply_on(&mut self, u: &DenseUnitary, reg: &str) -> Result<()> {
        let off = self.layout.offset_of(reg)?;
        let w = self.layout.width_of(reg)?;
        let sub = 1usize << w;
        if u.dim() != sub {
            return Err(Error::RegisterMismatch {
                name: reg.to_string(),
                width: w,
                needed: u.dim().trailing_zeros() as usize,
            });
        }
        let mask = (sub - 1) << off;
        let mut tmp = vec![C64::default(); sub];
        let mut base = 0usize;
        while base < self.amps.len() {
            if base & mask != 0 {
                base += 1;
                continue;
            }
            for (v, t) in tmp.iter_mut().enumerate() {
                *t = self.amps[base | (v << off)];
            }
            for row in 0..sub {
                let mut acc = C64::default();
                for (col, t) in tmp.iter().enumerate() {
                    acc += u.mat[(row, col)] * t;
                }
                self.amps[base | (row << off)] = acc;
            }
            base += 1;
        }
        Ok(())
    }

    /// Applies a unitary to `target` conditioned on bit `ctrl_bit` of register
    /// `ctrl` being 1.
    pub fn apply_controlled_on(
        &mut self,
        u: &DenseUnitary,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        if ctrl == target {
            return Err(Error::InvalidParameter(
                "control and target registers must differ".into(),
            ));
        }
        let ctrl_off = self.layout.offset_of(ctrl)?;
        let ctrl_w = self.layout.width_of(ctrl)?;
        if ctrl_bit >= ctrl_w {
            return Err(Error::RegisterMismatch {
                name: ctrl.to_string(),
                width: ctrl_w,
                needed: ctrl_bit + 1,
            });
        }
        let off = self.layout.offset_of(target)?;
        let w = self.layout.width_of(target)?;
        let sub = 1usize << w;
        if u.dim() != sub {
            return Err(Error::RegisterMismatch {
                name: target.to_string(),
                width: w,
                needed: u.dim().trailing_zeros() as usize,
            });
        }
        let mask = (sub - 1) << off;
        let ctrl_mask = 1usize << (ctrl_off + ctrl_bit);
        let mut tmp = vec![C64::default(); sub];
        for base in 0..self.amps.len() {
            if base & mask != 0 || base & ctrl_mask == 0 {
                continue;
            }
            for (v, t) in tmp.iter_mut().enumerate() {
                *t = self.amps[base | (v << off)];
            }
            for row in 0..sub {
                let mut acc = C64::default();
                for (col, t) in tmp.iter().enumerate() {
                    acc += u.mat[(row, col)] * t;
                }
                self.amps[base | (row << off)] = acc;
            }
        }
        Ok(())
    }

    /// Multiplies each amplitude by `table[v]` where `v` is the value of the
    /// named register. `table` must have one entry per register value.
    pub fn phase_by_register_value(&mut self, reg: &str, table: &[C64]) -> Result<()> {
        let off = self.layout.offset_of(reg)?;
        let w = self.layout.width_of(reg)?;
        if table.len() != 1 << w {
            return Err(Error::RegisterMismatch {
                name: reg.to_string(),
                width: w,
                needed: table.len().trailing_zeros() as usize,
            });
        }
        let m = (1usize << w) - 1;
        for (idx, a) in self.amps.iter_mut().enumerate() {
            *a *= table[(idx >> off) & m];
        }
        Ok(())
    }

    /// Marginal probability distribution over the values of one register.
    pub fn register_distribution(&self, reg: &str) -> Result<Vec<f64>> {
        let off = self.layout.offset_of(reg)?;
        let w = self.layout.width_of(reg)?;
        let mut dist = vec![0.0; 1 << w];
        let m = (1usize << w) - 1;
        for (idx, a) in self.amps.iter().enumerate() {
            dist[(idx >> off) & m] += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Probability that every listed register reads all-zeros.
    pub fn weight_on_zero(&self, regs: &[&str]) -> Result<f64> {
        let mut mask = 0usize;
        for reg in regs {
            let off = self.layout.offset_of(reg)?;
            let w = self.layout.width_of(reg)?;
            mask |= ((1usize << w) - 1) << off;
        }
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects the listed registers onto all-zeros and renormalizes,
    /// returning the kept weight and the state on the remaining registers.
    pub fn project_zero(&self, regs: &[&str]) -> Result<(f64, StateVector)> {
        let weight = self.weight_on_zero(regs)?;
        if weight < 1e-300 {
            return Err(Error::InvalidParameter(
                "projection onto all-zero ancilla has vanishing weight".into(),
            ));
        }
        let kept: Vec<Register> = self
            .layout
            .regs
            .iter()
            .filter(|r| !regs.contains(&r.name.as_str()))
            .cloned()
            .collect();
        let kept_layout = Layout { regs: kept };
        let mut amps = vec![C64::default(); kept_layout.dim()];
        let scale = weight.sqrt();
        // Gather amplitudes where projected registers are zero, re-packing the
        // kept registers in their original order.
        let kept_names: Vec<&str> = kept_layout.regs.iter().map(|r| r.name.as_str()).collect();
        for (idx, a) in self.amps.iter().enumerate() {
            let mut zero = true;
            for reg in regs {
                if self.layout.value_of(idx, reg)? != 0 {
                    zero = false;
                    break;
                }
            }
            if !zero {
                continue;
            }
            let mut packed = 0usize;
            for name in &kept_names {
                let w = self.layout.width_of(name)?;
                packed = (packed << w) | self.layout.value_of(idx, name)?;
            }
            amps[packed] = a / scale;
        }
        Ok((weight, StateVector {
            amps,
            layout: kept_layout,
        }))
    }

    /// Relabels the layout without touching amplitudes (widths must match).
    pub fn with_layout(mut self, layout: Layout) -> Result<Self> {
        if layout.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: layout.dim(),
            });
        }
        self.layout = layout;
        Ok(self)
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub(crate) fn from_parts_unchecked(amps: Vec<C64>, layout: Layout) -> Self {
        StateVector { amps, layout }
    }
}

/// Dense unitary matrix.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    mat: Array2<C64>,
}

impl DenseUnitary {
    /// Validating constructor: checks squareness, the dimension limit and
    /// `U†U = I` entrywise within [`UNITARY_TOL`].
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let (r, cdim) = mat.dim();
        if r != cdim {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: cdim,
            });
        }
        if r == 0 || r > MAX_MATRIX_DIM {
            return Err(Error::ResourceLimit(format!("matrix dim {r}")));
        }
        let u = DenseUnitary { mat };
        let dev = u.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary: max |(U†U - I)| = {dev:.3e}"
            )));
        }
        Ok(u)
    }

    /// Trusted constructor for matrices unitary by construction.
    pub fn new_unchecked(mat: Array2<C64>) -> Self {
        DenseUnitary { mat }
    }

    pub fn identity(dim: usize) -> Self {
        DenseUnitary {
            mat: Array2::from_shape_fn((dim, dim), |(i, j)| {
                if i == j {
                    c(1.0, 0.0)
                } else {
                    C64::default()
                }
            }),
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        DenseUnitary::new(Array2::from_shape_fn((dim, dim), |(i, j)| f(i, j)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn dagger(&self) -> DenseUnitary {
        DenseUnitary {
            mat: self.mat.t().mapv(|v| v.conj()),
        }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &DenseUnitary) -> Result<DenseUnitary> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rhs.dim(),
            });
        }
        Ok(DenseUnitary {
            mat: self.mat.dot(&rhs.mat),
        })
    }

    /// Column `j` as a bare amplitude vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        self.mat.column(j).to_vec()
    }

    /// U|v⟩ for a bare vector.
    pub fn apply_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut out = vec![C64::default(); v.len()];
        for (row, o) in out.iter_mut().enumerate() {
            let mut acc = C64::default();
            for (col, a) in v.iter().enumerate() {
                acc += self.mat[(row, col)] * a;
            }
            *o = acc;
        }
        Ok(out)
    }

    pub fn max_entry_diff(&self, other: &DenseUnitary) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn unitarity_deviation(&self) -> f64 {
        let prod = self.dagger().mat.dot(&self.mat);
        let dim = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j { c(1.0, 0.0) } else { C64::default() };
                dev = dev.max((prod[(i, j)] - expect).norm());
            }
        }
        dev
    }
}

/// Kronecker product `a ⊗ b` with `a` on the most significant bits.
pub fn tensor(a: &DenseUnitary, b: &DenseUnitary) -> Result<DenseUnitary> {
    let dim = a.dim().checked_mul(b.dim()).unwrap_or(usize::MAX);
    if dim > MAX_MATRIX_DIM {
        return Err(Error::ResourceLimit(format!(
            "tensor product dim {dim} exceeds {MAX_MATRIX_DIM}"
        )));
    }
    let db = b.dim();
    let mat = Array2::from_shape_fn((dim, dim), |(i, j)| {
        a.entry(i / db, j / db) * b.entry(i % db, j % db)
    });
    Ok(DenseUnitary { mat })
}

/// U|s⟩ as a new state; output norm is preserved by unitarity.
pub fn apply(u: &DenseUnitary, s: &StateVector) -> Result<StateVector> {
    let mut out = s.clone();
    out.apply_full(u)?;
    Ok(out)
}

/// Trace-norm distance between pure states: `2 sqrt(1 - |⟨u|v⟩|^2)`.
///
/// Evaluated as `2 ‖v - ⟨u|v⟩u‖₂` (identical for normalized states), which
/// stays accurate when the states nearly coincide, where the textbook form
/// loses half the mantissa to cancellation.
pub fn pure_trace_distance(u: &StateVector, v: &StateVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(trace_distance_raw(u.amps(), v.amps()))
}

pub(crate) fn trace_distance_raw(u: &[C64], v: &[C64]) -> f64 {
    let ov: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let perp_sq: f64 = u
        .iter()
        .zip(v)
        .map(|(a, b)| (b - ov * a).norm_sqr())
        .sum();
    (2.0 * perp_sq.max(0.0).sqrt()).min(2.0)
}

/// ‖|u⟩ - |v⟩‖₂
pub fn l2_distance(u: &StateVector, v: &StateVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(u.amps()
        .iter()
        .zip(v.amps())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Haar-random pure state: i.i.d. standard complex Gaussian entries,
/// normalized. Each entry is `sqrt(-ln u) * e^{i 2π v}` for uniform `u, v`.
pub fn haar_state(dim: usize, rng: &mut ChaCha12Rng) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen::<f64>();
                let u2: f64 = rng.gen::<f64>();
                let radius = (-(1.0 - u1).ln()).sqrt();
                radius * cis(TAU * u2)
            })
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for a in &mut v {
                *a /= norm;
            }
            return v;
        }
    }
}

pub fn haar_state_vector(dim: usize, rng: &mut ChaCha12Rng) -> StateVector {
    let n = dim.trailing_zeros() as usize;
    StateVector::from_parts_unchecked(haar_state(dim, rng), Layout::single("q", n))
}

/// Haar-random unitary: Gaussian matrix orthonormalized by modified
/// Gram-Schmidt with one re-orthogonalization pass.
pub fn haar_unitary(dim: usize, rng: &mut ChaCha12Rng) -> DenseUnitary {
    let mut cols: Vec<Vec<C64>> = (0..dim).map(|_| haar_state(dim, rng)).collect();
    for i in 0..dim {
        for _pass in 0..2 {
            for j in 0..i {
                let proj: C64 = cols[j]
                    .iter()
                    .zip(&cols[i])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let prev = cols[j].clone();
                for (x, p) in cols[i].iter_mut().zip(&prev) {
                    *x -= proj * p;
                }
            }
        }
        let norm = cols[i].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut cols[i] {
            *x /= norm;
        }
    }
    let mat = Array2::from_shape_fn((dim, dim), |(r, ccol)| cols[ccol][r]);
    DenseUnitary { mat }
}

/// Sampled maximization of the pure-state trace distance between `a|Φ⟩` and
/// `b|Φ⟩` over Haar-random `|Φ⟩`; deterministic given the seed.
pub fn operator_error_sample(
    a: &DenseUnitary,
    b: &DenseUnitary,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    use rand::SeedableRng;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut max = 0.0f64;
    for _ in 0..n_samples {
        let phi = haar_state(a.dim(), &mut rng);
        let av = a.apply_vec(&phi)?;
        let bv = b.apply_vec(&phi)?;
        max = max.max(trace_distance_raw(&av, &bv));
    }
    Ok(max)
}

/// Mod-1 distance between two phase parameters in [0,1).
pub fn phase_dist_mod1(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}
