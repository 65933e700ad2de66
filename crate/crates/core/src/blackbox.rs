//! Query-counted black box over a hidden unitary, plus the controlled-SWAP
//! construction of a controlled black box from an uncontrolled one.
//!
//! Cost model: a controlled power `c-U^j` costs `j` units of `calls_cu`; a
//! controlled inverse power costs `j` units of `calls_cuinv`; one plain
//! (inverse) application costs one unit of `calls_u` (`calls_uinv`). Each
//! pass through the controlled-SWAP sandwich consumes one plain call.

use crate::error::{Error, Result};
use crate::fixtures::SpectralFixture;
use crate::linalg::{c, cis, C64, DenseUnitary, StateVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;

/// Exact count of oracle invocations, the complexity currency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct QueryLedger {
    pub calls_u: u64,
    pub calls_cu: u64,
    pub calls_uinv: u64,
    pub calls_cuinv: u64,
}

impl QueryLedger {
    /// Controlled-call units, forward plus inverse.
    pub fn controlled_units(&self) -> u64 {
        self.calls_cu + self.calls_cuinv
    }

    pub fn total(&self) -> u64 {
        self.calls_u + self.calls_cu + self.calls_uinv + self.calls_cuinv
    }
}

/// Which oracle variants a black box exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub plain: bool,
    pub controlled: bool,
    pub inverse: bool,
}

impl Capabilities {
    pub const ALL: Capabilities = Capabilities {
        plain: true,
        controlled: true,
        inverse: true,
    };
    /// No inverse oracle: the regime of the inverse-free variant.
    pub const NO_INVERSE: Capabilities = Capabilities {
        plain: true,
        controlled: true,
        inverse: false,
    };
    /// Only the plain box: the regime of the controlled-SWAP construction.
    pub const PLAIN_ONLY: Capabilities = Capabilities {
        plain: true,
        controlled: false,
        inverse: false,
    };
}

/// How controlled applications are realized: directly from the controlled
/// capability, or through the controlled-SWAP construction with a retained
/// phase reference (costing plain calls instead).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlledSource {
    Direct,
    Kitaev(KitaevReference),
}

/// The reference state retained by the controlled-SWAP construction. A mixed
/// reference is realized by sampling one eigenvector index uniformly at run
/// start and holding it fixed, so every use shares one consistent phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KitaevReference {
    Eigenvector(usize),
    MixedSeeded(u64),
}

/// Query-counted wrapper around a hidden [`SpectralFixture`].
#[derive(Debug, Clone)]
pub struct BlackBox {
    hidden: SpectralFixture,
    caps: Capabilities,
    ledger: QueryLedger,
}

impl BlackBox {
    pub fn new(hidden: SpectralFixture, caps: Capabilities) -> Self {
        BlackBox {
            hidden,
            caps,
            ledger: QueryLedger::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.hidden.dim()
    }

    pub fn qubits(&self) -> usize {
        self.hidden.qubits()
    }

    pub fn gap(&self) -> f64 {
        self.hidden.gap()
    }

    pub fn capabilities(&self) -> Capabilities {
        self.caps
    }

    pub fn ledger(&self) -> QueryLedger {
        self.ledger
    }

    pub fn reset_ledger(&mut self) {
        self.ledger = QueryLedger::default();
    }

    /// Escape hatch for oracles and error measurement; not part of the
    /// query interface.
    pub(crate) fn fixture(&self) -> &SpectralFixture {
        &self.hidden
    }

    /// Adds synthesized counts (used by the factorized engine, whose per-stage
    /// totals are closed-form).
    pub(crate) fn charge(&mut self, delta: QueryLedger) {
        self.ledger.calls_u += delta.calls_u;
        self.ledger.calls_cu += delta.calls_cu;
        self.ledger.calls_uinv += delta.calls_uinv;
        self.ledger.calls_cuinv += delta.calls_cuinv;
    }

    /// Applies the hidden U to `target`; one unit of `calls_u`.
    pub fn apply(&mut self, s: &mut StateVector, target: &str) -> Result<()> {
        if !self.caps.plain {
            return Err(Error::CapabilityDisabled("plain"));
        }
        s.apply_on(&self.hidden.matrix(), target)?;
        self.ledger.calls_u += 1;
        Ok(())
    }

    /// Applies the hidden U^{-1} to `target`; one unit of `calls_uinv`.
    pub fn apply_inverse(&mut self, s: &mut StateVector, target: &str) -> Result<()> {
        if !self.caps.inverse {
            return Err(Error::CapabilityDisabled("inverse"));
        }
        s.apply_on(&self.hidden.spectral_power(-1.0), target)?;
        self.ledger.calls_uinv += 1;
        Ok(())
    }

    /// `c-U^j` controlled on bit `ctrl_bit` of register `ctrl`; charges `j`
    /// units of `calls_cu`. `j = 0` is the identity and charges nothing.
    pub fn controlled_power(
        &mut self,
        j: u64,
        s: &mut StateVector,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        if !self.caps.controlled {
            return Err(Error::CapabilityDisabled("controlled"));
        }
        if j == 0 {
            return Ok(());
        }
        s.apply_controlled_on(&self.hidden.spectral_power(j as f64), ctrl, ctrl_bit, target)?;
        self.ledger.calls_cu += j;
        Ok(())
    }

    /// `c-U^{-j}`; charges `j` units of `calls_cuinv`. Requires both the
    /// controlled and the inverse capability.
    pub fn controlled_inverse_power(
        &mut self,
        j: u64,
        s: &mut StateVector,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        if !self.caps.controlled {
            return Err(Error::CapabilityDisabled("controlled"));
        }
        if !self.caps.inverse {
            return Err(Error::CapabilityDisabled("inverse"));
        }
        if j == 0 {
            return Ok(());
        }
        s.apply_controlled_on(
            &self.hidden.spectral_power(-(j as f64)),
            ctrl,
            ctrl_bit,
            target,
        )?;
        self.ledger.calls_cuinv += j;
        Ok(())
    }

    /// Resolves a Kitaev reference to the retained eigenvector index.
    pub fn resolve_reference(&self, reference: KitaevReference) -> Result<usize> {
        match reference {
            KitaevReference::Eigenvector(k) => {
                if k >= self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        got: k,
                    });
                }
                Ok(k)
            }
            KitaevReference::MixedSeeded(seed) => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                Ok(rng.gen_range(0..self.dim()))
            }
        }
    }

    /// The effective controlled operation produced by the controlled-SWAP
    /// sandwich with reference eigenvector `k`: `c-(e^{-2πiλ_k} U)`, up to a
    /// global phase.
    pub fn kitaev_effective(&self, reference: KitaevReference) -> Result<DenseUnitary> {
        let k = self.resolve_reference(reference)?;
        let lambda = self.hidden.eigenphases()[k];
        Ok(controlled_op(
            &scale_phase(&self.hidden.matrix(), -TAU * lambda),
        ))
    }

    /// Applies `[c-(e^{-2πiλ} U)]^j` via `j` passes of the controlled-SWAP
    /// sandwich, consuming `j` plain calls. Only the plain capability is
    /// needed.
    pub fn kitaev_controlled_power(
        &mut self,
        reference: KitaevReference,
        j: u64,
        s: &mut StateVector,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        if !self.caps.plain {
            return Err(Error::CapabilityDisabled("plain"));
        }
        if j == 0 {
            return Ok(());
        }
        let k = self.resolve_reference(reference)?;
        let lambda = self.hidden.eigenphases()[k];
        let op = scale_phase(&self.hidden.spectral_power(j as f64), -TAU * lambda * j as f64);
        s.apply_controlled_on(&op, ctrl, ctrl_bit, target)?;
        self.ledger.calls_u += j;
        Ok(())
    }

    /// Inverse of the sandwich (built from the plain inverse box):
    /// `[c-(e^{-2πiλ} U)]^{-j}`; consumes `j` units of `calls_uinv`.
    pub fn kitaev_controlled_inverse_power(
        &mut self,
        reference: KitaevReference,
        j: u64,
        s: &mut StateVector,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        if !self.caps.inverse {
            return Err(Error::CapabilityDisabled("inverse"));
        }
        if j == 0 {
            return Ok(());
        }
        let k = self.resolve_reference(reference)?;
        let lambda = self.hidden.eigenphases()[k];
        let op = scale_phase(
            &self.hidden.spectral_power(-(j as f64)),
            TAU * lambda * j as f64,
        );
        s.apply_controlled_on(&op, ctrl, ctrl_bit, target)?;
        self.ledger.calls_uinv += j;
        Ok(())
    }

    /// Routed controlled power: direct oracle or Kitaev sandwich.
    pub fn controlled_power_via(
        &mut self,
        src: ControlledSource,
        j: u64,
        s: &mut StateVector,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        match src {
            ControlledSource::Direct => self.controlled_power(j, s, ctrl, ctrl_bit, target),
            ControlledSource::Kitaev(r) => {
                self.kitaev_controlled_power(r, j, s, ctrl, ctrl_bit, target)
            }
        }
    }

    /// Routed controlled inverse power.
    pub fn controlled_inverse_power_via(
        &mut self,
        src: ControlledSource,
        j: u64,
        s: &mut StateVector,
        ctrl: &str,
        ctrl_bit: usize,
        target: &str,
    ) -> Result<()> {
        match src {
            ControlledSource::Direct => {
                self.controlled_inverse_power(j, s, ctrl, ctrl_bit, target)
            }
            ControlledSource::Kitaev(r) => {
                self.kitaev_controlled_inverse_power(r, j, s, ctrl, ctrl_bit, target)
            }
        }
    }
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U` on (control, target).
pub fn controlled_op(u: &DenseUnitary) -> DenseUnitary {
    let d = u.dim();
    DenseUnitary::new_unchecked(Array2::from_shape_fn((2 * d, 2 * d), |(i, j)| {
        match (i >= d, j >= d) {
            (false, false) => {
                if i == j {
                    c(1.0, 0.0)
                } else {
                    C64::default()
                }
            }
            (true, true) => u.entry(i - d, j - d),
            _ => C64::default(),
        }
    }))
}

fn scale_phase(u: &DenseUnitary, angle: f64) -> DenseUnitary {
    let phase = cis(angle);
    DenseUnitary::new_unchecked(u.matrix().mapv(|v| v * phase))
}

/// The explicit controlled-SWAP sandwich on (control ⊗ target ⊗ reference):
/// `cSWAP · (I ⊗ I ⊗ U) · cSWAP`, where cSWAP exchanges target and reference
/// when the control is 1. The Fredkin-level decomposition of cSWAP is not
/// modeled; it is a primitive here.
pub fn kitaev_sandwich(u: &DenseUnitary) -> Result<DenseUnitary> {
    let d = u.dim();
    let full = 2 * d * d;
    if full > crate::linalg::MAX_MATRIX_DIM {
        return Err(Error::ResourceLimit(format!("sandwich dim {full}")));
    }
    // index = ctrl * d^2 + tgt * d + ref
    let cswap = DenseUnitary::new_unchecked(Array2::from_shape_fn((full, full), |(i, j)| {
        let (ci, ti, ri) = split3(i, d);
        let (cj, tj, rj) = split3(j, d);
        let swapped = if cj == 1 { (cj, rj, tj) } else { (cj, tj, rj) };
        if (ci, ti, ri) == swapped {
            c(1.0, 0.0)
        } else {
            C64::default()
        }
    }));
    let u_on_ref = DenseUnitary::new_unchecked(Array2::from_shape_fn((full, full), |(i, j)| {
        let (ci, ti, ri) = split3(i, d);
        let (cj, tj, rj) = split3(j, d);
        if ci == cj && ti == tj {
            u.entry(ri, rj)
        } else {
            C64::default()
        }
    }));
    cswap.mul(&u_on_ref)?.mul(&cswap)
}

fn split3(idx: usize, d: usize) -> (usize, usize, usize) {
    (idx / (d * d), (idx / d) % d, idx % d)
}

/// The two mapping rules of the sandwich on reference eigenvector `|ψ_k⟩`
/// with eigenphase λ, as an operator on (control ⊗ target):
/// `|0⟩⟨0| ⊗ e^{2πiλ} I + |1⟩⟨1| ⊗ U`.
pub fn kitaev_rules_matrix(u: &DenseUnitary, lambda: f64) -> DenseUnitary {
    let d = u.dim();
    DenseUnitary::new_unchecked(Array2::from_shape_fn((2 * d, 2 * d), |(i, j)| {
        match (i >= d, j >= d) {
            (false, false) => {
                if i == j {
                    cis(TAU * lambda)
                } else {
                    C64::default()
                }
            }
            (true, true) => u.entry(i - d, j - d),
            _ => C64::default(),
        }
    }))
}

/// Restricts the sandwich to reference state `|ψ⟩`: the induced operator on
/// (control ⊗ target), entry (i,j) = ⟨i, ψ| S |j, ψ⟩.
pub fn sandwich_restricted_to_reference(
    sandwich: &DenseUnitary,
    reference: &[C64],
) -> Result<DenseUnitary> {
    let d = reference.len();
    let full = sandwich.dim();
    if full != 2 * d * d {
        return Err(Error::DimensionMismatch {
            expected: 2 * d * d,
            got: full,
        });
    }
    let mut out = Array2::from_elem((2 * d, 2 * d), C64::default());
    for cj in 0..2 {
        for tj in 0..d {
            // S |cj, tj, ψ⟩
            let mut col = vec![C64::default(); full];
            for (rj, amp) in reference.iter().enumerate() {
                let j = cj * d * d + tj * d + rj;
                for (i, slot) in col.iter_mut().enumerate() {
                    *slot += sandwich.entry(i, j) * amp;
                }
            }
            // project rows onto ⟨ci, ti, ψ|
            for ci in 0..2 {
                for ti in 0..d {
                    let mut acc = C64::default();
                    for (ri, amp) in reference.iter().enumerate() {
                        acc += amp.conj() * col[ci * d * d + ti * d + ri];
                    }
                    out[(ci * d + ti, cj * d + tj)] = acc;
                }
            }
        }
    }
    Ok(DenseUnitary::new_unchecked(out))
}
