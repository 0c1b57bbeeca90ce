//! Protocol-level quantum building blocks.
//!
//! Everything here is a pure function over a [`StateRegistry`] passed in by
//! the caller; the network simulation owns the registry and the clock.

pub mod check;
pub mod qec5;
pub mod qss;


use thiserror::Error;

use crate::qsim::{gates, PauliOp, QsimError, QuditId, StateRegistry};

#[derive(Debug, Error)]
pub enum PrimitiveError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("correction words have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("share indices must be two distinct values in 1..=3, got ({0}, {1})")]
    BadShareIndices(u8, u8),
    #[error("share registers have different lengths ({0} vs {1})")]
    ShareLengthMismatch(usize, usize),
    #[error("check block must hold {expected} qubits, got {got}")]
    BlockSize { expected: usize, got: usize },
    #[error("check masks address bits beyond n={0}")]
    MaskOutOfRange(usize),
}

pub type Result<T> = std::result::Result<T, PrimitiveError>;

/// A two-qubit maximally entangled pair with pool bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EprPair {
    pub left: QuditId,
    pub right: QuditId,
    /// Simulation time (ticks) at which the pair was created.
    pub created_at: u64,
    /// Index within the owning pool; unique, never reused.
    pub position: u64,
}

/// Create a fresh pair in exactly |Φ⁺⟩ = (|00⟩ + |11⟩)/√2.
pub fn make_epr(reg: &mut StateRegistry, created_at: u64, position: u64) -> Result<EprPair> {
    let left = reg.alloc_qubit()?;
    let right = reg.alloc_qubit()?;
    reg.apply_unitary(&[left], &gates::h())?;
    reg.apply_unitary(&[left, right], &gates::cnot())?;
    Ok(EprPair { left, right, created_at, position })
}

/// Bell-measure a data qubit against a local EPR half, consuming both.
///
/// After this call the remote half of the pair holds X^i Z^j |ψ⟩ where |ψ⟩
/// was the data state; the returned word is the correction the remote side
/// must apply. No copy of the data survives on the sender.
pub fn teleport_measure(
    reg: &mut StateRegistry,
    data: QuditId,
    epr_half: QuditId,
) -> Result<PauliOp> {
    if !data.is_qubit() {
        return Err(QsimError::NotAQubit(data).into());
    }
    if !epr_half.is_qubit() {
        return Err(QsimError::NotAQubit(epr_half).into());
    }
    let word = reg.bell_measure(epr_half, data)?;
    reg.discard(&[data, epr_half])?;
    Ok(word)
}

/// Apply the Pauli correction X^i Z^j that completes a teleportation.
pub fn pauli_correct(reg: &mut StateRegistry, target: QuditId, word: PauliOp) -> Result<()> {
    if word.is_identity() {
        // identity correction: nothing to do, but still validate the handle
        if !reg.is_live(target) {
            return Err(QsimError::DeadQudit(target).into());
        }
        return Ok(());
    }
    reg.apply_unitary(&[target], &word.matrix())?;
    Ok(())
}

/// Entanglement swapping: Bell-measure the two middle qubits of two EPR
/// pairs A–b1 and b2–C. After the far end C applies the returned correction,
/// A–C share exactly |Φ⁺⟩.
pub fn entanglement_swap(reg: &mut StateRegistry, b1: QuditId, b2: QuditId) -> Result<PauliOp> {
    teleport_measure(reg, b1, b2)
}

/// Ordered list of per-qubit Pauli corrections for one teleported group.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorrectionWord(pub Vec<PauliOp>);

impl CorrectionWord {
    pub fn identity(len: usize) -> Self {
        CorrectionWord(vec![PauliOp::IDENTITY; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, op: PauliOp) {
        self.0.push(op);
    }

    pub fn iter(&self) -> impl Iterator<Item = &PauliOp> {
        self.0.iter()
    }

    /// Entrywise XOR composition; deferred corrections along a route
    /// compose into the single word the destination applies.
    pub fn compose(&self, other: &CorrectionWord) -> Result<CorrectionWord> {
        compose_corrections(self, other)
    }
}

pub fn compose_corrections(w1: &CorrectionWord, w2: &CorrectionWord) -> Result<CorrectionWord> {
    if w1.len() != w2.len() {
        return Err(PrimitiveError::LengthMismatch(w1.len(), w2.len()));
    }
    Ok(CorrectionWord(
        w1.0.iter().zip(&w2.0).map(|(a, b)| a.compose(b)).collect(),
    ))
}
