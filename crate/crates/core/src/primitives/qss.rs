//! (2,3)-threshold quantum secret sharing over qutrits.
//!
//! A secret qutrit Σ_s α_s|s⟩ is encoded into the three-qutrit codeword
//! Σ_s α_s (Σ_q |q, q+s, q+2s⟩)/√3 (all arithmetic mod 3). Any two shares
//! reconstruct the secret exactly; the reduced state of any single share is
//! the maximally mixed qutrit regardless of the secret.
//!
//! Qubit payloads ride the code through the embed/extract isometries, and
//! qutrit shares ride qubit-pair carriers when they must cross teleportation
//! links (the expand/contract pair).

use crate::qsim::{gates, QsimError, QuditId, StateRegistry};

use super::{PrimitiveError, Result};

/// Residual-amplitude tolerance for the non-physical corruption checks.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Three share registers, one qutrit per encoded secret qudit.
#[derive(Debug, Clone, Default)]
pub struct SharePack {
    pub share1: Vec<QuditId>,
    pub share2: Vec<QuditId>,
    pub share3: Vec<QuditId>,
}

impl SharePack {
    pub fn len(&self) -> usize {
        self.share1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.share1.is_empty()
    }

    pub fn share(&self, index: u8) -> &[QuditId] {
        match index {
            1 => &self.share1,
            2 => &self.share2,
            3 => &self.share3,
            _ => panic!("share index out of range"),
        }
    }
}

/// Encode one secret qutrit into three shares. The secret handle becomes
/// share 1; two fresh qutrits become shares 2 and 3.
pub fn qss_encode(reg: &mut StateRegistry, secret: QuditId) -> Result<[QuditId; 3]> {
    if !secret.is_qutrit() {
        return Err(QsimError::NotAQutrit(secret).into());
    }
    let s2 = reg.alloc_qutrit()?;
    let s3 = reg.alloc_qutrit()?;
    // |s,0,0⟩ → Σ_q |q, q+s, q+2s⟩ / √3
    reg.apply_unitary(&[secret, s2], &gates::swap(3))?;
    reg.apply_unitary(&[secret], &gates::qutrit_fourier())?;
    reg.apply_unitary(&[secret, s2], &gates::controlled_add(3, 1))?;
    reg.apply_unitary(&[s2, s3], &gates::controlled_add(3, 2))?;
    reg.apply_unitary(&[secret, s3], &gates::controlled_add(3, 2))?;
    Ok([secret, s2, s3])
}

/// Encode a register of secrets qudit by qudit.
pub fn qss_encode_register(reg: &mut StateRegistry, secrets: &[QuditId]) -> Result<SharePack> {
    let mut pack = SharePack::default();
    for q in secrets {
        let [a, b, c] = qss_encode(reg, *q)?;
        pack.share1.push(a);
        pack.share2.push(b);
        pack.share3.push(c);
    }
    Ok(pack)
}

/// Reconstruct the secret from two shares. `which` names the share indices
/// (1-based) held in `share_a` and `share_b`. The reconstructed secret is
/// returned; the leftover junk qutrit is measured out and released.
pub fn qss_decode(
    reg: &mut StateRegistry,
    share_a: QuditId,
    share_b: QuditId,
    which: (u8, u8),
) -> Result<QuditId> {
    let (lo_q, hi_q, pair) = match which {
        (1, 2) => (share_a, share_b, (1, 2)),
        (2, 1) => (share_b, share_a, (1, 2)),
        (2, 3) => (share_a, share_b, (2, 3)),
        (3, 2) => (share_b, share_a, (2, 3)),
        (1, 3) => (share_a, share_b, (1, 3)),
        (3, 1) => (share_b, share_a, (1, 3)),
        (a, b) => return Err(PrimitiveError::BadShareIndices(a, b)),
    };
    if !lo_q.is_qutrit() {
        return Err(QsimError::NotAQutrit(lo_q).into());
    }
    if !hi_q.is_qutrit() {
        return Err(QsimError::NotAQutrit(hi_q).into());
    }
    match pair {
        (1, 2) | (2, 3) => {
            // hi ← hi − lo (≡ +2·lo), then lo ← lo + 2·hi
            reg.apply_unitary(&[lo_q, hi_q], &gates::controlled_add(3, 2))?;
            reg.apply_unitary(&[hi_q, lo_q], &gates::controlled_add(3, 2))?;
        }
        _ => {
            // (1,3): hi ← 2·(hi + 2·lo)? expressed as hi += 2·lo, hi ← 2·hi,
            // then lo ← lo + hi, leaving the secret in hi
            reg.apply_unitary(&[lo_q, hi_q], &gates::controlled_add(3, 2))?;
            reg.apply_unitary(&[hi_q], &gates::mul(3, 2))?;
            reg.apply_unitary(&[hi_q, lo_q], &gates::controlled_add(3, 1))?;
        }
    }
    reg.discard(&[lo_q])?;
    Ok(hi_q)
}

/// Reconstruct a register of secrets from two share registers.
pub fn qss_decode_register(
    reg: &mut StateRegistry,
    share_a: &[QuditId],
    share_b: &[QuditId],
    which: (u8, u8),
) -> Result<Vec<QuditId>> {
    if share_a.len() != share_b.len() {
        return Err(PrimitiveError::ShareLengthMismatch(share_a.len(), share_b.len()));
    }
    share_a
        .iter()
        .zip(share_b)
        .map(|(a, b)| qss_decode(reg, *a, *b, which))
        .collect()
}

/// Isometry |0⟩↔|0⟩, |1⟩↔|1⟩ from a qubit into a fresh qutrit.
pub fn embed_qubit(reg: &mut StateRegistry, q: QuditId) -> Result<QuditId> {
    if !q.is_qubit() {
        return Err(QsimError::NotAQubit(q).into());
    }
    let t = reg.alloc_qutrit()?;
    reg.apply_unitary(&[q, t], &embed_perm())?;
    // the qubit is now deterministically |0⟩
    reg.discard(&[q])?;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractOutcome {
    Valid(QuditId),
    /// The qutrit carries |2⟩ amplitude above tolerance: corruption.
    /// The input is left allocated for the caller to release.
    Invalid,
}

/// Inverse of [`embed_qubit`]; fails if the |2⟩ amplitude exceeds 1e-8.
pub fn extract_qubit(reg: &mut StateRegistry, t: QuditId) -> Result<ExtractOutcome> {
    if !t.is_qutrit() {
        return Err(QsimError::NotAQutrit(t).into());
    }
    let p2 = reg.digit_probability(t, 2)?;
    if p2.sqrt() > RESIDUAL_TOL {
        return Ok(ExtractOutcome::Invalid);
    }
    reg.project_out_digit(t, 2, RESIDUAL_TOL)?;
    let q = reg.alloc_qubit()?;
    reg.apply_unitary(&[q, t], &extract_perm())?;
    reg.discard(&[t])?;
    Ok(ExtractOutcome::Valid(q))
}

/// Expand a qutrit into two fresh qubits (|0⟩→|00⟩, |1⟩→|01⟩, |2⟩→|10⟩) so
/// it can ride qubit-pair teleportation. Consumes the qutrit.
pub fn expand_qutrit(reg: &mut StateRegistry, t: QuditId) -> Result<[QuditId; 2]> {
    if !t.is_qutrit() {
        return Err(QsimError::NotAQutrit(t).into());
    }
    let q1 = reg.alloc_qubit()?;
    let q2 = reg.alloc_qubit()?;
    reg.apply_unitary(&[t, q1, q2], &carrier_perm())?;
    reg.discard(&[t])?;
    Ok([q1, q2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractOutcome {
    Valid(QuditId),
    /// Residual |11⟩ amplitude above tolerance: the carrier was corrupted
    /// in transit. Carrier qubits and scratch are released internally.
    Invalid,
}

/// Inverse of [`expand_qutrit`]: fold two carrier qubits back into a qutrit.
/// Consumes the carrier qubits in every outcome.
pub fn contract_qutrit(reg: &mut StateRegistry, pair: [QuditId; 2]) -> Result<ContractOutcome> {
    let t = reg.alloc_qutrit()?;
    reg.apply_unitary(&[t, pair[0], pair[1]], &carrier_perm_inverse())?;
    // valid carriers leave both qubits in |0⟩; the |11⟩ corruption flag was
    // mapped onto a nonzero qubit digit
    let bad = reg.digit_probability(pair[0], 1)? + reg.digit_probability(pair[1], 1)?;
    if bad.sqrt() > RESIDUAL_TOL {
        reg.discard(&[t, pair[0], pair[1]])?;
        return Ok(ContractOutcome::Invalid);
    }
    reg.project_out_digit(pair[0], 1, RESIDUAL_TOL)?;
    reg.project_out_digit(pair[1], 1, RESIDUAL_TOL)?;
    reg.discard(&[pair[0], pair[1]])?;
    Ok(ContractOutcome::Valid(t))
}

fn embed_perm() -> nalgebra::DMatrix<crate::qsim::C64> {
    // (qubit b, qutrit y): |b,0⟩ → |0,b⟩, rest completed bijectively
    gates::basis_permutation(&[2, 3], |d| match (d[0], d[1]) {
        (0, 0) => vec![0, 0],
        (1, 0) => vec![0, 1],
        (0, 1) => vec![1, 0],
        (0, 2) => vec![0, 2],
        (1, 1) => vec![1, 1],
        (1, 2) => vec![1, 2],
        _ => unreachable!(),
    })
}

fn extract_perm() -> nalgebra::DMatrix<crate::qsim::C64> {
    // (qubit b, qutrit y): |0,y⟩ → |y,0⟩ for y ∈ {0,1}; |2⟩ was projected out
    gates::basis_permutation(&[2, 3], |d| match (d[0], d[1]) {
        (0, 0) => vec![0, 0],
        (0, 1) => vec![1, 0],
        (1, 0) => vec![0, 1],
        (1, 1) => vec![1, 1],
        (0, 2) => vec![0, 2],
        (1, 2) => vec![1, 2],
        _ => unreachable!(),
    })
}

/// (qutrit y, qubit b1, qubit b2): |y,0,0⟩ → |0, bits(y)⟩; the unused valid
/// image |0,1,1⟩ is reached only from |0,0,1⟩ so corrupted carriers map to
/// a nonzero qubit digit under the inverse.
fn carrier_table() -> [([usize; 3], [usize; 3]); 12] {
    [
        ([0, 0, 0], [0, 0, 0]),
        ([1, 0, 0], [0, 0, 1]),
        ([2, 0, 0], [0, 1, 0]),
        ([0, 0, 1], [0, 1, 1]),
        ([0, 1, 0], [1, 0, 0]),
        ([0, 1, 1], [1, 0, 1]),
        ([1, 0, 1], [1, 1, 0]),
        ([1, 1, 0], [1, 1, 1]),
        ([1, 1, 1], [2, 0, 0]),
        ([2, 0, 1], [2, 0, 1]),
        ([2, 1, 0], [2, 1, 0]),
        ([2, 1, 1], [2, 1, 1]),
    ]
}

fn carrier_perm() -> nalgebra::DMatrix<crate::qsim::C64> {
    let table = carrier_table();
    gates::basis_permutation(&[3, 2, 2], move |d| {
        let key = [d[0], d[1], d[2]];
        table.iter().find(|(from, _)| *from == key).unwrap().1.to_vec()
    })
}

fn carrier_perm_inverse() -> nalgebra::DMatrix<crate::qsim::C64> {
    let table = carrier_table();
    gates::basis_permutation(&[3, 2, 2], move |d| {
        let key = [d[0], d[1], d[2]];
        table.iter().find(|(_, to)| *to == key).unwrap().0.to_vec()
    })
}
