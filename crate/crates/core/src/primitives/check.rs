//! Quantum error detection via check unitaries.
//!
//! A classical check function f: {0,1}^n → {0,1}^k is lifted to the basis
//! permutation U_f |j⟩|y⟩ = |j⟩|y ⊕ f(j)⟩. Both supported kinds (parity
//! groups and CRC with zero initial state) are GF(2)-linear in the message,
//! so U_f reduces to a CNOT cascade from data qubits onto ancillas and is
//! its own inverse.

use crate::qsim::{gates, QsimError, QuditId, StateRegistry};

use super::{PrimitiveError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckKind {
    /// One bitmask per check bit; check bit c is the parity of the data
    /// bits selected by `masks[c]` (bit i of the mask = data qubit i).
    ParityGroups(Vec<u64>),
    /// Bit-serial CRC over the basis label, MSB (qubit 0) first, zero
    /// initial remainder, no final xor. `poly` holds the low k coefficient
    /// bits with the leading x^k term implicit.
    Crc { poly: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFunctionSpec {
    n: usize,
    k: usize,
    kind: CheckKind,
}

impl CheckFunctionSpec {
    /// Default parity spec: k groups assigned round-robin, so every data
    /// bit is covered and any single X flip is detected.
    pub fn parity(n: usize, k: usize) -> Self {
        let masks = (0..k)
            .map(|c| {
                let mut mask = 0u64;
                let mut i = c;
                while i < n {
                    mask |= 1 << i;
                    i += k;
                }
                mask
            })
            .collect();
        CheckFunctionSpec { n, k, kind: CheckKind::ParityGroups(masks) }
    }

    pub fn parity_with_masks(n: usize, masks: Vec<u64>) -> Result<Self> {
        let valid = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if masks.iter().any(|m| m & !valid != 0) {
            return Err(PrimitiveError::MaskOutOfRange(n));
        }
        let k = masks.len();
        Ok(CheckFunctionSpec { n, k, kind: CheckKind::ParityGroups(masks) })
    }

    pub fn crc(n: usize, k: usize, poly: u32) -> Self {
        CheckFunctionSpec { n, k, kind: CheckKind::Crc { poly } }
    }

    /// Default qTCP spec: k = max(2, ⌈n/4⌉) parity groups.
    pub fn default_for_block(n: usize) -> Self {
        let k = 2.max(n.div_ceil(4));
        Self::parity(n, k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> &CheckKind {
        &self.kind
    }

    /// Per-check-bit data masks; f(j) bit c = parity of j & rows()[c].
    pub fn rows(&self) -> Vec<u64> {
        match &self.kind {
            CheckKind::ParityGroups(masks) => masks.clone(),
            CheckKind::Crc { poly } => {
                // CRC with zero init is linear: derive one row per check
                // bit by running unit messages through the bit-serial CRC
                let units: Vec<u64> =
                    (0..self.n).map(|i| crc_bits(1 << i, self.n, self.k, *poly)).collect();
                (0..self.k)
                    .map(|c| {
                        let mut row = 0u64;
                        for (i, crc) in units.iter().enumerate() {
                            if crc >> (self.k - 1 - c) & 1 == 1 {
                                row |= 1 << i;
                            }
                        }
                        row
                    })
                    .collect()
            }
        }
    }

    /// Evaluate the classical check function on a basis label. Bit i of `j`
    /// is the value of data qubit i; bit c of the result (counted from the
    /// most significant check bit) is check bit c.
    pub fn eval(&self, j: u64) -> u64 {
        match &self.kind {
            CheckKind::ParityGroups(masks) => masks
                .iter()
                .enumerate()
                .fold(0, |acc, (c, m)| acc | (((j & m).count_ones() as u64 & 1) << (self.k - 1 - c))),
            CheckKind::Crc { poly } => crc_bits(j, self.n, self.k, *poly),
        }
    }
}

/// Bit-serial CRC of an n-bit message (bit n-1 of `j` = qubit 0, fed first).
fn crc_bits(j: u64, n: usize, k: usize, poly: u32) -> u64 {
    let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut r: u64 = 0;
    for qubit in 0..n {
        // qubit 0 is the most significant bit of the label
        let m = j >> (n - 1 - qubit) & 1;
        r ^= m << (k - 1);
        let top = r >> (k - 1) & 1;
        r = (r << 1) & mask;
        if top == 1 {
            r ^= poly as u64 & mask;
        }
    }
    r
}

/// Outcome of [`check_verify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// Ancillas read 0^k; the data qubits are returned with state intact.
    Valid(Vec<QuditId>),
    /// Nonzero ancilla outcome: at least one error occurred. The caller
    /// releases the whole block.
    Invalid,
}

/// Append k fresh |0⟩ ancillas and apply U_f. Returns data ++ checks.
pub fn check_encode(
    reg: &mut StateRegistry,
    data: &[QuditId],
    spec: &CheckFunctionSpec,
) -> Result<Vec<QuditId>> {
    if data.len() != spec.n {
        return Err(PrimitiveError::BlockSize { expected: spec.n, got: data.len() });
    }
    for q in data {
        if !q.is_qubit() {
            return Err(QsimError::NotAQubit(*q).into());
        }
    }
    let mut ancillas = Vec::with_capacity(spec.k);
    for _ in 0..spec.k {
        ancillas.push(reg.alloc_qubit()?);
    }
    apply_cascade(reg, data, &ancillas, spec)?;
    let mut block = data.to_vec();
    block.extend_from_slice(&ancillas);
    Ok(block)
}

/// Apply U_f^{-1}, measure the ancillas, and report whether they read 0^k.
/// On success the ancillas are released and the n data qubits returned.
pub fn check_verify(
    reg: &mut StateRegistry,
    block: &[QuditId],
    spec: &CheckFunctionSpec,
) -> Result<CheckOutcome> {
    if block.len() != spec.n + spec.k {
        return Err(PrimitiveError::BlockSize { expected: spec.n + spec.k, got: block.len() });
    }
    let (data, ancillas) = block.split_at(spec.n);
    // the CNOT cascade is an involution, so U_f^{-1} = U_f
    apply_cascade(reg, data, ancillas, spec)?;
    let record = reg.measure_computational(ancillas)?;
    if record.outcome == 0 {
        reg.discard(ancillas)?;
        Ok(CheckOutcome::Valid(data.to_vec()))
    } else {
        Ok(CheckOutcome::Invalid)
    }
}

fn apply_cascade(
    reg: &mut StateRegistry,
    data: &[QuditId],
    ancillas: &[QuditId],
    spec: &CheckFunctionSpec,
) -> Result<()> {
    let cnot = gates::cnot();
    for (c, row) in spec.rows().iter().enumerate() {
        for (i, q) in data.iter().enumerate() {
            if row >> i & 1 == 1 {
                reg.apply_unitary(&[*q, ancillas[c]], &cnot)?;
            }
        }
    }
    Ok(())
}
