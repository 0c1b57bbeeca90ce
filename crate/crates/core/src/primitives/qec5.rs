//! The five-qubit perfect code, used for robust entanglement distribution.
//!
//! The encoding unitary E maps |b, s₁s₂s₃s₄⟩ to T_s|b_L⟩ where T_s is the
//! canonical weight-≤1 Pauli with syndrome s. Decoding applies E† and
//! measures the four ancillas: for any single-qubit Pauli error the ancilla
//! readout is exactly the syndrome and the data qubit is recovered with no
//! further correction, because the perfect code's sixteen syndrome classes
//! biject onto {I} ∪ {single-qubit Paulis}.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::qsim::{gates, C64, QuditId, StateRegistry};

use super::{PrimitiveError, Result};

/// Stabilizer generators of the [[5,1,3]] code.
const GENERATORS: [&str; 4] = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"];

/// Encode one qubit into a five-qubit block (data slot first).
pub fn qec5_encode(reg: &mut StateRegistry, q: QuditId) -> Result<[QuditId; 5]> {
    if !q.is_qubit() {
        return Err(crate::qsim::QsimError::NotAQubit(q).into());
    }
    let mut block = [q; 5];
    for slot in block.iter_mut().skip(1) {
        *slot = reg.alloc_qubit()?;
    }
    reg.apply_unitary(&block, encoding_matrix())?;
    Ok(block)
}

/// Decode a five-qubit block: applies E†, measures the syndrome from the
/// ancillas, releases them, and returns the data qubit together with the
/// observed syndrome. Any single-qubit Pauli error is corrected exactly.
pub fn qec5_correct_decode(reg: &mut StateRegistry, block: &[QuditId]) -> Result<(QuditId, u8)> {
    if block.len() != 5 {
        return Err(PrimitiveError::BlockSize { expected: 5, got: block.len() });
    }
    let adjoint = decoding_matrix();
    reg.apply_unitary(block, adjoint)?;
    let record = reg.measure_computational(&block[1..])?;
    let syndrome = record.outcome as u8;
    reg.discard(&block[1..])?;
    Ok((block[0], syndrome))
}

fn encoding_matrix() -> &'static DMatrix<C64> {
    static CELL: OnceLock<DMatrix<C64>> = OnceLock::new();
    CELL.get_or_init(build_encoding)
}

fn decoding_matrix() -> &'static DMatrix<C64> {
    static CELL: OnceLock<DMatrix<C64>> = OnceLock::new();
    CELL.get_or_init(|| encoding_matrix().adjoint())
}

/// A Pauli string over five qubits as X/Z bitmasks (bit i = qubit i, qubit 0
/// being the most significant digit of the block).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PauliString {
    x: u8,
    z: u8,
}

impl PauliString {
    const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    fn from_str(s: &str) -> PauliString {
        let mut x = 0;
        let mut z = 0;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                'X' => x |= 1 << i,
                'Z' => z |= 1 << i,
                'Y' => {
                    x |= 1 << i;
                    z |= 1 << i;
                }
                'I' => {}
                _ => panic!("bad pauli char {ch}"),
            }
        }
        PauliString { x, z }
    }

    fn single(qubit: usize, x: bool, z: bool) -> PauliString {
        PauliString { x: (x as u8) << qubit, z: (z as u8) << qubit }
    }

    fn anticommutes(&self, other: &PauliString) -> bool {
        let cross = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        cross % 2 == 1
    }

    fn matrix(&self) -> DMatrix<C64> {
        let mut m = gates::identity(1);
        for qubit in 0..5 {
            let x = self.x >> qubit & 1 == 1;
            let z = self.z >> qubit & 1 == 1;
            let single = match (x, z) {
                (false, false) => gates::identity(2),
                (true, false) => gates::x(),
                (false, true) => gates::z(),
                (true, true) => gates::x() * gates::z(),
            };
            m = gates::kron(&m, &single);
        }
        m
    }

    fn syndrome(&self) -> u8 {
        let mut s = 0u8;
        for (i, g) in GENERATORS.iter().enumerate() {
            if self.anticommutes(&PauliString::from_str(g)) {
                s |= 1 << (3 - i);
            }
        }
        s
    }
}

/// All sixteen canonical errors indexed by syndrome: I plus the fifteen
/// single-qubit Paulis. The perfect-code property makes this a bijection.
fn canonical_errors() -> [PauliString; 16] {
    let mut table = [PauliString::IDENTITY; 16];
    let mut filled = [false; 16];
    filled[0] = true;
    for qubit in 0..5 {
        for (x, z) in [(true, false), (false, true), (true, true)] {
            let p = PauliString::single(qubit, x, z);
            let s = p.syndrome() as usize;
            assert!(s != 0 && !filled[s], "syndrome table degenerate");
            table[s] = p;
            filled[s] = true;
        }
    }
    assert!(filled.iter().all(|f| *f));
    table
}

fn build_encoding() -> DMatrix<C64> {
    // |0_L⟩ ∝ Π_i (I + S_i)/2 |00000⟩, |1_L⟩ = X⊗5 |0_L⟩
    let dim = 32;
    let mut zero_l = DMatrix::from_element(dim, 1, C64::ZERO);
    zero_l[(0, 0)] = C64::ONE;
    for g in GENERATORS {
        let s = PauliString::from_str(g).matrix();
        zero_l = (&zero_l + s * &zero_l) * C64::new(0.5, 0.0);
    }
    let norm = zero_l.norm();
    zero_l /= C64::new(norm, 0.0);
    let x_l = PauliString::from_str("XXXXX").matrix();
    let one_l = &x_l * &zero_l;

    let errors = canonical_errors();
    let mut e = DMatrix::from_element(dim, dim, C64::ZERO);
    for b in 0..2usize {
        let logical = if b == 0 { &zero_l } else { &one_l };
        for (s, t) in errors.iter().enumerate() {
            let col_vec = t.matrix() * logical;
            let col = b * 16 + s;
            for r in 0..dim {
                e[(r, col)] = col_vec[(r, 0)];
            }
        }
    }
    e
}
