//! Gate matrices for qubits and qutrits.
//!
//! All matrices are dense `DMatrix<C64>` values with the first operand of a
//! tensor product as the most significant index, matching the digit order
//! used by [`StateFactor`](super::StateFactor).

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use super::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> DMatrix<C64> {
    DMatrix::identity(dim, dim)
}

/// Pauli X.
pub fn x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

/// Pauli Z.
pub fn z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Pauli Y = iXZ.
pub fn y() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

/// Hadamard.
pub fn h() -> DMatrix<C64> {
    let s = FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
}

/// CNOT with the first (most significant) qubit as control.
pub fn cnot() -> DMatrix<C64> {
    basis_permutation(&[2, 2], |digits| {
        let control = digits[0];
        let target = digits[1] ^ control;
        vec![control, target]
    })
}

/// X^x Z^z as a single-qubit matrix (global phase convention: plain product).
pub fn pauli_xz(x_exp: bool, z_exp: bool) -> DMatrix<C64> {
    let mut m = identity(2);
    if z_exp {
        m = z() * m;
    }
    if x_exp {
        m = x() * m;
    }
    m
}

/// Qutrit cyclic shift X: |j⟩ → |j+1 mod 3⟩.
pub fn qutrit_x() -> DMatrix<C64> {
    basis_permutation(&[3], |d| vec![(d[0] + 1) % 3])
}

/// Qutrit phase Z: |j⟩ → ω^j |j⟩ with ω = e^{2πi/3}.
pub fn qutrit_z() -> DMatrix<C64> {
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    DMatrix::from_fn(3, 3, |r, m| {
        if r == m {
            omega.powu(r as u32)
        } else {
            c(0., 0.)
        }
    })
}

/// Generalized Pauli X^a Z^b on a qudit of dimension `dim`.
pub fn qudit_pauli(dim: usize, a: usize, b: usize) -> DMatrix<C64> {
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / dim as f64);
    DMatrix::from_fn(dim, dim, |r, m| {
        if r == (m + a) % dim {
            omega.powu((b * m) as u32)
        } else {
            c(0., 0.)
        }
    })
}

/// Qutrit Fourier transform: |j⟩ → (1/√3) Σ_m ω^{jm} |m⟩.
pub fn qutrit_fourier() -> DMatrix<C64> {
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let s = 1.0 / 3.0_f64.sqrt();
    DMatrix::from_fn(3, 3, |r, m| omega.powu((r * m) as u32) * s)
}

/// Two-qudit controlled add on equal-dimension qudits:
/// |a, b⟩ → |a, b + λ·a mod d⟩.
pub fn controlled_add(dim: usize, lambda: usize) -> DMatrix<C64> {
    basis_permutation(&[dim, dim], move |d| {
        vec![d[0], (d[1] + lambda * d[0]) % dim]
    })
}

/// Single-qudit multiply: |b⟩ → |λ·b mod d⟩. Requires gcd(λ, d) = 1.
pub fn mul(dim: usize, lambda: usize) -> DMatrix<C64> {
    basis_permutation(&[dim], move |d| vec![(lambda * d[0]) % dim])
}

/// Swap of two qudits of dimension `dim`.
pub fn swap(dim: usize) -> DMatrix<C64> {
    basis_permutation(&[dim, dim], |d| vec![d[1], d[0]])
}

/// Kronecker product with `a` as the most significant factor.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Build a unitary from a permutation of mixed-radix basis labels.
///
/// `f` maps the digit vector of a basis state (most significant first) to
/// the digit vector of its image. The map must be a bijection; this is
/// checked and panics otherwise since all call sites are static gate
/// definitions.
pub fn basis_permutation<F>(dims: &[usize], f: F) -> DMatrix<C64>
where
    F: Fn(&[usize]) -> Vec<usize>,
{
    let total: usize = dims.iter().product();
    let mut m = DMatrix::from_element(total, total, c(0., 0.));
    let mut seen = vec![false; total];
    for col in 0..total {
        let digits = index_to_digits(col, dims);
        let image = f(&digits);
        assert_eq!(image.len(), dims.len(), "permutation arity mismatch");
        let row = digits_to_index(&image, dims);
        assert!(!seen[row], "basis map is not a bijection");
        seen[row] = true;
        m[(row, col)] = c(1., 0.);
    }
    m
}

pub(crate) fn index_to_digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in dims.iter().enumerate().rev() {
        digits[slot] = index % d;
        index /= d;
    }
    digits
}

pub(crate) fn digits_to_index(digits: &[usize], dims: &[usize]) -> usize {
    let mut index = 0;
    for (&dig, &d) in digits.iter().zip(dims) {
        debug_assert!(dig < d);
        index = index * d + dig;
    }
    index
}
