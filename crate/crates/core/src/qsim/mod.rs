//! Exact statevector simulation of small mixed-dimension quantum registers.
//!
//! State is held as a set of [`StateFactor`]s, each an exact amplitude vector
//! over one entanglement island of qudits (dimension 2 or 3). Operations that
//! act across factors first merge them by tensor product; factors are never
//! split except by removing measured-out qudits. The registry owns a single
//! seeded random stream which is consumed in operation order and is the sole
//! nondeterminism source of the whole simulator.

pub mod gates;

#[cfg(test)]
mod tests;

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use num_complex::Complex64 as C64;

/// Norm / probability tolerance used by invariant checks.
pub const NORM_TOL: f64 = 1e-10;

/// Default factor-size guard, in qubit equivalents (dimension `2^14`).
pub const DEFAULT_MAX_QUBIT_EQUIVALENTS: u32 = 14;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("unsupported qudit dimension {0} (must be 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("qudit {0} is not live")]
    DeadQudit(QuditId),
    #[error("duplicate qudit in target list")]
    DuplicateTargets,
    #[error("empty target list")]
    EmptyTargets,
    #[error("operator dimension {got} does not match target dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary within tolerance")]
    NonUnitary,
    #[error("factor of dimension {dim} would exceed the configured limit {max}")]
    FactorTooLarge { dim: usize, max: usize },
    #[error("qudit {0} is not a qubit")]
    NotAQubit(QuditId),
    #[error("qudit {0} is not a qutrit")]
    NotAQutrit(QuditId),
    #[error("reference state is not a unit vector")]
    InvalidReference,
    #[error("residual amplitude {amp:.3e} on digit {digit} exceeds tolerance")]
    ResidualAmplitude { digit: usize, amp: f64 },
    #[error("state registry invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, QsimError>;

/// Handle to a live qudit. Ids are never reused within one registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuditId {
    index: u32,
    dim: u8,
}

impl QuditId {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn is_qubit(&self) -> bool {
        self.dim == 2
    }

    pub fn is_qutrit(&self) -> bool {
        self.dim == 3
    }
}

impl fmt::Display for QuditId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}d{}", self.index, self.dim)
    }
}

/// Single-qubit Pauli word X^x Z^z up to global phase.
///
/// Composition is bitwise XOR of the exponents; this is what makes deferred
/// teleportation corrections composable along a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PauliOp {
    pub x_exp: bool,
    pub z_exp: bool,
}

impl PauliOp {
    pub const IDENTITY: PauliOp = PauliOp { x_exp: false, z_exp: false };

    pub fn new(x_exp: bool, z_exp: bool) -> Self {
        PauliOp { x_exp, z_exp }
    }

    pub fn from_bits(bits: u8) -> Self {
        PauliOp { x_exp: bits & 0b10 != 0, z_exp: bits & 0b01 != 0 }
    }

    /// Two-bit encoding: `x_exp` is the high bit, `z_exp` the low bit.
    pub fn bits(&self) -> u8 {
        (self.x_exp as u8) << 1 | self.z_exp as u8
    }

    pub fn compose(&self, other: &PauliOp) -> PauliOp {
        PauliOp { x_exp: self.x_exp ^ other.x_exp, z_exp: self.z_exp ^ other.z_exp }
    }

    pub fn is_identity(&self) -> bool {
        !self.x_exp && !self.z_exp
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        gates::pauli_xz(self.x_exp, self.z_exp)
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x_exp, self.z_exp) {
            (false, false) => write!(f, "I"),
            (true, false) => write!(f, "X"),
            (false, true) => write!(f, "Z"),
            (true, true) => write!(f, "XZ"),
        }
    }
}

/// Outcome of a computational-basis measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    /// Mixed-radix label over the measured targets, most significant first.
    pub outcome: u64,
    /// Born probability of this outcome in the pre-measurement state.
    pub probability: f64,
}

/// One entanglement island: an exact amplitude vector over its members.
#[derive(Debug, Clone)]
pub struct StateFactor {
    members: Vec<QuditId>,
    amps: Vec<C64>,
}

impl StateFactor {
    fn singleton(q: QuditId) -> Self {
        let mut amps = vec![C64::ZERO; q.dim()];
        amps[0] = C64::ONE;
        StateFactor { members: vec![q], amps }
    }

    pub fn members(&self) -> &[QuditId] {
        &self.members
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    fn dims(&self) -> Vec<usize> {
        self.members.iter().map(|q| q.dim()).collect()
    }

    fn position_of(&self, q: QuditId) -> Option<usize> {
        self.members.iter().position(|m| *m == q)
    }

    /// Stride of each member position (most significant first).
    fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        strides
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor product, `self` becoming the most significant digits.
    fn merged_with(&self, other: &StateFactor) -> StateFactor {
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateFactor { members, amps }
    }

    /// Debug dump: one `label re im` line per basis state.
    fn dump(&self) -> String {
        let dims = self.dims();
        let mut out = String::new();
        for (idx, amp) in self.amps.iter().enumerate() {
            let digits = gates::index_to_digits(idx, &dims);
            for d in &digits {
                out.push(char::from_digit(*d as u32, 10).unwrap());
            }
            out.push_str(&format!(" {:+.12e} {:+.12e}\n", amp.re, amp.im));
        }
        out
    }
}

/// Iterator state over the basis configurations of a subset of positions.
struct RestCounter {
    digits: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    base: usize,
    done: bool,
}

impl RestCounter {
    fn new(positions: &[usize], dims: &[usize], strides: &[usize]) -> Self {
        RestCounter {
            digits: vec![0; positions.len()],
            dims: positions.iter().map(|&p| dims[p]).collect(),
            strides: positions.iter().map(|&p| strides[p]).collect(),
            base: 0,
            done: false,
        }
    }
}

impl Iterator for RestCounter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.done {
            return None;
        }
        let current = self.base;
        // advance, least significant position last
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            self.base += self.strides[i];
            if self.digits[i] < self.dims[i] {
                break;
            }
            self.base -= self.digits[i] * self.strides[i];
            self.digits[i] = 0;
        }
        Some(current)
    }
}

/// Registry of all live qudits, partitioned into entanglement factors.
pub struct StateRegistry {
    factors: Vec<Option<StateFactor>>,
    locator: HashMap<u32, usize>,
    next_index: u32,
    rng: ChaCha8Rng,
    max_dim: usize,
}

impl StateRegistry {
    pub fn new(seed: u64) -> Self {
        Self::with_max_qubit_equivalents(seed, DEFAULT_MAX_QUBIT_EQUIVALENTS)
    }

    pub fn with_max_qubit_equivalents(seed: u64, qubit_equivalents: u32) -> Self {
        StateRegistry {
            factors: Vec::new(),
            locator: HashMap::new(),
            next_index: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_dim: 1usize << qubit_equivalents,
        }
    }

    /// The seeded random stream. All protocol-level randomness (noise, loss)
    /// draws from here so that a run is a pure function of its seed.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn live_count(&self) -> usize {
        self.locator.len()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.iter().filter(|f| f.is_some()).count()
    }

    pub fn is_live(&self, q: QuditId) -> bool {
        match self.locator.get(&q.index) {
            Some(&slot) => self.factors[slot]
                .as_ref()
                .map(|f| f.position_of(q).is_some())
                .unwrap_or(false),
            None => false,
        }
    }

    /// All live qudits in ascending id order.
    pub fn live_qudits(&self) -> Vec<QuditId> {
        let mut out: Vec<QuditId> = self
            .factors
            .iter()
            .flatten()
            .flat_map(|f| f.members.iter().copied())
            .collect();
        out.sort();
        out
    }

    pub fn alloc(&mut self, dim: usize) -> Result<QuditId> {
        if dim != 2 && dim != 3 {
            return Err(QsimError::UnsupportedDimension(dim));
        }
        let id = QuditId { index: self.next_index, dim: dim as u8 };
        self.next_index += 1;
        let slot = self.free_slot();
        self.factors[slot] = Some(StateFactor::singleton(id));
        self.locator.insert(id.index, slot);
        self.debug_check();
        Ok(id)
    }

    pub fn alloc_qubit(&mut self) -> Result<QuditId> {
        self.alloc(2)
    }

    pub fn alloc_qutrit(&mut self) -> Result<QuditId> {
        self.alloc(3)
    }

    /// Apply a unitary to the given targets, merging factors as needed.
    pub fn apply_unitary(&mut self, targets: &[QuditId], u: &DMatrix<C64>) -> Result<()> {
        self.validate_targets(targets)?;
        let sub_dim: usize = targets.iter().map(|q| q.dim()).product();
        if u.nrows() != sub_dim || u.ncols() != sub_dim {
            return Err(QsimError::DimensionMismatch { expected: sub_dim, got: u.nrows() });
        }
        if !is_unitary(u) {
            return Err(QsimError::NonUnitary);
        }
        let slot = self.merge_targets(targets)?;
        let factor = self.factors[slot].as_mut().unwrap();

        let dims = factor.dims();
        let strides = factor.strides();
        let tpos: Vec<usize> = targets.iter().map(|q| factor.position_of(*q).unwrap()).collect();
        let rest: Vec<usize> = (0..dims.len()).filter(|p| !tpos.contains(p)).collect();

        // offset of each sub-basis row within the full index space
        let tdims: Vec<usize> = targets.iter().map(|q| q.dim()).collect();
        let offsets: Vec<usize> = (0..sub_dim)
            .map(|row| {
                let digits = gates::index_to_digits(row, &tdims);
                digits.iter().zip(&tpos).map(|(d, p)| d * strides[*p]).sum()
            })
            .collect();

        let mut scratch = vec![C64::ZERO; sub_dim];
        for base in RestCounter::new(&rest, &dims, &strides) {
            for (row, off) in offsets.iter().enumerate() {
                scratch[row] = factor.amps[base + off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = C64::ZERO;
                for (col, s) in scratch.iter().enumerate() {
                    acc += u[(row, col)] * s;
                }
                factor.amps[base + off] = acc;
            }
        }
        self.debug_check();
        Ok(())
    }

    /// Measure targets in the computational basis. The outcome is sampled
    /// from the Born distribution using the registry stream, the state is
    /// collapsed and renormalized. Measured qudits stay allocated.
    pub fn measure_computational(&mut self, targets: &[QuditId]) -> Result<MeasurementRecord> {
        self.validate_targets(targets)?;

        // Group targets by factor in first-appearance order; measure each
        // group jointly with one random draw.
        let mut groups: Vec<(usize, Vec<QuditId>)> = Vec::new();
        for q in targets {
            let slot = self.locator[&q.index];
            match groups.iter_mut().find(|(s, _)| *s == slot) {
                Some((_, list)) => list.push(*q),
                None => groups.push((slot, vec![*q])),
            }
        }

        let mut digit_by_target: HashMap<u32, usize> = HashMap::new();
        let mut probability = 1.0;
        for (slot, group) in groups {
            let (digits, p) = self.measure_factor_subset(slot, &group)?;
            for (q, d) in group.iter().zip(digits) {
                digit_by_target.insert(q.index, d);
            }
            probability *= p;
        }

        let mut outcome: u64 = 0;
        for q in targets {
            outcome = outcome * q.dim() as u64 + digit_by_target[&q.index] as u64;
        }
        self.debug_check();
        Ok(MeasurementRecord { outcome, probability })
    }

    /// Bell measurement of two qubits: projects onto the four states
    /// Φ_ij = (I ⊗ X^i Z^j)|Φ⁺⟩ and returns the sampled (i, j) as a
    /// [`PauliOp`]. Both qubits collapse onto the sampled Φ_ij.
    pub fn bell_measure(&mut self, a: QuditId, b: QuditId) -> Result<PauliOp> {
        if !a.is_qubit() {
            return Err(QsimError::NotAQubit(a));
        }
        if !b.is_qubit() {
            return Err(QsimError::NotAQubit(b));
        }
        self.validate_targets(&[a, b])?;
        let slot = self.merge_targets(&[a, b])?;
        let factor = self.factors[slot].as_mut().unwrap();

        let dims = factor.dims();
        let strides = factor.strides();
        let pa = factor.position_of(a).unwrap();
        let pb = factor.position_of(b).unwrap();
        let rest: Vec<usize> = (0..dims.len()).filter(|p| *p != pa && *p != pb).collect();
        let sa = strides[pa];
        let sb = strides[pb];

        let mut probs = [0.0f64; 4];
        for (k, coeffs) in BELL_COEFFS.iter().enumerate() {
            let mut p = 0.0;
            for base in RestCounter::new(&rest, &dims, &strides) {
                let mut c = C64::ZERO;
                for &(u, v, coef) in coeffs {
                    c += coef.conj() * factor.amps[base + u * sa + v * sb];
                }
                p += c.norm_sqr();
            }
            probs[k] = p;
        }
        let total: f64 = probs.iter().sum();
        debug_assert!(
            (total - 1.0).abs() < 1e-9,
            "bell outcome probabilities sum to {total}, expected 1"
        );

        let draw: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut chosen = 3;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                chosen = k;
                break;
            }
        }
        let p_chosen = probs[chosen];
        let scale = 1.0 / p_chosen.sqrt();
        let coeffs = &BELL_COEFFS[chosen];

        for base in RestCounter::new(&rest, &dims, &strides) {
            let mut c = C64::ZERO;
            for &(u, v, coef) in coeffs {
                c += coef.conj() * factor.amps[base + u * sa + v * sb];
            }
            let c = c * scale;
            for u in 0..2 {
                for v in 0..2 {
                    factor.amps[base + u * sa + v * sb] = C64::ZERO;
                }
            }
            for &(u, v, coef) in coeffs {
                factor.amps[base + u * sa + v * sb] = coef * c;
            }
        }
        self.debug_check();
        Ok(PauliOp::from_bits(chosen as u8))
    }

    /// Reduced density operator of the targets, in the requested order,
    /// obtained by partial trace over everything else in their factors.
    /// Diagnostic only; does not mutate the state.
    pub fn density_of(&self, targets: &[QuditId]) -> Result<DMatrix<C64>> {
        let (temp, tpos) = self.gather_pure(targets)?;
        let dims = temp.dims();
        let strides = temp.strides();
        let rest: Vec<usize> = (0..dims.len()).filter(|p| !tpos.contains(p)).collect();

        let tdims: Vec<usize> = targets.iter().map(|q| q.dim()).collect();
        let m: usize = tdims.iter().product();
        let offsets: Vec<usize> = (0..m)
            .map(|row| {
                let digits = gates::index_to_digits(row, &tdims);
                digits.iter().zip(&tpos).map(|(d, p)| d * strides[*p]).sum()
            })
            .collect();

        let mut rho = DMatrix::from_element(m, m, C64::ZERO);
        for base in RestCounter::new(&rest, &dims, &strides) {
            for (i, oi) in offsets.iter().enumerate() {
                let ai = temp.amps[base + oi];
                if ai == C64::ZERO {
                    continue;
                }
                for (j, oj) in offsets.iter().enumerate() {
                    rho[(i, j)] += ai * temp.amps[base + oj].conj();
                }
            }
        }
        Ok(rho)
    }

    /// Fidelity ⟨ref|ρ|ref⟩ of the targets against a pure reference vector.
    pub fn fidelity(&self, targets: &[QuditId], reference: &[C64]) -> Result<f64> {
        let m: usize = targets.iter().map(|q| q.dim()).product();
        if reference.len() != m {
            return Err(QsimError::DimensionMismatch { expected: m, got: reference.len() });
        }
        let ref_norm: f64 = reference.iter().map(|a| a.norm_sqr()).sum();
        if (ref_norm - 1.0).abs() > 1e-6 {
            return Err(QsimError::InvalidReference);
        }
        let (temp, tpos) = self.gather_pure(targets)?;
        let dims = temp.dims();
        let strides = temp.strides();
        let rest: Vec<usize> = (0..dims.len()).filter(|p| !tpos.contains(p)).collect();
        let tdims: Vec<usize> = targets.iter().map(|q| q.dim()).collect();
        let offsets: Vec<usize> = (0..m)
            .map(|row| {
                let digits = gates::index_to_digits(row, &tdims);
                digits.iter().zip(&tpos).map(|(d, p)| d * strides[*p]).sum()
            })
            .collect();

        let mut fid = 0.0;
        for base in RestCounter::new(&rest, &dims, &strides) {
            let mut c = C64::ZERO;
            for (t, off) in offsets.iter().enumerate() {
                c += reference[t].conj() * temp.amps[base + off];
            }
            fid += c.norm_sqr();
        }
        Ok(fid.clamp(0.0, 1.0))
    }

    /// Probability that `q` would read the given digit if measured now.
    pub fn digit_probability(&self, q: QuditId, digit: usize) -> Result<f64> {
        let (temp, tpos) = self.gather_pure(&[q])?;
        let dims = temp.dims();
        let strides = temp.strides();
        let pos = tpos[0];
        let mut p = 0.0;
        for (idx, amp) in temp.amps.iter().enumerate() {
            if idx / strides[pos] % dims[pos] == digit {
                p += amp.norm_sqr();
            }
        }
        Ok(p)
    }

    /// Remove the `digit` component of `q`, failing if its amplitude exceeds
    /// `max_amp`. Non-physical projection used by corruption checks.
    pub(crate) fn project_out_digit(&mut self, q: QuditId, digit: usize, max_amp: f64) -> Result<()> {
        self.validate_targets(&[q])?;
        let p = self.digit_probability(q, digit)?;
        if p.sqrt() > max_amp {
            return Err(QsimError::ResidualAmplitude { digit, amp: p.sqrt() });
        }
        let slot = self.locator[&q.index];
        let factor = self.factors[slot].as_mut().unwrap();
        let dims = factor.dims();
        let strides = factor.strides();
        let pos = factor.position_of(q).unwrap();
        let scale = 1.0 / (1.0 - p).sqrt();
        for (idx, amp) in factor.amps.iter_mut().enumerate() {
            if idx / strides[pos] % dims[pos] == digit {
                *amp = C64::ZERO;
            } else {
                *amp *= scale;
            }
        }
        self.debug_check();
        Ok(())
    }

    /// Measure targets out in the computational basis and remove them from
    /// the registry, so the remaining factors stay normalized pure states.
    pub fn discard(&mut self, targets: &[QuditId]) -> Result<()> {
        self.measure_computational(targets)?;
        for q in targets {
            let slot = self.locator[&q.index];
            let factor = self.factors[slot].as_mut().unwrap();
            let dims = factor.dims();
            let strides = factor.strides();
            let pos = factor.position_of(*q).unwrap();

            // after collapse exactly one digit of q carries amplitude
            let mut fixed = 0;
            'outer: for (idx, amp) in factor.amps.iter().enumerate() {
                if amp.norm_sqr() > 0.0 {
                    fixed = idx / strides[pos] % dims[pos];
                    break 'outer;
                }
            }

            let keep: Vec<usize> = (0..dims.len()).filter(|p| *p != pos).collect();
            let mut new_amps = Vec::with_capacity(factor.amps.len() / dims[pos]);
            let fixed_off = fixed * strides[pos];
            for base in RestCounter::new(&keep, &dims, &strides) {
                new_amps.push(factor.amps[base + fixed_off]);
            }
            factor.members.remove(pos);
            factor.amps = new_amps;
            let empty = factor.members.is_empty();
            self.locator.remove(&q.index);
            if empty {
                self.factors[slot] = None;
            }
        }
        self.debug_check();
        Ok(())
    }

    /// Debug dump of the factor containing `q` as `label re im` lines.
    pub fn dump_factor(&self, q: QuditId) -> Result<String> {
        let slot = *self.locator.get(&q.index).ok_or(QsimError::DeadQudit(q))?;
        Ok(self.factors[slot].as_ref().unwrap().dump())
    }

    /// Members of the factor containing `q`.
    pub fn factor_members(&self, q: QuditId) -> Result<Vec<QuditId>> {
        let slot = *self.locator.get(&q.index).ok_or(QsimError::DeadQudit(q))?;
        Ok(self.factors[slot].as_ref().unwrap().members.clone())
    }

    /// Check the partition and norm invariants; returns the first violation.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen: HashMap<u32, usize> = HashMap::new();
        for (slot, factor) in self.factors.iter().enumerate() {
            let Some(factor) = factor else { continue };
            if factor.members.is_empty() {
                return Err(QsimError::InvariantViolation(format!("factor {slot} is empty")));
            }
            let expected: usize = factor.dims().iter().product();
            if factor.amps.len() != expected {
                return Err(QsimError::InvariantViolation(format!(
                    "factor {slot} has {} amplitudes, expected {expected}",
                    factor.amps.len()
                )));
            }
            let norm = factor.norm_sqr().sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(QsimError::InvariantViolation(format!(
                    "factor {slot} norm {norm} deviates from 1"
                )));
            }
            for q in &factor.members {
                if seen.insert(q.index, slot).is_some() {
                    return Err(QsimError::InvariantViolation(format!(
                        "qudit {q} appears in more than one factor"
                    )));
                }
                if self.locator.get(&q.index) != Some(&slot) {
                    return Err(QsimError::InvariantViolation(format!(
                        "locator does not map {q} to its factor"
                    )));
                }
            }
        }
        for (index, slot) in &self.locator {
            if seen.get(index) != Some(slot) {
                return Err(QsimError::InvariantViolation(format!(
                    "locator entry for index {index} points to a stale factor"
                )));
            }
        }
        Ok(())
    }

    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_invariants() {
            panic!("{e}");
        }
    }

    fn free_slot(&mut self) -> usize {
        match self.factors.iter().position(|f| f.is_none()) {
            Some(slot) => slot,
            None => {
                self.factors.push(None);
                self.factors.len() - 1
            }
        }
    }

    fn validate_targets(&self, targets: &[QuditId]) -> Result<()> {
        if targets.is_empty() {
            return Err(QsimError::EmptyTargets);
        }
        for (i, q) in targets.iter().enumerate() {
            if !self.is_live(*q) {
                return Err(QsimError::DeadQudit(*q));
            }
            if targets[..i].contains(q) {
                return Err(QsimError::DuplicateTargets);
            }
        }
        Ok(())
    }

    /// Merge the factors containing the targets into one; returns its slot.
    fn merge_targets(&mut self, targets: &[QuditId]) -> Result<usize> {
        let mut slots: Vec<usize> = Vec::new();
        for q in targets {
            let slot = self.locator[&q.index];
            if !slots.contains(&slot) {
                slots.push(slot);
            }
        }
        let merged_dim: usize = slots
            .iter()
            .map(|&s| self.factors[s].as_ref().unwrap().dim())
            .product();
        if merged_dim > self.max_dim {
            return Err(QsimError::FactorTooLarge { dim: merged_dim, max: self.max_dim });
        }
        let first = slots[0];
        for &slot in &slots[1..] {
            let other = self.factors[slot].take().unwrap();
            let target = self.factors[first].take().unwrap();
            let merged = target.merged_with(&other);
            for q in &other.members {
                self.locator.insert(q.index, first);
            }
            self.factors[first] = Some(merged);
        }
        Ok(first)
    }

    /// Measure a subset of one factor jointly; returns per-target digits and
    /// the joint probability.
    fn measure_factor_subset(&mut self, slot: usize, group: &[QuditId]) -> Result<(Vec<usize>, f64)> {
        let factor = self.factors[slot].as_mut().unwrap();
        let dims = factor.dims();
        let strides = factor.strides();
        let tpos: Vec<usize> = group.iter().map(|q| factor.position_of(*q).unwrap()).collect();
        let tdims: Vec<usize> = group.iter().map(|q| q.dim()).collect();
        let m: usize = tdims.iter().product();

        let mut probs = vec![0.0f64; m];
        for (idx, amp) in factor.amps.iter().enumerate() {
            if amp == &C64::ZERO {
                continue;
            }
            let mut sub = 0;
            for (d, p) in tdims.iter().zip(&tpos) {
                sub = sub * d + idx / strides[*p] % dims[*p];
            }
            probs[sub] += amp.norm_sqr();
        }

        let draw: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut chosen = m - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                chosen = k;
                break;
            }
        }
        let p_chosen = probs[chosen];
        let scale = 1.0 / p_chosen.sqrt();
        for (idx, amp) in factor.amps.iter_mut().enumerate() {
            let mut sub = 0;
            for (d, p) in tdims.iter().zip(&tpos) {
                sub = sub * d + idx / strides[*p] % dims[*p];
            }
            if sub == chosen {
                *amp *= scale;
            } else {
                *amp = C64::ZERO;
            }
        }

        let digits = gates::index_to_digits(chosen, &tdims);
        Ok((digits, p_chosen))
    }

    /// Clone and merge the factors containing the targets into a temporary
    /// pure state; returns it with the position of each requested target.
    fn gather_pure(&self, targets: &[QuditId]) -> Result<(StateFactor, Vec<usize>)> {
        self.validate_targets(targets)?;
        let mut slots: Vec<usize> = Vec::new();
        for q in targets {
            let slot = self.locator[&q.index];
            if !slots.contains(&slot) {
                slots.push(slot);
            }
        }
        let mut temp = self.factors[slots[0]].as_ref().unwrap().clone();
        for &slot in &slots[1..] {
            temp = temp.merged_with(self.factors[slot].as_ref().unwrap());
        }
        if temp.dim() > self.max_dim {
            return Err(QsimError::FactorTooLarge { dim: temp.dim(), max: self.max_dim });
        }
        let tpos: Vec<usize> = targets.iter().map(|q| temp.position_of(*q).unwrap()).collect();
        Ok((temp, tpos))
    }
}

/// Coefficients of the four Bell states Φ_ij = (I ⊗ X^i Z^j)|Φ⁺⟩, indexed by
/// the two-bit label (i << 1) | j. Entries are (digit of first qubit, digit
/// of second qubit, amplitude).
const BELL_COEFFS: [[(usize, usize, C64); 2]; 4] = {
    const S: f64 = FRAC_1_SQRT_2_CONST;
    [
        // Φ_00 = (|00⟩ + |11⟩)/√2
        [(0, 0, C64::new(S, 0.0)), (1, 1, C64::new(S, 0.0))],
        // Φ_01 = (I⊗Z)Φ⁺ = (|00⟩ − |11⟩)/√2
        [(0, 0, C64::new(S, 0.0)), (1, 1, C64::new(-S, 0.0))],
        // Φ_10 = (I⊗X)Φ⁺ = (|01⟩ + |10⟩)/√2
        [(0, 1, C64::new(S, 0.0)), (1, 0, C64::new(S, 0.0))],
        // Φ_11 = (I⊗XZ)Φ⁺ = (|01⟩ − |10⟩)/√2
        [(0, 1, C64::new(S, 0.0)), (1, 0, C64::new(-S, 0.0))],
    ]
};

const FRAC_1_SQRT_2_CONST: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn is_unitary(u: &DMatrix<C64>) -> bool {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    for r in 0..n {
        for c in 0..n {
            let expected = if r == c { C64::ONE } else { C64::ZERO };
            if (prod[(r, c)] - expected).norm() > 1e-10 {
                return false;
            }
        }
    }
    true
}

/// Sample a Haar-random pure state of the given dimension.
pub fn haar_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    // complex standard normals via Box-Muller, then normalize
    let mut v = Vec::with_capacity(dim);
    for _ in 0..dim {
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        v.push(C64::new(r * theta.cos(), r * theta.sin()));
    }
    let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|a| a / norm).collect()
}

/// Unitary whose first column is the given unit vector; applying it to
/// |0..0⟩ prepares the state.
pub fn state_preparation(amps: &[C64]) -> DMatrix<C64> {
    let n = amps.len();
    let mut cols: Vec<Vec<C64>> = vec![amps.to_vec()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![C64::ZERO; n];
        v[k] = C64::ONE;
        for existing in &cols {
            let overlap: C64 = existing.iter().zip(&v).map(|(e, x)| e.conj() * x).sum();
            for (vi, ei) in v.iter_mut().zip(existing) {
                *vi -= overlap * ei;
            }
        }
        let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            cols.push(v);
        }
    }
    assert_eq!(cols.len(), n, "failed to complete preparation basis");
    DMatrix::from_fn(n, n, |r, c| cols[c][r])
}
