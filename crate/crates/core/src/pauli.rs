//! Bitmask algebra for n-qubit Pauli strings and real-weighted Pauli sums.
//!
//! A Pauli string is stored as a pair of masks: `x_mask` marks qubits
//! carrying X or Y, `z_mask` marks qubits carrying Z or Y (both set = Y,
//! neither = identity). Applying a string to a computational basis state is
//! then a XOR plus an exactly tracked phase in {+1, +i, -1, -i}, which keeps
//! the algebra symbolic up to 64 qubits.
//!
//! Convention: qubit 0 is the least-significant bit of a bitstring; the
//! textual rendering prints qubit 0 rightmost.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pool::BitstringPool;

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "X"),
            Axis::Y => write!(f, "Y"),
            Axis::Z => write!(f, "Z"),
        }
    }
}

/// A power of i, tracked exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);

    pub fn from_quarter_turns(k: u8) -> Phase {
        Phase(k % 4)
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_c64(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Real value for phases known to be ±1. Panics on imaginary phases.
    pub fn to_f64(self) -> f64 {
        match self.0 {
            0 => 1.0,
            2 => -1.0,
            _ => panic!("imaginary phase has no real value"),
        }
    }
}

/// An n-qubit Pauli string in (x_mask, z_mask) form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u32,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(n: u32, x_mask: u64, z_mask: u64) -> Result<PauliString> {
        if n == 0 || n > 64 {
            return Err(Error::invalid(format!("qubit count {n} out of range 1..=64")));
        }
        let valid = mask_for(n);
        if x_mask & !valid != 0 || z_mask & !valid != 0 {
            return Err(Error::invalid("mask has bits at position >= n"));
        }
        Ok(PauliString { n, x_mask, z_mask })
    }

    /// Identity on n qubits.
    pub fn identity(n: u32) -> PauliString {
        PauliString { n, x_mask: 0, z_mask: 0 }
    }

    /// Single-axis string acting on one qubit.
    pub fn single(n: u32, qubit: u32, axis: Axis) -> Result<PauliString> {
        if qubit >= n {
            return Err(Error::invalid(format!("qubit {qubit} out of range for n={n}")));
        }
        let bit = 1u64 << qubit;
        let (x, z) = match axis {
            Axis::X => (bit, 0),
            Axis::Y => (bit, bit),
            Axis::Z => (0, bit),
        };
        PauliString::new(n, x, z)
    }

    /// String with the given axes on the given qubits, identity elsewhere.
    pub fn from_axes(n: u32, factors: &[(u32, Axis)]) -> Result<PauliString> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &(q, a) in factors {
            if q >= n {
                return Err(Error::invalid(format!("qubit {q} out of range for n={n}")));
            }
            let bit = 1u64 << q;
            if (x | z) & bit != 0 {
                return Err(Error::invalid(format!("duplicate factor on qubit {q}")));
            }
            match a {
                Axis::X => x |= bit,
                Axis::Y => {
                    x |= bit;
                    z |= bit;
                }
                Axis::Z => z |= bit,
            }
        }
        PauliString::new(n, x, z)
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Number of non-identity tensor factors.
    pub fn locality(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn has_y(&self) -> bool {
        self.x_mask & self.z_mask != 0
    }

    pub fn axis_on(&self, qubit: u32) -> Option<Axis> {
        let bit = 1u64 << qubit;
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    /// Apply the string to a computational basis state.
    ///
    /// Per qubit: X flips, Z contributes (-1)^{b_q}, Y flips with phase
    /// i·(-1)^{b_q}. The result is exact: `P|b> = phase |b ^ x_mask>`.
    pub fn apply_to_basis(&self, b: u64) -> (Phase, u64) {
        let z_hits = (self.z_mask & b).count_ones();
        let y_count = (self.x_mask & self.z_mask).count_ones();
        let quarter = (2 * z_hits + y_count) % 4;
        (Phase::from_quarter_turns(quarter as u8), b ^ self.x_mask)
    }

    /// `<b_row| P |b_col>`, exactly 0 or a phase from {±1, ±i}.
    pub fn matrix_element(&self, b_row: u64, b_col: u64) -> Complex64 {
        if b_row != b_col ^ self.x_mask {
            return Complex64::new(0.0, 0.0);
        }
        self.apply_to_basis(b_col).0.to_c64()
    }

    fn check_bits(&self, b: u64) -> Result<()> {
        if b & !mask_for(self.n) != 0 {
            return Err(Error::invalid(format!(
                "bitstring {b:#b} has bits outside qubit range n={}",
                self.n
            )));
        }
        Ok(())
    }

    /// Variant of [`apply_to_basis`](Self::apply_to_basis) that validates
    /// the input width.
    pub fn try_apply_to_basis(&self, b: u64) -> Result<(Phase, u64)> {
        self.check_bits(b)?;
        Ok(self.apply_to_basis(b))
    }
}

impl fmt::Display for PauliString {
    /// Fixed-length axis word, qubit 0 rightmost.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n).rev() {
            let c = match self.axis_on(q) {
                None => 'I',
                Some(Axis::X) => 'X',
                Some(Axis::Y) => 'Y',
                Some(Axis::Z) => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let n = s.len() as u32;
        let mut x = 0u64;
        let mut z = 0u64;
        for (i, c) in s.chars().enumerate() {
            let q = n - 1 - i as u32;
            let bit = 1u64 << q;
            match c {
                'I' => {}
                'X' => x |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                'Z' => z |= bit,
                other => return Err(Error::invalid(format!("invalid axis character '{other}'"))),
            }
        }
        PauliString::new(n, x, z)
    }
}

fn mask_for(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Real-weighted sum of distinct Pauli strings; Hermitian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperator {
    n: u32,
    terms: Vec<(f64, PauliString)>,
}

impl PauliOperator {
    pub fn zero(n: u32) -> PauliOperator {
        PauliOperator { n, terms: Vec::new() }
    }

    /// Build from (coefficient, string) pairs. Duplicate strings are merged
    /// by summing coefficients; first-occurrence order is kept so operators
    /// assembled over a pattern preserve pattern order.
    pub fn from_terms(n: u32, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<PauliOperator> {
        let mut op = PauliOperator::zero(n);
        for (c, s) in terms {
            op.add_term(c, s)?;
        }
        Ok(op)
    }

    pub fn add_term(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: string.num_qubits() });
        }
        if !coeff.is_finite() {
            return Err(Error::invalid("non-finite coefficient"));
        }
        if let Some(entry) = self
            .terms
            .iter_mut()
            .find(|(_, s)| s.x_mask == string.x_mask && s.z_mask == string.z_mask)
        {
            entry.0 += coeff;
        } else {
            self.terms.push((coeff, string));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn has_y(&self) -> bool {
        self.terms.iter().any(|(_, s)| s.has_y())
    }

    /// Sum of |coefficients|; upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Apply to a statevector (unnormalized result).
    pub fn apply_to_state(&self, psi: &Statevector) -> Result<Statevector> {
        if psi.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: psi.num_qubits() });
        }
        let dim = psi.amplitudes().len();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for &(c, s) in &self.terms {
            for b in 0..dim as u64 {
                let (phase, b_out) = s.apply_to_basis(b);
                out[b_out as usize] += c * phase.to_c64() * psi.amplitudes()[b as usize];
            }
        }
        Ok(Statevector::from_amplitudes_unchecked(self.n, out))
    }

    /// Project onto the span of a bitstring pool: entry (i, j) is
    /// `<b_i| A |b_j>`. Transitions leaving the pool are dropped.
    pub fn project(&self, pool: &BitstringPool) -> Result<nalgebra::DMatrix<Complex64>> {
        if pool.is_empty() {
            return Err(Error::invalid("cannot project onto an empty pool"));
        }
        if pool.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: pool.num_qubits() });
        }
        let dim = pool.len();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for &(c, s) in &self.terms {
            for (j, &b) in pool.bitstrings().iter().enumerate() {
                let (phase, b_out) = s.apply_to_basis(b);
                if let Some(i) = pool.index_of(b_out) {
                    m[(i, j)] += c * phase.to_c64();
                }
            }
        }
        Ok(m)
    }
}

/// Dense statevector over the full 2^n-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: u32,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn from_amplitudes(n: u32, amps: Vec<Complex64>) -> Result<Statevector> {
        if n == 0 || n > 30 {
            return Err(Error::invalid(format!("statevector qubit count {n} out of range 1..=30")));
        }
        if amps.len() != 1 << n {
            return Err(Error::invalid(format!(
                "amplitude count {} does not match 2^{n}",
                amps.len()
            )));
        }
        Ok(Statevector { n, amps })
    }

    pub(crate) fn from_amplitudes_unchecked(n: u32, amps: Vec<Complex64>) -> Statevector {
        Statevector { n, amps }
    }

    pub fn basis_state(n: u32, b: u64) -> Result<Statevector> {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[b as usize] = Complex64::new(1.0, 0.0);
        Statevector::from_amplitudes(n, amps)
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
    }

    /// Born probability of measuring bitstring `b`.
    pub fn probability(&self, b: u64) -> f64 {
        self.amps[b as usize].norm_sqr()
    }
}
