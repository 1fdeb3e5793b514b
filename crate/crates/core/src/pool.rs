//! Ordered, deduplicated pools of sampled computational-basis states.
//!
//! The pool defines the subspace used by the sample-based Krylov
//! diagonalization step. Order is first-occurrence insertion order, which
//! makes pools (and everything derived from them) deterministic given
//! identical sampling inputs.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Where a pool entry was first observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolOrigin {
    /// Index of the datapoint whose Hamiltonian generated the sample.
    pub datapoint: u32,
    /// Krylov index k of the circuit that produced the sample.
    pub krylov_index: u32,
}

impl PoolOrigin {
    pub fn new(datapoint: u32, krylov_index: u32) -> PoolOrigin {
        PoolOrigin { datapoint, krylov_index }
    }
}

/// Ordered set of distinct n-bit strings with an index map and provenance.
#[derive(Debug, Clone)]
pub struct BitstringPool {
    n: u32,
    bits: Vec<u64>,
    index: HashMap<u64, u32>,
    provenance: Vec<PoolOrigin>,
}

impl BitstringPool {
    pub fn new(n: u32) -> BitstringPool {
        BitstringPool { n, bits: Vec::new(), index: HashMap::new(), provenance: Vec::new() }
    }

    pub fn from_bitstrings(n: u32, bits: impl IntoIterator<Item = u64>) -> Result<BitstringPool> {
        let mut pool = BitstringPool::new(n);
        for b in bits {
            pool.insert(b, PoolOrigin::new(0, 0))?;
        }
        Ok(pool)
    }

    /// Full computational basis on n qubits (test and oracle helper).
    pub fn full_basis(n: u32) -> Result<BitstringPool> {
        if n > 24 {
            return Err(Error::invalid("full basis pool limited to n <= 24"));
        }
        BitstringPool::from_bitstrings(n, 0..(1u64 << n))
    }

    /// Insert a bitstring; returns true if it was new.
    pub fn insert(&mut self, b: u64, origin: PoolOrigin) -> Result<bool> {
        if self.n < 64 && b >> self.n != 0 {
            return Err(Error::invalid(format!("bitstring {b:#b} wider than n={}", self.n)));
        }
        if self.index.contains_key(&b) {
            return Ok(false);
        }
        let pos = self.bits.len() as u32;
        self.bits.push(b);
        self.index.insert(b, pos);
        self.provenance.push(origin);
        Ok(true)
    }

    /// Merge another pool, keeping first-occurrence order.
    pub fn union_with(&mut self, other: &BitstringPool) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        for (i, &b) in other.bits.iter().enumerate() {
            self.insert(b, other.provenance[i])?;
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bitstrings(&self) -> &[u64] {
        &self.bits
    }

    pub fn provenance(&self) -> &[PoolOrigin] {
        &self.provenance
    }

    pub fn contains(&self, b: u64) -> bool {
        self.index.contains_key(&b)
    }

    pub fn index_of(&self, b: u64) -> Option<usize> {
        self.index.get(&b).map(|&i| i as usize)
    }

    /// Write the pool dump: a header recording the sampling configuration,
    /// then one MSB-first bitstring per line.
    pub fn write_dump<W: Write>(
        &self,
        mut w: W,
        krylov_dim: usize,
        dt: f64,
        shots: usize,
        seed: u64,
    ) -> Result<()> {
        writeln!(w, "# n={} krylov_dim={} dt={} shots={} seed={}", self.n, krylov_dim, dt, shots, seed)?;
        for &b in &self.bits {
            writeln!(w, "{}", render_bits(self.n, b))?;
        }
        Ok(())
    }

    /// Read a pool dump written by [`write_dump`](Self::write_dump).
    /// Header fields other than n are ignored on load.
    pub fn read_dump<R: BufRead>(r: R) -> Result<BitstringPool> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty pool dump".into()))??;
        let n = header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix("n=").and_then(|v| v.parse::<u32>().ok()))
            .ok_or_else(|| Error::Data("pool dump header missing n=".into()))?;
        let mut pool = BitstringPool::new(n);
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.len() != n as usize {
                return Err(Error::Data(format!(
                    "pool dump line '{line}' does not have {n} bits"
                )));
            }
            let b = u64::from_str_radix(line, 2)
                .map_err(|_| Error::Data(format!("pool dump line '{line}' is not binary")))?;
            pool.insert(b, PoolOrigin::new(0, 0))?;
        }
        Ok(pool)
    }
}

/// MSB-first textual rendering of an n-bit string.
pub fn render_bits(n: u32, b: u64) -> String {
    (0..n).rev().map(|q| if b >> q & 1 == 1 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order_and_dedup() {
        let mut pool = BitstringPool::new(2);
        assert!(pool.insert(0b10, PoolOrigin::new(0, 0)).unwrap());
        assert!(pool.insert(0b01, PoolOrigin::new(0, 1)).unwrap());
        assert!(!pool.insert(0b10, PoolOrigin::new(1, 0)).unwrap());
        assert_eq!(pool.bitstrings(), &[0b10, 0b01]);
        assert_eq!(pool.index_of(0b01), Some(1));
        assert_eq!(pool.provenance()[0], PoolOrigin::new(0, 0));
    }

    #[test]
    fn union_keeps_first_occurrence_order() {
        let a = BitstringPool::from_bitstrings(2, [0b00, 0b01]).unwrap();
        let b = BitstringPool::from_bitstrings(2, [0b01, 0b11]).unwrap();
        let mut u = a.clone();
        u.union_with(&b).unwrap();
        assert_eq!(u.bitstrings(), &[0b00, 0b01, 0b11]);
    }

    #[test]
    fn dump_round_trip() {
        let pool = BitstringPool::from_bitstrings(3, [0b101, 0b010, 0b111]).unwrap();
        let mut buf = Vec::new();
        pool.write_dump(&mut buf, 8, 0.05, 200, 7).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# n=3 krylov_dim=8 dt=0.05 shots=200 seed=7"));
        assert!(text.contains("\n101\n"));
        let back = BitstringPool::read_dump(&buf[..]).unwrap();
        assert_eq!(back.bitstrings(), pool.bitstrings());
        assert_eq!(back.num_qubits(), 3);
    }

    #[test]
    fn oversized_bitstring_rejected() {
        let mut pool = BitstringPool::new(2);
        assert!(pool.insert(0b100, PoolOrigin::new(0, 0)).is_err());
    }
}
