//! Variable contexts and exponent vectors.
//!
//! A series lives over an ordered list of named blocks of variables, e.g.
//! (z: n, w: d, chi: n, tau: d) for a complexified source. Monomials are
//! dense exponent vectors over the concatenation of all blocks, ordered by
//! total degree first and lexicographically within a degree, so that map
//! iteration (and therefore display, serialization and greedy row selection)
//! is deterministic.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::{Error, Result};

/// An ordered collection of named variable blocks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VariableBlocks {
    names: Vec<String>,
    lens: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl VariableBlocks {
    /// Builds a context from (name, arity) pairs. Names must be unique and
    /// nonempty; zero-arity blocks are allowed and simply contribute no
    /// variables.
    pub fn new(blocks: &[(&str, usize)]) -> Result<Self> {
        let mut names = Vec::with_capacity(blocks.len());
        let mut lens = Vec::with_capacity(blocks.len());
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0usize;
        for (name, len) in blocks {
            if name.is_empty() || names.iter().any(|n| n == name) {
                return Err(Error::HypothesisNotMet {
                    context: "variable blocks",
                    detail: name.to_string(),
                });
            }
            names.push(name.to_string());
            lens.push(*len);
            offsets.push(total);
            total += len;
        }
        Ok(VariableBlocks { names, lens, offsets, total })
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn block_count(&self) -> usize {
        self.names.len()
    }

    pub fn block_name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn block_len(&self, idx: usize) -> usize {
        self.lens[idx]
    }

    /// Offset and arity of the named block.
    pub fn block(&self, name: &str) -> Result<(usize, usize)> {
        for (i, n) in self.names.iter().enumerate() {
            if n == name {
                return Ok((self.offsets[i], self.lens[i]));
            }
        }
        Err(Error::HypothesisNotMet { context: "variable block lookup", detail: name.to_string() })
    }

    pub fn has_block(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// Index of a single variable: block name plus zero-based position.
    pub fn var(&self, block: &str, pos: usize) -> Result<usize> {
        let (off, len) = self.block(block)?;
        if pos >= len {
            return Err(Error::DimensionMismatch { expected: len, found: pos });
        }
        Ok(off + pos)
    }

    /// Human-readable name of variable `idx`: block name with a 1-based
    /// subscript, or the bare block name for singleton blocks.
    pub fn var_name(&self, idx: usize) -> String {
        for (i, &off) in self.offsets.iter().enumerate() {
            if idx >= off && idx < off + self.lens[i] {
                return if self.lens[i] == 1 {
                    self.names[i].clone()
                } else {
                    let mut s = self.names[i].clone();
                    s.push_str(&(idx - off + 1).to_string());
                    return s;
                };
            }
        }
        panic!("variable index {idx} out of range");
    }

    /// A new context consisting of this one followed by `extra` blocks.
    pub fn extended(&self, extra: &[(&str, usize)]) -> Result<Self> {
        let mut blocks: Vec<(&str, usize)> =
            self.names.iter().map(|n| n.as_str()).zip(self.lens.iter().copied()).collect();
        blocks.extend_from_slice(extra);
        VariableBlocks::new(&blocks)
    }

    /// Short textual signature, used in error messages.
    pub fn signature(&self) -> String {
        let mut s = String::from("(");
        for i in 0..self.names.len() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&self.names[i]);
            s.push(':');
            s.push_str(&self.lens[i].to_string());
        }
        s.push(')');
        s
    }
}

/// A monomial's exponent vector. Ordered by total degree, then
/// lexicographically on the raw vector.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Exponents(Vec<u32>);

impl Exponents {
    pub fn zero(len: usize) -> Self {
        Exponents(vec![0; len])
    }

    pub fn unit(len: usize, idx: usize) -> Self {
        let mut e = vec![0; len];
        e[idx] = 1;
        Exponents(e)
    }

    pub fn from_vec(v: Vec<u32>) -> Self {
        Exponents(v)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, idx: usize) -> u32 {
        self.0[idx]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Sum of exponent vectors (monomial product).
    pub fn plus(&self, other: &Exponents) -> Exponents {
        assert_eq!(self.0.len(), other.0.len());
        Exponents(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn bumped(&self, idx: usize, by: u32) -> Exponents {
        let mut e = self.0.clone();
        e[idx] += by;
        Exponents(e)
    }

    /// Componentwise difference, or None if any component would go negative.
    pub fn checked_sub(&self, other: &Exponents) -> Option<Exponents> {
        assert_eq!(self.0.len(), other.0.len());
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(Exponents(out))
    }

    /// Total degree restricted to `len` variables starting at `offset`.
    pub fn degree_in_range(&self, offset: usize, len: usize) -> u32 {
        self.0[offset..offset + len].iter().sum()
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        let (da, db) = (self.degree(), other.degree());
        da.cmp(&db).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

/// All multiindices in `dim` variables of total degree exactly `degree`, in
/// the same order induced by `Exponents::cmp` within one degree.
pub fn multiindices_of_degree(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, degree: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if dim == 1 {
            let mut v = prefix.clone();
            v.push(degree);
            out.push(v);
            return;
        }
        for first in 0..=degree {
            prefix.push(first);
            rec(dim - 1, degree - first, prefix, out);
            prefix.pop();
        }
    }
    if dim == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    rec(dim, degree, &mut Vec::new(), &mut out);
    out
}

/// All multiindices in `dim` variables of total degree at most `max_degree`,
/// sorted by (degree, lex).
pub fn multiindices_up_to(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for g in 0..=max_degree {
        out.extend(multiindices_of_degree(dim, g));
    }
    out
}

/// Number of multiindices in `dim` variables of degree at most `max_degree`,
/// i.e. the binomial coefficient C(dim + max_degree, dim).
pub fn multiindex_count(dim: usize, max_degree: u32) -> usize {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for j in 1..=dim as u128 {
        num *= max_degree as u128 + j;
        den *= j;
    }
    (num / den) as usize
}

/// alpha! as a big integer.
pub fn factorial_of(alpha: &[u32]) -> BigInt {
    let mut acc = BigInt::one();
    for &a in alpha {
        for k in 2..=a {
            acc *= BigInt::from(k);
        }
    }
    acc
}
