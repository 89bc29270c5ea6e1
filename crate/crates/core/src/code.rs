//! Fixed-length binary codes and their Hamming distance.

use std::fmt;

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// An `len`-bit code. Bit `k` lives in `words[k / 64]` at position `k % 64`;
/// unused high bits of the last word are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    len: usize,
    words: Vec<u64>,
}

impl BinaryCode {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut code = Self::zeros(len);
        for k in 0..len {
            code.set(k, true);
        }
        code
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut code = Self::zeros(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            code.set(k, b);
        }
        code
    }

    /// Builds a code of at most 64 bits from the low `len` bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Self {
            len,
            words: if len == 0 { vec![] } else { vec![value & mask] },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.len);
        (self.words[k / 64] >> (k % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, k: usize, bit: bool) {
        assert!(k < self.len);
        let mask = 1u64 << (k % 64);
        if bit {
            self.words[k / 64] |= mask;
        } else {
            self.words[k / 64] &= !mask;
        }
    }

    /// `+1.0` for set bits, `-1.0` otherwise.
    pub fn to_signs(&self) -> Vec<f64> {
        (0..self.len)
            .map(|k| if self.get(k) { 1.0 } else { -1.0 })
            .collect()
    }

    /// Lowercase hex of the code read as an unsigned integer, most
    /// significant digit first, `ceil(len / 4)` digits wide.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u8;
            for b in 0..4 {
                let k = d * 4 + b;
                if k < self.len && self.get(k) {
                    nibble |= 1 << b;
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Dimension(format!(
                "hex code `{hex}` has {} digits, expected {} for {len} bits",
                hex.len(),
                len.div_ceil(4)
            )));
        }
        let mut code = Self::zeros(len);
        for (pos, ch) in hex.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parameter(format!("invalid hex digit `{ch}` in `{hex}`")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let k = pos * 4 + b;
                    if k >= len {
                        return Err(Error::Parameter(format!("hex code `{hex}` exceeds {len} bits")));
                    }
                    code.set(k, true);
                }
            }
        }
        Ok(code)
    }
}

impl fmt::Display for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Number of differing bits: `popcount(a XOR b)`.
pub fn hamming(a: &BinaryCode, b: &BinaryCode) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::Dimension(format!(
            "code lengths differ: {} vs {}",
            a.len, b.len
        )));
    }
    Ok(hamming_words(&a.words, &b.words))
}

#[inline]
pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Codes of one length packed contiguously, for all-pairs scans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBook {
    code_len: usize,
    stride: usize,
    words: Vec<u64>,
}

impl CodeBook {
    pub fn new(codes: &[BinaryCode]) -> Result<Self> {
        let code_len = codes.first().map_or(0, BinaryCode::len);
        let stride = code_len.div_ceil(64);
        let mut words = Vec::with_capacity(codes.len() * stride);
        for c in codes {
            if c.len() != code_len {
                return Err(Error::Dimension(format!(
                    "mixed code lengths {} and {}",
                    code_len,
                    c.len()
                )));
            }
            words.extend_from_slice(c.words());
        }
        Ok(Self {
            code_len,
            stride,
            words,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len().checked_div(self.stride).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn code_len(&self) -> usize {
        self.code_len
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    /// Strict upper triangle of the Hamming matrix, row-major
    /// (`(0,1), (0,2), …, (n-2,n-1)`).
    pub fn condensed(&self, exec: Execution) -> Vec<u16> {
        let n = self.len();
        let rows = par::map_indexed(n, exec, |i| self.condensed_row(i));
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for r in rows {
            out.extend_from_slice(&r);
        }
        out
    }

    fn condensed_row(&self, i: usize) -> Vec<u16> {
        let n = self.len();
        if self.stride == 1 {
            let x = self.words[i];
            self.words[i + 1..n]
                .iter()
                .map(|&y| (x ^ y).count_ones() as u16)
                .collect()
        } else {
            let a = self.row(i);
            (i + 1..n)
                .map(|j| hamming_words(a, self.row(j)) as u16)
                .collect()
        }
    }
}
