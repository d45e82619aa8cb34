use std::fmt;

use crate::error::FormatError;

/// A finite, MSB-first sequence of bits.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitString(Vec::with_capacity(bits))
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse_binary(s: &str) -> Result<Self, FormatError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(FormatError::new(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: u32) {
        for shift in (0..width).rev() {
            self.0.push((value >> shift) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    /// Reads `width` bits starting at `pos` as an unsigned big-endian integer.
    /// Returns `None` when the range runs past the end.
    pub fn read_uint(&self, pos: usize, width: u32) -> Option<u64> {
        read_uint(&self.0, pos, width)
    }

    /// Hex rendering, zero-padded on the right to a whole number of nibbles.
    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|chunk| {
                let mut nibble = 0u8;
                for i in 0..4 {
                    nibble <<= 1;
                    if chunk.get(i).copied().unwrap_or(false) {
                        nibble |= 1;
                    }
                }
                char::from_digit(u32::from(nibble), 16).expect("nibble < 16")
            })
            .collect()
    }

    /// Inverse of [`BitString::to_hex`]; `bits` selects how many leading bits
    /// of the hex string are significant. Padding bits must be zero.
    pub fn from_hex(hex: &str, bits: usize) -> Result<Self, FormatError> {
        let hex = hex.trim();
        let expected = bits.div_ceil(4);
        if hex.len() != expected {
            return Err(FormatError::new(format!(
                "expected {expected} hex digits for {bits} bits, found {}",
                hex.len()
            )));
        }
        let mut out = BitString::with_capacity(expected * 4);
        for c in hex.chars() {
            let digit = c.to_digit(16).ok_or_else(|| FormatError::new(format!("invalid hex digit {c:?}")))?;
            out.push_uint(u64::from(digit), 4);
        }
        if out.0[bits..].iter().any(|&b| b) {
            return Err(FormatError::new("nonzero padding bits after declared length"));
        }
        out.0.truncate(bits);
        Ok(out)
    }
}

pub(crate) fn read_uint(bits: &[bool], pos: usize, width: u32) -> Option<u64> {
    let end = pos.checked_add(width as usize)?;
    let slice = bits.get(pos..end)?;
    Some(slice.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}
