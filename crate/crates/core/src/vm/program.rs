use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::bits::BitString;
use crate::error::FormatError;

/// A bitstring interpreted as VM code.
///
/// Programs are ordered shortlex (by length, then binary value), which gives
/// the bijection with nonnegative integers: the empty program is index 0,
/// `"0"` is 1, `"1"` is 2, `"00"` is 3, and so on.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    code: BitString,
}

impl Program {
    pub fn new(code: BitString) -> Self {
        Program { code }
    }

    pub fn code(&self) -> &BitString {
        &self.code
    }

    pub fn bits(&self) -> &[bool] {
        self.code.as_slice()
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// The `index`-th bitstring in shortlex order.
    pub fn from_index(index: u64) -> Self {
        let shifted = u128::from(index) + 1;
        let len = 127 - shifted.leading_zeros();
        let value = shifted - (1u128 << len);
        let mut code = BitString::with_capacity(len as usize);
        for shift in (0..len).rev() {
            code.push((value >> shift) & 1 == 1);
        }
        Program { code }
    }

    pub fn from_index_big(index: &BigUint) -> Self {
        let shifted = index + 1u32;
        let len = shifted.bits() - 1;
        let code = (0..len).rev().map(|i| shifted.bit(i)).collect();
        Program { code }
    }

    /// Position of this program in the shortlex enumeration.
    pub fn index(&self) -> BigUint {
        let mut value = BigUint::zero();
        for &bit in self.bits() {
            value <<= 1u32;
            if bit {
                value += 1u32;
            }
        }
        (BigUint::one() << self.len()) - 1u32 + value
    }

    pub fn index_u64(&self) -> Option<u64> {
        self.index().to_u64()
    }

    /// Renders the two-line text form: `bits <len>` then the hex payload.
    pub fn to_text(&self) -> String {
        format!("bits {}\n{}\n", self.len(), self.code.to_hex())
    }

    /// Parses the text form. Lines starting with `#` before the header are
    /// ignored.
    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let mut programs = parse_program_list(text)?;
        match programs.len() {
            1 => Ok(programs.remove(0)),
            0 => Err(FormatError::new("no program found")),
            n => Err(FormatError::new(format!("expected one program, found {n}"))),
        }
    }
}

/// Parses a sequence of programs in text form, as produced by `enumerate`.
pub fn parse_program_list(text: &str) -> Result<Vec<Program>, FormatError> {
    let mut programs = Vec::new();
    let mut lines = text.lines().enumerate();
    while let Some((lineno, line)) = lines.next() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let len = trimmed
            .strip_prefix("bits ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| FormatError::at_line(lineno + 1, "expected header `bits <length>`"))?;
        let hex = match lines.next() {
            Some((_, hex)) => hex,
            None if len == 0 => "",
            None => return Err(FormatError::at_line(lineno + 2, "missing hex payload")),
        };
        let code = BitString::from_hex(hex, len).map_err(|e| FormatError::at_line(lineno + 2, e.message))?;
        programs.push(Program::new(code));
    }
    Ok(programs)
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            write!(f, "Program(\"{}\")", self.code)
        } else {
            write!(f, "Program({} bits, hex {})", self.len(), self.code.to_hex())
        }
    }
}

impl From<BitString> for Program {
    fn from(code: BitString) -> Self {
        Program::new(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shortlex_listing(max_len: usize) -> Vec<String> {
        let mut out = Vec::new();
        for len in 0..=max_len {
            for value in 0..(1u64 << len) {
                out.push((0..len).rev().map(|s| if (value >> s) & 1 == 1 { '1' } else { '0' }).collect());
            }
        }
        out
    }

    #[test]
    fn first_indices() {
        let names: Vec<String> = (0..11).map(|i| Program::from_index(i).code().to_string()).collect();
        assert_eq!(names, ["", "0", "1", "00", "01", "10", "11", "000", "001", "010", "011"]);
    }

    #[test]
    fn enumeration_is_complete_up_to_length() {
        let max_len = 10;
        let listing = shortlex_listing(max_len);
        assert_eq!(listing.len() as u64, (1u64 << (max_len + 1)) - 1);
        for (i, expected) in listing.iter().enumerate() {
            let p = Program::from_index(i as u64);
            assert_eq!(&p.code().to_string(), expected);
            assert_eq!(p.index_u64(), Some(i as u64));
        }
    }

    #[test]
    fn big_index_matches_small() {
        for i in [0u64, 1, 2, 77, 1 << 40, u64::MAX] {
            assert_eq!(Program::from_index_big(&BigUint::from(i)), Program::from_index(i));
        }
        let p = Program::from_index(u64::MAX);
        assert_eq!(p.len(), 64);
        assert_eq!(p.index(), BigUint::from(u64::MAX));
    }

    #[test]
    fn text_round_trip() {
        let p = Program::from_index(10);
        assert_eq!(p.to_text(), "bits 3\n6\n");
        assert_eq!(Program::from_text(&p.to_text()).unwrap(), p);
        assert_eq!(Program::from_text("bits 0\n\n").unwrap(), Program::default());
        assert!(Program::from_text("bits 5\nf\n").is_err());
        assert!(Program::from_text("bytes 5\n").is_err());
    }
}
