//! Wire formats between the VM and the learner: how datasets and query points
//! are laid out on the input tape, and how a learner frames its predictor on
//! the output buffer.
//!
//! Dataset tape: `n` as a 32-bit unsigned integer, then for each sample `x` in
//! `width` bits followed by one label bit. Query tape: `x` in `width` bits.
//! Predictor frame: a 32-bit length `L`, then exactly `L` program bits.

use thiserror::Error;

use super::bits::BitString;
use super::program::Program;
use crate::dataset::Dataset;

pub const COUNT_BITS: u32 = 32;
pub const FRAME_LENGTH_BITS: u32 = 32;

pub fn serialize_dataset(data: &Dataset) -> BitString {
    let width = data.width();
    let mut bits = BitString::with_capacity(COUNT_BITS as usize + data.len() * (width as usize + 1));
    bits.push_uint(data.len() as u64, COUNT_BITS);
    for s in data.iter() {
        bits.push_uint(s.x, width);
        bits.push(s.y);
    }
    bits
}

pub fn serialize_point(x: u64, width: u32) -> BitString {
    let mut bits = BitString::with_capacity(width as usize);
    bits.push_uint(x, width);
    bits
}

pub fn encode_predictor(predictor: &Program) -> BitString {
    let mut bits = BitString::with_capacity(FRAME_LENGTH_BITS as usize + predictor.len());
    bits.push_uint(predictor.len() as u64, FRAME_LENGTH_BITS);
    bits.extend_from(predictor.code());
    bits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("output too short for the length prefix")]
    MissingLength,
    #[error("frame declares {declared} bits but {available} follow")]
    LengthMismatch { declared: u64, available: usize },
}

/// Reads a length-prefixed predictor. The output must contain exactly one
/// frame: short, truncated and over-long outputs are all rejected.
pub fn decode_predictor(output: &BitString) -> Result<Program, DecodeError> {
    let declared = output.read_uint(0, FRAME_LENGTH_BITS).ok_or(DecodeError::MissingLength)?;
    let available = output.len() - FRAME_LENGTH_BITS as usize;
    if declared != available as u64 {
        return Err(DecodeError::LengthMismatch { declared, available });
    }
    Ok(Program::new(output.as_slice()[FRAME_LENGTH_BITS as usize..].iter().copied().collect()))
}
