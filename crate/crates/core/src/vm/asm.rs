//! A small assembler plus generators for the predictor programs that the
//! built-in learners emit.

use super::bits::BitString;
use super::isa::{Opcode, MEMORY_CELLS, PUSH_IMM_BITS, READ_IMM_BITS};
use super::program::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label(usize);

/// Builds programs instruction by instruction. Labels resolve to absolute bit
/// offsets, patched into `PUSH` immediates when the program is finished.
#[derive(Debug, Default)]
pub struct Assembler {
    code: BitString,
    labels: Vec<Option<usize>>,
    fixups: Vec<(usize, Label)>,
}

impl Assembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current position in bits.
    pub fn position(&self) -> usize {
        self.code.len()
    }

    pub fn op(&mut self, op: Opcode) -> &mut Self {
        assert_eq!(op.immediate_bits(), 0, "{} takes an immediate", op.mnemonic());
        self.code.push_uint(op.code(), 4);
        self
    }

    pub fn push(&mut self, value: i32) -> &mut Self {
        self.code.push_uint(Opcode::Push.code(), 4);
        self.code.push_uint(u64::from(value as u32), PUSH_IMM_BITS);
        self
    }

    /// `READ` of `width` bits, 1..=32.
    pub fn read(&mut self, width: u32) -> &mut Self {
        assert!((1..=32).contains(&width), "READ width {width} out of range");
        self.code.push_uint(Opcode::Read.code(), 4);
        self.code.push_uint(u64::from(width - 1), READ_IMM_BITS);
        self
    }

    pub fn label(&mut self) -> Label {
        self.labels.push(None);
        Label(self.labels.len() - 1)
    }

    pub fn bind(&mut self, label: Label) -> &mut Self {
        self.labels[label.0] = Some(self.code.len());
        self
    }

    /// Pushes the bit offset of `label`.
    pub fn push_label(&mut self, label: Label) -> &mut Self {
        self.fixups.push((self.code.len() + 4, label));
        self.push(0)
    }

    /// Unconditional jump.
    pub fn jump(&mut self, label: Label) -> &mut Self {
        self.push(0).push_label(label).op(Opcode::Jz)
    }

    /// Pops a condition and jumps when it is zero.
    pub fn jump_if_zero(&mut self, label: Label) -> &mut Self {
        self.push_label(label).op(Opcode::Jz)
    }

    pub fn finish(self) -> Program {
        let mut bits = self.code.as_slice().to_vec();
        for (pos, label) in self.fixups {
            let target = self.labels[label.0].expect("unbound label");
            let target = u32::try_from(target).expect("program too long for jump immediates");
            for i in 0..PUSH_IMM_BITS as usize {
                bits[pos + i] = (target >> (PUSH_IMM_BITS as usize - 1 - i)) & 1 == 1;
            }
        }
        Program::new(BitString::from_bits(bits))
    }
}

/// Predictor that ignores its input and outputs `label`.
pub fn constant_predictor(label: bool) -> Program {
    let mut asm = Assembler::new();
    asm.push(i32::from(label)).op(Opcode::Out).op(Opcode::Halt);
    asm.finish()
}

/// Predictor that looks `x` up in a bit table. `table[x]` is the label; `x`
/// outside the table reads as 0.
pub fn table_predictor(width: u32, table: &[bool]) -> Program {
    let words = table.len().div_ceil(32);
    assert!(words <= MEMORY_CELLS, "table does not fit in VM memory");
    let mut asm = Assembler::new();
    for (w, chunk) in table.chunks(32).enumerate() {
        let word = chunk.iter().enumerate().fold(0u32, |acc, (bit, &set)| acc | (u32::from(set) << bit));
        if word != 0 {
            asm.push(word as i32).push(w as i32).op(Opcode::Store);
        }
    }
    asm.read(width)
        .op(Opcode::Dup)
        .push(5)
        .op(Opcode::Shr)
        .op(Opcode::Load)
        .op(Opcode::Swap)
        .push(31)
        .op(Opcode::And)
        .op(Opcode::Shr)
        .push(1)
        .op(Opcode::And)
        .op(Opcode::Out)
        .op(Opcode::Halt);
    asm.finish()
}

/// Flips labels on the atoms whose pseudorandom rank
/// `(multiplier * x + offset) mod modulus` falls below `count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankFlip {
    pub multiplier: u32,
    pub offset: u32,
    pub modulus: u32,
    pub count: u32,
}

/// Piecewise-constant predictor: `first_label` below the first boundary,
/// toggling at every boundary `b` (label changes for `x >= b`). An optional
/// rank flip is XORed on top.
pub fn interval_predictor(width: u32, first_label: bool, boundaries: &[u32], flip: Option<RankFlip>) -> Program {
    let mut asm = Assembler::new();
    asm.read(width).push(0).op(Opcode::Store);
    asm.push(i32::from(first_label));
    for &b in boundaries {
        asm.push(0).op(Opcode::Load).push(b as i32).op(Opcode::Lt).push(1).op(Opcode::Xor).op(Opcode::Xor);
    }
    if let Some(flip) = flip {
        asm.push(0)
            .op(Opcode::Load)
            .push(flip.multiplier as i32)
            .op(Opcode::Mul)
            .push(flip.offset as i32)
            .op(Opcode::Add)
            .push(flip.modulus as i32)
            .op(Opcode::Mod)
            .push(flip.count as i32)
            .op(Opcode::Lt)
            .op(Opcode::Xor);
    }
    asm.op(Opcode::Out).op(Opcode::Halt);
    asm.finish()
}

/// Program that writes `bits` to the output buffer and halts.
pub fn emit_bits_program(bits: &BitString) -> Program {
    let mut asm = Assembler::new();
    for &b in bits.as_slice() {
        asm.push(i32::from(b)).op(Opcode::Out);
    }
    asm.op(Opcode::Halt);
    asm.finish()
}

/// Program that counts down from `iterations` in memory cell 0, then runs
/// `tail`'s instructions. Each iteration costs 12 steps and leaves a zero on the stack.
pub fn delay_then(iterations: u32, tail: impl FnOnce(&mut Assembler)) -> Program {
    let mut asm = Assembler::new();
    let top = asm.label();
    let done = asm.label();
    asm.push(iterations as i32).push(0).op(Opcode::Store);
    asm.bind(top);
    asm.push(0)
        .op(Opcode::Load)
        .op(Opcode::Dup)
        .jump_if_zero(done)
        .push(-1)
        .op(Opcode::Add)
        .push(0)
        .op(Opcode::Store)
        .jump(top);
    asm.bind(done);
    tail(&mut asm);
    asm.finish()
}

/// Program that never halts: `PUSH 0; PUSH 0; JZ` back to the start.
pub fn infinite_loop() -> Program {
    let mut asm = Assembler::new();
    let top = asm.label();
    asm.bind(top);
    asm.jump(top);
    asm.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::interp::{execute, Halt};

    fn input_of(x: u64, width: u32) -> BitString {
        let mut b = BitString::new();
        b.push_uint(x, width);
        b
    }

    fn run_label(p: &Program, x: u64, width: u32) -> Option<bool> {
        let s = execute(p, &input_of(x, width), 10_000);
        (s.halted == Halt::RanToCompletion && s.output.len() == 1).then(|| s.output.as_slice()[0])
    }

    #[test]
    fn table_predictor_matches_table() {
        let table: Vec<bool> = (0..100).map(|x| (x * 7 + 3) % 5 < 2).collect();
        let p = table_predictor(7, &table);
        for (x, &expected) in table.iter().enumerate() {
            assert_eq!(run_label(&p, x as u64, 7), Some(expected), "x={x}");
        }
    }

    #[test]
    fn interval_predictor_toggles() {
        let p = interval_predictor(8, false, &[10, 20, 200], None);
        for x in 0..256u64 {
            let expected = (x >= 10) ^ (x >= 20) ^ (x >= 200);
            assert_eq!(run_label(&p, x, 8), Some(expected));
        }
    }

    #[test]
    fn rank_flip_flips_exactly_count_atoms() {
        let flip = RankFlip { multiplier: 7, offset: 3, modulus: 100, count: 13 };
        let p = interval_predictor(7, true, &[], Some(flip));
        let flipped = (0..100u64).filter(|&x| run_label(&p, x, 7) == Some(false)).count();
        assert_eq!(flipped, 13);
    }

    #[test]
    fn delay_costs_twelve_steps_per_iteration() {
        let base = delay_then(0, |a| {
            a.op(Opcode::Halt);
        });
        let slow = delay_then(25, |a| {
            a.op(Opcode::Halt);
        });
        let s0 = execute(&base, &BitString::new(), 100_000);
        let s1 = execute(&slow, &BitString::new(), 100_000);
        assert_eq!(s0.halted, Halt::RanToCompletion);
        assert_eq!(s1.step_count - s0.step_count, 300);
    }
}
