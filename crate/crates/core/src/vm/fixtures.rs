//! Hand-assembled VM programs used as test fixtures and as bytecode plantings.

use super::asm::{self, Assembler};
use super::bits::BitString;
use super::encoding::encode_predictor;
use super::isa::Opcode;
use super::program::Program;

fn emit(asm: &mut Assembler, bits: &[bool]) {
    for &b in bits {
        asm.push(i32::from(b)).op(Opcode::Out);
    }
}

/// Learner that ignores its input and emits the constant-0 predictor.
pub fn constant_zero_learner() -> Program {
    asm::emit_bits_program(&encode_predictor(&asm::constant_predictor(false)))
}

pub fn constant_one_learner() -> Program {
    asm::emit_bits_program(&encode_predictor(&asm::constant_predictor(true)))
}

/// Learner that never halts.
pub fn looping_learner() -> Program {
    asm::infinite_loop()
}

/// Learner that spins for `iterations` countdown rounds (12 steps each) and
/// then emits the constant predictor for `label`.
pub fn slow_constant_learner(iterations: u32, label: bool) -> Program {
    let frame = encode_predictor(&asm::constant_predictor(label));
    asm::delay_then(iterations, |a| {
        emit(a, frame.as_slice());
        a.op(Opcode::Halt);
    })
}

/// Predictor that spins for `iterations` countdown rounds, then outputs `label`.
pub fn slow_predictor(iterations: u32, label: bool) -> Program {
    asm::delay_then(iterations, |a| {
        a.push(i32::from(label)).op(Opcode::Out).op(Opcode::Halt);
    })
}

/// Learner whose predictor is `slow_predictor(iterations, label)`.
pub fn slow_predictor_learner(iterations: u32, label: bool) -> Program {
    asm::emit_bits_program(&encode_predictor(&slow_predictor(iterations, label)))
}

/// Learner that reads the first training sample and emits the constant
/// predictor for its label. Traps on an empty dataset.
pub fn first_label_learner(width: u32) -> Program {
    let zero = encode_predictor(&asm::constant_predictor(false));
    let one = encode_predictor(&asm::constant_predictor(true));
    let split =
        zero.as_slice().iter().zip(one.as_slice()).position(|(a, b)| a != b).expect("frames differ in the label bit");
    let mut a = Assembler::new();
    a.read(32).push(0).op(Opcode::Store);
    a.read(width).push(1).op(Opcode::Store);
    a.read(1).push(2).op(Opcode::Store);
    emit(&mut a, &zero.as_slice()[..split]);
    a.push(2).op(Opcode::Load).op(Opcode::Out);
    emit(&mut a, &zero.as_slice()[split + 1..]);
    a.op(Opcode::Halt);
    a.finish()
}

/// Learner whose output is seven bits that are not a valid frame.
pub fn garbage_learner() -> Program {
    asm::emit_bits_program(&BitString::parse_binary("1011001").expect("literal"))
}

/// Fixtures that take no parameters, by name.
pub type Fixture = (&'static str, fn() -> Program);

pub const ALL: [Fixture; 7] = [
    ("constant-0-learner", constant_zero_learner),
    ("constant-1-learner", constant_one_learner),
    ("looping-learner", looping_learner),
    ("slow-constant-learner", || slow_constant_learner(50, true)),
    ("slow-predictor-learner", || slow_predictor_learner(20, true)),
    ("first-label-learner", || first_label_learner(8)),
    ("garbage-learner", garbage_learner),
];

pub fn by_name(name: &str) -> Option<Program> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, make)| make())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Sample};
    use crate::vm::{decode_predictor, execute, serialize_dataset, Halt};

    #[test]
    fn first_label_learner_reads_label() {
        for label in [false, true] {
            let d = Dataset::new(8, vec![Sample::new(200, label), Sample::new(3, !label)]);
            let s = execute(&first_label_learner(8), &serialize_dataset(&d), 1_000_000);
            assert_eq!(s.halted, Halt::RanToCompletion);
            assert_eq!(decode_predictor(&s.output).unwrap(), asm::constant_predictor(label));
        }
    }

    #[test]
    fn garbage_learner_output_does_not_decode() {
        let s = execute(&garbage_learner(), &BitString::new(), 1000);
        assert_eq!(s.halted, Halt::RanToCompletion);
        assert_eq!(s.output.len(), 7);
        assert!(decode_predictor(&s.output).is_err());
    }
}
