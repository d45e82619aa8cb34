//! The machine model: a metered stack VM over bitstring programs, enumerated
//! in shortlex order.

pub mod asm;
pub mod bits;
pub mod encoding;
pub mod fixtures;
pub mod interp;
pub mod isa;
pub mod program;

pub use bits::BitString;
pub use encoding::{decode_predictor, encode_predictor, serialize_dataset, serialize_point, DecodeError};
pub use interp::{execute, resume, Halt, MachineState, Trap};
pub use program::{parse_program_list, Program};

/// The `index`-th program in shortlex order.
pub fn enumerate_program(index: u64) -> Program {
    Program::from_index(index)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn any_program() -> impl Strategy<Value = Program> {
        prop_oneof![
            (0u64..100_000).prop_map(Program::from_index),
            proptest::collection::vec(any::<bool>(), 0..400).prop_map(|b| Program::new(b.into())),
            (0usize..fixtures::ALL.len()).prop_map(|i| (fixtures::ALL[i].1)()),
        ]
    }

    fn any_input() -> impl Strategy<Value = BitString> {
        proptest::collection::vec(any::<bool>(), 0..200).prop_map(BitString::from)
    }

    #[test]
    fn zero_budget_does_nothing() {
        for i in 0..50 {
            let s = execute(&Program::from_index(i), &BitString::new(), 0);
            assert_eq!(s.step_count, 0);
            assert_eq!(s.halted, Halt::BudgetExhausted);
            assert!(s.output.is_empty());
        }
    }

    #[test]
    fn infinite_loop_uses_exact_fuel() {
        let s = execute(&asm::infinite_loop(), &BitString::parse_binary("0101").unwrap(), 1000);
        assert_eq!(s.step_count, 1000);
        assert_eq!(s.halted, Halt::BudgetExhausted);
    }

    #[test]
    fn constant_zero_learner_emits_frame() {
        let s = execute(&fixtures::constant_zero_learner(), &BitString::new(), 100_000);
        assert_eq!(s.halted, Halt::RanToCompletion);
        assert_eq!(s.output, encode_predictor(&asm::constant_predictor(false)));
        assert_eq!(decode_predictor(&s.output).unwrap(), asm::constant_predictor(false));
    }

    #[test]
    fn short_programs_fail_cleanly() {
        // Every program shorter than an opcode traps on its first step,
        // except the empty program which halts.
        assert_eq!(execute(&Program::from_index(0), &BitString::new(), 5).halted, Halt::RanToCompletion);
        for i in 1..15 {
            let s = execute(&Program::from_index(i), &BitString::new(), 5);
            assert_eq!(s.halted, Halt::Trapped(Trap::TruncatedInstruction), "index {i}");
            assert_eq!(s.step_count, 1);
        }
    }

    #[test]
    fn traps_keep_partial_output() {
        let mut a = asm::Assembler::new();
        a.push(1).op(isa::Opcode::Out).push(1).push(0).op(isa::Opcode::Mod);
        let s = execute(&a.finish(), &BitString::new(), 100);
        assert_eq!(s.halted, Halt::Trapped(Trap::ModByZero));
        assert_eq!(s.output.to_string(), "1");
    }

    #[test]
    fn repeated_runs_are_identical() {
        let input = BitString::parse_binary("110100111").unwrap();
        for (_, make) in fixtures::ALL {
            let p = make();
            let first = execute(&p, &input, 5000);
            for _ in 0..100 {
                assert_eq!(execute(&p, &input, 5000), first);
            }
        }
    }

    proptest! {
        #[test]
        fn resumption_matches_single_run(p in any_program(), input in any_input(), b1 in 0u64..3000, b2 in 0u64..3000) {
            let once = execute(&p, &input, b1 + b2);
            let split = resume(&p, &input, execute(&p, &input, b1), b2);
            prop_assert_eq!(once, split);
        }

        #[test]
        fn step_count_within_budget(p in any_program(), input in any_input(), b in 0u64..3000) {
            let s = execute(&p, &input, b);
            prop_assert!(s.step_count <= b);
            prop_assert_ne!(s.halted, Halt::Running);
        }

        #[test]
        fn completed_output_is_stable_under_more_budget(p in any_program(), input in any_input(), b in 0u64..2000, extra in 1u64..2000) {
            let s = execute(&p, &input, b);
            if s.halted == Halt::RanToCompletion {
                prop_assert_eq!(execute(&p, &input, b + extra), s);
            }
        }

        #[test]
        fn index_round_trip(i in any::<u64>()) {
            prop_assert_eq!(Program::from_index(i).index_u64(), Some(i));
        }

        #[test]
        fn frames_round_trip(p in any_program()) {
            prop_assert_eq!(decode_predictor(&encode_predictor(&p)).unwrap(), p);
        }
    }
}
