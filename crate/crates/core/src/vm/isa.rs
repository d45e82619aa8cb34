//! Instruction set of the enumeration VM.
//!
//! Every instruction starts with a 4-bit opcode, most significant bit first.
//! Two opcodes carry an immediate that follows the opcode bits directly:
//! `PUSH` (32-bit two's complement, sign-extended to 64 bits) and `READ`
//! (5-bit width field, reading `field + 1` input bits). All 16 opcode values
//! are assigned, so any bitstring decodes; it can still trap at run time
//! (truncated immediate, stack underflow, modulus by zero, and so on).
//!
//! Jump targets are absolute bit offsets into the program. A target equal to
//! the program length halts normally, like falling off the end.

pub const OPCODE_BITS: u32 = 4;
pub const PUSH_IMM_BITS: u32 = 32;
pub const READ_IMM_BITS: u32 = 5;

/// Memory cells; addresses wrap modulo this size.
pub const MEMORY_CELLS: usize = 1 << 16;
/// Maximum operand stack depth; pushing past it traps.
pub const STACK_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Halt = 0x0,
    Push = 0x1,
    Dup = 0x2,
    Swap = 0x3,
    Add = 0x4,
    Mul = 0x5,
    Mod = 0x6,
    And = 0x7,
    Xor = 0x8,
    Shr = 0x9,
    Lt = 0xA,
    Load = 0xB,
    Store = 0xC,
    Read = 0xD,
    Out = 0xE,
    Jz = 0xF,
}

impl Opcode {
    pub const ALL: [Opcode; 16] = [
        Opcode::Halt,
        Opcode::Push,
        Opcode::Dup,
        Opcode::Swap,
        Opcode::Add,
        Opcode::Mul,
        Opcode::Mod,
        Opcode::And,
        Opcode::Xor,
        Opcode::Shr,
        Opcode::Lt,
        Opcode::Load,
        Opcode::Store,
        Opcode::Read,
        Opcode::Out,
        Opcode::Jz,
    ];

    pub fn from_bits(value: u64) -> Opcode {
        Opcode::ALL[(value & 0xF) as usize]
    }

    pub fn code(self) -> u64 {
        self as u64
    }

    /// Immediate width in bits following the opcode.
    pub fn immediate_bits(self) -> u32 {
        match self {
            Opcode::Push => PUSH_IMM_BITS,
            Opcode::Read => READ_IMM_BITS,
            _ => 0,
        }
    }

    /// Total encoded width of the instruction.
    pub fn width(self) -> u32 {
        OPCODE_BITS + self.immediate_bits()
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Halt => "HALT",
            Opcode::Push => "PUSH",
            Opcode::Dup => "DUP",
            Opcode::Swap => "SWAP",
            Opcode::Add => "ADD",
            Opcode::Mul => "MUL",
            Opcode::Mod => "MOD",
            Opcode::And => "AND",
            Opcode::Xor => "XOR",
            Opcode::Shr => "SHR",
            Opcode::Lt => "LT",
            Opcode::Load => "LOAD",
            Opcode::Store => "STORE",
            Opcode::Read => "READ",
            Opcode::Out => "OUT",
            Opcode::Jz => "JZ",
        }
    }
}
