use super::bits::{read_uint, BitString};
use super::isa::{Opcode, MEMORY_CELLS, OPCODE_BITS, PUSH_IMM_BITS, READ_IMM_BITS, STACK_LIMIT};
use super::program::Program;

/// Why a trapped execution stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trap {
    TruncatedInstruction,
    StackUnderflow,
    StackOverflow,
    ModByZero,
    InputExhausted,
    BadJumpTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Halt {
    /// Not started, or mid-way through a resumable run.
    Running,
    RanToCompletion,
    BudgetExhausted,
    Trapped(Trap),
}

impl Halt {
    pub fn is_final(self) -> bool {
        matches!(self, Halt::RanToCompletion | Halt::Trapped(_))
    }

    pub fn label(self) -> &'static str {
        match self {
            Halt::Running => "running",
            Halt::RanToCompletion => "completed",
            Halt::BudgetExhausted => "budget_exhausted",
            Halt::Trapped(_) => "trapped",
        }
    }
}

/// Complete interpreter state. Together with the program and input it fully
/// determines the rest of the run, which is what makes execution resumable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineState {
    pub step_count: u64,
    pub pc: usize,
    pub stack: Vec<i64>,
    /// Cells past the end read as zero; the vector only grows on store.
    pub memory: Vec<i64>,
    pub input_cursor: usize,
    pub output: BitString,
    pub halted: Halt,
}

impl Default for MachineState {
    fn default() -> Self {
        MachineState {
            step_count: 0,
            pc: 0,
            stack: Vec::new(),
            memory: Vec::new(),
            input_cursor: 0,
            output: BitString::new(),
            halted: Halt::Running,
        }
    }
}

/// Runs `program` on `input` for at most `budget` steps.
pub fn execute(program: &Program, input: &BitString, budget: u64) -> MachineState {
    let mut state = MachineState::default();
    state.run(program.bits(), input.as_slice(), budget);
    state
}

/// Continues a budget-exhausted state for `extra` more steps. Finished states
/// are returned unchanged.
pub fn resume(program: &Program, input: &BitString, mut state: MachineState, extra: u64) -> MachineState {
    state.run(program.bits(), input.as_slice(), extra);
    state
}

impl MachineState {
    /// Advances by at most `extra` steps.
    pub fn run(&mut self, code: &[bool], input: &[bool], extra: u64) {
        if self.halted.is_final() {
            return;
        }
        self.halted = Halt::Running;
        let limit = self.step_count.saturating_add(extra);
        while self.halted == Halt::Running {
            if self.step_count >= limit {
                self.halted = Halt::BudgetExhausted;
                return;
            }
            self.step(code, input);
        }
    }

    fn trap(&mut self, trap: Trap) {
        self.halted = Halt::Trapped(trap);
    }

    fn pop(&mut self) -> Option<i64> {
        let v = self.stack.pop();
        if v.is_none() {
            self.trap(Trap::StackUnderflow);
        }
        v
    }

    fn pop2(&mut self) -> Option<(i64, i64)> {
        if self.stack.len() < 2 {
            self.trap(Trap::StackUnderflow);
            return None;
        }
        let b = self.stack.pop().expect("checked depth");
        let a = self.stack.pop().expect("checked depth");
        Some((a, b))
    }

    fn push(&mut self, v: i64) {
        if self.stack.len() >= STACK_LIMIT {
            self.trap(Trap::StackOverflow);
        } else {
            self.stack.push(v);
        }
    }

    fn binary(&mut self, f: impl FnOnce(i64, i64) -> i64) {
        if let Some((a, b)) = self.pop2() {
            self.stack.push(f(a, b));
        }
    }

    /// Executes exactly one instruction, charging one step.
    fn step(&mut self, code: &[bool], input: &[bool]) {
        self.step_count += 1;
        if self.pc == code.len() {
            self.halted = Halt::RanToCompletion;
            return;
        }
        let Some(bits) = read_uint(code, self.pc, OPCODE_BITS) else {
            self.trap(Trap::TruncatedInstruction);
            return;
        };
        let op = Opcode::from_bits(bits);
        let imm_pos = self.pc + OPCODE_BITS as usize;
        let next_pc = self.pc + op.width() as usize;
        if next_pc > code.len() {
            self.trap(Trap::TruncatedInstruction);
            return;
        }
        self.pc = next_pc;
        match op {
            Opcode::Halt => self.halted = Halt::RanToCompletion,
            Opcode::Push => {
                let raw = read_uint(code, imm_pos, PUSH_IMM_BITS).expect("width checked");
                self.push(i64::from(raw as u32 as i32));
            }
            Opcode::Dup => {
                if let Some(&top) = self.stack.last() {
                    self.push(top);
                } else {
                    self.trap(Trap::StackUnderflow);
                }
            }
            Opcode::Swap => {
                let n = self.stack.len();
                if n < 2 {
                    self.trap(Trap::StackUnderflow);
                } else {
                    self.stack.swap(n - 1, n - 2);
                }
            }
            Opcode::Add => self.binary(i64::wrapping_add),
            Opcode::Mul => self.binary(i64::wrapping_mul),
            Opcode::Mod => {
                if let Some((a, b)) = self.pop2() {
                    if b == 0 {
                        self.trap(Trap::ModByZero);
                    } else {
                        self.stack.push(a.wrapping_rem_euclid(b));
                    }
                }
            }
            Opcode::And => self.binary(|a, b| a & b),
            Opcode::Xor => self.binary(|a, b| a ^ b),
            Opcode::Shr => self.binary(|a, b| ((a as u64) >> (b & 63)) as i64),
            Opcode::Lt => self.binary(|a, b| i64::from(a < b)),
            Opcode::Load => {
                if let Some(addr) = self.pop() {
                    let cell = wrap_address(addr);
                    self.stack.push(self.memory.get(cell).copied().unwrap_or(0));
                }
            }
            Opcode::Store => {
                if let Some((value, addr)) = self.pop2() {
                    let cell = wrap_address(addr);
                    if cell >= self.memory.len() {
                        self.memory.resize(cell + 1, 0);
                    }
                    self.memory[cell] = value;
                }
            }
            Opcode::Read => {
                let width = read_uint(code, imm_pos, READ_IMM_BITS).expect("width checked") as u32 + 1;
                match read_uint(input, self.input_cursor, width) {
                    Some(v) => {
                        self.input_cursor += width as usize;
                        self.push(v as i64);
                    }
                    None => self.trap(Trap::InputExhausted),
                }
            }
            Opcode::Out => {
                if let Some(v) = self.pop() {
                    self.output.push(v & 1 == 1);
                }
            }
            Opcode::Jz => {
                if let Some((cond, target)) = self.pop2() {
                    if cond == 0 {
                        match usize::try_from(target) {
                            Ok(t) if t <= code.len() => self.pc = t,
                            _ => self.trap(Trap::BadJumpTarget),
                        }
                    }
                }
            }
        }
    }
}

fn wrap_address(addr: i64) -> usize {
    addr.rem_euclid(MEMORY_CELLS as i64) as usize
}
