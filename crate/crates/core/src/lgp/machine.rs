//! 32-bit instruction encoding and the register machine that runs it.
//!
//! Word layout, from bit 0:
//!
//! | bits  | field              |
//! |-------|--------------------|
//! | 0-7   | opcode             |
//! | 8-15  | destination        |
//! | 16-23 | first source       |
//! | 24    | second source kind (0 register, 1 constant) |
//! | 25-31 | second source      |
//!
//! Decoding reduces every field modulo its valid range, so any word is a
//! valid instruction.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Divisors smaller than this in magnitude make division return 1.0.
pub const PROTECTED_DIV_EPSILON: f64 = 1e-12;

const MAX_REGISTERS: usize = 128;
const MAX_CONSTANTS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Add = 0,
    Sub = 1,
    Mul = 2,
    Div = 3,
}

impl Opcode {
    pub const COUNT: u32 = 4;

    fn from_index(i: u32) -> Opcode {
        match i % Self::COUNT {
            0 => Opcode::Add,
            1 => Opcode::Sub,
            2 => Opcode::Mul,
            _ => Opcode::Div,
        }
    }

    fn symbol(self) -> char {
        match self {
            Opcode::Add => '+',
            Opcode::Sub => '-',
            Opcode::Mul => '*',
            Opcode::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Register(u8),
    Constant(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub dest: u8,
    pub src1: u8,
    pub src2: Operand,
}

impl Instruction {
    pub fn new(opcode: Opcode, dest: u8, src1: u8, src2: Operand) -> Self {
        Instruction { opcode, dest, src1, src2 }
    }

    /// Packs the instruction into one word. The second source index keeps
    /// its low 7 bits.
    pub fn encode(&self) -> u32 {
        let (kind, src2) = match self.src2 {
            Operand::Register(r) => (0u32, r),
            Operand::Constant(c) => (1u32, c),
        };
        self.opcode as u32
            | (u32::from(self.dest) << 8)
            | (u32::from(self.src1) << 16)
            | (kind << 24)
            | ((u32::from(src2) & 0x7f) << 25)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{} = r{} {} ", self.dest, self.src1, self.opcode.symbol())?;
        match self.src2 {
            Operand::Register(r) => write!(f, "r{r}"),
            Operand::Constant(c) => write!(f, "c{c}"),
        }
    }
}

/// Register file layout and constant pool. Registers `0..n_inputs` receive
/// the inputs, the calculation registers start at zero, and the result is
/// read from register 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineSpec {
    pub n_inputs: usize,
    pub n_calc_registers: usize,
    pub constants: Vec<f64>,
}

impl MachineSpec {
    pub const OUTPUT_REGISTER: usize = 0;

    pub fn new(n_inputs: usize, n_calc_registers: usize, constants: Vec<f64>) -> Result<Self> {
        let m = MachineSpec { n_inputs, n_calc_registers, constants };
        m.validate()?;
        Ok(m)
    }

    /// Pool of `{0, 0.5, 1, 2, pi}` plus 11 values drawn uniformly from
    /// [-1, 1] with `seed`.
    pub fn with_default_constants(n_inputs: usize, n_calc_registers: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut constants = vec![0.0, 0.5, 1.0, 2.0, PI];
        constants.extend((0..11).map(|_| rng.gen_range(-1.0..=1.0)));
        MachineSpec::new(n_inputs, n_calc_registers, constants)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 {
            return Err(Error::validation("machine needs at least one input register"));
        }
        if self.n_calc_registers == 0 {
            return Err(Error::validation("machine needs at least one calculation register"));
        }
        if self.register_count() > MAX_REGISTERS {
            return Err(Error::validation(format!("at most {MAX_REGISTERS} registers fit the encoding")));
        }
        if self.constants.is_empty() || self.constants.len() > MAX_CONSTANTS {
            return Err(Error::validation(format!("constant pool must hold 1..={MAX_CONSTANTS} values")));
        }
        if self.constants.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("constants must be finite"));
        }
        Ok(())
    }

    pub fn register_count(&self) -> usize {
        self.n_inputs + self.n_calc_registers
    }

    /// Total decode: out-of-range fields wrap into range.
    pub fn decode(&self, word: u32) -> Instruction {
        let regs = self.register_count() as u32;
        let reg = |v: u32| (v % regs) as u8;
        let src2_raw = word >> 25;
        Instruction {
            opcode: Opcode::from_index(word & 0xff),
            dest: reg((word >> 8) & 0xff),
            src1: reg((word >> 16) & 0xff),
            src2: if (word >> 24) & 1 == 0 {
                Operand::Register(reg(src2_raw))
            } else {
                Operand::Constant((src2_raw % self.constants.len() as u32) as u8)
            },
        }
    }

    /// Re-encodes `word` in canonical (in-range) form.
    pub fn canonicalize(&self, word: u32) -> u32 {
        self.decode(word).encode()
    }

    pub fn decode_program(&self, words: &[u32]) -> Vec<Instruction> {
        words.iter().map(|&w| self.decode(w)).collect()
    }

    /// Runs decoded instructions on one input vector. `registers` is scratch
    /// space, resized as needed.
    pub fn execute(&self, code: &[Instruction], inputs: &[f64], registers: &mut Vec<f64>) -> f64 {
        registers.clear();
        registers.extend_from_slice(&inputs[..self.n_inputs]);
        registers.resize(self.register_count(), 0.0);
        for ins in code {
            let a = registers[usize::from(ins.src1)];
            let b = match ins.src2 {
                Operand::Register(r) => registers[usize::from(r)],
                Operand::Constant(c) => self.constants[usize::from(c)],
            };
            let v = match ins.opcode {
                Opcode::Add => a + b,
                Opcode::Sub => a - b,
                Opcode::Mul => a * b,
                Opcode::Div => {
                    if b.abs() < PROTECTED_DIV_EPSILON {
                        1.0
                    } else {
                        a / b
                    }
                }
            };
            registers[usize::from(ins.dest)] = if v.is_finite() { v } else { 0.0 };
        }
        registers[Self::OUTPUT_REGISTER]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn machine() -> MachineSpec {
        MachineSpec::new(2, 4, vec![0.0, 0.5, 1.0, 2.0, PI]).unwrap()
    }

    #[test]
    fn zero_word_is_add_r0() {
        let ins = machine().decode(0);
        assert_eq!(ins, Instruction::new(Opcode::Add, 0, 0, Operand::Register(0)));
    }

    #[test]
    fn round_trip_in_range() {
        let m = machine();
        for op in [Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::Div] {
            for d in 0..6u8 {
                for s in 0..6u8 {
                    for src2 in [Operand::Register(s), Operand::Constant(s % 5)] {
                        let i = Instruction::new(op, d, s, src2);
                        assert_eq!(m.decode(i.encode()), i);
                    }
                }
            }
        }
    }

    #[test]
    fn random_words_canonicalize() {
        // Oracle: decode, re-encode, decode again must agree.
        let m = machine();
        let mut rng = rng_from_seed(77);
        for _ in 0..10_000 {
            let w: u32 = rng.gen();
            let i = m.decode(w);
            assert_eq!(m.decode(i.encode()), i);
        }
    }

    #[test]
    fn single_add() {
        let m = machine();
        let code = [Instruction::new(Opcode::Add, 0, 0, Operand::Register(1))];
        assert_eq!(m.execute(&code, &[2.0, 3.0], &mut Vec::new()), 5.0);
    }

    #[test]
    fn protected_division() {
        let m = machine();
        let code = [Instruction::new(Opcode::Div, 0, 0, Operand::Register(1))];
        assert_eq!(m.execute(&code, &[1.0, 0.0], &mut Vec::new()), 1.0);
        assert_eq!(m.execute(&code, &[1.0, 1e-13], &mut Vec::new()), 1.0);
        assert_eq!(m.execute(&code, &[1.0, 4.0], &mut Vec::new()), 0.25);
    }

    #[test]
    fn dead_register_leaves_output() {
        let m = machine();
        let code = [Instruction::new(Opcode::Mul, 5, 1, Operand::Constant(4))];
        assert_eq!(m.execute(&code, &[0.75, 3.0], &mut Vec::new()), 0.75);
    }

    #[test]
    fn overflow_is_zeroed() {
        let m = MachineSpec::new(1, 1, vec![1e300]).unwrap();
        let code = [
            Instruction::new(Opcode::Mul, 0, 0, Operand::Constant(0)),
            Instruction::new(Opcode::Mul, 0, 0, Operand::Constant(0)),
        ];
        assert_eq!(m.execute(&code, &[1.0], &mut Vec::new()), 0.0);
    }

    #[test]
    fn machine_validation() {
        assert!(MachineSpec::new(0, 1, vec![1.0]).is_err());
        assert!(MachineSpec::new(1, 0, vec![1.0]).is_err());
        assert!(MachineSpec::new(1, 1, vec![]).is_err());
        assert!(MachineSpec::new(100, 29, vec![1.0]).is_err());
        let m = MachineSpec::with_default_constants(3, 4, 9).unwrap();
        assert_eq!(m.constants.len(), 16);
        assert_eq!(m.constants[4], PI);
        assert!(m.constants[5..].iter().all(|c| (-1.0..=1.0).contains(c)));
    }

    proptest! {
        #[test]
        fn canonical_form_is_stable(w in any::<u32>()) {
            let m = machine();
            let c = m.canonicalize(w);
            prop_assert_eq!(m.canonicalize(c), c);
            prop_assert_eq!(m.decode(c), m.decode(w));
        }

        #[test]
        fn execution_is_finite(words in proptest::collection::vec(any::<u32>(), 1..64),
                               x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let m = machine();
            let code = m.decode_program(&words);
            prop_assert!(m.execute(&code, &[x, y], &mut Vec::new()).is_finite());
        }
    }
}
