use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng as _;

use super::machine::MachineSpec;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A linear program: a sequence of 32-bit instruction blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    blocks: Vec<u32>,
}

impl Program {
    pub fn new(blocks: Vec<u32>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::validation("a program needs at least one block"));
        }
        Ok(Program { blocks })
    }

    /// Uniformly random words, length uniform in `1..=max_len`.
    pub fn random(max_len: usize, rng: &mut Rng) -> Self {
        let len = rng.gen_range(1..=max_len.max(1));
        Program { blocks: (0..len).map(|_| rng.gen()).collect() }
    }

    pub fn blocks(&self) -> &[u32] {
        &self.blocks
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut Vec<u32> {
        &mut self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Evaluates on one input vector.
    pub fn eval(&self, inputs: &[f64], m: &MachineSpec) -> Result<f64> {
        if inputs.len() != m.n_inputs {
            return Err(Error::validation(format!("expected {} inputs, got {}", m.n_inputs, inputs.len())));
        }
        let code = m.decode_program(&self.blocks);
        Ok(m.execute(&code, inputs, &mut Vec::new()))
    }

    /// Human-readable listing, one instruction per line.
    pub fn disassemble(&self, m: &MachineSpec) -> String {
        let mut out = String::new();
        for (i, w) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "{i:4}  {w:08x}  {}", m.decode(*w));
        }
        out
    }
}

const PROGRAM_MAGIC: &str = "# antlgp program v1";

/// Writes the machine header and the program as hex words. Constants are
/// stored as IEEE-754 bit patterns so the file reloads bit-exactly.
pub fn write_program<W: Write>(p: &Program, m: &MachineSpec, mut out: W) -> Result<()> {
    writeln!(out, "{PROGRAM_MAGIC}")?;
    writeln!(out, "inputs {}", m.n_inputs)?;
    writeln!(out, "calc_registers {}", m.n_calc_registers)?;
    writeln!(out, "output {}", MachineSpec::OUTPUT_REGISTER)?;
    let consts: Vec<String> = m.constants.iter().map(|c| format!("{:016x}", c.to_bits())).collect();
    writeln!(out, "constants {}", consts.join(" "))?;
    writeln!(out, "words {}", p.len())?;
    for w in p.blocks() {
        writeln!(out, "{w:08x}")?;
    }
    Ok(())
}

pub fn read_program<R: Read>(source: R) -> Result<(Program, MachineSpec)> {
    let mut lines = BufReader::new(source).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(Error::parse(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, magic) = next("header")?;
    if magic.trim() != PROGRAM_MAGIC {
        return Err(Error::parse(n, "not a program file"));
    }
    let mut field = |key: &str| -> Result<(usize, String)> {
        let (n, line) = next(key)?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
            .ok_or_else(|| Error::parse(n, format!("expected `{key}`")))?;
        Ok((n, rest.trim().to_string()))
    };
    let int = |(n, s): (usize, String)| s.parse::<usize>().map_err(|_| Error::parse(n, format!("bad integer `{s}`")));
    let n_inputs = int(field("inputs")?)?;
    let n_calc = int(field("calc_registers")?)?;
    let output = int(field("output")?)?;
    if output != MachineSpec::OUTPUT_REGISTER {
        return Err(Error::validation("only output register 0 is supported"));
    }
    let (cn, consts) = field("constants")?;
    let constants = consts
        .split_whitespace()
        .map(|h| {
            u64::from_str_radix(h, 16).map(f64::from_bits).map_err(|_| Error::parse(cn, format!("bad constant `{h}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let count = int(field("words")?)?;
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = next("word")?;
        let w =
            u32::from_str_radix(line.trim(), 16).map_err(|_| Error::parse(n, format!("bad word `{}`", line.trim())))?;
        blocks.push(w);
    }
    let m = MachineSpec::new(n_inputs, n_calc, constants)?;
    Ok((Program::new(blocks)?, m))
}
