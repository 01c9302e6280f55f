//! Linear genetic programming on a register machine with 32-bit
//! instruction blocks.

mod evolve;
mod machine;
mod metrics;
mod operators;
mod program;

pub use evolve::{
    evolve, migrate, score, tournament, tournament_subset, Checkpoint, Deme, EvolutionConfig, EvolutionReport,
    Individual,
};
pub use machine::{Instruction, MachineSpec, Opcode, Operand, PROTECTED_DIV_EPSILON};
pub use metrics::{correlation, fitness, predict, read_supervised_csv, rmse, write_supervised_csv, SupervisedSet};
pub use operators::{crossover, crossover_at, flip_bit, mutate};
pub use program::{read_program, write_program, Program};
