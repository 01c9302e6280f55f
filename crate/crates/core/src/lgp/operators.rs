//! Variation operators. Crossover cuts only between blocks; mutation flips a
//! single bit anywhere inside a block.

use rand::Rng as _;

use super::program::Program;
use crate::rng::Rng;

/// Two-point crossover: swaps a block-aligned segment of `a` with one of `b`.
/// Offspring longer than `max_len` lose their tail.
pub fn crossover(a: &Program, b: &Program, max_len: usize, rng: &mut Rng) -> (Program, Program) {
    let (a_start, a_len) = segment(a.len(), rng);
    let (b_start, b_len) = segment(b.len(), rng);
    crossover_at(a, b, (a_start, a_len), (b_start, b_len), max_len)
}

fn segment(len: usize, rng: &mut Rng) -> (usize, usize) {
    let start = rng.gen_range(0..len);
    let seg = rng.gen_range(1..=len - start);
    (start, seg)
}

/// Swaps `a[a_start..a_start + a_len]` with `b[b_start..b_start + b_len]`.
pub fn crossover_at(
    a: &Program,
    b: &Program,
    (a_start, a_len): (usize, usize),
    (b_start, b_len): (usize, usize),
    max_len: usize,
) -> (Program, Program) {
    let (a, b) = (a.blocks(), b.blocks());
    let splice = |host: &[u32], start: usize, len: usize, donor: &[u32]| {
        let mut child = Vec::with_capacity(host.len() - len + donor.len());
        child.extend_from_slice(&host[..start]);
        child.extend_from_slice(donor);
        child.extend_from_slice(&host[start + len..]);
        child.truncate(max_len.max(1));
        Program::new(child).expect("segments are non-empty")
    };
    let a_seg = &a[a_start..a_start + a_len];
    let b_seg = &b[b_start..b_start + b_len];
    (splice(a, a_start, a_len, b_seg), splice(b, b_start, b_len, a_seg))
}

/// Flips one uniformly chosen bit of one uniformly chosen block.
pub fn mutate(p: &Program, rng: &mut Rng) -> Program {
    let block = rng.gen_range(0..p.len());
    let bit = rng.gen_range(0..32);
    flip_bit(p, block, bit)
}

pub fn flip_bit(p: &Program, block: usize, bit: u32) -> Program {
    let mut out = p.clone();
    out.blocks_mut()[block] ^= 1 << bit;
    out
}
