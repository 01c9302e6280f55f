//! Supervised data, RMSE fitness and Pearson correlation.

use std::io::{BufRead, BufReader, Read, Write};

use super::machine::MachineSpec;
use super::program::Program;
use crate::error::{Error, Result};

/// Row-major input matrix with one target per row. `sources` records the
/// dataset index each example came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupervisedSet {
    pub n_inputs: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub sources: Vec<u64>,
}

impl SupervisedSet {
    pub fn new(n_inputs: usize) -> Self {
        SupervisedSet { n_inputs, ..Default::default() }
    }

    pub fn push(&mut self, source: u64, inputs: &[f64], target: f64) {
        assert_eq!(inputs.len(), self.n_inputs, "row width mismatch");
        self.inputs.extend_from_slice(inputs);
        self.targets.push(target);
        self.sources.push(source);
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_inputs..(i + 1) * self.n_inputs]
    }

    /// Keeps the rows for which `keep(source)` holds.
    pub fn filter_sources(&self, keep: impl Fn(u64) -> bool) -> SupervisedSet {
        let mut out = SupervisedSet::new(self.n_inputs);
        for i in 0..self.len() {
            if keep(self.sources[i]) {
                out.push(self.sources[i], self.row(i), self.targets[i]);
            }
        }
        out
    }

    /// Drops input column `col`.
    pub fn without_column(&self, col: usize) -> SupervisedSet {
        let mut out = SupervisedSet::new(self.n_inputs - 1);
        let mut row = Vec::with_capacity(self.n_inputs - 1);
        for i in 0..self.len() {
            row.clear();
            row.extend(self.row(i).iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v));
            out.push(self.sources[i], &row, self.targets[i]);
        }
        out
    }
}

/// Writes `source,<input names...>,target` and one row per example.
/// Floats use the shortest round-tripping form.
pub fn write_supervised_csv<W: Write>(d: &SupervisedSet, names: &[&str], mut out: W) -> Result<()> {
    if names.len() != d.n_inputs {
        return Err(Error::validation(format!("{} column names for {} inputs", names.len(), d.n_inputs)));
    }
    writeln!(out, "source,{},target", names.join(","))?;
    for i in 0..d.len() {
        write!(out, "{}", d.sources[i])?;
        for v in d.row(i) {
            write!(out, ",{v:?}")?;
        }
        writeln!(out, ",{:?}", d.targets[i])?;
    }
    Ok(())
}

/// Reads the format of [`write_supervised_csv`]. The first column must be
/// `source`, the last `target`; everything in between is an input.
pub fn read_supervised_csv<R: Read>(source: R) -> Result<SupervisedSet> {
    let mut set: Option<SupervisedSet> = None;
    let mut row = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(d) = set.as_mut() else {
            if fields.len() < 3 || fields[0] != "source" || fields[fields.len() - 1] != "target" {
                return Err(Error::parse(n, "header must read `source,<inputs...>,target`"));
            }
            set = Some(SupervisedSet::new(fields.len() - 2));
            continue;
        };
        if fields.len() != d.n_inputs + 2 {
            return Err(Error::parse(n, format!("expected {} fields, found {}", d.n_inputs + 2, fields.len())));
        }
        let src: u64 = fields[0].parse().map_err(|_| Error::parse(n, format!("bad source `{}`", fields[0])))?;
        row.clear();
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| Error::parse(n, format!("bad number `{f}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(n, format!("non-finite value `{f}`")));
            }
            row.push(v);
        }
        let target = row.pop().unwrap_or_default();
        d.push(src, &row, target);
    }
    set.ok_or_else(|| Error::parse(0, "missing header"))
}

pub fn predict(p: &Program, data: &SupervisedSet, m: &MachineSpec) -> Vec<f64> {
    let code = m.decode_program(p.blocks());
    let mut regs = Vec::with_capacity(m.register_count());
    (0..data.len()).map(|i| m.execute(&code, data.row(i), &mut regs)).collect()
}

/// RMSE of `p` over the rows listed in `subset`.
pub fn fitness(p: &Program, data: &SupervisedSet, subset: &[usize], m: &MachineSpec) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::validation("cannot score on an empty dataset"));
    }
    if subset.is_empty() {
        return Err(Error::validation("fitness subset is empty"));
    }
    if let Some(bad) = subset.iter().find(|&&i| i >= data.len()) {
        return Err(Error::validation(format!("subset index {bad} out of range")));
    }
    Ok(subset_rmse(p, data, subset, m))
}

pub(crate) fn subset_rmse(p: &Program, data: &SupervisedSet, subset: &[usize], m: &MachineSpec) -> f64 {
    let code = m.decode_program(p.blocks());
    let mut regs = Vec::with_capacity(m.register_count());
    let sq: f64 = subset
        .iter()
        .map(|&i| {
            let e = m.execute(&code, data.row(i), &mut regs) - data.targets[i];
            e * e
        })
        .sum();
    (sq / subset.len() as f64).sqrt()
}

pub(crate) fn full_rmse(p: &Program, data: &SupervisedSet, m: &MachineSpec) -> f64 {
    let code = m.decode_program(p.blocks());
    let mut regs = Vec::with_capacity(m.register_count());
    let sq: f64 = (0..data.len())
        .map(|i| {
            let e = m.execute(&code, data.row(i), &mut regs) - data.targets[i];
            e * e
        })
        .sum();
    (sq / data.len() as f64).sqrt()
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::validation("prediction and target lengths differ"));
    }
    if predictions.is_empty() {
        return Err(Error::validation("rmse of empty vectors"));
    }
    let sq: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / predictions.len() as f64).sqrt())
}

/// Pearson correlation coefficient.
pub fn correlation(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::validation("prediction and target lengths differ"));
    }
    if predictions.len() < 2 {
        return Err(Error::validation("correlation needs at least 2 points"));
    }
    let n = predictions.len() as f64;
    let mp = predictions.iter().sum::<f64>() / n;
    let mt = targets.iter().sum::<f64>() / n;
    let (mut cov, mut vp, mut vt) = (0.0, 0.0, 0.0);
    for (p, t) in predictions.iter().zip(targets) {
        let (dp, dt) = (p - mp, t - mt);
        cov += dp * dt;
        vp += dp * dp;
        vt += dt * dt;
    }
    if vp == 0.0 {
        return Err(Error::UndefinedCorrelation("prediction"));
    }
    if vt == 0.0 {
        return Err(Error::UndefinedCorrelation("target"));
    }
    Ok((cov / (vp.sqrt() * vt.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgp::machine::{Instruction, Opcode, Operand};

    #[test]
    fn supervised_csv_round_trip() {
        let mut d = SupervisedSet::new(2);
        d.push(4, &[0.1, 1.0 / 3.0], 0.7);
        d.push(9, &[-2.5, 0.0], 1e-17);
        let mut buf = Vec::new();
        write_supervised_csv(&d, &["a", "b"], &mut buf).unwrap();
        assert!(buf.starts_with(b"source,a,b,target\n4,0.1,"));
        assert_eq!(read_supervised_csv(buf.as_slice()).unwrap(), d);
        assert!(read_supervised_csv("x,target\n".as_bytes()).is_err());
        assert!(read_supervised_csv("source,a,target\n1,2\n".as_bytes()).is_err());
        assert!(read_supervised_csv("source,a,target\n1,nan,2\n".as_bytes()).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0; 4], &[1.0; 4]).unwrap(), 1.0);
        assert!((rmse(&[0.0, 0.0], &[1.0, 3.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!((5f64.sqrt() - 2.2361).abs() < 1e-4);
    }

    #[test]
    fn correlation_examples() {
        let t = [1.0, 2.0, 5.0, 3.0];
        assert!((correlation(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        assert!((correlation(&neg, &t).unwrap() + 1.0).abs() < 1e-15);
        // Hand Pearson: means 2 and 7/3; cov = 3, var = 2 and 14/3.
        let expected = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        let got = correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.9820).abs() < 1e-4);
        assert!(matches!(correlation(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn fitness_examples() {
        let m = MachineSpec::new(1, 1, vec![0.0]).unwrap();
        let identity = Program::new(vec![Instruction::new(Opcode::Add, 0, 0, Operand::Constant(0)).encode()]).unwrap();
        let zero = Program::new(vec![Instruction::new(Opcode::Mul, 0, 0, Operand::Constant(0)).encode()]).unwrap();
        let mut d = SupervisedSet::new(1);
        for i in 0..5 {
            d.push(i, &[i as f64], i as f64);
        }
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(fitness(&identity, &d, &all, &m).unwrap(), 0.0);

        let mut ones = SupervisedSet::new(1);
        for i in 0..3 {
            ones.push(i, &[5.0], 1.0);
        }
        assert_eq!(fitness(&zero, &ones, &[0, 1, 2], &m).unwrap(), 1.0);
        assert!(fitness(&zero, &SupervisedSet::new(1), &[0], &m).is_err());
        assert!(fitness(&zero, &ones, &[7], &m).is_err());
    }

    #[test]
    fn column_removal() {
        let mut d = SupervisedSet::new(3);
        d.push(1, &[1.0, 2.0, 3.0], 9.0);
        let r = d.without_column(1);
        assert_eq!(r.row(0), &[1.0, 3.0]);
        assert_eq!(r.targets, vec![9.0]);
    }
}
