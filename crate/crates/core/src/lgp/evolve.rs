//! Steady-state tournament evolution over a ring of demes.

use std::io::Write;

use rand::seq::index;
use rand::Rng as _;

use super::machine::MachineSpec;
use super::metrics::{correlation, full_rmse, predict, rmse, subset_rmse, SupervisedSet};
use super::operators::{crossover, mutate};
use super::program::Program;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::rng::{derive_seed, rng_from_seed, Rng};

const TOURNAMENT_SIZE: usize = 4;
const SUBSET_STREAM: u64 = 0x005a_b5e7;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population: usize,
    pub max_tournaments: u64,
    pub mutation_frequency: f64,
    pub crossover_frequency: f64,
    pub n_demes: usize,
    pub max_program_size: usize,
    pub target_subset_size: usize,
    /// Tournaments between migrations; 0 disables migration.
    pub migration_interval: u64,
    /// Individuals each deme sends per migration.
    pub migration_rate: usize,
    pub checkpoint_interval: u64,
    /// Upper bound of the uniform initial program length.
    pub init_max_length: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population: 500,
            max_tournaments: 120_000,
            mutation_frequency: 0.90,
            crossover_frequency: 0.80,
            n_demes: 10,
            max_program_size: 512,
            target_subset_size: 100,
            migration_interval: 1_000,
            migration_rate: 2,
            checkpoint_interval: 1_000,
            init_max_length: 32,
            seed: 0,
            exec: Exec::Parallel,
        }
    }
}

impl EvolutionConfig {
    pub fn deme_capacity(&self) -> usize {
        self.population / self.n_demes.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in
            [("mutation_frequency", self.mutation_frequency), ("crossover_frequency", self.crossover_frequency)]
        {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::validation(format!("{name} must be in [0, 1]")));
            }
        }
        if self.n_demes == 0 {
            return Err(Error::validation("n_demes must be >= 1"));
        }
        if !self.population.is_multiple_of(self.n_demes) {
            return Err(Error::validation(format!(
                "population {} is not divisible by {} demes",
                self.population, self.n_demes
            )));
        }
        if self.deme_capacity() < TOURNAMENT_SIZE {
            return Err(Error::validation(format!("each deme needs at least {TOURNAMENT_SIZE} individuals")));
        }
        if self.max_program_size == 0 || self.init_max_length == 0 {
            return Err(Error::validation("program sizes must be >= 1"));
        }
        if self.target_subset_size == 0 {
            return Err(Error::validation("target_subset_size must be >= 1"));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::validation("checkpoint_interval must be >= 1"));
        }
        if self.migration_rate >= self.deme_capacity() {
            return Err(Error::validation("migration_rate must be smaller than the deme size"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub program: Program,
    /// RMSE from the most recent evaluation.
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Deme {
    pub individuals: Vec<Individual>,
}

impl Deme {
    pub fn random(
        capacity: usize,
        cfg: &EvolutionConfig,
        train: &SupervisedSet,
        m: &MachineSpec,
        rng: &mut Rng,
    ) -> Self {
        let max_len = cfg.init_max_length.min(cfg.max_program_size);
        let individuals = (0..capacity)
            .map(|_| {
                let program = Program::random(max_len, rng);
                let fitness = full_rmse(&program, train, m);
                Individual { program, fitness }
            })
            .collect();
        Deme { individuals }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Indices ordered best first by cached fitness (ties by position).
    fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.individuals[a].fitness.total_cmp(&self.individuals[b].fitness).then(a.cmp(&b)));
        order
    }
}

/// Training rows for tournament number `t`, shared by all its contestants.
pub fn tournament_subset(seed: u64, t: u64, n_rows: usize, size: usize) -> Vec<usize> {
    let k = size.min(n_rows);
    if k == n_rows {
        return (0..n_rows).collect();
    }
    let mut rng = rng_from_seed(derive_seed(seed ^ SUBSET_STREAM, t));
    index::sample(&mut rng, n_rows, k).into_vec()
}

/// One steady-state tournament: four distinct contestants are scored on
/// `subset`; the two worst are replaced by (possibly crossed-over, possibly
/// mutated) offspring of the two best.
pub fn tournament(
    deme: &mut Deme,
    train: &SupervisedSet,
    subset: &[usize],
    cfg: &EvolutionConfig,
    m: &MachineSpec,
    rng: &mut Rng,
) -> Result<()> {
    if deme.len() < TOURNAMENT_SIZE {
        return Err(Error::validation(format!(
            "tournament needs {TOURNAMENT_SIZE} individuals, deme has {}",
            deme.len()
        )));
    }
    let mut contestants = index::sample(rng, deme.len(), TOURNAMENT_SIZE).into_vec();
    for &i in &contestants {
        let ind = &mut deme.individuals[i];
        ind.fitness = subset_rmse(&ind.program, train, subset, m);
    }
    contestants.sort_by(|&a, &b| deme.individuals[a].fitness.total_cmp(&deme.individuals[b].fitness));
    let [w1, w2, l1, l2] = [contestants[0], contestants[1], contestants[2], contestants[3]];

    let (p1, p2) = (&deme.individuals[w1].program, &deme.individuals[w2].program);
    let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_frequency {
        crossover(p1, p2, cfg.max_program_size, rng)
    } else {
        (p1.clone(), p2.clone())
    };
    for child in [&mut c1, &mut c2] {
        if rng.gen::<f64>() < cfg.mutation_frequency {
            *child = mutate(child, rng);
        }
    }
    for (slot, program) in [(l1, c1), (l2, c2)] {
        let fitness = subset_rmse(&program, train, subset, m);
        deme.individuals[slot] = Individual { program, fitness };
    }
    Ok(())
}

/// Ring migration: each deme sends copies of its `rate` best individuals to
/// the next deme, where they replace the `rate` worst.
pub fn migrate(demes: &mut [Deme], rate: usize) {
    if demes.len() < 2 || rate == 0 {
        return;
    }
    let emigrants: Vec<Vec<Individual>> =
        demes.iter().map(|d| d.ranking().into_iter().take(rate).map(|i| d.individuals[i].clone()).collect()).collect();
    let n = demes.len();
    for (from, group) in emigrants.into_iter().enumerate() {
        let target = &mut demes[(from + 1) % n];
        let worst: Vec<usize> = target.ranking().into_iter().rev().take(group.len()).collect();
        for (slot, ind) in worst.into_iter().zip(group) {
            target.individuals[slot] = ind;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub tournament: u64,
    pub avg_length: f64,
    pub best_train: f64,
    pub avg_train: f64,
    /// Full test-set RMSE of the best-on-train individual.
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionReport {
    pub history: Vec<Checkpoint>,
    pub best: Program,
    pub machine: MachineSpec,
    pub rmse_train: f64,
    pub rmse_test: f64,
    /// NaN when the correlation is undefined (constant predictions).
    pub cc_train: f64,
    pub cc_test: f64,
}

impl EvolutionReport {
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tournament,avg_length,best_train,avg_train,test")?;
        for c in &self.history {
            writeln!(out, "{},{},{},{},{}", c.tournament, c.avg_length, c.best_train, c.avg_train, c.test)?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rmse_train,rmse_test,cc_train,cc_test")?;
        writeln!(out, "{},{},{},{}", self.rmse_train, self.rmse_test, self.cc_train, self.cc_test)?;
        Ok(())
    }
}

/// Train/test RMSE and CC of a program.
pub fn score(
    p: &Program,
    train: &SupervisedSet,
    test: &SupervisedSet,
    m: &MachineSpec,
) -> Result<(f64, f64, f64, f64)> {
    let pred_train = predict(p, train, m);
    let pred_test = predict(p, test, m);
    let cc = |pred: &[f64], t: &[f64]| correlation(pred, t).unwrap_or(f64::NAN);
    Ok((
        rmse(&pred_train, &train.targets)?,
        rmse(&pred_test, &test.targets)?,
        cc(&pred_train, &train.targets),
        cc(&pred_test, &test.targets),
    ))
}

struct Worker {
    deme: Deme,
    rng: Rng,
}

/// Runs the full evolution and reports the best-on-train program of the
/// final population.
pub fn evolve(
    cfg: &EvolutionConfig,
    train: &SupervisedSet,
    test: &SupervisedSet,
    m: &MachineSpec,
) -> Result<EvolutionReport> {
    cfg.validate()?;
    m.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::validation("train and test sets must be non-empty"));
    }
    if train.n_inputs != m.n_inputs || test.n_inputs != m.n_inputs {
        return Err(Error::validation(format!("machine has {} inputs but data has {}", m.n_inputs, train.n_inputs)));
    }

    let capacity = cfg.deme_capacity();
    let mut workers: Vec<Worker> = (0..cfg.n_demes)
        .map(|d| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, d as u64 + 1));
            let deme = Deme::random(capacity, cfg, train, m, &mut rng);
            Worker { deme, rng }
        })
        .collect();

    let mut history = vec![checkpoint(0, &workers, train, test, m, cfg.exec)];
    let n_demes = cfg.n_demes as u64;
    let mut done = 0u64;
    while done < cfg.max_tournaments {
        let mut next = cfg.max_tournaments.min(round_up(done, cfg.checkpoint_interval));
        if cfg.migration_interval > 0 {
            next = next.min(round_up(done, cfg.migration_interval));
        }
        par::for_each_mut(cfg.exec, &mut workers, |d, w| {
            let first = done + (d as u64 + n_demes - done % n_demes) % n_demes;
            let mut t = first;
            while t < next {
                let subset = tournament_subset(cfg.seed, t, train.len(), cfg.target_subset_size);
                tournament(&mut w.deme, train, &subset, cfg, m, &mut w.rng).expect("deme size validated");
                t += n_demes;
            }
        });
        done = next;
        if cfg.migration_interval > 0 && done.is_multiple_of(cfg.migration_interval) {
            let mut demes: Vec<Deme> = workers.iter_mut().map(|w| std::mem::take(&mut w.deme)).collect();
            migrate(&mut demes, cfg.migration_rate);
            for (w, d) in workers.iter_mut().zip(demes) {
                w.deme = d;
            }
        }
        if done.is_multiple_of(cfg.checkpoint_interval) || done == cfg.max_tournaments {
            history.push(checkpoint(done, &workers, train, test, m, cfg.exec));
        }
    }

    let best = best_on_train(&workers, train, m, cfg.exec).clone();
    let (rmse_train, rmse_test, cc_train, cc_test) = score(&best, train, test, m)?;
    Ok(EvolutionReport { history, best, machine: m.clone(), rmse_train, rmse_test, cc_train, cc_test })
}

fn round_up(done: u64, interval: u64) -> u64 {
    (done / interval + 1) * interval
}

fn population(workers: &[Worker]) -> Vec<&Program> {
    workers.iter().flat_map(|w| w.deme.individuals.iter().map(|i| &i.program)).collect()
}

fn train_errors<'a>(
    workers: &'a [Worker],
    train: &SupervisedSet,
    m: &MachineSpec,
    exec: Exec,
) -> (Vec<&'a Program>, Vec<f64>) {
    let programs = population(workers);
    let errors = par::map(exec, &programs, |p| full_rmse(p, train, m));
    (programs, errors)
}

fn argmin(values: &[f64]) -> usize {
    values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0))).map(|(i, _)| i).unwrap_or(0)
}

fn best_on_train<'a>(workers: &'a [Worker], train: &SupervisedSet, m: &MachineSpec, exec: Exec) -> &'a Program {
    let (programs, errors) = train_errors(workers, train, m, exec);
    programs[argmin(&errors)]
}

fn checkpoint(
    t: u64,
    workers: &[Worker],
    train: &SupervisedSet,
    test: &SupervisedSet,
    m: &MachineSpec,
    exec: Exec,
) -> Checkpoint {
    let (programs, errors) = train_errors(workers, train, m, exec);
    let n = programs.len() as f64;
    let best = argmin(&errors);
    Checkpoint {
        tournament: t,
        avg_length: programs.iter().map(|p| p.len() as f64).sum::<f64>() / n,
        best_train: errors[best],
        avg_train: errors.iter().sum::<f64>() / n,
        test: full_rmse(programs[best], test, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lgp::machine::{Instruction, Opcode, Operand};

    fn line_data(n: usize) -> SupervisedSet {
        let mut d = SupervisedSet::new(2);
        for i in 0..n {
            let x = i as f64 / n as f64;
            let y = ((i * 7) % n) as f64 / n as f64;
            d.push(i as u64, &[x, y], 0.3 * x + 0.7 * y);
        }
        d
    }

    fn machine() -> MachineSpec {
        MachineSpec::with_default_constants(2, 2, 5).unwrap()
    }

    fn small_cfg() -> EvolutionConfig {
        EvolutionConfig {
            population: 40,
            n_demes: 4,
            max_tournaments: 2_000,
            migration_interval: 500,
            checkpoint_interval: 500,
            seed: 3,
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn default_parameters_validate() {
        let cfg = EvolutionConfig::default();
        assert_eq!(cfg.population, 500);
        assert_eq!(cfg.max_tournaments, 120_000);
        assert_eq!(cfg.n_demes, 10);
        assert_eq!(cfg.max_program_size, 512);
        assert_eq!(cfg.target_subset_size, 100);
        assert_eq!((cfg.mutation_frequency, cfg.crossover_frequency), (0.9, 0.8));
        cfg.validate().unwrap();
        let bad = EvolutionConfig { population: 501, ..EvolutionConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn small_deme_rejected() {
        let d = line_data(10);
        let m = machine();
        let mut deme = Deme {
            individuals: (0..3).map(|i| Individual { program: Program::new(vec![i]).unwrap(), fitness: 0.0 }).collect(),
        };
        let err = tournament(&mut deme, &d, &[0, 1], &small_cfg(), &m, &mut rng_from_seed(0));
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn zero_frequencies_copy_winners() {
        let d = line_data(20);
        let m = machine();
        let cfg = EvolutionConfig { mutation_frequency: 0.0, crossover_frequency: 0.0, ..small_cfg() };
        let mut rng = rng_from_seed(1);
        let mut deme = Deme::random(4, &cfg, &d, &m, &mut rng);
        let subset: Vec<usize> = (0..20).collect();
        let before = deme.clone();
        tournament(&mut deme, &d, &subset, &cfg, &m, &mut rng).unwrap();
        let mut scored: Vec<(f64, &Program)> =
            before.individuals.iter().map(|i| (full_rmse(&i.program, &d, &m), &i.program)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let winners = [scored[0].1, scored[1].1];
        for ind in &deme.individuals {
            assert!(winners.contains(&&ind.program));
        }
    }

    #[test]
    fn migration_ring_of_two() {
        let mk = |f: [f64; 4], tag: u32| Deme {
            individuals: f
                .iter()
                .enumerate()
                .map(|(i, &fitness)| Individual { program: Program::new(vec![tag + i as u32]).unwrap(), fitness })
                .collect(),
        };
        let mut demes = vec![mk([0.5, 0.1, 0.9, 0.3], 0), mk([0.2, 0.8, 0.4, 0.6], 100)];
        let untouched = demes.clone();
        migrate(&mut demes, 0);
        assert_eq!(demes, untouched);

        migrate(&mut demes, 1);
        // best of deme 0 (tag 1) replaces worst of deme 1 (tag 101)
        assert_eq!(demes[1].individuals[1].program.blocks(), &[1]);
        // best of deme 1 (tag 100) replaces worst of deme 0 (tag 2)
        assert_eq!(demes[0].individuals[2].program.blocks(), &[100]);
        assert_eq!(demes.iter().map(Deme::len).sum::<usize>(), 8);
    }

    #[test]
    fn zero_tournaments_only_initial_checkpoint() {
        let d = line_data(30);
        let cfg = EvolutionConfig { max_tournaments: 0, ..small_cfg() };
        let r = evolve(&cfg, &d, &d, &machine()).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0].tournament, 0);
    }

    #[test]
    fn deterministic_and_exec_independent() {
        let d = line_data(50);
        let cfg = small_cfg();
        let a = evolve(&cfg, &d, &d, &machine()).unwrap();
        let b = evolve(&cfg, &d, &d, &machine()).unwrap();
        assert_eq!(a, b);
        let seq = evolve(&EvolutionConfig { exec: Exec::Sequential, ..cfg }, &d, &d, &machine()).unwrap();
        assert_eq!(a, seq);
        let hist: Vec<u64> = a.history.iter().map(|c| c.tournament).collect();
        assert_eq!(hist, vec![0, 500, 1000, 1500, 2000]);
    }

    #[test]
    fn best_never_lost_without_mutation() {
        let d = line_data(80);
        let cfg = EvolutionConfig {
            mutation_frequency: 0.0,
            max_tournaments: 4_000,
            checkpoint_interval: 250,
            ..small_cfg()
        };
        let r = evolve(&cfg, &d, &d, &machine()).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1].best_train <= w[0].best_train, "{:?}", r.history);
        }
    }

    #[test]
    fn report_metrics_recompute() {
        let d = line_data(40);
        let r = evolve(&small_cfg(), &d, &d, &machine()).unwrap();
        let preds = predict(&r.best, &d, &r.machine);
        assert!((rmse(&preds, &d.targets).unwrap() - r.rmse_train).abs() < 1e-12);
        let exact = Program::new(vec![Instruction::new(Opcode::Add, 0, 0, Operand::Register(1)).encode()]).unwrap();
        assert!(score(&exact, &d, &d, &r.machine).unwrap().0 > 0.0);
    }
}
