use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use antlgp::lgp::{evolve, EvolutionConfig, MachineSpec, SupervisedSet};
use antlgp::par::Exec;
use antlgp::pipeline::{run_seeds, PipelineConfig};
use antlgp::weblog::synth_generate;

fn regression_set(n: usize) -> SupervisedSet {
    let mut d = SupervisedSet::new(2);
    for i in 0..n {
        let (a, b) = ((i % 17) as f64 / 17.0, (i % 23) as f64 / 23.0);
        d.push(i as u64, &[a, b], 0.3 * a + 0.7 * b);
    }
    d
}

fn bench_evolve(c: &mut Criterion) {
    let data = regression_set(200);
    let train = data.filter_sources(|s| s < 150);
    let test = data.filter_sources(|s| s >= 150);
    let m = MachineSpec::with_default_constants(2, 4, 1).unwrap();
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let cfg = EvolutionConfig { population: 200, n_demes: 4, max_tournaments: 4_000, exec, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| evolve(cfg, &train, &test, &m).unwrap())
        });
    }
    g.finish();
}

fn bench_seeds(c: &mut Criterion) {
    let d = synth_generate(1, 60, 3, 0.05).unwrap();
    let mut g = c.benchmark_group("pipeline_seeds");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let mut cfg = PipelineConfig::daily();
        cfg.colony.max_steps = 5_000;
        cfg.colony.snapshot_steps = vec![];
        cfg.evolution.population = 80;
        cfg.evolution.n_demes = 4;
        cfg.evolution.max_tournaments = 1_000;
        cfg.evolution.exec = exec;
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| run_seeds(cfg, &d, 4).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_evolve, bench_seeds);
criterion_main!(benches);
