//! `antlgp`: synthesize usage data, cluster it with the ant colony, evolve
//! predictors and run the combined pipeline.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 I/O failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use antlgp::antcluster::{read_snapshot_csv, render_pgm, write_snapshot_csv};
use antlgp::config;
use antlgp::lgp::{evolve, read_supervised_csv, write_program, write_supervised_csv, MachineSpec, SupervisedSet};
use antlgp::pipeline::{
    cluster_stage, compare_ablation, make_supervised, run_seeds, snapshot_file_name, write_clusters_csv,
    write_manifest, write_report, write_summary_csv, PipelineConfig, SplitRule, StageSeeds,
};
use antlgp::weblog::{normalize, parse_usage_csv, synth_generate, write_usage_csv, Granularity, UsageDataset};
use antlgp::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "antlgp", version, about = "Ant-colony clustering and linear GP for web traffic prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic multi-regime usage CSV.
    Synth(SynthArgs),
    /// Cluster a usage CSV and write snapshots plus cluster labels.
    Cluster(ClusterArgs),
    /// Evolve a predictor on a supervised CSV (`source,<inputs...>,target`).
    Evolve(EvolveArgs),
    /// Cluster, re-index and evolve; optionally compare against plain LGP.
    Pipeline(PipelineArgs),
    /// Convert a snapshot CSV to a greyscale PGM image.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    regimes: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Record labels: daily or hourly.
    #[arg(long, default_value = "daily")]
    granularity: String,
    #[arg(long)]
    out: PathBuf,
    /// Also write the normalized one-step-ahead supervised set here.
    #[arg(long)]
    supervised: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    common: Common,
    /// Usage CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Snapshot steps, comma separated; overrides `snapshot_steps`.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<u64>>,
    /// Also render every snapshot as PGM.
    #[arg(long)]
    pgm: bool,
    #[arg(long, default_value_t = 8)]
    scale: usize,
    /// Overrides the `# granularity:` comment of the input.
    #[arg(long)]
    granularity: Option<String>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    /// Supervised CSV. Without `--test` it is split by the configured rule.
    #[arg(long = "in")]
    input: PathBuf,
    /// Separate supervised test CSV.
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[command(flatten)]
    common: Common,
    /// Usage CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Independent runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Run both arms (with and without the cluster feature) per seed.
    #[arg(long)]
    ablation: bool,
    /// Overrides the `# granularity:` comment of the input.
    #[arg(long)]
    granularity: Option<String>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Snapshot CSV.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    scale: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Cluster(a) => cluster(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("antlgp: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn with_path(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(with_path(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path).map(BufWriter::new).map_err(with_path(path))
}

/// Writes a file through `f`, flushing at the end.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn granularity(arg: Option<&str>) -> Result<Option<Granularity>> {
    arg.map(str::parse).transpose()
}

/// Preset for the data's granularity, then the config file, `--set`
/// overrides and `--seed`. Not validated.
fn merge_config(c: &Common, g: Granularity) -> Result<PipelineConfig> {
    let base = match g {
        Granularity::Daily => PipelineConfig::daily(),
        Granularity::Hourly => PipelineConfig::hourly(),
    };
    let mut cfg = match &c.config {
        Some(p) => config::parse(&fs::read_to_string(p).map_err(with_path(p))?, base)?,
        None => base,
    };
    for kv in &c.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config::apply(&mut cfg, k.trim(), v)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn resolve_config(c: &Common, g: Granularity) -> Result<PipelineConfig> {
    let cfg = merge_config(c, g)?;
    cfg.validate()?;
    Ok(cfg)
}

fn load_usage(path: &Path, g: Option<&str>) -> Result<UsageDataset> {
    parse_usage_csv(open(path)?, granularity(g)?)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut d = synth_generate(a.seed, a.n, a.regimes, a.noise)?;
    let g: Granularity = a.granularity.parse()?;
    antlgp::weblog::relabel(&mut d, g);
    write_file(&a.out, |w| write_usage_csv(&d, w))?;
    if let Some(p) = &a.supervised {
        let s = make_supervised(&normalize(&d)?, 1)?;
        write_file(p, |w| write_supervised_csv(&s, &["requests", "bytes", "position"], w))?;
    }
    sidecar_manifest(
        &a.out,
        "synth",
        &[
            ("seed", a.seed.to_string()),
            ("n", a.n.to_string()),
            ("regimes", a.regimes.to_string()),
            ("noise", a.noise.to_string()),
            ("granularity", g.to_string()),
        ],
    )
}

/// `<out>.manifest` for commands that write a single file.
fn sidecar_manifest(out: &Path, command: &str, params: &[(&str, String)]) -> Result<()> {
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest");
    write_file(Path::new(&path), |w| {
        writeln!(w, "# antlgp {} {command}", env!("CARGO_PKG_VERSION"))?;
        for (k, v) in params {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    })
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let d = load_usage(&a.input, a.granularity.as_deref())?;
    let mut cfg = resolve_config(&a.common, d.granularity)?;
    if let Some(s) = a.snapshots {
        cfg.colony.snapshot_steps = s;
    }
    if a.pgm && a.scale == 0 {
        return Err(invalid("--scale must be >= 1"));
    }
    let stage = cluster_stage(&cfg, &d)?;
    let out = &a.common.out_dir;
    let snaps = out.join("snapshots");
    fs::create_dir_all(&snaps)?;
    for s in &stage.snapshots {
        let name = snapshot_file_name(s.step);
        write_file(&snaps.join(&name), |w| write_snapshot_csv(s, w))?;
        if a.pgm {
            write_file(&snaps.join(name.replace(".csv", ".pgm")), |w| render_pgm(s, a.scale, w))?;
        }
    }
    write_file(&out.join("clusters.csv"), |w| write_clusters_csv(&stage.assignment, w))?;
    write_file(&out.join("manifest"), |w| {
        write_manifest(&cfg, &mut *w)?;
        writeln!(w, "# rand_index = {}", stage.rand_index)?;
        if let Some(p) = stage.purity {
            writeln!(w, "# purity = {p}")?;
        }
        writeln!(w, "# clusters = {}", stage.assignment.num_clusters())?;
        Ok(())
    })?;
    eprintln!(
        "{} clusters from {} records, rand index {:.4}",
        stage.assignment.num_clusters(),
        d.len(),
        stage.rand_index
    );
    Ok(())
}

/// Splits by source: a fraction keeps the earliest sources for training.
fn split_supervised(d: &SupervisedSet, rule: &SplitRule) -> Result<(SupervisedSet, SupervisedSet)> {
    let (train, test) = match rule {
        SplitRule::Fraction(f) => {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(invalid("train fraction must be in (0, 1)"));
            }
            let mut sources = d.sources.clone();
            sources.sort_unstable();
            sources.dedup();
            let cut = ((sources.len() as f64 * f).round() as usize).clamp(1, sources.len().saturating_sub(1));
            let first_test = *sources.get(cut).ok_or_else(|| invalid("need at least 2 examples to split"))?;
            (d.filter_sources(|s| s < first_test), d.filter_sources(|s| s >= first_test))
        }
        SplitRule::Ranges(r) => (d.filter_sources(|s| r.train.contains(&s)), d.filter_sources(|s| r.test.contains(&s))),
    };
    if train.is_empty() || test.is_empty() {
        return Err(invalid("split leaves no train or no test examples"));
    }
    Ok((train, test))
}

fn evolve_cmd(a: EvolveArgs) -> Result<()> {
    // Colony keys are accepted but unused here.
    let cfg = merge_config(&a.common, Granularity::Daily)?;
    cfg.evolution.validate()?;
    if cfg.calc_registers == 0 {
        return Err(invalid("calc_registers must be >= 1"));
    }
    let data = read_supervised_csv(open(&a.input)?)?;
    let (train, test) = match &a.test {
        Some(p) => {
            let test = read_supervised_csv(open(p)?)?;
            if test.n_inputs != data.n_inputs {
                return Err(invalid("train and test files have different input columns"));
            }
            (data, test)
        }
        None => split_supervised(&data, &cfg.split)?,
    };
    let seeds = StageSeeds::from_master(cfg.seed);
    let m = MachineSpec::with_default_constants(train.n_inputs, cfg.calc_registers, seeds.constants)?;
    let ecfg = antlgp::lgp::EvolutionConfig { seed: seeds.evolve, ..cfg.evolution.clone() };
    let r = evolve(&ecfg, &train, &test, &m)?;
    let out = &a.common.out_dir;
    fs::create_dir_all(out)?;
    write_file(&out.join("history.csv"), |w| r.write_history_csv(w))?;
    write_file(&out.join("summary.csv"), |w| r.write_summary_csv(w))?;
    write_file(&out.join("best_program.txt"), |w| write_program(&r.best, &r.machine, w))?;
    write_file(&out.join("manifest"), |w| write_manifest(&cfg, w))?;
    eprintln!("train RMSE {:.6}, test RMSE {:.6}, test CC {:.4}", r.rmse_train, r.rmse_test, r.cc_test);
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    if a.seeds == 0 {
        return Err(invalid("--seeds must be >= 1"));
    }
    let d = load_usage(&a.input, a.granularity.as_deref())?;
    let cfg = resolve_config(&a.common, d.granularity)?;
    let out = &a.common.out_dir;
    fs::create_dir_all(out)?;
    write_file(&out.join("manifest"), |w| {
        write_manifest(&cfg, &mut *w)?;
        writeln!(w, "# seeds = {}", a.seeds)?;
        writeln!(w, "# compare_ablation = {}", a.ablation)?;
        Ok(())
    })?;

    if a.ablation {
        let table = compare_ablation(&cfg, &d, a.seeds)?;
        write_file(&out.join("ablation.csv"), |w| table.write_csv(w))?;
        eprintln!("cluster feature wins {} of {} seeds", table.wins(), table.rows.len());
        return Ok(());
    }

    let reports = run_seeds(&cfg, &d, a.seeds)?;
    if let [only] = reports.as_slice() {
        write_report(only, out)?;
    } else {
        for r in &reports {
            write_report(r, &out.join(format!("seed_{}", r.config.seed)))?;
        }
        write_file(&out.join("summary.csv"), |w| write_summary_csv(&reports, w))?;
    }
    for r in &reports {
        eprintln!(
            "seed {}: {} clusters, test RMSE {:.6}, test CC {:.4}",
            r.config.seed,
            r.clusters.assignment.num_clusters(),
            r.evolution.rmse_test,
            r.evolution.cc_test
        );
    }
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let s = read_snapshot_csv(open(&a.input)?)?;
    write_file(&a.out, |w| render_pgm(&s, a.scale, w))?;
    sidecar_manifest(&a.out, "render", &[("in", a.input.display().to_string()), ("scale", a.scale.to_string())])
}
