//! End-to-end ANT-LGP: cluster the usage records, feed the cluster label to
//! the genetic programming stage as an extra input and report forecast
//! quality.
//!
//! Stage seeds are derived from the master seed and the stage name, so the
//! `seed` fields inside the component configs are ignored here.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::antcluster::{
    self, extract_clusters, purity, rand_index, write_snapshot_csv, ClusterAssignment, ColonyConfig, DataItem, Snapshot,
};
use crate::config;
use crate::error::{Error, Result};
use crate::lgp::{evolve, write_program, EvolutionConfig, EvolutionReport, MachineSpec, SupervisedSet};
use crate::par::{self, Exec};
use crate::rng::stage_seed;
use crate::weblog::{normalize, reindex_by_cluster, Granularity, SplitSpec, UsageDataset};

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Chronological: the first fraction of the index range trains.
    Fraction(f64),
    Ranges(SplitSpec),
}

impl SplitRule {
    pub fn resolve(&self, d: &UsageDataset) -> Result<SplitSpec> {
        let s = match self {
            SplitRule::Fraction(f) => SplitSpec::by_fraction(d, *f)?,
            SplitRule::Ranges(s) => s.clone(),
        };
        s.validate_for(d)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub colony: ColonyConfig,
    pub evolution: EvolutionConfig,
    pub split: SplitRule,
    pub link_radius: usize,
    /// Forecast distance in records.
    pub horizon: usize,
    /// Drop the clustering contribution (no re-indexing, no cluster input).
    pub ablation: bool,
    pub calc_registers: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::daily()
    }
}

impl PipelineConfig {
    pub fn daily() -> Self {
        PipelineConfig {
            colony: ColonyConfig::daily(),
            evolution: EvolutionConfig::default(),
            split: SplitRule::Fraction(0.75),
            link_radius: 1,
            horizon: 1,
            ablation: false,
            calc_registers: 4,
            seed: 0,
        }
    }

    pub fn hourly() -> Self {
        PipelineConfig { colony: ColonyConfig::hourly(), ..PipelineConfig::daily() }
    }

    pub fn validate(&self) -> Result<()> {
        self.colony.validate()?;
        self.evolution.validate()?;
        if self.link_radius == 0 {
            return Err(Error::validation("link_radius must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(Error::validation("horizon must be >= 1"));
        }
        if self.calc_registers == 0 {
            return Err(Error::validation("calc_registers must be >= 1"));
        }
        match &self.split {
            SplitRule::Fraction(f) if !(*f > 0.0 && *f < 1.0) => {
                Err(Error::validation("train fraction must be in (0, 1)"))
            }
            SplitRule::Ranges(s) => s.validate(),
            _ => Ok(()),
        }
    }

    pub fn exec(&self) -> Exec {
        self.evolution.exec
    }
}

/// Seeds handed to each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub colony: u64,
    pub replica: u64,
    pub constants: u64,
    pub evolve: u64,
}

impl StageSeeds {
    pub fn from_master(master: u64) -> Self {
        StageSeeds {
            colony: stage_seed(master, "colony"),
            replica: stage_seed(master, "colony-replica"),
            constants: stage_seed(master, "constants"),
            evolve: stage_seed(master, "evolve"),
        }
    }
}

/// Inputs `(requests, bytes, position[, cluster])` of record t and target
/// `requests` of record t + horizon. The cluster column is present when
/// every record carries one. Sources are the original record indices.
pub fn make_supervised(d: &UsageDataset, horizon: usize) -> Result<SupervisedSet> {
    if horizon == 0 {
        return Err(Error::validation("horizon must be >= 1"));
    }
    if d.len() <= horizon {
        return Err(Error::validation(format!("{} records are too few for horizon {horizon}", d.len())));
    }
    let with_cluster = d.records.iter().all(|r| r.cluster.is_some());
    let mut out = SupervisedSet::new(if with_cluster { 4 } else { 3 });
    let mut row = Vec::with_capacity(4);
    for (r, ahead) in d.records.iter().zip(&d.records[horizon..]) {
        row.clear();
        row.extend([r.requests, r.bytes, r.position]);
        if let Some(c) = r.cluster.filter(|_| with_cluster) {
            row.push(c);
        }
        out.push(r.index, &row, ahead.requests);
    }
    Ok(out)
}

/// Clustering items: normalized requests and bytes, regime as truth label.
pub fn clustering_items(d: &UsageDataset) -> Vec<DataItem> {
    d.records
        .iter()
        .map(|r| {
            let item = DataItem::new(r.index, vec![r.requests, r.bytes]);
            match r.regime {
                Some(l) => item.with_label(l),
                None => item,
            }
        })
        .collect()
}

/// Output of the clustering half, shared by both ablation arms.
#[derive(Debug, Clone)]
pub struct ClusterStage {
    pub seeds: StageSeeds,
    pub data: UsageDataset,
    pub assignment: ClusterAssignment,
    pub snapshots: Vec<Snapshot>,
    /// Agreement with a second colony run on another seed.
    pub rand_index: f64,
    pub purity: Option<f64>,
}

pub fn cluster_stage(cfg: &PipelineConfig, d: &UsageDataset) -> Result<ClusterStage> {
    cfg.validate()?;
    let seeds = StageSeeds::from_master(cfg.seed);
    let data = if d.is_normalized() { d.clone() } else { normalize(d).map_err(|e| e.in_stage("normalize"))? };
    let items = clustering_items(&data);
    let colony = |seed: u64| -> Result<(ClusterAssignment, Vec<Snapshot>)> {
        let ccfg = ColonyConfig { seed, ..cfg.colony.clone() };
        let run = antcluster::run(&ccfg, items.clone()).map_err(|e| e.in_stage("antcluster"))?;
        let a =
            extract_clusters(&run.state.grid, &run.state.items, cfg.link_radius).map_err(|e| e.in_stage("extract"))?;
        Ok((a, run.snapshots))
    };
    let (assignment, snapshots) = colony(seeds.colony)?;
    let (replica, _) = colony(seeds.replica)?;
    let rand_index = rand_index(&assignment, &replica).map_err(|e| e.in_stage("extract"))?;
    let truth: Option<BTreeMap<u64, u32>> = items.iter().map(|i| i.truth_label.map(|l| (i.id, l))).collect();
    let purity = truth.map(|t| purity(&assignment, &t)).transpose()?;
    Ok(ClusterStage { seeds, data, assignment, snapshots, rand_index, purity })
}

/// Supervised train and test sets, split by original record index.
pub fn supervised_split(
    cfg: &PipelineConfig,
    stage: &ClusterStage,
    ablation: bool,
) -> Result<(SupervisedSet, SupervisedSet)> {
    let spec = cfg.split.resolve(&stage.data).map_err(|e| e.in_stage("split"))?;
    let series = if ablation {
        stage.data.clone()
    } else {
        reindex_by_cluster(&stage.data, &stage.assignment).map_err(|e| e.in_stage("reindex"))?
    };
    let all = make_supervised(&series, cfg.horizon).map_err(|e| e.in_stage("supervised"))?;
    let train = all.filter_sources(|s| spec.train.contains(&s));
    let test = all.filter_sources(|s| spec.test.contains(&s));
    if train.is_empty() || test.is_empty() {
        return Err(Error::validation("split leaves no train or no test examples").in_stage("split"));
    }
    Ok((train, test))
}

pub fn lgp_stage(cfg: &PipelineConfig, stage: &ClusterStage, ablation: bool) -> Result<EvolutionReport> {
    let (train, test) = supervised_split(cfg, stage, ablation)?;
    let m = MachineSpec::with_default_constants(train.n_inputs, cfg.calc_registers, stage.seeds.constants)
        .map_err(|e| e.in_stage("evolve"))?;
    let ecfg = EvolutionConfig { seed: stage.seeds.evolve, ..cfg.evolution.clone() };
    evolve(&ecfg, &train, &test, &m).map_err(|e| e.in_stage("evolve"))
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub granularity: Granularity,
    pub clusters: ClusterStage,
    pub evolution: EvolutionReport,
}

impl PipelineReport {
    pub fn method(&self) -> &'static str {
        if self.config.ablation {
            "LGP"
        } else {
            "ANT-LGP"
        }
    }
}

pub fn run_antlgp(cfg: &PipelineConfig, d: &UsageDataset) -> Result<PipelineReport> {
    let clusters = cluster_stage(cfg, d)?;
    let evolution = lgp_stage(cfg, &clusters, cfg.ablation)?;
    Ok(PipelineReport { config: cfg.clone(), granularity: d.granularity, clusters, evolution })
}

/// Runs `n_seeds` pipelines on master seeds `cfg.seed, cfg.seed + 1, ...`.
pub fn run_seeds(cfg: &PipelineConfig, d: &UsageDataset, n_seeds: usize) -> Result<Vec<PipelineReport>> {
    if n_seeds == 0 {
        return Err(Error::validation("n_seeds must be >= 1"));
    }
    let cfgs: Vec<PipelineConfig> =
        (0..n_seeds as u64).map(|i| PipelineConfig { seed: cfg.seed.wrapping_add(i), ..cfg.clone() }).collect();
    par::try_map(cfg.exec(), &cfgs, |c| run_antlgp(c, d))
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub seed: u64,
    pub purity: Option<f64>,
    pub with_clusters: EvolutionReport,
    pub without_clusters: EvolutionReport,
}

impl AblationRow {
    pub fn cluster_wins(&self) -> bool {
        self.with_clusters.rmse_test < self.without_clusters.rmse_test
    }
}

#[derive(Debug, Clone)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn wins(&self) -> usize {
        self.rows.iter().filter(|r| r.cluster_wins()).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "seed,rmse_test_with_clusters,rmse_test_without_clusters,cluster_wins")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.seed,
                r.with_clusters.rmse_test,
                r.without_clusters.rmse_test,
                r.cluster_wins()
            )?;
        }
        Ok(())
    }
}

/// Both arms of each seed share one clustering stage; only the LGP input
/// differs.
pub fn compare_ablation(cfg: &PipelineConfig, d: &UsageDataset, n_seeds: usize) -> Result<AblationTable> {
    if n_seeds == 0 {
        return Err(Error::validation("n_seeds must be >= 1"));
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let rows = par::try_map(cfg.exec(), &seeds, |&seed| {
        let c = PipelineConfig { seed, ..cfg.clone() };
        let stage = cluster_stage(&c, d)?;
        Ok::<_, Error>(AblationRow {
            seed,
            purity: stage.purity,
            with_clusters: lgp_stage(&c, &stage, false)?,
            without_clusters: lgp_stage(&c, &stage, true)?,
        })
    })?;
    Ok(AblationTable { rows })
}

/// A published comparison figure, shown next to our own results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteratureRow {
    pub method: &'static str,
    pub rmse_train: f64,
    pub rmse_test: f64,
    pub cc: f64,
}

const fn lit(method: &'static str, rmse_train: f64, rmse_test: f64, cc: f64) -> LiteratureRow {
    LiteratureRow { method, rmse_train, rmse_test, cc }
}

pub const DAILY_LITERATURE: [LiteratureRow; 4] = [
    lit("ANT-LGP", 0.0191, 0.0291, 0.9963),
    lit("i-Miner", 0.0044, 0.0053, 0.9967),
    lit("ANN", 0.0345, 0.0481, 0.9292),
    lit("LGP", 0.0543, 0.0749, 0.9315),
];

pub const HOURLY_LITERATURE: [LiteratureRow; 4] = [
    lit("ANT-LGP", 0.2561, 0.035, 0.9921),
    lit("i-Miner (FCM-FIS)", 0.0012, 0.0041, 0.9981),
    lit("SOM-ANN", 0.0546, 0.0639, 0.9493),
    lit("SOM-LGP", 0.0654, 0.0516, 0.9446),
];

pub fn literature(g: Granularity) -> &'static [LiteratureRow] {
    match g {
        Granularity::Daily => &DAILY_LITERATURE,
        Granularity::Hourly => &HOURLY_LITERATURE,
    }
}

/// `method,rmse_train,rmse_test,cc,source` for our runs followed by the
/// published rows. Several runs add `mean` and `best` (lowest test RMSE)
/// rows.
pub fn write_summary_csv<W: Write>(reports: &[PipelineReport], mut out: W) -> Result<()> {
    writeln!(out, "method,rmse_train,rmse_test,cc,source")?;
    let Some(first) = reports.first() else {
        return Err(Error::validation("no reports to summarize"));
    };
    let row = |out: &mut W, name: &str, tr: f64, te: f64, cc: f64, src: &str| -> Result<()> {
        writeln!(out, "{name},{tr},{te},{cc},{src}")?;
        Ok(())
    };
    if reports.len() == 1 {
        let e = &first.evolution;
        row(&mut out, first.method(), e.rmse_train, e.rmse_test, e.cc_test, "run")?;
    } else {
        for r in reports {
            let e = &r.evolution;
            let name = format!("{} seed={}", r.method(), r.config.seed);
            row(&mut out, &name, e.rmse_train, e.rmse_test, e.cc_test, "run")?;
        }
        let n = reports.len() as f64;
        let mean = |f: fn(&EvolutionReport) -> f64| reports.iter().map(|r| f(&r.evolution)).sum::<f64>() / n;
        row(
            &mut out,
            &format!("{} mean", first.method()),
            mean(|e| e.rmse_train),
            mean(|e| e.rmse_test),
            mean(|e| e.cc_test),
            "run",
        )?;
        let best =
            reports.iter().min_by(|a, b| a.evolution.rmse_test.total_cmp(&b.evolution.rmse_test)).expect("non-empty");
        let e = &best.evolution;
        row(&mut out, &format!("{} best", first.method()), e.rmse_train, e.rmse_test, e.cc_test, "run")?;
    }
    for l in literature(first.granularity) {
        row(&mut out, l.method, l.rmse_train, l.rmse_test, l.cc, "paper")?;
    }
    Ok(())
}

pub fn write_clusters_csv<W: Write>(a: &ClusterAssignment, mut out: W) -> Result<()> {
    writeln!(out, "item_id,cluster")?;
    for (id, c) in a.iter() {
        writeln!(out, "{id},{c}")?;
    }
    Ok(())
}

pub fn snapshot_file_name(step: u64) -> String {
    format!("step_{step:07}.csv")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes one run's artifacts into `dir`: `clusters.csv`, `snapshots/`,
/// `history.csv`, `summary.csv`, `best_program.txt` and `manifest`.
pub fn write_report(report: &PipelineReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    let mut f = create(&dir.join("clusters.csv"))?;
    write_clusters_csv(&report.clusters.assignment, &mut f)?;
    f.flush()?;
    for s in &report.clusters.snapshots {
        let mut f = create(&dir.join("snapshots").join(snapshot_file_name(s.step)))?;
        write_snapshot_csv(s, &mut f)?;
        f.flush()?;
    }
    let mut f = create(&dir.join("history.csv"))?;
    report.evolution.write_history_csv(&mut f)?;
    f.flush()?;
    let mut f = create(&dir.join("summary.csv"))?;
    write_summary_csv(std::slice::from_ref(report), &mut f)?;
    f.flush()?;
    let mut f = create(&dir.join("best_program.txt"))?;
    write_program(&report.evolution.best, &report.evolution.machine, &mut f)?;
    f.flush()?;
    let mut f = create(&dir.join("manifest"))?;
    write_manifest(&report.config, &mut f)?;
    writeln!(f, "# rand_index = {}", report.clusters.rand_index)?;
    if let Some(p) = report.clusters.purity {
        writeln!(f, "# purity = {p}")?;
    }
    writeln!(f, "# clusters = {}", report.clusters.assignment.num_clusters())?;
    f.flush()?;
    Ok(())
}

/// Resolved configuration plus the derived stage seeds. Lines starting
/// with `#` are informational; the rest reloads as a config file.
pub fn write_manifest<W: Write>(cfg: &PipelineConfig, mut out: W) -> Result<()> {
    let s = StageSeeds::from_master(cfg.seed);
    writeln!(out, "# antlgp {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# colony_seed = {}", s.colony)?;
    writeln!(out, "# replica_seed = {}", s.replica)?;
    writeln!(out, "# constants_seed = {}", s.constants)?;
    writeln!(out, "# evolve_seed = {}", s.evolve)?;
    out.write_all(config::render(cfg).as_bytes())?;
    Ok(())
}
