//! Usage-statistics ingestion: CSV parsing, min-max normalization,
//! cluster-aware re-indexing, train/test splitting and a synthetic
//! traffic generator.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::antcluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Scale applied to the unit-range synthetic request curve.
pub const SYNTH_REQUEST_SCALE: f64 = 1_000.0;
/// Scale applied to the unit-range synthetic byte curve.
pub const SYNTH_BYTE_SCALE: f64 = 50_000.0;

const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    Hourly,
    #[default]
    Daily,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Hourly => "hourly",
            Granularity::Daily => "daily",
        })
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hourly" => Ok(Granularity::Hourly),
            "daily" => Ok(Granularity::Daily),
            other => Err(Error::validation(format!("unknown granularity `{other}`"))),
        }
    }
}

/// One row of log-analyzer statistics.
///
/// `index` is the record's identity and chronological position (most recent
/// is highest). `position` is the value of the index *feature*: equal to
/// `index` in raw data, min-max scaled after normalization, and replaced by
/// the cluster-sorted sequence position after [`reindex_by_cluster`].
#[derive(Debug, Clone, PartialEq)]
pub struct UsageRecord {
    pub index: u64,
    pub label: String,
    pub requests: f64,
    pub bytes: f64,
    pub position: f64,
    /// Normalized cluster feature, present after re-indexing.
    pub cluster: Option<f64>,
    /// Hidden ground-truth regime (synthetic data only).
    pub regime: Option<u32>,
}

impl UsageRecord {
    pub fn new(index: u64, label: impl Into<String>, requests: f64, bytes: f64) -> Self {
        UsageRecord { index, label: label.into(), requests, bytes, position: index as f64, cluster: None, regime: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        FeatureRange { min, max }
    }

    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }

    /// Min-max scaling; a constant feature maps to 0.0.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            self.min + v * (self.max - self.min)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRanges {
    pub requests: FeatureRange,
    pub bytes: FeatureRange,
    pub index: FeatureRange,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UsageDataset {
    pub records: Vec<UsageRecord>,
    pub granularity: Granularity,
    /// Present iff the dataset has been normalized.
    pub feature_ranges: Option<FeatureRanges>,
}

impl UsageDataset {
    pub fn new(records: Vec<UsageRecord>, granularity: Granularity) -> Result<Self> {
        validate_records(&records)?;
        Ok(UsageDataset { records, granularity, feature_ranges: None })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.feature_ranges.is_some()
    }

    pub fn is_reindexed(&self) -> bool {
        self.records.first().is_some_and(|r| r.cluster.is_some())
    }

    pub fn index_bounds(&self) -> Option<(u64, u64)> {
        let min = self.records.iter().map(|r| r.index).min()?;
        let max = self.records.iter().map(|r| r.index).max()?;
        Some((min, max))
    }

    /// Inverse of [`normalize`] for the request, byte and index features.
    pub fn denormalize(&self) -> Result<UsageDataset> {
        let ranges = self.feature_ranges.ok_or_else(|| Error::state("dataset is not normalized"))?;
        let records = self
            .records
            .iter()
            .map(|r| UsageRecord {
                requests: ranges.requests.denormalize(r.requests),
                bytes: ranges.bytes.denormalize(r.bytes),
                position: ranges.index.denormalize(r.position),
                ..r.clone()
            })
            .collect();
        Ok(UsageDataset { records, granularity: self.granularity, feature_ranges: None })
    }
}

fn validate_records(records: &[UsageRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !(r.requests >= 0.0) || !(r.bytes >= 0.0) {
            return Err(Error::validation(format!("record {} has a negative or non-numeric count", r.index)));
        }
        if !seen.insert(r.index) {
            return Err(Error::validation(format!("duplicate index {}", r.index)));
        }
    }
    Ok(())
}

/// Inclusive train and test index intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: RangeInclusive<u64>,
    pub test: RangeInclusive<u64>,
}

impl SplitSpec {
    pub fn new(train: RangeInclusive<u64>, test: RangeInclusive<u64>) -> Self {
        SplitSpec { train, test }
    }

    /// Chronological split: the first `train_fraction` of the index range
    /// trains, the rest tests.
    pub fn by_fraction(d: &UsageDataset, train_fraction: f64) -> Result<SplitSpec> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::validation("train fraction must be in (0, 1)"));
        }
        let (lo, hi) = d.index_bounds().ok_or_else(|| Error::validation("cannot split an empty dataset"))?;
        if hi == lo {
            return Err(Error::validation("need at least two indices to split"));
        }
        let span = (hi - lo + 1) as f64;
        let cut = ((span * train_fraction).round() as u64).clamp(1, hi - lo);
        Ok(SplitSpec::new(lo..=lo + cut - 1, lo + cut..=hi))
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::validation("split ranges must be non-empty"));
        }
        if self.test.start() <= self.train.end() {
            if self.test.end() >= self.train.start() {
                return Err(Error::validation("train and test ranges overlap"));
            }
            return Err(Error::validation("test range must follow the train range"));
        }
        Ok(())
    }

    pub fn validate_for(&self, d: &UsageDataset) -> Result<()> {
        self.validate()?;
        let (lo, hi) = d.index_bounds().ok_or_else(|| Error::validation("cannot split an empty dataset"))?;
        for r in [&self.train, &self.test] {
            if *r.start() < lo || *r.end() > hi {
                return Err(Error::validation(format!(
                    "range {}..={} outside dataset bounds {lo}..={hi}",
                    r.start(),
                    r.end()
                )));
            }
        }
        Ok(())
    }
}

/// Reads the `index,label,requests,bytes` CSV format.
///
/// Recognized comment lines: `# granularity: hourly|daily` and, for
/// normalized data, `# range: <feature> <min> <max>` for each of `requests`,
/// `bytes` and `index`. Optional trailing columns: `position`, `cluster`,
/// `regime`.
pub fn parse_usage_csv<R: Read>(source: R, granularity_override: Option<Granularity>) -> Result<UsageDataset> {
    let reader = BufReader::new(source);
    let mut granularity = None;
    let mut ranges: [Option<FeatureRange>; 3] = [None; 3];
    let mut columns: Option<Columns> = None;
    let mut records = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            parse_comment(comment, line_no, &mut granularity, &mut ranges)?;
            continue;
        }
        match &columns {
            None => columns = Some(Columns::from_header(trimmed, line_no)?),
            Some(cols) => records.push(cols.parse_row(trimmed, line_no)?),
        }
    }

    let cols = columns.ok_or_else(|| Error::parse(1, "missing header `index,label,requests,bytes`"))?;
    validate_records(&records)?;
    if cols.cluster.is_none() {
        if let Some(w) = records.windows(2).find(|w| w[1].index < w[0].index) {
            return Err(Error::validation(format!("indices must be ascending ({} after {})", w[1].index, w[0].index)));
        }
    }

    let feature_ranges = match ranges {
        [Some(requests), Some(bytes), Some(index)] => Some(FeatureRanges { requests, bytes, index }),
        [None, None, None] => None,
        _ => return Err(Error::validation("normalized data needs `# range:` lines for requests, bytes and index")),
    };
    if let Some(fr) = &feature_ranges {
        for r in &mut records {
            if cols.position.is_none() {
                r.position = fr.index.normalize(r.index as f64);
            }
            let in_unit = |v: f64| (0.0..=1.0).contains(&v);
            if !in_unit(r.requests) || !in_unit(r.bytes) || !in_unit(r.position) {
                return Err(Error::validation(format!(
                    "record {} lies outside [0, 1] in a normalized dataset",
                    r.index
                )));
            }
        }
    }

    Ok(UsageDataset { records, granularity: granularity_override.or(granularity).unwrap_or_default(), feature_ranges })
}

fn parse_comment(
    comment: &str,
    line_no: usize,
    granularity: &mut Option<Granularity>,
    ranges: &mut [Option<FeatureRange>; 3],
) -> Result<()> {
    let Some((key, value)) = comment.split_once(':') else {
        return Ok(());
    };
    match key.trim() {
        "granularity" => {
            *granularity = Some(value.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?);
        }
        "range" => {
            let parts: Vec<&str> = value.split_whitespace().collect();
            let [name, min, max] = parts[..] else {
                return Err(Error::parse(line_no, "expected `# range: <feature> <min> <max>`"));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(line_no, format!("bad number `{s}`")));
            let slot = match name {
                "requests" => 0,
                "bytes" => 1,
                "index" => 2,
                other => return Err(Error::parse(line_no, format!("unknown feature `{other}`"))),
            };
            ranges[slot] = Some(FeatureRange { min: num(min)?, max: num(max)? });
        }
        _ => {}
    }
    Ok(())
}

struct Columns {
    count: usize,
    position: Option<usize>,
    cluster: Option<usize>,
    regime: Option<usize>,
}

impl Columns {
    fn from_header(header: &str, line_no: usize) -> Result<Self> {
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        if names.len() < 4 || names[..4] != ["index", "label", "requests", "bytes"] {
            return Err(Error::parse(
                line_no,
                format!("expected header starting `index,label,requests,bytes`, found `{header}`"),
            ));
        }
        let mut cols = Columns { count: names.len(), position: None, cluster: None, regime: None };
        for (i, name) in names.iter().enumerate().skip(4) {
            let slot = match *name {
                "position" => &mut cols.position,
                "cluster" => &mut cols.cluster,
                "regime" => &mut cols.regime,
                other => return Err(Error::parse(line_no, format!("unknown column `{other}`"))),
            };
            *slot = Some(i);
        }
        Ok(cols)
    }

    fn parse_row(&self, row: &str, line_no: usize) -> Result<UsageRecord> {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != self.count {
            return Err(Error::parse(line_no, format!("expected {} fields, found {}", self.count, fields.len())));
        }
        let float = |i: usize, what: &str| {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("bad {what} `{}`", fields[i])))
        };
        let index =
            fields[0].parse::<u64>().map_err(|_| Error::parse(line_no, format!("bad index `{}`", fields[0])))?;
        let requests = float(2, "requests")?;
        let bytes = float(3, "bytes")?;
        if requests < 0.0 || bytes < 0.0 {
            return Err(Error::validation(format!("line {line_no}: counts must be non-negative")));
        }
        let mut record = UsageRecord::new(index, fields[1], requests, bytes);
        if let Some(i) = self.position {
            record.position = float(i, "position")?;
        }
        if let Some(i) = self.cluster {
            record.cluster = Some(float(i, "cluster")?);
        }
        if let Some(i) = self.regime {
            record.regime = Some(
                fields[i].parse::<u32>().map_err(|_| Error::parse(line_no, format!("bad regime `{}`", fields[i])))?,
            );
        }
        Ok(record)
    }
}

/// Writes `d` in the format read by [`parse_usage_csv`].
pub fn write_usage_csv<W: Write>(d: &UsageDataset, mut out: W) -> Result<()> {
    writeln!(out, "# granularity: {}", d.granularity)?;
    if let Some(fr) = &d.feature_ranges {
        for (name, r) in [("requests", fr.requests), ("bytes", fr.bytes), ("index", fr.index)] {
            writeln!(out, "# range: {name} {:?} {:?}", r.min, r.max)?;
        }
    }
    let reindexed = d.is_reindexed();
    let has_regime = d.records.iter().any(|r| r.regime.is_some());
    let mut header = String::from("index,label,requests,bytes");
    if reindexed {
        header.push_str(",position,cluster");
    }
    if has_regime {
        header.push_str(",regime");
    }
    writeln!(out, "{header}")?;
    for r in &d.records {
        write!(out, "{},{},{:?},{:?}", r.index, r.label, r.requests, r.bytes)?;
        if reindexed {
            write!(out, ",{:?},{:?}", r.position, r.cluster.unwrap_or(0.0))?;
        }
        if has_regime {
            match r.regime {
                Some(g) => write!(out, ",{g}")?,
                None => write!(out, ",0")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Min-max normalizes requests, bytes and the index feature into [0, 1].
pub fn normalize(d: &UsageDataset) -> Result<UsageDataset> {
    if d.is_normalized() {
        return Err(Error::state("dataset is already normalized"));
    }
    if d.len() < 2 {
        return Err(Error::validation("normalization needs at least 2 records"));
    }
    let ranges = FeatureRanges {
        requests: FeatureRange::of(d.records.iter().map(|r| r.requests)),
        bytes: FeatureRange::of(d.records.iter().map(|r| r.bytes)),
        index: FeatureRange::of(d.records.iter().map(|r| r.position)),
    };
    let records = d
        .records
        .iter()
        .map(|r| UsageRecord {
            requests: ranges.requests.normalize(r.requests),
            bytes: ranges.bytes.normalize(r.bytes),
            position: ranges.index.normalize(r.position),
            ..r.clone()
        })
        .collect();
    Ok(UsageDataset { records, granularity: d.granularity, feature_ranges: Some(ranges) })
}

/// Sorts records by (cluster, original index), replaces the index feature
/// with the new sequence position and attaches the cluster id as a scalar
/// feature `cluster / (num_clusters - 1)`.
pub fn reindex_by_cluster(d: &UsageDataset, a: &ClusterAssignment) -> Result<UsageDataset> {
    let mut keyed = Vec::with_capacity(d.len());
    for r in &d.records {
        let c = a
            .cluster_of(r.index)
            .ok_or_else(|| Error::validation(format!("record {} is missing from the cluster assignment", r.index)))?;
        keyed.push((c, r));
    }
    keyed.sort_by_key(|(c, r)| (*c, r.index));

    let n = keyed.len();
    let denom = a.num_clusters().saturating_sub(1);
    let position_range = FeatureRange { min: 1.0, max: n as f64 };
    let normalized = d.feature_ranges.is_some();
    let records = keyed
        .into_iter()
        .enumerate()
        .map(|(i, (c, r))| {
            let seq = (i + 1) as f64;
            UsageRecord {
                position: if normalized { position_range.normalize(seq) } else { seq },
                cluster: Some(if denom == 0 { 0.0 } else { c as f64 / denom as f64 }),
                ..r.clone()
            }
        })
        .collect();
    Ok(UsageDataset {
        records,
        granularity: d.granularity,
        feature_ranges: d.feature_ranges.map(|fr| FeatureRanges { index: position_range, ..fr }),
    })
}

/// Partitions records by index interval.
pub fn split(d: &UsageDataset, s: &SplitSpec) -> Result<(UsageDataset, UsageDataset)> {
    s.validate_for(d)?;
    let pick = |range: &RangeInclusive<u64>| UsageDataset {
        records: d.records.iter().filter(|r| range.contains(&r.index)).cloned().collect(),
        granularity: d.granularity,
        feature_ranges: d.feature_ranges,
    };
    Ok((pick(&s.train), pick(&s.test)))
}

/// Noise-free request and byte levels (unit scale) of `regime` at record
/// `t` of `n`. Higher regimes carry more traffic and grow faster.
pub fn regime_curve(regime: usize, regimes: usize, t: u64, n: usize) -> (f64, f64) {
    let level = if regimes <= 1 { 0.5 } else { regime as f64 / (regimes - 1) as f64 };
    let tau = t as f64 / n as f64;
    let requests = 0.15 + 0.7 * level + (0.04 + 0.08 * level) * tau;
    let bytes = 0.1 + 0.75 * level + (0.02 + 0.05 * level) * tau;
    (requests, bytes)
}

/// Deterministic synthetic traffic with `regimes` interleaved regimes.
///
/// Each record is assigned a regime (balanced, shuffled over time), sits on
/// that regime's [`regime_curve`] and receives additive uniform noise of
/// amplitude `noise` (unit scale) before scaling to counts.
pub fn synth_generate(seed: u64, n: usize, regimes: usize, noise: f64) -> Result<UsageDataset> {
    if regimes < 1 || n < regimes {
        return Err(Error::validation(format!("need n >= regimes >= 1 (n = {n}, regimes = {regimes})")));
    }
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::validation(format!("noise {noise} not in [0, 1)")));
    }
    let mut rng = rng_from_seed(seed);
    let mut assignment: Vec<usize> = (0..n).map(|t| t % regimes).collect();
    assignment.shuffle(&mut rng);

    let records = assignment
        .into_iter()
        .enumerate()
        .map(|(i, regime)| {
            let t = i as u64 + 1;
            let (req, byt) = regime_curve(regime, regimes, t, n);
            let (mut req_noise, mut byt_noise) = (0.0, 0.0);
            if noise > 0.0 {
                req_noise = noise * rng.gen_range(-1.0..=1.0);
                byt_noise = noise * rng.gen_range(-1.0..=1.0);
            }
            let label = WEEKDAYS[i % WEEKDAYS.len()];
            let mut r = UsageRecord::new(
                t,
                label,
                SYNTH_REQUEST_SCALE * (req + req_noise).max(0.0),
                SYNTH_BYTE_SCALE * (byt + byt_noise).max(0.0),
            );
            r.regime = Some(regime as u32);
            r
        })
        .collect();
    Ok(UsageDataset { records, granularity: Granularity::Daily, feature_ranges: None })
}

/// Relabels records for hourly data (`HH:00`) or daily data (weekday).
pub fn relabel(d: &mut UsageDataset, granularity: Granularity) {
    d.granularity = granularity;
    for (i, r) in d.records.iter_mut().enumerate() {
        r.label = match granularity {
            Granularity::Daily => WEEKDAYS[i % WEEKDAYS.len()].to_string(),
            Granularity::Hourly => format!("{:02}:00", i % 24),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antcluster::ClusterAssignment;

    fn dataset(rows: &[(u64, f64, f64)]) -> UsageDataset {
        let records = rows.iter().map(|&(i, req, b)| UsageRecord::new(i, "x", req, b)).collect();
        UsageDataset::new(records, Granularity::Daily).unwrap()
    }

    #[test]
    fn parses_two_rows() {
        let d = parse_usage_csv("index,label,requests,bytes\n1,Mon,100,5000\n2,Tue,120,6000".as_bytes(), None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.records[0].index, 1);
        assert_eq!(d.records[1].index, 2);
        assert_eq!(d.records[1].requests, 120.0);
        assert_eq!(d.granularity, Granularity::Daily);
    }

    #[test]
    fn empty_body_is_valid() {
        let d = parse_usage_csv("index,label,requests,bytes\n".as_bytes(), None).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn negative_count_rejected() {
        let err = parse_usage_csv("index,label,requests,bytes\n3,Wed,-5,10".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn duplicate_index_rejected() {
        let src = "index,label,requests,bytes\n1,a,1,1\n1,b,2,2\n";
        assert!(matches!(parse_usage_csv(src.as_bytes(), None), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_row_names_line() {
        let src = "# granularity: hourly\nindex,label,requests,bytes\n1,a,1,1\n2,b,oops,2\n";
        match parse_usage_csv(src.as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn granularity_comment_and_override() {
        let src = "# granularity: hourly\nindex,label,requests,bytes\n1,00:00,1,1\n";
        assert_eq!(parse_usage_csv(src.as_bytes(), None).unwrap().granularity, Granularity::Hourly);
        let d = parse_usage_csv(src.as_bytes(), Some(Granularity::Daily)).unwrap();
        assert_eq!(d.granularity, Granularity::Daily);
    }

    #[test]
    fn normalize_min_max() {
        let d = normalize(&dataset(&[(1, 100.0, 7.0), (2, 200.0, 7.0), (3, 300.0, 7.0)])).unwrap();
        let req: Vec<f64> = d.records.iter().map(|r| r.requests).collect();
        let byt: Vec<f64> = d.records.iter().map(|r| r.bytes).collect();
        assert_eq!(req, vec![0.0, 0.5, 1.0]);
        assert_eq!(byt, vec![0.0, 0.0, 0.0]);
        assert_eq!(d.records[2].position, 1.0);
    }

    #[test]
    fn normalize_preconditions() {
        let one = dataset(&[(1, 1.0, 1.0)]);
        assert!(matches!(normalize(&one), Err(Error::Validation(_))));
        let two = normalize(&dataset(&[(1, 1.0, 1.0), (2, 2.0, 2.0)])).unwrap();
        assert!(matches!(normalize(&two), Err(Error::State(_))));
    }

    fn assignment(pairs: &[(u64, usize)]) -> ClusterAssignment {
        ClusterAssignment::from_labels(pairs.iter().copied(), None)
    }

    #[test]
    fn reindex_sorts_by_cluster_then_index() {
        let d = normalize(&dataset(&[(1, 1.0, 1.0), (2, 2.0, 2.0), (3, 3.0, 3.0)])).unwrap();
        let a = assignment(&[(1, 1), (2, 0), (3, 0)]);
        let r = reindex_by_cluster(&d, &a).unwrap();
        let order: Vec<u64> = r.records.iter().map(|r| r.index).collect();
        assert_eq!(order, vec![2, 3, 1]);
        let clusters: Vec<f64> = r.records.iter().map(|r| r.cluster.unwrap()).collect();
        assert_eq!(clusters, vec![0.0, 0.0, 1.0]);
        let pos: Vec<f64> = r.records.iter().map(|r| r.position).collect();
        assert_eq!(pos, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn reindex_single_cluster_keeps_order() {
        let d = normalize(&dataset(&[(1, 1.0, 1.0), (2, 2.0, 2.0), (3, 3.0, 3.0)])).unwrap();
        let r = reindex_by_cluster(&d, &assignment(&[(1, 0), (2, 0), (3, 0)])).unwrap();
        let order: Vec<u64> = r.records.iter().map(|r| r.index).collect();
        assert_eq!(order, vec![1, 2, 3]);
        assert!(r.records.iter().all(|r| r.cluster == Some(0.0)));
    }

    #[test]
    fn reindex_missing_record() {
        let d = dataset(&[(1, 1.0, 1.0), (2, 2.0, 2.0)]);
        let err = reindex_by_cluster(&d, &assignment(&[(1, 0)])).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn split_sizes_and_errors() {
        let rows: Vec<(u64, f64, f64)> = (1..=10).map(|i| (i, i as f64, 1.0)).collect();
        let d = dataset(&rows);
        let (tr, te) = split(&d, &SplitSpec::new(1..=8, 9..=10)).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert!(matches!(split(&d, &SplitSpec::new(1..=5, 5..=6)), Err(Error::Validation(_))));
        assert!(matches!(split(&d, &SplitSpec::new(1..=8, 9..=12)), Err(Error::Validation(_))));
    }

    #[test]
    fn split_by_fraction() {
        let rows: Vec<(u64, f64, f64)> = (1..=10).map(|i| (i, i as f64, 1.0)).collect();
        let s = SplitSpec::by_fraction(&dataset(&rows), 0.8).unwrap();
        assert_eq!(s, SplitSpec::new(1..=8, 9..=10));
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_generate(42, 60, 3, 0.05).unwrap();
        let b = synth_generate(42, 60, 3, 0.05).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_generate(43, 60, 3, 0.05).unwrap());
    }

    #[test]
    fn synth_zero_noise_lies_on_curve() {
        let d = synth_generate(5, 30, 3, 0.0).unwrap();
        for r in &d.records {
            let (req, byt) = regime_curve(r.regime.unwrap() as usize, 3, r.index, 30);
            assert_eq!(r.requests, SYNTH_REQUEST_SCALE * req);
            assert_eq!(r.bytes, SYNTH_BYTE_SCALE * byt);
        }
        let single = synth_generate(5, 10, 1, 0.0).unwrap();
        assert!(single.records.iter().all(|r| r.regime == Some(0)));
    }

    #[test]
    fn synth_rejects_bad_params() {
        assert!(synth_generate(1, 2, 3, 0.0).is_err());
        assert!(synth_generate(1, 5, 0, 0.0).is_err());
        assert!(synth_generate(1, 5, 1, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip_normalized_reindexed() {
        let d = normalize(&synth_generate(3, 12, 3, 0.05).unwrap()).unwrap();
        let labels: Vec<(u64, usize)> = d.records.iter().map(|r| (r.index, r.regime.unwrap() as usize)).collect();
        let r = reindex_by_cluster(&d, &assignment(&labels)).unwrap();
        let mut buf = Vec::new();
        write_usage_csv(&r, &mut buf).unwrap();
        let back = parse_usage_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back, r);
    }
}
