//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. A `preset = daily|hourly` line
//! picks the base parameters and is applied before every other key
//! wherever it appears. Unknown keys are errors.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::pipeline::{PipelineConfig, SplitRule};
use crate::weblog::SplitSpec;

/// Every key accepted by [`apply`], in rendering order.
pub const KEYS: &[&str] = &[
    "preset",
    "seed",
    "grid_width",
    "grid_height",
    "n_ants",
    "radius",
    "k1",
    "k2",
    "exponent",
    "deposit",
    "evaporation",
    "sensitivity",
    "saturation",
    "alpha",
    "ant_steps",
    "snapshot_steps",
    "link_radius",
    "population",
    "tournaments",
    "mutation_frequency",
    "crossover_frequency",
    "demes",
    "max_program_size",
    "target_subset_size",
    "migration_interval",
    "migration_rate",
    "checkpoint_interval",
    "init_max_length",
    "calc_registers",
    "horizon",
    "train_fraction",
    "train_range",
    "test_range",
    "ablation",
    "exec",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::validation(format!("`{key}`: cannot parse `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::validation(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn range(key: &str, v: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let (a, b) = v
        .split_once("..=")
        .or_else(|| v.split_once(".."))
        .ok_or_else(|| Error::validation(format!("`{key}`: expected `a..=b`, got `{v}`")))?;
    Ok(num::<u64>(key, a.trim())?..=num::<u64>(key, b.trim())?)
}

pub fn parse_exec(v: &str) -> Result<Exec> {
    match v {
        "parallel" => Ok(Exec::Parallel),
        "sequential" => Ok(Exec::Sequential),
        _ => Err(Error::validation(format!("exec must be parallel or sequential, got `{v}`"))),
    }
}

/// Sets one key. `preset` replaces the whole configuration.
pub fn apply(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    let c = &mut cfg.colony;
    let e = &mut cfg.evolution;
    match key {
        "preset" => {
            *cfg = match v {
                "daily" => PipelineConfig::daily(),
                "hourly" => PipelineConfig::hourly(),
                _ => return Err(Error::validation(format!("unknown preset `{v}`"))),
            }
        }
        "seed" => cfg.seed = num(key, v)?,
        "grid_width" => c.width = num(key, v)?,
        "grid_height" => c.height = num(key, v)?,
        "n_ants" => c.n_ants = num(key, v)?,
        "radius" => c.radius = num(key, v)?,
        "k1" => c.thresholds.k1 = num(key, v)?,
        "k2" => c.thresholds.k2 = num(key, v)?,
        "exponent" => c.thresholds.exponent = num(key, v)?,
        "deposit" => c.pheromone.deposit = num(key, v)?,
        "evaporation" => c.pheromone.evaporation = num(key, v)?,
        "sensitivity" => c.pheromone.sensitivity = num(key, v)?,
        "saturation" => c.pheromone.saturation = num(key, v)?,
        "alpha" => c.alpha = num(key, v)?,
        "ant_steps" => c.max_steps = num(key, v)?,
        "snapshot_steps" => {
            c.snapshot_steps =
                v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect::<Result<_>>()?
        }
        "link_radius" => cfg.link_radius = num(key, v)?,
        "population" => e.population = num(key, v)?,
        "tournaments" => e.max_tournaments = num(key, v)?,
        "mutation_frequency" => e.mutation_frequency = num(key, v)?,
        "crossover_frequency" => e.crossover_frequency = num(key, v)?,
        "demes" => e.n_demes = num(key, v)?,
        "max_program_size" => e.max_program_size = num(key, v)?,
        "target_subset_size" => e.target_subset_size = num(key, v)?,
        "migration_interval" => e.migration_interval = num(key, v)?,
        "migration_rate" => e.migration_rate = num(key, v)?,
        "checkpoint_interval" => e.checkpoint_interval = num(key, v)?,
        "init_max_length" => e.init_max_length = num(key, v)?,
        "exec" => e.exec = parse_exec(v)?,
        "calc_registers" => cfg.calc_registers = num(key, v)?,
        "horizon" => cfg.horizon = num(key, v)?,
        "ablation" => cfg.ablation = flag(key, v)?,
        "train_fraction" => cfg.split = SplitRule::Fraction(num(key, v)?),
        "train_range" | "test_range" => {
            let r = range(key, v)?;
            let mut spec = match &cfg.split {
                SplitRule::Ranges(s) => s.clone(),
                SplitRule::Fraction(_) => SplitSpec::new(0..=0, 0..=0),
            };
            if key == "train_range" {
                spec.train = r;
            } else {
                spec.test = r;
            }
            cfg.split = SplitRule::Ranges(spec);
        }
        _ => return Err(Error::validation(format!("unknown config key `{key}`"))),
    }
    Ok(())
}

/// Parses a config file on top of `base`.
pub fn parse(text: &str, base: PipelineConfig) -> Result<PipelineConfig> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
        pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    let mut cfg = base;
    let (presets, rest): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|(_, k, _)| k == "preset");
    for (n, k, v) in presets.iter().chain(&rest) {
        apply(&mut cfg, k, v).map_err(|e| match e {
            Error::Validation(m) => Error::parse(*n, m),
            other => other,
        })?;
    }
    Ok(cfg)
}

/// Renders every key; `parse(&render(c), _)` gives back `c`.
pub fn render(cfg: &PipelineConfig) -> String {
    let c = &cfg.colony;
    let e = &cfg.evolution;
    let mut s = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("seed", &cfg.seed);
    kv("grid_width", &c.width);
    kv("grid_height", &c.height);
    kv("n_ants", &c.n_ants);
    kv("radius", &c.radius);
    kv("k1", &c.thresholds.k1);
    kv("k2", &c.thresholds.k2);
    kv("exponent", &c.thresholds.exponent);
    kv("deposit", &c.pheromone.deposit);
    kv("evaporation", &c.pheromone.evaporation);
    kv("sensitivity", &c.pheromone.sensitivity);
    kv("saturation", &c.pheromone.saturation);
    kv("alpha", &c.alpha);
    kv("ant_steps", &c.max_steps);
    let steps: Vec<String> = c.snapshot_steps.iter().map(u64::to_string).collect();
    kv("snapshot_steps", &steps.join(","));
    kv("link_radius", &cfg.link_radius);
    kv("population", &e.population);
    kv("tournaments", &e.max_tournaments);
    kv("mutation_frequency", &e.mutation_frequency);
    kv("crossover_frequency", &e.crossover_frequency);
    kv("demes", &e.n_demes);
    kv("max_program_size", &e.max_program_size);
    kv("target_subset_size", &e.target_subset_size);
    kv("migration_interval", &e.migration_interval);
    kv("migration_rate", &e.migration_rate);
    kv("checkpoint_interval", &e.checkpoint_interval);
    kv("init_max_length", &e.init_max_length);
    kv("calc_registers", &cfg.calc_registers);
    kv("horizon", &cfg.horizon);
    match &cfg.split {
        SplitRule::Fraction(f) => kv("train_fraction", f),
        SplitRule::Ranges(r) => {
            kv("train_range", &format!("{}..={}", r.train.start(), r.train.end()));
            kv("test_range", &format!("{}..={}", r.test.start(), r.test.end()));
        }
    }
    kv("ablation", &cfg.ablation);
    let exec = match e.exec {
        Exec::Parallel => "parallel",
        Exec::Sequential => "sequential",
    };
    kv("exec", &exec);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        let mut cfg = PipelineConfig::hourly();
        cfg.seed = 99;
        cfg.colony.alpha = 0.123456789;
        cfg.colony.snapshot_steps = vec![0, 5, 7];
        cfg.evolution.exec = Exec::Sequential;
        cfg.split = SplitRule::Ranges(SplitSpec::new(1..=40, 41..=60));
        cfg.ablation = true;
        let text = render(&cfg);
        assert_eq!(parse(&text, PipelineConfig::daily()).unwrap(), cfg);
        let plain = PipelineConfig::daily();
        assert_eq!(parse(&render(&plain), PipelineConfig::hourly()).unwrap(), plain);
    }

    #[test]
    fn preset_applies_first() {
        let cfg = parse("n_ants = 3\npreset = hourly\n", PipelineConfig::daily()).unwrap();
        assert_eq!(cfg.colony.width, 45);
        assert_eq!(cfg.colony.n_ants, 3);
    }

    #[test]
    fn every_key_is_known() {
        let mut cfg = PipelineConfig::daily();
        for k in KEYS {
            // The value may be rejected, the key may not.
            if let Err(e) = apply(&mut cfg, k, "1") {
                assert!(!e.to_string().contains("unknown config key"), "{k}");
            }
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("# c\nseed = 1\nbogus = 2\n", PipelineConfig::daily()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        assert!(parse("ants 4\n", PipelineConfig::daily()).is_err());
        assert!(parse("n_ants = many\n", PipelineConfig::daily()).is_err());
        assert!(parse("ablation = maybe\n", PipelineConfig::daily()).is_err());
    }
}
