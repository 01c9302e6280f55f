use rand::Rng as _;

use super::extract::connected_components;
use super::response::{drop_probability, pick_probability, PheromoneParams, ThresholdParams};
use super::{local_stimuli, validate_items, DataItem};
use crate::error::{Error, Result};
use crate::grid::{GridCoord, ToroidalGrid};
use crate::rng::{rng_from_seed, Rng};

/// Movement offsets, in the order used by [`transition_distribution`].
pub const MOORE_OFFSETS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ant {
    pub position: GridCoord,
    /// Handle of the carried item. A carried item is off the grid.
    pub carrying: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyConfig {
    pub width: usize,
    pub height: usize,
    pub n_ants: usize,
    /// Radius of the neighborhood used for stimuli.
    pub radius: usize,
    pub thresholds: ThresholdParams,
    pub pheromone: PheromoneParams,
    /// Dissimilarity at which a neighbor stops counting as similar.
    pub alpha: f64,
    pub max_steps: u64,
    pub snapshot_steps: Vec<u64>,
    pub seed: u64,
}

impl Default for ColonyConfig {
    fn default() -> Self {
        ColonyConfig::daily()
    }
}

impl ColonyConfig {
    /// 25x25 torus, 14 ants.
    pub fn daily() -> Self {
        ColonyConfig {
            width: 25,
            height: 25,
            n_ants: 14,
            radius: 1,
            thresholds: ThresholdParams::default(),
            pheromone: PheromoneParams::default(),
            alpha: 0.5,
            max_steps: 1_000_000,
            snapshot_steps: vec![1, 100, 500, 10_000],
            seed: 0,
        }
    }

    /// 45x45 torus, 48 ants.
    pub fn hourly() -> Self {
        ColonyConfig { width: 45, height: 45, n_ants: 48, ..ColonyConfig::daily() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::validation("grid dimensions must be positive"));
        }
        if self.n_ants == 0 {
            return Err(Error::validation("n_ants must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::validation("max_steps must be >= 1"));
        }
        if self.radius == 0 {
            return Err(Error::validation("radius must be >= 1"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::validation("alpha must be > 0"));
        }
        if let Some(s) = self.snapshot_steps.iter().find(|&&s| s > self.max_steps) {
            return Err(Error::validation(format!("snapshot step {s} exceeds max_steps {}", self.max_steps)));
        }
        self.thresholds.validate()?;
        self.pheromone.validate()
    }
}

/// Pheromone-driven move probabilities over [`MOORE_OFFSETS`] from `pos`.
pub fn transition_distribution(g: &ToroidalGrid, pos: GridCoord, p: &PheromoneParams) -> [f64; 8] {
    let mut w = [0.0; 8];
    for (slot, (dx, dy)) in w.iter_mut().zip(MOORE_OFFSETS) {
        *slot = p.weight(g.pheromone(g.shifted(pos, dx, dy)));
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Evaporates the whole field, then each ant deposits at its cell (twice
/// the amount when laden).
pub fn evaporate_and_deposit(g: &mut ToroidalGrid, ants: &[Ant], p: &PheromoneParams) {
    g.evaporate(p.evaporation);
    for ant in ants {
        let amount = if ant.carrying.is_some() { 2.0 * p.deposit } else { p.deposit };
        g.deposit(ant.position, amount);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyState {
    pub config: ColonyConfig,
    pub grid: ToroidalGrid,
    pub items: Vec<DataItem>,
    pub ants: Vec<Ant>,
    pub step: u64,
}

impl ColonyState {
    /// Scatters `items` and the ants uniformly at random.
    pub fn new(config: ColonyConfig, items: Vec<DataItem>, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        validate_items(&items)?;
        let mut grid = ToroidalGrid::new(config.width, config.height)?;
        let handles: Vec<usize> = (0..items.len()).collect();
        grid.scatter_items(&handles, rng)?;
        let ants = (0..config.n_ants)
            .map(|_| Ant {
                position: GridCoord::new(rng.gen_range(0..config.width), rng.gen_range(0..config.height)),
                carrying: None,
            })
            .collect();
        Ok(ColonyState { config, grid, items, ants, step: 0 })
    }

    /// Advances every ant once in roster order, then updates the pheromone field.
    pub fn step(&mut self, rng: &mut Rng) {
        let ColonyState { config, grid, items, ants, .. } = self;
        for ant in ants.iter_mut() {
            let probs = transition_distribution(grid, ant.position, &config.pheromone);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut choice = MOORE_OFFSETS.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    choice = i;
                    break;
                }
            }
            let (dx, dy) = MOORE_OFFSETS[choice];
            ant.position = grid.shifted(ant.position, dx, dy);

            match (ant.carrying, grid.item_at(ant.position)) {
                (None, Some(handle)) => {
                    let (density, similarity) =
                        local_stimuli(grid, items, ant.position, &items[handle], config.radius, config.alpha);
                    if rng.gen::<f64>() < pick_probability(density, similarity, &config.thresholds) {
                        grid.take(ant.position);
                        ant.carrying = Some(handle);
                    }
                }
                (Some(handle), None) => {
                    let (density, similarity) =
                        local_stimuli(grid, items, ant.position, &items[handle], config.radius, config.alpha);
                    if rng.gen::<f64>() < drop_probability(density, similarity, &config.thresholds) {
                        grid.place(ant.position, handle).expect("cell checked empty");
                        ant.carrying = None;
                    }
                }
                _ => {}
            }
        }
        evaporate_and_deposit(grid, ants, &config.pheromone);
        self.step += 1;
    }

    /// Drops every carried item on the nearest empty cell to its ant.
    pub fn force_drop(&mut self) -> Result<()> {
        for ant in &mut self.ants {
            if let Some(handle) = ant.carrying {
                let cell = self
                    .grid
                    .nearest_empty(ant.position)
                    .ok_or_else(|| Error::state("no empty cell left for a carried item"))?;
                self.grid.place(cell, handle)?;
                ant.carrying = None;
            }
        }
        Ok(())
    }

    pub fn carried_count(&self) -> usize {
        self.ants.iter().filter(|a| a.carrying.is_some()).count()
    }

    /// Checks that every item is either on the grid or carried, exactly once.
    pub fn check_conservation(&self) -> Result<()> {
        let mut seen = vec![false; self.items.len()];
        let held = self.grid.occupied().map(|(_, h)| h).chain(self.ants.iter().filter_map(|a| a.carrying));
        for h in held {
            match seen.get_mut(h) {
                Some(flag) if !*flag => *flag = true,
                Some(_) => return Err(Error::state(format!("item handle {h} held twice"))),
                None => return Err(Error::state(format!("unknown item handle {h}"))),
            }
        }
        if let Some(lost) = seen.iter().position(|f| !f) {
            return Err(Error::state(format!("item handle {lost} lost")));
        }
        Ok(())
    }

    /// Spatial picture of the placed items. Cells are labeled with the
    /// ground-truth label when every item has one, otherwise with the
    /// connected component (radius 1) they belong to.
    pub fn snapshot(&self) -> Snapshot {
        let labeled = !self.items.is_empty() && self.items.iter().all(|i| i.truth_label.is_some());
        let mut component_of = vec![0i64; self.items.len()];
        if !labeled {
            for (cid, members) in connected_components(&self.grid, 1).iter().enumerate() {
                for &h in members {
                    component_of[h] = cid as i64;
                }
            }
        }
        let cells = self
            .grid
            .occupied()
            .map(|(c, h)| SnapshotCell {
                x: c.x,
                y: c.y,
                item_id: self.items[h].id,
                label: match self.items[h].truth_label {
                    Some(l) if labeled => i64::from(l),
                    _ => component_of[h],
                },
            })
            .collect();
        Snapshot { step: self.step, width: self.grid.width(), height: self.grid.height(), cells }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotCell {
    pub x: usize,
    pub y: usize,
    pub item_id: u64,
    pub label: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub step: u64,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<SnapshotCell>,
}

#[derive(Debug, Clone)]
pub struct ColonyRun {
    pub state: ColonyState,
    pub snapshots: Vec<Snapshot>,
}

/// Scatters the items, runs `max_steps` colony steps and force-drops any
/// carried items. Snapshots are taken after each listed step (step 0 is the
/// initial scatter; the final step is captured after the force-drop).
pub fn run(cfg: &ColonyConfig, items: Vec<DataItem>) -> Result<ColonyRun> {
    let mut rng = rng_from_seed(cfg.seed);
    let mut state = ColonyState::new(cfg.clone(), items, &mut rng)?;
    let mut wanted = cfg.snapshot_steps.clone();
    wanted.sort_unstable();
    wanted.dedup();
    let mut pending = wanted.into_iter().peekable();
    let mut snapshots = Vec::new();

    if pending.peek() == Some(&0) {
        snapshots.push(state.snapshot());
        pending.next();
    }
    while state.step < cfg.max_steps {
        state.step(&mut rng);
        if state.step == cfg.max_steps {
            state.force_drop()?;
        }
        if pending.peek() == Some(&state.step) {
            snapshots.push(state.snapshot());
            pending.next();
        }
    }
    Ok(ColonyRun { state, snapshots })
}
