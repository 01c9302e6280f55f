//! Stigmergic ant clustering.
//!
//! Ants wander a toroidal grid, steered by a pheromone field they deposit
//! themselves, and pick up or drop data items according to two independent
//! response-threshold functions: one of local item density, one of local
//! similarity to the item in question. Clusters are read off the final
//! spatial arrangement as connected components.

mod colony;
mod extract;
mod response;
mod snapshot;

pub use colony::{
    evaporate_and_deposit, run, transition_distribution, Ant, ColonyConfig, ColonyRun, ColonyState, Snapshot,
    SnapshotCell, MOORE_OFFSETS,
};
pub use extract::{connected_components, extract_clusters, purity, rand_index, ClusterAssignment, ClusterSummary};
pub use response::{drop_probability, pick_probability, PheromoneParams, ThresholdParams};
pub use snapshot::{read_snapshot_csv, render_pgm, write_snapshot_csv};

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::{GridCoord, ToroidalGrid};

/// A data point to be sorted by the colony.
#[derive(Debug, Clone, PartialEq)]
pub struct DataItem {
    pub id: u64,
    /// Feature values, each in [0, 1].
    pub features: Vec<f64>,
    pub truth_label: Option<u32>,
}

impl DataItem {
    pub fn new(id: u64, features: Vec<f64>) -> Self {
        DataItem { id, features, truth_label: None }
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.truth_label = Some(label);
        self
    }
}

/// Checks unit-range features, constant dimension and unique ids.
pub fn validate_items(items: &[DataItem]) -> Result<()> {
    let Some(first) = items.first() else {
        return Ok(());
    };
    let dim = first.features.len();
    let mut ids = HashSet::with_capacity(items.len());
    for item in items {
        if item.features.len() != dim {
            return Err(Error::validation(format!(
                "item {} has {} features, expected {dim}",
                item.id,
                item.features.len()
            )));
        }
        if item.features.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation(format!("item {} has features outside [0, 1]", item.id)));
        }
        if !ids.insert(item.id) {
            return Err(Error::validation(format!("duplicate item id {}", item.id)));
        }
    }
    Ok(())
}

/// Euclidean distance scaled by `1/sqrt(d)` so unit-cube points stay in [0, 1].
pub fn dissimilarity(a: &DataItem, b: &DataItem) -> Result<f64> {
    if a.features.len() != b.features.len() {
        return Err(Error::validation(format!(
            "feature dimension mismatch: {} vs {}",
            a.features.len(),
            b.features.len()
        )));
    }
    Ok(scaled_distance(&a.features, &b.features))
}

#[inline]
fn scaled_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sq / a.len() as f64).sqrt()
}

/// Local (density, similarity) stimuli seen by an ant at `pos` for `subject`.
///
/// Density is the occupied fraction of the radius-`r` neighborhood.
/// Similarity is the mean of `max(0, 1 - dissimilarity / alpha)` over the
/// occupied neighbors. Both are 0 for an empty neighborhood.
pub fn local_stimuli(
    g: &ToroidalGrid,
    items: &[DataItem],
    pos: GridCoord,
    subject: &DataItem,
    r: usize,
    alpha: f64,
) -> (f64, f64) {
    let cells = g.neighborhood(pos, r);
    let mut occupied = 0usize;
    let mut similarity = 0.0;
    for c in &cells {
        if let Some(handle) = g.item_at(*c) {
            occupied += 1;
            let d = scaled_distance(&subject.features, &items[handle].features);
            similarity += (1.0 - d / alpha).max(0.0);
        }
    }
    if occupied == 0 {
        return (0.0, 0.0);
    }
    (occupied as f64 / cells.len() as f64, similarity / occupied as f64)
}
