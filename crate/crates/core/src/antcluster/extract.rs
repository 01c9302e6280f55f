use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::DataItem;
use crate::error::{Error, Result};
use crate::grid::ToroidalGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub id: usize,
    pub size: usize,
    /// Mean feature vector; empty when features are unknown.
    pub centroid: Vec<f64>,
}

/// Item id to dense cluster id, plus per-cluster summaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterAssignment {
    labels: BTreeMap<u64, usize>,
    clusters: Vec<ClusterSummary>,
}

impl ClusterAssignment {
    /// Builds an assignment from arbitrary labels. Labels are renumbered
    /// densely from 0 in ascending order. Centroids are filled in for the
    /// items found in `items`.
    pub fn from_labels(pairs: impl IntoIterator<Item = (u64, usize)>, items: Option<&[DataItem]>) -> Self {
        let raw: BTreeMap<u64, usize> = pairs.into_iter().collect();
        let distinct: BTreeSet<usize> = raw.values().copied().collect();
        let dense: HashMap<usize, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let labels: BTreeMap<u64, usize> = raw.into_iter().map(|(id, l)| (id, dense[&l])).collect();

        let mut clusters: Vec<ClusterSummary> =
            (0..dense.len()).map(|id| ClusterSummary { id, size: 0, centroid: Vec::new() }).collect();
        for c in labels.values() {
            clusters[*c].size += 1;
        }
        if let Some(items) = items {
            let dim = items.first().map_or(0, |i| i.features.len());
            let mut counts = vec![0usize; clusters.len()];
            for c in &mut clusters {
                c.centroid = vec![0.0; dim];
            }
            for item in items {
                if let Some(&c) = labels.get(&item.id) {
                    counts[c] += 1;
                    for (acc, v) in clusters[c].centroid.iter_mut().zip(&item.features) {
                        *acc += v;
                    }
                }
            }
            for (c, n) in clusters.iter_mut().zip(counts) {
                if n > 0 {
                    c.centroid.iter_mut().for_each(|v| *v /= n as f64);
                }
            }
        }
        ClusterAssignment { labels, clusters }
    }

    pub fn cluster_of(&self, item_id: u64) -> Option<usize> {
        self.labels.get(&item_id).copied()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn num_items(&self) -> usize {
        self.labels.len()
    }

    pub fn clusters(&self) -> &[ClusterSummary] {
        &self.clusters
    }

    /// (item id, cluster id) pairs in item-id order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.labels.iter().map(|(&id, &c)| (id, c))
    }
}

/// Groups of item handles linked by toroidal Chebyshev distance
/// `<= link_radius`. Components are listed in order of their first cell
/// (row-major) and members in discovery order.
pub fn connected_components(g: &ToroidalGrid, link_radius: usize) -> Vec<Vec<usize>> {
    let mut visited = vec![false; g.width() * g.height()];
    let idx = |c: crate::grid::GridCoord| c.y * g.width() + c.x;
    let mut components = Vec::new();
    for (start, _) in g.occupied() {
        if visited[idx(start)] {
            continue;
        }
        visited[idx(start)] = true;
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            members.push(g.item_at(c).expect("queued cells are occupied"));
            for q in g.neighborhood(c, link_radius) {
                if !visited[idx(q)] && g.item_at(q).is_some() {
                    visited[idx(q)] = true;
                    queue.push_back(q);
                }
            }
        }
        components.push(members);
    }
    components
}

/// Reads clusters off the grid as connected components. Cluster ids are
/// ordered by centroid (lexicographic), ties broken by smallest item id, so
/// neighboring ids describe similar clusters.
pub fn extract_clusters(g: &ToroidalGrid, items: &[DataItem], link_radius: usize) -> Result<ClusterAssignment> {
    if link_radius == 0 {
        return Err(Error::validation("link_radius must be >= 1"));
    }
    let placed = g.item_count();
    if placed != items.len() {
        return Err(Error::state(format!(
            "{} of {} items are not on the grid",
            items.len().saturating_sub(placed),
            items.len()
        )));
    }
    let mut groups: Vec<(Vec<f64>, u64, Vec<usize>)> = connected_components(g, link_radius)
        .into_iter()
        .map(|members| {
            let dim = items[members[0]].features.len();
            let mut centroid = vec![0.0; dim];
            for &h in &members {
                for (acc, v) in centroid.iter_mut().zip(&items[h].features) {
                    *acc += v;
                }
            }
            centroid.iter_mut().for_each(|v| *v /= members.len() as f64);
            let min_id = members.iter().map(|&h| items[h].id).min().unwrap_or(0);
            (centroid, min_id, members)
        })
        .collect();
    groups.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let pairs =
        groups.iter().enumerate().flat_map(|(cid, (_, _, members))| members.iter().map(move |&h| (items[h].id, cid)));
    Ok(ClusterAssignment::from_labels(pairs, Some(items)))
}

/// Fraction of items whose cluster's majority truth label equals their own.
pub fn purity(a: &ClusterAssignment, truth: &BTreeMap<u64, u32>) -> Result<f64> {
    if a.num_items() == 0 {
        return Ok(1.0);
    }
    let mut counts: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); a.num_clusters()];
    for (id, c) in a.iter() {
        let label = truth.get(&id).ok_or_else(|| Error::validation(format!("no truth label for item {id}")))?;
        *counts[c].entry(*label).or_default() += 1;
    }
    let majority: usize = counts.iter().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / a.num_items() as f64)
}

/// Rand index between two assignments of the same item set.
pub fn rand_index(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<f64> {
    if a.num_items() != b.num_items() {
        return Err(Error::validation("assignments cover different item sets"));
    }
    let mut pairs = Vec::with_capacity(a.num_items());
    for (id, ca) in a.iter() {
        let cb =
            b.cluster_of(id).ok_or_else(|| Error::validation(format!("item {id} missing from second assignment")))?;
        pairs.push((ca, cb));
    }
    let n = pairs.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let same_a = pairs[i].0 == pairs[j].0;
            let same_b = pairs[i].1 == pairs[j].1;
            if same_a == same_b {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridCoord;

    fn place(g: &mut ToroidalGrid, cells: &[(usize, usize)]) -> Vec<DataItem> {
        cells
            .iter()
            .enumerate()
            .map(|(h, &(x, y))| {
                g.place(GridCoord::new(x, y), h).unwrap();
                DataItem::new(h as u64 + 1, vec![h as f64 / 10.0])
            })
            .collect()
    }

    #[test]
    fn adjacent_items_share_a_cluster() {
        let mut g = ToroidalGrid::new(25, 25).unwrap();
        let items = place(&mut g, &[(3, 3), (4, 4)]);
        let a = extract_clusters(&g, &items, 1).unwrap();
        assert_eq!(a.num_clusters(), 1);
        assert_eq!(a.clusters()[0].size, 2);
    }

    #[test]
    fn distant_items_are_singletons() {
        let mut g = ToroidalGrid::new(25, 25).unwrap();
        let items = place(&mut g, &[(3, 3), (6, 3)]);
        let a = extract_clusters(&g, &items, 1).unwrap();
        assert_eq!(a.num_clusters(), 2);
        assert_eq!(a.cluster_of(1), Some(0));
        assert_eq!(a.cluster_of(2), Some(1));
    }

    #[test]
    fn wrap_links_opposite_corners() {
        let mut g = ToroidalGrid::new(25, 25).unwrap();
        let items = place(&mut g, &[(0, 0), (24, 24)]);
        assert_eq!(g.chebyshev(GridCoord::new(0, 0), GridCoord::new(24, 24)), 1);
        let a = extract_clusters(&g, &items, 1).unwrap();
        assert_eq!(a.num_clusters(), 1);
    }

    #[test]
    fn unplaced_item_is_a_state_error() {
        let mut g = ToroidalGrid::new(5, 5).unwrap();
        let mut items = place(&mut g, &[(0, 0)]);
        items.push(DataItem::new(99, vec![0.0]));
        assert!(matches!(extract_clusters(&g, &items, 1), Err(Error::State(_))));
    }

    #[test]
    fn centroids_and_ordering() {
        let mut g = ToroidalGrid::new(10, 10).unwrap();
        let mut items = place(&mut g, &[(0, 0), (1, 0), (5, 5)]);
        items[0].features = vec![0.9];
        items[1].features = vec![0.7];
        items[2].features = vec![0.1];
        let a = extract_clusters(&g, &items, 1).unwrap();
        assert_eq!(a.cluster_of(3), Some(0));
        assert_eq!(a.cluster_of(1), Some(1));
        assert!((a.clusters()[1].centroid[0] - 0.8).abs() < 1e-12);
    }

    fn truth(pairs: &[(u64, u32)]) -> BTreeMap<u64, u32> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn purity_examples() {
        let a = ClusterAssignment::from_labels([(1, 0), (2, 0), (3, 1)], None);
        assert_eq!(purity(&a, &truth(&[(1, 5), (2, 5), (3, 6)])).unwrap(), 1.0);

        let mixed = ClusterAssignment::from_labels((1..=8).map(|i| (i, usize::from(i > 4))), None);
        let t = truth(&[(1, 0), (2, 0), (3, 0), (4, 1), (5, 2), (6, 2), (7, 2), (8, 2)]);
        assert_eq!(purity(&mixed, &t).unwrap(), 0.875);

        let one = ClusterAssignment::from_labels((1..=4).map(|i| (i, 0)), None);
        let t = truth(&[(1, 0), (2, 0), (3, 1), (4, 1)]);
        assert_eq!(purity(&one, &t).unwrap(), 0.5);

        assert!(purity(&one, &truth(&[(1, 0)])).is_err());
    }

    #[test]
    fn rand_index_bounds() {
        let a = ClusterAssignment::from_labels([(1, 0), (2, 0), (3, 1)], None);
        assert_eq!(rand_index(&a, &a).unwrap(), 1.0);
        let b = ClusterAssignment::from_labels([(1, 0), (2, 1), (3, 2)], None);
        // pairs: (1,2) disagree, (1,3) agree, (2,3) agree
        assert!((rand_index(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }
}
