//! Toroidal 2D substrate: one optional item per cell plus a pheromone field.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A canonical (already wrapped) cell coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCoord {
    pub x: usize,
    pub y: usize,
}

impl GridCoord {
    pub fn new(x: usize, y: usize) -> Self {
        GridCoord { x, y }
    }
}

/// Item slots hold dense item handles (positions in the caller's item store).
#[derive(Debug, Clone, PartialEq)]
pub struct ToroidalGrid {
    width: usize,
    height: usize,
    slots: Vec<Option<usize>>,
    pheromone: Vec<f64>,
}

impl ToroidalGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!("grid dimensions must be positive, got {width}x{height}")));
        }
        let cells = width.checked_mul(height).ok_or_else(|| Error::validation("grid too large"))?;
        Ok(ToroidalGrid { width, height, slots: vec![None; cells], pheromone: vec![0.0; cells] })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    fn offset(&self, c: GridCoord) -> usize {
        debug_assert!(c.x < self.width && c.y < self.height);
        c.y * self.width + c.x
    }

    #[inline]
    fn coord_of(&self, offset: usize) -> GridCoord {
        GridCoord::new(offset % self.width, offset / self.width)
    }

    /// Reduces any integer pair onto the torus.
    #[inline]
    pub fn wrap(&self, x: i64, y: i64) -> GridCoord {
        GridCoord::new(x.rem_euclid(self.width as i64) as usize, y.rem_euclid(self.height as i64) as usize)
    }

    #[inline]
    pub fn shifted(&self, c: GridCoord, dx: i64, dy: i64) -> GridCoord {
        self.wrap(c.x as i64 + dx, c.y as i64 + dy)
    }

    /// Moore neighborhood of radius `r` around `c`, excluding `c`, with
    /// duplicates removed when the grid is narrower than `2r + 1`. Cells are
    /// listed row by row starting from offset `(-r, -r)`.
    pub fn neighborhood(&self, c: GridCoord, r: usize) -> Vec<GridCoord> {
        let r = r as i64;
        let side = (2 * r + 1) as usize;
        let mut out = Vec::with_capacity(side * side - 1);
        let dedup = side > self.width || side > self.height;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let q = self.shifted(c, dx, dy);
                if dedup && (q == c || out.contains(&q)) {
                    continue;
                }
                out.push(q);
            }
        }
        out
    }

    /// Toroidal Chebyshev distance.
    pub fn chebyshev(&self, a: GridCoord, b: GridCoord) -> usize {
        let dx = a.x.abs_diff(b.x);
        let dy = a.y.abs_diff(b.y);
        dx.min(self.width - dx).max(dy.min(self.height - dy))
    }

    pub fn item_at(&self, c: GridCoord) -> Option<usize> {
        self.slots[self.offset(c)]
    }

    pub fn is_empty_at(&self, c: GridCoord) -> bool {
        self.item_at(c).is_none()
    }

    pub fn place(&mut self, c: GridCoord, item: usize) -> Result<()> {
        let off = self.offset(c);
        match self.slots[off] {
            Some(existing) => Err(Error::state(format!("cell ({}, {}) already holds item {existing}", c.x, c.y))),
            None => {
                self.slots[off] = Some(item);
                Ok(())
            }
        }
    }

    pub fn take(&mut self, c: GridCoord) -> Option<usize> {
        let off = self.offset(c);
        self.slots[off].take()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (GridCoord, usize)> + '_ {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.map(|item| (self.coord_of(i), item)))
    }

    pub fn item_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn pheromone(&self, c: GridCoord) -> f64 {
        self.pheromone[self.offset(c)]
    }

    pub fn pheromone_field(&self) -> &[f64] {
        &self.pheromone
    }

    pub fn set_pheromone(&mut self, c: GridCoord, value: f64) {
        let off = self.offset(c);
        self.pheromone[off] = value.max(0.0);
    }

    pub fn deposit(&mut self, c: GridCoord, amount: f64) {
        let off = self.offset(c);
        self.pheromone[off] += amount.max(0.0);
    }

    /// Multiplies every cell by `1 - rate`.
    pub fn evaporate(&mut self, rate: f64) {
        let keep = (1.0 - rate).clamp(0.0, 1.0);
        for p in &mut self.pheromone {
            *p *= keep;
        }
    }

    /// Places each item in a distinct empty cell drawn uniformly at random.
    pub fn scatter_items(&mut self, items: &[usize], rng: &mut Rng) -> Result<()> {
        let empty: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i].is_none()).collect();
        if items.len() > empty.len() {
            return Err(Error::Capacity { items: items.len(), cells: empty.len() });
        }
        if items.is_empty() {
            return Ok(());
        }
        let chosen = index::sample(rng, empty.len(), items.len());
        for (item, slot) in items.iter().zip(chosen.iter()) {
            self.slots[empty[slot]] = Some(*item);
        }
        Ok(())
    }

    /// Closest empty cell to `c` by Chebyshev rings, scanning each ring row by
    /// row; `c` itself is checked first.
    pub fn nearest_empty(&self, c: GridCoord) -> Option<GridCoord> {
        if self.is_empty_at(c) {
            return Some(c);
        }
        let max_ring = self.width.max(self.height) as i64 / 2 + 1;
        for ring in 1..=max_ring {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let q = self.shifted(c, dx, dy);
                    if self.is_empty_at(q) {
                        return Some(q);
                    }
                }
            }
        }
        None
    }
}
