//! Grid-based blocking regions over the sampling window.
//!
//! The window is partitioned into `K^d` equal cubic cells. Two cells are
//! neighbors when the greatest possible distance between a point of one and a
//! point of the other is at most 1; placing a point in a cell therefore forces
//! an edge to every point whose cell neighbors it, no matter where inside the
//! cells the points sit. Each event kind blocks exactly the cells where an
//! insertion would provably leave the event, which inner-approximates the
//! maximal blocking region.
//!
//! Cell state is generation-tagged so a trial reset is O(1) instead of
//! clearing `K^d` entries, and the free-cell sampler is a dense index array
//! with swap-removal, valid because blocking is monotone within a trial.

use crate::error::{Error, Result};
use crate::event::{EventKind, EventSpec};
use crate::graph::GraphState;
use crate::rng::RngStream;
use crate::window::Window;

/// Largest supported cell count per grid.
const MAX_CELLS: usize = 1 << 26;

/// Whether the cells at integer offset `delta` are within unit reach of each
/// other: `h * sqrt(sum_j (|delta_j| + 1)^2) <= 1`, the greatest possible
/// distance between points of two axis-aligned cubes of edge `h`. With
/// `delta = 0` this is the cell diagonal `h * sqrt(d)`, so a cell is its own
/// neighbor at every usable resolution.
#[inline]
pub fn cells_are_neighbors(delta: &[i64], h: f64) -> bool {
    let s: i64 = delta.iter().map(|&d| (d.abs() + 1) * (d.abs() + 1)).sum();
    h * (s as f64).sqrt() <= 1.0
}

/// Grid cell containing `p`: `min(floor(p_j / h), k - 1)` per axis, clamping
/// the closed upper window boundary into the last cell.
pub fn cell_of(p: &[f64], h: f64, k: usize) -> Vec<i64> {
    p.iter()
        .map(|&x| ((x / h).floor() as i64).clamp(0, k as i64 - 1))
        .collect()
}

/// Inner-approximating blocker for one event kind on a `K^d` grid.
#[derive(Debug, Clone)]
pub struct GridBlocker {
    dim: usize,
    k_per_axis: usize,
    h: f64,
    lambda: f64,
    event: EventSpec,
    /// Integer offsets within unit cell reach, flat with stride `dim`.
    offsets: Vec<i64>,
    n_offsets: usize,
    axis_strides: Vec<usize>,
    generation: u32,
    order: Vec<u32>,
    order_gen: Vec<u32>,
    blocked_gen: Vec<u32>,
    free_list: Vec<u32>,
    free_pos: Vec<u32>,
    free_count: usize,
    /// Cells grouped by their order at push time; entries can be stale, the
    /// drain re-checks the live order (edge-count threshold re-evaluation).
    buckets: Vec<Vec<u32>>,
    /// Per point: whether its neighborhood was swept by the degree rule.
    degree_swept: Vec<bool>,
    cliques_processed: usize,
    edges_processed: usize,
    triangles_active: bool,
    /// Grid cell of each inserted point, flat with stride `dim`.
    point_cells: Vec<i64>,
    blocked_volume_trace: Vec<f64>,
    /// Old free-list position of each blocked cell, in blocking order.
    /// Replayed backwards on reset so every trial starts from the same cell
    /// layout; otherwise the sample sequence of a stream would depend on
    /// which trials ran earlier on the same worker.
    undo_log: Vec<u32>,
    scratch: Vec<u32>,
    warning: Option<String>,
}

impl GridBlocker {
    pub fn new(window: &Window, k: usize, event: EventSpec) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "grid must have at least one cell per axis".into(),
            ));
        }
        let dim = window.dim();
        let total = (k as u128).pow(dim as u32);
        if total > MAX_CELLS as u128 {
            return Err(Error::Capacity(format!(
                "grid {k}^{dim} exceeds the supported {MAX_CELLS} cells"
            )));
        }
        let total = total as usize;
        let h = window.side() / k as f64;

        let warning = if h * (dim as f64).sqrt() > 1.0 {
            Some(format!(
                "cell edge {h:.4} exceeds the unit-reach diagonal; no cell can ever be \
                 blocked and sampling degenerates to plain uniform"
            ))
        } else if h > 0.5 {
            Some(format!(
                "cell edge {h:.4} > 0.5 leaves very few neighbor cells; the blocked \
                 region will be a poor inner approximation"
            ))
        } else {
            None
        };

        // Enumerate offsets by odometer so the order is platform-independent.
        let reach = (1.0 / h).ceil() as i64;
        let mut offsets = Vec::new();
        let mut n_offsets = 0usize;
        let mut delta = vec![-reach; dim];
        'outer: loop {
            if cells_are_neighbors(&delta, h) {
                offsets.extend_from_slice(&delta);
                n_offsets += 1;
            }
            let mut j = 0;
            loop {
                if j == dim {
                    break 'outer;
                }
                delta[j] += 1;
                if delta[j] <= reach {
                    break;
                }
                delta[j] = -reach;
                j += 1;
            }
        }

        let mut axis_strides = Vec::with_capacity(dim);
        let mut acc = 1usize;
        for _ in 0..dim {
            axis_strides.push(acc);
            acc *= k;
        }

        Ok(Self {
            dim,
            k_per_axis: k,
            h,
            lambda: window.side(),
            event,
            offsets,
            n_offsets,
            axis_strides,
            generation: 1,
            order: vec![0; total],
            order_gen: vec![0; total],
            blocked_gen: vec![0; total],
            free_list: (0..total as u32).collect(),
            free_pos: (0..total as u32).collect(),
            free_count: total,
            buckets: Vec::new(),
            degree_swept: Vec::new(),
            cliques_processed: 0,
            edges_processed: 0,
            triangles_active: false,
            point_cells: Vec::new(),
            blocked_volume_trace: Vec::new(),
            undo_log: Vec::new(),
            scratch: Vec::new(),
            warning,
        })
    }

    /// Degeneracy note from construction, if any.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Prepares the blocker for a new trial in O(cells blocked last trial),
    /// not O(K^d): cell state is invalidated by bumping the generation tag,
    /// and the free-list swaps are unwound to the canonical layout.
    pub fn reset(&mut self) {
        if self.generation == u32::MAX {
            self.order_gen.fill(0);
            self.blocked_gen.fill(0);
            self.generation = 0;
        }
        self.generation += 1;
        while let Some(pos) = self.undo_log.pop() {
            let pos = pos as usize;
            let cell = self.free_list[self.free_count];
            let displaced = self.free_list[pos];
            self.free_list[pos] = cell;
            self.free_list[self.free_count] = displaced;
            self.free_pos[cell as usize] = pos as u32;
            self.free_pos[displaced as usize] = self.free_count as u32;
            self.free_count += 1;
        }
        debug_assert_eq!(self.free_count, self.total_cells());
        for b in &mut self.buckets {
            b.clear();
        }
        self.degree_swept.clear();
        self.cliques_processed = 0;
        self.edges_processed = 0;
        self.triangles_active = false;
        self.point_cells.clear();
        self.blocked_volume_trace.clear();
    }

    pub fn event(&self) -> EventSpec {
        self.event
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k_per_axis(&self) -> usize {
        self.k_per_axis
    }

    pub fn cell_edge(&self) -> f64 {
        self.h
    }

    pub fn total_cells(&self) -> usize {
        self.order.len()
    }

    pub fn free_cells(&self) -> usize {
        self.free_count
    }

    pub fn blocked_cells(&self) -> usize {
        self.total_cells() - self.free_count
    }

    /// Linear ids of every cell blocked in the current trial.
    pub fn blocked_cell_ids(&self) -> &[u32] {
        &self.free_list[self.free_count..]
    }

    pub fn is_blocked(&self, cell: u32) -> bool {
        self.blocked_gen[cell as usize] == self.generation
    }

    /// Number of inserted points whose cells neighbor `cell`.
    pub fn order_of(&self, cell: u32) -> u32 {
        if self.order_gen[cell as usize] == self.generation {
            self.order[cell as usize]
        } else {
            0
        }
    }

    /// Volume of the currently blocked region.
    pub fn blocked_volume(&self) -> f64 {
        self.blocked_cells() as f64 * self.h.powi(self.dim as i32)
    }

    /// Per-insertion blocked volumes recorded during the current trial.
    pub fn blocked_volume_trace(&self) -> &[f64] {
        &self.blocked_volume_trace
    }

    /// `1 - Vol(blocked) / Vol(window)`; with equal cells this is exactly the
    /// free fraction of the grid.
    pub fn likelihood_factor(&self) -> f64 {
        self.free_count as f64 / self.total_cells() as f64
    }

    fn decode(&self, cell: u32, out: &mut [i64]) {
        let mut rest = cell as usize;
        for coord in out.iter_mut().take(self.dim) {
            *coord = (rest % self.k_per_axis) as i64;
            rest /= self.k_per_axis;
        }
    }

    pub fn cell_id_of_point(&self, p: &[f64]) -> u32 {
        let coords = cell_of(p, self.h, self.k_per_axis);
        let id: usize = coords
            .iter()
            .zip(&self.axis_strides)
            .map(|(&c, &s)| c as usize * s)
            .sum();
        id as u32
    }

    /// Collects every in-window cell within unit reach of `center` into
    /// `self.scratch` (deterministic offset order).
    fn collect_neighbor_cells(&mut self, center: &[i64]) {
        self.scratch.clear();
        let k = self.k_per_axis as i64;
        'offsets: for o in 0..self.n_offsets {
            let off = &self.offsets[o * self.dim..(o + 1) * self.dim];
            let mut id = 0usize;
            for j in 0..self.dim {
                let t = center[j] + off[j];
                if t < 0 || t >= k {
                    continue 'offsets;
                }
                id += t as usize * self.axis_strides[j];
            }
            self.scratch.push(id as u32);
        }
    }

    /// Forces a cell into the blocked set (no-op when already blocked).
    /// Soundness is the caller's responsibility; the verification harness
    /// uses this to inject deliberately unsound blocking.
    pub fn block_cell(&mut self, cell: u32) -> bool {
        if self.is_blocked(cell) {
            return false;
        }
        self.block(cell);
        true
    }

    /// Cell ids currently free (order matches the internal sampler layout).
    pub fn free_cell_ids(&self) -> &[u32] {
        &self.free_list[..self.free_count]
    }

    fn block(&mut self, cell: u32) {
        debug_assert!(!self.is_blocked(cell));
        self.blocked_gen[cell as usize] = self.generation;
        let pos = self.free_pos[cell as usize] as usize;
        debug_assert!(pos < self.free_count);
        let last = self.free_list[self.free_count - 1];
        self.free_list[pos] = last;
        self.free_list[self.free_count - 1] = cell;
        self.free_pos[last as usize] = pos as u32;
        self.free_pos[cell as usize] = (self.free_count - 1) as u32;
        self.free_count -= 1;
        self.undo_log.push(pos as u32);
    }

    /// Uniform point over the unblocked region (uniform cell, then uniform
    /// within the cell). Returns false when every cell is blocked.
    pub fn sample_free_point_into(&self, rng: &mut RngStream, out: &mut Vec<f64>) -> bool {
        if self.free_count == 0 {
            return false;
        }
        let cell = self.free_list[rng.index(self.free_count)];
        self.sample_point_in_cell_into(cell, rng, out);
        true
    }

    pub fn sample_free_point(&self, rng: &mut RngStream) -> Option<Vec<f64>> {
        let mut p = Vec::with_capacity(self.dim);
        self.sample_free_point_into(rng, &mut p).then_some(p)
    }

    /// Uniform point inside one specific cell (used by soundness probes).
    pub fn sample_point_in_cell_into(&self, cell: u32, rng: &mut RngStream, out: &mut Vec<f64>) {
        out.clear();
        let mut rest = cell as usize;
        for _ in 0..self.dim {
            let c = (rest % self.k_per_axis) as f64;
            rest /= self.k_per_axis;
            out.push(((c + rng.uniform01()) * self.h).min(self.lambda));
        }
    }

    fn bucket_push(&mut self, order: u32, cell: u32) {
        let idx = order as usize;
        if self.buckets.len() <= idx {
            self.buckets.resize_with(idx + 1, Vec::new);
        }
        self.buckets[idx].push(cell);
    }

    /// Registers the most recently inserted point of `state` (which must
    /// already include it and still be in `A`), updates cell orders, applies
    /// the event-specific blocking rule, and returns how many cells were
    /// newly blocked.
    pub fn note_insertion(&mut self, state: &mut GraphState) -> usize {
        debug_assert!(state.in_a());
        let n = state.len() - 1;
        let center = cell_of(state.point(n), self.h, self.k_per_axis);
        self.point_cells.extend_from_slice(&center);
        self.degree_swept.push(false);

        let blocked_before = self.blocked_cells();
        self.collect_neighbor_cells(&center);
        match self.event.kind {
            EventKind::EdgeCount => self.update_edge_count(state),
            EventKind::MaxDegree => self.update_max_degree(state),
            EventKind::MaxComponent => {
                self.bump_orders();
                self.update_max_component(state);
            }
            EventKind::MaxClique => {
                self.bump_orders();
                self.update_max_clique(state);
            }
            EventKind::TriangleCount => {
                self.bump_orders();
                self.update_triangles(state);
            }
        }
        self.blocked_volume_trace.push(self.blocked_volume());
        self.blocked_cells() - blocked_before
    }

    /// Increments the order of every cell in `self.scratch` with no blocking
    /// side effect.
    fn bump_orders(&mut self) {
        for idx in 0..self.scratch.len() {
            let i = self.scratch[idx] as usize;
            if self.order_gen[i] != self.generation {
                self.order_gen[i] = self.generation;
                self.order[i] = 0;
            }
            self.order[i] += 1;
        }
    }

    /// Blocked cells are exactly those of order above `ell - EC`; orders grow
    /// on insertion and the threshold drops as edges appear, so newly blocked
    /// cells come either from their own increment or from a bucket whose
    /// order crossed the lowered threshold.
    fn update_edge_count(&mut self, state: &GraphState) {
        let n = state.len() - 1;
        let ec = state.statistic(EventKind::EdgeCount);
        debug_assert!(ec <= self.event.ell);
        let t_new = (self.event.ell - ec).min(i64::MAX as u64) as i64;
        let new_edges = state.degree(n) as i64;
        let t_old = t_new.saturating_add(new_edges);

        let touched = std::mem::take(&mut self.scratch);
        for &c in &touched {
            let i = c as usize;
            if self.order_gen[i] != self.generation {
                self.order_gen[i] = self.generation;
                self.order[i] = 0;
            }
            self.order[i] += 1;
            if self.is_blocked(c) {
                continue;
            }
            let v = self.order[i];
            if v as i64 > t_new {
                self.block(c);
            } else {
                self.bucket_push(v, c);
            }
        }
        self.scratch = touched;

        if new_edges > 0 {
            let lo = t_new.saturating_add(1).max(0) as usize;
            let hi = (t_old.max(0) as usize).min(self.buckets.len().saturating_sub(1));
            for k in lo..=hi {
                let entries = std::mem::take(&mut self.buckets[k]);
                for c in entries {
                    if !self.is_blocked(c) && self.order_of(c) == k as u32 {
                        self.block(c);
                    }
                }
            }
        }
    }

    fn update_max_degree(&mut self, state: &GraphState) {
        let n = state.len() - 1;
        let ell = self.event.ell;

        let touched = std::mem::take(&mut self.scratch);
        for &c in &touched {
            let i = c as usize;
            if self.order_gen[i] != self.generation {
                self.order_gen[i] = self.generation;
                self.order[i] = 0;
            }
            self.order[i] += 1;
            if !self.is_blocked(c) && self.order[i] as u64 > ell {
                self.block(c);
            }
        }
        self.scratch = touched;

        // A point at the degree cap forces an excess degree on any neighbor
        // insertion: sweep its whole cell neighborhood, once per point.
        let mut to_sweep = Vec::new();
        if state.degree(n) as u64 >= ell {
            to_sweep.push(n);
        }
        for &i in state.neighbors(n) {
            if state.degree(i as usize) as u64 >= ell && !self.degree_swept[i as usize] {
                to_sweep.push(i as usize);
            }
        }
        for i in to_sweep {
            self.degree_swept[i] = true;
            self.block_point_neighborhood(i);
        }
    }

    fn block_point_neighborhood(&mut self, point_idx: usize) {
        let cell: Vec<i64> =
            self.point_cells[point_idx * self.dim..(point_idx + 1) * self.dim].to_vec();
        self.collect_neighbor_cells(&cell);
        let cells = std::mem::take(&mut self.scratch);
        for &c in &cells {
            if !self.is_blocked(c) {
                self.block(c);
            }
        }
        self.scratch = cells;
    }

    fn update_max_component(&mut self, state: &mut GraphState) {
        let n = state.len() - 1;
        let full = self.event.ell.saturating_add(1);
        // Only the new point's component grew; it triggers a sweep exactly
        // when it reaches the cap, and a capped component cannot grow again
        // while the configuration stays in A.
        if state.component_size(n) as u64 == full {
            for member in state.component_members(n) {
                self.block_point_neighborhood(member as usize);
            }
        }
    }

    fn update_max_clique(&mut self, state: &GraphState) {
        let watched = state.clique_watch();
        let mut coords = vec![0i64; self.dim];
        for members in watched.iter().skip(self.cliques_processed) {
            let first = members[0] as usize;
            let first_cell: Vec<i64> =
                self.point_cells[first * self.dim..(first + 1) * self.dim].to_vec();
            self.collect_neighbor_cells(&first_cell);
            let candidates = std::mem::take(&mut self.scratch);
            // A cell neighboring every member's cell forces a larger clique.
            'cells: for &c in &candidates {
                if self.is_blocked(c) {
                    continue;
                }
                self.decode(c, &mut coords);
                for &m in &members[1..] {
                    let mi = m as usize;
                    let mc = &self.point_cells[mi * self.dim..(mi + 1) * self.dim];
                    for j in 0..self.dim {
                        coords[j] -= mc[j];
                    }
                    let near = cells_are_neighbors(&coords, self.h);
                    for j in 0..self.dim {
                        coords[j] += mc[j];
                    }
                    if !near {
                        continue 'cells;
                    }
                }
                self.block(c);
            }
            self.scratch = candidates;
        }
        self.cliques_processed = watched.len();
    }

    fn update_triangles(&mut self, state: &GraphState) {
        let ntg = state.statistic(EventKind::TriangleCount);
        if !self.triangles_active {
            if ntg != self.event.ell {
                // Below the cap points are generated freely; nothing blocks.
                return;
            }
            // At the cap: every doubly-reachable cell of an adjacent pair
            // would close one more triangle. Sweep all edges so far, then
            // only new ones.
            self.triangles_active = true;
            self.edges_processed = 0;
        }
        let n_edges = state.edges().len();
        let mut coords = vec![0i64; self.dim];
        for e in self.edges_processed..n_edges {
            let (a, b) = state.edges()[e];
            let (a, b) = (a as usize, b as usize);
            let cell_a: Vec<i64> = self.point_cells[a * self.dim..(a + 1) * self.dim].to_vec();
            let cell_b: Vec<i64> = self.point_cells[b * self.dim..(b + 1) * self.dim].to_vec();
            self.collect_neighbor_cells(&cell_a);
            let candidates = std::mem::take(&mut self.scratch);
            for &c in &candidates {
                if self.is_blocked(c) {
                    continue;
                }
                self.decode(c, &mut coords);
                for j in 0..self.dim {
                    coords[j] -= cell_b[j];
                }
                let near = cells_are_neighbors(&coords, self.h);
                for j in 0..self.dim {
                    coords[j] += cell_b[j];
                }
                if near {
                    self.block(c);
                }
            }
            self.scratch = candidates;
        }
        self.edges_processed = n_edges;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{EventKind, EventSpec};
    use std::collections::HashSet;

    fn w10() -> Window {
        Window::new(2, 10.0).unwrap()
    }

    #[test]
    fn neighbor_predicate_examples() {
        assert!(cells_are_neighbors(&[6, 6], 0.1)); // 0.1 * sqrt(98)  ~ 0.990
        assert!(cells_are_neighbors(&[7, 0], 0.1)); // 0.1 * sqrt(65)  ~ 0.806
        assert!(!cells_are_neighbors(&[9, 1], 0.1)); // 0.1 * sqrt(104) ~ 1.020
        // A cell is its own neighbor whenever its diagonal fits.
        assert!(cells_are_neighbors(&[0, 0], 0.1));
    }

    #[test]
    fn cell_of_examples() {
        assert_eq!(cell_of(&[0.05, 0.05], 0.1, 100), vec![0, 0]);
        assert_eq!(cell_of(&[9.99, 0.0], 0.1, 100), vec![99, 0]);
        assert_eq!(cell_of(&[0.10, 0.25], 0.1, 100), vec![1, 2]);
        // The closed upper boundary clamps into the last cell.
        assert_eq!(cell_of(&[10.0, 10.0], 0.1, 100), vec![99, 99]);
    }

    #[test]
    fn construction_matches_expected_geometry() {
        let g = GridBlocker::new(&w10(), 100, EventSpec::new(EventKind::EdgeCount, 0)).unwrap();
        assert_eq!(g.cell_edge(), 0.1);
        assert_eq!(g.total_cells(), 10_000);
        assert_eq!(g.blocked_cells(), 0);
        assert!(g.warning().is_none());

        let g = GridBlocker::new(
            &Window::new(2, 20.0).unwrap(),
            200,
            EventSpec::new(EventKind::EdgeCount, 0),
        )
        .unwrap();
        assert_eq!(g.cell_edge(), 0.1);

        let g = GridBlocker::new(&w10(), 1, EventSpec::new(EventKind::EdgeCount, 0)).unwrap();
        assert!(g.warning().is_some());
        assert_eq!(g.total_cells(), 1);

        assert!(matches!(
            GridBlocker::new(&w10(), 10_000, EventSpec::new(EventKind::EdgeCount, 0)),
            Err(crate::error::Error::Capacity(_))
        ));
        assert!(GridBlocker::new(&w10(), 0, EventSpec::new(EventKind::EdgeCount, 0)).is_err());
    }

    /// Independent offset enumeration used to cross-check the blocker.
    fn enumerate_offsets(h: f64, d: usize) -> Vec<Vec<i64>> {
        let reach = (1.0 / h).ceil() as i64;
        let mut found = Vec::new();
        if d == 2 {
            for a in -reach..=reach {
                for b in -reach..=reach {
                    let s = ((a.abs() + 1).pow(2) + (b.abs() + 1).pow(2)) as f64;
                    if h * s.sqrt() <= 1.0 {
                        found.push(vec![a, b]);
                    }
                }
            }
        } else {
            panic!("test helper supports d = 2 only");
        }
        found
    }

    #[test]
    fn first_point_blocks_exactly_the_neighbor_cells() {
        let spec = EventSpec::new(EventKind::EdgeCount, 0);
        let mut g = GridBlocker::new(&w10(), 100, spec).unwrap();
        let mut s = GraphState::new(w10(), spec);
        g.reset();
        s.add_point(&[5.05, 5.05]).unwrap();
        let newly = g.note_insertion(&mut s);
        let expected = enumerate_offsets(0.1, 2).len();
        assert_eq!(newly, expected);
        // All of them around cell (50, 50).
        let expected_cells: HashSet<u32> = enumerate_offsets(0.1, 2)
            .iter()
            .map(|d| ((50 + d[1]) * 100 + 50 + d[0]) as u32)
            .collect();
        let got: HashSet<u32> = g.blocked_cell_ids().iter().copied().collect();
        assert_eq!(got, expected_cells);
    }

    #[test]
    fn max_degree_blocks_both_neighborhoods_at_the_cap() {
        let spec = EventSpec::new(EventKind::MaxDegree, 1);
        let mut g = GridBlocker::new(&w10(), 100, spec).unwrap();
        let mut s = GraphState::new(w10(), spec);
        g.reset();
        s.add_point(&[5.05, 5.05]).unwrap();
        g.note_insertion(&mut s);
        assert_eq!(g.blocked_cells(), 0);
        s.add_point(&[5.55, 5.05]).unwrap();
        assert!(s.in_a());
        g.note_insertion(&mut s);
        // Both endpoints have degree ell = 1: their whole neighborhoods block.
        let mut expected_cells = HashSet::new();
        for (cx, cy) in [(50i64, 50i64), (55, 50)] {
            for d in enumerate_offsets(0.1, 2) {
                expected_cells.insert(((cy + d[1]) * 100 + cx + d[0]) as u32);
            }
        }
        let got: HashSet<u32> = g.blocked_cell_ids().iter().copied().collect();
        assert_eq!(got, expected_cells);
    }

    #[test]
    fn triangles_block_doubly_reachable_cells_after_first_edge() {
        let spec = EventSpec::new(EventKind::TriangleCount, 0);
        let mut g = GridBlocker::new(&w10(), 100, spec).unwrap();
        let mut s = GraphState::new(w10(), spec);
        g.reset();
        s.add_point(&[5.05, 5.05]).unwrap();
        g.note_insertion(&mut s);
        assert_eq!(g.blocked_cells(), 0);
        s.add_point(&[5.55, 5.05]).unwrap();
        g.note_insertion(&mut s);
        let mut expected_cells = HashSet::new();
        for d in enumerate_offsets(0.1, 2) {
            let (cx, cy) = (50 + d[0], 50 + d[1]);
            let db = vec![cx - 55, cy - 50];
            if cells_are_neighbors(&db, 0.1) {
                expected_cells.insert((cy * 100 + cx) as u32);
            }
        }
        assert!(!expected_cells.is_empty());
        let got: HashSet<u32> = g.blocked_cell_ids().iter().copied().collect();
        assert_eq!(got, expected_cells);
    }

    #[test]
    fn likelihood_factor_is_block_fraction() {
        let spec = EventSpec::new(EventKind::EdgeCount, 0);
        let mut g = GridBlocker::new(&w10(), 100, spec).unwrap();
        g.reset();
        assert_eq!(g.likelihood_factor(), 1.0);
        g.block(0);
        assert!((g.likelihood_factor() - 0.9999).abs() < 1e-15);
        for c in 1..10_000u32 {
            g.block(c);
        }
        assert_eq!(g.likelihood_factor(), 0.0);
        assert_eq!(g.free_cells(), 0);
        let mut rng = RngStream::new(1, 1);
        assert!(g.sample_free_point(&mut rng).is_none());
    }

    #[test]
    fn free_sampling_avoids_blocked_half() {
        let spec = EventSpec::new(EventKind::EdgeCount, 0);
        let mut g = GridBlocker::new(&w10(), 100, spec).unwrap();
        g.reset();
        // Block the left half plane of cells.
        for cy in 0..100u32 {
            for cx in 0..50u32 {
                g.block(cy * 100 + cx);
            }
        }
        let mut rng = RngStream::new(7, 3);
        let mut p = Vec::new();
        for _ in 0..100_000 {
            assert!(g.sample_free_point_into(&mut rng, &mut p));
            assert!(p[0] >= 5.0, "sampled into blocked half: {p:?}");
            let cell = g.cell_id_of_point(&p);
            assert!(!g.is_blocked(cell));
        }
    }

    #[test]
    fn unblocked_sampling_is_uniform_on_the_window() {
        let spec = EventSpec::new(EventKind::EdgeCount, 0);
        let mut g = GridBlocker::new(&w10(), 100, spec).unwrap();
        g.reset();
        let mut rng = RngStream::new(11, 0);
        let n = 200_000;
        let mut in_box = 0u64;
        let mut p = Vec::new();
        for _ in 0..n {
            g.sample_free_point_into(&mut rng, &mut p);
            if (1.0..=3.0).contains(&p[0]) && (2.0..=7.0).contains(&p[1]) {
                in_box += 1;
            }
        }
        let p_hat = in_box as f64 / n as f64;
        let se = (0.1 * 0.9 / n as f64).sqrt();
        assert!((p_hat - 0.1).abs() < 4.0 * se, "p_hat={p_hat}");
    }

    #[test]
    fn orders_match_brute_force_recount() {
        let spec = EventSpec::new(EventKind::EdgeCount, 50);
        let window = w10();
        let mut g = GridBlocker::new(&window, 20, spec).unwrap(); // h = 0.5
        let mut s = GraphState::new(window, spec);
        let mut rng = RngStream::new(99, 5);
        g.reset();
        let mut cells: Vec<Vec<i64>> = Vec::new();
        for _ in 0..30 {
            let p = window.sample_point(&mut rng);
            let u = s.add_point(&p).unwrap();
            if !u.still_in_a {
                break;
            }
            g.note_insertion(&mut s);
            cells.push(cell_of(&p, g.cell_edge(), g.k_per_axis()));
            // Recount: order[C] = #points whose cell neighbors C.
            for cy in 0..20i64 {
                for cx in 0..20i64 {
                    let expected = cells
                        .iter()
                        .filter(|pc| {
                            cells_are_neighbors(&[cx - pc[0], cy - pc[1]], g.cell_edge())
                        })
                        .count() as u32;
                    let id = (cy * 20 + cx) as u32;
                    assert_eq!(g.order_of(id), expected, "cell ({cx},{cy})");
                }
            }
        }
    }

    #[test]
    fn blocking_is_monotone_within_a_trial() {
        let spec = EventSpec::new(EventKind::EdgeCount, 3);
        let window = w10();
        let mut g = GridBlocker::new(&window, 100, spec).unwrap();
        let mut s = GraphState::new(window, spec);
        let mut rng = RngStream::new(4, 9);
        g.reset();
        let mut prev: HashSet<u32> = HashSet::new();
        let mut prev_factor = 1.0f64;
        for _ in 0..40 {
            let mut p = Vec::new();
            if !g.sample_free_point_into(&mut rng, &mut p) {
                break;
            }
            let u = s.add_point(&p).unwrap();
            if !u.still_in_a {
                break;
            }
            g.note_insertion(&mut s);
            let now: HashSet<u32> = g.blocked_cell_ids().iter().copied().collect();
            assert!(prev.is_subset(&now));
            let factor = g.likelihood_factor();
            assert!(factor <= prev_factor);
            assert!((0.0..=1.0).contains(&factor));
            prev = now;
            prev_factor = factor;
        }
    }

    #[test]
    fn reset_restores_all_cells() {
        let spec = EventSpec::new(EventKind::EdgeCount, 0);
        let window = w10();
        let mut g = GridBlocker::new(&window, 50, spec).unwrap();
        let mut s = GraphState::new(window, spec);
        g.reset();
        s.add_point(&[5.0, 5.0]).unwrap();
        g.note_insertion(&mut s);
        assert!(g.blocked_cells() > 0);
        g.reset();
        assert_eq!(g.blocked_cells(), 0);
        assert_eq!(g.free_cells(), g.total_cells());
        for c in 0..g.total_cells() as u32 {
            assert!(!g.is_blocked(c));
            assert_eq!(g.order_of(c), 0);
        }
        // Free list is still a permutation of all cells.
        let ids: HashSet<u32> = g.free_list.iter().copied().collect();
        assert_eq!(ids.len(), g.total_cells());
    }
}
