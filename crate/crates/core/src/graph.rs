//! Incremental unit-distance graph state for one trial.
//!
//! Points are inserted one at a time; every hereditary statistic (edge count,
//! maximum degree, largest component, maximum clique, triangle count) is
//! maintained incrementally, and membership in the event `A` is re-evaluated
//! after each insertion. Once the configuration leaves `A` the flag latches
//! false.
//!
//! Neighbor search uses a coarse spatial hash with cell size 1 (independent of
//! the blocking grid), falling back to a full scan when the window is too
//! large to index. Candidate lists are sorted so that downstream consumers see
//! a platform-independent order.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::event::{EventKind, EventSpec};
use crate::window::Window;

/// Result of one insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateSummary {
    /// Edges created by the inserted point.
    pub new_edges: usize,
    /// Whether the configuration is still inside the event `A`.
    pub still_in_a: bool,
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Points are adjacent iff `0 < |x - y| <= 1`; ties at exactly 1 count as
/// edges and coincident points do not.
#[inline]
fn unit_adjacent(a: &[f64], b: &[f64]) -> bool {
    let d2 = dist2(a, b);
    d2 > 0.0 && d2 <= 1.0
}

// ---------------------------------------------------------------------------
// Spatial hash, cell size 1
// ---------------------------------------------------------------------------

/// Dense backing when the window has few unit cells (covers every desk-scale
/// window without hashing on the insertion hot path).
const DENSE_CELL_LIMIT: u128 = 1 << 16;

#[derive(Debug, Clone)]
enum HashMode {
    /// Per-cell buckets in a flat array, indexed by packed coordinates.
    Dense { buckets: Vec<Vec<u32>>, touched: Vec<u32> },
    /// Cell coordinates packed into a u64 key.
    Sparse { cells: HashMap<u64, Vec<u32>> },
    /// Window too large to index; scan all points.
    Brute,
}

#[derive(Debug, Clone)]
struct SpatialHash {
    dim: usize,
    extent: i64,
    strides: Vec<u64>,
    mode: HashMode,
    odometer: Vec<i64>,
}

impl SpatialHash {
    fn new(window: &Window) -> Self {
        let dim = window.dim();
        let extent = window.side().floor() as u128 + 1;
        let mut strides = Vec::with_capacity(dim);
        let mut acc: u128 = 1;
        let mut ok = true;
        for _ in 0..dim {
            if acc > u64::MAX as u128 {
                ok = false;
                break;
            }
            strides.push(acc as u64);
            acc = acc.saturating_mul(extent);
        }
        if acc > u64::MAX as u128 {
            ok = false;
        }
        let mode = if !ok {
            HashMode::Brute
        } else if acc <= DENSE_CELL_LIMIT {
            HashMode::Dense { buckets: vec![Vec::new(); acc as usize], touched: Vec::new() }
        } else {
            HashMode::Sparse { cells: HashMap::new() }
        };
        Self { dim, extent: extent as i64, strides, mode, odometer: vec![0; dim] }
    }

    #[inline]
    fn key(strides: &[u64], extent: i64, p: &[f64], offset: &[i64]) -> Option<u64> {
        let mut k = 0u64;
        for (j, &s) in strides.iter().enumerate() {
            let c = p[j].floor() as i64 + offset[j];
            if c < 0 || c >= extent {
                return None;
            }
            k = k.wrapping_add(s.wrapping_mul(c as u64));
        }
        Some(k)
    }

    fn insert(&mut self, p: &[f64], idx: u32) {
        self.odometer.fill(0);
        let Some(k) = Self::key(&self.strides, self.extent, p, &self.odometer) else {
            return;
        };
        match &mut self.mode {
            HashMode::Dense { buckets, touched } => {
                let b = &mut buckets[k as usize];
                if b.is_empty() {
                    touched.push(k as u32);
                }
                b.push(idx);
            }
            HashMode::Sparse { cells } => cells.entry(k).or_default().push(idx),
            HashMode::Brute => {}
        }
    }

    /// Collects candidate indices from the 3^d cell neighborhood into `out`.
    /// In brute mode, all `n_points` indices are produced instead.
    fn candidates(&mut self, p: &[f64], n_points: u32, out: &mut Vec<u32>) {
        out.clear();
        if matches!(self.mode, HashMode::Brute) {
            out.extend(0..n_points);
            return;
        }
        self.odometer.fill(-1);
        loop {
            if let Some(k) = Self::key(&self.strides, self.extent, p, &self.odometer) {
                match &self.mode {
                    HashMode::Dense { buckets, .. } => {
                        out.extend_from_slice(&buckets[k as usize])
                    }
                    HashMode::Sparse { cells } => {
                        if let Some(v) = cells.get(&k) {
                            out.extend_from_slice(v);
                        }
                    }
                    HashMode::Brute => unreachable!(),
                }
            }
            // Odometer over {-1, 0, 1}^d.
            let mut j = 0;
            loop {
                if j == self.dim {
                    return;
                }
                self.odometer[j] += 1;
                if self.odometer[j] <= 1 {
                    break;
                }
                self.odometer[j] = -1;
                j += 1;
            }
        }
    }

    fn reset(&mut self) {
        match &mut self.mode {
            HashMode::Dense { buckets, touched } => {
                for &k in touched.iter() {
                    buckets[k as usize].clear();
                }
                touched.clear();
            }
            HashMode::Sparse { cells } => {
                // Keep bucket allocations between trials; fully clear only
                // when the touched-cell set has grown past any reuse value.
                if cells.len() > (1 << 20) {
                    cells.clear();
                } else {
                    for v in cells.values_mut() {
                        v.clear();
                    }
                }
            }
            HashMode::Brute => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Local clique search over a neighbor-induced subgraph (bitset rows)
// ---------------------------------------------------------------------------


fn bit_set(row: &mut [u64], i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

fn popcount(mask: &[u64]) -> u32 {
    mask.iter().map(|w| w.count_ones()).sum()
}

fn first_bit(mask: &[u64]) -> Option<usize> {
    for (w, word) in mask.iter().enumerate() {
        if *word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

fn for_each_bit(mask: &[u64], mut f: impl FnMut(usize)) {
    for (w, word) in mask.iter().enumerate() {
        let mut rest = *word;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            f(w * 64 + b);
            rest &= rest - 1;
        }
    }
}

/// Size of the largest clique in the graph given by bitset adjacency rows.
/// Branch and bound; geometric neighbor graphs are locally near-complete, for
/// which the include-branch dominates and the bound prunes the rest.
fn max_clique_size(adj: &[Vec<u64>]) -> usize {
    let m = adj.len();
    if m == 0 {
        return 0;
    }
    let words = adj[0].len();
    let mut cand = vec![u64::MAX; words];
    // Mask off bits >= m.
    let spare = words * 64 - m;
    if spare > 0 {
        cand[words - 1] &= u64::MAX >> spare;
    }
    let mut best = 0usize;
    bb_clique(adj, &cand, 0, &mut best);
    best
}

fn bb_clique(adj: &[Vec<u64>], cand: &[u64], size: usize, best: &mut usize) {
    let Some(v) = first_bit(cand) else {
        *best = (*best).max(size);
        return;
    };
    if size + popcount(cand) as usize <= *best {
        return;
    }
    // Include v.
    let mut with_v: Vec<u64> = cand.iter().zip(&adj[v]).map(|(c, a)| c & a).collect();
    bb_clique(adj, &with_v, size + 1, best);
    // Exclude v.
    with_v.copy_from_slice(cand);
    with_v[v / 64] &= !(1u64 << (v % 64));
    bb_clique(adj, &with_v, size, best);
}

/// Emits every clique of exactly `k` vertices, as ascending local indices.
fn cliques_of_size(adj: &[Vec<u64>], k: usize, out: &mut Vec<Vec<u32>>) {
    if k == 0 {
        out.push(Vec::new());
        return;
    }
    let m = adj.len();
    if m < k {
        return;
    }
    let words = adj[0].len();
    let mut cand = vec![u64::MAX; words];
    let spare = words * 64 - m;
    if spare > 0 {
        cand[words - 1] &= u64::MAX >> spare;
    }
    let mut current = Vec::with_capacity(k);
    extend_cliques(adj, &cand, k, &mut current, out);
}

fn extend_cliques(
    adj: &[Vec<u64>],
    cand: &[u64],
    need: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if need == 0 {
        out.push(current.clone());
        return;
    }
    if (popcount(cand) as usize) < need {
        return;
    }
    for_each_bit(cand, |v| {
        // Candidates restricted to neighbors of v above v keep emission
        // strictly ascending and duplicate-free.
        let mut next: Vec<u64> = cand.iter().zip(&adj[v]).map(|(c, a)| c & a).collect();
        for w in next.iter_mut().take(v / 64) {
            *w = 0;
        }
        let b = v % 64;
        let bits_through_v = if b == 63 { u64::MAX } else { (1u64 << (b + 1)) - 1 };
        next[v / 64] &= !bits_through_v;
        current.push(v as u32);
        extend_cliques(adj, &next, need - 1, current, out);
        current.pop();
    });
}

// ---------------------------------------------------------------------------
// Graph state
// ---------------------------------------------------------------------------

/// Incremental Gilbert-graph state for one trial.
#[derive(Debug, Clone)]
pub struct GraphState {
    window: Window,
    spec: EventSpec,
    points: Vec<f64>,
    adjacency: Vec<Vec<u32>>,
    degrees: Vec<u32>,
    edges: Vec<(u32, u32)>,
    max_degree: u32,
    uf_parent: Vec<u32>,
    uf_size: Vec<u32>,
    max_component: u32,
    triangles: u64,
    max_clique: u32,
    clique_watch: Vec<Vec<u32>>,
    in_a: bool,
    hash: SpatialHash,
    scratch_cand: Vec<u32>,
    scratch_nb: Vec<u32>,
}

impl GraphState {
    /// Empty configuration; in `A` for every threshold (the empty graph has
    /// all statistics 0, with the largest-component size of the empty set
    /// taken as 0).
    pub fn new(window: Window, spec: EventSpec) -> Self {
        Self {
            window,
            spec,
            points: Vec::new(),
            adjacency: Vec::new(),
            degrees: Vec::new(),
            edges: Vec::new(),
            max_degree: 0,
            uf_parent: Vec::new(),
            uf_size: Vec::new(),
            max_component: 0,
            triangles: 0,
            max_clique: 0,
            clique_watch: Vec::new(),
            in_a: true,
            hash: SpatialHash::new(&window),
            scratch_cand: Vec::new(),
            scratch_nb: Vec::new(),
        }
    }

    /// Clears the trial, keeping allocations for reuse.
    pub fn reset(&mut self) {
        self.points.clear();
        self.adjacency.clear();
        self.degrees.clear();
        self.edges.clear();
        self.max_degree = 0;
        self.uf_parent.clear();
        self.uf_size.clear();
        self.max_component = 0;
        self.triangles = 0;
        self.max_clique = 0;
        self.clique_watch.clear();
        self.in_a = true;
        self.hash.reset();
    }

    pub fn spec(&self) -> EventSpec {
        self.spec
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.window.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    /// Edges in insertion order, each as `(older, newer)` index pair.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn in_a(&self) -> bool {
        self.in_a
    }

    /// All cliques of size `ell + 1` in the current graph (MaxClique mode
    /// only), each as ascending point indices, in discovery order.
    pub fn clique_watch(&self) -> &[Vec<u32>] {
        &self.clique_watch
    }

    fn uf_find(&mut self, mut i: u32) -> u32 {
        while self.uf_parent[i as usize] != i {
            let gp = self.uf_parent[self.uf_parent[i as usize] as usize];
            self.uf_parent[i as usize] = gp;
            i = gp;
        }
        i
    }

    fn uf_union(&mut self, a: u32, b: u32) {
        let ra = self.uf_find(a);
        let rb = self.uf_find(b);
        if ra == rb {
            return;
        }
        let (big, small) = if self.uf_size[ra as usize] >= self.uf_size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.uf_parent[small as usize] = big;
        self.uf_size[big as usize] += self.uf_size[small as usize];
    }

    /// Size of the component containing point `i`.
    pub fn component_size(&mut self, i: usize) -> u32 {
        let r = self.uf_find(i as u32);
        self.uf_size[r as usize]
    }

    /// Indices of every point in the component containing `i`, ascending.
    pub fn component_members(&mut self, i: usize) -> Vec<u32> {
        let r = self.uf_find(i as u32);
        (0..self.len() as u32).filter(|&j| self.uf_find(j) == r).collect()
    }

    /// Current value of a named statistic. The largest-component size of the
    /// empty configuration is 0.
    pub fn statistic(&self, kind: EventKind) -> u64 {
        match kind {
            EventKind::EdgeCount => self.edges.len() as u64,
            EventKind::MaxDegree => self.max_degree as u64,
            EventKind::MaxComponent => self.max_component as u64,
            EventKind::MaxClique => self.max_clique as u64,
            EventKind::TriangleCount => self.triangles,
        }
    }

    /// Inserts a point and updates every statistic. The in-`A` flag latches:
    /// once false it never becomes true again. Estimator loops stop at the
    /// first exit; continued insertion stays well-defined for diagnostics.
    pub fn add_point(&mut self, p: &[f64]) -> Result<UpdateSummary> {
        if !self.window.contains(p) {
            return Err(Error::InvalidArgument(format!(
                "point {p:?} outside window [0, {}]^{}",
                self.window.side(),
                self.window.dim()
            )));
        }
        let n = self.len() as u32;

        // Neighbor search; sorted so downstream updates are order-stable.
        let mut cand = std::mem::take(&mut self.scratch_cand);
        let mut nb = std::mem::take(&mut self.scratch_nb);
        self.hash.candidates(p, n, &mut cand);
        nb.clear();
        for &i in &cand {
            if unit_adjacent(self.point(i as usize), p) {
                nb.push(i);
            }
        }
        nb.sort_unstable();

        self.points.extend_from_slice(p);
        self.adjacency.push(nb.clone());
        self.degrees.push(nb.len() as u32);
        self.uf_parent.push(n);
        self.uf_size.push(1);
        self.max_degree = self.max_degree.max(nb.len() as u32);
        for &i in &nb {
            self.adjacency[i as usize].push(n);
            self.degrees[i as usize] += 1;
            self.max_degree = self.max_degree.max(self.degrees[i as usize]);
            self.edges.push((i, n));
            self.uf_union(i, n);
        }
        let comp = self.component_size(n as usize);
        self.max_component = self.max_component.max(comp);

        // New triangles are exactly the adjacent pairs among the neighbors.
        let mut tri_new = 0u64;
        for (a_pos, &i) in nb.iter().enumerate() {
            for &j in &nb[a_pos + 1..] {
                if unit_adjacent(self.point(i as usize), self.point(j as usize)) {
                    tri_new += 1;
                }
            }
        }
        self.triangles += tri_new;

        // A larger clique must contain the new point, hence lives in its
        // neighbor set.
        let mut local_adj: Option<Vec<Vec<u64>>> = None;
        if nb.len() + 1 > self.max_clique as usize {
            let adj = local_adj.get_or_insert_with(|| self.local_adjacency(&nb));
            let with_new = 1 + max_clique_size(adj);
            self.max_clique = self.max_clique.max(with_new as u32);
        }
        if n == 0 {
            self.max_clique = self.max_clique.max(1);
        }

        let stat = self.statistic(self.spec.kind);
        self.in_a = self.in_a && self.spec.admits(stat);

        if self.spec.kind == EventKind::MaxClique && self.in_a {
            // Every new (ell+1)-clique contains the new point, so it is an
            // ell-clique inside the neighbor set plus the new point.
            let k = self.spec.ell.min(nb.len() as u64) as usize;
            if self.spec.ell as usize == k {
                let adj = local_adj.get_or_insert_with(|| self.local_adjacency(&nb));
                let mut found = Vec::new();
                cliques_of_size(adj, k, &mut found);
                for local in found {
                    let mut members: Vec<u32> =
                        local.into_iter().map(|v| nb[v as usize]).collect();
                    members.push(n);
                    self.clique_watch.push(members);
                }
            }
        }

        self.hash.insert(p, n);
        let new_edges = nb.len();
        self.scratch_cand = cand;
        self.scratch_nb = nb;
        Ok(UpdateSummary { new_edges, still_in_a: self.in_a })
    }

    fn local_adjacency(&self, nb: &[u32]) -> Vec<Vec<u64>> {
        let m = nb.len();
        let words = m.div_ceil(64).max(1);
        let mut adj = vec![vec![0u64; words]; m];
        for a in 0..m {
            for b in a + 1..m {
                if unit_adjacent(self.point(nb[a] as usize), self.point(nb[b] as usize)) {
                    bit_set(&mut adj[a], b);
                    bit_set(&mut adj[b], a);
                }
            }
        }
        adj
    }
}
