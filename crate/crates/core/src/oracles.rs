//! Independent ground truth for tests and verification runs.
//!
//! Nothing here shares distance checks or statistic bookkeeping with the
//! estimators: statistics are recomputed from scratch over explicit point
//! buffers, so an estimator bug cannot certify itself. Oracle randomness runs
//! on the reserved stream namespace.

use crate::error::{Error, Result};
use crate::estimators::TrialConfig;
use crate::event::{EventKind, EventSpec};
use crate::graph::GraphState;
use crate::grid::GridBlocker;
use crate::poisson::PoissonTable;
use crate::rng::RngStream;
use crate::window::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    ClosedForm,
    BruteForce,
}

/// A ground-truth value with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    pub value: f64,
    pub method: OracleMethod,
    /// Monte Carlo sample count (brute force only).
    pub trials: u64,
    /// Zero for closed forms.
    pub std_err: f64,
}

impl OracleResult {
    fn closed_form(value: f64) -> Self {
        Self { value, method: OracleMethod::ClosedForm, trials: 0, std_err: 0.0 }
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Probability that `n` iid uniform points on `[0, lambda]` are pairwise more
/// than unit distance apart (uniform-spacings closed form):
/// `((lambda - (n - 1)) / lambda)^n` while the gaps fit, else 0.
pub fn hard_sphere_1d_pn(lambda: f64, n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let slack = lambda - (n as f64 - 1.0);
    if slack < 0.0 {
        0.0
    } else {
        (slack / lambda).powi(n as i32)
    }
}

/// Exact no-edge probability in one dimension: the Poisson mixture of the
/// spacings closed form over the tabulated counts.
pub fn hard_sphere_1d_exact(lambda: f64, table: &PoissonTable) -> Result<OracleResult> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("side length must be positive, got {lambda}")));
    }
    let mut total = 0.0f64;
    for n in 0..=table.n_max() {
        let pn = hard_sphere_1d_pn(lambda, n);
        if pn == 0.0 && n as f64 > lambda + 1.0 {
            break;
        }
        total += table.pmf(n) * pn;
    }
    Ok(OracleResult::closed_form(total))
}

/// Probability that two iid uniform points in a side-`lambda` square are more
/// than unit distance apart (square line-picking closed form, `lambda >= 1`):
/// `1 - (pi / lambda^2 - 8 / (3 lambda^3) + 1 / (2 lambda^4))`.
pub fn pairwise_distance_exact_2d(lambda: f64) -> Result<f64> {
    if lambda < 1.0 {
        return Err(Error::Unsupported(
            "square line-picking branch for sides below the unit threshold is not implemented"
                .into(),
        ));
    }
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let l4 = l3 * lambda;
    Ok(1.0 - (std::f64::consts::PI / l2 - 8.0 / (3.0 * l3) + 0.5 / l4))
}

// ---------------------------------------------------------------------------
// Brute-force statistics over a flat point buffer
// ---------------------------------------------------------------------------

/// From-scratch values of all five statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteStatistics {
    pub edge_count: u64,
    pub max_degree: u64,
    pub max_component: u64,
    pub max_clique: u64,
    pub triangle_count: u64,
}

fn adjacency_bitsets(points: &[f64], dim: usize) -> Vec<Vec<u64>> {
    let n = points.len() / dim;
    let words = n.div_ceil(64).max(1);
    let mut adj = vec![vec![0u64; words]; n];
    for i in 0..n {
        for j in i + 1..n {
            let mut d2 = 0.0;
            for k in 0..dim {
                let diff = points[i * dim + k] - points[j * dim + k];
                d2 += diff * diff;
            }
            if d2 > 0.0 && d2 <= 1.0 {
                adj[i][j / 64] |= 1 << (j % 64);
                adj[j][i / 64] |= 1 << (i % 64);
            }
        }
    }
    adj
}

fn brute_max_clique(adj: &[Vec<u64>], cand: &[u64], size: u64, best: &mut u64) {
    let mut v = None;
    'scan: for (w, word) in cand.iter().enumerate() {
        if *word != 0 {
            v = Some(w * 64 + word.trailing_zeros() as usize);
            break 'scan;
        }
    }
    let Some(v) = v else {
        *best = (*best).max(size);
        return;
    };
    let remaining: u32 = cand.iter().map(|w| w.count_ones()).sum();
    if size + remaining as u64 <= *best {
        return;
    }
    let mut next: Vec<u64> = cand.iter().zip(&adj[v]).map(|(c, a)| c & a).collect();
    brute_max_clique(adj, &next, size + 1, best);
    next.copy_from_slice(cand);
    next[v / 64] &= !(1u64 << (v % 64));
    brute_max_clique(adj, &next, size, best);
}

/// Recomputes every statistic from scratch: all pairwise distances, BFS
/// components, bitset triangle counting, and branch-and-bound clique search.
pub fn brute_force_statistics(points: &[f64], dim: usize) -> BruteStatistics {
    assert!(dim > 0 && points.len().is_multiple_of(dim));
    let n = points.len() / dim;
    if n == 0 {
        return BruteStatistics {
            edge_count: 0,
            max_degree: 0,
            max_component: 0,
            max_clique: 0,
            triangle_count: 0,
        };
    }
    let adj = adjacency_bitsets(points, dim);

    let degrees: Vec<u64> =
        adj.iter().map(|row| row.iter().map(|w| w.count_ones() as u64).sum()).collect();
    let edge_count = degrees.iter().sum::<u64>() / 2;
    let max_degree = degrees.iter().copied().max().unwrap_or(0);

    // Components by BFS.
    let mut seen = vec![false; n];
    let mut max_component = 0u64;
    let mut queue = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.clear();
        queue.push(start);
        let mut size = 0u64;
        while let Some(i) = queue.pop() {
            size += 1;
            for (w, word) in adj[i].iter().enumerate() {
                let mut rest = *word;
                while rest != 0 {
                    let j = w * 64 + rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    if !seen[j] {
                        seen[j] = true;
                        queue.push(j);
                    }
                }
            }
        }
        max_component = max_component.max(size);
    }

    // Triangles: common neighbors above j for each edge (i, j), i < j.
    let mut triangle_count = 0u64;
    for i in 0..n {
        for (w, word) in adj[i].iter().enumerate() {
            let mut rest = *word;
            while rest != 0 {
                let j = w * 64 + rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if j <= i {
                    continue;
                }
                for (w2, (a, b)) in adj[i].iter().zip(&adj[j]).enumerate() {
                    let mut common = a & b;
                    while common != 0 {
                        let k = w2 * 64 + common.trailing_zeros() as usize;
                        common &= common - 1;
                        if k > j {
                            triangle_count += 1;
                        }
                    }
                }
            }
        }
    }

    let words = adj[0].len();
    let mut cand = vec![u64::MAX; words];
    let spare = words * 64 - n;
    if spare > 0 {
        cand[words - 1] &= u64::MAX >> spare;
    }
    let mut max_clique = 0u64;
    brute_max_clique(&adj, &cand, 0, &mut max_clique);

    BruteStatistics { edge_count, max_degree, max_component, max_clique, triangle_count }
}

/// Event membership evaluated from brute-force statistics (thresholds are
/// restated here on purpose, independent of the incremental path).
pub fn brute_in_event(stats: &BruteStatistics, spec: EventSpec) -> bool {
    match spec.kind {
        EventKind::EdgeCount => stats.edge_count <= spec.ell,
        EventKind::MaxDegree => stats.max_degree <= spec.ell,
        EventKind::MaxComponent => stats.max_component <= spec.ell.saturating_add(1),
        EventKind::MaxClique => stats.max_clique <= spec.ell.saturating_add(1),
        EventKind::TriangleCount => stats.triangle_count <= spec.ell,
    }
}

// ---------------------------------------------------------------------------
// Brute-force p_n
// ---------------------------------------------------------------------------

/// Plain-uniform Monte Carlo estimate of `p_n`, the probability that `n` iid
/// uniform points satisfy the event. No blocking, no weighting, no shared
/// statistic code.
pub fn brute_force_pn(
    w: &Window,
    spec: EventSpec,
    n: usize,
    trials: u64,
    rng: &mut RngStream,
) -> Result<OracleResult> {
    if trials < 10_000 {
        return Err(Error::InvalidArgument("brute force needs at least 10^4 trials".into()));
    }
    let dim = w.dim();
    let mut points = Vec::with_capacity(n * dim);
    let mut hits = 0u64;
    for _ in 0..trials {
        points.clear();
        for _ in 0..n * dim {
            points.push(rng.uniform01() * w.side());
        }
        let stats = brute_force_statistics(&points, dim);
        if brute_in_event(&stats, spec) {
            hits += 1;
        }
    }
    let value = hits as f64 / trials as f64;
    let std_err = (value * (1.0 - value) / trials as f64).sqrt();
    Ok(OracleResult { value, method: OracleMethod::BruteForce, trials, std_err })
}

// ---------------------------------------------------------------------------
// Blocking-soundness probes
// ---------------------------------------------------------------------------

/// Outcome of a soundness probe run.
#[derive(Debug, Clone, Copy, Default)]
pub struct SoundnessReport {
    /// Probes where a point inside a blocked cell failed to force an exit.
    pub violations: u64,
    pub probes: u64,
    pub trials: u64,
}

/// Per-configuration oracle view used to judge a probe without touching the
/// incremental bookkeeping: positions, adjacency, degrees, and component
/// labels recomputed from scratch.
struct ProbeView {
    dim: usize,
    points: Vec<f64>,
    adj: Vec<Vec<u64>>,
    degrees: Vec<u64>,
    comp_label: Vec<u32>,
    comp_size: Vec<u64>,
    stats: BruteStatistics,
}

impl ProbeView {
    fn build(points: &[f64], dim: usize) -> Self {
        let n = points.len() / dim;
        let adj = adjacency_bitsets(points, dim);
        let degrees: Vec<u64> =
            adj.iter().map(|row| row.iter().map(|w| w.count_ones() as u64).sum()).collect();
        let mut comp_label = vec![u32::MAX; n];
        let mut comp_size = Vec::new();
        let mut queue = Vec::new();
        for start in 0..n {
            if comp_label[start] != u32::MAX {
                continue;
            }
            let label = comp_size.len() as u32;
            comp_label[start] = label;
            queue.clear();
            queue.push(start);
            let mut size = 0u64;
            while let Some(i) = queue.pop() {
                size += 1;
                for (w, word) in adj[i].iter().enumerate() {
                    let mut rest = *word;
                    while rest != 0 {
                        let j = w * 64 + rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        if comp_label[j] == u32::MAX {
                            comp_label[j] = label;
                            queue.push(j);
                        }
                    }
                }
            }
            comp_size.push(size);
        }
        let stats = brute_force_statistics(points, dim);
        Self { dim, points: points.to_vec(), adj, degrees, comp_label, comp_size, stats }
    }

    /// Would appending `x` leave the event? Evaluated from scratch data only.
    fn exits_event(&self, x: &[f64], spec: EventSpec) -> bool {
        let n = self.points.len() / self.dim;
        let mut nb = Vec::new();
        for i in 0..n {
            let row = &self.points[i * self.dim..(i + 1) * self.dim];
            let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > 0.0 && d2 <= 1.0 {
                nb.push(i);
            }
        }
        match spec.kind {
            EventKind::EdgeCount => self.stats.edge_count + nb.len() as u64 > spec.ell,
            EventKind::MaxDegree => {
                let mut md = nb.len() as u64;
                for &i in &nb {
                    md = md.max(self.degrees[i] + 1);
                }
                md.max(self.stats.max_degree) > spec.ell
            }
            EventKind::MaxComponent => {
                let mut labels: Vec<u32> = nb.iter().map(|&i| self.comp_label[i]).collect();
                labels.sort_unstable();
                labels.dedup();
                let merged: u64 =
                    1 + labels.iter().map(|&l| self.comp_size[l as usize]).sum::<u64>();
                merged.max(self.stats.max_component) > spec.ell.saturating_add(1)
            }
            EventKind::MaxClique => {
                // Largest clique through x: 1 + max clique of its neighbors.
                let m = nb.len();
                let words = m.div_ceil(64).max(1);
                let mut sub = vec![vec![0u64; words]; m];
                for a in 0..m {
                    for b in a + 1..m {
                        let (i, j) = (nb[a], nb[b]);
                        if self.adj[i][j / 64] >> (j % 64) & 1 == 1 {
                            sub[a][b / 64] |= 1 << (b % 64);
                            sub[b][a / 64] |= 1 << (a % 64);
                        }
                    }
                }
                let mut cand = vec![u64::MAX; words];
                let spare = words * 64 - m;
                if spare > 0 && m > 0 {
                    cand[words - 1] &= u64::MAX >> spare;
                }
                let mut best = 0u64;
                if m > 0 {
                    brute_max_clique(&sub, &cand, 0, &mut best);
                }
                (1 + best).max(self.stats.max_clique) > spec.ell.saturating_add(1)
            }
            EventKind::TriangleCount => {
                let mut new_triangles = 0u64;
                for a in 0..nb.len() {
                    for b in a + 1..nb.len() {
                        let (i, j) = (nb[a], nb[b]);
                        if self.adj[i][j / 64] >> (j % 64) & 1 == 1 {
                            new_triangles += 1;
                        }
                    }
                }
                self.stats.triangle_count + new_triangles > spec.ell
            }
        }
    }
}

/// Runs importance-sampling trials and, at random insertion steps, probes
/// points uniformly inside currently blocked cells. Each probe must force an
/// exit from the event; the check is made with from-scratch oracle data, and
/// one probe per step is additionally replayed through a cloned `GraphState`,
/// with any disagreement counted as a violation.
pub fn probe_blocking_soundness(
    cfg: &TrialConfig,
    trials: u64,
    probes_per_state: u32,
    rng: &mut RngStream,
) -> Result<SoundnessReport> {
    let Some(k) = cfg.grid_k else {
        return Err(Error::InvalidArgument("soundness probing requires a grid resolution".into()));
    };
    let mut grid = GridBlocker::new(&cfg.window, k, cfg.event)?;
    let mut state = GraphState::new(cfg.window, cfg.event);
    let mut report = SoundnessReport { trials, ..Default::default() };
    let mut point = Vec::new();
    let mut probe = Vec::new();

    for _ in 0..trials {
        grid.reset();
        state.reset();
        for _ in 1..=cfg.poisson.n_max() {
            if grid.free_cells() == 0 {
                break;
            }
            if !grid.sample_free_point_into(rng, &mut point) {
                break;
            }
            let u = state.add_point(&point).expect("free-cell sample is inside the window");
            if !u.still_in_a {
                break;
            }
            grid.note_insertion(&mut state);

            let blocked = grid.blocked_cell_ids();
            if blocked.is_empty() || rng.uniform01() < 0.5 {
                continue;
            }
            // Oracle snapshot of the current configuration.
            let dim = cfg.window.dim();
            let mut flat = Vec::with_capacity(state.len() * dim);
            for i in 0..state.len() {
                flat.extend_from_slice(state.point(i));
            }
            let view = ProbeView::build(&flat, dim);
            for p in 0..probes_per_state {
                let cell = blocked[rng.index(blocked.len())];
                grid.sample_point_in_cell_into(cell, rng, &mut probe);
                report.probes += 1;
                let oracle_exits = view.exits_event(&probe, cfg.event);
                if !oracle_exits {
                    report.violations += 1;
                }
                if p == 0 {
                    // Cross-check the incremental path on a cloned state.
                    let mut clone = state.clone();
                    let incr_exits = !clone
                        .add_point(&probe)
                        .expect("probe point is inside the window")
                        .still_in_a;
                    if incr_exits != oracle_exits {
                        report.violations += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Fault injection
// ---------------------------------------------------------------------------

/// Importance-sampling trial with a deliberately unsound blocker: after each
/// insertion, `extra_fraction` of the remaining free cells are blocked at
/// random and silently folded into the likelihood ratio. The sampler then
/// skips regions that still contribute probability mass, biasing the value
/// low. Soundness probes of the rule-derived cells stay green, so only the
/// cross-estimator agreement check can expose this; the verification command
/// uses it to demonstrate that sensitivity.
pub fn run_is_trial_with_unsound_blocking(
    cfg: &TrialConfig,
    rng: &mut RngStream,
    extra_fraction: f64,
) -> Result<f64> {
    let Some(k) = cfg.grid_k else {
        return Err(Error::InvalidArgument("importance sampling requires a grid".into()));
    };
    let mut grid = GridBlocker::new(&cfg.window, k, cfg.event)?;
    let mut state = GraphState::new(cfg.window, cfg.event);
    grid.reset();
    let table = &cfg.poisson;
    let mut l = 1.0f64;
    let mut value = table.pmf(0);
    let mut point = Vec::new();
    for n in 1..=table.n_max() {
        l *= grid.likelihood_factor();
        if grid.free_cells() == 0 || !grid.sample_free_point_into(rng, &mut point) {
            break;
        }
        let u = state.add_point(&point).expect("free-cell sample is inside the window");
        if !u.still_in_a {
            break;
        }
        value += table.pmf(n) * l;
        grid.note_insertion(&mut state);
        let extra = ((grid.free_cells() as f64) * extra_fraction) as usize;
        for _ in 0..extra {
            if grid.free_cells() == 0 {
                break;
            }
            let cell = grid.free_cell_ids()[rng.index(grid.free_cells())];
            grid.block_cell(cell);
        }
    }
    Ok(value)
}
