//! The three unbiased estimators and the adaptive sample-mean driver.
//!
//! - Naive Monte Carlo: indicator of the event on a full Poisson draw.
//! - Conditional Monte Carlo: the Poisson cdf at the largest prefix of a
//!   uniform point stream still inside the event.
//! - Importance sampling: points are drawn uniformly over the unblocked part
//!   of the window; the running product of free-volume fractions is the
//!   likelihood ratio that keeps the estimator unbiased.
//!
//! Trials are embarrassingly parallel. Trial `i` draws only from the stream
//! `(base_seed, i)` and batch results are reduced by index-ordered compensated
//! summation, so parallel, serial, and replayed runs agree bit for bit.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::EventSpec;
use crate::graph::GraphState;
use crate::grid::GridBlocker;
use crate::poisson::PoissonTable;
use crate::rng::RngStream;
use crate::window::{intensity_to_beta, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Naive,
    Conditional,
    ImportanceSampling,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Naive => "nmc",
            EstimatorKind::Conditional => "cmc",
            EstimatorKind::ImportanceSampling => "is",
        })
    }
}

/// Everything one trial needs: window, intensity, event, optional grid
/// resolution, and the truncated Poisson table for `beta = kappa * lambda^d`.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub window: Window,
    pub kappa: f64,
    pub event: EventSpec,
    /// Cells per axis for importance sampling; `None` disables the grid.
    pub grid_k: Option<usize>,
    pub poisson: PoissonTable,
}

impl TrialConfig {
    pub fn new(window: Window, kappa: f64, event: EventSpec, grid_k: Option<usize>) -> Result<Self> {
        let beta = intensity_to_beta(kappa, &window)?;
        if let Some(k) = grid_k {
            if k == 0 {
                return Err(Error::InvalidArgument("grid resolution must be >= 1".into()));
            }
        }
        let poisson = PoissonTable::with_default_tail(beta)?;
        Ok(Self { window, kappa, event, grid_k, poisson })
    }

    pub fn beta(&self) -> f64 {
        self.poisson.beta()
    }
}

/// Result of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Estimator value: {0,1} for naive, [0,1] otherwise.
    pub value: f64,
    /// Points generated by the trial (the prefix length M for conditional
    /// Monte Carlo; the stop index for importance sampling).
    pub points_generated: usize,
    /// Likelihood-ratio trace `L_0 = 1, L_1, ...` while inside the event
    /// (importance sampling with tracing only).
    pub l_trace: Option<Vec<f64>>,
    /// Blocked volume after each in-event insertion (tracing only).
    pub blocked_volume_trace: Option<Vec<f64>>,
}

impl TrialOutcome {
    fn plain(value: f64, points_generated: usize) -> Self {
        Self { value, points_generated, l_trace: None, blocked_volume_trace: None }
    }
}

/// Reusable per-worker trial executor. Holds the graph state and (for
/// importance sampling) the blocking grid so per-trial setup is O(points),
/// not O(K^d).
pub struct TrialRunner<'a> {
    cfg: &'a TrialConfig,
    state: GraphState,
    grid: Option<GridBlocker>,
    point: Vec<f64>,
}

impl<'a> TrialRunner<'a> {
    pub fn new(cfg: &'a TrialConfig) -> Result<Self> {
        let state = GraphState::new(cfg.window, cfg.event);
        let grid = match cfg.grid_k {
            Some(k) => Some(GridBlocker::new(&cfg.window, k, cfg.event)?),
            None => None,
        };
        Ok(Self { cfg, state, grid, point: Vec::new() })
    }

    /// Runs one trial of the given kind on stream `(base_seed, trial_id)`.
    pub fn run(&mut self, kind: EstimatorKind, base_seed: u64, trial_id: u64) -> TrialOutcome {
        let mut rng = RngStream::new(base_seed, trial_id);
        self.run_with_rng(kind, &mut rng, false)
    }

    /// As `run`, additionally recording the likelihood and blocked-volume
    /// traces for importance sampling.
    pub fn run_traced(
        &mut self,
        kind: EstimatorKind,
        base_seed: u64,
        trial_id: u64,
    ) -> TrialOutcome {
        let mut rng = RngStream::new(base_seed, trial_id);
        self.run_with_rng(kind, &mut rng, true)
    }

    pub fn run_with_rng(
        &mut self,
        kind: EstimatorKind,
        rng: &mut RngStream,
        traced: bool,
    ) -> TrialOutcome {
        match kind {
            EstimatorKind::Naive => self.naive(rng),
            EstimatorKind::Conditional => self.conditional(rng),
            EstimatorKind::ImportanceSampling => self.importance(rng, traced),
        }
    }

    fn naive(&mut self, rng: &mut RngStream) -> TrialOutcome {
        self.state.reset();
        let n = self.cfg.poisson.sample(rng);
        for i in 0..n {
            self.point.clear();
            self.cfg.window.sample_point_into(rng, &mut self.point);
            let u = self
                .state
                .add_point(&self.point)
                .expect("sampled point lies inside the window");
            if !u.still_in_a {
                // Early exit: the indicator is already decided.
                return TrialOutcome::plain(0.0, i + 1);
            }
        }
        TrialOutcome::plain(1.0, n)
    }

    fn conditional(&mut self, rng: &mut RngStream) -> TrialOutcome {
        self.state.reset();
        let n_max = self.cfg.poisson.n_max();
        for n in 1..=n_max {
            self.point.clear();
            self.cfg.window.sample_point_into(rng, &mut self.point);
            let u = self
                .state
                .add_point(&self.point)
                .expect("sampled point lies inside the window");
            if !u.still_in_a {
                let m = n - 1;
                return TrialOutcome::plain(self.cfg.poisson.cdf(m), m);
            }
        }
        // The prefix never left the event up to the truncation cap.
        TrialOutcome::plain(self.cfg.poisson.cdf(n_max), n_max)
    }

    fn importance(&mut self, rng: &mut RngStream, traced: bool) -> TrialOutcome {
        let grid = self.grid.as_mut().expect("importance sampling requires grid_k");
        grid.reset();
        self.state.reset();
        let table = &self.cfg.poisson;
        let n_max = table.n_max();

        let mut l = 1.0f64;
        let mut value = table.pmf(0); // q_0 * L_0 with L_0 = 1
        let mut l_trace = traced.then(|| vec![1.0f64]);
        let mut points = 0usize;

        for n in 1..=n_max {
            // The likelihood factor for point n uses the blocking region
            // built from the first n - 1 points.
            l *= grid.likelihood_factor();
            if grid.free_cells() == 0 {
                // Fully blocked window: every further factor is zero.
                break;
            }
            if !grid.sample_free_point_into(rng, &mut self.point) {
                break;
            }
            points = n;
            let u = self
                .state
                .add_point(&self.point)
                .expect("free-cell sample lies inside the window");
            if !u.still_in_a {
                // The indicator kills this and all later terms.
                break;
            }
            value += table.pmf(n) * l;
            grid.note_insertion(&mut self.state);
            if let Some(t) = l_trace.as_mut() {
                t.push(l);
            }
        }

        debug_assert!(value <= table.cdf(n_max) + 1e-12);
        TrialOutcome {
            value,
            points_generated: points,
            l_trace,
            blocked_volume_trace: traced.then(|| grid.blocked_volume_trace().to_vec()),
        }
    }

    /// Indicator trial with the point count pinned to `n` instead of a
    /// Poisson draw (with a fixed count, conditioning brings no variance
    /// reduction and the conditional estimator coincides with this one).
    pub fn run_fixed_count_naive(&mut self, n: usize, rng: &mut RngStream) -> TrialOutcome {
        self.state.reset();
        for i in 0..n {
            self.point.clear();
            self.cfg.window.sample_point_into(rng, &mut self.point);
            let u = self
                .state
                .add_point(&self.point)
                .expect("sampled point lies inside the window");
            if !u.still_in_a {
                return TrialOutcome::plain(0.0, i + 1);
            }
        }
        TrialOutcome::plain(1.0, n)
    }

    /// Importance-sampling trial with the point count pinned to `n`: the
    /// value is the accumulated likelihood ratio when all `n` points stay in
    /// the event, zero otherwise.
    pub fn run_fixed_count_is(&mut self, n: usize, rng: &mut RngStream) -> TrialOutcome {
        let grid = self.grid.as_mut().expect("importance sampling requires grid_k");
        grid.reset();
        self.state.reset();
        let mut l = 1.0f64;
        for i in 0..n {
            l *= grid.likelihood_factor();
            if grid.free_cells() == 0 || !grid.sample_free_point_into(rng, &mut self.point) {
                return TrialOutcome::plain(0.0, i);
            }
            let u = self
                .state
                .add_point(&self.point)
                .expect("free-cell sample lies inside the window");
            if !u.still_in_a {
                return TrialOutcome::plain(0.0, i + 1);
            }
            grid.note_insertion(&mut self.state);
        }
        TrialOutcome::plain(l, n)
    }
}

/// One-shot naive trial on the given stream.
pub fn run_nmc_trial(cfg: &TrialConfig, rng: &mut RngStream) -> Result<TrialOutcome> {
    Ok(TrialRunner::new(cfg)?.run_with_rng(EstimatorKind::Naive, rng, false))
}

/// One-shot conditional trial on the given stream.
pub fn run_cmc_trial(cfg: &TrialConfig, rng: &mut RngStream) -> Result<TrialOutcome> {
    Ok(TrialRunner::new(cfg)?.run_with_rng(EstimatorKind::Conditional, rng, false))
}

/// One-shot importance-sampling trial on the given stream (requires
/// `cfg.grid_k`).
pub fn run_is_trial(cfg: &TrialConfig, rng: &mut RngStream) -> Result<TrialOutcome> {
    if cfg.grid_k.is_none() {
        return Err(Error::InvalidArgument(
            "importance sampling requires a grid resolution".into(),
        ));
    }
    Ok(TrialRunner::new(cfg)?.run_with_rng(EstimatorKind::ImportanceSampling, rng, false))
}

/// Estimated relative variance of a single sample:
/// `(mean of squares) / mean^2 - 1`.
pub fn relative_variance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("relative variance of an empty sample".into()));
    }
    let m = values.len() as f64;
    let mean: f64 = values.iter().sum::<f64>() / m;
    if mean <= 0.0 {
        return Err(Error::Undefined("relative variance of a zero-mean sample".into()));
    }
    let mean_sq: f64 = values.iter().map(|v| v * v).sum::<f64>() / m;
    Ok(mean_sq / (mean * mean) - 1.0)
}

/// Adaptive stopping: how the run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateStatus {
    /// `rv / m` fell below the target.
    Converged,
    /// Sample cap reached before the target.
    MaxSamples,
    /// Every sample was zero at the cap; mean and rv are undefined
    /// (meaningful for naive estimation of tiny probabilities).
    NoHit,
}

impl fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateStatus::Converged => "converged",
            EstimateStatus::MaxSamples => "max_samples",
            EstimateStatus::NoHit => "no_hit",
        })
    }
}

/// Adaptive-driver parameters. The stop rule is `rv / m <= target_rv_of_mean`
/// evaluated after each batch once `m_min` samples exist.
#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub target_rv_of_mean: f64,
    pub m_min: u64,
    pub m_max: u64,
    pub batch_size: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { target_rv_of_mean: 1e-3, m_min: 1000, m_max: 100_000_000, batch_size: 1000 }
    }
}

impl EstimateOptions {
    pub fn with_target(target_rv_of_mean: f64) -> Self {
        Self { target_rv_of_mean, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !self.target_rv_of_mean.is_finite() || self.target_rv_of_mean <= 0.0 {
            return Err(Error::InvalidArgument("target relative variance must be > 0".into()));
        }
        if self.m_min < 100 {
            return Err(Error::InvalidArgument("m_min must be at least 100".into()));
        }
        if self.m_max < self.m_min {
            return Err(Error::InvalidArgument("m_max must be >= m_min".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Adaptive sample mean with relative-variance reporting.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub estimator: EstimatorKind,
    pub grid_k: Option<usize>,
    /// Sample mean of the trial values.
    pub mean: f64,
    /// Estimated relative variance of a single sample; `None` when no sample
    /// hit the event.
    pub rv: Option<f64>,
    /// Delta-method standard error of `rv`.
    pub rv_se: Option<f64>,
    pub m: u64,
    /// `1.96 * mean * sqrt(rv / m)` for a positive mean.
    pub half_width_95: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Base seed: replaying it reproduces the mean bit for bit.
    pub seed: u64,
    /// Truncation bias bound inherited from the Poisson table.
    pub tail_bound: f64,
    pub target_rv_of_mean: f64,
    pub status: EstimateStatus,
    pub wall_ms: f64,
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Runs trials in batches until the relative variance of the sample mean
/// drops below the target or the sample cap is hit.
pub fn estimate(
    cfg: &TrialConfig,
    kind: EstimatorKind,
    opts: &EstimateOptions,
    base_seed: u64,
) -> Result<EstimateReport> {
    opts.validate()?;
    if kind == EstimatorKind::ImportanceSampling && cfg.grid_k.is_none() {
        return Err(Error::InvalidArgument(
            "importance sampling requires a grid resolution".into(),
        ));
    }
    // Surface a construction error (bad grid) before spawning workers.
    TrialRunner::new(cfg)?;

    let start = Instant::now();
    let mut s1 = Kahan::default();
    let mut s2 = Kahan::default();
    let mut s3 = Kahan::default();
    let mut s4 = Kahan::default();
    let mut nonzero = 0u64;
    let mut m = 0u64;
    let mut status = EstimateStatus::MaxSamples;

    while m < opts.m_max {
        let batch = opts.batch_size.min(opts.m_max - m);
        let values: Vec<f64> = (m..m + batch)
            .into_par_iter()
            .map_init(
                || TrialRunner::new(cfg).expect("validated config"),
                |runner, i| runner.run(kind, base_seed, i).value,
            )
            .collect();
        for v in values {
            if v != 0.0 {
                nonzero += 1;
            }
            s1.add(v);
            let v2 = v * v;
            s2.add(v2);
            s3.add(v2 * v);
            s4.add(v2 * v2);
        }
        m += batch;
        if m >= opts.m_min && nonzero > 0 {
            let mean = s1.sum / m as f64;
            let rv = (s2.sum / m as f64) / (mean * mean) - 1.0;
            if rv / m as f64 <= opts.target_rv_of_mean {
                status = EstimateStatus::Converged;
                break;
            }
        }
    }

    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mf = m as f64;
    if nonzero == 0 {
        // One-sided upper confidence bound with zero successes.
        let ci_high = 1.0 - 0.05f64.powf(1.0 / mf);
        return Ok(EstimateReport {
            estimator: kind,
            grid_k: cfg.grid_k,
            mean: 0.0,
            rv: None,
            rv_se: None,
            m,
            half_width_95: ci_high,
            ci_low: 0.0,
            ci_high,
            seed: base_seed,
            tail_bound: cfg.poisson.tail_bound(),
            target_rv_of_mean: opts.target_rv_of_mean,
            status: EstimateStatus::NoHit,
            wall_ms,
        });
    }

    let mu1 = s1.sum / mf;
    let mu2 = s2.sum / mf;
    let mu3 = s3.sum / mf;
    let mu4 = s4.sum / mf;
    let rv = mu2 / (mu1 * mu1) - 1.0;
    // Delta method for g(a, b) = b / a^2 - 1 at (mean, mean of squares).
    let var_y = (mu2 - mu1 * mu1).max(0.0);
    let var_y2 = (mu4 - mu2 * mu2).max(0.0);
    let cov = mu3 - mu1 * mu2;
    let da = -2.0 * mu2 / (mu1 * mu1 * mu1);
    let db = 1.0 / (mu1 * mu1);
    let rv_var = (da * da * var_y + db * db * var_y2 + 2.0 * da * db * cov) / mf;
    let rv_se = rv_var.max(0.0).sqrt();

    let half_width_95 = 1.96 * mu1 * (rv.max(0.0) / mf).sqrt();
    Ok(EstimateReport {
        estimator: kind,
        grid_k: cfg.grid_k,
        mean: mu1,
        rv: Some(rv),
        rv_se: Some(rv_se),
        m,
        half_width_95,
        ci_low: (mu1 - half_width_95).max(0.0),
        ci_high: (mu1 + half_width_95).min(1.0),
        seed: base_seed,
        tail_bound: cfg.poisson.tail_bound(),
        target_rv_of_mean: opts.target_rv_of_mean,
        status,
        wall_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{EventKind, EventSpec};

    fn cfg(kappa: f64, ell: u64, grid: Option<usize>) -> TrialConfig {
        TrialConfig::new(
            Window::new(2, 10.0).unwrap(),
            kappa,
            EventSpec::new(EventKind::EdgeCount, ell),
            grid,
        )
        .unwrap()
    }

    #[test]
    fn relative_variance_examples() {
        assert_eq!(relative_variance(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((relative_variance(&[0.0, 0.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_variance(&[]).is_err());
        assert!(relative_variance(&[0.0, 0.0]).is_err());
        // Bernoulli(p): rv -> (1 - p) / p.
        let p = 0.2;
        let mut rng = RngStream::new(8, 1);
        let vals: Vec<f64> =
            (0..200_000).map(|_| if rng.uniform01() < p { 1.0 } else { 0.0 }).collect();
        let rv = relative_variance(&vals).unwrap();
        assert!((rv - (1.0 - p) / p).abs() < 0.2, "rv={rv}");
    }

    #[test]
    fn naive_trial_with_huge_threshold_is_always_one() {
        let c = cfg(0.3, u64::MAX, None);
        let mut runner = TrialRunner::new(&c).unwrap();
        for i in 0..50 {
            assert_eq!(runner.run(EstimatorKind::Naive, 3, i).value, 1.0);
        }
    }

    #[test]
    fn naive_empty_draw_is_in_the_event() {
        let c = cfg(0.01, 0, None); // beta = 1: empty draws are common
        let mut runner = TrialRunner::new(&c).unwrap();
        let mut saw_empty = false;
        for i in 0..5000 {
            let out = runner.run(EstimatorKind::Naive, 11, i);
            assert!(out.value == 0.0 || out.value == 1.0);
            if out.points_generated == 0 {
                assert_eq!(out.value, 1.0);
                saw_empty = true;
            }
        }
        assert!(saw_empty, "beta = 1 should produce empty draws");
    }

    #[test]
    fn conditional_value_is_poisson_cdf_of_prefix_length() {
        let c = cfg(0.2, 0, None);
        let mut runner = TrialRunner::new(&c).unwrap();
        for i in 0..200 {
            let out = runner.run(EstimatorKind::Conditional, 21, i);
            assert_eq!(out.value, c.poisson.cdf(out.points_generated));
            assert!((0.0..=1.0).contains(&out.value));
        }
    }

    #[test]
    fn importance_without_any_blocking_returns_total_mass() {
        // Threshold so large that the blocking rule never fires and the
        // event never fails: the trial value collapses to cdf(n_max).
        let c = cfg(0.05, u64::MAX, Some(20));
        let mut runner = TrialRunner::new(&c).unwrap();
        let out = runner.run(EstimatorKind::ImportanceSampling, 5, 0);
        assert!((out.value - c.poisson.cdf(c.poisson.n_max())).abs() < 1e-12);
        assert_eq!(out.points_generated, c.poisson.n_max());
    }

    #[test]
    fn importance_l_trace_is_monotone_from_one() {
        let c = cfg(0.3, 0, Some(100));
        let mut runner = TrialRunner::new(&c).unwrap();
        for i in 0..50 {
            let out = runner.run_traced(EstimatorKind::ImportanceSampling, 13, i);
            let trace = out.l_trace.unwrap();
            assert_eq!(trace[0], 1.0);
            let mut prev = 1.0;
            for &l in &trace {
                assert!((0.0..=1.0).contains(&l));
                assert!(l <= prev + 1e-15);
                prev = l;
            }
            let bv = out.blocked_volume_trace.unwrap();
            assert_eq!(bv.len(), trace.len() - 1);
            for w in bv.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn trials_replay_bit_for_bit() {
        let c = cfg(0.25, 1, Some(50));
        let mut r1 = TrialRunner::new(&c).unwrap();
        let mut r2 = TrialRunner::new(&c).unwrap();
        for kind in [
            EstimatorKind::Naive,
            EstimatorKind::Conditional,
            EstimatorKind::ImportanceSampling,
        ] {
            for i in 0..40 {
                let a = r1.run(kind, 777, i);
                let b = r2.run(kind, 777, i);
                assert_eq!(a.value.to_bits(), b.value.to_bits(), "{kind} trial {i}");
                assert_eq!(a.points_generated, b.points_generated);
            }
        }
    }

    #[test]
    fn trial_value_is_independent_of_prior_trials_on_a_runner() {
        // A reused runner must leave no residue: the same stream yields the
        // same value whether or not other trials ran first.
        let c = cfg(0.3, 0, Some(100));
        let mut fresh = TrialRunner::new(&c).unwrap();
        let expected = fresh.run(EstimatorKind::ImportanceSampling, 555, 9);
        let mut used = TrialRunner::new(&c).unwrap();
        for i in 0..9 {
            used.run(EstimatorKind::ImportanceSampling, 555, i);
        }
        let got = used.run(EstimatorKind::ImportanceSampling, 555, 9);
        assert_eq!(expected.value.to_bits(), got.value.to_bits());
        assert_eq!(expected.points_generated, got.points_generated);
    }

    #[test]
    fn fixed_count_estimators_match_in_mean() {
        // With N pinned, the conditional estimator equals the naive one and
        // the importance-sampling value is the indicator times the ratio;
        // all are unbiased for p_n.
        let c = cfg(0.2, 0, Some(50));
        let mut runner = TrialRunner::new(&c).unwrap();
        let n = 3usize;
        let trials = 40_000u64;
        let (mut sum_nv, mut sum_is, mut sq_nv, mut sq_is) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..trials {
            let mut rng = RngStream::new(31, i);
            let v = runner.run_fixed_count_naive(n, &mut rng).value;
            sum_nv += v;
            sq_nv += v * v;
            let mut rng = RngStream::new(32, i);
            let v = runner.run_fixed_count_is(n, &mut rng).value;
            sum_is += v;
            sq_is += v * v;
        }
        let t = trials as f64;
        let (m_nv, m_is) = (sum_nv / t, sum_is / t);
        let var_nv = (sq_nv / t - m_nv * m_nv).max(0.0);
        let var_is = (sq_is / t - m_is * m_is).max(0.0);
        let se = ((var_nv + var_is) / t).sqrt();
        assert!(
            (m_nv - m_is).abs() < 4.0 * se,
            "fixed-count means differ: {m_nv} vs {m_is} (se {se})"
        );
        // The ratio-weighted trial cannot have larger variance.
        assert!(var_is <= var_nv + 4.0 * se);
    }

    #[test]
    fn estimate_stops_at_m_min_for_constant_samples() {
        let c = cfg(0.3, u64::MAX, None);
        let opts = EstimateOptions::default();
        let rep = estimate(&c, EstimatorKind::Naive, &opts, 5).unwrap();
        assert_eq!(rep.m, opts.m_min);
        assert_eq!(rep.mean, 1.0);
        assert_eq!(rep.rv, Some(0.0));
        assert_eq!(rep.status, EstimateStatus::Converged);
        assert_eq!(rep.half_width_95, 0.0);
    }

    #[test]
    fn estimate_reports_no_hit_for_an_unreachable_event() {
        // beta = 100 with no edges allowed: probability ~ 1e-40.
        let c = cfg(1.0, 0, None);
        let opts = EstimateOptions { m_max: 2000, ..EstimateOptions::default() };
        let rep = estimate(&c, EstimatorKind::Naive, &opts, 1).unwrap();
        assert_eq!(rep.status, EstimateStatus::NoHit);
        assert_eq!(rep.mean, 0.0);
        assert!(rep.rv.is_none());
        // Zero-success upper bound, roughly 3/m.
        assert!(rep.ci_high > 0.0 && rep.ci_high < 3.5 / 2000.0);
    }

    #[test]
    fn estimate_is_deterministic_for_a_seed() {
        let c = cfg(0.2, 0, Some(50));
        let opts = EstimateOptions { target_rv_of_mean: 0.01, ..EstimateOptions::default() };
        let a = estimate(&c, EstimatorKind::ImportanceSampling, &opts, 99).unwrap();
        let b = estimate(&c, EstimatorKind::ImportanceSampling, &opts, 99).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.m, b.m);
        assert_eq!(a.rv.unwrap().to_bits(), b.rv.unwrap().to_bits());
    }

    #[test]
    fn estimate_validates_options() {
        let c = cfg(0.2, 0, None);
        let bad = EstimateOptions { m_min: 10, ..EstimateOptions::default() };
        assert!(estimate(&c, EstimatorKind::Naive, &bad, 0).is_err());
        let bad = EstimateOptions { target_rv_of_mean: 0.0, ..EstimateOptions::default() };
        assert!(estimate(&c, EstimatorKind::Naive, &bad, 0).is_err());
        assert!(estimate(&c, EstimatorKind::ImportanceSampling, &EstimateOptions::default(), 0)
            .is_err());
    }
}
