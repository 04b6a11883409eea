//! Truncated Poisson tables in log space.
//!
//! The pmf is built by the recurrence `log q_n = log q_{n-1} + log beta - log n`
//! anchored at `log q_0 = -beta`, which stays finite for rates up to 10^6 where
//! a factorial-based evaluation would overflow. The table is truncated at the
//! first index whose certified upper-tail bound drops below `tail_eps`; all
//! estimators treat larger counts as out of support, introducing a bias below
//! the double-precision resolution of the reported probabilities.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Hard cap on the table length (supports rates up to roughly 1.6e7).
const MAX_TABLE_LEN: usize = 1 << 24;

/// Default truncation: tail mass below 1e-16 is invisible at double precision.
pub const DEFAULT_TAIL_EPS: f64 = 1e-16;

/// Log-space pmf and cdf of a Poisson distribution, truncated at `n_max`.
#[derive(Debug, Clone)]
pub struct PoissonTable {
    beta: f64,
    log_pmf: Vec<f64>,
    /// Normalized linear pmf; dividing by the accurately summed total keeps
    /// the truncated mass at 1 within rounding, where re-exponentiating
    /// shifted logs would round at the magnitude of `|log q|`.
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    tail_bound: f64,
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

impl PoissonTable {
    /// Builds the table for rate `beta`, truncated once the certified
    /// upper-tail bound falls below `tail_eps` (`0 < tail_eps <= 1e-12`).
    pub fn new(beta: f64, tail_eps: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Poisson rate must be positive and finite, got {beta}"
            )));
        }
        if !(tail_eps > 0.0 && tail_eps <= 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "tail bound must be in (0, 1e-12], got {tail_eps}"
            )));
        }
        // The tail certifies only well past the mode; bail out early when the
        // index range cannot fit rather than allocating gigabytes first.
        let rough_n_max = beta + 16.0 * beta.sqrt() + 64.0;
        if rough_n_max >= MAX_TABLE_LEN as f64 {
            return Err(Error::Capacity(format!(
                "rate {beta} needs a table past the supported {MAX_TABLE_LEN} entries"
            )));
        }

        let log_beta = beta.ln();
        let mut log_pmf = Vec::with_capacity(rough_n_max as usize + 1);
        log_pmf.push(-beta);

        let mut n = 0usize;
        let tail_bound = loop {
            // Past the mode the terms decay geometrically with ratio
            // beta/(n+2) < 1, so the tail beyond n is at most
            // q_{n+1} / (1 - beta/(n+2)).
            if (n as f64) >= beta {
                let log_q_next = log_pmf[n] + log_beta - ((n + 1) as f64).ln();
                let ratio = beta / (n + 2) as f64;
                let bound = log_q_next.exp() / (1.0 - ratio);
                if bound < tail_eps {
                    break bound;
                }
            }
            n += 1;
            if n >= MAX_TABLE_LEN {
                return Err(Error::Capacity(format!(
                    "rate {beta} needs a table past the supported {MAX_TABLE_LEN} entries"
                )));
            }
            log_pmf.push(log_pmf[n - 1] + log_beta - (n as f64).ln());
        };

        // The recurrence drifts by ~|log q| ulps, which at large rates puts
        // the raw total noticeably off 1. Renormalizing over the kept range
        // pins the truncated mass to 1 within rounding, which is also the
        // out-of-support reading the estimators give to counts past n_max.
        let raw: Vec<f64> = log_pmf.iter().map(|lq| lq.exp()).collect();
        let mut total = Kahan::default();
        for &q in &raw {
            total.add(q);
        }
        let scale = total.sum;
        let log_total = scale.ln();
        for lq in &mut log_pmf {
            *lq -= log_total;
        }
        let pmf: Vec<f64> = raw.into_iter().map(|q| q / scale).collect();

        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = Kahan::default();
        for &q in &pmf {
            acc.add(q);
            cdf.push(acc.sum.min(1.0));
        }

        Ok(Self { beta, log_pmf, pmf, cdf, tail_bound })
    }

    /// Table with the default 1e-16 truncation rule.
    pub fn with_default_tail(beta: f64) -> Result<Self> {
        Self::new(beta, DEFAULT_TAIL_EPS)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Largest tabulated count; counts beyond it are treated as out of support.
    pub fn n_max(&self) -> usize {
        self.log_pmf.len() - 1
    }

    /// Certified bound on the truncated upper-tail mass.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `q_n`, zero beyond the truncation point.
    #[inline]
    pub fn pmf(&self, n: usize) -> f64 {
        self.pmf.get(n).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn log_pmf(&self, n: usize) -> f64 {
        self.log_pmf.get(n).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// `F_Poi(n)`; saturates at `cdf(n_max)` beyond the truncation point.
    #[inline]
    pub fn cdf(&self, n: usize) -> f64 {
        let i = n.min(self.cdf.len() - 1);
        self.cdf[i]
    }

    /// Draws a Poisson variate by inversion against the tabulated cdf. Exact
    /// within the truncation and identical across platforms, unlike a
    /// library-specific sampler.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform01();
        self.cdf.partition_point(|&c| c <= u).min(self.n_max())
    }

    /// Re-validates the structural invariants (used by the verification
    /// command): monotone normalized cdf, cdf increments matching the pmf,
    /// and the certified tail bound.
    pub fn check_invariants(&self) -> Result<()> {
        let n_max = self.n_max();
        if !(self.cdf[n_max] >= 1.0 - 1e-16 && self.cdf[n_max] <= 1.0) {
            return Err(Error::Undefined(format!(
                "cdf at n_max is {} instead of 1 within the tail bound",
                self.cdf[n_max]
            )));
        }
        let mut prev = 0.0f64;
        for n in 0..=n_max {
            if self.cdf[n] < prev {
                return Err(Error::Undefined(format!("cdf decreases at n = {n}")));
            }
            if (self.cdf[n] - prev - self.pmf[n]).abs() > 1e-14 {
                return Err(Error::Undefined(format!(
                    "cdf increment at n = {n} deviates from the pmf"
                )));
            }
            prev = self.cdf[n];
        }
        if self.tail_bound > DEFAULT_TAIL_EPS.max(1e-12) {
            return Err(Error::Undefined("tail bound above the truncation contract".into()));
        }
        Ok(())
    }
}
