//! Sampling window geometry and the intensity/rate conversion.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use statrs::function::gamma::ln_gamma;

/// The cubic sampling window `[0, lambda]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    dim: usize,
    lambda: f64,
}

impl Window {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("window dimension must be >= 1".into()));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "window side length must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self { dim, lambda })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.lambda
    }

    pub fn volume(&self) -> f64 {
        self.lambda.powi(self.dim as i32)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && p.iter().all(|&x| (0.0..=self.lambda).contains(&x))
    }

    /// Appends one point, each coordinate independently uniform on
    /// `[0, lambda)`, to `out`.
    pub fn sample_point_into(&self, rng: &mut RngStream, out: &mut Vec<f64>) {
        for _ in 0..self.dim {
            out.push(rng.uniform01() * self.lambda);
        }
    }

    pub fn sample_point(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.dim);
        self.sample_point_into(rng, &mut p);
        p
    }
}

/// Expected node count `beta = kappa * lambda^d` of the point process on `w`.
pub fn intensity_to_beta(kappa: f64, w: &Window) -> Result<f64> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "intensity must be positive and finite, got {kappa}"
        )));
    }
    Ok(kappa * w.volume())
}

/// Volume of the d-dimensional Euclidean unit ball, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let half_d = d as f64 / 2.0;
    Ok((half_d * std::f64::consts::PI.ln() - ln_gamma(half_d + 1.0)).exp())
}
