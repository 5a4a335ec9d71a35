//! Distance between the rescaled critical magnetization law and its limit
//! density `∝ exp(-x⁴/12 - α x²/2)`.

use cwglauber::chain::{build_kernel, stationary};
use cwglauber::quad::adaptive_simpson;
use cwglauber::ModelParams64;

use crate::error::{HarnessError, Result};

pub const MIN_LIMIT_LAW_SITES: usize = 16;

/// `β = 1 - α/√n`.
pub fn window_beta(n: usize, alpha: f64) -> f64 {
    1.0 - alpha / (n as f64).sqrt()
}

/// Normalized limit density `x ↦ f(x)` and the support used for its integral.
pub struct LimitDensity {
    alpha: f64,
    log_peak: f64,
    log_norm: f64,
    pub half_width: f64,
}

impl LimitDensity {
    pub fn new(alpha: f64) -> Self {
        let x2 = (-3.0 * alpha).max(0.0);
        let log_peak = -x2 * x2 / 12.0 - alpha * x2 / 2.0;
        let half_width = (-6.0 * alpha).max(0.0).sqrt() + 8.0;
        let mut d = Self {
            alpha,
            log_peak,
            log_norm: 0.0,
            half_width,
        };
        // two halves so the quadrature sees the even integrand's peak structure
        let z = 2.0 * adaptive_simpson(|x| d.unnormalized(x), 0.0, half_width, 1e-12, 0.0);
        d.log_norm = z.ln();
        d
    }

    fn unnormalized(&self, x: f64) -> f64 {
        let x2 = x * x;
        (-x2 * x2 / 12.0 - self.alpha * x2 / 2.0 - self.log_peak).exp()
    }

    /// `log ∫ exp(-x⁴/12 - αx²/2) dx`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_norm + self.log_peak
    }

    pub fn density(&self, x: f64) -> f64 {
        self.unnormalized(x) / self.log_norm.exp()
    }

    pub fn cell_mass(&self, a: f64, b: f64) -> f64 {
        let z = self.log_norm.exp();
        adaptive_simpson(|x| self.unnormalized(x), a, b, 1e-10, 1e-300) / z
    }
}

/// `Σ_k |π_k - F(cell_k)|` plus the density mass outside every cell, where
/// state `k` sits at `x_k = s_k n^{1/4}` with a cell of width `2 n^{-3/4}`.
pub fn l1_to_density(probs: &[f64], n: usize, density: &LimitDensity) -> f64 {
    let nf = n as f64;
    let scale = nf.powf(0.25);
    let half = nf.powf(-0.75);
    let mut covered = 0.0;
    let mut dist = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        let x = (2.0 * k as f64 - nf) / nf * scale;
        let f = density.cell_mass(x - half, x + half);
        covered += f;
        dist += (p - f).abs();
    }
    dist + (1.0 - covered).max(0.0)
}

/// L1 distance between the exact stationary law at `β = 1 - α/√n`, rescaled
/// by `n^{1/4}`, and the limit density integrated over matching cells.
pub fn limit_law_distance(n: usize, alpha: f64) -> Result<f64> {
    if n < MIN_LIMIT_LAW_SITES {
        return Err(HarnessError::Invalid(format!("n = {n}, need n >= {MIN_LIMIT_LAW_SITES}")));
    }
    if !alpha.is_finite() {
        return Err(HarnessError::Invalid(format!("alpha = {alpha}")));
    }
    let beta = window_beta(n, alpha);
    if beta < 0.0 {
        return Err(HarnessError::Invalid(format!(
            "alpha = {alpha} gives beta = {beta} < 0 at n = {n}"
        )));
    }
    let chain = build_kernel(&ModelParams64::new(n, beta)?);
    let pi = stationary(&chain)?;
    Ok(l1_to_density(pi.probs(), n, &LimitDensity::new(alpha)))
}
