//! The full heat-bath dynamics on `{-1, +1}^n`, for tiny `n`.
//!
//! Configuration `σ` is encoded as a bit mask whose bit `i` is set when
//! `σ(i) = +1`.

use nalgebra::DMatrix;

use super::{SpectralMethod, SpectralReport};
use crate::error::{Error, Result};
use crate::model::{update_probabilities, ModelParams};
use crate::real::log_sum_exp;

/// Largest `n` handled by [`full_dynamics_gap`].
pub const MAX_FULL_SITES: usize = 12;
/// Largest `n` for which the automatic route uses a dense eigensolver.
pub const MAX_DENSE_SITES: usize = 10;
/// Largest `n` handled by [`full_tv_from_allplus`].
pub const MAX_TV_SITES: usize = 10;

const POWER_TOL: f64 = 1e-9;
const POWER_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FullMethod {
    /// Dense up to [`MAX_DENSE_SITES`], power iteration above.
    #[default]
    Auto,
    Dense,
    PowerIteration,
}

/// Heat-bath kernel in sparse form: `flip[σ n + i] = P(σ, σ^i)`.
struct FullKernel {
    n: usize,
    hold: Vec<f64>,
    flip: Vec<f64>,
}

impl FullKernel {
    fn new(params: &ModelParams<f64>) -> Self {
        let n = params.n();
        let states = 1usize << n;
        let nf = n as f64;
        let mut hold = vec![0.0; states];
        let mut flip = vec![0.0; states * n];
        for sigma in 0..states {
            let m = 2 * sigma.count_ones() as i64 - n as i64;
            let mut stay = 1.0;
            for i in 0..n {
                let spin = if sigma >> i & 1 == 1 { 1 } else { -1 };
                let (plus, minus) = update_probabilities((m - spin) as f64 / nf, params.beta());
                let pr = if spin == 1 { minus } else { plus } / nf;
                flip[sigma * n + i] = pr;
                stay -= pr;
            }
            hold[sigma] = stay;
        }
        Self { n, hold, flip }
    }

    fn states(&self) -> usize {
        self.hold.len()
    }

    /// Symmetrized off-diagonal `√(P(σ, σ^i) P(σ^i, σ))`.
    fn sym(&self, sigma: usize, i: usize) -> f64 {
        let tau = sigma ^ (1 << i);
        (self.flip[sigma * self.n + i] * self.flip[tau * self.n + i]).sqrt()
    }

    /// `out = A v` for the symmetrized kernel.
    fn apply_sym(&self, v: &[f64], out: &mut [f64]) {
        for sigma in 0..self.states() {
            let mut s = self.hold[sigma] * v[sigma];
            for i in 0..self.n {
                s += self.sym(sigma, i) * v[sigma ^ (1 << i)];
            }
            out[sigma] = s;
        }
    }

    /// `out = dist · P`.
    fn push_forward(&self, dist: &[f64], out: &mut [f64]) {
        for sigma in 0..self.states() {
            let mut s = self.hold[sigma] * dist[sigma];
            for i in 0..self.n {
                let tau = sigma ^ (1 << i);
                s += dist[tau] * self.flip[tau * self.n + i];
            }
            out[sigma] = s;
        }
    }

    fn dense_sym(&self) -> DMatrix<f64> {
        let states = self.states();
        let mut a = DMatrix::zeros(states, states);
        for sigma in 0..states {
            a[(sigma, sigma)] = self.hold[sigma];
            for i in 0..self.n {
                a[(sigma, sigma ^ (1 << i))] = self.sym(sigma, i);
            }
        }
        a
    }
}

/// Gibbs measure `μ(σ) ∝ exp((β/n) Σ_{i<j} σ(i)σ(j))` by enumeration.
pub fn full_stationary(params: &ModelParams<f64>) -> Result<Vec<f64>> {
    let n = params.n();
    if n > MAX_FULL_SITES {
        return Err(Error::TooLarge { n, max: MAX_FULL_SITES });
    }
    let coupling = params.beta() / n as f64;
    let log_w: Vec<f64> = (0..1usize << n)
        .map(|sigma| {
            let mut pairs = 0i64;
            for i in 0..n {
                for j in i + 1..n {
                    pairs += if (sigma >> i & 1) == (sigma >> j & 1) { 1 } else { -1 };
                }
            }
            coupling * pairs as f64
        })
        .collect();
    let z = log_sum_exp(&log_w);
    Ok(log_w.iter().map(|&l| (l - z).exp()).collect())
}

/// Spectral gap of the full dynamics, choosing the route automatically.
pub fn full_dynamics_gap(params: &ModelParams<f64>) -> Result<SpectralReport<f64>> {
    full_dynamics_gap_with(params, FullMethod::Auto)
}

pub fn full_dynamics_gap_with(params: &ModelParams<f64>, method: FullMethod) -> Result<SpectralReport<f64>> {
    let n = params.n();
    let dense = match method {
        FullMethod::Auto => n <= MAX_DENSE_SITES,
        FullMethod::Dense => true,
        FullMethod::PowerIteration => false,
    };
    let max = if dense { MAX_DENSE_SITES } else { MAX_FULL_SITES };
    if n > max {
        return Err(Error::TooLarge { n, max });
    }
    let kernel = FullKernel::new(params);
    if dense {
        dense_gap(&kernel)
    } else {
        power_gap(&kernel, params)
    }
}

fn residual(kernel: &FullKernel, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    kernel.apply_sym(v, &mut av);
    av.iter().zip(v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max)
}

fn dense_gap(kernel: &FullKernel) -> Result<SpectralReport<f64>> {
    let eig = kernel.dense_sym().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let pick = |k: usize| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect::<Vec<_>>());
    let (l0, v0) = pick(order[0]);
    let (l1, v1) = pick(order[1]);
    let (lmin, vmin) = pick(*order.last().unwrap());
    let res = residual(kernel, l0, &v0)
        .max(residual(kernel, l1, &v1))
        .max(residual(kernel, lmin, &vmin));
    if !(res <= 1e-8) {
        return Err(Error::Numerical {
            what: "dense full-dynamics eigenpairs",
            residual: res,
        });
    }
    Ok(SpectralReport::from_gap(1.0 - l1, lmin, SpectralMethod::Dense, res, Some(v1)))
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn deflate(v: &mut [f64], u: &[f64]) {
    let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
}

/// Power iteration on `(I + sign·A)/2`, deflated by `top` when given.
/// Returns the Rayleigh quotient for `A`, its vector and the residual.
fn power(kernel: &FullKernel, sign: f64, top: Option<&[f64]>, start: Vec<f64>) -> Result<(f64, Vec<f64>, f64)> {
    let states = kernel.states();
    let mut v = start;
    if let Some(u) = top {
        deflate(&mut v, u);
    }
    v = unit(v);
    let mut av = vec![0.0; states];
    for _ in 0..POWER_CAP {
        kernel.apply_sym(&v, &mut av);
        let lambda: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let res = av.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        if res <= POWER_TOL {
            return Ok((lambda, v, res));
        }
        let mut w: Vec<f64> = v.iter().zip(&av).map(|(x, ax)| (x + sign * ax) / 2.0).collect();
        if let Some(u) = top {
            deflate(&mut w, u);
        }
        v = unit(w);
    }
    Err(Error::Numerical {
        what: "power iteration did not converge",
        residual: f64::NAN,
    })
}

fn power_gap(kernel: &FullKernel, params: &ModelParams<f64>) -> Result<SpectralReport<f64>> {
    let n = kernel.n;
    let states = kernel.states();
    let mu = full_stationary(params)?;
    let top = unit(mu.iter().map(|p| p.sqrt()).collect());
    let top_res = residual(kernel, 1.0, &top);
    // Magnetization plus a deterministic, symmetry-breaking perturbation.
    let start = |phase: f64| -> Vec<f64> {
        (0..states)
            .map(|s| {
                let m = (2 * s.count_ones() as i64 - n as i64) as f64 / n as f64;
                m + 1e-3 * (phase * (s as f64 + 1.0)).sin()
            })
            .collect()
    };
    let (l1, v1, r1) = power(kernel, 1.0, Some(&top), start(0.618))?;
    let (lmin, _, rmin) = power(kernel, -1.0, None, start(1.303))?;
    let res = top_res.max(r1).max(rmin);
    Ok(SpectralReport::from_gap(1.0 - l1, lmin, SpectralMethod::PowerIteration, res, Some(v1)))
}

/// Total variation `‖P^t(all-plus, ·) - μ‖` of the full dynamics for
/// `t = 0..=t_max`.
pub fn full_tv_series_from_allplus(params: &ModelParams<f64>, t_max: u64) -> Result<Vec<f64>> {
    let n = params.n();
    if n > MAX_TV_SITES {
        return Err(Error::TooLarge { n, max: MAX_TV_SITES });
    }
    let kernel = FullKernel::new(params);
    let mu = full_stationary(params)?;
    let states = kernel.states();
    let mut dist = vec![0.0; states];
    dist[states - 1] = 1.0;
    let mut next = vec![0.0; states];
    let tv = |d: &[f64]| (d.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0).min(1.0);
    let mut out = Vec::with_capacity(t_max as usize + 1);
    out.push(tv(&dist));
    for _ in 0..t_max {
        kernel.push_forward(&dist, &mut next);
        std::mem::swap(&mut dist, &mut next);
        out.push(tv(&dist));
    }
    Ok(out)
}

pub fn full_tv_from_allplus(params: &ModelParams<f64>, t: u64) -> Result<f64> {
    Ok(*full_tv_series_from_allplus(params, t)?.last().unwrap())
}
