//! Exact total-variation curves, mixing times and the `τ₀` survival law.

use serde::Serialize;

use super::prob::total_variation;
use super::{stationary, MagChain, ProbVector};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::real::Real;

/// Distributions are renormalized every `2^16` steps to cancel drift.
const RENORMALIZE_EVERY: u64 = 1 << 16;

/// Where an exact evolution starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Start<T> {
    /// Point mass at the top state (`s = 1`).
    Top,
    /// Point mass at the lowest state of the chain.
    Bottom,
    /// Worst of the two extreme point masses, `max(d_top, d_bottom)`.
    ///
    /// For a monotone birth-and-death chain this is the worst case over all
    /// starting states.
    Extremes,
    State(usize),
    Dist(ProbVector<T>),
}

impl<T: Real> Start<T> {
    fn distributions(&self, len: usize) -> Result<Vec<Vec<T>>> {
        let pm = |i| ProbVector::<T>::point_mass(len, i).map(|v| v.probs().to_vec());
        Ok(match self {
            Start::Top => vec![pm(len - 1)?],
            Start::Bottom => vec![pm(0)?],
            Start::Extremes => vec![pm(len - 1)?, pm(0)?],
            Start::State(i) => vec![pm(*i)?],
            Start::Dist(d) => {
                if d.len() != len {
                    return Err(Error::OutOfRange {
                        what: "start distribution",
                        detail: format!("length {} != {len}", d.len()),
                    });
                }
                vec![d.probs().to_vec()]
            }
        })
    }
}

/// Steps one or more distributions through the tridiagonal kernel in O(n).
pub struct Evolver<'a, T> {
    chain: &'a MagChain<T>,
    dists: Vec<Vec<T>>,
    scratch: Vec<T>,
    t: u64,
}

impl<'a, T: Real> Evolver<'a, T> {
    pub fn new(chain: &'a MagChain<T>, start: &Start<T>) -> Result<Self> {
        Ok(Self {
            chain,
            dists: start.distributions(chain.len())?,
            scratch: vec![T::zero(); chain.len()],
            t: 0,
        })
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Current distribution of the first start.
    pub fn distribution(&self) -> &[T] {
        &self.dists[0]
    }

    pub fn step(&mut self) {
        self.t += 1;
        let renorm = self.t.is_multiple_of(RENORMALIZE_EVERY);
        for d in &mut self.dists {
            self.chain.push_forward(d, &mut self.scratch);
            std::mem::swap(d, &mut self.scratch);
            if renorm {
                let total: T = d.iter().copied().sum();
                for x in d.iter_mut() {
                    *x /= total;
                }
            }
        }
    }

    /// Worst TV distance to `target` over the tracked starts.
    pub fn tv_to(&self, target: &[T]) -> T {
        self.dists
            .iter()
            .map(|d| total_variation(d, target))
            .fold(T::zero(), T::max)
    }
}

/// Ordered `(t, d(t))` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvSeries<T> {
    pub points: Vec<(u64, T)>,
}

impl<T: Real> TvSeries<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn value_at(&self, t: u64) -> Option<T> {
        self.points
            .binary_search_by_key(&t, |&(s, _)| s)
            .ok()
            .map(|i| self.points[i].1)
    }
}

/// `d(t) = TV(start · P^t, π)` for `t = 0..=t_max`.
pub fn tv_curve<T: Real>(chain: &MagChain<T>, start: &Start<T>, t_max: u64) -> Result<TvSeries<T>> {
    let pi = stationary(chain)?;
    let mut ev = Evolver::new(chain, start)?;
    let mut points = Vec::with_capacity(t_max as usize + 1);
    points.push((0, ev.tv_to(pi.probs())));
    while ev.time() < t_max {
        ev.step();
        points.push((ev.time(), ev.tv_to(pi.probs())));
    }
    Ok(TvSeries { points })
}

/// Result of a mixing-time search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "steps", rename_all = "kebab-case")]
pub enum MixingTime {
    Exact(u64),
    /// The step cap was reached with `d(cap) > eps`; the true value exceeds it.
    LowerBound(u64),
}

impl MixingTime {
    pub fn exact(self) -> Option<u64> {
        match self {
            MixingTime::Exact(t) => Some(t),
            MixingTime::LowerBound(_) => None,
        }
    }

    pub fn steps(self) -> u64 {
        match self {
            MixingTime::Exact(t) | MixingTime::LowerBound(t) => t,
        }
    }
}

/// `t_mix(ε) = min{t : d(t) <= ε}` for several `ε` in one exact forward pass.
///
/// `d` is non-increasing, so the first crossing seen while stepping forward is
/// the minimum.
pub fn mixing_times<T: Real>(
    chain: &MagChain<T>,
    start: &Start<T>,
    eps: &[T],
    cap: u64,
) -> Result<Vec<MixingTime>> {
    for &e in eps {
        if !(e > T::zero() && e < T::one()) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                detail: format!("{e} not in (0, 1)"),
            });
        }
    }
    let pi = stationary(chain)?;
    let mut ev = Evolver::new(chain, start)?;
    let mut out: Vec<Option<MixingTime>> = vec![None; eps.len()];
    loop {
        let d = ev.tv_to(pi.probs());
        for (slot, &e) in out.iter_mut().zip(eps) {
            if slot.is_none() && d <= e {
                *slot = Some(MixingTime::Exact(ev.time()));
            }
        }
        if out.iter().all(Option::is_some) {
            break;
        }
        if ev.time() >= cap {
            break;
        }
        ev.step();
    }
    Ok(out
        .into_iter()
        .map(|m| m.unwrap_or(MixingTime::LowerBound(cap)))
        .collect())
}

pub fn mixing_time<T: Real>(chain: &MagChain<T>, start: &Start<T>, eps: T, cap: u64) -> Result<MixingTime> {
    Ok(mixing_times(chain, start, &[eps], cap)?[0])
}

/// How far the worst point-mass start exceeds the top start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstStartReport<T> {
    /// `max_t (max_x d_x(t) - d_top(t))`; zero when the top start is worst.
    pub max_excess: T,
    pub at_time: u64,
    pub at_state: usize,
}

/// Compares every point-mass start against the top start for `t <= t_max`.
pub fn worst_start_check<T: Real>(chain: &MagChain<T>, t_max: u64) -> Result<WorstStartReport<T>> {
    if chain.len() > 64 {
        return Err(Error::TooLarge {
            n: chain.params().n(),
            max: 63,
        });
    }
    let pi = stationary(chain)?;
    let m = chain.len();
    let mut evs = (0..m)
        .map(|i| Evolver::new(chain, &Start::State(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = WorstStartReport {
        max_excess: T::zero(),
        at_time: 0,
        at_state: m - 1,
    };
    for t in 0..=t_max {
        let ds: Vec<T> = evs.iter().map(|e| e.tv_to(pi.probs())).collect();
        let top = ds[m - 1];
        for (i, &d) in ds.iter().enumerate() {
            if d - top > report.max_excess {
                report = WorstStartReport {
                    max_excess: d - top,
                    at_time: t,
                    at_state: i,
                };
            }
        }
        if t < t_max {
            evs.iter_mut().for_each(Evolver::step);
        }
    }
    Ok(report)
}

/// Indices with `|s| <= 1/n`.
fn near_origin<T: Real>(chain: &MagChain<T>) -> Vec<usize> {
    let n = chain.params().n();
    (0..chain.len())
        .filter(|&i| {
            let k = chain.plus_count(i);
            (2 * k).abs_diff(n) <= 1
        })
        .collect()
}

/// `P_1(τ₀ > t)` for each requested `t`, with `τ₀ = min{t : |S_t| <= 1/n}`.
///
/// The target states are made absorbing and the distribution started at
/// `s = 1` is iterated exactly.
pub fn survival_tau0<T: Real>(chain: &MagChain<T>, times: &[u64]) -> Result<Vec<T>> {
    let absorbing = near_origin(chain);
    let mut absorbed = chain.clone();
    for &i in &absorbing {
        absorbed.p[i] = T::zero();
        absorbed.q[i] = T::zero();
        absorbed.h[i] = T::one();
    }
    let t_max = times.iter().copied().max().unwrap_or(0);
    let mut ev = Evolver::new(&absorbed, &Start::Top)?;
    let survival = |ev: &Evolver<T>| {
        let caught: T = absorbing.iter().map(|&i| ev.distribution()[i]).sum();
        (T::one() - caught).max(T::zero())
    };
    let mut at = vec![T::zero(); t_max as usize + 1];
    at[0] = survival(&ev);
    while ev.time() < t_max {
        ev.step();
        at[ev.time() as usize] = survival(&ev);
    }
    Ok(times.iter().map(|&t| at[t as usize]).collect())
}

/// The time horizon `t_n(γ)` of the `τ₀` tail bound.
///
/// With `δ = 1 - β` (signed): when `δ²n` exceeds the window threshold the
/// chain must be subcritical and `t_n = (n/2δ) log(δ²n) + (γ + 3) n/δ`;
/// inside the window `t_n = (200 + 6γ(1 + 6√(δ²n))) n^{3/2}`.
pub fn tau0_horizon<T: Real>(gamma: T, params: &ModelParams<T>) -> Result<u64> {
    if !(gamma > T::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            detail: format!("{gamma} <= 0"),
        });
    }
    let n = T::of_usize(params.n());
    let signed = T::one() - params.beta();
    let scaled = signed * signed * n;
    let t = if scaled > params.window_threshold() {
        if signed <= T::zero() {
            return Err(Error::InvalidParams(format!(
                "beta = {} lies above the critical window; the tau0 horizon is undefined",
                params.beta()
            )));
        }
        n / (T::of(2.0) * signed) * scaled.ln() + (gamma + T::of(3.0)) * n / signed
    } else {
        (T::of(200.0) + T::of(6.0) * gamma * (T::one() + T::of(6.0) * scaled.sqrt())) * n.powf(T::of(1.5))
    };
    Ok(t.ceil().to_u64().expect("finite horizon"))
}
