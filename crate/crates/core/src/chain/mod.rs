//! The `(n+1)`-state magnetization birth-and-death chain.
//!
//! State `i` of a chain corresponds to `offset + i` plus spins, i.e. to the
//! normalized magnetization `s = (2(offset + i) - n) / n`. The free chain has
//! `offset = 0`; the censored chain only keeps nonnegative magnetizations.

mod prob;
mod stats;
mod tv;

pub use prob::ProbVector;
pub use stats::{quantile_state, stationary_moment, stationary_variance};
pub use tv::{
    mixing_time, mixing_times, survival_tau0, tau0_horizon, tv_curve, worst_start_check,
    Evolver, MixingTime, Start, TvSeries, WorstStartReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gibbs_log_weights, update_probabilities, ModelParams};
use crate::real::{log_sum_exp, CompensatedSum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Free,
    Censored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagChain<T> {
    params: ModelParams<T>,
    kind: ChainKind,
    offset: usize,
    p: Vec<T>,
    q: Vec<T>,
    h: Vec<T>,
}

/// Free-chain transition probabilities out of the class with `k` plus spins.
fn free_rates<T: Real>(k: usize, params: &ModelParams<T>) -> (T, T) {
    let n = T::of_usize(params.n());
    let s = params.magnetization_of(k);
    let half = T::of(0.5);
    let inv_n = n.recip();
    let (up, _) = update_probabilities(s + inv_n, params.beta());
    let (_, down) = update_probabilities(s - inv_n, params.beta());
    (half * (T::one() - s) * up, half * (T::one() + s) * down)
}

/// Free magnetization chain: `p_k = (1 - s)/2 p+(s + 1/n)`,
/// `q_k = (1 + s)/2 p-(s - 1/n)`, `h_k = 1 - p_k - q_k`.
pub fn build_kernel<T: Real>(params: &ModelParams<T>) -> MagChain<T> {
    let n = params.n();
    let mut p = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    let mut h = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (up, down) = free_rates(k, params);
        p.push(up);
        q.push(down);
        h.push(T::one() - up - down);
    }
    MagChain {
        params: *params,
        kind: ChainKind::Free,
        offset: 0,
        p,
        q,
        h,
    }
}

/// Censored chain: the image of the dynamics that replaces `σ` by `-σ`
/// whenever the magnetization turns negative.
///
/// For even `n` the lowest state is `s = 0` and its down-move is re-routed to
/// `+2/n`; for odd `n` the lowest state is `1/n` and its down-move (to `-1/n`,
/// which flips back to `1/n`) becomes holding.
pub fn build_censored_kernel<T: Real>(params: &ModelParams<T>) -> MagChain<T> {
    let n = params.n();
    let offset = n.div_ceil(2);
    let mut p = Vec::with_capacity(n + 1 - offset);
    let mut q = Vec::with_capacity(n + 1 - offset);
    let mut h = Vec::with_capacity(n + 1 - offset);
    for k in offset..=n {
        let (mut up, mut down) = free_rates(k, params);
        if k == offset {
            if n.is_multiple_of(2) {
                up += down;
            }
            down = T::zero();
        }
        p.push(up);
        q.push(down);
        h.push(T::one() - up - down);
    }
    MagChain {
        params: *params,
        kind: ChainKind::Censored,
        offset,
        p,
        q,
        h,
    }
}

impl<T: Real> MagChain<T> {
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    /// Number of states.
    #[inline]
    pub fn len(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Plus-spin count of the lowest state.
    pub fn offset(&self) -> usize {
        self.offset
    }

    #[inline]
    pub fn up(&self) -> &[T] {
        &self.p
    }

    #[inline]
    pub fn down(&self) -> &[T] {
        &self.q
    }

    #[inline]
    pub fn hold(&self) -> &[T] {
        &self.h
    }

    #[inline]
    pub fn plus_count(&self, i: usize) -> usize {
        self.offset + i
    }

    #[inline]
    pub fn magnetization(&self, i: usize) -> T {
        self.params.magnetization_of(self.offset + i)
    }

    pub fn magnetizations(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.magnetization(i)).collect()
    }

    /// Index of the state with `k` plus spins, if it belongs to the chain.
    pub fn index_of_plus_count(&self, k: usize) -> Option<usize> {
        (k >= self.offset && k <= self.params.n()).then(|| k - self.offset)
    }

    /// Chain state closest to magnetization `s` (ties go to the larger state).
    pub fn nearest_state(&self, s: T) -> usize {
        let n = T::of_usize(self.params.n());
        let k = ((s * n + n) / T::of(2.0)).round();
        let k = k.max(T::zero()).min(n).to_usize().unwrap();
        k.clamp(self.offset, self.params.n()) - self.offset
    }

    /// Reference "origin" state: `s = 0` for even `n`, `s = 1/n` for odd `n`.
    pub fn origin(&self) -> usize {
        self.index_of_plus_count(self.params.n().div_ceil(2))
            .expect("origin belongs to both free and censored chains")
    }

    /// One step of a distribution: `out = dist · P`.
    pub fn push_forward(&self, dist: &[T], out: &mut [T]) {
        let m = self.len();
        debug_assert_eq!(dist.len(), m);
        debug_assert_eq!(out.len(), m);
        for i in 0..m {
            let mut v = dist[i] * self.h[i];
            if i > 0 {
                v += dist[i - 1] * self.p[i - 1];
            }
            if i + 1 < m {
                v += dist[i + 1] * self.q[i + 1];
            }
            out[i] = v;
        }
    }

    /// `E[S' | S = s_i]` computed from the kernel row.
    pub fn drift(&self, i: usize) -> T {
        let s = self.magnetization(i);
        let step = T::of(2.0) / T::of_usize(self.params.n());
        (s + step) * self.p[i] + s * self.h[i] + (s - step) * self.q[i]
    }

    /// Log stationary weights from the detailed-balance ladder
    /// `log π(i+1) = log π(i) + log p_i - log q_{i+1}`, unnormalized.
    fn detailed_balance_log_weights(&self) -> Result<Vec<T>> {
        let m = self.len();
        let mut lw = vec![T::zero(); m];
        let mut acc = CompensatedSum::new();
        for i in 0..m - 1 {
            let (up, down) = (self.p[i], self.q[i + 1]);
            if !(up > T::zero()) || !(down > T::zero()) {
                return Err(Error::Degenerate(format!(
                    "edge {i}-{} has zero rate (p = {up}, q = {down})",
                    i + 1
                )));
            }
            acc.add(up.ln() - down.ln());
            lw[i + 1] = acc.value();
        }
        Ok(lw)
    }

    /// Log stationary weights from the Gibbs measure: class weights for the
    /// free chain, folded onto `|S|` for the censored chain.
    fn gibbs_route_log_weights(&self) -> Vec<T> {
        let full = gibbs_log_weights(&self.params);
        match self.kind {
            ChainKind::Free => full,
            ChainKind::Censored => {
                let n = self.params.n();
                let ln2 = T::LN_2();
                (self.offset..=n)
                    .map(|k| if 2 * k == n { full[k] } else { full[k] + ln2 })
                    .collect()
            }
        }
    }
}

/// Stationary law of the chain.
///
/// Computed by the detailed-balance ladder and cross-checked against the
/// Gibbs weights; disagreement beyond [`Real::log_consistency_tol`] in the
/// normalized log-domain is reported as [`Error::Inconsistent`].
pub fn stationary<T: Real>(chain: &MagChain<T>) -> Result<ProbVector<T>> {
    let db = chain.detailed_balance_log_weights()?;
    let gibbs = chain.gibbs_route_log_weights();
    let za = log_sum_exp(&db);
    let zb = log_sum_exp(&gibbs);
    let worst = db
        .iter()
        .zip(&gibbs)
        .map(|(&a, &b)| ((a - za) - (b - zb)).abs())
        .fold(T::zero(), T::max);
    let tol = T::log_consistency_tol();
    if !(worst <= tol) {
        return Err(Error::Inconsistent {
            what: "stationary law (detailed balance vs Gibbs)",
            discrepancy: worst.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    Ok(ProbVector::from_log_weights(db))
}

/// Maximum log-domain discrepancy between the two stationary routes.
pub fn stationary_route_discrepancy<T: Real>(chain: &MagChain<T>) -> Result<T> {
    let db = chain.detailed_balance_log_weights()?;
    let gibbs = chain.gibbs_route_log_weights();
    let za = log_sum_exp(&db);
    let zb = log_sum_exp(&gibbs);
    Ok(db
        .iter()
        .zip(&gibbs)
        .map(|(&a, &b)| ((a - za) - (b - zb)).abs())
        .fold(T::zero(), T::max))
}
