//! Model parameters, spin configurations and the heat-bath update law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};

/// Descriptive label for where `(n, beta)` sits in the phase diagram.
///
/// The label never feeds back into any numeric result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    CriticalWindow,
    Supercritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::CriticalWindow => "critical-window",
            Regime::Supercritical => "supercritical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    n: usize,
    beta: T,
    delta: T,
    window_threshold: T,
}

impl<T: Real> ModelParams<T> {
    /// Default threshold on `delta^2 n` below which the label is
    /// critical-window.
    pub const DEFAULT_WINDOW_THRESHOLD: f64 = 1.0;

    pub fn new(n: usize, beta: T) -> Result<Self> {
        Self::with_threshold(n, beta, T::of(Self::DEFAULT_WINDOW_THRESHOLD))
    }

    pub fn with_threshold(n: usize, beta: T, window_threshold: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n = {n}, need n >= 2")));
        }
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta = {beta}, need finite beta >= 0")));
        }
        if !(window_threshold >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "window threshold = {window_threshold}, need >= 0"
            )));
        }
        Ok(Self {
            n,
            beta,
            delta: (T::one() - beta).abs(),
            window_threshold,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn beta(&self) -> T {
        self.beta
    }

    /// `|1 - beta|`.
    #[inline]
    pub fn delta(&self) -> T {
        self.delta
    }

    /// `delta^2 n`, the scaling variable of the critical window.
    pub fn scaled_distance(&self) -> T {
        self.delta * self.delta * T::of_usize(self.n)
    }

    pub fn window_threshold(&self) -> T {
        self.window_threshold
    }

    pub fn regime(&self) -> Regime {
        if self.scaled_distance() <= self.window_threshold {
            Regime::CriticalWindow
        } else if self.beta < T::one() {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }

    /// Normalized magnetization of the class with `k` plus spins.
    #[inline]
    pub fn magnetization_of(&self, k: usize) -> T {
        let n = T::of_usize(self.n);
        (T::of_usize(2 * k) - n) / n
    }
}

/// `(p_plus, p_minus)` for a site whose neighbours have mean spin `s`:
/// `p_plus = (1 + tanh(beta s)) / 2`.
#[inline]
pub fn update_probabilities<T: Real>(s: T, beta: T) -> (T, T) {
    let t = (beta * s).tanh();
    let half = T::of(0.5);
    (half * (T::one() + t), half * (T::one() - t))
}

/// Full `±1` spin configuration with a cached count of plus spins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
    plus_count: usize,
}

impl SpinConfiguration {
    pub fn all_plus(n: usize) -> Self {
        Self {
            spins: vec![1; n],
            plus_count: n,
        }
    }

    pub fn all_minus(n: usize) -> Self {
        Self {
            spins: vec![-1; n],
            plus_count: 0,
        }
    }

    pub fn from_spins(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::OutOfRange {
                what: "spin",
                detail: format!("{bad} is not ±1"),
            });
        }
        let plus_count = spins.iter().filter(|&&s| s == 1).count();
        Ok(Self { spins, plus_count })
    }

    /// First `k` sites plus, the rest minus.
    pub fn with_plus_count(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::OutOfRange {
                what: "plus count",
                detail: format!("{k} > n = {n}"),
            });
        }
        let spins = (0..n).map(|i| if i < k { 1 } else { -1 }).collect();
        Ok(Self { spins, plus_count: k })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    #[inline]
    pub fn plus_count(&self) -> usize {
        self.plus_count
    }

    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        self.spins[i]
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Sets site `i`, keeping the cached count in sync. O(1).
    #[inline]
    pub fn set(&mut self, i: usize, spin: i8) {
        debug_assert!(spin == 1 || spin == -1);
        let old = self.spins[i];
        if old != spin {
            self.spins[i] = spin;
            if spin == 1 {
                self.plus_count += 1;
            } else {
                self.plus_count -= 1;
            }
        }
    }

    /// `S = (2 k - n) / n` from the cached count.
    pub fn magnetization<T: Real>(&self) -> T {
        let n = T::of_usize(self.spins.len());
        (T::of_usize(2 * self.plus_count) - n) / n
    }

    /// O(n) recount, used to validate the cache.
    pub fn recount_magnetization<T: Real>(&self) -> T {
        let sum: i64 = self.spins.iter().map(|&s| i64::from(s)).sum();
        T::from_i64(sum).unwrap() / T::of_usize(self.spins.len())
    }

    /// Coordinate-wise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.spins.iter().zip(&other.spins).all(|(a, b)| a >= b)
    }
}

/// `log C(n, k)` for every `k`, accumulated as `Σ_j log((n - j)/(j + 1))`
/// from `k = 0` with compensated summation and mirrored by symmetry.
pub fn log_binomial_row<T: Real>(n: usize) -> Vec<T> {
    let mut row = vec![T::zero(); n + 1];
    let mut acc = CompensatedSum::new();
    for k in 1..=n / 2 {
        let j = k - 1;
        acc.add((T::of_usize(n - j) / T::of_usize(j + 1)).ln());
        row[k] = acc.value();
    }
    for k in n / 2 + 1..=n {
        row[k] = row[n - k];
    }
    row
}

/// Unnormalized log Gibbs weight of the magnetization class with `k` plus
/// spins: `log C(n, k) + beta (2k - n)^2 / (2n)`.
///
/// The additive constant dropped is `-beta / 2` (from the diagonal of the
/// pair sum), which cancels on normalization.
pub fn gibbs_log_weight<T: Real>(k: usize, params: &ModelParams<T>) -> Result<T> {
    let n = params.n();
    if k > n {
        return Err(Error::OutOfRange {
            what: "plus count",
            detail: format!("{k} > n = {n}"),
        });
    }
    let m = k.min(n - k);
    let mut acc = CompensatedSum::new();
    for j in 0..m {
        acc.add((T::of_usize(n - j) / T::of_usize(j + 1)).ln());
    }
    Ok(acc.value() + interaction_term(k, params))
}

/// All `n + 1` class log weights in one O(n) pass.
pub fn gibbs_log_weights<T: Real>(params: &ModelParams<T>) -> Vec<T> {
    log_binomial_row::<T>(params.n())
        .into_iter()
        .enumerate()
        .map(|(k, lb)| lb + interaction_term(k, params))
        .collect()
}

#[inline]
fn interaction_term<T: Real>(k: usize, params: &ModelParams<T>) -> T {
    let n = params.n();
    let m = T::from_i64(2 * k as i64 - n as i64).unwrap();
    params.beta() * m * m / T::of_usize(2 * n)
}
