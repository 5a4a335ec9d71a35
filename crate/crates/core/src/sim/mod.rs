//! Monte Carlo heat-bath Glauber dynamics on full spin configurations.

mod estimate;

pub use estimate::{
    estimate_coalescence, estimate_hitting, replicate_seed, CoalescenceEstimate, HittingSpec, TargetSet,
    TrialSummary, DEFAULT_CAP_STEPS,
};

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{update_probabilities, ModelParams, SpinConfiguration};

/// `p+` of the other-site magnetization, indexed by the number `j` of plus
/// spins among the other `n - 1` sites: `p+((2j - (n - 1))/n)`.
#[derive(Debug, Clone)]
pub struct UpdateTable {
    p_plus: Vec<f64>,
}

impl UpdateTable {
    pub fn new(params: &ModelParams<f64>) -> Self {
        let n = params.n();
        let p_plus = (0..n)
            .map(|j| {
                let s = (2.0 * j as f64 - (n as f64 - 1.0)) / n as f64;
                update_probabilities(s, params.beta()).0
            })
            .collect();
        Self { p_plus }
    }

    #[inline]
    pub fn p_plus(&self, others_plus: usize) -> f64 {
        self.p_plus[others_plus]
    }
}

/// A configuration evolving under the dynamics.
///
/// The censored variant keeps a global-flip flag: the observed configuration
/// is the stored one with every spin negated when the flag is set.
#[derive(Debug, Clone)]
pub struct SimState {
    config: SpinConfiguration,
    params: ModelParams<f64>,
    table: Arc<UpdateTable>,
    stream: u64,
    steps: u64,
    censored: bool,
    flipped: bool,
}

impl SimState {
    pub fn new(config: SpinConfiguration, params: ModelParams<f64>, stream: u64) -> Result<Self> {
        Self::with_table(config, params, Arc::new(UpdateTable::new(&params)), stream, false)
    }

    /// Censored dynamics; a start with negative magnetization is flipped.
    pub fn censored(config: SpinConfiguration, params: ModelParams<f64>, stream: u64) -> Result<Self> {
        Self::with_table(config, params, Arc::new(UpdateTable::new(&params)), stream, true)
    }

    pub fn with_table(
        config: SpinConfiguration,
        params: ModelParams<f64>,
        table: Arc<UpdateTable>,
        stream: u64,
        censored: bool,
    ) -> Result<Self> {
        if config.len() != params.n() {
            return Err(Error::InvalidParams(format!(
                "configuration has {} sites, model has {}",
                config.len(),
                params.n()
            )));
        }
        let mut s = Self {
            config,
            params,
            table,
            stream,
            steps: 0,
            censored,
            flipped: false,
        };
        s.censor();
        Ok(s)
    }

    pub fn params(&self) -> &ModelParams<f64> {
        &self.params
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_censored(&self) -> bool {
        self.censored
    }

    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    /// Stored configuration, before the global flip is applied.
    pub fn raw_config(&self) -> &SpinConfiguration {
        &self.config
    }

    /// Observed spin at site `i`.
    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        if self.flipped {
            -self.config.spin(i)
        } else {
            self.config.spin(i)
        }
    }

    /// Observed number of plus spins.
    #[inline]
    pub fn plus_count(&self) -> usize {
        if self.flipped {
            self.config.len() - self.config.plus_count()
        } else {
            self.config.plus_count()
        }
    }

    pub fn magnetization(&self) -> f64 {
        let n = self.config.len();
        (2.0 * self.plus_count() as f64 - n as f64) / n as f64
    }

    /// Observed configuration, materialized.
    pub fn observed(&self) -> SpinConfiguration {
        let spins = (0..self.config.len()).map(|i| self.spin(i)).collect();
        SpinConfiguration::from_spins(spins).expect("spins are ±1")
    }

    /// Heat-bath update of site `i` with uniform `u`: the new spin is `+1`
    /// iff `u <= p+(S - σ(i)/n)`.
    #[inline]
    pub fn update(&mut self, i: usize, u: f64) {
        let old = self.spin(i);
        let others = self.plus_count() - usize::from(old == 1);
        let new: i8 = if u <= self.table.p_plus(others) { 1 } else { -1 };
        if new != old {
            self.config.set(i, if self.flipped { -new } else { new });
        }
        self.steps += 1;
        self.censor();
    }

    #[inline]
    fn censor(&mut self) {
        if self.censored && 2 * self.plus_count() < self.config.len() {
            self.flipped = !self.flipped;
        }
    }

    /// One step with a uniform site and a fresh uniform.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let i = rng.random_range(0..self.config.len());
        let u: f64 = rng.random();
        self.update(i, u);
    }

    /// One step of the censored dynamics. Panics on a free-dynamics state.
    #[inline]
    pub fn censored_step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        assert!(self.censored, "censored_step on a free-dynamics state");
        self.step(rng);
    }
}

/// Members driven by shared `(I, U)` draws, with running disagreement and
/// order-violation counts for every adjacent pair `(k, k + 1)`.
#[derive(Debug, Clone)]
pub struct CouplingEnsemble {
    members: Vec<SimState>,
    disagreements: Vec<usize>,
    violations: Vec<usize>,
    ordered_at_start: Vec<bool>,
    before: Vec<i8>,
}

impl CouplingEnsemble {
    /// Members should be listed from highest to lowest; a pair that starts
    /// ordered stays ordered.
    pub fn new(members: Vec<SimState>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParams("empty ensemble".into()));
        }
        let n = members[0].config.len();
        for m in &members {
            if m.censored {
                return Err(Error::InvalidParams("censored states cannot be coupled monotonically".into()));
            }
            if m.config.len() != n || m.params != members[0].params {
                return Err(Error::InvalidParams("ensemble members differ in model".into()));
            }
        }
        let mut disagreements = Vec::with_capacity(members.len() - 1);
        let mut violations = Vec::with_capacity(members.len() - 1);
        for w in members.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            disagreements.push((0..n).filter(|&i| a.spin(i) != b.spin(i)).count());
            violations.push((0..n).filter(|&i| a.spin(i) < b.spin(i)).count());
        }
        Ok(Self {
            ordered_at_start: violations.iter().map(|&v| v == 0).collect(),
            before: Vec::with_capacity(members.len()),
            members,
            disagreements,
            violations,
        })
    }

    pub fn members(&self) -> &[SimState] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn steps(&self) -> u64 {
        self.members[0].steps
    }

    /// Sites where members `k` and `k + 1` differ.
    pub fn disagreements(&self, k: usize) -> usize {
        self.disagreements[k]
    }

    /// Sites where member `k` is below member `k + 1`.
    pub fn violations(&self, k: usize) -> usize {
        self.violations[k]
    }

    pub fn all_coalesced(&self) -> bool {
        self.disagreements.iter().all(|&d| d == 0)
    }

    pub fn order_preserved(&self) -> bool {
        self.violations.iter().all(|&v| v == 0)
    }

    /// Applies the same site and uniform to every member.
    pub fn coupled_update(&mut self, i: usize, u: f64) {
        self.before.clear();
        self.before.extend(self.members.iter().map(|m| m.spin(i)));
        for m in &mut self.members {
            m.update(i, u);
        }
        for k in 0..self.disagreements.len() {
            let (oa, ob) = (self.before[k], self.before[k + 1]);
            let (na, nb) = (self.members[k].spin(i), self.members[k + 1].spin(i));
            self.disagreements[k] = self.disagreements[k] + usize::from(na != nb) - usize::from(oa != ob);
            self.violations[k] = self.violations[k] + usize::from(na < nb) - usize::from(oa < ob);
            debug_assert!(!self.ordered_at_start[k] || self.violations[k] == 0);
        }
    }

    pub fn coupled_step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let i = rng.random_range(0..self.members[0].config.len());
        let u: f64 = rng.random();
        self.coupled_update(i, u);
    }
}

#[cfg(test)]
mod tests;
