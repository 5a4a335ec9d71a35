use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{CouplingEnsemble, SimState, UpdateTable};
use crate::error::{Error, Result};
use crate::model::{ModelParams, SpinConfiguration};

pub const DEFAULT_CAP_STEPS: u64 = 1_000_000_000;

const QUANTILE_LEVELS: [f64; 7] = [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0];

/// Seed of replicate `index`: splitmix64 applied to the master seed advanced
/// by `index + 1` golden-ratio increments.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inclusive range of observed plus-spin counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TargetSet {
    pub lo: usize,
    pub hi: usize,
}

impl TargetSet {
    pub fn plus_counts(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParams(format!("empty target [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `{|S| <= 1/n}`.
    pub fn near_zero(n: usize) -> Self {
        Self {
            lo: n / 2,
            hi: n.div_ceil(2),
        }
    }

    /// Plus counts `<= k`.
    pub fn at_most(k: usize) -> Self {
        Self { lo: 0, hi: k }
    }

    /// Plus counts `>= k` on `n` sites.
    pub fn at_least(k: usize, n: usize) -> Self {
        Self { lo: k, hi: n }
    }

    #[inline]
    pub fn contains(&self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub reps: usize,
    /// Mean over all replicates, capped ones counted at the cap.
    pub mean: f64,
    /// Sample standard deviation over `√reps`.
    pub std_error: f64,
    /// `(level, value)` pairs of the empirical distribution.
    pub quantiles: Vec<(f64, f64)>,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    /// Replicates that hit the step cap; their samples are lower bounds.
    pub capped: usize,
    pub cap_steps: u64,
    /// False when every replicate was capped.
    pub valid: bool,
    #[serde(skip)]
    pub samples: Vec<u64>,
}

impl TrialSummary {
    fn from_samples(samples: Vec<u64>, capped: usize, master_seed: u64, cap_steps: u64) -> Self {
        let reps = samples.len();
        let xs: Vec<f64> = samples.iter().map(|&s| s as f64).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (reps as f64 - 1.0);
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let quantiles = QUANTILE_LEVELS
            .iter()
            .map(|&a| {
                // type-7 (linear interpolation) sample quantile
                let h = a * (reps as f64 - 1.0);
                let lo = h.floor() as usize;
                let hi = (lo + 1).min(reps - 1);
                (a, sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
            })
            .collect();
        Self {
            reps,
            mean,
            std_error: (var / reps as f64).sqrt(),
            quantiles,
            master_seed,
            seeds: (0..reps as u64).map(|i| replicate_seed(master_seed, i)).collect(),
            capped,
            cap_steps,
            valid: capped < reps,
            samples,
        }
    }

    /// Fraction of replicates with a sample `<= t`.
    pub fn fraction_at_most(&self, t: u64) -> f64 {
        self.samples.iter().filter(|&&s| s <= t).count() as f64 / self.reps as f64
    }

    /// One `replicate,seed,value,capped` row per replicate, with a header.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("replicate,seed,value,capped\n");
        for (i, (&s, &seed)) in self.samples.iter().zip(&self.seeds).enumerate() {
            out.push_str(&format!("{i},{seed},{s},{}\n", s >= self.cap_steps));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HittingSpec {
    /// Observed plus count of the start; the first sites carry the plus spins.
    pub start_plus: usize,
    pub target: TargetSet,
    pub reps: usize,
    pub master_seed: u64,
    pub cap_steps: u64,
    pub censored: bool,
}

fn run_replicates<F>(reps: usize, workers: Option<usize>, f: F) -> Result<Vec<(u64, bool)>>
where
    F: Fn(u64) -> (u64, bool) + Sync + Send,
{
    let job = || (0..reps as u64).into_par_iter().map(&f).collect::<Vec<_>>();
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Independent replicates of the first time the observed plus count lies in
/// `spec.target`. Results do not depend on `workers`.
pub fn estimate_hitting(params: &ModelParams<f64>, spec: &HittingSpec, workers: Option<usize>) -> Result<TrialSummary> {
    let n = params.n();
    if spec.reps < 2 {
        return Err(Error::InvalidParams("at least two replicates are needed".into()));
    }
    if spec.start_plus > n || spec.target.lo > n {
        return Err(Error::OutOfRange {
            what: "plus count",
            detail: format!("start {} / target {:?} on {n} sites", spec.start_plus, spec.target),
        });
    }
    if spec.cap_steps == 0 {
        return Err(Error::InvalidParams("step cap must be positive".into()));
    }
    let table = Arc::new(UpdateTable::new(params));
    let start = SpinConfiguration::with_plus_count(n, spec.start_plus)?;
    let results = run_replicates(spec.reps, workers, |idx| {
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(spec.master_seed, idx));
        let mut state = SimState::with_table(start.clone(), *params, table.clone(), idx, spec.censored)
            .expect("sizes checked above");
        while !spec.target.contains(state.plus_count()) {
            if state.steps() >= spec.cap_steps {
                return (state.steps(), true);
            }
            state.step(&mut rng);
        }
        (state.steps(), false)
    })?;
    let capped = results.iter().filter(|r| r.1).count();
    Ok(TrialSummary::from_samples(
        results.into_iter().map(|r| r.0).collect(),
        capped,
        spec.master_seed,
        spec.cap_steps,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalescenceEstimate {
    pub summary: TrialSummary,
    /// Step function `t ↦ P̂(τ > t)`: each `(t, v)` holds from `t` until the
    /// next point.
    pub tv_bound: Vec<(u64, f64)>,
}

impl CoalescenceEstimate {
    /// Upper bound on `d(t)` from the coupling inequality.
    pub fn tv_bound_at(&self, t: u64) -> f64 {
        self.tv_bound
            .iter()
            .take_while(|&&(s, _)| s <= t)
            .last()
            .map_or(1.0, |&(_, v)| v)
    }
}

/// Grand coupling from `top` and `bottom` (all-plus and all-minus when
/// `None`), run until the two coalesce.
pub fn estimate_coalescence(
    params: &ModelParams<f64>,
    starts: Option<(SpinConfiguration, SpinConfiguration)>,
    reps: usize,
    master_seed: u64,
    cap_steps: u64,
    workers: Option<usize>,
) -> Result<CoalescenceEstimate> {
    let n = params.n();
    if reps < 2 {
        return Err(Error::InvalidParams("at least two replicates are needed".into()));
    }
    if cap_steps == 0 {
        return Err(Error::InvalidParams("step cap must be positive".into()));
    }
    let (top, bottom) = starts.unwrap_or_else(|| (SpinConfiguration::all_plus(n), SpinConfiguration::all_minus(n)));
    if !top.dominates(&bottom) {
        return Err(Error::InvalidParams("top start must dominate bottom start".into()));
    }
    let table = Arc::new(UpdateTable::new(params));
    let results = run_replicates(reps, workers, |idx| {
        let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(master_seed, idx));
        let members = vec![
            SimState::with_table(top.clone(), *params, table.clone(), idx, false).expect("valid start"),
            SimState::with_table(bottom.clone(), *params, table.clone(), idx, false).expect("valid start"),
        ];
        let mut ens = CouplingEnsemble::new(members).expect("valid ensemble");
        while !ens.all_coalesced() {
            if ens.steps() >= cap_steps {
                return (ens.steps(), true);
            }
            ens.coupled_step(&mut rng);
        }
        (ens.steps(), false)
    })?;
    let capped = results.iter().filter(|r| r.1).count();
    let samples: Vec<u64> = results.into_iter().map(|r| r.0).collect();
    let mut sorted = samples.clone();
    sorted.sort_unstable();
    let mut tv_bound = vec![(0, sorted.iter().filter(|&&s| s > 0).count() as f64 / reps as f64)];
    for (i, &s) in sorted.iter().enumerate() {
        if s == 0 || (i + 1 < sorted.len() && sorted[i + 1] == s) {
            continue;
        }
        // capped replicates never coalesced: the bound stays above them
        let above = sorted.len() - i - 1 + sorted[..=i].iter().filter(|&&x| x >= cap_steps).count();
        tv_bound.push((s, above as f64 / reps as f64));
    }
    Ok(CoalescenceEstimate {
        summary: TrialSummary::from_samples(samples, capped, master_seed, cap_steps),
        tv_bound,
    })
}
