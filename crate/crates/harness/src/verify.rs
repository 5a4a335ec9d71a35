//! The acceptance checks, runnable by name from the CLI and the test suite.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use cwglauber::chain::{
    build_censored_kernel, build_kernel, stationary_route_discrepancy, survival_tau0, tau0_horizon, tv_curve, MagChain,
    Start,
};
use cwglauber::electrical::{commute_time, hitting_time, t_exp, zeta};
use cwglauber::model::SpinConfiguration;
use cwglauber::sim::{
    estimate_coalescence, estimate_hitting, HittingSpec, SimState, TargetSet, UpdateTable, DEFAULT_CAP_STEPS,
};
use cwglauber::spectral::{chain_gap, full_dynamics_gap, full_tv_series_from_allplus};
use cwglauber::ModelParams64;

use crate::error::{HarnessError, Result};
use crate::report::{Record, RunReport, Status, Verdict};
use crate::scans;
use crate::spec::{ExperimentKind, ExperimentSpec};

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1, workers: None }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub status: Status,
    pub detail: String,
    pub records: Vec<Record>,
}

impl CheckOutcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            status: Status::from_bool(ok),
            detail: detail.into(),
            records: Vec::new(),
        }
    }

    /// Folds a scan's verdicts: any failure fails, else any cap caps.
    fn from_scan(report: RunReport) -> Self {
        let relevant: Vec<&Verdict> = report
            .verdicts
            .iter()
            .filter(|v| v.status != Status::NotApplicable)
            .collect();
        let status = if relevant.iter().any(|v| v.status == Status::Fail) {
            Status::Fail
        } else if report.capped() {
            Status::ResourceCap
        } else {
            Status::Pass
        };
        let mut parts: Vec<&&Verdict> = relevant.iter().filter(|v| v.status != Status::Pass).collect();
        parts.extend(relevant.iter().filter(|v| v.status == Status::Pass));
        let detail = parts
            .iter()
            .map(|v| format!("[{}] {}: {}", v.status.label(), v.check, v.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Self {
            status,
            detail,
            records: report.records,
        }
    }
}

pub struct Check {
    pub id: u8,
    pub name: &'static str,
    /// Part of the default (exact oracle-equivalence) suite.
    pub fast: bool,
    pub budget_s: f64,
    run: fn(&VerifyOptions) -> Result<CheckOutcome>,
}

impl Check {
    pub fn label(&self) -> String {
        format!("{} {}", self.id, self.name)
    }

    /// Runs the check; errors become verdicts and overrunning the budget fails it.
    pub fn execute(&self, opts: &VerifyOptions) -> (Verdict, Vec<Record>) {
        let start = Instant::now();
        let result = (self.run)(opts);
        let elapsed = start.elapsed().as_secs_f64();
        let (mut status, mut detail, records) = match result {
            Ok(o) => (o.status, o.detail, o.records),
            Err(e) if e.exit_code() == 3 => (Status::ResourceCap, e.to_string(), Vec::new()),
            Err(e) => (Status::Fail, format!("error: {e}"), Vec::new()),
        };
        if elapsed > self.budget_s && status != Status::Fail {
            status = Status::Fail;
            detail = format!("over the {:.0} s budget; {detail}", self.budget_s);
        }
        let mut v = Verdict::new(self.label(), status, detail);
        v.elapsed_s = Some(elapsed);
        v.budget_s = Some(self.budget_s);
        (v, records)
    }
}

pub static CHECKS: [Check; 12] = [
    Check { id: 1, name: "all-plus-equivalence", fast: true, budget_s: 60.0, run: all_plus_equivalence },
    Check { id: 2, name: "gap-equality", fast: true, budget_s: 120.0, run: gap_equality },
    Check { id: 3, name: "stationary-routes", fast: true, budget_s: 30.0, run: stationary_routes },
    Check { id: 4, name: "drift-identity", fast: true, budget_s: 5.0, run: drift_identity },
    Check { id: 5, name: "commute-time", fast: true, budget_s: 20.0, run: commute_identity },
    Check { id: 6, name: "subcritical-cutoff", fast: false, budget_s: 600.0, run: subcritical_cutoff },
    Check { id: 7, name: "critical-scaling", fast: false, budget_s: 900.0, run: critical_scaling },
    Check { id: 8, name: "limit-law", fast: false, budget_s: 60.0, run: limit_law },
    Check { id: 9, name: "supercritical-order", fast: false, budget_s: 60.0, run: supercritical_order },
    Check { id: 10, name: "tau0-tail", fast: false, budget_s: 60.0, run: tau0_tail },
    Check { id: 11, name: "monte-carlo", fast: false, budget_s: 300.0, run: monte_carlo },
    Check { id: 12, name: "censored", fast: false, budget_s: 600.0, run: censored },
];

/// Resolves selectors: empty or `fast` gives the fast suite, `all` gives every
/// check, otherwise each selector is a check name or number.
pub fn select(selectors: &[String]) -> Result<Vec<&'static Check>> {
    let mut out: Vec<&'static Check> = Vec::new();
    let mut add = |c: &'static Check| {
        if !out.iter().any(|x| x.id == c.id) {
            out.push(c);
        }
    };
    if selectors.is_empty() {
        CHECKS.iter().filter(|c| c.fast).for_each(&mut add);
    }
    for s in selectors {
        match s.trim() {
            "all" => CHECKS.iter().for_each(&mut add),
            "fast" => CHECKS.iter().filter(|c| c.fast).for_each(&mut add),
            name => {
                let c = CHECKS
                    .iter()
                    .find(|c| c.name == name || c.id.to_string() == name)
                    .ok_or_else(|| {
                        let names: Vec<_> = CHECKS.iter().map(|c| c.name).collect();
                        HarnessError::Invalid(format!(
                            "unknown check {name:?}; use all, fast, a number 1-12 or one of {}",
                            names.join(", ")
                        ))
                    })?;
                add(c);
            }
        }
    }
    out.sort_by_key(|c| c.id);
    Ok(out)
}

pub fn verify(selectors: &[String], opts: &VerifyOptions) -> Result<RunReport> {
    let checks = select(selectors)?;
    let mut spec = ExperimentSpec::defaults(ExperimentKind::Verify);
    spec.select = selectors.to_vec();
    spec.seed = opts.seed;
    spec.workers = opts.workers;
    let mut report = RunReport::new(&spec);
    for c in checks {
        let (v, records) = c.execute(opts);
        report.records.extend(records);
        report.verdicts.push(v);
    }
    Ok(report)
}

fn params(n: usize, beta: f64) -> Result<ModelParams64> {
    Ok(ModelParams64::new(n, beta)?)
}

const FULL_GRID_N: [usize; 4] = [4, 6, 8, 10];
const FULL_GRID_BETA: [f64; 3] = [0.5, 1.0, 1.3];

fn all_plus_equivalence(_: &VerifyOptions) -> Result<CheckOutcome> {
    let mut worst = (0.0f64, 0, 0.0, 0);
    for n in FULL_GRID_N {
        for beta in FULL_GRID_BETA {
            let p = params(n, beta)?;
            let t_max = (5.0 * n as f64 * (n as f64).ln()) as u64;
            let full = full_tv_series_from_allplus(&p, t_max)?;
            let mag = tv_curve(&build_kernel(&p), &Start::Top, t_max)?;
            for (&(t, d), &f) in mag.points.iter().zip(&full) {
                let diff = (d - f).abs();
                if diff > worst.0 {
                    worst = (diff, n, beta, t);
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        worst.0 <= 1e-12,
        format!(
            "max |d_full - d_mag| = {:.2e} (at n={}, beta={}, t={}; limit 1e-12)",
            worst.0, worst.1, worst.2, worst.3
        ),
    ))
}

fn gap_equality(_: &VerifyOptions) -> Result<CheckOutcome> {
    let mut worst = (0.0f64, 0, 0.0);
    for n in FULL_GRID_N {
        for beta in FULL_GRID_BETA {
            let p = params(n, beta)?;
            let full = full_dynamics_gap(&p)?.gap;
            let mag = chain_gap(&build_kernel(&p))?.gap;
            let diff = (full - mag).abs();
            if diff >= worst.0 {
                worst = (diff, n, beta);
            }
        }
    }
    Ok(CheckOutcome::new(
        worst.0 <= 1e-8,
        format!(
            "max |gap_full - gap_mag| = {:.2e} (at n={}, beta={}; limit 1e-8)",
            worst.0, worst.1, worst.2
        ),
    ))
}

fn stationary_routes(_: &VerifyOptions) -> Result<CheckOutcome> {
    let mut worst = (0.0f64, 0, 0.0);
    let mut count = 0;
    for n in [2, 3, 10, 101, 1000, 10_000, 100_000] {
        for j in 0..=15 {
            let beta = 0.1 * j as f64;
            let p = params(n, beta)?;
            for c in [build_kernel(&p), build_censored_kernel(&p)] {
                let d = stationary_route_discrepancy(&c)?;
                count += 1;
                if d >= worst.0 {
                    worst = (d, n, beta);
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        worst.0 <= 1e-10,
        format!(
            "max log-domain discrepancy {:.2e} over {count} chains (at n={}, beta={}; limit 1e-10)",
            worst.0, worst.1, worst.2
        ),
    ))
}

/// `E[S' | S = s]` from the update law written out directly.
fn drift_formula(s: f64, beta: f64, n: f64) -> f64 {
    let hp = (beta * (s + 1.0 / n)).tanh();
    let hm = (beta * (s - 1.0 / n)).tanh();
    (1.0 - 1.0 / n) * s + (hp + hm) / (2.0 * n) - s / (2.0 * n) * (hp - hm)
}

fn drift_identity(_: &VerifyOptions) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut states = 0;
    for n in [10, 100, 1000] {
        for beta in [0.0, 0.5, 0.9, 1.0, 1.1, 1.5] {
            let c = build_kernel(&params(n, beta)?);
            for i in 0..c.len() {
                worst = worst.max((c.drift(i) - drift_formula(c.magnetization(i), beta, n as f64)).abs());
                states += 1;
            }
        }
    }
    Ok(CheckOutcome::new(
        worst <= 1e-14,
        format!("max drift discrepancy {worst:.2e} over {states} states (limit 1e-14)"),
    ))
}

fn commute_identity(_: &VerifyOptions) -> Result<CheckOutcome> {
    let mut worst_methods = 0.0f64;
    let mut worst_identity = 0.0f64;
    for n in (20..=200).step_by(10) {
        for beta in [1.1, 1.2, 1.3, 1.5] {
            let c = build_kernel(&params(n, beta)?);
            let kz = c.nearest_state(zeta(beta)?);
            let r = commute_time(&c, c.origin(), kz)?;
            worst_methods = worst_methods.max((r.network.log_expected - r.recurrence.log_expected).abs());
            let cross = hitting_time(&c, kz, n - kz)?.log_expected;
            worst_identity = worst_identity.max((cross - r.recurrence.log_expected).abs());
        }
    }
    Ok(CheckOutcome::new(
        worst_methods <= 1e-9 && worst_identity <= 1e-10,
        format!(
            "ladder vs W·R_eff: max relative gap {worst_methods:.2e} (limit 1e-9); \
             E_ζτ_(-ζ) vs C(0,ζ): {worst_identity:.2e} (limit 1e-10)"
        ),
    ))
}

fn scan(kind: ExperimentKind, opts: &VerifyOptions) -> Result<RunReport> {
    let mut spec = ExperimentSpec::defaults(kind);
    spec.seed = opts.seed;
    spec.workers = opts.workers;
    scans::run(&spec)
}

fn subcritical_cutoff(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::from_scan(scan(ExperimentKind::CutoffScan, opts)?))
}

fn critical_scaling(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::from_scan(scan(ExperimentKind::CriticalScan, opts)?))
}

fn limit_law(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::from_scan(scan(ExperimentKind::LimitLaw, opts)?))
}

fn supercritical_order(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::from_scan(scan(ExperimentKind::LowtempScan, opts)?);
    let d = 0.05;
    let n = 1000;
    let te = t_exp(&params(n, 1.0 + d)?)?;
    let r = te.exponent / (0.75 * d * d * n as f64);
    let ok = (0.85..=1.15).contains(&r);
    if !ok && out.status != Status::Fail {
        out.status = Status::Fail;
    }
    out.detail = format!(
        "[{}] small-δ exponent: exponent / ((3/4)δ²n) = {r:.4} at δ = {d} (band [0.85, 1.15]); {}",
        Status::from_bool(ok).label(),
        out.detail
    );
    Ok(out)
}

fn tau0_tail(_: &VerifyOptions) -> Result<CheckOutcome> {
    let p = params(1000, 0.9)?;
    let gammas = [1.0, 4.0, 16.0];
    let times = gammas.iter().map(|&g| tau0_horizon(g, &p)).collect::<cwglauber::Result<Vec<u64>>>()?;
    let surv = survival_tau0(&build_kernel(&p), &times)?;
    let decreasing = surv.windows(2).all(|w| w[1] < w[0]);
    let bounded = surv.iter().zip(&gammas).all(|(&s, &g)| s <= 3.0 / g.sqrt());
    let rows: Vec<String> = gammas
        .iter()
        .zip(&times)
        .zip(&surv)
        .map(|((g, t), s)| format!("γ={g}: P(τ₀ > {t}) = {s:.3e} (bound {:.3})", 3.0 / g.sqrt()))
        .collect();
    Ok(CheckOutcome::new(decreasing && bounded, rows.join(", ")))
}

fn one_step_p_value(chain: &MagChain<f64>, index: usize, samples: usize, mut draw: impl FnMut() -> i64) -> f64 {
    let mut counts = [0usize; 3];
    for _ in 0..samples {
        counts[(draw() + 1) as usize] += 1;
    }
    let expected = [chain.down()[index], chain.hold()[index], chain.up()[index]];
    let mut stat = 0.0;
    let mut bins = 0;
    for (&o, e) in counts.iter().zip(expected) {
        if e > 0.0 {
            let e = e * samples as f64;
            stat += (o as f64 - e).powi(2) / e;
            bins += 1;
        } else if o > 0 {
            return 0.0;
        }
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

fn monte_carlo(opts: &VerifyOptions) -> Result<CheckOutcome> {
    const SAMPLES: usize = 1_000_000;
    let mut lines = Vec::new();
    let mut ok = true;

    let cases: [(usize, f64, bool, &[usize]); 3] =
        [(50, 0.9, false, &[30, 50]), (30, 1.4, true, &[15, 16, 24]), (31, 1.2, true, &[16])];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst_p = 1.0f64;
    for (n, beta, censored, ks) in cases {
        let p = params(n, beta)?;
        let chain = if censored { build_censored_kernel(&p) } else { build_kernel(&p) };
        let table = Arc::new(UpdateTable::new(&p));
        for &k in ks {
            let config = SpinConfiguration::with_plus_count(n, k)?;
            let index = chain.index_of_plus_count(k).expect("k inside the chain");
            let pv = one_step_p_value(&chain, index, SAMPLES, || {
                let mut s = SimState::with_table(config.clone(), p, table.clone(), 0, censored).expect("valid state");
                if censored {
                    s.censored_step(&mut rng);
                } else {
                    s.step(&mut rng);
                }
                s.plus_count() as i64 - k as i64
            });
            worst_p = worst_p.min(pv);
        }
    }
    ok &= worst_p > 0.001;
    lines.push(format!("one-step chi-square: min p = {worst_p:.4} (limit 0.001)"));

    let spot = |n: usize, beta: f64, censored: bool, reps: usize| -> Result<(f64, f64, f64)> {
        let p = params(n, beta)?;
        let (chain, from, to, target) = if censored {
            let c = build_censored_kernel(&p);
            let half = n.div_ceil(2);
            let top = c.len() - 1;
            (c, top, 0, TargetSet::plus_counts(half, half)?)
        } else if beta > 1.0 {
            let c = build_kernel(&p);
            let low = n - c.nearest_state(zeta(beta)?);
            (c, n, low, TargetSet::at_most(low))
        } else {
            let z = TargetSet::near_zero(n);
            (build_kernel(&p), n, z.hi, z)
        };
        let exact = hitting_time(&chain, from, to)?.expected.unwrap_or(f64::INFINITY);
        let spec = HittingSpec {
            start_plus: n,
            target,
            reps,
            master_seed: opts.seed,
            cap_steps: DEFAULT_CAP_STEPS,
            censored,
        };
        let est = estimate_hitting(&p, &spec, opts.workers)?;
        if est.capped > 0 {
            return Err(HarnessError::ResourceCap(format!("{} replicates capped", est.capped)));
        }
        Ok((est.mean, est.std_error, exact))
    };
    for (n, beta, censored, reps) in [(100, 0.9, false, 4000), (40, 1.3, false, 2000), (40, 1.3, true, 2000)] {
        let (mean, se, exact) = spot(n, beta, censored, reps)?;
        let z = (mean - exact) / se;
        ok &= z.abs() <= 3.0;
        lines.push(format!(
            "hitting n={n} beta={beta}{}: {mean:.1} ± {se:.1} vs {exact:.1} (z = {z:.2})",
            if censored { " censored" } else { "" }
        ));
    }

    let p = params(60, 1.1)?;
    let hs = HittingSpec {
        start_plus: 60,
        target: TargetSet::near_zero(60),
        reps: 24,
        master_seed: opts.seed,
        cap_steps: DEFAULT_CAP_STEPS,
        censored: false,
    };
    let runs = [Some(1), Some(3), None]
        .iter()
        .map(|&w| estimate_hitting(&p, &hs, w))
        .collect::<cwglauber::Result<Vec<_>>>()?;
    let coal = [Some(1), Some(2)]
        .iter()
        .map(|&w| estimate_coalescence(&p, None, 16, opts.seed, DEFAULT_CAP_STEPS, w))
        .collect::<cwglauber::Result<Vec<_>>>()?;
    let same = runs.windows(2).all(|w| w[0] == w[1] && w[0].samples == w[1].samples) && coal[0] == coal[1];
    ok &= same;
    lines.push(format!("bit-exact across worker counts: {same}"));
    Ok(CheckOutcome::new(ok, lines.join("; ")))
}

fn censored(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::from_scan(scan(ExperimentKind::CensoredScan, opts)?))
}
