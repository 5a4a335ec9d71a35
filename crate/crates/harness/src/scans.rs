//! Grid experiments over `(n, β)`, each producing a [`RunReport`].
//!
//! Grid points run concurrently on up to `spec.workers` threads; records are
//! assembled in grid order, so exact outputs are identical for any worker count.

use std::time::Instant;

use rayon::prelude::*;

use cwglauber::chain::{build_censored_kernel, build_kernel, mixing_times, stationary, MagChain, MixingTime, Start};
use cwglauber::electrical::{commute_time, hitting_time, t_exp, zeta};
use cwglauber::sim::{estimate_hitting, HittingSpec, TargetSet};
use cwglauber::spectral::chain_gap;
use cwglauber::ModelParams64;

use crate::error::{HarnessError, Result};
use crate::limit_law::{limit_law_distance, window_beta};
use crate::report::{Fields, Provenance, Record, RunReport, Status, Verdict};
use crate::spec::{ExperimentKind, ExperimentSpec};

/// Runs `f` over `items` on a pool of `workers` threads (the global pool when
/// `None`), keeping input order.
pub fn grid_map<I, O, F>(workers: Option<usize>, items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    let job = || items.par_iter().map(&f).collect::<Vec<_>>();
    let out = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Invalid(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    };
    out.into_iter().collect()
}

pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::CutoffScan => cutoff_scan(spec),
        ExperimentKind::CriticalScan => critical_scan(spec),
        ExperimentKind::LowtempScan => lowtemp_scan(spec),
        ExperimentKind::LimitLaw => limit_law_scan(spec),
        ExperimentKind::CensoredScan => censored_scan(spec),
        ExperimentKind::FigureTmix => figure_tmix(spec),
        ExperimentKind::FigurePi => figure_pi(spec),
        ExperimentKind::Verify => Err(HarnessError::Invalid("verify is not a scan".into())),
    }
}

fn eps_key(e: f64) -> String {
    format!("t_mix_{e}")
}

/// `extra` merged into the spec's epsilons, largest first.
fn eps_with(spec: &ExperimentSpec, extra: &[f64]) -> Vec<f64> {
    let mut eps: Vec<f64> = spec.eps.iter().chain(extra).copied().collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    eps
}

fn record_times(out: &mut Fields, eps: &[f64], times: &[MixingTime]) -> bool {
    let mut capped = false;
    for (&e, t) in eps.iter().zip(times) {
        out.push(&eps_key(e), t.steps() as f64);
        capped |= t.exact().is_none();
    }
    out.push("capped", capped as u8 as f64);
    capped
}

fn by_n<'a>(records: &'a [Record], key: &str, value: f64) -> Vec<&'a Record> {
    let mut rs: Vec<&Record> = records.iter().filter(|r| r.inputs.get(key) == Some(value)).collect();
    rs.sort_by_key(|r| r.inputs.get("n").unwrap_or(0.0) as usize);
    rs
}

fn out(r: &Record, key: &str) -> f64 {
    r.outputs.get(key).unwrap_or(f64::NAN)
}

fn max_over_min(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi / lo
}

fn cap_verdict(report: &mut RunReport, series: &[&Record], label: &str) -> bool {
    let capped: Vec<String> = series
        .iter()
        .filter(|r| out(r, "capped") != 0.0)
        .map(|r| format!("n={}", r.inputs.get("n").unwrap_or(f64::NAN)))
        .collect();
    if capped.is_empty() {
        return false;
    }
    report.partial = true;
    report.verdicts.push(Verdict::new(
        format!("mixing times @ {label}"),
        Status::ResourceCap,
        format!("step cap reached at {}; values are lower bounds", capped.join(", ")),
    ));
    true
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

pub fn cutoff_scan(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    let eps = eps_with(spec, &[0.9, 0.25, 0.1]);
    let points: Vec<(f64, usize)> = spec.beta.iter().flat_map(|&b| spec.n.iter().map(move |&n| (b, n))).collect();
    for &(beta, n) in &points {
        let p = ModelParams64::new(n, beta)?;
        if beta >= 1.0 {
            report.warnings.push(format!("beta = {beta} is not subcritical"));
        } else if p.scaled_distance() < 10.0 {
            report
                .warnings
                .push(format!("n = {n}, beta = {beta}: delta^2 n = {:.3} is too small for cutoff", p.scaled_distance()));
        }
    }
    report.records = grid_map(spec.workers, &points, |&(beta, n)| {
        let (rec, elapsed) = timed(|| {
            let p = ModelParams64::new(n, beta)?;
            let c = build_kernel(&p);
            let times = mixing_times(&c, &Start::Extremes, &eps, spec.cap_steps)?;
            let gap = chain_gap(&c)?;
            let (nf, d) = (n as f64, p.delta());
            let mut o = Fields::new().with("delta", d).with("scaled_distance", p.scaled_distance());
            record_times(&mut o, &eps, &times);
            let at = |e: f64| times[eps.iter().position(|&x| x == e).unwrap()].steps() as f64;
            let location = nf / (2.0 * d) * p.scaled_distance().ln();
            o.push("location", location);
            o.push("location_ratio", at(0.25) / location);
            o.push("window", at(0.1) - at(0.9));
            o.push("window_scaled", (at(0.1) - at(0.9)) * d / nf);
            o.push("gap", gap.gap);
            o.push("gap_scaled", gap.gap * nf / d);
            Ok((o, gap.residual))
        })?;
        Ok(Record {
            inputs: Fields::new().with("n", n as f64).with("beta", beta),
            outputs: rec.0,
            method: "exact-iteration, tridiagonal-bisection".into(),
            provenance: Provenance::Exact,
            residual: Some(rec.1),
            elapsed_s: elapsed,
        })
    })?;

    let records = report.records.clone();
    for &beta in &spec.beta {
        let series = by_n(&records, "beta", beta);
        let label = format!("beta={beta}");
        if cap_verdict(&mut report, &series, &label) {
            continue;
        }
        let last = series.last().expect("non-empty grid");
        let r = out(last, "location_ratio");
        report.verdicts.push(Verdict::check(
            format!("cutoff location @ {label}"),
            (0.7..=1.3).contains(&r),
            format!("t_mix(1/4) / [(n/2δ) log(δ²n)] = {r:.4} at n = {} (band [0.7, 1.3])", last.inputs.get("n").unwrap()),
        ));
        let g = out(last, "gap_scaled");
        report.verdicts.push(Verdict::check(
            format!("gap scale @ {label}"),
            (0.8..=1.25).contains(&g),
            format!("gap·n/δ = {g:.4} at n = {} (band [0.8, 1.25])", last.inputs.get("n").unwrap()),
        ));
        if series.len() < 2 {
            report
                .verdicts
                .push(Verdict::not_applicable(format!("cutoff trend @ {label}"), "single n"));
            report
                .verdicts
                .push(Verdict::not_applicable(format!("cutoff window @ {label}"), "single n"));
            continue;
        }
        let ratios: Vec<f64> = series.iter().map(|r| out(r, "location_ratio")).collect();
        let approaching = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        report.verdicts.push(Verdict::check(
            format!("cutoff trend @ {label}"),
            approaching,
            format!("location ratios {ratios:.4?} approach 1"),
        ));
        let spread = max_over_min(series.iter().map(|r| out(r, "window_scaled")));
        report.verdicts.push(Verdict::check(
            format!("cutoff window @ {label}"),
            spread < 2.0,
            format!("window·δ/n spread {spread:.4} across the grid (limit 2)"),
        ));
    }
    Ok(report)
}

struct Series {
    label: String,
    key: &'static str,
    value: f64,
}

impl Series {
    fn beta(&self, n: usize) -> f64 {
        match self.key {
            "alpha" => window_beta(n, self.value),
            _ => self.value,
        }
    }
}

pub fn critical_scan(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    let eps = eps_with(spec, &[0.25]);
    let series: Vec<Series> = spec
        .beta
        .iter()
        .map(|&b| Series {
            label: format!("beta={b}"),
            key: "beta",
            value: b,
        })
        .chain(spec.alpha.iter().map(|&a| Series {
            label: format!("alpha={a}"),
            key: "alpha",
            value: a,
        }))
        .collect();
    let points: Vec<(usize, usize)> = (0..series.len()).flat_map(|s| spec.n.iter().map(move |&n| (s, n))).collect();
    for &(s, n) in &points {
        let p = ModelParams64::new(n, series[s].beta(n).max(0.0))?;
        if p.scaled_distance() > 10.0 {
            report.warnings.push(format!(
                "n = {n}, {}: delta^2 n = {:.3} is outside the critical window",
                series[s].label,
                p.scaled_distance()
            ));
        }
    }
    report.records = grid_map(spec.workers, &points, |&(s, n)| {
        let beta = series[s].beta(n);
        let ((o, res), elapsed) = timed(|| {
            let p = ModelParams64::new(n, beta)?;
            let c = build_kernel(&p);
            let times = mixing_times(&c, &Start::Extremes, &eps, spec.cap_steps)?;
            let gap = chain_gap(&c)?;
            let n32 = (n as f64).powf(1.5);
            let mut o = Fields::new();
            record_times(&mut o, &eps, &times);
            let t = times[eps.iter().position(|&x| x == 0.25).unwrap()].steps() as f64;
            o.push("t_mix_scaled", t / n32);
            o.push("gap", gap.gap);
            o.push("gap_scaled", gap.gap * n32);
            o.push("gap_times_t_mix", gap.gap * t);
            Ok((o, gap.residual))
        })?;
        let mut inputs = Fields::new().with("n", n as f64).with("beta", beta);
        if series[s].key == "alpha" {
            inputs.push("alpha", series[s].value);
        }
        Ok(Record {
            inputs,
            outputs: o,
            method: "exact-iteration, tridiagonal-bisection".into(),
            provenance: Provenance::Exact,
            residual: Some(res),
            elapsed_s: elapsed,
        })
    })?;

    let records = report.records.clone();
    for s in &series {
        let rs: Vec<&Record> = by_n(&records, s.key, s.value)
            .into_iter()
            .filter(|r| s.key == "alpha" || r.inputs.get("alpha").is_none())
            .collect();
        let capped = cap_verdict(&mut report, &rs, &s.label);
        if capped || rs.len() < 2 {
            let why = if capped { "capped mixing times" } else { "single n" };
            for name in ["t_mix scaling", "gap scaling", "no cutoff"] {
                report
                    .verdicts
                    .push(Verdict::not_applicable(format!("{name} @ {}", s.label), why));
            }
            continue;
        }
        for (name, key) in [("t_mix scaling", "t_mix_scaled"), ("gap scaling", "gap_scaled")] {
            let ratios: Vec<f64> = rs.windows(2).map(|w| out(w[1], key) / out(w[0], key)).collect();
            report.verdicts.push(Verdict::check(
                format!("{name} @ {}", s.label),
                ratios.iter().all(|r| (0.75..=1.33).contains(r)),
                format!("successive ratios of {key}: {ratios:.4?} (band [0.75, 1.33])"),
            ));
        }
        let band = max_over_min(rs.iter().map(|r| out(r, "gap_times_t_mix")));
        report.verdicts.push(Verdict::check(
            format!("no cutoff @ {}", s.label),
            band <= 1.5,
            format!("gap·t_mix(1/4) spread {band:.4} (limit 1.5)"),
        ));
    }
    for &a in spec.alpha.iter().filter(|&&a| a > 0.0) {
        if !spec.alpha.contains(&-a) {
            continue;
        }
        let plus = by_n(&records, "alpha", a);
        let minus = by_n(&records, "alpha", -a);
        let worst = plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| {
                let (x, y) = (out(p, &eps_key(0.25)), out(m, &eps_key(0.25)));
                x.max(y) / x.min(y)
            })
            .fold(1.0, f64::max);
        report.verdicts.push(Verdict::check(
            format!("window symmetry @ alpha=±{a}"),
            worst <= 2.0,
            format!("largest t_mix(1/4) ratio between β = 1 ∓ α/√n is {worst:.3} (limit 2)"),
        ));
    }
    Ok(report)
}

fn require_supercritical(beta: f64) -> Result<f64> {
    zeta(beta).map_err(|_| HarnessError::Invalid(format!("beta = {beta}: this experiment needs beta > 1")))
}

pub fn lowtemp_scan(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    for &b in &spec.beta {
        require_supercritical(b)?;
    }
    let points: Vec<(f64, usize)> = spec.beta.iter().flat_map(|&b| spec.n.iter().map(move |&n| (b, n))).collect();
    report.records = grid_map(spec.workers, &points, |&(beta, n)| {
        let ((o, res), elapsed) = timed(|| {
            let p = ModelParams64::new(n, beta)?;
            let c = build_kernel(&p);
            let z = zeta(beta)?;
            let kz = c.nearest_state(z);
            let cross = hitting_time(&c, n, n - kz)?;
            let tau0 = hitting_time(&c, n, c.origin())?;
            let te = t_exp(&p)?;
            let zeta_cross = hitting_time(&c, kz, n - kz)?.log_expected;
            let commute = commute_time(&c, c.origin(), kz)?;
            let pi = stationary(&c)?;
            let mut o = Fields::new()
                .with("zeta", z)
                .with("k_zeta", kz as f64)
                .with("log_e1_tau_minus_zeta", cross.log_expected)
                .with("e1_tau_minus_zeta", cross.log_expected.exp())
                .with("log_e1_tau0", tau0.log_expected)
                .with("e1_tau0", tau0.log_expected.exp())
                .with("log_t_exp", te.log_value)
                .with("t_exp", te.log_value.exp())
                .with("crossing_ratio", (cross.log_expected - te.log_value).exp())
                .with("log_zeta_crossing", zeta_cross)
                .with("log_commute_0_zeta", commute.recurrence.log_expected)
                .with("commute_network_ratio", commute.network_ratio)
                .with("upper_well_mass", pi.mass(kz, n));
            let residual = (zeta_cross - commute.recurrence.log_expected).abs();
            o.push("identity_residual", residual);
            Ok((o, residual))
        })?;
        Ok(Record {
            inputs: Fields::new().with("n", n as f64).with("beta", beta),
            outputs: o,
            method: "ladder, network, quadrature".into(),
            provenance: Provenance::Exact,
            residual: Some(res),
            elapsed_s: elapsed,
        })
    })?;

    let records = report.records.clone();
    for &beta in &spec.beta {
        let series = by_n(&records, "beta", beta);
        let label = format!("beta={beta}");
        if series.len() < 2 {
            report
                .verdicts
                .push(Verdict::not_applicable(format!("crossing order @ {label}"), "single n"));
        } else {
            let band = max_over_min(series.iter().map(|r| (out(r, "log_e1_tau_minus_zeta") - out(r, "log_t_exp")).exp()));
            report.verdicts.push(Verdict::check(
                format!("crossing order @ {label}"),
                band <= 3.0,
                format!("E₁τ_(-ζ) / t_exp spread {band:.4} (limit 3)"),
            ));
        }
        let even: Vec<&&Record> = series.iter().filter(|r| (r.inputs.get("n").unwrap() as usize).is_multiple_of(2)).collect();
        if even.is_empty() {
            report.verdicts.push(Verdict::not_applicable(
                format!("commute identity @ {label}"),
                "the identity is exact for even n only",
            ));
        } else {
            let worst = even.iter().map(|r| out(r, "identity_residual")).fold(0.0, f64::max);
            report.verdicts.push(Verdict::check(
                format!("commute identity @ {label}"),
                worst <= 1e-9,
                format!("max |log E_ζτ_(-ζ) - log C(0,ζ)| = {worst:.2e} over even n"),
            ));
        }
        let mass = series.iter().map(|r| out(r, "upper_well_mass")).fold(f64::INFINITY, f64::min);
        report.verdicts.push(Verdict::check(
            format!("upper well mass @ {label}"),
            mass >= 0.05,
            format!("min π[ζ, 1] = {mass:.4} (limit 0.05)"),
        ));

        // Monte Carlo spot check at the smallest n
        let first = series[0];
        let n = first.inputs.get("n").unwrap() as usize;
        let low = n - out(first, "k_zeta") as usize;
        let exact = out(first, "e1_tau_minus_zeta");
        let hs = HittingSpec {
            start_plus: n,
            target: TargetSet::at_most(low),
            reps: spec.reps,
            master_seed: spec.seed,
            cap_steps: spec.cap_steps,
            censored: false,
        };
        let start = Instant::now();
        let est = estimate_hitting(&ModelParams64::new(n, beta)?, &hs, spec.workers)?;
        let z = (est.mean - exact) / est.std_error;
        report.records.push(Record {
            inputs: Fields::new().with("n", n as f64).with("beta", beta),
            outputs: Fields::new()
                .with("mc_mean_tau_minus_zeta", est.mean)
                .with("e1_tau_minus_zeta", exact)
                .with("z_score", z)
                .with("capped_replicates", est.capped as f64),
            method: "grand-coupling simulation".into(),
            provenance: Provenance::MonteCarlo {
                seed: spec.seed,
                reps: est.reps,
                std_error: est.std_error,
            },
            residual: None,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        let check = format!("monte carlo crossing @ n={n}, {label}");
        if est.capped > 0 {
            report.partial = true;
            report.verdicts.push(Verdict::new(
                check,
                Status::ResourceCap,
                format!("{} of {} replicates hit the {} step cap", est.capped, est.reps, spec.cap_steps),
            ));
        } else {
            report.verdicts.push(Verdict::check(
                check,
                z.abs() <= 3.0,
                format!("{:.1} ± {:.1} vs exact {exact:.1} (z = {z:.2})", est.mean, est.std_error),
            ));
        }
    }
    Ok(report)
}

pub fn limit_law_scan(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    let points: Vec<(f64, usize)> = spec.alpha.iter().flat_map(|&a| spec.n.iter().map(move |&n| (a, n))).collect();
    report.records = grid_map(spec.workers, &points, |&(alpha, n)| {
        let (d, elapsed) = timed(|| limit_law_distance(n, alpha))?;
        Ok(Record {
            inputs: Fields::new()
                .with("n", n as f64)
                .with("alpha", alpha)
                .with("beta", window_beta(n, alpha)),
            outputs: Fields::new().with("l1_distance", d),
            method: "exact stationary law, adaptive quadrature".into(),
            provenance: Provenance::Exact,
            residual: None,
            elapsed_s: elapsed,
        })
    })?;
    let records = report.records.clone();
    for &alpha in &spec.alpha {
        let series = by_n(&records, "alpha", alpha);
        let label = format!("alpha={alpha}");
        let (first, last) = (series[0], *series.last().unwrap());
        let (d0, d1) = (out(first, "l1_distance"), out(last, "l1_distance"));
        let n_last = last.inputs.get("n").unwrap();
        if series.len() < 2 {
            report
                .verdicts
                .push(Verdict::not_applicable(format!("limit law trend @ {label}"), "single n"));
        } else {
            report.verdicts.push(Verdict::check(
                format!("limit law trend @ {label}"),
                d1 < d0,
                format!("L1 distance {d0:.4} at n = {} vs {d1:.4} at n = {n_last}", first.inputs.get("n").unwrap()),
            ));
        }
        if alpha == 0.0 && n_last >= 4096.0 {
            report.verdicts.push(Verdict::check(
                format!("limit law distance @ {label}"),
                d1 < 0.15,
                format!("L1 distance {d1:.4} at n = {n_last} (limit 0.15)"),
            ));
        }
    }
    Ok(report)
}

/// `(½ + 1/(2(ζ²β/δ - 1)), 1/(2(ζ²β/δ - 1)))`: the cutoff constants of the
/// censored chain from its worst start and from all-plus.
pub fn censored_cutoff_constants(beta: f64) -> Result<(f64, f64)> {
    let z = require_supercritical(beta)?;
    let kappa = z * z * beta / (beta - 1.0);
    let plus = 1.0 / (2.0 * (kappa - 1.0));
    Ok((0.5 + plus, plus))
}

pub fn censored_scan(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    for &b in &spec.beta {
        require_supercritical(b)?;
    }
    let eps = eps_with(spec, &[0.25]);
    let points: Vec<(f64, usize)> = spec.beta.iter().flat_map(|&b| spec.n.iter().map(move |&n| (b, n))).collect();
    for &(beta, n) in &points {
        let p = ModelParams64::new(n, beta)?;
        if p.scaled_distance() < 10.0 {
            report
                .warnings
                .push(format!("n = {n}, beta = {beta}: delta^2 n = {:.3} is small", p.scaled_distance()));
        }
    }
    report.records = grid_map(spec.workers, &points, |&(beta, n)| {
        let ((o, res), elapsed) = timed(|| {
            let p = ModelParams64::new(n, beta)?;
            let c: MagChain<f64> = build_censored_kernel(&p);
            let worst = mixing_times(&c, &Start::Extremes, &eps, spec.cap_steps)?;
            let top = mixing_times(&c, &Start::Top, &[0.25], spec.cap_steps)?[0];
            let gap = chain_gap(&c)?;
            let (c_n, c_plus) = censored_cutoff_constants(beta)?;
            let (nf, d) = (n as f64, p.delta());
            let scale = nf / d * p.scaled_distance().ln();
            let mut o = Fields::new().with("zeta", zeta(beta)?);
            let capped = record_times(&mut o, &eps, &worst) | top.exact().is_none();
            o.push("capped", capped as u8 as f64);
            let t = worst[eps.iter().position(|&x| x == 0.25).unwrap()].steps() as f64;
            let t_top = top.steps() as f64;
            o.push("t_mix_top", t_top);
            o.push("cutoff_constant", c_n);
            o.push("allplus_constant", c_plus);
            o.push("t_n", c_n * scale);
            o.push("t_mix_ratio", t / (c_n * scale));
            o.push("top_ratio_t_n", t_top / (c_n * scale));
            o.push("top_ratio_allplus", t_top / (c_plus * scale));
            o.push("gap", gap.gap);
            o.push("gap_scaled", gap.gap * nf / d);
            Ok((o, gap.residual))
        })?;
        Ok(Record {
            inputs: Fields::new().with("n", n as f64).with("beta", beta),
            outputs: o,
            method: "exact-iteration (censored), tridiagonal-bisection".into(),
            provenance: Provenance::Exact,
            residual: Some(res),
            elapsed_s: elapsed,
        })
    })?;

    let records = report.records.clone();
    for &beta in &spec.beta {
        let series = by_n(&records, "beta", beta);
        let label = format!("beta={beta}");
        if cap_verdict(&mut report, &series, &label) {
            continue;
        }
        let ratios: Vec<f64> = series.iter().map(|r| out(r, "t_mix_ratio")).collect();
        report.verdicts.push(Verdict::check(
            format!("censored cutoff order @ {label}"),
            ratios.iter().all(|r| (0.4..=2.5).contains(r)),
            format!("t_mix(1/4) / t_n = {ratios:.4?} (band [0.4, 2.5])"),
        ));
        if series.len() < 2 {
            report
                .verdicts
                .push(Verdict::not_applicable(format!("censored cutoff trend @ {label}"), "single n"));
        } else {
            let (a, b) = (ratios[0], *ratios.last().unwrap());
            report.verdicts.push(Verdict::check(
                format!("censored cutoff trend @ {label}"),
                (b - 1.0).abs() < (a - 1.0).abs(),
                format!("ratio {a:.4} at the smallest n, {b:.4} at the largest"),
            ));
        }
        let gaps: Vec<f64> = series.iter().map(|r| out(r, "gap_scaled")).collect();
        report.verdicts.push(Verdict::check(
            format!("censored gap order @ {label}"),
            gaps.iter().all(|g| (0.1..=10.0).contains(g)),
            format!("gap·n/δ = {gaps:.4?} (band [0.1, 10])"),
        ));
        let top: Vec<String> = series
            .iter()
            .map(|r| format!("{:.4} / {:.4}", out(r, "top_ratio_t_n"), out(r, "top_ratio_allplus")))
            .collect();
        report.verdicts.push(Verdict::not_applicable(
            format!("all-plus start @ {label}"),
            format!(
                "t_mix from all-plus over t_n / over the all-plus constant: {} (constants {:.4}, {:.4})",
                top.join(", "),
                out(series[0], "cutoff_constant"),
                out(series[0], "allplus_constant")
            ),
        ));
    }
    Ok(report)
}

pub fn figure_tmix(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    let eps = eps_with(spec, &[0.25]);
    let points: Vec<(usize, f64)> = spec.n.iter().flat_map(|&n| spec.beta.iter().map(move |&b| (n, b))).collect();
    report.records = grid_map(spec.workers, &points, |&(n, beta)| {
        let ((o, res), elapsed) = timed(|| {
            let p = ModelParams64::new(n, beta)?;
            let c = build_kernel(&p);
            let times = mixing_times(&c, &Start::Extremes, &eps, spec.cap_steps)?;
            let gap = chain_gap(&c)?;
            let mut o = Fields::new();
            record_times(&mut o, &eps, &times);
            o.push("gap", gap.gap);
            Ok((o, gap.residual))
        })?;
        Ok(Record {
            inputs: Fields::new().with("n", n as f64).with("beta", beta),
            outputs: o,
            method: "exact-iteration, tridiagonal-bisection".into(),
            provenance: Provenance::Exact,
            residual: Some(res),
            elapsed_s: elapsed,
        })
    })?;
    let capped: Vec<String> = report
        .records
        .iter()
        .filter(|r| out(r, "capped") != 0.0)
        .map(|r| format!("(n={}, beta={})", r.inputs.get("n").unwrap(), r.inputs.get("beta").unwrap()))
        .collect();
    if !capped.is_empty() {
        report.partial = true;
        report.warnings.push(format!(
            "step cap {} reached at {}; those values are lower bounds",
            spec.cap_steps,
            capped.join(", ")
        ));
    }
    Ok(report)
}

/// Indices of the local maxima of `w` (plateaus count once, at their left end).
pub fn local_maxima(w: &[f64]) -> Vec<usize> {
    let m = w.len();
    (0..m)
        .filter(|&i| (i == 0 || w[i] > w[i - 1]) && (i + 1 == m || w[i] >= w[i + 1]))
        .collect()
}

pub fn figure_pi(spec: &ExperimentSpec) -> Result<RunReport> {
    let mut report = RunReport::new(spec);
    let points: Vec<(usize, f64)> = spec.n.iter().flat_map(|&n| spec.beta.iter().map(move |&b| (n, b))).collect();
    let laws = grid_map(spec.workers, &points, |&(n, beta)| {
        let p = ModelParams64::new(n, beta)?;
        let c = build_kernel(&p);
        let pi = stationary(&c)?;
        Ok((p, c.magnetizations(), pi))
    })?;
    for (p, s, pi) in &laws {
        let (n, beta) = (p.n(), p.beta());
        for (k, (&sk, (&w, &lw))) in s.iter().zip(pi.probs().iter().zip(pi.log_probs())).enumerate() {
            report.records.push(Record {
                inputs: Fields::new()
                    .with("n", n as f64)
                    .with("beta", beta)
                    .with("k", k as f64)
                    .with("s", sk),
                outputs: Fields::new().with("pi", w).with("log_pi", lw),
                method: "detailed balance, Gibbs cross-check".into(),
                provenance: Provenance::Exact,
                residual: None,
                elapsed_s: 0.0,
            });
        }
        let modes: Vec<f64> = local_maxima(pi.probs()).into_iter().map(|i| s[i]).collect();
        let label = format!("n={n}, beta={beta}");
        let nf = n as f64;
        if beta > 1.0 && p.delta() * nf.sqrt() >= 2.0 {
            let z = zeta(beta)?;
            let ok = modes.len() == 2 && modes.iter().all(|m| (m.abs() - z).abs() <= 4.0 / nf) && modes[0] < 0.0;
            report.verdicts.push(Verdict::check(
                format!("bimodal @ {label}"),
                ok,
                format!("modes {modes:.4?} vs ±ζ = ±{z:.4} (tolerance 4/n)"),
            ));
        } else if beta < 1.0 && p.scaled_distance() >= 1.0 {
            report.verdicts.push(Verdict::check(
                format!("unimodal @ {label}"),
                modes.len() == 1 && modes[0].abs() <= 1.0 / nf,
                format!("modes {modes:.4?}"),
            ));
        } else {
            report
                .verdicts
                .push(Verdict::not_applicable(format!("modes @ {label}"), format!("modes {modes:.4?}")));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::defaults(kind);
        s.n = vec![60, 120];
        s
    }

    #[test]
    fn censored_constant_near_critical() {
        let (c, plus) = censored_cutoff_constants(1.01).unwrap();
        assert!((0.70..=0.80).contains(&c), "{c}");
        assert!((c - plus - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_n_marks_trends_not_applicable() {
        let mut s = ExperimentSpec::defaults(ExperimentKind::CutoffScan);
        s.n = vec![300];
        let r = cutoff_scan(&s).unwrap();
        assert_eq!(r.records.len(), 1);
        let trend = r.verdicts.iter().find(|v| v.check.starts_with("cutoff trend")).unwrap();
        assert_eq!(trend.status, Status::NotApplicable);
    }

    #[test]
    fn wrong_regime_warns_but_runs() {
        let mut s = ExperimentSpec::defaults(ExperimentKind::CutoffScan);
        s.n = vec![50];
        s.beta = vec![1.2];
        let r = cutoff_scan(&s).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("not subcritical")));
    }

    #[test]
    fn records_follow_grid_order_for_any_worker_count() {
        let mut a = small(ExperimentKind::CriticalScan);
        a.workers = Some(1);
        let mut b = a.clone();
        b.workers = Some(3);
        let (ra, rb) = (critical_scan(&a).unwrap(), critical_scan(&b).unwrap());
        let strip = |r: &RunReport| r.records.iter().map(|x| (x.inputs.clone(), x.outputs.clone())).collect::<Vec<_>>();
        assert_eq!(strip(&ra), strip(&rb));
        assert_eq!(ra.records[0].inputs.get("n"), Some(60.0));
    }

    #[test]
    fn lowtemp_rejects_subcritical_beta() {
        let mut s = small(ExperimentKind::LowtempScan);
        s.beta = vec![0.9];
        assert!(matches!(lowtemp_scan(&s), Err(HarnessError::Invalid(_))));
    }

    #[test]
    fn lowtemp_monte_carlo_record_carries_seed_and_error() {
        let mut s = small(ExperimentKind::LowtempScan);
        s.n = vec![20, 30];
        s.reps = 50;
        s.seed = 17;
        let r = lowtemp_scan(&s).unwrap();
        let mc = r.records.last().unwrap();
        match mc.provenance {
            Provenance::MonteCarlo { seed, reps, std_error } => {
                assert_eq!((seed, reps), (17, 50));
                assert!(std_error > 0.0);
            }
            Provenance::Exact => panic!("expected a Monte Carlo record"),
        }
        assert!(r.records[..2].iter().all(|x| x.provenance == Provenance::Exact));
    }

    #[test]
    fn tiny_cap_gives_partial_report() {
        let mut s = small(ExperimentKind::CriticalScan);
        s.cap_steps = 10;
        let r = critical_scan(&s).unwrap();
        assert!(r.partial);
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn local_maxima_of_simple_shapes() {
        assert_eq!(local_maxima(&[1.0, 2.0, 1.0]), vec![1]);
        assert_eq!(local_maxima(&[3.0, 2.0, 1.0, 2.0]), vec![0, 3]);
        assert_eq!(local_maxima(&[1.0, 2.0, 2.0, 1.0]), vec![1]);
    }

    #[test]
    fn figure_pi_shows_transition() {
        let r = figure_pi(&ExperimentSpec::defaults(ExperimentKind::FigurePi)).unwrap();
        assert_eq!(r.records.len(), 4 * 501);
        assert!(!r.failed(), "{}", r.summary());
        assert!(r.verdicts.iter().any(|v| v.check.starts_with("bimodal")));
    }
}
