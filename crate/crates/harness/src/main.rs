use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cwglauber::chain::{build_censored_kernel, build_kernel, mixing_times, stationary, tv_curve, MagChain, Start};
use cwglauber::electrical::{commute_time, hitting_time, network, t_exp, zeta};
use cwglauber::sim::{estimate_coalescence, estimate_hitting, HittingSpec, TargetSet};
use cwglauber::spectral::{chain_gap, full_dynamics_gap_with, FullMethod};
use cwglauber::ModelParams64;
use cwglauber_harness::report::csv_number;
use cwglauber_harness::spec::DEFAULT_SPEC_CAP_STEPS;
use cwglauber_harness::verify::{verify, VerifyOptions};
use cwglauber_harness::{scans, ExperimentKind, ExperimentSpec, HarnessError, OutputFormat, Result};

/// Exact and Monte Carlo analysis of Glauber dynamics for the Curie-Weiss model.
///
/// Exit codes: 0 success, 1 check failure, 2 invalid input, 3 resource cap.
#[derive(Debug, Parser)]
#[command(name = "cwglauber", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Number of sites (comma-separated list for scans)
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<usize>,
    /// Inverse temperature (comma-separated list for scans)
    #[arg(long, global = true, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Critical-window offset, beta = 1 - alpha/sqrt(n)
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<f64>,
    /// Total-variation thresholds for mixing times
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid points and replicates
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Step cap for exact iterations and simulations
    #[arg(long, global = true)]
    cap_steps: Option<u64>,
    /// Experiment spec file (key = value lines)
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StartArg {
    Top,
    Bottom,
    Extremes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Dense,
    Power,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimMode {
    Hitting,
    Coalescence,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    /// |S| <= 1/n
    NearZero,
    /// S <= -zeta
    LowerWell,
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Use the censored (|S|) chain
    #[arg(long)]
    censored: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition probabilities of the magnetization chain
    Kernel(ChainArgs),
    /// Stationary law of the magnetization chain
    Stationary(ChainArgs),
    /// Exact total-variation curve d(t)
    Tvcurve {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value = "extremes")]
        start: StartArg,
        /// Last time step (default 10 n log n)
        #[arg(long)]
        t_max: Option<u64>,
    },
    /// Exact mixing times
    Mix {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value = "extremes")]
        start: StartArg,
    },
    /// Spectral gap of the magnetization chain
    Gap(ChainArgs),
    /// Spectral gap of the full 2^n dynamics (n <= 12)
    Fullgap {
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// Conductances, resistances and commute times
    Electric(ChainArgs),
    /// Positive root of tanh(beta x) = x
    Zeta,
    /// The supercritical time scale t_exp
    Texp,
    /// Monte Carlo hitting or coalescence times
    Simulate {
        #[arg(long, value_enum, default_value = "hitting")]
        mode: SimMode,
        #[arg(long, value_enum, default_value = "near-zero")]
        target: TargetArg,
        /// Plus spins in the start (default n)
        #[arg(long)]
        start_plus: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        censored: bool,
    },
    /// Grid experiment: cutoff, critical, lowtemp, limit-law, censored, figure-tmix, figure-pi
    Scan { kind: String },
    /// Acceptance checks by name or number; no selector runs the fast suite
    Verify { selectors: Vec<String> },
}

/// Flat output: a table or a single JSON object.
enum Output {
    Table { columns: Vec<&'static str>, rows: Vec<Vec<f64>> },
    Object(Value),
}

impl Output {
    fn render(&self, format: OutputFormat) -> String {
        match (self, format) {
            (Output::Table { columns, rows }, OutputFormat::Csv) => {
                let mut s = columns.join(",") + "\n";
                for r in rows {
                    s += &r.iter().map(|&x| csv_number(x)).collect::<Vec<_>>().join(",");
                    s.push('\n');
                }
                s
            }
            (Output::Table { columns, rows }, OutputFormat::Json) => {
                let objs: Vec<Value> = rows
                    .iter()
                    .map(|r| Value::Object(columns.iter().zip(r).map(|(c, &x)| (c.to_string(), json!(x))).collect()))
                    .collect();
                serde_json::to_string_pretty(&objs).unwrap()
            }
            (Output::Object(v), OutputFormat::Json) => serde_json::to_string_pretty(v).unwrap(),
            (Output::Object(v), OutputFormat::Csv) => {
                let Value::Object(map) = v else {
                    return v.to_string() + "\n";
                };
                let scalars: Vec<(&String, String)> = map
                    .iter()
                    .filter_map(|(k, x)| match x {
                        Value::Number(num) => Some((k, num.as_f64().map(csv_number).unwrap_or_else(|| num.to_string()))),
                        Value::Bool(b) => Some((k, b.to_string())),
                        Value::String(s) => Some((k, s.clone())),
                        Value::Null => Some((k, String::new())),
                        _ => None,
                    })
                    .collect();
                let head: Vec<&str> = scalars.iter().map(|(k, _)| k.as_str()).collect();
                let vals: Vec<&str> = scalars.iter().map(|(_, v)| v.as_str()).collect();
                format!("{}\n{}\n", head.join(","), vals.join(","))
            }
        }
    }
}

struct Ctx {
    g: Global,
    file: Option<ExperimentSpec>,
}

impl Ctx {
    fn format(&self, fallback: OutputFormat) -> OutputFormat {
        match self.g.format {
            Some(Format::Csv) => OutputFormat::Csv,
            Some(Format::Json) => OutputFormat::Json,
            None => self.file.as_ref().map_or(fallback, |s| s.format),
        }
    }

    fn out(&self) -> Option<PathBuf> {
        self.g.out.clone().or_else(|| self.file.as_ref().and_then(|s| s.out.clone()))
    }

    fn seed(&self) -> u64 {
        self.g.seed.or(self.file.as_ref().map(|s| s.seed)).unwrap_or(1)
    }

    fn workers(&self) -> Option<usize> {
        self.g.workers.or(self.file.as_ref().and_then(|s| s.workers))
    }

    fn cap(&self) -> Result<u64> {
        let cap = self
            .g
            .cap_steps
            .or(self.file.as_ref().map(|s| s.cap_steps))
            .unwrap_or(DEFAULT_SPEC_CAP_STEPS);
        if cap == 0 {
            return Err(HarnessError::Invalid("--cap-steps must be positive".into()));
        }
        Ok(cap)
    }

    fn one<T: Copy>(&self, flag: &[T], from_file: Option<&Vec<T>>, name: &str) -> Result<T> {
        let vals = if flag.is_empty() { from_file.map(Vec::as_slice).unwrap_or(&[]) } else { flag };
        match vals {
            [v] => Ok(*v),
            [] => Err(HarnessError::Invalid(format!("--{name} is required"))),
            _ => Err(HarnessError::Invalid(format!("--{name} takes a single value here"))),
        }
    }

    fn n(&self) -> Result<usize> {
        self.one(&self.g.n, self.file.as_ref().map(|s| &s.n), "n")
    }

    fn beta(&self) -> Result<f64> {
        self.one(&self.g.beta, self.file.as_ref().map(|s| &s.beta), "beta")
    }

    fn params(&self) -> Result<ModelParams64> {
        Ok(ModelParams64::new(self.n()?, self.beta()?)?)
    }

    fn eps(&self) -> Result<Vec<f64>> {
        let eps = if !self.g.eps.is_empty() {
            self.g.eps.clone()
        } else {
            self.file.as_ref().map_or(vec![0.25], |s| s.eps.clone())
        };
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(HarnessError::Invalid(format!("--eps values must lie in (0, 1), got {eps:?}")));
        }
        Ok(eps)
    }
}

fn chain_for(p: &ModelParams64, censored: bool) -> MagChain<f64> {
    if censored {
        build_censored_kernel(p)
    } else {
        build_kernel(p)
    }
}

fn start_of(s: StartArg) -> Start<f64> {
    match s {
        StartArg::Top => Start::Top,
        StartArg::Bottom => Start::Bottom,
        StartArg::Extremes => Start::Extremes,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                    path: dir.display().to_string(),
                    source,
                })?;
            }
            std::fs::write(p, text).map_err(|source| HarnessError::Io {
                path: p.display().to_string(),
                source,
            })
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            if !text.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            Ok(())
        }
    }
}

/// Spec for `scan`/`verify`: the file if given, else the kind defaults, then
/// any flags on top.
fn build_spec(ctx: &Ctx, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let mut spec = match &ctx.file {
        Some(f) if f.kind != kind => {
            return Err(HarnessError::Invalid(format!(
                "spec file is a {} experiment, not {kind}",
                f.kind
            )))
        }
        Some(f) => f.clone(),
        None => ExperimentSpec::defaults(kind),
    };
    let g = &ctx.g;
    if !g.n.is_empty() {
        spec.n = g.n.clone();
    }
    if !g.beta.is_empty() {
        spec.beta = g.beta.clone();
        if g.alpha.is_empty() && kind != ExperimentKind::LimitLaw {
            spec.alpha.clear();
        }
    }
    if !g.alpha.is_empty() {
        spec.alpha = g.alpha.clone();
        if g.beta.is_empty() && kind == ExperimentKind::CriticalScan {
            spec.beta.clear();
        }
    }
    if !g.eps.is_empty() {
        spec.eps = g.eps.clone();
    }
    spec.seed = g.seed.unwrap_or(spec.seed);
    spec.workers = g.workers.or(spec.workers);
    spec.cap_steps = g.cap_steps.unwrap_or(spec.cap_steps);
    spec.out = g.out.clone().or(spec.out);
    if let Some(f) = g.format {
        spec.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    spec.validate()?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<i32> {
    let file = cli.global.spec.as_deref().map(ExperimentSpec::from_file).transpose()?;
    let ctx = Ctx { g: cli.global, file };
    let mut code = 0;
    let output = match cli.command {
        Command::Kernel(a) => {
            let c = chain_for(&ctx.params()?, a.censored);
            let rows = (0..c.len())
                .map(|i| {
                    vec![
                        c.plus_count(i) as f64,
                        c.magnetization(i),
                        c.up()[i],
                        c.hold()[i],
                        c.down()[i],
                        c.drift(i),
                    ]
                })
                .collect();
            Output::Table {
                columns: vec!["k", "s", "up", "hold", "down", "drift"],
                rows,
            }
        }
        Command::Stationary(a) => {
            let c = chain_for(&ctx.params()?, a.censored);
            let pi = stationary(&c)?;
            let rows = (0..c.len())
                .map(|i| vec![c.plus_count(i) as f64, c.magnetization(i), pi.probs()[i], pi.log_probs()[i]])
                .collect();
            Output::Table {
                columns: vec!["k", "s", "pi", "log_pi"],
                rows,
            }
        }
        Command::Tvcurve { chain, start, t_max } => {
            let p = ctx.params()?;
            let n = p.n() as f64;
            let t_max = t_max.unwrap_or((10.0 * n * n.ln().max(1.0)) as u64);
            if t_max > ctx.cap()? {
                return Err(HarnessError::ResourceCap(format!(
                    "--t-max {t_max} exceeds the step cap {}",
                    ctx.cap()?
                )));
            }
            let curve = tv_curve(&chain_for(&p, chain.censored), &start_of(start), t_max)?;
            Output::Table {
                columns: vec!["t", "d"],
                rows: curve.points.iter().map(|&(t, d)| vec![t as f64, d]).collect(),
            }
        }
        Command::Mix { chain, start } => {
            let p = ctx.params()?;
            let eps = ctx.eps()?;
            let times = mixing_times(&chain_for(&p, chain.censored), &start_of(start), &eps, ctx.cap()?)?;
            if times.iter().any(|t| t.exact().is_none()) {
                code = 3;
            }
            Output::Table {
                columns: vec!["eps", "t_mix", "exact"],
                rows: eps
                    .iter()
                    .zip(&times)
                    .map(|(&e, t)| vec![e, t.steps() as f64, t.exact().is_some() as u8 as f64])
                    .collect(),
            }
        }
        Command::Gap(a) => {
            let p = ctx.params()?;
            let r = chain_gap(&chain_for(&p, a.censored))?;
            let mut v = serde_json::to_value(&r).unwrap();
            v["relaxation_time"] = json!(r.relaxation_time());
            v["gap_scaled"] = json!(r.gap * p.n() as f64 / p.delta());
            Output::Object(v)
        }
        Command::Fullgap { method } => {
            let p = ctx.params()?;
            let m = match method {
                MethodArg::Auto => FullMethod::Auto,
                MethodArg::Dense => FullMethod::Dense,
                MethodArg::Power => FullMethod::PowerIteration,
            };
            let full = full_dynamics_gap_with(&p, m)?;
            let mag = chain_gap(&build_kernel(&p))?;
            let mut v = serde_json::to_value(&full).unwrap();
            v["magnetization_gap"] = json!(mag.gap);
            v["difference"] = json!((full.gap - mag.gap).abs());
            Output::Object(v)
        }
        Command::Electric(a) => {
            let p = ctx.params()?;
            let c = chain_for(&p, a.censored);
            let net = network(&c)?;
            match ctx.format(OutputFormat::Json) {
                OutputFormat::Csv => Output::Table {
                    columns: vec!["k", "s", "log_r", "log_c", "log_vertex_weight"],
                    rows: (0..net.edges())
                        .map(|x| {
                            vec![
                                c.plus_count(x) as f64,
                                c.magnetization(x),
                                net.log_r[x],
                                net.log_c[x],
                                net.log_vertex_weight(x),
                            ]
                        })
                        .collect(),
                },
                OutputFormat::Json => {
                    let mut v = json!({
                        "n": p.n(),
                        "beta": p.beta(),
                        "censored": a.censored,
                        "log_total_conductance": net.log_c_s,
                        "log_vertex_total": net.log_vertex_total,
                        "reference_edge": net.reference,
                    });
                    if !a.censored && p.beta() > 1.0 {
                        let kz = c.nearest_state(zeta(p.beta())?);
                        v["k_zeta"] = json!(kz);
                        v["commute_0_zeta"] = serde_json::to_value(commute_time(&c, c.origin(), kz)?).unwrap();
                        v["hitting_1_to_minus_zeta"] =
                            serde_json::to_value(hitting_time(&c, p.n(), p.n() - kz)?).unwrap();
                    } else {
                        v["hitting_top_to_origin"] =
                            serde_json::to_value(hitting_time(&c, c.len() - 1, c.origin())?).unwrap();
                    }
                    Output::Object(v)
                }
            }
        }
        Command::Zeta => {
            let beta = ctx.beta()?;
            Output::Object(json!({ "beta": beta, "zeta": zeta(beta)? }))
        }
        Command::Texp => {
            let p = ctx.params()?;
            let mut v = serde_json::to_value(t_exp(&p)?).unwrap();
            v["n"] = json!(p.n());
            v["beta"] = json!(p.beta());
            Output::Object(v)
        }
        Command::Simulate {
            mode,
            target,
            start_plus,
            reps,
            censored,
        } => {
            let p = ctx.params()?;
            let n = p.n();
            let reps = reps.or(ctx.file.as_ref().map(|s| s.reps)).unwrap_or(200);
            let (seed, workers, cap) = (ctx.seed(), ctx.workers(), ctx.cap()?);
            let summary = match mode {
                SimMode::Hitting => {
                    let target = match target {
                        TargetArg::NearZero => TargetSet::near_zero(n),
                        TargetArg::LowerWell => {
                            let kz = build_kernel(&p).nearest_state(zeta(p.beta())?);
                            TargetSet::at_most(n - kz)
                        }
                    };
                    let spec = HittingSpec {
                        start_plus: start_plus.unwrap_or(n),
                        target,
                        reps,
                        master_seed: seed,
                        cap_steps: cap,
                        censored,
                    };
                    estimate_hitting(&p, &spec, workers)?
                }
                SimMode::Coalescence => {
                    if censored {
                        return Err(HarnessError::Invalid("coalescence runs the free dynamics only".into()));
                    }
                    estimate_coalescence(&p, None, reps, seed, cap, workers)?.summary
                }
            };
            if summary.capped > 0 {
                code = 3;
            }
            match ctx.format(OutputFormat::Json) {
                OutputFormat::Csv => {
                    write_output(ctx.out().as_deref(), &summary.samples_csv())?;
                    return Ok(code);
                }
                OutputFormat::Json => {
                    let mut v = serde_json::to_value(&summary).unwrap();
                    v["n"] = json!(n);
                    v["beta"] = json!(p.beta());
                    v["provenance"] = json!("monte-carlo");
                    Output::Object(v)
                }
            }
        }
        Command::Scan { kind } => {
            let kind: ExperimentKind = kind.parse()?;
            if kind == ExperimentKind::Verify {
                return Err(HarnessError::Invalid("use the verify subcommand".into()));
            }
            let spec = build_spec(&ctx, kind)?;
            let report = scans::run(&spec)?;
            eprint!("{}", report.summary());
            write_output(spec.out.as_deref(), &report.render(spec.format))?;
            return Ok(report.exit_code());
        }
        Command::Verify { selectors } => {
            let selectors = if selectors.is_empty() {
                ctx.file.as_ref().map(|s| s.select.clone()).unwrap_or_default()
            } else {
                selectors
            };
            let opts = VerifyOptions {
                seed: ctx.seed(),
                workers: ctx.workers(),
            };
            let report = verify(&selectors, &opts)?;
            print!("{}", report.summary());
            let path = ctx.out().unwrap_or_else(|| PathBuf::from("verdicts.json"));
            write_output(Some(&path), &report.to_json())?;
            return Ok(report.exit_code());
        }
    };
    write_output(ctx.out().as_deref(), &output.render(ctx.format(OutputFormat::Json)))?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
