//! Experiment specifications and their line-oriented `key = value` file format.
//!
//! ```text
//! # subcritical cutoff grid
//! kind = cutoff-scan
//! n = 500, 2000, 8000
//! beta = 0.8
//! eps = 0.9, 0.75, 0.25, 0.1
//! seed = 1
//! ```
//!
//! Blank lines and `#` comments are ignored. Lists are comma separated and may
//! be empty (`alpha =`). Keys left out take the defaults of the chosen kind;
//! `kind` itself is required. Recognized keys: `kind`, `n`, `beta`, `alpha`,
//! `eps`, `seed`, `reps`, `cap_steps`, `workers`, `out`, `format`, `select`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CutoffScan,
    CriticalScan,
    LowtempScan,
    LimitLaw,
    CensoredScan,
    FigureTmix,
    FigurePi,
    Verify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::CutoffScan,
        ExperimentKind::CriticalScan,
        ExperimentKind::LowtempScan,
        ExperimentKind::LimitLaw,
        ExperimentKind::CensoredScan,
        ExperimentKind::FigureTmix,
        ExperimentKind::FigurePi,
        ExperimentKind::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CutoffScan => "cutoff-scan",
            ExperimentKind::CriticalScan => "critical-scan",
            ExperimentKind::LowtempScan => "lowtemp-scan",
            ExperimentKind::LimitLaw => "limit-law",
            ExperimentKind::CensoredScan => "censored-scan",
            ExperimentKind::FigureTmix => "figure-tmix",
            ExperimentKind::FigurePi => "figure-pi",
            ExperimentKind::Verify => "verify",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    /// Accepts the full name or the short form without `-scan`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().strip_suffix("-scan") == Some(s))
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                HarnessError::Invalid(format!("unknown experiment kind {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Invalid(format!("unknown format {other:?} (csv or json)"))),
        }
    }
}

/// Default step cap for exact iterations and simulations driven by a spec.
pub const DEFAULT_SPEC_CAP_STEPS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    pub beta: Vec<f64>,
    /// Critical-window offsets: `beta = 1 - alpha / sqrt(n)`.
    pub alpha: Vec<f64>,
    pub eps: Vec<f64>,
    pub seed: u64,
    /// Monte Carlo replicates per spot check.
    pub reps: usize,
    pub cap_steps: u64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Check selectors for `verify`.
    pub select: Vec<String>,
}

impl ExperimentSpec {
    /// The reference grid of each experiment kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut spec = Self {
            kind,
            n: Vec::new(),
            beta: Vec::new(),
            alpha: Vec::new(),
            eps: vec![0.25],
            seed: 1,
            reps: 400,
            cap_steps: DEFAULT_SPEC_CAP_STEPS,
            workers: None,
            out: None,
            format: OutputFormat::Json,
            select: Vec::new(),
        };
        match kind {
            ExperimentKind::CutoffScan => {
                spec.n = vec![500, 2000, 8000];
                spec.beta = vec![0.8];
                spec.eps = vec![0.9, 0.75, 0.25, 0.1];
            }
            ExperimentKind::CriticalScan => {
                spec.n = vec![256, 512, 1024, 2048];
                spec.beta = vec![1.0];
            }
            ExperimentKind::LowtempScan => {
                spec.n = vec![40, 80, 160];
                spec.beta = vec![1.3];
            }
            ExperimentKind::LimitLaw => {
                spec.n = vec![256, 1024, 4096];
                spec.alpha = vec![0.0];
            }
            ExperimentKind::CensoredScan => {
                spec.n = vec![1000, 4000];
                spec.beta = vec![1.3];
            }
            ExperimentKind::FigureTmix => {
                spec.n = vec![100];
                spec.beta = (0..20).map(|i| (50 + 5 * i) as f64 / 100.0).collect();
                spec.cap_steps = 10_000_000;
            }
            ExperimentKind::FigurePi => {
                spec.n = vec![500];
                spec.beta = vec![0.95, 1.0, 1.1, 1.2];
            }
            ExperimentKind::Verify => {}
        }
        spec
    }

    /// Checks the grid and caps for the chosen kind.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.kind != ExperimentKind::Verify {
            if self.n.is_empty() {
                return bad(format!("{}: n grid is empty", self.kind));
            }
            let needs_alpha = self.kind == ExperimentKind::LimitLaw;
            if needs_alpha && self.alpha.is_empty() {
                return bad(format!("{}: alpha grid is empty", self.kind));
            }
            if !needs_alpha && self.beta.is_empty() && self.alpha.is_empty() {
                return bad(format!("{}: beta grid is empty", self.kind));
            }
            if self.eps.is_empty() {
                return bad(format!("{}: eps grid is empty", self.kind));
            }
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < 2) {
            return bad(format!("n = {n}, need n >= 2"));
        }
        if let Some(b) = self.beta.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return bad(format!("beta = {b}, need finite beta >= 0"));
        }
        if let Some(a) = self.alpha.iter().find(|a| !a.is_finite()) {
            return bad(format!("alpha = {a} is not finite"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("eps = {e} not in (0, 1)"));
        }
        if self.cap_steps == 0 {
            return bad("cap_steps must be positive".into());
        }
        if self.reps < 2 {
            return bad(format!("reps = {}, need at least 2", self.reps));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        Ok(())
    }

    /// Parses the `key = value` format; keys left out keep the kind defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| HarnessError::SpecSyntax {
                line,
                msg: format!("expected key = value, got {body:?}"),
            })?;
            let key = key.trim();
            if pairs.iter().any(|p| p.1 == key) {
                return Err(HarnessError::SpecSyntax {
                    line,
                    msg: format!("duplicate key {key:?}"),
                });
            }
            pairs.push((line, key, value.trim()));
        }
        let (_, _, kind) = pairs
            .iter()
            .find(|p| p.1 == "kind")
            .ok_or_else(|| HarnessError::Invalid("spec has no `kind` line".into()))?;
        let mut spec = Self::defaults(kind.parse()?);
        for (line, key, value) in pairs {
            let wrap = |e: HarnessError| HarnessError::SpecSyntax { line, msg: e.to_string() };
            match key {
                "kind" => {}
                "n" => spec.n = parse_list(value).map_err(wrap)?,
                "beta" => spec.beta = parse_list(value).map_err(wrap)?,
                "alpha" => spec.alpha = parse_list(value).map_err(wrap)?,
                "eps" => spec.eps = parse_list(value).map_err(wrap)?,
                "seed" => spec.seed = parse_one(value).map_err(wrap)?,
                "reps" => spec.reps = parse_one(value).map_err(wrap)?,
                "cap_steps" => spec.cap_steps = parse_one(value).map_err(wrap)?,
                "workers" => spec.workers = Some(parse_one(value).map_err(wrap)?),
                "out" => spec.out = (!value.is_empty()).then(|| PathBuf::from(value)),
                "format" => spec.format = value.parse().map_err(wrap)?,
                "select" => {
                    spec.select = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                }
                other => {
                    return Err(HarnessError::SpecSyntax {
                        line,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

fn parse_one<T: FromStr>(value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| HarnessError::Invalid(format!("{value:?}: {e}")))
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(parse_one).collect()
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

/// Writes every field; `f64` uses the shortest representation that parses
/// back to the same value, so the text round-trips exactly.
impl fmt::Display for ExperimentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind = {}", self.kind)?;
        writeln!(f, "n = {}", join(&self.n))?;
        writeln!(f, "beta = {}", join(&self.beta))?;
        writeln!(f, "alpha = {}", join(&self.alpha))?;
        writeln!(f, "eps = {}", join(&self.eps))?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "reps = {}", self.reps)?;
        writeln!(f, "cap_steps = {}", self.cap_steps)?;
        if let Some(w) = self.workers {
            writeln!(f, "workers = {w}")?;
        }
        if let Some(out) = &self.out {
            writeln!(f, "out = {}", out.display())?;
        }
        writeln!(f, "format = {}", self.format)?;
        writeln!(f, "select = {}", self.select.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in ExperimentKind::ALL {
            ExperimentSpec::defaults(kind).validate().unwrap();
        }
    }

    #[test]
    fn parses_partial_spec_over_defaults() {
        let s = ExperimentSpec::parse("kind = cutoff\n# grid\nn = 500 , 2000\n\nseed=7  # master\n").unwrap();
        assert_eq!(s.kind, ExperimentKind::CutoffScan);
        assert_eq!(s.n, vec![500, 2000]);
        assert_eq!(s.beta, vec![0.8]);
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(
            ExperimentSpec::parse("kind = verify\nfoo = 1"),
            Err(HarnessError::SpecSyntax { line: 2, .. })
        ));
        assert!(ExperimentSpec::parse("n = 4").is_err());
        assert!(ExperimentSpec::parse("kind = verify\nseed = 1\nseed = 2").is_err());
        assert!(ExperimentSpec::parse("kind = cutoff-scan\nn =").is_err());
        assert!(ExperimentSpec::parse("kind = cutoff-scan\ncap_steps = 0").is_err());
        assert!(ExperimentSpec::parse("kind = cutoff-scan\neps = 1.5").is_err());
        assert!(ExperimentSpec::parse("kind = cutoff-scan\nbeta = x").is_err());
        assert!(ExperimentSpec::parse("kind = warp-scan").is_err());
        assert!(ExperimentSpec::parse("kind = cutoff-scan\njust text").is_err());
    }

    #[test]
    fn optional_fields_round_trip() {
        let mut s = ExperimentSpec::defaults(ExperimentKind::Verify);
        s.workers = Some(3);
        s.out = Some(PathBuf::from("out/v.json"));
        s.select = vec!["gap-equality".into(), "7".into()];
        s.format = OutputFormat::Csv;
        assert_eq!(ExperimentSpec::parse(&s.to_string()).unwrap(), s);
    }
}
