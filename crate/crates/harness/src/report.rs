//! Run reports: per-grid-point records, check verdicts and their CSV/JSON forms.

use std::fmt::Write as _;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::spec::{ExperimentSpec, OutputFormat};

/// Ordered `name -> value` pairs, serialized as a JSON object.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fields(Vec<(String, f64)>);

impl Fields {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.push(name, value);
        self
    }

    pub fn push(&mut self, name: &str, value: f64) {
        match self.0.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name.to_string(), value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Serialize for Fields {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            // JSON has no NaN or infinity
            if v.is_finite() {
                map.serialize_entry(k, v)?;
            } else {
                map.serialize_entry(k, &Option::<f64>::None)?;
            }
        }
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    MonteCarlo { seed: u64, reps: usize, std_error: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub inputs: Fields,
    pub outputs: Fields,
    /// Algorithm tags, e.g. `tridiagonal-bisection` or `ladder`.
    pub method: String,
    pub provenance: Provenance,
    pub residual: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    ResourceCap,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "N/A",
            Status::ResourceCap => "CAP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_s: Option<f64>,
}

impl Verdict {
    pub fn new(check: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            status,
            detail: detail.into(),
            elapsed_s: None,
            budget_s: None,
        }
    }

    pub fn check(check: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(check, Status::from_bool(ok), detail)
    }

    pub fn not_applicable(check: impl Into<String>, why: impl Into<String>) -> Self {
        Self::new(check, Status::NotApplicable, why)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvStamp {
    pub package: &'static str,
    pub version: &'static str,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub threads: usize,
    pub os: &'static str,
    pub arch: &'static str,
}

impl EnvStamp {
    pub fn new(master_seed: u64, workers: Option<usize>) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            master_seed,
            workers,
            threads: workers.unwrap_or_else(rayon::current_num_threads),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub env: EnvStamp,
    /// The spec in its file format, enough to rerun the experiment.
    pub spec: String,
    pub records: Vec<Record>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    /// Some grid point hit a step or size cap.
    pub partial: bool,
}

impl RunReport {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Self {
            experiment: spec.kind.to_string(),
            env: EnvStamp::new(spec.seed, spec.workers),
            spec: spec.to_string(),
            records: Vec::new(),
            verdicts: Vec::new(),
            warnings: Vec::new(),
            partial: false,
        }
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    pub fn capped(&self) -> bool {
        self.partial || self.verdicts.iter().any(|v| v.status == Status::ResourceCap)
    }

    /// 0 when clean, 1 on any failed verdict, otherwise 3 when capped.
    pub fn exit_code(&self) -> i32 {
        if self.failed() {
            1
        } else if self.capped() {
            3
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One row per record: input columns, output columns, then provenance.
    pub fn to_csv(&self) -> String {
        let mut inputs: Vec<&str> = Vec::new();
        let mut outputs: Vec<&str> = Vec::new();
        for r in &self.records {
            for (k, _) in r.inputs.iter() {
                if !inputs.contains(&k) {
                    inputs.push(k);
                }
            }
            for (k, _) in r.outputs.iter() {
                if !outputs.contains(&k) {
                    outputs.push(k);
                }
            }
        }
        let mut out = String::new();
        let header: Vec<&str> = inputs
            .iter()
            .chain(&outputs)
            .copied()
            .chain(["method", "provenance", "seed", "reps", "std_error", "residual", "elapsed_s"])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            row.extend(inputs.iter().map(|k| r.inputs.get(k).map(csv_number).unwrap_or_default()));
            row.extend(outputs.iter().map(|k| r.outputs.get(k).map(csv_number).unwrap_or_default()));
            row.push(r.method.clone());
            match r.provenance {
                Provenance::Exact => row.extend(["exact".into(), String::new(), String::new(), String::new()]),
                Provenance::MonteCarlo { seed, reps, std_error } => {
                    row.extend(["monte-carlo".into(), seed.to_string(), reps.to_string(), csv_number(std_error)])
                }
            }
            row.push(r.residual.map(csv_number).unwrap_or_default());
            row.push(csv_number(r.elapsed_s));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    /// Human-readable verdict lines.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        for v in &self.verdicts {
            let _ = write!(s, "{:<4} {}: {}", v.status.label(), v.check, v.detail);
            if let (Some(e), Some(b)) = (v.elapsed_s, v.budget_s) {
                let _ = write!(s, " [{e:.1} s / {b:.0} s]");
            }
            s.push('\n');
        }
        s
    }
}

/// Integers print as integers; everything else with 17 significant digits.
pub fn csv_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x.fract() == 0.0 && x.abs() < 9.0e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}
