use std::fmt;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use mhroots::empirical::{SampleOutcome, INFINITY_THRESHOLD};
use mhroots::expectation::{ExpectationKind, ExpectationResult};
use mhroots::ShapeSpec;
use serde::Serialize;
use serde_json::{json, Value};

use crate::McArgs;

pub const SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum Failure {
    BadInput(String),
    Cap(String),
    Verification(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::BadInput(_) | Failure::Io(_) => 2,
            Failure::Cap(_) => 3,
            Failure::Verification(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::BadInput(m) => write!(f, "invalid input: {m}"),
            Failure::Cap(m) => write!(f, "resource cap exceeded: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub sigmas: f64,
    pub tau: f64,
    pub miss_budget: f64,
    pub infinity_threshold: f64,
}

impl Tolerances {
    pub fn new(sigmas: f64, tau: f64, miss_budget: f64) -> Self {
        Tolerances { sigmas, tau, miss_budget, infinity_threshold: INFINITY_THRESHOLD }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub version: &'static str,
    pub subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub tolerances: Tolerances,
    pub wall_time_s: f64,
    pub result: Value,
}

impl RunReport {
    pub fn new(
        subcommand: &'static str,
        shape: Option<ShapeSpec>,
        mc: Option<McArgs>,
        tolerances: Tolerances,
        result: Value,
    ) -> Self {
        RunReport {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            shape,
            seed: mc.map(|m| m.seed),
            samples: mc.map(|m| m.samples),
            tolerances,
            wall_time_s: 0.0,
            result,
        }
    }

    pub fn finish(mut self, start: Instant) -> Self {
        self.wall_time_s = start.elapsed().as_secs_f64();
        self
    }
}

/// How a value was obtained: exact, closed form, or Monte Carlo ± stderr.
pub fn provenance(r: &ExpectationResult) -> Value {
    match r.kind {
        ExpectationKind::Zero => json!({ "kind": "exact_zero" }),
        ExpectationKind::ClosedForm => json!({
            "kind": "closed_form",
            "symbolic": r.closed_form.as_ref().map(|c| c.symbolic.clone()),
        }),
        ExpectationKind::MonteCarlo => json!({ "kind": "monte_carlo", "value": r.value, "stderr": r.stderr }),
        ExpectationKind::Product => json!({
            "kind": "product",
            "factors": r.factors.iter().map(provenance).collect::<Vec<_>>(),
        }),
    }
}

pub fn write_outcomes(path: &Path, outcomes: &[SampleOutcome]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "count", "infinity", "near_multiple", "degenerate"])?;
    for o in outcomes {
        w.write_record([
            o.index.to_string(),
            o.count.to_string(),
            o.flags.infinity.to_string(),
            o.flags.near_multiple.to_string(),
            o.flags.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
