use serde::Serialize;
use serde_json::Value;

/// Version of the JSON layout emitted with `--json`.
pub const SCHEMA_VERSION: u32 = 1;

/// Summary of the data a command ran on.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub source: String,
    /// Number of lifetimes read.
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub censoring: CensoringDigest,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensoringDigest {
    pub n: usize,
    pub big_r: Option<usize>,
    pub time: Option<f64>,
    /// Observed failures.
    pub r: usize,
    /// Censoring terminus `min(t_(R), T)`.
    pub u: f64,
    pub complete: bool,
}

/// Machine-readable record of one command run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub input: Option<InputDigest>,
    pub method: Value,
    pub results: Value,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, input: Option<InputDigest>, method: Value, results: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input,
            method,
            results,
            warnings: Vec::new(),
        }
    }
}
