//! Config ingestion: a JSON file merged under explicit flags, environment
//! cap overrides, and the small value parsers the flag surface needs.

use std::fs;
use std::path::Path;

use brcap_core::{Field, Horizon, SystemParams};
use serde::Deserialize;

use crate::{CliError, ParamArgs};

/// Environment variable overriding the enumeration cap (split searches
/// and exhaustive schedule sweeps).
pub const ENUM_CAP_VAR: &str = "BRCAP_ENUM_CAP";
/// Environment variable overriding the kernel-search subset cap.
pub const SUBSET_CAP_VAR: &str = "BRCAP_SUBSET_CAP";
/// Default enumeration cap when the environment does not override it.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;
/// Default subset cap when the environment does not override it.
pub const DEFAULT_SUBSET_CAP: u64 = 5_000_000;

/// Optional settings accepted from a JSON config file.  Every field can
/// also arrive as a flag; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<u32>,
    pub k: Option<u32>,
    pub d: Option<u32>,
    pub r: Option<u32>,
    pub alpha: Option<u64>,
    pub beta: Option<u64>,
    #[serde(rename = "T")]
    pub horizon: Option<Horizon>,
    pub seed: Option<u64>,
    pub field: Option<String>,
    pub omega: Option<usize>,
    pub code: Option<String>,
    pub tmax: Option<u32>,
    pub samples: Option<u32>,
}

impl FileConfig {
    /// Loads the file when a path is given; otherwise an empty config.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }
}

/// The error for a parameter present in neither the flags nor the file.
pub fn missing(name: &str) -> CliError {
    CliError::Input(format!(
        "missing required parameter `{name}` (flag or config file)"
    ))
}

/// Merges flags over file values into validated system parameters.  The
/// horizon defaults to unbounded when neither source names it.
pub fn resolve_params(args: &ParamArgs, file: &FileConfig) -> Result<SystemParams, CliError> {
    fn need<V>(flag: Option<V>, file: Option<V>, name: &str) -> Result<V, CliError> {
        flag.or(file).ok_or_else(|| missing(name))
    }
    let params = SystemParams {
        n: need(args.n, file.n, "n")?,
        k: need(args.k, file.k, "k")?,
        d: need(args.d, file.d, "d")?,
        r: need(args.r, file.r, "r")?,
        alpha: need(args.alpha, file.alpha, "alpha")?,
        beta: need(args.beta, file.beta, "beta")?,
        horizon: args.rounds.or(file.horizon).unwrap_or(Horizon::Unbounded),
    };
    params
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(params)
}

/// Parses a horizon flag: a round count or the word `unbounded`.
pub fn parse_horizon(text: &str) -> Result<Horizon, String> {
    if text == "unbounded" {
        return Ok(Horizon::Unbounded);
    }
    text.parse::<u32>()
        .map(Horizon::Finite)
        .map_err(|_| format!("expected a round count or \"unbounded\", got `{text}`"))
}

/// Parses a field description: a prime (`47`) or a binary extension
/// (`2^8`).
pub fn parse_field(text: &str) -> Result<Field, String> {
    let field = if let Some(degree) = text.strip_prefix("2^") {
        let m: u32 = degree
            .parse()
            .map_err(|_| format!("bad extension degree in `{text}`"))?;
        Field::binary_ext(m)
    } else {
        let q: u64 = text
            .parse()
            .map_err(|_| format!("expected a prime or `2^m`, got `{text}`"))?;
        Field::prime(q)
    };
    field.map_err(|e| e.to_string())
}

/// Reads a cap from the environment, falling back to the default.
pub fn env_cap(var: &str, default: u64) -> Result<u64, CliError> {
    match std::env::var(var) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{var} must be an integer, got `{text}`"))),
        Err(std::env::VarError::NotPresent) => Ok(default),
        Err(e) => Err(CliError::Input(format!("{var}: {e}"))),
    }
}
