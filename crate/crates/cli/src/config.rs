//! Experiment configuration: a JSON file plus flat `--set` overrides.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;

use jump_support::config::{CoefficientSpec, SkeletonSpec};
use jump_support::levy::LevyModel;

use crate::RunError;

/// Fully resolved experiment description. The seed is mandatory; every
/// other section is validated by the subcommand that needs it.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<LevyModel>,
    #[serde(default)]
    pub coefficients: Option<CoefficientSpec>,
    #[serde(default)]
    pub skeleton: Option<SkeletonSpec>,
    #[serde(default)]
    pub skeleton_b: Option<SkeletonSpec>,
    #[serde(default)]
    pub params: Value,
}

/// Apply one `KEY=VALUE` override with a dotted path into the raw JSON;
/// the value is parsed as JSON with a string fallback.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), RunError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("--set needs KEY=VALUE, got '{spec}'")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            return Err(RunError::Config(format!(
                "--set path '{path}' hits a non-object at '{part}'"
            )));
        }
        let map = node.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Load, override, and parse the config; returns the typed config and the
/// canonical resolved JSON (used for hashing and the manifest).
pub fn load(
    path: &PathBuf,
    sets: &[String],
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
) -> Result<(ExperimentConfig, String), RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut raw: Value = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("config is not valid JSON: {e}")))?;
    for s in sets {
        apply_override(&mut raw, s)?;
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(raw.clone())
        .map_err(|e| RunError::Config(format!("config schema: {e}")))?;
    if let Some(seed) = seed_flag {
        cfg.seed = Some(seed);
        raw["seed"] = Value::from(seed);
    }
    if let Some(out) = out_flag {
        raw["output_dir"] = Value::from(out.display().to_string());
        cfg.output_dir = Some(out);
    }
    if cfg.seed.is_none() {
        return Err(RunError::Config(
            "missing mandatory field 'seed' (set it in the config or pass --seed)".into(),
        ));
    }
    let canonical = serde_json::to_string(&raw)
        .map_err(|e| RunError::Config(format!("cannot canonicalise config: {e}")))?;
    Ok((cfg, canonical))
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated at load")
    }

    pub fn model(&self) -> Result<&LevyModel, RunError> {
        self.model
            .as_ref()
            .ok_or_else(|| RunError::Config("this subcommand needs a 'model' section".into()))
    }

    pub fn coefficients(&self) -> Result<jump_support::sde::CoefficientSet, RunError> {
        let spec = self
            .coefficients
            .as_ref()
            .ok_or_else(|| RunError::Config("this subcommand needs 'coefficients'".into()))?;
        spec.build()
            .map_err(|e| RunError::Config(format!("coefficients: {e}")))
    }

    pub fn skeleton_spec(&self) -> Result<&SkeletonSpec, RunError> {
        self.skeleton
            .as_ref()
            .ok_or_else(|| RunError::Config("this subcommand needs a 'skeleton' section".into()))
    }

    pub fn typed_params<T: serde::de::DeserializeOwned>(&self) -> Result<T, RunError> {
        serde_json::from_value(if self.params.is_null() {
            Value::Object(Default::default())
        } else {
            self.params.clone()
        })
        .map_err(|e| RunError::Config(format!("params: {e}")))
    }
}
