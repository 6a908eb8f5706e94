//! Layered configuration: defaults < JSON file < `CONTACTGRASP_*` env < `--set`.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use contactgrasp::cluster_gate::{GatingConfig, DEFAULT_CENTRAL_FRACTION, DEFAULT_K, DEFAULT_MAX_ITERS};
use contactgrasp::pipeline::PipelineConfig;
use contactgrasp::reward::RewardWeights;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const ENV_PREFIX: &str = "CONTACTGRASP_";

/// Env variables read by clap directly; never treated as config paths.
const RESERVED_ENV: [&str; 5] = ["CONFIG", "SEED", "JOBS", "JSON", "OUT"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub k: usize,
    pub max_iters: usize,
    pub central_fraction: f64,
    /// Categories whose objects are kept in one cluster.
    pub pinned_categories: Vec<String>,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            max_iters: DEFAULT_MAX_ITERS,
            central_fraction: DEFAULT_CENTRAL_FRACTION,
            pinned_categories: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Hand description; the bundled five-finger hand when unset.
    pub hand: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub cluster: ClusterSettings,
    pub gating: GatingConfig,
    pub reward: RewardWeights,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.reward.validate()?;
        if self.cluster.k == 0 {
            bail!("config error at `cluster.k`: must be positive");
        }
        if !(0.0..=1.0).contains(&self.cluster.central_fraction) {
            bail!("config error at `cluster.central_fraction`: must lie in [0, 1]");
        }
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut cur = root;
    for (i, key) in path.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| anyhow!("config error at `{}`: not a table", path[..i].join(".")))?;
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        cur = obj.entry(key.clone()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// JSON when it parses, a plain string otherwise.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

pub struct Layers<'a> {
    pub file: Option<&'a Path>,
    pub env: Vec<(String, String)>,
    pub sets: &'a [String],
    pub seed: Option<u64>,
}

pub fn load(layers: Layers<'_>) -> Result<Config> {
    let mut value = serde_json::to_value(Config::default())?;
    if let Some(path) = layers.file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        merge(&mut value, file);
    }
    let mut env = layers.env;
    env.sort();
    for (key, raw) in env {
        let Some(rest) = key.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        if RESERVED_ENV.contains(&rest) {
            continue;
        }
        let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
        set_path(&mut value, &path, parse_value(&raw))?;
    }
    for set in layers.sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key.path=value, got `{set}`"))?;
        let path: Vec<String> = key.split('.').map(str::to_string).collect();
        set_path(&mut value, &path, parse_value(raw))?;
    }
    let mut config: Config = serde_json::from_value(value).map_err(|e| anyhow!("config error: {e}"))?;
    if let Some(seed) = layers.seed {
        config.seed = seed;
    }
    config.gating.seed = config.seed;
    config.validate()?;
    Ok(config)
}
