//! Experiment configuration.
//!
//! A config is a flat `key = value` file (`#` starts a comment) or a JSON
//! object with the same keys. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dlb::AdversaryKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    DlbSynthetic,
    MdpReduction,
    Exp2Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerParams {
    /// Default rates derived from the instance constants.
    #[serde(rename = "paper-defaults", alias = "defaults")]
    Defaults,
    /// `eta0` must be given.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    IidUniform,
    Switching,
    SinusoidalDrift,
    SingleCellSpike,
    /// The same loss vector every round (synthetic DLB and EXP2 modes).
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MdpKind {
    RandomDense,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundCheckMode {
    Abort,
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub seed: u64,
    pub replicates: usize,
    /// `T` for the bandit modes, `K` for the MDP reduction.
    pub rounds: usize,
    pub out: PathBuf,
    pub learner: LearnerParams,
    pub eta0: Option<f64>,
    /// Defaults to `constant` for the bandit modes, `switching` for MDPs.
    pub losses: Option<LossKind>,
    pub loss_file: Option<PathBuf>,
    /// Block length of switching losses; defaults to a quarter of the run.
    pub switch_period: Option<usize>,

    // synthetic DLB
    pub dim: usize,
    pub cap: f64,
    pub adversary: AdversaryKind,
    /// Range of the perturbations.
    pub beta: f64,
    /// `ε_t = eps_scale·beta/√t` in every coordinate; 0 gives the
    /// undistorted bandit.
    pub eps_scale: f64,

    // MDP reduction
    pub mdp_file: Option<PathBuf>,
    pub mdp_kind: MdpKind,
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    /// Defaults to `1/(HK)`.
    pub delta: Option<f64>,
    pub round_check: RoundCheckMode,

    // EXP2 reference
    pub n_points: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            mode: Mode::DlbSynthetic,
            seed: 0,
            replicates: 1,
            rounds: 1000,
            out: PathBuf::from("out"),
            learner: LearnerParams::Defaults,
            eta0: None,
            losses: None,
            loss_file: None,
            switch_period: None,
            dim: 3,
            cap: 0.8,
            adversary: AdversaryKind::Identity,
            beta: 0.5,
            eps_scale: 1.0,
            mdp_file: None,
            mdp_kind: MdpKind::RandomDense,
            n_states: 2,
            n_actions: 2,
            horizon: 2,
            delta: None,
            round_check: RoundCheckMode::Abort,
            n_points: 20,
        }
    }
}

impl ExperimentSpec {
    pub fn loss_kind(&self) -> LossKind {
        match (self.losses, self.mode) {
            (Some(k), _) => k,
            (None, Mode::MdpReduction) => LossKind::Switching,
            (None, _) => LossKind::Constant,
        }
    }

    /// Cross-field checks that the type system does not cover.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.replicates == 0 {
            problems.push("replicates must be at least 1".to_string());
        }
        if self.rounds == 0 {
            problems.push("rounds must be at least 1".to_string());
        }
        match (self.learner, self.eta0) {
            (LearnerParams::Custom, None) => problems.push("learner = custom requires eta0".into()),
            (LearnerParams::Defaults, Some(_)) => {
                problems.push("eta0 is only allowed with learner = custom".into())
            }
            (_, Some(e)) if !(e > 0.0) => problems.push("eta0 must be positive".into()),
            _ => {}
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                problems.push("delta must lie in (0, 1)".into());
            }
        }
        match self.mode {
            Mode::DlbSynthetic => {
                if self.dim < 2 {
                    problems.push("dim must be at least 2".into());
                }
                if !(self.cap > 1.0 / self.dim as f64 && self.cap <= 1.0) {
                    problems.push("cap must lie in (1/dim, 1]".into());
                }
                if !(self.beta > 0.0) {
                    problems.push("beta must be positive".into());
                }
                if !(0.0..=1.0).contains(&self.eps_scale) {
                    problems.push("eps_scale must lie in [0, 1]".into());
                }
                if !matches!(self.loss_kind(), LossKind::Constant | LossKind::IidUniform) {
                    problems.push("dlb-synthetic supports losses = constant or iid-uniform".into());
                }
            }
            Mode::MdpReduction => {
                if self.n_states == 0 || self.n_actions == 0 || self.horizon == 0 {
                    problems.push("n_states, n_actions and horizon must be positive".into());
                }
                if self.loss_kind() == LossKind::Constant && self.loss_file.is_none() {
                    problems.push("mdp-reduction does not support losses = constant".into());
                }
            }
            Mode::Exp2Reference => {
                if self.dim < 2 || self.n_points < self.dim || self.n_points > 50 {
                    problems.push("exp2-reference needs dim ≥ 2 and dim ≤ n_points ≤ 50".into());
                }
                if !(self.beta > 0.0) || !(0.0..=1.0).contains(&self.eps_scale) {
                    problems.push("beta must be positive and eps_scale in [0, 1]".into());
                }
                if !matches!(self.loss_kind(), LossKind::Constant | LossKind::IidUniform) {
                    problems.push("exp2-reference supports losses = constant or iid-uniform".into());
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }
}

fn scalar(text: &str) -> Value {
    let t = text.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Value::from(v);
    }
    if let Ok(v) = t.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(v) {
            return Value::Number(n);
        }
    }
    match t {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(t.trim_matches('"').to_string()),
    }
}

// Numbers are only coerced back to text for fields that hold text.
const TEXT_KEYS: &[&str] = &["out", "loss_file", "mdp_file"];

fn from_object(map: Map<String, Value>, lines: &[(String, usize)]) -> Result<ExperimentSpec> {
    let known = serde_json::to_value(ExperimentSpec::default())
        .ok()
        .and_then(|v| v.as_object().map(|o| o.keys().cloned().collect::<Vec<_>>()))
        .unwrap_or_default();
    let unknown: Vec<String> = map
        .keys()
        .filter(|k| !known.contains(k))
        .map(|k| match lines.iter().find(|(n, _)| n == k) {
            Some((_, line)) => format!("'{k}' (line {line})"),
            None => format!("'{k}'"),
        })
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Validation(format!("unknown keys: {}", unknown.join(", "))));
    }
    let mut map = map;
    for k in TEXT_KEYS {
        if let Some(v) = map.get_mut(*k) {
            if let Value::Number(n) = v {
                *v = Value::String(n.to_string());
            }
        }
    }
    let spec: ExperimentSpec =
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::Validation(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Parses a `key = value` config.
pub fn parse_key_values(text: &str) -> Result<ExperimentSpec> {
    let mut map = Map::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let Some(eq) = line.find('=') else {
            return Err(Error::Parse {
                line: i + 1,
                column: indent + 1,
                message: "expected 'key = value'".into(),
            });
        };
        let key = line[..eq].trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Parse {
                line: i + 1,
                column: indent + 1,
                message: format!("malformed key '{key}'"),
            });
        }
        let value = line[eq + 1..].trim();
        if value.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                column: eq + 2,
                message: format!("missing value for '{key}'"),
            });
        }
        if map.insert(key.to_string(), scalar(value)).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                column: indent + 1,
                message: format!("duplicate key '{key}'"),
            });
        }
        lines.push((key.to_string(), i + 1));
    }
    from_object(map, &lines)
}

pub fn parse_json(text: &str) -> Result<ExperimentSpec> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value {
        Value::Object(map) => from_object(map, &[]),
        _ => Err(Error::Validation("config must be a JSON object".into())),
    }
}

/// Reads a config file; JSON if it starts with `{`, key-value otherwise.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        parse_json(&text)
    } else {
        parse_key_values(&text)
    }
}
