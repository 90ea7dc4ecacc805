// SPDX-License-Identifier: Apache-2.0

//! Test-vector suites (`tv/1`).
//!
//! ```json
//! {"schema":"tv/1","clock":"clk","reset":{"signal":"rst","active":1,"cycles":2},
//!  "steps":[{"in":{"a":1},"out":{"y":"0x1"}}]}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const VECTOR_SCHEMA: &str = "tv/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("vector file: {0}")]
    Json(String),
    #[error("vector file schema must be \"{VECTOR_SCHEMA}\", found {0:?}")]
    Schema(Option<String>),
    #[error("bad value {0:?}: expected a decimal integer or a \"0x\"/\"0b\" string")]
    Value(String),
    #[error("reset active level must be 0 or 1, found {0}")]
    ResetLevel(u128),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResetSpec {
    pub signal: String,
    /// 0 or 1.
    pub active: u8,
    pub cycles: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VectorStep {
    pub inputs: BTreeMap<String, u128>,
    pub expected: BTreeMap<String, u128>,
    /// Compare after settling inputs without a clock edge.
    pub settle_only: bool,
}

impl VectorStep {
    pub fn new<I, O>(inputs: I, expected: O) -> Self
    where
        I: IntoIterator<Item = (&'static str, u128)>,
        O: IntoIterator<Item = (&'static str, u128)>,
    {
        VectorStep {
            inputs: inputs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            expected: expected.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            settle_only: false,
        }
    }

    pub fn settle(mut self) -> Self {
        self.settle_only = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VectorSuite {
    pub clock: Option<String>,
    pub reset: Option<ResetSpec>,
    pub steps: Vec<VectorStep>,
}

impl VectorSuite {
    pub fn combinational(steps: Vec<VectorStep>) -> Self {
        VectorSuite {
            clock: None,
            reset: None,
            steps,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, VectorError> {
        let raw: RawSuite = serde_json::from_str(text).map_err(|e| VectorError::Json(e.to_string()))?;
        if raw.schema.as_deref() != Some(VECTOR_SCHEMA) {
            return Err(VectorError::Schema(raw.schema));
        }
        let reset = raw
            .reset
            .map(|r| -> Result<ResetSpec, VectorError> {
                let active = r.active.map(|v| v.parse()).transpose()?.unwrap_or(1);
                if active > 1 {
                    return Err(VectorError::ResetLevel(active));
                }
                Ok(ResetSpec {
                    signal: r.signal,
                    active: active as u8,
                    cycles: r.cycles.unwrap_or(1),
                })
            })
            .transpose()?;
        let steps = raw
            .steps
            .into_iter()
            .map(|s| -> Result<VectorStep, VectorError> {
                Ok(VectorStep {
                    inputs: parse_map(s.inputs)?,
                    expected: parse_map(s.expected)?,
                    settle_only: s.settle,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(VectorSuite {
            clock: raw.clock,
            reset,
            steps,
        })
    }

    pub fn load(path: &Path) -> Result<Self, VectorError> {
        let text = std::fs::read_to_string(path).map_err(|e| VectorError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let raw = RawSuite {
            schema: Some(VECTOR_SCHEMA.to_string()),
            clock: self.clock.clone(),
            reset: self.reset.as_ref().map(|r| RawReset {
                signal: r.signal.clone(),
                active: Some(RawValue::Number(r.active as u64)),
                cycles: Some(r.cycles),
            }),
            steps: self
                .steps
                .iter()
                .map(|s| RawStep {
                    inputs: s.inputs.iter().map(|(k, v)| (k.clone(), RawValue::from(*v))).collect(),
                    expected: s
                        .expected
                        .iter()
                        .map(|(k, v)| (k.clone(), RawValue::from(*v)))
                        .collect(),
                    settle: s.settle_only,
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("suite serialization cannot fail")
    }
}

fn parse_map(m: BTreeMap<String, RawValue>) -> Result<BTreeMap<String, u128>, VectorError> {
    m.into_iter().map(|(k, v)| Ok((k, v.parse()?))).collect()
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSuite {
    schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clock: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reset: Option<RawReset>,
    #[serde(default)]
    steps: Vec<RawStep>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawReset {
    signal: String,
    #[serde(default)]
    active: Option<RawValue>,
    #[serde(default)]
    cycles: Option<u32>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawStep {
    #[serde(rename = "in", default)]
    inputs: BTreeMap<String, RawValue>,
    #[serde(rename = "out", default)]
    expected: BTreeMap<String, RawValue>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    settle: bool,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum RawValue {
    Number(u64),
    Text(String),
}

impl From<u128> for RawValue {
    fn from(v: u128) -> Self {
        match u64::try_from(v) {
            Ok(n) => RawValue::Number(n),
            Err(_) => RawValue::Text(format!("0x{v:x}")),
        }
    }
}

impl RawValue {
    fn parse(self) -> Result<u128, VectorError> {
        match self {
            RawValue::Number(n) => Ok(n as u128),
            RawValue::Text(s) => parse_value(&s),
        }
    }
}

/// Decimal, `0x` hexadecimal or `0b` binary; underscores are ignored.
pub fn parse_value(s: &str) -> Result<u128, VectorError> {
    let clean: String = s.trim().chars().filter(|&c| c != '_').collect();
    let lower = clean.to_ascii_lowercase();
    let parsed = if let Some(hex) = lower.strip_prefix("0x") {
        u128::from_str_radix(hex, 16)
    } else if let Some(bin) = lower.strip_prefix("0b") {
        u128::from_str_radix(bin, 2)
    } else {
        lower.parse()
    };
    parsed.map_err(|_| VectorError::Value(s.to_string()))
}
