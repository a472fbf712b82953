//! Calibration files: `key = value` lines, `#` comments, keys namespaced as
//! `node.<name>.<plane>.<knob>`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::Target;
use crate::codec::MacAddress;

pub const CALIBRATION_DIR_ENV: &str = "FHDOS_CALIBRATION_DIR";

const EMBEDDED: [(&str, &str); 2] = [
    ("topology1.cfg", include_str!("../../calibration/topology1.cfg")),
    ("topology2.cfg", include_str!("../../calibration/topology2.cfg")),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("missing key '{0}'")]
    Missing(String),
    #[error("key '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("{0} refers to unknown port '{1}'")]
    UnknownPort(String, String),
    #[error("calibration '{0}' not found (looked at the path, ${CALIBRATION_DIR_ENV} and the built-in set)")]
    NotFound(String),
    #[error("reading {0}: {1}")]
    Io(PathBuf, std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Cplane,
    UplaneDl,
    UplaneUl,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Cplane, Plane::UplaneDl, Plane::UplaneUl];

    pub fn key(self) -> &'static str {
        match self {
            Plane::Cplane => "cplane",
            Plane::UplaneDl => "uplane_dl",
            Plane::UplaneUl => "uplane_ul",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceptance {
    Any,
    /// Only frames whose source is the configured peer are accepted.
    PeerOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanePolicy {
    /// Units consumed per accepted frame.
    pub cost: f64,
    /// Units consumed per rejected frame.
    pub reject_cost: f64,
    pub budget_per_second: f64,
    pub accept: Acceptance,
    pub self_source_fault: bool,
    pub flow_capacity: Option<u64>,
    /// Misdelivered fraction of legit frames above which the plane degrades.
    pub theta: f64,
    /// Cumulative misdelivered legit frames after which the flow stays lost.
    pub stickiness: Option<u64>,
    /// Overload only forces a restart when demand reaches this multiple of
    /// the budget for the sustain window.
    pub restart_ratio: f64,
}

impl Default for PlanePolicy {
    fn default() -> Self {
        PlanePolicy {
            cost: 1.0,
            reject_cost: 0.0,
            budget_per_second: f64::INFINITY,
            accept: Acceptance::Any,
            self_source_fault: false,
            flow_capacity: None,
            theta: 0.5,
            stickiness: None,
            restart_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub name: String,
    pub mac: MacAddress,
    pub port: String,
    /// `None` means the node never comes back (DOWN).
    pub restart_seconds: Option<u32>,
    pub planes: [PlanePolicy; 3],
}

impl NodeConfig {
    pub fn plane(&self, p: Plane) -> &PlanePolicy {
        &self.planes[p.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchConfig {
    pub ports: Vec<String>,
    pub aging_seconds: f64,
    /// Nodes whose address is bound to their port (port security).
    pub secure: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegitProfile {
    pub dl_cplane_fps: f64,
    pub dl_uplane_fps: f64,
    pub ul_uplane_fps: f64,
    pub jitter: f64,
    pub uplane_bytes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub drop_fraction: f64,
    pub baseline_seconds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub baseline_seconds: u32,
    pub attack_seconds: u32,
    pub post_seconds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub name: String,
    pub seed: u64,
    pub switch: SwitchConfig,
    pub attacker_port: String,
    pub odu: NodeConfig,
    pub oru: NodeConfig,
    pub legit: LegitProfile,
    pub detect: DetectConfig,
    pub timeline: Timeline,
}

impl TopologyConfig {
    pub fn node(&self, t: Target) -> &NodeConfig {
        match t {
            Target::Odu => &self.odu,
            Target::Oru => &self.oru,
        }
    }

    pub fn node_mut(&mut self, t: Target) -> &mut NodeConfig {
        match t {
            Target::Odu => &mut self.odu,
            Target::Oru => &mut self.oru,
        }
    }

    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.switch.ports.iter().position(|p| p == name)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let kv = KeyValues::parse(text)?;
        let cfg = build(&kv)?;
        kv.check_all_used()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    /// Resolve a calibration by path, then inside `$FHDOS_CALIBRATION_DIR`,
    /// then among the built-in files.
    pub fn resolve(name: &str) -> Result<Self, ConfigError> {
        let direct = Path::new(name);
        if direct.is_file() {
            return Self::load(direct);
        }
        if let Some(dir) = std::env::var_os(CALIBRATION_DIR_ENV) {
            for candidate in [name.to_string(), format!("{name}.cfg")] {
                let p = Path::new(&dir).join(candidate);
                if p.is_file() {
                    return Self::load(p);
                }
            }
        }
        let base = direct.file_name().and_then(|f| f.to_str()).unwrap_or(name);
        for (n, text) in EMBEDDED {
            if n == base || n.trim_end_matches(".cfg") == base {
                return Self::parse(text);
            }
        }
        Err(ConfigError::NotFound(name.to_string()))
    }

    pub fn builtin(name: &str) -> Option<&'static str> {
        EMBEDDED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (what, port) in [
            ("attacker.port".to_string(), &self.attacker_port),
            ("node.odu.port".to_string(), &self.odu.port),
            ("node.oru.port".to_string(), &self.oru.port),
        ] {
            if self.port_index(port).is_none() {
                return Err(ConfigError::UnknownPort(what, port.clone()));
            }
        }
        if self.odu.port == self.oru.port || self.attacker_port == self.odu.port || self.attacker_port == self.oru.port
        {
            return Err(ConfigError::Value { key: "switch.ports".into(), msg: "nodes need distinct ports".into() });
        }
        for s in &self.switch.secure {
            if s != "odu" && s != "oru" {
                return Err(ConfigError::Value { key: "switch.secure".into(), msg: format!("unknown node '{s}'") });
            }
        }
        for n in [&self.odu, &self.oru] {
            for p in Plane::ALL {
                let pol = n.plane(p);
                let key = |k: &str| format!("node.{}.{}.{}", n.name, p.key(), k);
                if pol.budget_per_second.is_nan() || pol.budget_per_second <= 0.0 {
                    return Err(ConfigError::Value { key: key("budget"), msg: "must be positive".into() });
                }
                if !(pol.theta > 0.0 && pol.theta < 1.0) {
                    return Err(ConfigError::Value { key: key("theta"), msg: "must be in (0,1)".into() });
                }
                if pol.flow_capacity == Some(0) {
                    return Err(ConfigError::Value { key: key("flow_capacity"), msg: "must be positive".into() });
                }
                if pol.cost < 0.0 || pol.reject_cost < 0.0 || pol.restart_ratio < 1.0 {
                    return Err(ConfigError::Value {
                        key: key("cost"), msg: "costs ≥ 0, restart_ratio ≥ 1".into()
                    });
                }
            }
        }
        if !(self.detect.drop_fraction > 0.0 && self.detect.drop_fraction < 1.0) {
            return Err(ConfigError::Value { key: "detect.drop_fraction".into(), msg: "must be in (0,1)".into() });
        }
        if self.timeline.baseline_seconds == 0 || self.detect.baseline_seconds > self.timeline.baseline_seconds {
            return Err(ConfigError::Value {
                key: "detect.baseline_seconds".into(),
                msg: "needs a non-empty pre-attack window covering it".into(),
            });
        }
        Ok(())
    }
}

struct Entry {
    line: usize,
    value: String,
    used: std::cell::Cell<bool>,
}

struct KeyValues {
    map: BTreeMap<String, Entry>,
}

impl KeyValues {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) =
                body.split_once('=').ok_or_else(|| ConfigError::Syntax { line, msg: "expected key = value".into() })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line, msg: "empty key".into() });
            }
            if map.contains_key(&k) {
                return Err(ConfigError::Duplicate { line, key: k });
            }
            map.insert(k, Entry { line, value: v, used: std::cell::Cell::new(false) });
        }
        Ok(KeyValues { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|e| {
            e.used.set(true);
            e.value.as_str()
        })
    }

    fn req(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match (self.get(key), default) {
            (Some(v), _) => v.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), msg: e.to_string() }),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ConfigError::Missing(key.to_string())),
        }
    }

    fn optional_count(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.get(key) {
            None | Some("none") => Ok(None),
            Some(v) => v.replace('_', "").parse().map(Some).map_err(|_| ConfigError::Value {
                key: key.into(),
                msg: format!("expected an integer or none, got '{v}'"),
            }),
        }
    }

    fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    fn check_all_used(&self) -> Result<(), ConfigError> {
        match self.map.iter().find(|(_, e)| !e.used.get()) {
            Some((k, e)) => Err(ConfigError::UnknownKey { line: e.line, key: k.clone() }),
            None => Ok(()),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Value { key: key.into(), msg: format!("expected true/false, got '{v}'") }),
    }
}

fn number(kv: &KeyValues, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
    match kv.get(key) {
        Some(v) => v
            .replace('_', "")
            .parse()
            .map_err(|_| ConfigError::Value { key: key.into(), msg: format!("expected a number, got '{v}'") }),
        None => default.ok_or_else(|| ConfigError::Missing(key.to_string())),
    }
}

fn build_node(kv: &KeyValues, name: &str) -> Result<NodeConfig, ConfigError> {
    let k = |s: &str| format!("node.{name}.{s}");
    let mac: MacAddress = kv.parsed(&k("mac"), None)?;
    let port = kv.req(&k("port"))?.to_string();
    let restart_seconds = match kv.req(&k("restart_seconds"))? {
        "never" => None,
        v => Some(v.parse().map_err(|_| ConfigError::Value { key: k("restart_seconds"), msg: v.into() })?),
    };
    let mut planes: [PlanePolicy; 3] = Default::default();
    for p in Plane::ALL {
        let pk = |s: &str| format!("node.{name}.{}.{s}", p.key());
        let d = PlanePolicy::default();
        let accept = match kv.get(&pk("accept")).unwrap_or("any") {
            "any" => Acceptance::Any,
            "peer" | "peer-only" => Acceptance::PeerOnly,
            v => return Err(ConfigError::Value { key: pk("accept"), msg: format!("expected any or peer, got '{v}'") }),
        };
        planes[p.index()] = PlanePolicy {
            cost: number(kv, &pk("cost"), Some(d.cost))?,
            reject_cost: number(kv, &pk("reject_cost"), Some(d.reject_cost))?,
            budget_per_second: number(kv, &pk("budget"), None)?,
            accept,
            self_source_fault: match kv.get(&pk("self_source_fault")) {
                Some(v) => parse_bool(&pk("self_source_fault"), v)?,
                None => d.self_source_fault,
            },
            flow_capacity: kv.optional_count(&pk("flow_capacity"))?,
            theta: number(kv, &pk("theta"), Some(d.theta))?,
            stickiness: kv.optional_count(&pk("stickiness"))?,
            restart_ratio: number(kv, &pk("restart_ratio"), Some(d.restart_ratio))?,
        };
    }
    Ok(NodeConfig { name: name.to_string(), mac, port, restart_seconds, planes })
}

fn build(kv: &KeyValues) -> Result<TopologyConfig, ConfigError> {
    Ok(TopologyConfig {
        name: kv.get("name").unwrap_or("unnamed").to_string(),
        seed: kv.parsed("seed", Some(0))?,
        switch: SwitchConfig {
            ports: kv.list("switch.ports"),
            aging_seconds: number(kv, "switch.aging_seconds", Some(300.0))?,
            secure: kv.list("switch.secure"),
        },
        attacker_port: kv.req("attacker.port")?.to_string(),
        odu: build_node(kv, "odu")?,
        oru: build_node(kv, "oru")?,
        legit: LegitProfile {
            dl_cplane_fps: number(kv, "legit.dl_cplane_fps", None)?,
            dl_uplane_fps: number(kv, "legit.dl_uplane_fps", None)?,
            ul_uplane_fps: number(kv, "legit.ul_uplane_fps", None)?,
            jitter: number(kv, "legit.jitter", Some(0.0))?,
            uplane_bytes: kv.parsed("legit.uplane_bytes", Some(1500))?,
        },
        detect: DetectConfig {
            drop_fraction: number(kv, "detect.drop_fraction", Some(0.5))?,
            baseline_seconds: kv.parsed("detect.baseline_seconds", Some(5))?,
        },
        timeline: Timeline {
            baseline_seconds: kv.parsed("timeline.baseline_seconds", Some(5))?,
            attack_seconds: kv.parsed("timeline.attack_seconds", Some(30))?,
            post_seconds: kv.parsed("timeline.post_seconds", Some(30))?,
        },
    })
}
