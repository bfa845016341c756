//! Plain key-value configuration text.
//!
//! Grammar: whitespace-separated `key=value` tokens, each key at most once.
//!
//! ```text
//! N=<int> m=<int> alpha=<int> [k=<int>]
//! access=fixed r=<int> | access=prob p=<real>
//! [service=scaled|shifted] [mu=<real>] [delta=<real>]
//! ```
//!
//! Example: `N=30 m=3 alpha=2 access=fixed r=5 service=scaled mu=1.0`.
//! Unset service fields default to `service=scaled mu=1 delta=3`.

use std::fmt;
use std::str::FromStr;

use crate::model::{AccessKind, AccessModel, ServiceKind, ServiceModel, SystemConfig};

pub const DEFAULT_MU: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamError(pub String);

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParamError {}

/// Partially specified system parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigSpec {
    pub nodes: Option<u64>,
    pub redundancy: Option<u64>,
    pub alpha: Option<u64>,
    pub file_blocks: Option<u64>,
    pub access: Option<AccessKind>,
    pub r: Option<u64>,
    pub p: Option<f64>,
    pub service: Option<ServiceKind>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ParamError> {
    value.parse().map_err(|_| ParamError(format!("invalid value for {key}: {value:?}")))
}

pub fn parse_access(value: &str) -> Result<AccessKind, ParamError> {
    match value {
        "fixed" => Ok(AccessKind::FixedSize),
        "prob" => Ok(AccessKind::Probabilistic),
        other => Err(ParamError(format!("access must be fixed or prob, got {other:?}"))),
    }
}

pub fn parse_service(value: &str) -> Result<ServiceKind, ParamError> {
    match value {
        "scaled" => Ok(ServiceKind::Scaled),
        "shifted" => Ok(ServiceKind::Shifted),
        other => Err(ParamError(format!("service must be scaled or shifted, got {other:?}"))),
    }
}

fn set<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<(), ParamError> {
    if slot.is_some() {
        return Err(ParamError(format!("duplicate key {key}")));
    }
    *slot = Some(value);
    Ok(())
}

impl FromStr for ConfigSpec {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut spec = ConfigSpec::default();
        for token in s.split_whitespace() {
            let (key, value) =
                token.split_once('=').ok_or_else(|| ParamError(format!("expected key=value, got {token:?}")))?;
            match key {
                "N" => set(&mut spec.nodes, key, parse_num(key, value)?)?,
                "m" => set(&mut spec.redundancy, key, parse_num(key, value)?)?,
                "alpha" => set(&mut spec.alpha, key, parse_num(key, value)?)?,
                "k" => set(&mut spec.file_blocks, key, parse_num(key, value)?)?,
                "access" => set(&mut spec.access, key, parse_access(value)?)?,
                "r" => set(&mut spec.r, key, parse_num(key, value)?)?,
                "p" => set(&mut spec.p, key, parse_num(key, value)?)?,
                "service" => set(&mut spec.service, key, parse_service(value)?)?,
                "mu" => set(&mut spec.mu, key, parse_num(key, value)?)?,
                "delta" => set(&mut spec.delta, key, parse_num(key, value)?)?,
                other => return Err(ParamError(format!("unknown key {other:?}"))),
            }
        }
        Ok(spec)
    }
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, ParamError> {
    v.ok_or_else(|| ParamError(format!("missing required parameter {name}")))
}

impl ConfigSpec {
    /// Fields set in `self` win; unset ones are taken from `fallback`.
    pub fn or(self, fallback: ConfigSpec) -> ConfigSpec {
        ConfigSpec {
            nodes: self.nodes.or(fallback.nodes),
            redundancy: self.redundancy.or(fallback.redundancy),
            alpha: self.alpha.or(fallback.alpha),
            file_blocks: self.file_blocks.or(fallback.file_blocks),
            access: self.access.or(fallback.access),
            r: self.r.or(fallback.r),
            p: self.p.or(fallback.p),
            service: self.service.or(fallback.service),
            mu: self.mu.or(fallback.mu),
            delta: self.delta.or(fallback.delta),
        }
    }

    pub fn nodes(&self) -> Result<u64, ParamError> {
        required(self.nodes, "N")
    }

    pub fn redundancy(&self) -> Result<u64, ParamError> {
        required(self.redundancy, "m")
    }

    pub fn alpha(&self) -> Result<u64, ParamError> {
        required(self.alpha, "alpha")
    }

    pub fn access_kind(&self) -> Result<AccessKind, ParamError> {
        required(self.access, "access")
    }

    pub fn system_config(&self) -> Result<SystemConfig, ParamError> {
        let mut cfg = SystemConfig::new(self.nodes()?, self.redundancy()?, self.alpha()?);
        cfg.file_blocks = self.file_blocks;
        Ok(cfg)
    }

    pub fn access_model(&self) -> Result<AccessModel<f64>, ParamError> {
        match self.access_kind()? {
            AccessKind::FixedSize => Ok(AccessModel::FixedSize { r: required(self.r, "r")? }),
            AccessKind::Probabilistic => Ok(AccessModel::Probabilistic { p: required(self.p, "p")? }),
        }
    }

    pub fn service_model(&self) -> ServiceModel<f64> {
        let mu = self.mu.unwrap_or(DEFAULT_MU);
        match self.service.unwrap_or(ServiceKind::Scaled) {
            ServiceKind::Scaled => ServiceModel::ScaledExponential { mu },
            ServiceKind::Shifted => ServiceModel::ShiftedExponential { mu, delta: self.delta.unwrap_or(DEFAULT_DELTA) },
        }
    }

    /// Canonical key-value rendering of the set fields, with service
    /// defaults filled in. Parses back to an equivalent spec.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(n) = self.nodes {
            parts.push(format!("N={n}"));
        }
        if let Some(m) = self.redundancy {
            parts.push(format!("m={m}"));
        }
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        if let Some(k) = self.file_blocks {
            parts.push(format!("k={k}"));
        }
        match self.access {
            Some(AccessKind::FixedSize) => {
                parts.push("access=fixed".into());
                if let Some(r) = self.r {
                    parts.push(format!("r={r}"));
                }
            }
            Some(AccessKind::Probabilistic) => {
                parts.push("access=prob".into());
                if let Some(p) = self.p {
                    parts.push(format!("p={p}"));
                }
            }
            None => {}
        }
        match self.service_model() {
            ServiceModel::ScaledExponential { mu } => parts.push(format!("service=scaled mu={mu}")),
            ServiceModel::ShiftedExponential { mu, delta } => {
                parts.push(format!("service=shifted mu={mu} delta={delta}"))
            }
        }
        parts.join(" ")
    }
}
