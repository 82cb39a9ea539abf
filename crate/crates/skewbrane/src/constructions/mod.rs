//! The built-in surface constructions and their JSON-addressable registry.

pub mod hopf;
pub mod sphere;
pub mod torus;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::immersion::Immersion;

pub use hopf::{circle_reduction, hopf_field, hopf_functions, Grad5Report, SkewSphere};
pub use sphere::{linearized_residual_of, GProfile, GraphSphere, ImmSphere};
pub use torus::{iden_value, OrbitShift, SkewTorus, TorusBudget};

/// A surface request: a built-in name plus parameter overrides.
///
/// ```json
/// { "kind": "skew-torus", "params": { "eps": 0.02, "delta": 0.1 } }
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

impl SurfaceSpec {
    pub fn named(kind: &str) -> Self {
        SurfaceSpec {
            kind: kind.to_string(),
            params: Value::Null,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A constructed built-in surface.
#[derive(Clone)]
pub enum Surface {
    Torus(SkewTorus),
    ImmSphere(ImmSphere),
    SkewSphere(SkewSphere),
    GraphSphere(GraphSphere),
}

impl Surface {
    pub fn immersion(&self) -> Immersion {
        match self {
            Surface::Torus(t) => t.immersion(),
            Surface::ImmSphere(s) => s.immersion(),
            Surface::SkewSphere(s) => s.immersion(),
            Surface::GraphSphere(g) => g.immersion(),
        }
    }
}

fn param_f64(map: &serde_json::Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::InvalidSpec(format!("parameter '{key}' must be a number"))),
    }
}

fn check_known_keys(map: &serde_json::Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidSpec(format!(
                "unknown parameter '{k}' (allowed: {allowed:?})"
            )));
        }
    }
    Ok(())
}

fn parse_profile(map: &serde_json::Map<String, Value>) -> Result<Option<GProfile>> {
    match map.get("g_profile") {
        None => Ok(None),
        Some(Value::Array(items)) => {
            let mut harmonics = Vec::new();
            for item in items {
                let obj = item.as_object().ok_or_else(|| {
                    Error::InvalidSpec("g_profile entries must be {\"k\": .., \"amp\": ..}".into())
                })?;
                let k = obj
                    .get("k")
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| Error::InvalidSpec("g_profile entry needs integer k".into()))?;
                let amp = obj
                    .get("amp")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| Error::InvalidSpec("g_profile entry needs amp".into()))?;
                harmonics.push((k as u32, amp));
            }
            Ok(Some(GProfile { harmonics }))
        }
        Some(_) => Err(Error::InvalidSpec("g_profile must be an array".into())),
    }
}

/// Build a surface from its spec; unknown names or parameters are rejected
/// before any computation runs.
pub fn build_surface(spec: &SurfaceSpec) -> Result<Surface> {
    let empty = serde_json::Map::new();
    let map = match &spec.params {
        Value::Null => &empty,
        Value::Object(m) => m,
        _ => return Err(Error::InvalidSpec("params must be an object".into())),
    };
    match spec.kind.as_str() {
        "torus0" => {
            check_known_keys(map, &[])?;
            Ok(Surface::Torus(SkewTorus::standard()))
        }
        "skew-torus" => {
            check_known_keys(map, &["eps", "delta"])?;
            let delta = param_f64(map, "delta")?.unwrap_or(0.1);
            let eps = param_f64(map, "eps")?;
            if eps == Some(0.0) {
                return Ok(Surface::Torus(SkewTorus { eps: 0.0, delta }));
            }
            let (torus, _) = SkewTorus::build(eps, delta)?;
            Ok(Surface::Torus(torus))
        }
        "sphere-m0" | "skew-imm-sphere" => {
            check_known_keys(map, &["eps", "g_profile"])?;
            let default_eps = if spec.kind == "sphere-m0" { 0.0 } else { 0.02 };
            let eps = param_f64(map, "eps")?.unwrap_or(default_eps);
            let profile = parse_profile(map)?.unwrap_or_else(GProfile::default_two_four);
            Ok(Surface::ImmSphere(ImmSphere::new(eps, profile)?))
        }
        "skew-sphere3" => {
            check_known_keys(map, &["eps", "n", "a"])?;
            let eps = param_f64(map, "eps")?.unwrap_or(0.01);
            let n = param_f64(map, "n")?.map(|v| v as usize).unwrap_or(2);
            let coeffs = match map.get("a") {
                None => None,
                Some(Value::Array(items)) => {
                    let mut v = Vec::new();
                    for item in items {
                        v.push(item.as_f64().ok_or_else(|| {
                            Error::InvalidSpec("coefficients 'a' must be numbers".into())
                        })?);
                    }
                    Some(v)
                }
                Some(_) => return Err(Error::InvalidSpec("'a' must be an array".into())),
            };
            Ok(Surface::SkewSphere(SkewSphere::build(n, eps, coeffs)?))
        }
        "graph-sphere" => {
            check_known_keys(map, &["seed", "amp"])?;
            let seed = param_f64(map, "seed")?.map(|v| v as u64).unwrap_or(42);
            let amp = param_f64(map, "amp")?.unwrap_or(0.1);
            Ok(Surface::GraphSphere(GraphSphere::new(seed, amp)))
        }
        other => Err(Error::InvalidSpec(format!(
            "unknown surface '{other}' (built-ins: torus0, skew-torus, sphere-m0, \
             skew-imm-sphere, skew-sphere3, graph-sphere)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_accepts_builtins_and_rejects_unknown() {
        for kind in ["torus0", "sphere-m0", "graph-sphere"] {
            assert!(build_surface(&SurfaceSpec::named(kind)).is_ok(), "{kind}");
        }
        assert!(build_surface(&SurfaceSpec::named("mobius")).is_err());
    }

    #[test]
    fn unknown_parameters_rejected_before_computation() {
        let spec = SurfaceSpec {
            kind: "skew-torus".into(),
            params: serde_json::json!({"epsilon": 0.1}),
        };
        assert!(matches!(build_surface(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec =
            SurfaceSpec::from_json(r#"{"kind": "skew-imm-sphere", "params": {"eps": 0.03}}"#)
                .unwrap();
        let s = build_surface(&spec).unwrap();
        if let Surface::ImmSphere(m) = s {
            assert_eq!(m.eps, 0.03);
        } else {
            panic!("wrong surface kind");
        }
    }

    #[test]
    fn profile_override() {
        let spec = SurfaceSpec {
            kind: "skew-imm-sphere".into(),
            params: serde_json::json!({"g_profile": [{"k": 2, "amp": 1.0}]}),
        };
        if let Surface::ImmSphere(m) = build_surface(&spec).unwrap() {
            assert_eq!(m.profile.harmonics, vec![(2, 1.0)]);
        } else {
            panic!("wrong kind");
        }
    }
}
