//! Experiment configuration: one JSON document per experiment, with CLI
//! flags overriding file values. Change points admit `"inf"` in JSON and on
//! the command line since JSON numbers cannot carry IEEE infinities.

use ncusum_core::drift::DriftModel;
use ncusum_core::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A change point that serializes as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tau {
    Num(f64),
    Name(TauName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TauName {
    #[serde(rename = "inf")]
    Inf,
}

impl Tau {
    pub fn value(&self) -> f64 {
        match self {
            Tau::Num(v) => *v,
            Tau::Name(TauName::Inf) => f64::INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v.is_infinite() {
            Tau::Name(TauName::Inf)
        } else {
            Tau::Num(v)
        }
    }
}

/// Parses `0,inf,1.5` into change points.
pub fn parse_taus(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.eq_ignore_ascii_case("inf") || tok.eq_ignore_ascii_case("infinity") {
                Ok(f64::INFINITY)
            } else {
                tok.parse::<f64>().map_err(|_| {
                    Error::InvalidConfig(format!("cannot parse change point {tok:?}"))
                })
            }
        })
        .collect()
}

/// Parses `constant:1.0`, `autoregressive:0.5`, `rotational`,
/// `rotational:state`.
pub fn parse_model(s: &str) -> Result<DriftModel> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    match kind {
        "constant" => {
            let level = arg
                .ok_or_else(|| Error::InvalidConfig("constant model needs a level".into()))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig("bad constant level".into()))?;
            Ok(DriftModel::Constant { level })
        }
        "autoregressive" | "coupled" => {
            let rate = arg
                .ok_or_else(|| Error::InvalidConfig("autoregressive model needs a rate".into()))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig("bad autoregressive rate".into()))?;
            Ok(DriftModel::CoupledAutoregressive { rate })
        }
        "rotational" => Ok(DriftModel::RotationalPair {
            matrix_times_state: arg == Some("state"),
        }),
        other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
    }
}

/// FNV-1a 64 over the canonical JSON serialization: a stable provenance hash
/// independent of Rust's hasher seeds and versions.
pub fn config_hash<T: Serialize>(value: &T) -> u64 {
    let json = serde_json::to_string(value).unwrap_or_default();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in json.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_roundtrip() {
        let taus = vec![Tau::from_value(0.5), Tau::from_value(f64::INFINITY)];
        let json = serde_json::to_string(&taus).unwrap();
        assert_eq!(json, r#"[0.5,"inf"]"#);
        let back: Vec<Tau> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[0].value(), 0.5);
        assert!(back[1].value().is_infinite());
    }

    #[test]
    fn model_parsing() {
        assert_eq!(
            parse_model("constant:2.5").unwrap(),
            DriftModel::Constant { level: 2.5 }
        );
        assert_eq!(
            parse_model("autoregressive:0.5").unwrap(),
            DriftModel::CoupledAutoregressive { rate: 0.5 }
        );
        assert!(matches!(
            parse_model("rotational").unwrap(),
            DriftModel::RotationalPair {
                matrix_times_state: false
            }
        ));
        assert!(parse_model("fourier").is_err());
    }

    #[test]
    fn hash_is_stable() {
        #[derive(Serialize)]
        struct S {
            a: u32,
        }
        assert_eq!(config_hash(&S { a: 1 }), config_hash(&S { a: 1 }));
        assert_ne!(config_hash(&S { a: 1 }), config_hash(&S { a: 2 }));
    }
}
