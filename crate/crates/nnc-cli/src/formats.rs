//! On-disk JSON schemas and the canonical serializer.
//!
//! Canonical form: compact JSON, struct-declaration key order, floats
//! printed with 17 significant digits (`{:.16e}`), which round-trip
//! exactly. Files produced here survive parse -> serialize byte-for-byte.
//! Unknown fields are rejected on input; `version` must match.

use std::io;

use serde::{Deserialize, Serialize};

use nnc::cover::CoverInstance;
use nnc::geom::{LpMetric, Point};
use nnc::matching::MatchInstance;
use nnc::motorcycle::Motorcycle;
use nnc::steiner::WeightedGraph;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub seed: u64,
    /// Generator name and parameters, recorded for reproducibility.
    pub generator: String,
    pub instance: Instance,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Instance {
    Points {
        dim: usize,
        /// L_p exponent as a string so that "inf" is representable.
        p: String,
        coords: Vec<Vec<f64>>,
    },
    Paths {
        dim: usize,
        p: String,
        segments: Vec<[Vec<f64>; 2]>,
    },
    Motorcycles {
        motorcycles: Vec<McJson>,
    },
    Matching {
        k: usize,
        left: Vec<Vec<f64>>,
        right: Vec<Vec<f64>>,
    },
    Cover {
        clients: Vec<f64>,
        servers: Vec<f64>,
    },
    Graph {
        nodes: usize,
        edges: Vec<(usize, usize, f64)>,
        sites: Vec<usize>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McJson {
    pub start: [f64; 2],
    pub dir: [f64; 2],
    pub speed: f64,
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Points { .. } => "points",
            Instance::Paths { .. } => "paths",
            Instance::Motorcycles { .. } => "motorcycles",
            Instance::Matching { .. } => "matching",
            Instance::Cover { .. } => "cover",
            Instance::Graph { .. } => "graph",
        }
    }
}

pub fn parse_p(p: &str) -> Result<f64, String> {
    let v: f64 = p
        .parse()
        .map_err(|e| format!("bad L_p exponent {p:?}: {e}"))?;
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("L_p exponent must be >= 1 or inf, got {p}"))
    }
}

pub fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

pub fn points_of(coords: &[Vec<f64>], dim: usize, p: &str) -> Result<(Vec<Point>, LpMetric), String> {
    let metric = LpMetric::new(parse_p(p)?, dim).map_err(|e| e.to_string())?;
    let mut pts = Vec::with_capacity(coords.len());
    for c in coords {
        if c.len() != dim {
            return Err(format!("point dimension {} does not match {dim}", c.len()));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err("coordinates must be finite".into());
        }
        pts.push(Point(c.clone()));
    }
    Ok((pts, metric))
}

pub fn motorcycles_of(items: &[McJson]) -> Result<Vec<Motorcycle>, String> {
    items
        .iter()
        .map(|m| Motorcycle::new(m.start, m.dir, m.speed).map_err(|e| e.to_string()))
        .collect()
}

pub fn matching_of(k: usize, left: &[Vec<f64>], right: &[Vec<f64>]) -> Result<MatchInstance, String> {
    MatchInstance::new(k, left.to_vec(), right.to_vec()).map_err(|e| e.to_string())
}

pub fn cover_of(clients: &[f64], servers: &[f64]) -> Result<CoverInstance, String> {
    CoverInstance::new(clients.to_vec(), servers.to_vec()).map_err(|e| e.to_string())
}

pub fn graph_of(nodes: usize, edges: &[(usize, usize, f64)], sites: &[usize]) -> Result<WeightedGraph, String> {
    WeightedGraph::new(nodes, edges, sites.to_vec()).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Run reports.

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub version: u32,
    pub algorithm: String,
    pub instance_digest: String,
    pub result: RunResult,
    pub counters: Counters,
    /// Wall time; excluded from report comparisons.
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle: Option<OracleVerdict>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Counters {
    pub iterations: usize,
    pub connections: usize,
    pub pushes: usize,
    pub pops: usize,
    pub queries: usize,
    pub merges: usize,
    pub clips: usize,
    pub cycles: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunResult {
    Tour {
        order: Vec<usize>,
        length: f64,
    },
    Plan {
        edges: Vec<(usize, usize)>,
        closing: (usize, usize),
        length: f64,
    },
    Motorcycles {
        statuses: Vec<StatusJson>,
    },
    Matching {
        pairs: Vec<(usize, usize)>,
    },
    Cover {
        radii: Vec<f64>,
        cost: f64,
    },
    SiteTour {
        site_order: Vec<usize>,
        length: f64,
        walk: Vec<usize>,
    },
    Params(ParamsJson),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "status", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatusJson {
    Escaped,
    Crashed {
        into: usize,
        point: [f64; 2],
        time: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleVerdict {
    pub verdict: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    pub dim: usize,
    pub p: String,
    pub arity: String,
    pub epsilon: f64,
    pub k: usize,
    pub certificate: String,
    pub certificate_samples: u64,
    pub certificate_seed: u64,
    pub certificate_margin: f64,
    /// The analytic plane constant, reported alongside for (R^2, L_2).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analytic_epsilon: Option<f64>,
    pub falsification: String,
    pub falsify_effort: u64,
}

// ---------------------------------------------------------------------------
// Canonical serialization.

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser).expect("serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("canonical json is utf-8")
}

/// FNV-1a 64-bit digest, hex encoded.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_floats_roundtrip() {
        let xs = [1.0, 0.1, 1e-9, 123456.789, f64::MIN_POSITIVE, 1.0 / 3.0];
        for x in xs {
            let s = format!("{x:.16e}");
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn instance_roundtrip_is_byte_identical() {
        let f = InstanceFile {
            version: SCHEMA_VERSION,
            seed: 7,
            generator: "points n=2 dim=2 p=2".into(),
            instance: Instance::Points {
                dim: 2,
                p: "2".into(),
                coords: vec![vec![0.5, 0.25], vec![1.0 / 3.0, 2.0 / 7.0]],
            },
        };
        let s1 = to_canonical_json(&f);
        let parsed: InstanceFile = serde_json::from_str(&s1).unwrap();
        let s2 = to_canonical_json(&parsed);
        assert_eq!(s1, s2);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"version":1,"seed":1,"generator":"x","instance":{"kind":"cover","clients":[1.0],"servers":[0.0]},"extra":3}"#;
        assert!(serde_json::from_str::<InstanceFile>(bad).is_err());
    }
}
