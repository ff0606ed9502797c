//! JSON documents describing systems, sequences and run parameters.
//!
//! One document shape serves every command; each command reads the fields it
//! needs and rejects documents missing them. Unknown fields are errors.
//!
//! ```json
//! {"maps": [{"kind": "linear", "k": 0.5}, {"kind": "linear", "k": 0.25}],
//!  "sequence": {"type": "periodic", "pattern": [1, 2]},
//!  "domain": {"R": 10.0}}
//! ```

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::conjugacy1d::BridgeKind;
use crate::error::{IfsError, Result};
use crate::ifs::IfsDescriptor;
use crate::maps::{Domain, MapKind, Perturbation, PerturbationShape, ScalarMap, SmoothFamily, WorkingInterval};
use crate::multidim::{DiagonalMap, Hypothesis};
use crate::sequence::{PositionRule, SymbolSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeName {
    Sine,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub shape: ShapeName,
    pub c: f64,
    /// Declared Lipschitz constant; defaults to `|c|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    Linear { k: f64 },
    LinearLipschitz { k: f64, perturbation: PerturbationSpec },
    Smooth { name: String, params: Vec<f64> },
    Affine { k: f64, b: f64 },
}

impl MapSpec {
    pub fn build(&self) -> Result<ScalarMap> {
        match self {
            MapSpec::Linear { k } => ScalarMap::new(MapKind::Linear { k: *k }, Domain::Real),
            MapSpec::LinearLipschitz { k, perturbation } => {
                let shape = match perturbation.shape {
                    ShapeName::Sine => PerturbationShape::Sine { c: perturbation.c },
                    ShapeName::Rational => PerturbationShape::Rational { c: perturbation.c },
                };
                let p = Perturbation::new(shape, perturbation.epsilon.unwrap_or(perturbation.c.abs()))?;
                ScalarMap::new(MapKind::LinearPlusLipschitz { k: *k, perturbation: p }, Domain::Real)
            }
            MapSpec::Smooth { name, params } => {
                ScalarMap::new(MapKind::Smooth(SmoothFamily::from_name(name, params)?), Domain::Real)
            }
            MapSpec::Affine { k, b } => ScalarMap::new(MapKind::Affine { k: *k, b: *b }, Domain::Real),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagSpec {
    pub diag: Vec<f64>,
}

/// A scalar catalog map or a diagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MapEntry {
    Scalar(MapSpec),
    Diagonal(DiagSpec),
}

impl<'de> Deserialize<'de> for MapEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.get("diag").is_some() {
            DiagSpec::deserialize(v).map(MapEntry::Diagonal).map_err(D::Error::custom)
        } else {
            MapSpec::deserialize(v).map(MapEntry::Scalar).map_err(D::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSpec {
    Explicit { symbols: Vec<usize> },
    Periodic { pattern: Vec<usize> },
    Bernoulli { p: f64, seed: u64 },
    Sparse {
        special: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<usize>,
        rule: PositionRule,
    },
}

impl SequenceSpec {
    pub fn build(&self) -> Result<SymbolSequence> {
        let s = match self {
            SequenceSpec::Explicit { symbols } => SymbolSequence::explicit(symbols.clone()),
            SequenceSpec::Periodic { pattern } => SymbolSequence::periodic(pattern.clone()),
            SequenceSpec::Bernoulli { p, seed } => SymbolSequence::bernoulli(*p, *seed),
            SequenceSpec::Sparse { special, base: None, rule } => SymbolSequence::sparse(*special, *rule),
            SequenceSpec::Sparse { special, base: Some(base), rule } => {
                SymbolSequence::SparseDensity { special: *special, base: *base, rule: *rule }
            }
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(rename = "R")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilaritySpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<MapEntry>>,
    /// Second system for two-system commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<MapEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<SimilaritySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
    /// Evaluation points for vector residuals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// Admit affine maps (attractor sampling only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<bool>,
}

fn missing(field: &str) -> IfsError {
    IfsError::Config(format!("missing field `{field}`"))
}

fn scalar_maps(entries: &[MapEntry], field: &str) -> Result<Vec<ScalarMap>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            MapEntry::Scalar(s) => s.build().map_err(|err| IfsError::Config(format!("{field}[{i}]: {err}"))),
            MapEntry::Diagonal(_) => Err(IfsError::Config(format!("{field}[{i}]: expected a scalar map, got `diag`"))),
        })
        .collect()
}

fn diag_maps(entries: &[MapEntry], field: &str) -> Result<Vec<DiagonalMap>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            MapEntry::Diagonal(d) => {
                DiagonalMap::new(d.diag.clone()).map_err(|err| IfsError::Config(format!("{field}[{i}]: {err}")))
            }
            MapEntry::Scalar(_) => Err(IfsError::Config(format!("{field}[{i}]: expected a `diag` entry"))),
        })
        .collect()
}

impl Document {
    /// Parses a document. Syntax errors keep serde_json's line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| IfsError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn interval(&self) -> Result<WorkingInterval> {
        match self.domain {
            Some(d) => WorkingInterval::new(d.r),
            None => Ok(WorkingInterval::default()),
        }
    }

    pub fn ifs(&self) -> Result<IfsDescriptor> {
        let entries = self.maps.as_deref().ok_or_else(|| missing("maps"))?;
        let maps = scalar_maps(entries, "maps")?;
        if self.affine.unwrap_or(false) {
            IfsDescriptor::with_affine(maps, "F")
        } else {
            IfsDescriptor::new(maps, "F")
        }
    }

    pub fn target_ifs(&self) -> Result<IfsDescriptor> {
        let entries = self.target.as_deref().ok_or_else(|| missing("target"))?;
        IfsDescriptor::new(scalar_maps(entries, "target")?, "G")
    }

    pub fn diag_maps(&self) -> Result<Vec<DiagonalMap>> {
        let d = diag_maps(self.maps.as_deref().ok_or_else(|| missing("maps"))?, "maps")?;
        self.check_dimension(&d)?;
        Ok(d)
    }

    pub fn diag_target(&self) -> Result<Vec<DiagonalMap>> {
        let d = diag_maps(self.target.as_deref().ok_or_else(|| missing("target"))?, "target")?;
        self.check_dimension(&d)?;
        Ok(d)
    }

    fn check_dimension(&self, maps: &[DiagonalMap]) -> Result<()> {
        if let Some(m) = self.dimension {
            if let Some(bad) = maps.iter().position(|d| d.dim() != m) {
                return Err(IfsError::Config(format!(
                    "dimension is {m} but maps[{bad}] has {} entries",
                    maps[bad].dim()
                )));
            }
        }
        Ok(())
    }

    /// True when `maps` holds diagonal entries.
    pub fn is_diagonal(&self) -> bool {
        matches!(self.maps.as_deref(), Some([MapEntry::Diagonal(_), ..]))
    }

    pub fn sequence(&self) -> Result<SymbolSequence> {
        self.sequence.as_ref().ok_or_else(|| missing("sequence"))?.build()
    }

    pub fn f_map(&self) -> Result<ScalarMap> {
        self.f.as_ref().ok_or_else(|| missing("f"))?.build()
    }

    pub fn g_map(&self) -> Result<ScalarMap> {
        self.g.as_ref().ok_or_else(|| missing("g"))?.build()
    }

    pub fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T> {
        value.ok_or_else(|| missing(field))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_examples() {
        let d = Document::from_json(
            r#"{"maps":[{"kind":"linear","k":0.5},{"kind":"linear-lipschitz","k":0.3,
                "perturbation":{"shape":"sine","c":0.1,"epsilon":0.2}}],
                "sequence":{"type":"periodic","pattern":[1,2]},"domain":{"R":10.0}}"#,
        )
        .unwrap();
        let f = d.ifs().unwrap();
        assert_eq!(f.len(), 2);
        assert!((f.map(2).eval(1.0) - (0.3 + 0.1 * 1f64.sin())).abs() < 1e-15);
        assert_eq!(d.sequence().unwrap().prefix(3).unwrap(), vec![1, 2, 1]);
        assert_eq!(d.interval().unwrap().radius, 10.0);

        let c = Document::from_json(
            r#"{"f":{"kind":"linear","k":0.25},"g":{"kind":"linear","k":0.5},"bridge":"power-law","anchor":1.0}"#,
        )
        .unwrap();
        assert_eq!(c.bridge, Some(BridgeKind::PowerLaw));
        assert_eq!(c.g_map().unwrap().linear_slope(), Some(0.5));

        let m = Document::from_json(
            r#"{"dimension":2,"maps":[{"diag":[0.5,0.25]},{"diag":[0.2,0.4]}],"similarity":{"A":[[1,1],[0,1]]}}"#,
        )
        .unwrap();
        assert!(m.is_diagonal());
        assert_eq!(m.diag_maps().unwrap()[1].diag, vec![0.2, 0.4]);
    }

    #[test]
    fn round_trips() {
        let text = r#"{"maps":[{"kind":"smooth","name":"cubic","params":[0.5,0.1]},{"kind":"affine","k":0.3,"b":1.0}],
            "sequence":{"type":"sparse","special":2,"rule":"perfect-squares"},"affine":true,"bridge":"linear"}"#;
        let d = Document::from_json(text).unwrap();
        let back = Document::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
        assert_eq!(d.bridge, Some(BridgeKind::LinearInterpolation));
        assert!(d.ifs().unwrap().contains_affine());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let e = Document::from_json(r#"{"maps":[],"colour":"red"}"#).unwrap_err().to_string();
        assert!(e.contains("colour"), "{e}");
        let e = Document::from_json(r#"{"maps":[{"kind":"linear","k":0.5,"b":2}]}"#).unwrap_err().to_string();
        assert!(e.contains('b'), "{e}");
        let e = Document::from_json("{\"maps\": [\n  {\"kind\": }]}").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let d = Document::from_json(r#"{"maps":[{"kind":"affine","k":0.3,"b":1.0}]}"#).unwrap();
        assert!(matches!(d.ifs(), Err(IfsError::AffineNotAllowed)));
        let d = Document::from_json(r#"{"maps":[{"kind":"linear","k":0.5}]}"#).unwrap();
        assert!(d.sequence().unwrap_err().to_string().contains("sequence"));
        let d = Document::from_json(
            r#"{"maps":[{"kind":"linear-lipschitz","k":0.3,"perturbation":{"shape":"rational","c":0.4,"epsilon":0.1}}]}"#,
        )
        .unwrap();
        assert!(d.ifs().unwrap_err().to_string().contains("maps[0]"));
        let d = Document::from_json(r#"{"dimension":3,"maps":[{"diag":[0.5,0.25]}]}"#).unwrap();
        assert!(d.diag_maps().is_err());
    }
}
