//! Sampled checks of the regularity properties at a reference point.
//!
//! A check either holds at the recorded sampling resolution, fails with a
//! certificate that re-validates by direct oracle arithmetic, or is
//! inconclusive.

mod certificate;
mod hierarchy;
mod property_t;
mod proxy;
mod slope_checks;
mod subtr;
mod transversality;
mod triple;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::slopes::SlopeConfig;

pub use certificate::{zero_slope_certificate, Certificate, Side};
pub use hierarchy::{implies, run_hierarchy, HierarchyReport, FALLBACK_ALPHA};
pub use property_t::{check_property_t, M_LADDER};
pub use proxy::{IntersectionProxy, ProxySource};
pub use slope_checks::{check_intrinsic, check_tangential};
pub use subtr::{check_subtransversality, subtransversality_grid};
pub use transversality::{check_transversality, translation_grid};
pub use triple::{check_property_p, triple_distance, TripleBudget};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("invalid checker config: {0}")]
    Config(String),
    #[error(transparent)]
    Slope(#[from] crate::slopes::SlopeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckerConfig {
    pub delta: f64,
    pub grid_count: usize,
    pub translation_count: usize,
    pub kappa_min: f64,
    #[serde(rename = "K_max")]
    pub k_max: f64,
    pub slope: SlopeConfig,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            delta: 1.0,
            grid_count: 16,
            translation_count: 3,
            kappa_min: 0.01,
            k_max: 1e6,
            slope: SlopeConfig { samples_per_radius: 1024, ..SlopeConfig::default() },
        }
    }
}

impl CheckerConfig {
    pub fn validate(&self) -> Result<(), CheckError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(CheckError::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.grid_count == 0 || self.translation_count == 0 {
            return Err(CheckError::Config("grid_count and translation_count must be >= 1".into()));
        }
        if !(self.kappa_min > 0.0 && self.k_max > 0.0) {
            return Err(CheckError::Config("kappa_min and K_max must be positive".into()));
        }
        self.slope.validate()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Transversality,
    Tangential,
    Intrinsic,
    #[serde(rename = "property_T")]
    PropertyT,
    Subtransversality,
    #[serde(rename = "property_P")]
    PropertyP,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Transversality,
        Property::Tangential,
        Property::Intrinsic,
        Property::PropertyT,
        Property::Subtransversality,
        Property::PropertyP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Transversality => "transversality",
            Property::Tangential => "tangential",
            Property::Intrinsic => "intrinsic",
            Property::PropertyT => "property_T",
            Property::Subtransversality => "subtransversality",
            Property::PropertyP => "property_P",
        }
    }

    pub fn parse(s: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HoldsAtResolution,
    FailsWithWitness,
    Inconclusive,
}

/// A real that may be infinite; non-finite values serialize as strings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub certificate: Certificate,
    pub explanation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, ExtReal>,
    pub witness: Option<Witness>,
    pub sampling: BTreeMap<String, String>,
}

impl PropertyReport {
    pub(crate) fn new(property: Property, verdict: Verdict) -> Self {
        PropertyReport { property, verdict, constants: BTreeMap::new(), witness: None, sampling: BTreeMap::new() }
    }

    pub(crate) fn failing(property: Property, certificate: Certificate, explanation: impl Into<String>) -> Self {
        let mut r = PropertyReport::new(property, Verdict::FailsWithWitness);
        r.witness = Some(Witness { certificate, explanation: explanation.into() });
        r
    }

    pub(crate) fn constant(mut self, name: &str, v: f64) -> Self {
        self.constants.insert(name.to_string(), ExtReal(v));
        self
    }

    pub(crate) fn note(mut self, key: &str, v: impl ToString) -> Self {
        self.sampling.insert(key.to_string(), v.to_string());
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.get(name).map(|e| e.0)
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsAtResolution
    }

    pub fn fails(&self) -> bool {
        self.verdict == Verdict::FailsWithWitness
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Shared first step: a property at `xbar` needs `xbar` in both sets.
pub(crate) fn require_common_point(scene: &crate::geometry::Scene, property: Property) -> Option<PropertyReport> {
    if scene.in_a(&scene.xbar) && scene.in_b(&scene.xbar) {
        return None;
    }
    let proxy = IntersectionProxy::build(scene);
    let cert = if proxy.is_exact() && proxy.is_empty() {
        Certificate::EmptyIntersection { translation: crate::geometry::Point::zeros(scene.dimension) }
    } else {
        Certificate::NotCommonPoint {
            xbar: scene.xbar.clone(),
            dist_a: scene.a.distance(&scene.xbar),
            dist_b: scene.b.distance(&scene.xbar),
        }
    };
    let explanation = match cert {
        Certificate::EmptyIntersection { .. } => "A and B do not intersect",
        _ => "reference point is not in both sets",
    };
    Some(PropertyReport::failing(property, cert, explanation))
}
