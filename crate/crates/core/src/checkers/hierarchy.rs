use serde::Serialize;

use crate::constants::{lt_to_p, EPS_CLAMP};
use crate::geometry::Scene;

use super::{
    check_intrinsic, check_property_p, check_property_t, check_subtransversality, check_tangential,
    check_transversality, CheckError, CheckerConfig, Property, PropertyReport,
};

/// `alpha` for property (P) when no intrinsic constant is available.
pub const FALLBACK_ALPHA: f64 = 0.05;

const EDGES: [(Property, Property); 7] = [
    (Property::Transversality, Property::Tangential),
    (Property::Tangential, Property::Intrinsic),
    (Property::Intrinsic, Property::Subtransversality),
    (Property::Subtransversality, Property::PropertyT),
    (Property::PropertyT, Property::Subtransversality),
    (Property::Intrinsic, Property::PropertyP),
    (Property::PropertyP, Property::Intrinsic),
];

/// Whether `p` implies `q` through a chain of known implications.
pub fn implies(p: Property, q: Property) -> bool {
    let mut seen = vec![p];
    let mut i = 0;
    while i < seen.len() {
        let cur = seen[i];
        for (a, b) in EDGES {
            if a == cur && !seen.contains(&b) {
                seen.push(b);
            }
        }
        i += 1;
    }
    p != q && seen.contains(&q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub reports: Vec<PropertyReport>,
    /// Pairs where a property holds while one it implies fails.
    pub inconsistencies: Vec<String>,
    pub alpha_source: String,
}

impl HierarchyReport {
    pub fn get(&self, p: Property) -> &PropertyReport {
        self.reports.iter().find(|r| r.property == p).expect("every property is checked")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn run_hierarchy(scene: &Scene, cfg: &CheckerConfig) -> Result<HierarchyReport, CheckError> {
    let transversality = check_transversality(scene, cfg)?;
    let tangential = check_tangential(scene, cfg)?;
    let intrinsic = check_intrinsic(scene, cfg)?;
    let property_t = check_property_t(scene, cfg)?;
    let subtr = check_subtransversality(scene, cfg)?;
    let eps = cfg.delta.min(EPS_CLAMP);
    let (alpha, alpha_source) = match intrinsic.get("kappa") {
        Some(k) if intrinsic.holds() && k > 0.0 => {
            let (a, _) = lt_to_p(k.min(1.0), eps).map_err(|e| CheckError::Config(e.to_string()))?;
            (a, format!("lt_to_p(theta = intrinsic kappa = {k}, eps = {eps})"))
        }
        _ => (FALLBACK_ALPHA, format!("fallback alpha = {FALLBACK_ALPHA}")),
    };
    let property_p = check_property_p(scene, alpha, eps, cfg)?;
    let reports = vec![transversality, tangential, intrinsic, property_t, subtr, property_p];
    let mut inconsistencies = Vec::new();
    for up in &reports {
        for down in &reports {
            if implies(up.property, down.property) && up.holds() && down.fails() {
                inconsistencies.push(format!("{} holds but {} fails", up.property.name(), down.property.name()));
            }
        }
    }
    for msg in &inconsistencies {
        log::error!("hierarchy inconsistency: {msg}");
    }
    Ok(HierarchyReport { reports, inconsistencies, alpha_source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures;

    #[test]
    fn implication_closure() {
        assert!(implies(Property::Transversality, Property::Subtransversality));
        assert!(implies(Property::Transversality, Property::PropertyT));
        assert!(implies(Property::PropertyP, Property::PropertyT));
        assert!(!implies(Property::Subtransversality, Property::Intrinsic));
        assert!(!implies(Property::Tangential, Property::Transversality));
        assert!(!implies(Property::Intrinsic, Property::Intrinsic));
    }

    #[test]
    fn axes_all_hold() {
        let mut cfg = CheckerConfig { grid_count: 8, ..CheckerConfig::default() };
        cfg.slope.samples_per_radius = 256;
        let h = run_hierarchy(&fixtures::axes(), &cfg).unwrap();
        assert!(h.inconsistencies.is_empty());
        for r in &h.reports {
            assert!(r.holds(), "{r:?}");
        }
    }
}
