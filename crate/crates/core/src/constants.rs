//! Closed-form transfers between the constants of the regularity properties.

use serde::Serialize;
use thiserror::Error;

/// Largest `eps` accepted by [`lt_to_p`]; larger values are clamped to it.
pub const EPS_CLAMP: f64 = 1.0 - 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("{name} must be {requirement}, got {value}")]
    Domain { name: &'static str, requirement: &'static str, value: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, ConstantsError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConstantsError::Domain { name, requirement: "positive and finite", value })
    }
}

fn open_unit(name: &'static str, value: f64) -> Result<f64, ConstantsError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(ConstantsError::Domain { name, requirement: "in (0, 1)", value })
    }
}

/// `(K, delta_hat) = (M + 1, delta / (8 (1 + 2M)))`.
pub fn t_to_subtr(m: f64, delta: f64) -> Result<(f64, f64), ConstantsError> {
    let m = positive("M", m)?;
    let delta = positive("delta", delta)?;
    Ok((m + 1.0, delta / (8.0 * (1.0 + 2.0 * m))))
}

/// `(M, proximity_radius) = (K + 2, delta / (4K + 10))`.
pub fn subtr_to_t(k: f64, delta: f64) -> Result<(f64, f64), ConstantsError> {
    let k = positive("K", k)?;
    let delta = positive("delta", delta)?;
    Ok((k + 2.0, delta / (4.0 * k + 10.0)))
}

pub fn t_to_kappa(m: f64) -> Result<f64, ConstantsError> {
    Ok(1.0 / (2.0 * positive("M", m)?))
}

pub fn kappa_to_t(kappa: f64) -> Result<f64, ConstantsError> {
    Ok(2.0 / positive("kappa", kappa)?)
}

/// `theta = alpha / (alpha + 1/sqrt(eps))`.
pub fn p_to_lt(alpha: f64, eps: f64) -> Result<f64, ConstantsError> {
    let alpha = open_unit("alpha", alpha)?;
    let eps = open_unit("eps", eps)?;
    Ok(alpha / (alpha + 1.0 / eps.sqrt()))
}

/// `f(psi) = psi / (2 sqrt(psi^2 + 1))`.
pub fn eval_f(psi: f64) -> f64 {
    psi / (2.0 * (psi * psi + 1.0).sqrt())
}

/// `g(psi) = (theta - 4 psi) / (3 (1 + 2 psi) sqrt(psi^2 + 1))`.
pub fn eval_g(psi: f64, theta: f64) -> f64 {
    (theta - 4.0 * psi) / (3.0 * (1.0 + 2.0 * psi) * (psi * psi + 1.0).sqrt())
}

/// `alpha = min(theta/2, f(theta/5), g(theta/5))` and `lambda_factor = alpha + 1/sqrt(eps)`.
/// `eps >= 1` is clamped to [`EPS_CLAMP`].
pub fn lt_to_p(theta: f64, eps: f64) -> Result<(f64, f64), ConstantsError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(ConstantsError::Domain { name: "theta", requirement: "in (0, 1]", value: theta });
    }
    let eps = positive("eps", eps)?;
    let eps = if eps >= 1.0 {
        log::warn!("eps = {eps} clamped to {EPS_CLAMP}");
        EPS_CLAMP
    } else {
        eps
    };
    let psi = theta / 5.0;
    let alpha = (theta / 2.0).min(eval_f(psi)).min(eval_g(psi, theta));
    Ok((alpha, alpha + 1.0 / eps.sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub formula: &'static str,
    pub source: String,
    pub target: String,
    pub value: f64,
}

/// Source and target constants of each transfer, recomputable from the formula name.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstantLedger {
    pub entries: Vec<LedgerEntry>,
}

impl ConstantLedger {
    pub fn push(&mut self, formula: &'static str, source: String, target: &str, value: f64) {
        self.entries.push(LedgerEntry { formula, source, target: target.to_string(), value });
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("formula,source,target,value\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{},{:.16e}\n", e.formula, e.source, e.target, e.value));
        }
        s
    }
}

/// Evaluates one named formula on its arguments and records every output.
pub fn evaluate(formula: &str, args: &[(&str, f64)]) -> Result<ConstantLedger, ConstantsError> {
    let get = |name: &'static str| {
        args.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).ok_or(ConstantsError::Domain {
            name,
            requirement: "given",
            value: f64::NAN,
        })
    };
    let src = |names: &[&str]| {
        names
            .iter()
            .map(|n| format!("{n}={}", args.iter().find(|(k, _)| k == n).map_or(f64::NAN, |p| p.1)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut l = ConstantLedger::default();
    match formula {
        "t_to_subtr" => {
            let (k, d) = t_to_subtr(get("M")?, get("delta")?)?;
            let s = src(&["M", "delta"]);
            l.push("t_to_subtr", s.clone(), "K", k);
            l.push("t_to_subtr", s, "delta_hat", d);
        }
        "subtr_to_t" => {
            let (m, r) = subtr_to_t(get("K")?, get("delta")?)?;
            let s = src(&["K", "delta"]);
            l.push("subtr_to_t", s.clone(), "M", m);
            l.push("subtr_to_t", s, "proximity_radius", r);
        }
        "t_to_kappa" => l.push("t_to_kappa", src(&["M"]), "kappa", t_to_kappa(get("M")?)?),
        "kappa_to_t" => l.push("kappa_to_t", src(&["kappa"]), "M", kappa_to_t(get("kappa")?)?),
        "p_to_lt" => l.push("p_to_lt", src(&["alpha", "eps"]), "theta", p_to_lt(get("alpha")?, get("eps")?)?),
        "f" => l.push("f", src(&["psi"]), "f", eval_f(get("psi")?)),
        "g" => l.push("g", src(&["psi", "theta"]), "g", eval_g(get("psi")?, get("theta")?)),
        "lt_to_p" => {
            let (a, lf) = lt_to_p(get("theta")?, get("eps")?)?;
            let s = src(&["theta", "eps"]);
            l.push("lt_to_p", s.clone(), "alpha", a);
            l.push("lt_to_p", s, "lambda_factor", lf);
        }
        _ => {
            return Err(ConstantsError::Domain {
                name: "formula",
                requirement: "a known formula name",
                value: f64::NAN,
            })
        }
    }
    Ok(l)
}

pub const FORMULAS: [&str; 8] =
    ["t_to_subtr", "subtr_to_t", "t_to_kappa", "kappa_to_t", "p_to_lt", "f", "g", "lt_to_p"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_examples() {
        assert_eq!(t_to_subtr(3.0, 1.0).unwrap(), (4.0, 1.0 / 56.0));
        assert_eq!(t_to_subtr(1.0, 24.0).unwrap(), (2.0, 1.0));
        assert_eq!(subtr_to_t(1.0, 14.0).unwrap(), (3.0, 1.0));
        assert_eq!(subtr_to_t(4.0, 26.0).unwrap(), (6.0, 1.0));
        assert_eq!(t_to_kappa(3.0).unwrap(), 1.0 / 6.0);
        assert_eq!(kappa_to_t(0.5).unwrap(), 4.0);
        assert_eq!(kappa_to_t(t_to_kappa(3.0).unwrap()).unwrap(), 12.0);
        assert!((p_to_lt(0.5, 0.25).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn f_and_g_values() {
        assert_eq!(eval_f(0.0), 0.0);
        assert!((eval_f(0.1) - 0.049752).abs() < 1e-6);
        for th in [0.1, 0.5, 1.0] {
            assert!(eval_g(th / 4.0, th).abs() < 1e-15);
        }
    }

    #[test]
    fn lt_to_p_example_and_clamp() {
        let (a, lf) = lt_to_p(0.5, 0.25).unwrap();
        assert!((a - 0.027640).abs() < 1e-5);
        assert!((lf - 2.02764).abs() < 1e-5);
        let (a1, lf1) = lt_to_p(0.5, 3.0).unwrap();
        assert_eq!(a1, a);
        assert!((lf1 - (a + 1.0 / EPS_CLAMP.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(t_to_subtr(0.0, 1.0).is_err());
        assert!(subtr_to_t(1.0, -1.0).is_err());
        assert!(p_to_lt(1.0, 0.5).is_err());
        assert!(lt_to_p(0.0, 0.5).is_err());
        assert!(evaluate("nope", &[]).is_err());
    }

    #[test]
    fn ledger_csv() {
        let l = evaluate("lt_to_p", &[("theta", 0.5), ("eps", 0.25)]).unwrap();
        let csv = l.to_csv();
        assert!(csv.starts_with("formula,source,target,value\nlt_to_p,theta=0.5 eps=0.25,alpha,2.76"), "{csv}");
    }
}
