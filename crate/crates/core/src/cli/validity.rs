//! Whether the semiclassical formulas apply at a point, and how far they are from the quantum ones.

use std::fmt::Write as _;

use ndarray::ArrayD;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::config::FieldKind;
use super::eval::{build, evaluate_built, Point};
use crate::error::Error;
use crate::susceptibility::{check_semiclassical_conditions, ConditionReport, Formula};

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub order: u8,
    pub quantum_formula: Formula,
    pub semiclassical_formula: Formula,
    /// Largest elementwise difference.
    pub absolute: f64,
    /// `absolute` over the largest element of either tensor; zero when both vanish.
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub conditions: Option<ConditionReport>,
    pub semiclassical_valid: bool,
    pub verdict: String,
    pub discrepancies: Vec<Discrepancy>,
    pub caveats: Vec<String>,
}

fn compare(q: &ArrayD<C64>, s: &ArrayD<C64>) -> (f64, f64) {
    let abs = q.iter().zip(s.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = q.iter().chain(s.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    (abs, if scale > 0.0 { abs / scale } else { 0.0 })
}

fn caveat(e: &Error) -> String {
    match e {
        Error::UndeterminedSusceptibility { hint, .. } => format!("quantum susceptibility undetermined: {hint}"),
        other => format!("{}: {other}", other.code()),
    }
}

/// Never fails: problems building the model or evaluating a formula become caveats.
pub fn validity_report(point: &Point) -> ValidityReport {
    let mut caveats = Vec::new();
    let built = match build(point, true) {
        Ok(b) => b,
        Err(e) => {
            return ValidityReport {
                conditions: None,
                semiclassical_valid: false,
                verdict: "model could not be built; no verdict".into(),
                discrepancies: Vec::new(),
                caveats: vec![caveat(&e)],
            }
        }
    };
    let conditions = built.joint.as_ref().map(|eq| check_semiclassical_conditions(eq, &built.problem));
    let valid = conditions.is_some_and(|c| c.all_hold());

    let number_state = matches!(built.field_kind, FieldKind::Fock | FieldKind::Auxiliary | FieldKind::AuxiliaryAdjacent);
    let mut discrepancies = Vec::new();
    let orders: Vec<u8> = point.eval.orders.iter().copied().filter(|&o| o > 0).collect();
    let orders = if orders.is_empty() { vec![1] } else { orders };
    for order in orders {
        let (mut quantum, semi) = match order {
            1 => (Formula::QuantumGeneral, Formula::SemiclassicalLinear),
            _ => (Formula::QuantumSHG, Formula::SemiclassicalSHG),
        };
        let run = |f: Formula| {
            let (f1, f2) = if order == 1 { (Some(f), None) } else { (None, Some(f)) };
            evaluate_built(point, &built, f1, f2).map(|r| match order {
                1 => r.chi1.expect("requested").into_dyn(),
                _ => r.chi2.expect("requested").into_dyn(),
            })
        };
        let mut q = run(quantum);
        if let (Err(e @ Error::UndeterminedSusceptibility { .. }), true, 1) = (&q, number_state, order) {
            caveats.push(caveat(e));
            quantum = Formula::FockLimit;
            q = run(quantum);
        }
        let s = run(semi);
        match (q, s) {
            (Ok(q), Ok(s)) => {
                let (absolute, relative) = compare(&q, &s);
                discrepancies.push(Discrepancy { order, quantum_formula: quantum, semiclassical_formula: semi, absolute, relative });
            }
            (q, s) => {
                for e in [q.err(), s.err()].into_iter().flatten() {
                    caveats.push(caveat(&e));
                }
            }
        }
    }
    let verdict = if valid {
        "semiclassical approximation valid".to_string()
    } else {
        let mut broken = Vec::new();
        if let Some(c) = conditions {
            for (name, cond) in [
                ("state not separable", c.separable),
                ("matter state has coherences", c.matter_diagonal),
                ("diagonal dipole elements nonzero", c.diagonal_dipoles_null),
                ("field rates not negligible", c.radiation_negligible),
            ] {
                if !cond.holds {
                    broken.push(name);
                }
            }
        }
        format!("semiclassical approximation not valid: {}", broken.join("; "))
    };
    ValidityReport { conditions, semiclassical_valid: valid, verdict, discrepancies, caveats }
}

impl ValidityReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.verdict);
        if let Some(c) = &self.conditions {
            for (name, cond) in [
                ("separable state", c.separable),
                ("diagonal matter state", c.matter_diagonal),
                ("null diagonal dipoles", c.diagonal_dipoles_null),
                ("negligible field rates", c.radiation_negligible),
            ] {
                let mark = if cond.holds { "ok  " } else { "FAIL" };
                let _ = writeln!(out, "  [{mark}] {name:<24} residual {:.3e}", cond.residual);
            }
        }
        for d in &self.discrepancies {
            let _ = writeln!(
                out,
                "order {}: {} vs {}: max difference {:.3e} (relative {:.3e})",
                d.order, d.quantum_formula, d.semiclassical_formula, d.absolute, d.relative
            );
        }
        for c in &self.caveats {
            let _ = writeln!(out, "note: {c}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{EvalConfig, StateConfig, SystemConfig};

    fn point(matter: &str, asym: f64, scenario: &str) -> Point {
        let mut p = Point { system: SystemConfig::default(), state: StateConfig::default(), eval: EvalConfig::default() };
        p.state.matter = matter.into();
        p.system.asymmetry = asym;
        p.eval.rate_scenario = scenario.into();
        p
    }

    #[test]
    fn ground_state_without_asymmetry_is_semiclassical() {
        let r = validity_report(&point("PG", 0.0, "a"));
        assert!(r.semiclassical_valid, "{}", r.render());
        assert!(r.discrepancies[0].relative < 1e-9, "{}", r.render());
    }

    #[test]
    fn superposition_with_asymmetry_is_not() {
        let r = validity_report(&point("MS", 1.0, "c"));
        assert!(!r.semiclassical_valid);
        let c = r.conditions.unwrap();
        assert!(!c.matter_diagonal.holds && !c.diagonal_dipoles_null.holds && !c.radiation_negligible.holds);
        assert!(r.discrepancies[0].relative > 1e-2, "{}", r.render());
    }

    #[test]
    fn number_state_reports_the_caveat() {
        let mut p = point("PG", 0.0, "a");
        p.state.field = FieldKind::Fock;
        p.state.fock_n = 2;
        let r = validity_report(&p);
        assert!(r.caveats.iter().any(|c| c.contains("undetermined")), "{}", r.render());
        assert_eq!(r.discrepancies[0].quantum_formula, Formula::FockLimit);
    }
}
