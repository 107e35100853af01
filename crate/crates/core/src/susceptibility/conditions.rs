use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::Problem;
use crate::linalg::{hermitian_eigenvalues, CMatrix};
use crate::states::JointEquilibrium;

/// One semiclassical-validity condition with its numeric residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub residual: f64,
}

/// Separability, diagonal matter state, null diagonal dipoles, negligible field rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub separable: Condition,
    pub matter_diagonal: Condition,
    pub diagonal_dipoles_null: Condition,
    pub radiation_negligible: Condition,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.separable.holds && self.matter_diagonal.holds && self.diagonal_dipoles_null.holds && self.radiation_negligible.holds
    }
}

const SEPARABLE_TOL: f64 = 1e-9;
const OFFDIAG_TOL: f64 = 1e-12;

/// Relative distance of `ρ` from the nearest product `A ⊗ B`, from the
/// realignment `R[(k,l),(n,m)] = ρ_{kn,lm}` and its leading singular component.
pub fn product_residual(rho: &CMatrix, matter_dim: usize, fock_dim: usize) -> f64 {
    let rows = matter_dim * matter_dim;
    let cols = fock_dim * fock_dim;
    let r = Array2::from_shape_fn((rows, cols), |(a, b)| {
        let (k, l) = (a / matter_dim, a % matter_dim);
        let (n, m) = (b / fock_dim, b % fock_dim);
        rho[[k * fock_dim + n, l * fock_dim + m]]
    });
    let rrh: CMatrix = r.dot(&r.t().mapv(|z: C64| z.conj()));
    let eig = hermitian_eigenvalues(&rrh);
    let total: f64 = eig.iter().map(|v| v.max(0.0)).sum();
    if total == 0.0 {
        return 0.0;
    }
    let lead = eig.last().copied().unwrap_or(0.0).max(0.0);
    ((total - lead).max(0.0) / total).sqrt()
}

pub fn check_semiclassical_conditions(eq: &JointEquilibrium, p: &Problem) -> ConditionReport {
    let s = eq.space;
    let sep = product_residual(&eq.rho_eq, s.matter_dim(), s.fock_dim());
    let reduced = eq.matter_reduced();
    let mut off = 0.0_f64;
    for ((k, l), z) in reduced.indexed_iter() {
        if k != l {
            off = off.max(z.norm());
        }
    }
    let mut diag = 0.0_f64;
    let mut scale = 0.0_f64;
    for mu in p.matter.dipole() {
        for ((k, l), z) in mu.indexed_iter() {
            scale = scale.max(z.norm());
            if k == l {
                diag = diag.max(z.norm());
            }
        }
    }
    let diag_rel = if scale > 0.0 { diag / scale } else { 0.0 };
    let (rad_ok, ratio) = p.rates.radiation_negligible();
    ConditionReport {
        separable: Condition { holds: sep <= SEPARABLE_TOL, residual: sep },
        matter_diagonal: Condition { holds: off <= OFFDIAG_TOL, residual: off },
        diagonal_dipoles_null: Condition { holds: diag_rel <= OFFDIAG_TOL, residual: diag_rel },
        radiation_negligible: Condition { holds: rad_ok, residual: ratio },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{JointEquilibrium, StateRole};
    use crate::susceptibility::testing::*;

    #[test]
    fn pg_vacuum_symmetric_all_hold() {
        let (p, eq) = qd_fock("PG", 0, 0.0, 0.0, "a", 4);
        let r = check_semiclassical_conditions(&eq, &p);
        assert!(r.all_hold(), "{r:?}");
    }

    #[test]
    fn ms_breaks_diagonal_matter() {
        let (p, eq) = qd_coherent("MS", 1.0, 0.0, 0.0, "a", 12);
        let r = check_semiclassical_conditions(&eq, &p);
        assert!(!r.matter_diagonal.holds);
        assert!(r.separable.holds);
        assert!((r.matter_diagonal.residual - 0.5).abs() < 1e-12);
    }

    #[test]
    fn asymmetry_breaks_dipole_condition() {
        let (p, eq) = qd_coherent("PG", 1.0, 1.0, 0.0, "c", 12);
        let r = check_semiclassical_conditions(&eq, &p);
        assert!(!r.diagonal_dipoles_null.holds);
        assert!(!r.radiation_negligible.holds);
    }

    #[test]
    fn entangled_state_is_not_separable() {
        let p = problem(0.0, 0.0, "a", 2);
        let s = *p.space();
        let mut m = CMatrix::zeros((s.dim(), s.dim()));
        // (|e,0⟩ + |g,1⟩)/√2
        for a in [s.index(0, 0), s.index(1, 1)] {
            for b in [s.index(0, 0), s.index(1, 1)] {
                m[[a, b]] = C64::new(0.5, 0.0);
            }
        }
        let eq = JointEquilibrium::custom(StateRole::Steady, m, &p.rates, &p.matter, p.omega()).unwrap();
        let r = check_semiclassical_conditions(&eq, &p);
        assert!(!r.separable.holds, "{r:?}");
        assert!(!eq.separable);
    }
}
