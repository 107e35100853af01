//! Closed-form perturbative density matrices and susceptibilities.

mod conditions;
mod linear;
mod perturbed;
mod result;
mod shg;

pub use conditions::{check_semiclassical_conditions, Condition, ConditionReport};
pub(crate) use linear::chi0_from_matter;
pub use linear::{chi0, chi1_coherent, COHERENT_TAIL_TOL, chi1_fock_limit, chi1_general, chi1_semiclassical, first_order_denominator};
pub use perturbed::{rho_first_order, rho_second_order_2w, FrequencyLabel, PerturbedRho};
pub use result::{contract_chi1, contract_chi2, ChiResult, ComplexJson, Formula, Params};
pub use shg::{chi2_semiclassical, chi2_shg, second_order_denominator, ResonanceVariant};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{FieldModel, MatterModel, SystemSpace};
use crate::linalg::CMatrix;
use crate::rates::RateModel;

/// Everything an evaluator needs besides the state.
#[derive(Debug, Clone)]
pub struct Problem {
    pub matter: MatterModel,
    pub field: FieldModel,
    pub rates: RateModel,
    /// Emitters per unit volume.
    pub number_density: f64,
}

impl Problem {
    pub fn new(matter: MatterModel, field: FieldModel, rates: RateModel, number_density: f64) -> Result<Self> {
        if matter.dim() != rates.space().matter_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matter model has {} levels, rate model {}",
                matter.dim(),
                rates.space().matter_dim()
            )));
        }
        if !(number_density > 0.0) {
            return Err(Error::InvalidParameter(format!("number density {number_density} must be positive")));
        }
        Ok(Self { matter, field, rates, number_density })
    }

    pub fn space(&self) -> &SystemSpace {
        self.rates.space()
    }

    pub fn omega(&self) -> f64 {
        self.field.omega
    }

    pub fn epsilon0(&self) -> f64 {
        self.field.epsilon0
    }
}

/// Read access to a joint matrix with out-of-range photon indices mapped to zero.
#[derive(Clone, Copy)]
pub(crate) struct JointView<'a> {
    pub m: &'a CMatrix,
    pub s: SystemSpace,
}

impl<'a> JointView<'a> {
    pub fn new(m: &'a CMatrix, s: SystemSpace) -> Self {
        Self { m, s }
    }

    #[inline]
    pub fn in_range(&self, n: i64) -> bool {
        n >= 0 && n <= self.s.fock_cutoff() as i64
    }

    #[inline]
    pub fn get(&self, k: usize, n: i64, l: usize, m: i64) -> C64 {
        if self.in_range(n) && self.in_range(m) {
            self.m[[self.s.index(k, n as usize), self.s.index(l, m as usize)]]
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

#[inline]
pub(crate) fn sqrtu(n: i64) -> f64 {
    if n <= 0 {
        0.0
    } else {
        (n as f64).sqrt()
    }
}

const SINGULAR: f64 = 1e-18;

/// `num / (detuning − iγ)`, with an error when both vanish and the numerator does not.
#[inline]
pub(crate) fn resolvent(num: C64, detuning: f64, gamma: f64, what: impl FnOnce() -> String) -> Result<C64> {
    if num == C64::new(0.0, 0.0) {
        return Ok(num);
    }
    if detuning.abs() < SINGULAR && gamma.abs() < SINGULAR {
        return Err(Error::ResonanceSingularity { element: what() });
    }
    Ok(num / C64::new(detuning, -gamma))
}

/// Denominator test: zero when below `1e-14` of the largest summand.
pub(crate) fn check_denominator(value: C64, largest_summand: f64, hint: &str) -> Result<C64> {
    if value.norm() <= 1e-14 * largest_summand || largest_summand == 0.0 {
        return Err(Error::UndeterminedSusceptibility { denominator: value.norm(), hint: hint.to_string() });
    }
    Ok(value)
}
