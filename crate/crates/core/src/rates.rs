//! Damping tensor `γ_{kn,lm}` on the joint space.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{MatterModel, SystemSpace};

/// Default cavity loss rate, 2π × 27 GHz.
pub const DEFAULT_KAPPA: f64 = 2.0 * std::f64::consts::PI * 27e9;

/// Photon-index part `γ_nm` of the damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldRateModel {
    Zero,
    Constant { kappa: f64 },
    /// `max(0, κ(n + m − offset))`.
    Linear { kappa: f64, offset: f64 },
}

impl FieldRateModel {
    /// Named scenario: `"a"` zero, `"b"` constant κ, `"c"` linear κ(n+m−0.2).
    pub fn scenario(name: &str, kappa: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Self::Zero),
            "b" => Ok(Self::Constant { kappa }),
            "c" => Ok(Self::Linear { kappa, offset: 0.2 }),
            other => Err(Error::Config(format!("unknown rate scenario '{other}' (expected a, b or c)"))),
        }
    }

    pub fn scenario_name(&self) -> &'static str {
        match self {
            Self::Zero => "a",
            Self::Constant { .. } => "b",
            Self::Linear { .. } => "c",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Zero => Ok(()),
            Self::Constant { kappa } | Self::Linear { kappa, .. } if !(kappa >= 0.0) => {
                Err(Error::InvalidParameter(format!("field rate κ = {kappa} must be non-negative")))
            }
            Self::Linear { offset, .. } if !offset.is_finite() => {
                Err(Error::InvalidParameter("non-finite rate offset".into()))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn gamma(&self, n: usize, m: usize) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { kappa } => kappa,
            Self::Linear { kappa, offset } => (kappa * ((n + m) as f64 - offset)).max(0.0),
        }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { kappa } | Self::Linear { kappa, .. } => kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Mode {
    Additive { matter: Array2<f64>, field: FieldRateModel },
    CustomTensor(Array2<f64>),
}

/// `γ_{kn,lm}` for every pair of composite indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    space: SystemSpace,
    mode: Mode,
}

impl RateModel {
    /// `γ_{kn,lm} = γ_kl + γ_nm`.
    pub fn additive(space: SystemSpace, matter: &MatterModel, field: FieldRateModel) -> Result<Self> {
        if matter.dim() != space.matter_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matter model has {} levels, space has {}",
                matter.dim(),
                space.matter_dim()
            )));
        }
        field.validate()?;
        Ok(Self { space, mode: Mode::Additive { matter: matter.rates().clone(), field } })
    }

    /// Arbitrary tensor indexed by joint composite indices.
    pub fn custom(space: SystemSpace, tensor: Array2<f64>) -> Result<Self> {
        let d = space.dim();
        if tensor.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!("rate tensor {:?}, expected ({d}, {d})", tensor.dim())));
        }
        for i in 0..d {
            for j in 0..d {
                let g = tensor[[i, j]];
                if !(g >= 0.0) || g != tensor[[j, i]] {
                    return Err(Error::InvalidParameter(format!(
                        "rate tensor must be symmetric and non-negative at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { space, mode: Mode::CustomTensor(tensor) })
    }

    pub fn space(&self) -> &SystemSpace {
        &self.space
    }

    pub fn field_model(&self) -> Option<FieldRateModel> {
        match &self.mode {
            Mode::Additive { field, .. } => Some(*field),
            Mode::CustomTensor(_) => None,
        }
    }

    pub fn gamma(&self, k: usize, n: usize, l: usize, m: usize) -> Result<f64> {
        self.space.check(k, n, l, m)?;
        Ok(self.g(k, n, l, m))
    }

    #[inline]
    pub(crate) fn g(&self, k: usize, n: usize, l: usize, m: usize) -> f64 {
        match &self.mode {
            Mode::Additive { matter, field } => matter[[k, l]] + field.gamma(n, m),
            Mode::CustomTensor(t) => t[[self.space.index(k, n), self.space.index(l, m)]],
        }
    }

    /// Full tensor over composite indices.
    pub fn joint_tensor(&self) -> Array2<f64> {
        let d = self.space.dim();
        Array2::from_shape_fn((d, d), |(i, j)| {
            let (k, n) = self.space.split(i);
            let (l, m) = self.space.split(j);
            self.g(k, n, l, m)
        })
    }

    /// Smallest nonzero rate anywhere in the tensor.
    pub fn min_nonzero(&self) -> Option<f64> {
        self.joint_tensor().iter().copied().filter(|&g| g > 0.0).min_by(|a, b| a.total_cmp(b))
    }

    /// Negligible-radiation check: `max γ_nm ≤ 0.01 · min nonzero γ_kl`.
    /// Returns the verdict and the ratio `max γ_nm / min γ_kl`.
    pub fn radiation_negligible(&self) -> (bool, f64) {
        match &self.mode {
            Mode::Additive { matter, field } => {
                let nf = self.space.fock_dim();
                let mut max_field = 0.0_f64;
                for n in 0..nf {
                    for m in 0..nf {
                        max_field = max_field.max(field.gamma(n, m));
                    }
                }
                if max_field == 0.0 {
                    return (true, 0.0);
                }
                let min_matter = matter.iter().copied().filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
                let ratio = max_field / min_matter;
                (ratio <= 0.01, ratio)
            }
            Mode::CustomTensor(_) => (false, f64::NAN),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::QuantumDotParams;
    use std::f64::consts::PI;

    fn qd() -> MatterModel {
        MatterModel::quantum_dot(&QuantumDotParams {
            omega_x: 2.0 * PI * 2.05e12,
            coupling: 2.0 * PI * 25e9,
            gamma: 2.0 * PI * 100e9,
            gamma_d: 2.0 * PI * 10e9,
            asymmetry: 1.0,
            volume: 5e-20,
            epsilon0: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn scenario_a_is_photon_independent() {
        let s = SystemSpace::new(2, 6).unwrap();
        let r = RateModel::additive(s, &qd(), FieldRateModel::Zero).unwrap();
        for n in 0..7 {
            for m in 0..7 {
                assert_eq!(r.gamma(0, n, 1, m).unwrap(), 2.0 * PI * 10e9);
                assert_eq!(r.gamma(1, n, 1, m).unwrap(), 2.0 * PI * 100e9);
            }
        }
        assert_eq!(r.radiation_negligible(), (true, 0.0));
    }

    #[test]
    fn scenario_b_and_c() {
        let s = SystemSpace::new(2, 6).unwrap();
        let k = DEFAULT_KAPPA;
        let b = RateModel::additive(s, &qd(), FieldRateModel::scenario("b", k).unwrap()).unwrap();
        assert!((b.gamma(0, 2, 0, 5).unwrap() - (2.0 * PI * 100e9 + k)).abs() < 1e-3);
        let c = RateModel::additive(s, &qd(), FieldRateModel::scenario("c", k).unwrap()).unwrap();
        assert_eq!(c.gamma(1, 0, 1, 0).unwrap(), 2.0 * PI * 100e9);
        assert!((c.gamma(1, 1, 1, 2).unwrap() - (2.0 * PI * 100e9 + 2.8 * k)).abs() < 1e-3);
        assert!(!c.radiation_negligible().0);
        assert!(FieldRateModel::scenario("d", k).is_err());
    }

    #[test]
    fn symmetric_tensor() {
        let s = SystemSpace::new(2, 5).unwrap();
        let c = RateModel::additive(s, &qd(), FieldRateModel::scenario("c", DEFAULT_KAPPA).unwrap()).unwrap();
        let t = c.joint_tensor();
        assert_eq!(t, t.t().to_owned());
        assert!(t.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn out_of_range() {
        let s = SystemSpace::new(2, 3).unwrap();
        let r = RateModel::additive(s, &qd(), FieldRateModel::Zero).unwrap();
        assert!(matches!(r.gamma(2, 0, 0, 0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(r.gamma(0, 4, 0, 0), Err(Error::IndexOutOfRange(_))));
    }
}
