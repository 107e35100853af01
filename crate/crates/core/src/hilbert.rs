//! Truncated matter ⊗ Fock space, ladder and field operators, Hamiltonian pieces.
//!
//! Energies are stored as angular frequencies (rad/s). The reduced Planck constant
//! only enters through the field amplitude and the susceptibility prefactors.
//! Operators that carry an `e^{∓iωt}` time factor are stored as separate
//! coefficient matrices; they are never sampled at a time.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dagger, identity, kron, CMatrix, I};
use crate::rates::FieldRateModel;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON0_SI: f64 = 8.854_187_8128e-12;

/// Matter levels ⊗ Fock states `0..=fock_cutoff`, composite index `k·(N+1)+n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSpace {
    matter_dim: usize,
    fock_cutoff: usize,
}

impl SystemSpace {
    pub fn new(matter_dim: usize, fock_cutoff: usize) -> Result<Self> {
        if matter_dim < 2 {
            return Err(Error::InvalidSpace(format!("matter_dim = {matter_dim} < 2")));
        }
        if fock_cutoff < 2 {
            return Err(Error::InvalidSpace(format!("fock_cutoff = {fock_cutoff} < 2")));
        }
        Ok(Self { matter_dim, fock_cutoff })
    }

    pub fn matter_dim(&self) -> usize {
        self.matter_dim
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.matter_dim * self.fock_dim()
    }

    #[inline]
    pub fn index(&self, k: usize, n: usize) -> usize {
        debug_assert!(k < self.matter_dim && n <= self.fock_cutoff);
        k * self.fock_dim() + n
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.fock_dim(), idx % self.fock_dim())
    }

    pub(crate) fn check(&self, k: usize, n: usize, l: usize, m: usize) -> Result<()> {
        if k >= self.matter_dim || l >= self.matter_dim {
            return Err(Error::IndexOutOfRange(format!(
                "matter index ({k}, {l}) with matter_dim {}",
                self.matter_dim
            )));
        }
        if n > self.fock_cutoff || m > self.fock_cutoff {
            return Err(Error::IndexOutOfRange(format!(
                "photon index ({n}, {m}) with cutoff {}",
                self.fock_cutoff
            )));
        }
        Ok(())
    }

    /// `I_matter ⊗ op`.
    pub fn lift_field(&self, op: &CMatrix) -> CMatrix {
        kron(&identity(self.matter_dim), op)
    }

    /// `op ⊗ I_field`.
    pub fn lift_matter(&self, op: &CMatrix) -> CMatrix {
        kron(op, &identity(self.fock_dim()))
    }
}

/// Matter levels, dipole matrices and matter damping rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MatterModel {
    energies: Vec<f64>,
    dipole: [CMatrix; 3],
    rates: Array2<f64>,
    asymmetry: Option<f64>,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl MatterModel {
    pub fn new(energies: Vec<f64>, dipole: [CMatrix; 3], rates: Array2<f64>) -> Result<Self> {
        let d = energies.len();
        if d < 2 {
            return Err(Error::InvalidSpace(format!("{d} matter levels")));
        }
        for (axis, mu) in dipole.iter().enumerate() {
            if mu.dim() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "dipole component {axis} is {:?}, expected ({d}, {d})",
                    mu.dim()
                )));
            }
            let scale = mu.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
            let dev = crate::linalg::hermiticity_deviation(mu);
            if dev > HERMITIAN_TOL * scale {
                return Err(Error::NotHermitian { what: format!("dipole component {axis}"), deviation: dev });
            }
        }
        if rates.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!("matter rates are {:?}, expected ({d}, {d})", rates.dim())));
        }
        for k in 0..d {
            for l in 0..d {
                let g = rates[[k, l]];
                if !(g >= 0.0) || g != rates[[l, k]] {
                    return Err(Error::InvalidParameter(format!(
                        "matter rates must be symmetric and non-negative (γ[{k},{l}] = {g}, γ[{l},{k}] = {})",
                        rates[[l, k]]
                    )));
                }
            }
        }
        Ok(Self { energies, dipole, rates, asymmetry: None })
    }

    /// Two-level quantum dot in the `{|1⟩ (excited), |0⟩ (ground)}` basis.
    ///
    /// Every Cartesian dipole component equals
    /// `g·sqrt(2ε₀ħV/ω_x)·[[0.1A, 1], [1, A]]`; matter rates are `γ` on the
    /// diagonal and the dephasing rate `γ_d` off it.
    pub fn quantum_dot(p: &QuantumDotParams) -> Result<Self> {
        if !(p.omega_x > 0.0 && p.volume > 0.0 && p.epsilon0 > 0.0) {
            return Err(Error::InvalidParameter("omega_x, volume and epsilon0 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p.asymmetry) {
            return Err(Error::InvalidParameter(format!("asymmetry {} outside [0, 1]", p.asymmetry)));
        }
        if p.gamma < 0.0 || p.gamma_d < 0.0 {
            return Err(Error::InvalidParameter("negative matter rate".into()));
        }
        let scale = p.dipole_scale();
        let a = p.asymmetry;
        let mu = Array2::from_shape_vec(
            (2, 2),
            vec![C64::new(0.1 * a * scale, 0.0), C64::new(scale, 0.0), C64::new(scale, 0.0), C64::new(a * scale, 0.0)],
        )
        .expect("2x2");
        let rates = Array2::from_shape_vec((2, 2), vec![p.gamma, p.gamma_d, p.gamma_d, p.gamma]).expect("2x2");
        let mut model = Self::new(vec![p.omega_x, 0.0], [mu.clone(), mu.clone(), mu], rates)?;
        model.asymmetry = Some(a);
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dipole(&self) -> &[CMatrix; 3] {
        &self.dipole
    }

    pub fn rates(&self) -> &Array2<f64> {
        &self.rates
    }

    pub fn asymmetry(&self) -> Option<f64> {
        self.asymmetry
    }

    /// `ω_kl = ε_k − ε_l`.
    pub fn transition(&self, k: usize, l: usize) -> f64 {
        self.energies[k] - self.energies[l]
    }

    /// `Σ_j e_j μ^j`.
    pub fn dipole_along(&self, e: &[f64; 3]) -> CMatrix {
        let mut out = CMatrix::zeros((self.dim(), self.dim()));
        for (mu, &ej) in self.dipole.iter().zip(e) {
            out.scaled_add(C64::new(ej, 0.0), mu);
        }
        out
    }
}

/// Physical inputs of the built-in quantum-dot model (SI, rates in rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumDotParams {
    pub omega_x: f64,
    pub coupling: f64,
    pub gamma: f64,
    pub gamma_d: f64,
    pub asymmetry: f64,
    pub volume: f64,
    pub epsilon0: f64,
}

impl QuantumDotParams {
    /// `g·sqrt(2ε₀ħV/ω_x)`, the off-diagonal dipole element.
    pub fn dipole_scale(&self) -> f64 {
        self.coupling * (2.0 * self.epsilon0 * HBAR * self.volume / self.omega_x).sqrt()
    }
}

/// Single cavity mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    pub omega: f64,
    pub volume: f64,
    pub polarization: [f64; 3],
    pub epsilon0: f64,
    pub rate_model: FieldRateModel,
}

impl FieldModel {
    pub fn new(omega: f64, volume: f64, polarization: [f64; 3], epsilon0: f64, rate_model: FieldRateModel) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!("mode frequency {omega} must be positive")));
        }
        if !(volume > 0.0) {
            return Err(Error::InvalidParameter(format!("volume {volume} must be positive")));
        }
        if !(epsilon0 > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon0 {epsilon0} must be positive")));
        }
        let norm = polarization.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("polarization norm {norm} != 1")));
        }
        rate_model.validate()?;
        Ok(Self { omega, volume, polarization, epsilon0, rate_model })
    }

    /// Same mode at another frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(omega, self.volume, self.polarization, self.epsilon0, self.rate_model)
    }

    pub fn with_polarization(&self, polarization: [f64; 3]) -> Result<Self> {
        Self::new(self.omega, self.volume, polarization, self.epsilon0, self.rate_model)
    }

    /// `(ħω / 2ε₀V)^½`.
    pub fn amplitude(&self) -> f64 {
        (HBAR * self.omega / (2.0 * self.epsilon0 * self.volume)).sqrt()
    }
}

/// Annihilation and creation matrices on the Fock factor.
pub fn ladder_ops(space: &SystemSpace) -> (CMatrix, CMatrix) {
    let nf = space.fock_dim();
    let mut a = CMatrix::zeros((nf, nf));
    for n in 1..nf {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = dagger(&a);
    (a, adag)
}

/// Spatial part of the mode field on the Fock factor.
#[derive(Debug, Clone)]
pub struct FieldOperator {
    /// Coefficient of `e^{−iωt}`: `i·amp·a`.
    pub e_plus: CMatrix,
    /// Coefficient of `e^{+iωt}`: `−i·amp·a†`.
    pub e_minus: CMatrix,
    pub amplitude: f64,
}

impl FieldOperator {
    /// `E⁺ + E⁻`, the field at `t = 0`.
    pub fn full(&self) -> CMatrix {
        &self.e_plus + &self.e_minus
    }
}

pub fn field_operator_parts(field: &FieldModel, space: &SystemSpace) -> FieldOperator {
    let (a, adag) = ladder_ops(space);
    let amp = field.amplitude();
    FieldOperator { e_plus: a.mapv(|z| I * amp * z), e_minus: adag.mapv(|z| -I * amp * z), amplitude: amp }
}

/// Joint-space Hamiltonian pieces (J). The interaction is split into the
/// coefficients of `e^{−iωt}` (`int_plus`) and `e^{+iωt}` (`int_minus`).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matter: CMatrix,
    pub field: CMatrix,
    pub int_plus: CMatrix,
    pub int_minus: CMatrix,
}

pub fn hamiltonian(matter: &MatterModel, field: &FieldModel, space: &SystemSpace) -> Result<Hamiltonian> {
    if matter.dim() != space.matter_dim() {
        return Err(Error::DimensionMismatch(format!(
            "matter model has {} levels, space has {}",
            matter.dim(),
            space.matter_dim()
        )));
    }
    let d = space.dim();
    let mut h_mat = CMatrix::zeros((d, d));
    let mut h_field = CMatrix::zeros((d, d));
    for k in 0..space.matter_dim() {
        for n in 0..space.fock_dim() {
            let i = space.index(k, n);
            h_mat[[i, i]] = C64::new(HBAR * matter.energies()[k], 0.0);
            h_field[[i, i]] = C64::new(HBAR * field.omega * n as f64, 0.0);
        }
    }
    let fo = field_operator_parts(field, space);
    let mu_e = matter.dipole_along(&field.polarization);
    let int_plus = kron(&mu_e, &fo.e_plus).mapv(|z| -z);
    let int_minus = kron(&mu_e, &fo.e_minus).mapv(|z| -z);
    Ok(Hamiltonian { matter: h_mat, field: h_field, int_plus, int_minus })
}

/// `ω_{kn,lm} = (ε_k − ε_l) + ω(n − m)` in rad/s.
pub fn transition_frequency(
    k: usize,
    n: usize,
    l: usize,
    m: usize,
    matter: &MatterModel,
    field: &FieldModel,
    space: &SystemSpace,
) -> Result<f64> {
    space.check(k, n, l, m)?;
    Ok(omega_kn_lm(matter, field.omega, k, n, l, m))
}

#[inline]
pub(crate) fn omega_kn_lm(matter: &MatterModel, omega: f64, k: usize, n: usize, l: usize, m: usize) -> f64 {
    matter.transition(k, l) + omega * (n as f64 - m as f64)
}
