//! Field states, quantum-dot states and joint steady/equilibrium states.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{omega_kn_lm, MatterModel, SystemSpace};
use crate::linalg::{hermitian_eigenvalues, hermiticity_deviation, kron, trace, CMatrix};
use crate::rates::RateModel;

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Default bound on the truncated-trace deficit of coherent and thermal states.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldStateKind {
    Coherent { nbar: f64 },
    Thermal { nbar: f64 },
    Fock { n: usize },
    /// Number state with coherences between `N−1` and `N+1`.
    Auxiliary { n: usize, phi: f64 },
    /// Number state with coherences between `N` and `N+1`.
    AuxiliaryAdjacent { n: usize, phi: f64 },
    /// Bose-Einstein populations with adjacent coherences `e^{−φ}·sqrt(q_n q_{n+1})`.
    ThermalAuxiliary { nbar: f64, phi: f64 },
    Custom,
}

impl FieldStateKind {
    /// Auxiliary constructions are formal limit devices and skip positivity checks.
    pub fn is_auxiliary(&self) -> bool {
        matches!(self, Self::Auxiliary { .. } | Self::AuxiliaryAdjacent { .. } | Self::ThermalAuxiliary { .. })
    }
}

/// Density matrix on the Fock factor together with how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub kind: FieldStateKind,
    pub matrix: CMatrix,
}

impl FieldState {
    pub fn cutoff(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.matrix.diag().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum()
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::InvalidSpace(format!("fock_cutoff = {cutoff} < 2")));
    }
    Ok(())
}

fn check_nbar(nbar: f64) -> Result<()> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("mean photon number {nbar} must be finite and non-negative")));
    }
    Ok(())
}

/// `sqrt` of the Poisson weights for `n = 0..=cutoff`, computed in log space.
fn poisson_amplitudes(nbar: f64, cutoff: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut v = vec![0.0; cutoff + 1];
        v[0] = 1.0;
        return v;
    }
    let ln_nbar = nbar.ln();
    let mut log_c = -0.5 * nbar;
    let mut out = Vec::with_capacity(cutoff + 1);
    out.push(log_c.exp());
    for n in 1..=cutoff {
        log_c += 0.5 * (ln_nbar - (n as f64).ln());
        out.push(log_c.exp());
    }
    out
}

/// Poisson probabilities `e^{−n̄} n̄ⁿ / n!` for `n = 0..=cutoff`.
pub fn poisson_weights(nbar: f64, cutoff: usize) -> Vec<f64> {
    poisson_amplitudes(nbar, cutoff).into_iter().map(|c| c * c).collect()
}

/// Bose-Einstein probabilities `n̄ⁿ/(n̄+1)^{n+1}`.
pub fn bose_einstein_weights(nbar: f64, cutoff: usize) -> Vec<f64> {
    let r = nbar / (nbar + 1.0);
    let mut p = 1.0 / (nbar + 1.0);
    let mut out = Vec::with_capacity(cutoff + 1);
    for _ in 0..=cutoff {
        out.push(p);
        p *= r;
    }
    out
}

/// Smallest cutoff (≥ 2) whose Poisson tail beyond it is below `tol`.
pub fn coherent_cutoff(nbar: f64, tol: f64) -> usize {
    let mut cutoff = 2usize;
    loop {
        let kept: f64 = poisson_weights(nbar, cutoff).iter().sum();
        if 1.0 - kept < tol || cutoff > 100_000 {
            return cutoff;
        }
        cutoff += 1 + cutoff / 8;
    }
}

fn truncated_trace_guard(weights: &[f64], tolerance: f64) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if 1.0 - total > tolerance {
        return Err(Error::CutoffTooSmall { achieved_trace: total, tolerance });
    }
    Ok(total)
}

/// Coherent state with real amplitude `sqrt(n̄)`, renormalized after truncation.
pub fn coherent_state(nbar: f64, cutoff: usize) -> Result<FieldState> {
    coherent_state_with_tolerance(nbar, cutoff, DEFAULT_TRUNCATION_TOL)
}

pub fn coherent_state_with_tolerance(nbar: f64, cutoff: usize, tolerance: f64) -> Result<FieldState> {
    check_cutoff(cutoff)?;
    check_nbar(nbar)?;
    let amps = poisson_amplitudes(nbar, cutoff);
    let weights: Vec<f64> = amps.iter().map(|c| c * c).collect();
    let total = truncated_trace_guard(&weights, tolerance)?;
    let matrix = Array2::from_shape_fn((cutoff + 1, cutoff + 1), |(n, m)| C64::new(amps[n] * amps[m] / total, 0.0));
    Ok(FieldState { kind: FieldStateKind::Coherent { nbar }, matrix })
}

pub fn thermal_state(nbar: f64, cutoff: usize) -> Result<FieldState> {
    thermal_state_with_tolerance(nbar, cutoff, DEFAULT_TRUNCATION_TOL)
}

pub fn thermal_state_with_tolerance(nbar: f64, cutoff: usize, tolerance: f64) -> Result<FieldState> {
    check_cutoff(cutoff)?;
    check_nbar(nbar)?;
    let weights = bose_einstein_weights(nbar, cutoff);
    let total = truncated_trace_guard(&weights, tolerance)?;
    let mut matrix = CMatrix::zeros((cutoff + 1, cutoff + 1));
    for (n, w) in weights.iter().enumerate() {
        matrix[[n, n]] = C64::new(w / total, 0.0);
    }
    Ok(FieldState { kind: FieldStateKind::Thermal { nbar }, matrix })
}

pub fn fock_state(n: usize, cutoff: usize) -> Result<FieldState> {
    check_cutoff(cutoff)?;
    if n > cutoff {
        return Err(Error::IndexOutOfRange(format!("Fock state {n} above cutoff {cutoff}")));
    }
    let mut matrix = CMatrix::zeros((cutoff + 1, cutoff + 1));
    matrix[[n, n]] = C64::new(1.0, 0.0);
    Ok(FieldState { kind: FieldStateKind::Fock { n }, matrix })
}

fn check_aux(n: usize, phi: f64, cutoff: usize) -> Result<()> {
    check_cutoff(cutoff)?;
    if n < 1 || n + 1 > cutoff {
        return Err(Error::IndexOutOfRange(format!("auxiliary state needs 1 ≤ N ≤ cutoff−1, got N = {n}, cutoff {cutoff}")));
    }
    if !(phi >= 0.0) {
        return Err(Error::InvalidParameter(format!("auxiliary φ = {phi} must be non-negative")));
    }
    Ok(())
}

/// `|N⟩⟨N| + e^{−φ}(|N−1⟩⟨N+1| + |N+1⟩⟨N−1|)`.
pub fn auxiliary_state(n: usize, phi: f64, cutoff: usize) -> Result<FieldState> {
    check_aux(n, phi, cutoff)?;
    let mut matrix = CMatrix::zeros((cutoff + 1, cutoff + 1));
    let e = (-phi).exp();
    matrix[[n, n]] = C64::new(1.0, 0.0);
    matrix[[n - 1, n + 1]] = C64::new(e, 0.0);
    matrix[[n + 1, n - 1]] = C64::new(e, 0.0);
    Ok(FieldState { kind: FieldStateKind::Auxiliary { n, phi }, matrix })
}

/// `|N⟩⟨N| + e^{−φ}(|N⟩⟨N+1| + |N+1⟩⟨N|)`.
///
/// Unlike [`auxiliary_state`] this path keeps the linear-response denominator
/// nonzero for every finite φ.
pub fn auxiliary_adjacent_state(n: usize, phi: f64, cutoff: usize) -> Result<FieldState> {
    check_aux(n, phi, cutoff)?;
    let mut matrix = CMatrix::zeros((cutoff + 1, cutoff + 1));
    let e = (-phi).exp();
    matrix[[n, n]] = C64::new(1.0, 0.0);
    matrix[[n, n + 1]] = C64::new(e, 0.0);
    matrix[[n + 1, n]] = C64::new(e, 0.0);
    Ok(FieldState { kind: FieldStateKind::AuxiliaryAdjacent { n, phi }, matrix })
}

/// Thermal populations with adjacent coherences `e^{−φ}·sqrt(q_n q_{n+1})`.
/// The same construction with Poisson populations is the coherent state itself.
pub fn thermal_auxiliary_state(nbar: f64, phi: f64, cutoff: usize) -> Result<FieldState> {
    let base = thermal_state(nbar, cutoff)?;
    if !(phi >= 0.0) {
        return Err(Error::InvalidParameter(format!("auxiliary φ = {phi} must be non-negative")));
    }
    let mut matrix = base.matrix;
    let e = (-phi).exp();
    for n in 0..cutoff {
        let v = e * (matrix[[n, n]].re * matrix[[n + 1, n + 1]].re).sqrt();
        matrix[[n, n + 1]] = C64::new(v, 0.0);
        matrix[[n + 1, n]] = C64::new(v, 0.0);
    }
    Ok(FieldState { kind: FieldStateKind::ThermalAuxiliary { nbar, phi }, matrix })
}

/// Validated user-supplied field density matrix.
pub fn custom_field_state(matrix: CMatrix) -> Result<FieldState> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::DimensionMismatch(format!("field matrix {:?} is not square", matrix.dim())));
    }
    check_cutoff(matrix.nrows().saturating_sub(1))?;
    validate_density(&matrix, "custom field state", true)?;
    Ok(FieldState { kind: FieldStateKind::Custom, matrix })
}

/// Hermiticity, unit trace and (optionally) positivity.
pub fn validate_density(m: &CMatrix, what: &str, positive: bool) -> Result<()> {
    let dev = hermiticity_deviation(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { what: what.to_string(), deviation: dev });
    }
    let tr = trace(m);
    if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("{what}: trace {tr} != 1")));
    }
    if positive {
        let lo = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
        if lo < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("{what}: negative eigenvalue {lo:.3e}")));
        }
    }
    Ok(())
}

/// On-disk form of a complex matrix: `{"dim", "re", "im"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        Self {
            dim,
            re: (0..dim).map(|i| (0..dim).map(|j| m[[i, j]].re).collect()).collect(),
            im: (0..dim).map(|i| (0..dim).map(|j| m[[i, j]].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let rows_ok = |v: &Vec<Vec<f64>>| v.len() == d && v.iter().all(|r| r.len() == d);
        if d == 0 || !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::DimensionMismatch(format!("matrix JSON does not match dim = {d}")));
        }
        Ok(Array2::from_shape_fn((d, d), |(i, j)| C64::new(self.re[i][j], self.im[i][j])))
    }

    pub fn load(path: &Path) -> Result<CMatrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let parsed: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        parsed.to_matrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QdLabel {
    PE,
    PG,
    MM,
    MS,
    Custom,
}

impl std::str::FromStr for QdLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PE" => Ok(Self::PE),
            "PG" => Ok(Self::PG),
            "MM" => Ok(Self::MM),
            "MS" => Ok(Self::MS),
            "CUSTOM" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown QD state '{other}' (expected PE, PG, MM, MS)"))),
        }
    }
}

impl std::fmt::Display for QdLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::PE => "PE",
            Self::PG => "PG",
            Self::MM => "MM",
            Self::MS => "MS",
            Self::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Two-level state `[[α, β], [β*, 1−α]]` in the `{|1⟩, |0⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdState {
    pub alpha: f64,
    pub beta: C64,
    pub label: QdLabel,
}

impl QdState {
    pub fn from_label(label: QdLabel) -> Result<Self> {
        let (alpha, beta) = match label {
            QdLabel::PE => (1.0, 0.0),
            QdLabel::PG => (0.0, 0.0),
            QdLabel::MM => (0.5, 0.0),
            QdLabel::MS => (0.5, 0.5),
            QdLabel::Custom => {
                return Err(Error::InvalidParameter("custom QD state needs explicit α and β".into()))
            }
        };
        Ok(Self { alpha, beta: C64::new(beta, 0.0), label })
    }

    pub fn custom(alpha: f64, beta: C64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidDensityMatrix(format!("α = {alpha} outside [0, 1]")));
        }
        let bound = alpha * (1.0 - alpha);
        if beta.norm_sqr() > bound + 1e-15 {
            return Err(Error::InvalidDensityMatrix(format!("|β|² = {} exceeds α(1−α) = {bound}", beta.norm_sqr())));
        }
        Ok(Self { alpha, beta, label: QdLabel::Custom })
    }

    pub fn matrix(&self) -> CMatrix {
        Array2::from_shape_vec(
            (2, 2),
            vec![C64::new(self.alpha, 0.0), self.beta, self.beta.conj(), C64::new(1.0 - self.alpha, 0.0)],
        )
        .expect("2x2")
    }
}

/// Which of the two joint matrices the supplied factors describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateRole {
    /// Factors are the steady state; the equilibrium state is derived elementwise.
    Steady,
    /// Factors are the equilibrium state itself; the steady state is recovered by inverting the map.
    #[default]
    Equilibrium,
}

/// Steady and equilibrium density matrices on the joint space.
#[derive(Debug, Clone)]
pub struct JointEquilibrium {
    pub rho_ss: CMatrix,
    pub rho_eq: CMatrix,
    pub separable: bool,
    pub components: Option<(CMatrix, CMatrix)>,
    pub space: SystemSpace,
    /// The supplied state was an auxiliary construction (not positive).
    pub auxiliary: bool,
}

/// `γ/(γ + iω)` with the degenerate limits 0 (γ = 0, ω ≠ 0) and 1 (both 0).
#[inline]
pub fn equilibrium_factor(gamma: f64, omega: f64) -> C64 {
    if gamma == 0.0 {
        if omega == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    } else {
        C64::new(gamma, 0.0) / C64::new(gamma, omega)
    }
}

/// Elementwise steady → equilibrium map.
pub fn equilibrium_from_steady(rho_ss: &CMatrix, space: &SystemSpace, matter: &MatterModel, omega: f64, rates: &RateModel) -> CMatrix {
    Array2::from_shape_fn(rho_ss.dim(), |(i, j)| {
        let (k, n) = space.split(i);
        let (l, m) = space.split(j);
        equilibrium_factor(rates.g(k, n, l, m), omega_kn_lm(matter, omega, k, n, l, m)) * rho_ss[[i, j]]
    })
}

/// Inverse of [`equilibrium_from_steady`]; fails where the map is not invertible
/// (undamped oscillating element carrying weight).
pub fn steady_from_equilibrium(
    rho_eq: &CMatrix,
    space: &SystemSpace,
    matter: &MatterModel,
    omega: f64,
    rates: &RateModel,
) -> Result<CMatrix> {
    let scale = rho_eq.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let mut out = CMatrix::zeros(rho_eq.dim());
    for ((i, j), v) in rho_eq.indexed_iter() {
        let (k, n) = space.split(i);
        let (l, m) = space.split(j);
        let g = rates.g(k, n, l, m);
        let w = omega_kn_lm(matter, omega, k, n, l, m);
        if g == 0.0 {
            if w != 0.0 && v.norm() > 1e-14 * scale {
                return Err(Error::InvalidDensityMatrix(format!(
                    "equilibrium element ({k}{n},{l}{m}) is undamped and oscillating but nonzero"
                )));
            }
            out[[i, j]] = if w == 0.0 { *v } else { C64::new(0.0, 0.0) };
        } else {
            out[[i, j]] = *v * C64::new(g, w) / g;
        }
    }
    Ok(out)
}

fn check_dims(space: &SystemSpace, matter_state: &CMatrix, field_state: &FieldState, matter: &MatterModel) -> Result<()> {
    if matter_state.dim() != (space.matter_dim(), space.matter_dim()) || matter.dim() != space.matter_dim() {
        return Err(Error::DimensionMismatch(format!(
            "matter state {:?} / matter model {} levels vs space matter_dim {}",
            matter_state.dim(),
            matter.dim(),
            space.matter_dim()
        )));
    }
    if field_state.matrix.nrows() != space.fock_dim() {
        return Err(Error::DimensionMismatch(format!(
            "field state has {} Fock levels, space has {}",
            field_state.matrix.nrows(),
            space.fock_dim()
        )));
    }
    Ok(())
}

impl JointEquilibrium {
    /// `ρ^ss = matter ⊗ field`, `ρ^eq` derived elementwise.
    pub fn from_steady_factors(
        matter_state: &CMatrix,
        field_state: &FieldState,
        rates: &RateModel,
        matter: &MatterModel,
        omega: f64,
    ) -> Result<Self> {
        let space = *rates.space();
        check_dims(&space, matter_state, field_state, matter)?;
        validate_density(matter_state, "matter state", true)?;
        let rho_ss = kron(matter_state, &field_state.matrix);
        let rho_eq = equilibrium_from_steady(&rho_ss, &space, matter, omega, rates);
        let out = Self {
            rho_ss,
            rho_eq,
            separable: true,
            components: Some((matter_state.clone(), field_state.matrix.clone())),
            space,
            auxiliary: field_state.kind.is_auxiliary(),
        };
        out.check_eq_hermitian()?;
        Ok(out)
    }

    /// `ρ^eq = matter ⊗ field`, `ρ^ss` recovered by inverting the elementwise map.
    pub fn from_equilibrium_factors(
        matter_state: &CMatrix,
        field_state: &FieldState,
        rates: &RateModel,
        matter: &MatterModel,
        omega: f64,
    ) -> Result<Self> {
        let space = *rates.space();
        check_dims(&space, matter_state, field_state, matter)?;
        validate_density(matter_state, "matter state", true)?;
        let rho_eq = kron(matter_state, &field_state.matrix);
        let rho_ss = steady_from_equilibrium(&rho_eq, &space, matter, omega, rates)?;
        Ok(Self {
            rho_ss,
            rho_eq,
            separable: true,
            components: Some((matter_state.clone(), field_state.matrix.clone())),
            space,
            auxiliary: field_state.kind.is_auxiliary(),
        })
    }

    pub fn from_factors(
        role: StateRole,
        matter_state: &CMatrix,
        field_state: &FieldState,
        rates: &RateModel,
        matter: &MatterModel,
        omega: f64,
    ) -> Result<Self> {
        match role {
            StateRole::Steady => Self::from_steady_factors(matter_state, field_state, rates, matter, omega),
            StateRole::Equilibrium => Self::from_equilibrium_factors(matter_state, field_state, rates, matter, omega),
        }
    }

    /// Arbitrary (possibly entangled) joint matrix.
    pub fn custom(role: StateRole, matrix: CMatrix, rates: &RateModel, matter: &MatterModel, omega: f64) -> Result<Self> {
        let space = *rates.space();
        if matrix.dim() != (space.dim(), space.dim()) {
            return Err(Error::DimensionMismatch(format!("joint matrix {:?}, space dim {}", matrix.dim(), space.dim())));
        }
        validate_density(&matrix, "joint state", true)?;
        let (rho_ss, rho_eq) = match role {
            StateRole::Steady => {
                let eq = equilibrium_from_steady(&matrix, &space, matter, omega, rates);
                (matrix, eq)
            }
            StateRole::Equilibrium => (steady_from_equilibrium(&matrix, &space, matter, omega, rates)?, matrix),
        };
        let out = Self { rho_ss, rho_eq, separable: false, components: None, space, auxiliary: false };
        out.check_eq_hermitian()?;
        Ok(out)
    }

    fn check_eq_hermitian(&self) -> Result<()> {
        let dev = hermiticity_deviation(&self.rho_eq);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { what: "equilibrium state".into(), deviation: dev });
        }
        Ok(())
    }

    /// Matter state obtained by tracing out the field from `ρ^eq`.
    pub fn matter_reduced(&self) -> CMatrix {
        let d = self.space.matter_dim();
        let nf = self.space.fock_dim();
        Array2::from_shape_fn((d, d), |(k, l)| {
            (0..nf).map(|n| self.rho_eq[[self.space.index(k, n), self.space.index(l, n)]]).sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::QuantumDotParams;
    use crate::rates::FieldRateModel;
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
    fn coherent_poisson_diagonal() {
        let s = coherent_state(3.0, 30).unwrap();
        let p3 = (-3.0f64).exp() * 27.0 / 6.0;
        assert!((s.matrix[[3, 3]].re - p3).abs() < 1e-9);
        assert!((trace(&s.matrix).re - 1.0).abs() < 1e-14);
        assert_eq!(hermiticity_deviation(&s.matrix), 0.0);
        assert!((s.mean_photon_number() - 3.0).abs() < 1e-6);
        let vac = coherent_state(0.0, 5).unwrap();
        assert_eq!(vac.matrix[[0, 0]].re, 1.0);
        assert!(matches!(coherent_state(10.0, 5), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn thermal_geometric() {
        let s = thermal_state(1.0, 40).unwrap();
        assert!((s.matrix[[0, 0]].re - 0.5).abs() < 1e-11);
        assert!((s.matrix[[1, 1]].re - 0.25).abs() < 1e-11);
        assert!((s.mean_photon_number() - 1.0).abs() < 1e-6);
        assert!(s.matrix.indexed_iter().all(|((i, j), z)| i == j || z.norm() == 0.0));
    }

    #[test]
    fn auxiliary_entries() {
        let a = auxiliary_state(2, 1.0, 6).unwrap();
        assert_eq!(a.matrix[[1, 3]].re, (-1.0f64).exp());
        assert_eq!(a.matrix[[3, 1]].re, (-1.0f64).exp());
        assert_eq!(a.matrix.iter().filter(|z| z.norm() > 0.0).count(), 3);
        assert_eq!(trace(&a.matrix).re, 1.0);
        assert!(auxiliary_state(0, 1.0, 6).is_err());
        assert!(auxiliary_state(6, 1.0, 6).is_err());
        let lim = auxiliary_state(1, 50.0, 4).unwrap();
        let fock = fock_state(1, 4).unwrap();
        assert!(crate::linalg::max_abs(&(&lim.matrix - &fock.matrix)) <= (-50.0f64).exp() * 1.0000001);
    }

    #[test]
    fn qd_labels() {
        let ms = QdState::from_label(QdLabel::MS).unwrap().matrix();
        assert!(ms.iter().all(|z| (z.re - 0.5).abs() < 1e-15));
        let mm = QdState::from_label(QdLabel::MM).unwrap().matrix();
        assert_eq!(mm[[0, 1]].norm(), 0.0);
        assert_eq!(mm[[0, 0]].re, 0.5);
        assert!(matches!(QdState::custom(0.3, C64::new(0.6, 0.0)), Err(Error::InvalidDensityMatrix(_))));
    }

    #[test]
    fn ms_vacuum_equilibrium_factor() {
        let m = qd();
        let space = SystemSpace::new(2, 3).unwrap();
        let rates = RateModel::additive(space, &m, FieldRateModel::Zero).unwrap();
        let ms = QdState::from_label(QdLabel::MS).unwrap().matrix();
        let vac = fock_state(0, 3).unwrap();
        let w = m.energies()[0];
        let eq = JointEquilibrium::from_steady_factors(&ms, &vac, &rates, &m, w * 1.01).unwrap();
        let gd = 2.0 * PI * 10e9;
        let expect = C64::new(gd, 0.0) / C64::new(gd, m.energies()[0]) * 0.5;
        let got = eq.rho_eq[[space.index(0, 0), space.index(1, 0)]];
        assert!((got - expect).norm() < 1e-15);
        assert!(hermiticity_deviation(&eq.rho_eq) < 1e-15);

        // inverse route gives back the same steady state
        let back = JointEquilibrium::from_equilibrium_factors(&eq.matter_reduced(), &vac, &rates, &m, w * 1.01);
        let back = back.unwrap();
        assert!(crate::linalg::max_abs(&(&back.rho_ss - &eq.rho_ss)) < 1e-12);
    }

    #[test]
    fn diagonal_states_are_fixed_points() {
        let m = qd();
        let space = SystemSpace::new(2, 4).unwrap();
        let rates = RateModel::additive(space, &m, FieldRateModel::Linear { kappa: 1e11, offset: 0.2 }).unwrap();
        let pg = QdState::from_label(QdLabel::PG).unwrap().matrix();
        let th = thermal_state_with_tolerance(0.5, 4, 1e-2).unwrap();
        let eq = JointEquilibrium::from_steady_factors(&pg, &th, &rates, &m, 1e13).unwrap();
        assert_eq!(eq.rho_eq, eq.rho_ss);
    }

    #[test]
    fn undamped_oscillating_weight_rejected() {
        let mut m = qd();
        let space = SystemSpace::new(2, 3).unwrap();
        let rates0 = MatterModel::new(m.energies().to_vec(), m.dipole().clone(), Array2::zeros((2, 2))).unwrap();
        m = rates0;
        let rates = RateModel::additive(space, &m, FieldRateModel::Zero).unwrap();
        let ms = QdState::from_label(QdLabel::MS).unwrap().matrix();
        let vac = fock_state(0, 3).unwrap();
        assert!(JointEquilibrium::from_equilibrium_factors(&ms, &vac, &rates, &m, 1e13).is_err());
        let eq = JointEquilibrium::from_steady_factors(&ms, &vac, &rates, &m, 1e13).unwrap();
        assert_eq!(eq.rho_eq[[0, space.index(1, 0)]].norm(), 0.0);
    }

    #[test]
    fn matrix_json_round_trip() {
        let s = coherent_state(1.0, 12).unwrap();
        let j = MatrixJson::from_matrix(&s.matrix);
        assert_eq!(j.to_matrix().unwrap(), s.matrix);
        let bad = MatrixJson { dim: 3, re: vec![vec![1.0; 3]; 2], im: vec![vec![0.0; 3]; 3] };
        assert!(bad.to_matrix().is_err());
    }
}
