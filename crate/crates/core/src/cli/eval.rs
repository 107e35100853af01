//! Builds the model for one configuration point and dispatches to the selected formula.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;

use super::config::{AxisName, Chi0Inclusion, EvalConfig, FieldKind, SeriesSpec, StateConfig, SystemConfig};
use crate::error::{Error, Result};
use crate::hilbert::{FieldModel, MatterModel, QuantumDotParams, SystemSpace};
use crate::linalg::CMatrix;
use crate::rates::{FieldRateModel, RateModel};
use crate::states::{
    auxiliary_adjacent_state, auxiliary_state, coherent_cutoff, coherent_state_with_tolerance, custom_field_state,
    fock_state, thermal_auxiliary_state, thermal_state_with_tolerance, FieldState, JointEquilibrium, MatrixJson,
    QdLabel, QdState, StateRole,
};
use crate::susceptibility::{
    chi0_from_matter, chi1_coherent, COHERENT_TAIL_TOL, chi1_fock_limit, chi1_general, chi1_semiclassical, chi2_semiclassical, chi2_shg, ChiResult,
    Formula, Params, Problem, ResonanceVariant,
};

/// Fully resolved inputs of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub system: SystemConfig,
    pub state: StateConfig,
    pub eval: EvalConfig,
}

impl Point {
    pub fn apply_series(&mut self, s: &SeriesSpec) {
        if let Some(v) = &s.matter {
            self.state.matter = v.clone();
        }
        if let Some(v) = s.field {
            self.state.field = v;
        }
        if let Some(v) = s.mean_photons {
            self.state.mean_photons = v;
        }
        if let Some(v) = s.fock_n {
            self.state.fock_n = v;
        }
        if let Some(v) = s.phi {
            self.state.phi = v;
        }
        if let Some(v) = s.formula {
            self.eval.formula = Some(v);
        }
        if let Some(v) = &s.rate_scenario {
            self.eval.rate_scenario = v.clone();
        }
        if let Some(v) = s.asymmetry {
            self.system.asymmetry = v;
        }
        if let Some(v) = s.detuning {
            self.eval.detuning = v;
        }
        if let Some(v) = s.chi0_inclusion {
            self.eval.chi0_inclusion = v;
        }
    }

    pub fn set_axis(&mut self, axis: AxisName, value: f64) {
        match axis {
            AxisName::Detuning => self.eval.detuning = value,
            AxisName::MeanPhotons => self.state.mean_photons = value,
            AxisName::Asymmetry => self.system.asymmetry = value,
            AxisName::FockN => self.state.fock_n = value.round().max(0.0) as usize,
            AxisName::Phi => self.state.phi = value,
        }
    }
}

/// Formula used for `order`, given the requested one.
pub fn formula_for(order: u8, requested: Option<Formula>) -> Result<Formula> {
    use Formula::*;
    match (order, requested) {
        (0, f) => Ok(f.unwrap_or(QuantumGeneral)),
        (1, None) => Ok(QuantumGeneral),
        (1, Some(f @ (QuantumGeneral | CoherentClosedForm | FockLimit | SemiclassicalLinear))) => Ok(f),
        (1, Some(QuantumSHG)) => Ok(QuantumGeneral),
        (1, Some(SemiclassicalSHG | TextbookSHG)) => Ok(SemiclassicalLinear),
        (2, None) => Ok(QuantumSHG),
        (2, Some(f @ (QuantumSHG | SemiclassicalSHG | TextbookSHG))) => Ok(f),
        (2, Some(QuantumGeneral)) => Ok(QuantumSHG),
        (2, Some(SemiclassicalLinear)) => Ok(SemiclassicalSHG),
        (2, Some(f @ (CoherentClosedForm | FockLimit))) => {
            Err(Error::Config(format!("{f} has no second-order counterpart; request QuantumSHG")))
        }
        (_, Some(Oracle)) => Err(Error::Config("the oracle is run through `oracle-check`".into())),
        (o, _) => Err(Error::Config(format!("order {o} is not available"))),
    }
}

fn matter_factor(state: &StateConfig) -> Result<(CMatrix, String)> {
    let label: QdLabel = state.matter.parse()?;
    let qd = match label {
        QdLabel::Custom => {
            let alpha = state.alpha.ok_or_else(|| Error::Config("custom matter state needs `alpha`".into()))?;
            let [re, im] = state.beta.unwrap_or([0.0, 0.0]);
            QdState::custom(alpha, C64::new(re, im))?
        }
        _ => QdState::from_label(label)?,
    };
    Ok((qd.matrix(), label.to_string()))
}

fn thermal_cutoff(nbar: f64, tol: f64) -> usize {
    if nbar <= 0.0 {
        return 2;
    }
    let q = nbar / (1.0 + nbar);
    ((tol.ln() / q.ln()).ceil() as usize).max(2)
}

fn auto_cutoff(state: &StateConfig, tol: f64) -> Result<usize> {
    Ok(match state.field {
        FieldKind::Coherent => coherent_cutoff(state.mean_photons, tol),
        FieldKind::Thermal | FieldKind::ThermalAuxiliary => thermal_cutoff(state.mean_photons, tol),
        FieldKind::Fock | FieldKind::Auxiliary | FieldKind::AuxiliaryAdjacent => state.fock_n + 2,
        FieldKind::Custom => {
            let path = state.custom_field.as_ref().ok_or_else(|| Error::Config("custom field needs `custom_field`".into()))?;
            MatrixJson::load(path)?.nrows().saturating_sub(1)
        }
    })
}

fn field_state(state: &StateConfig, cutoff: usize, tol: f64) -> Result<FieldState> {
    match state.field {
        FieldKind::Coherent => coherent_state_with_tolerance(state.mean_photons, cutoff, tol),
        FieldKind::Thermal => thermal_state_with_tolerance(state.mean_photons, cutoff, tol),
        FieldKind::Fock => fock_state(state.fock_n, cutoff),
        FieldKind::Auxiliary => auxiliary_state(state.fock_n, state.phi, cutoff),
        FieldKind::AuxiliaryAdjacent => auxiliary_adjacent_state(state.fock_n, state.phi, cutoff),
        FieldKind::ThermalAuxiliary => thermal_auxiliary_state(state.mean_photons, state.phi, cutoff),
        FieldKind::Custom => {
            let path = state.custom_field.as_ref().ok_or_else(|| Error::Config("custom field needs `custom_field`".into()))?;
            custom_field_state(MatrixJson::load(path)?)
        }
    }
}

/// Model, matter factor and (when needed) the joint state for one point.
pub struct Built {
    pub problem: Problem,
    pub matter_state: CMatrix,
    pub joint: Option<JointEquilibrium>,
    pub params: Params,
    pub field_kind: FieldKind,
}

impl Built {
    pub fn joint(&self) -> Result<&JointEquilibrium> {
        self.joint.as_ref().ok_or_else(|| Error::Config("joint state was not built".into()))
    }
}

/// Builds the model; the joint state is always built when `need_joint` is set.
pub fn build(point: &Point, need_joint: bool) -> Result<Built> {
    let sys = &point.system;
    let st = &point.state;
    let omega_x = 2.0 * PI * sys.omega_x_hz;
    let volume = sys.volume_m3();
    let qp = QuantumDotParams {
        omega_x,
        coupling: 2.0 * PI * sys.coupling_hz,
        gamma: 2.0 * PI * sys.gamma_hz,
        gamma_d: 2.0 * PI * sys.gamma_d_hz,
        asymmetry: sys.asymmetry,
        volume,
        epsilon0: sys.epsilon0,
    };
    let matter = MatterModel::quantum_dot(&qp)?;
    let frm = FieldRateModel::scenario(&point.eval.rate_scenario, 2.0 * PI * sys.kappa_hz)?;
    let omega = omega_x * (1.0 + point.eval.detuning);
    let field = FieldModel::new(omega, volume, sys.polarization, sys.epsilon0, frm)?;

    let joint_matrix = match &st.custom_joint {
        Some(path) => Some(MatrixJson::load(path)?),
        None => None,
    };
    let needs_second = point.eval.orders.contains(&2);
    let cutoff = match (&joint_matrix, sys.fock_cutoff) {
        (Some(m), _) => {
            if m.nrows() % 2 != 0 {
                return Err(Error::DimensionMismatch(format!("joint matrix dimension {} is not 2·(cutoff+1)", m.nrows())));
            }
            m.nrows() / 2 - 1
        }
        (None, Some(c)) => c,
        (None, None) => {
            // The coherent closed form sums the photon distribution itself and wants a thinner tail.
            let tol = match point.eval.formula {
                Some(Formula::CoherentClosedForm) => sys.truncation_tol.min(COHERENT_TAIL_TOL),
                _ => sys.truncation_tol,
            };
            let c = auto_cutoff(st, tol)?;
            if needs_second {
                c.max(3)
            } else {
                c
            }
        }
    };
    let space = SystemSpace::new(2, cutoff)?;
    let rates = RateModel::additive(space, &matter, frm)?;
    let density = sys.number_density.unwrap_or(1.0 / volume);
    let problem = Problem::new(matter, field, rates, density)?;

    let (matter_state, matter_label, field_label, joint) = match joint_matrix {
        Some(m) => {
            let eq = JointEquilibrium::custom(st.role, m, &problem.rates, &problem.matter, omega)?;
            (eq.matter_reduced(), "custom".to_string(), "custom".to_string(), Some(eq))
        }
        None => {
            let (m, label) = matter_factor(st)?;
            let fs = field_state(st, cutoff, sys.truncation_tol)?;
            let must_build = need_joint || st.role == StateRole::Steady;
            let joint = if must_build {
                Some(JointEquilibrium::from_factors(st.role, &m, &fs, &problem.rates, &problem.matter, omega)?)
            } else {
                None
            };
            // Closed forms take the equilibrium matter state.
            let m = match (&joint, st.role) {
                (Some(eq), StateRole::Steady) => eq.matter_reduced(),
                _ => m,
            };
            (m, label, st.field.tag().to_string(), joint)
        }
    };

    let photon_params = match st.field {
        FieldKind::Coherent | FieldKind::Thermal | FieldKind::ThermalAuxiliary => (Some(st.mean_photons), None),
        FieldKind::Fock | FieldKind::Auxiliary | FieldKind::AuxiliaryAdjacent => (None, Some(st.fock_n)),
        FieldKind::Custom => (None, None),
    };
    let params = Params {
        number_density: density,
        omega,
        detuning: Some(point.eval.detuning),
        mean_photons: photon_params.0,
        fock_n: photon_params.1,
        asymmetry: Some(sys.asymmetry),
        rate_scenario: Some(frm.scenario_name().to_string()),
        matter_state: Some(matter_label),
        field_state: Some(field_label),
        epsilon0: sys.epsilon0,
        fock_cutoff: cutoff,
    };
    Ok(Built { problem, matter_state, joint, params, field_kind: st.field })
}

fn chi1_with(b: &Built, formula: Formula, chi0: &[C64; 3], photons: (f64, usize)) -> Result<Array2<C64>> {
    let p = &b.problem;
    match formula {
        Formula::QuantumGeneral => chi1_general(b.joint()?, p, chi0),
        Formula::CoherentClosedForm => {
            if b.field_kind != FieldKind::Coherent {
                return Err(Error::Config("CoherentClosedForm needs a coherent field state".into()));
            }
            chi1_coherent(&b.matter_state, photons.0, p, chi0)
        }
        Formula::FockLimit => {
            if !matches!(b.field_kind, FieldKind::Fock | FieldKind::Auxiliary | FieldKind::AuxiliaryAdjacent) {
                return Err(Error::Config("FockLimit needs a number-state field (fock or auxiliary)".into()));
            }
            chi1_fock_limit(&b.matter_state, photons.1, p, chi0)
        }
        Formula::SemiclassicalLinear => chi1_semiclassical(&b.matter_state, p),
        other => Err(Error::Config(format!("{other} is not a linear-response formula"))),
    }
}

/// Susceptibilities of one point, in the order requested.
pub fn evaluate(point: &Point) -> Result<ChiResult> {
    let orders = &point.eval.orders;
    let f1 = orders.contains(&1).then(|| formula_for(1, point.eval.formula)).transpose()?;
    let f2 = orders.contains(&2).then(|| formula_for(2, point.eval.formula)).transpose()?;
    let need_joint = f1 == Some(Formula::QuantumGeneral) || f2 == Some(Formula::QuantumSHG);
    let b = build(point, need_joint)?;
    evaluate_built(point, &b, f1, f2)
}

pub(crate) fn evaluate_built(point: &Point, b: &Built, f1: Option<Formula>, f2: Option<Formula>) -> Result<ChiResult> {
    let p = &b.problem;
    let chi0 = chi0_from_matter(&b.matter_state, p);
    let headline = f2.or(f1).unwrap_or_else(|| point.eval.formula.unwrap_or(Formula::QuantumGeneral));
    let mut out = ChiResult::new(headline, b.params.clone());
    if point.eval.orders.contains(&0) {
        out.chi0 = Some(chi0);
    }
    let photons = (point.state.mean_photons, point.state.fock_n);
    if let Some(f) = f1 {
        let zero = [C64::new(0.0, 0.0); 3];
        out.chi1 = Some(match point.eval.chi0_inclusion {
            Chi0Inclusion::Include => chi1_with(b, f, &chi0, photons)?,
            Chi0Inclusion::Exclude => chi1_with(b, f, &zero, photons)?,
            Chi0Inclusion::Difference => chi1_with(b, f, &chi0, photons)? - chi1_with(b, f, &zero, photons)?,
        });
    }
    if let Some(f) = f2 {
        let chi2: Array3<C64> = match f {
            Formula::QuantumSHG => chi2_shg(b.joint()?, p)?,
            Formula::SemiclassicalSHG => chi2_semiclassical(&b.matter_state, p, ResonanceVariant::Quantum)?,
            Formula::TextbookSHG => chi2_semiclassical(&b.matter_state, p, ResonanceVariant::Textbook)?,
            other => return Err(Error::Config(format!("{other} is not a second-order formula"))),
        };
        out.chi2 = Some(chi2);
    }
    Ok(out)
}

/// Formula tags used for the requested orders, joined for the CSV column.
pub fn formula_tags(point: &Point) -> String {
    let mut tags: Vec<&'static str> = Vec::new();
    for &o in &point.eval.orders {
        if o == 0 {
            continue;
        }
        if let Ok(f) = formula_for(o, point.eval.formula) {
            if !tags.contains(&f.tag()) {
                tags.push(f.tag());
            }
        }
    }
    if tags.is_empty() {
        tags.push(Formula::QuantumGeneral.tag());
    }
    tags.join("+")
}
