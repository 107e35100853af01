#![allow(dead_code)]

use std::f64::consts::PI;

use qsusc::hilbert::{FieldModel, MatterModel, QuantumDotParams, SystemSpace};
use qsusc::linalg::CMatrix;
use qsusc::rates::{FieldRateModel, RateModel, DEFAULT_KAPPA};
use qsusc::states::{coherent_state_with_tolerance, FieldState, JointEquilibrium, QdState, StateRole};
use qsusc::susceptibility::Problem;

pub const OMEGA_X: f64 = 2.0 * PI * 2.05e12;
pub const VOLUME: f64 = 5e-20;

pub fn qd_params(a: f64) -> QuantumDotParams {
    QuantumDotParams {
        omega_x: OMEGA_X,
        coupling: 2.0 * PI * 25e9,
        gamma: 2.0 * PI * 100e9,
        gamma_d: 2.0 * PI * 10e9,
        asymmetry: a,
        volume: VOLUME,
        epsilon0: 1.0,
    }
}

pub fn problem(a: f64, detuning: f64, scenario: &str, cutoff: usize) -> Problem {
    let matter = MatterModel::quantum_dot(&qd_params(a)).unwrap();
    let space = SystemSpace::new(2, cutoff).unwrap();
    let frm = FieldRateModel::scenario(scenario, DEFAULT_KAPPA).unwrap();
    let field = FieldModel::new(OMEGA_X * (1.0 + detuning), VOLUME, [1.0, 0.0, 0.0], 1.0, frm).unwrap();
    let rates = RateModel::additive(space, &matter, frm).unwrap();
    Problem::new(matter, field, rates, 1.0 / VOLUME).unwrap()
}

pub fn matter(label: &str) -> CMatrix {
    QdState::from_label(label.parse().unwrap()).unwrap().matrix()
}

pub fn joint(label: &str, fs: &FieldState, p: &Problem) -> JointEquilibrium {
    JointEquilibrium::from_factors(StateRole::Equilibrium, &matter(label), fs, &p.rates, &p.matter, p.omega()).unwrap()
}

pub fn coherent(label: &str, nbar: f64, a: f64, detuning: f64, scenario: &str, cutoff: usize, tol: f64) -> (Problem, JointEquilibrium) {
    let p = problem(a, detuning, scenario, cutoff);
    let fs = coherent_state_with_tolerance(nbar, cutoff, tol).unwrap();
    let eq = joint(label, &fs, &p);
    (p, eq)
}

/// Largest elementwise difference over the largest element of `want`.
pub fn rel_err<'a>(got: impl IntoIterator<Item = &'a num_complex::Complex64>, want: impl IntoIterator<Item = &'a num_complex::Complex64>) -> f64 {
    let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
    for (g, w) in got.into_iter().zip(want) {
        diff = diff.max((g - w).norm());
        scale = scale.max(w.norm());
    }
    diff / scale
}
