use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::master::{check_step, phase_table, relative_drift, Settling};
use super::propagate::{from_flat, to_flat, Dynamics, Flat, Lawson, Scratch};
use super::OracleConfig;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::states::JointEquilibrium;
use crate::susceptibility::Problem;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Periodic amplitudes of the first- and second-order corrections.
#[derive(Debug, Clone)]
pub struct RecurrenceRun {
    /// Coefficient of `e^{−iωt}` in `ρ⁽¹⁾(t)`.
    pub first_order: CMatrix,
    /// Coefficient of `e^{−2iωt}` in `ρ⁽²⁾(t)`.
    pub second_order: CMatrix,
    pub settling_periods: usize,
    pub final_drift: f64,
}

/// Integrates `ρ̇⁽ⁿ⁾ = L∘ρ⁽ⁿ⁾ − (i/ħ)[H_int(t), ρ⁽ⁿ⁻¹⁾]` for `n = 1, 2` from zero and projects
/// onto the harmonics `ω` and `2ω`.
pub fn integrate_recurrence(p: &Problem, eq: &JointEquilibrium, cfg: &OracleConfig) -> Result<RecurrenceRun> {
    cfg.validate()?;
    if !(p.omega() > 0.0) {
        return Err(Error::InvalidParameter("the oracle needs a positive drive frequency".into()));
    }
    let dynm = Dynamics::new(p);
    let d = dynm.d;
    let steps = cfg.steps_per_period;
    let period = 2.0 * PI / p.omega();
    let h = period / steps as f64;
    check_step(p, h, 0.0)?;
    let settle = Settling::new(&dynm.generator, period, cfg, cfg.recurrence_drift_tol)?;

    let rho_eq = to_flat(&eq.rho_eq);
    let mut eq_lower = vec![ZERO; d * d];
    let mut eq_raise = vec![ZERO; d * d];
    dynm.add_commutators(&rho_eq, C64::new(1.0, 0.0), ZERO, &mut eq_lower);
    dynm.add_commutators(&rho_eq, ZERO, C64::new(1.0, 0.0), &mut eq_raise);

    let rhs = |t: f64, y: &[Flat], out: &mut [Flat]| {
        let (cm, cp) = dynm.drive_phases(1.0, t);
        for i in 0..d * d {
            out[0][i] = cm * eq_lower[i] + cp * eq_raise[i];
            out[1][i] = ZERO;
        }
        dynm.add_commutators(&y[0], cm, cp, &mut out[1]);
    };

    let phases = phase_table(steps);
    let stepper = Lawson::new(&dynm.generator, h);
    let mut scratch = Scratch::default();
    let mut y = vec![vec![ZERO; d * d]; 2];
    let mut step_index: u64 = 0;
    let inv = 1.0 / steps as f64;

    // Returns the projections of ρ⁽¹⁾ on +ω and ρ⁽²⁾ on +2ω over one period.
    let mut run_period = |y: &mut Vec<Flat>| -> (Flat, Flat) {
        let mut first = vec![ZERO; d * d];
        let mut second = vec![ZERO; d * d];
        for ph in phases.iter() {
            let (p1, p2) = (ph[3] * inv, ph[4] * inv);
            for i in 0..d * d {
                first[i] += y[0][i] * p1;
                second[i] += y[1][i] * p2;
            }
            stepper.step(step_index as f64 * h, y, &rhs, &mut scratch);
            step_index += 1;
        }
        (first, second)
    };

    let (mut prev1, mut prev2) = run_period(&mut y);
    let mut periods = 1;
    let mut drift;
    loop {
        let (now1, now2) = run_period(&mut y);
        periods += 1;
        drift = relative_drift(&now1, &prev1, 0.0).max(relative_drift(&now2, &prev2, 0.0));
        prev1 = now1;
        prev2 = now2;
        if periods >= settle.min_periods && drift <= settle.tol {
            break;
        }
        if periods >= settle.max_periods {
            return Err(Error::NonConvergence(format!(
                "perturbative amplitudes still drifting by {drift:.2e} after {periods} periods"
            )));
        }
    }
    Ok(RecurrenceRun {
        first_order: from_flat(&prev1, d),
        second_order: from_flat(&prev2, d),
        settling_periods: periods,
        final_drift: drift,
    })
}
