use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Serialize, Serializer};

use super::propagate::{to_flat, Dynamics, Flat, Lawson, Scratch};
use super::OracleConfig;
use crate::error::{Error, Result};
use crate::states::JointEquilibrium;
use crate::susceptibility::{ComplexJson, Problem};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Harmonics kept by the extraction, in storage order.
pub const HARMONICS: [i32; 5] = [-2, -1, 0, 1, 2];

fn ser_row<S: Serializer>(v: &[C64; 5], s: S) -> std::result::Result<S::Ok, S::Error> {
    let row: Vec<ComplexJson> = v.iter().map(|&z| z.into()).collect();
    row.serialize(s)
}

fn ser_rows<S: Serializer>(v: &[[C64; 5]; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<ComplexJson>> = v.iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect();
    rows.serialize(s)
}

/// Fourier components `c_h` of `s(t) = Σ_h c_h e^{−ihωt}` over the sampled window.
#[derive(Debug, Clone, Serialize)]
pub struct FourierExtract {
    pub harmonics: [i32; 5],
    /// `N_p Tr(ρ μ^i)` for `i = x, y, z`.
    #[serde(serialize_with = "ser_rows")]
    pub polarization: [[C64; 5]; 3],
    #[serde(serialize_with = "ser_row")]
    pub trace: [C64; 5],
    /// `Tr(ρ a)`.
    #[serde(serialize_with = "ser_row")]
    pub field_a: [C64; 5],
    /// `Tr(ρ a²)`.
    #[serde(serialize_with = "ser_row")]
    pub field_a2: [C64; 5],
}

impl FourierExtract {
    fn zeros() -> Self {
        Self { harmonics: HARMONICS, polarization: [[ZERO; 5]; 3], trace: [ZERO; 5], field_a: [ZERO; 5], field_a2: [ZERO; 5] }
    }

    #[inline]
    pub fn slot(h: i32) -> usize {
        (h + 2) as usize
    }

    pub fn polarization_at(&self, h: i32) -> [C64; 3] {
        let s = Self::slot(h);
        [self.polarization[0][s], self.polarization[1][s], self.polarization[2][s]]
    }

    /// Largest relative change of the polarization harmonics up to `max_harmonic`.
    pub fn max_relative_change(&self, other: &Self, max_harmonic: i32) -> f64 {
        let mut worst = 0.0_f64;
        for h in 0..=max_harmonic.min(2) {
            let a = self.polarization_at(h);
            let b = other.polarization_at(h);
            let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            if scale > 0.0 {
                worst = worst.max(diff / scale);
            } else if diff > 0.0 {
                worst = f64::INFINITY;
            }
        }
        worst
    }
}

/// Outcome of one master-equation integration.
#[derive(Debug, Clone, Serialize)]
pub struct MasterRun {
    /// Absolute coupling multiplying the interaction Hamiltonian.
    pub lambda: f64,
    pub steps_per_period: usize,
    pub settling_periods: usize,
    pub sampled_periods: usize,
    /// Period-to-period change of the first harmonic at the end of the window.
    pub final_drift: f64,
    pub drift_tolerance: f64,
    /// Largest `|Tr ρ(t) − Tr ρ_eq|` seen at any sample.
    pub max_trace_deviation: f64,
    pub extract: FourierExtract,
}

/// Linear observables of a joint matrix.
pub(crate) struct Observables {
    dm: usize,
    nf: usize,
    mu: Vec<Vec<C64>>,
    density: f64,
    sqrt_n: Vec<f64>,
}

impl Observables {
    pub fn new(p: &Problem) -> Self {
        let s = p.space();
        let dm = s.matter_dim();
        Self {
            dm,
            nf: s.fock_dim(),
            mu: p.matter.dipole().iter().map(|m| m.iter().copied().collect()).collect(),
            density: p.number_density,
            sqrt_n: (0..s.fock_dim()).map(|n| (n as f64).sqrt()).collect(),
        }
    }

    /// `[P_x, P_y, P_z, Tr, ⟨a⟩, ⟨a²⟩]`.
    pub fn eval(&self, m: &[C64]) -> [C64; 6] {
        let (dm, nf) = (self.dm, self.nf);
        let d = dm * nf;
        let mut out = [ZERO; 6];
        for k in 0..dm {
            for l in 0..dm {
                let mut red = ZERO;
                for n in 0..nf {
                    red += m[(k * nf + n) * d + l * nf + n];
                }
                for i in 0..3 {
                    out[i] += red * self.mu[i][l * dm + k];
                }
            }
            for n in 0..nf {
                let row = (k * nf + n) * d + k * nf;
                out[3] += m[row + n];
                if n >= 1 {
                    out[4] += m[row + n - 1] * self.sqrt_n[n];
                }
                if n >= 2 {
                    out[5] += m[row + n - 2] * (self.sqrt_n[n] * self.sqrt_n[n - 1]);
                }
            }
        }
        for v in out.iter_mut().take(3) {
            *v *= self.density;
        }
        out
    }
}

pub(crate) fn phase_table(steps: usize) -> Vec<[C64; 5]> {
    (0..steps)
        .map(|q| {
            let mut row = [ZERO; 5];
            for (slot, h) in HARMONICS.iter().enumerate() {
                row[slot] = C64::from_polar(1.0, 2.0 * PI * (*h as f64) * q as f64 / steps as f64);
            }
            row
        })
        .collect()
}

/// Settling controls derived from the slowest damping rate.
pub(crate) struct Settling {
    pub min_periods: usize,
    pub max_periods: usize,
    pub tol: f64,
}

impl Settling {
    pub fn new(generator: &[C64], period: f64, cfg: &OracleConfig, tol: f64) -> Result<Self> {
        let rates: Vec<f64> = generator.iter().map(|g| -g.re).collect();
        let slowest = rates.iter().copied().filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
        if !slowest.is_finite() {
            return Err(Error::NonConvergence("no damping: the driven system has no periodic steady state".into()));
        }
        let undamped = rates.iter().any(|&g| g == 0.0);
        let periods = |factor: f64| ((factor / (slowest * period)).ceil() as usize).max(1);
        Ok(Self {
            min_periods: periods(cfg.transient_factor),
            max_periods: periods(cfg.max_transient_factor),
            tol: if undamped { tol.max(1e-5) } else { tol },
        })
    }
}

pub(crate) fn relative_drift(now: &[C64], before: &[C64], floor: f64) -> f64 {
    let scale = now.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(floor);
    let diff = now.iter().zip(before).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub(crate) fn check_step(p: &Problem, h: f64, drive: f64) -> Result<()> {
    let e = p.matter.energies();
    let spread = e.iter().copied().fold(f64::NEG_INFINITY, f64::max) - e.iter().copied().fold(f64::INFINITY, f64::min);
    let stiffness = h * (spread + 2.0 * p.omega() + drive);
    if stiffness > 0.1 {
        return Err(Error::StepTooLarge(stiffness));
    }
    Ok(())
}

/// Integrates `ρ̇ = −(i/ħ)[H₀ + λH_int(t), ρ] − γ∘(ρ − ρ_ss)` from `ρ_eq` into its periodic regime.
pub fn integrate_master(
    p: &Problem,
    eq: &JointEquilibrium,
    lambda: f64,
    steps_per_period: usize,
    cfg: &OracleConfig,
) -> Result<MasterRun> {
    if !(p.omega() > 0.0) {
        return Err(Error::InvalidParameter("the oracle needs a positive drive frequency".into()));
    }
    if eq.space != *p.space() {
        return Err(Error::DimensionMismatch("state and problem live on different spaces".into()));
    }
    let dynm = Dynamics::new(p);
    let d = dynm.d;
    let period = 2.0 * PI / p.omega();
    let h = period / steps_per_period as f64;
    check_step(p, h, lambda * dynm.drive_norm())?;
    let settle = Settling::new(&dynm.generator, period, cfg, cfg.drift_tol)?;

    let rho_eq = to_flat(&eq.rho_eq);
    let rho_ss = to_flat(&eq.rho_ss);
    let source: Flat = (0..d * d).map(|i| dynm.generator[i] * rho_eq[i] - dynm.generator[i].re * rho_ss[i]).collect();
    let mut eq_lower = vec![ZERO; d * d];
    let mut eq_raise = vec![ZERO; d * d];
    dynm.add_commutators(&rho_eq, C64::new(1.0, 0.0), ZERO, &mut eq_lower);
    dynm.add_commutators(&rho_eq, ZERO, C64::new(1.0, 0.0), &mut eq_raise);

    let rhs = |t: f64, y: &[Flat], out: &mut [Flat]| {
        let (cm, cp) = dynm.drive_phases(lambda, t);
        for i in 0..d * d {
            out[0][i] = source[i] + cm * eq_lower[i] + cp * eq_raise[i];
        }
        dynm.add_commutators(&y[0], cm, cp, &mut out[0]);
    };

    let obs = Observables::new(p);
    let base = obs.eval(&rho_eq);
    let phases = phase_table(steps_per_period);
    let stepper = Lawson::new(&dynm.generator, h);
    let mut scratch = Scratch::default();
    let mut y = vec![vec![ZERO; d * d]];
    let mut step_index: u64 = 0;
    let mut max_trace_dev = 0.0_f64;
    let inv = 1.0 / steps_per_period as f64;
    let dc_floor = 1e-12 * base[..3].iter().map(|z| z.norm()).fold(0.0, f64::max);

    // One period of the departure from equilibrium; returns the first and second harmonics of
    // the polarization and optionally accumulates every channel.
    let mut run_period = |y: &mut Vec<Flat>, mut acc: Option<&mut FourierExtract>| -> [C64; 6] {
        let mut harm = [ZERO; 6];
        for ph in phases.iter() {
            let sig = obs.eval(&y[0]);
            max_trace_dev = max_trace_dev.max(sig[3].norm());
            for i in 0..3 {
                harm[i] += sig[i] * ph[3];
                harm[3 + i] += sig[i] * ph[4];
            }
            if let Some(acc) = acc.as_deref_mut() {
                for (slot, phase) in ph.iter().enumerate() {
                    for i in 0..3 {
                        acc.polarization[i][slot] += sig[i] * phase * inv;
                    }
                    acc.trace[slot] += sig[3] * phase * inv;
                    acc.field_a[slot] += sig[4] * phase * inv;
                    acc.field_a2[slot] += sig[5] * phase * inv;
                }
            }
            stepper.step(step_index as f64 * h, y, &rhs, &mut scratch);
            step_index += 1;
        }
        harm.map(|z| z * inv)
    };
    // Both harmonics must be stationary: a transient small against the first harmonic can
    // still be large against the second.
    let drift_of = |now: &[C64; 6], before: &[C64; 6]| {
        relative_drift(&now[..3], &before[..3], dc_floor).max(relative_drift(&now[3..], &before[3..], dc_floor))
    };

    let mut prev = run_period(&mut y, None);
    let mut periods = 1;
    loop {
        let now = run_period(&mut y, None);
        periods += 1;
        let drift = drift_of(&now, &prev);
        prev = now;
        if periods >= settle.min_periods && drift <= settle.tol {
            break;
        }
        if periods >= settle.max_periods {
            return Err(Error::NonConvergence(format!(
                "harmonics still drifting by {drift:.2e} after {periods} periods (λ = {lambda:.3e})"
            )));
        }
    }
    let settling_periods = periods;

    let mut total = FourierExtract::zeros();
    let mut last = prev;
    let mut final_drift = 0.0;
    for _ in 0..cfg.periods_sampled {
        let mut one = FourierExtract::zeros();
        let now = run_period(&mut y, Some(&mut one));
        final_drift = drift_of(&now, &last);
        last = now;
        let w = 1.0 / cfg.periods_sampled as f64;
        for slot in 0..5 {
            for i in 0..3 {
                total.polarization[i][slot] += one.polarization[i][slot] * w;
            }
            total.trace[slot] += one.trace[slot] * w;
            total.field_a[slot] += one.field_a[slot] * w;
            total.field_a2[slot] += one.field_a2[slot] * w;
        }
    }
    // The equilibrium part is static; adding it after the sums keeps it out of the harmonics' rounding.
    let dc = FourierExtract::slot(0);
    for i in 0..3 {
        total.polarization[i][dc] += base[i];
    }
    total.trace[dc] += base[3];
    total.field_a[dc] += base[4];
    total.field_a2[dc] += base[5];
    if final_drift > settle.tol * 10.0 {
        return Err(Error::NonConvergence(format!("drift grew to {final_drift:.2e} inside the sampling window")));
    }
    Ok(MasterRun {
        lambda,
        steps_per_period,
        settling_periods,
        sampled_periods: cfg.periods_sampled,
        final_drift,
        drift_tolerance: settle.tol,
        max_trace_deviation: max_trace_dev,
        extract: total,
    })
}
