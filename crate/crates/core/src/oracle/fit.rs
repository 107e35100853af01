use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Serialize, Serializer};

use super::master::{FourierExtract, MasterRun};
use crate::error::{Error, Result};
use crate::susceptibility::{ComplexJson, Problem};

const MAX_CONDITION: f64 = 1e8;

fn ser3<S: Serializer>(v: &[C64; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    let row: Vec<ComplexJson> = v.iter().map(|&z| z.into()).collect();
    row.serialize(s)
}

fn ser1<S: Serializer>(v: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    ComplexJson::from(*v).serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitDiagnostics {
    pub lambda_values: Vec<f64>,
    pub fit_order: usize,
    /// Worst condition number of the scaled design matrices.
    pub condition: f64,
    /// Worst fit residual relative to the data, over all channels.
    pub relative_residual: f64,
    /// `|b₃| λ_max² / |b₁|` for the first harmonic of the polarization.
    pub cubic_fraction: f64,
    /// `Tr(ρ_eq a)`.
    #[serde(serialize_with = "ser1")]
    pub first_order_denominator: C64,
    /// `Tr(ρ_eq a²)`.
    #[serde(serialize_with = "ser1")]
    pub second_order_denominator: C64,
}

/// Susceptibilities recovered from the time domain, contracted along the polarization.
#[derive(Debug, Clone, Serialize)]
pub struct OracleFit {
    #[serde(serialize_with = "ser3")]
    pub chi0: [C64; 3],
    /// `Σ_j χ_ij e_j`.
    #[serde(serialize_with = "ser3")]
    pub chi1: [C64; 3],
    /// `Σ_jk χ_ijk e_j e_k`.
    #[serde(serialize_with = "ser3")]
    pub chi2: [C64; 3],
    pub diagnostics: FitDiagnostics,
}

struct Fitter {
    lambdas: Vec<f64>,
    lmax: f64,
    order: usize,
    condition: f64,
    residual: f64,
}

impl Fitter {
    /// Powers allowed for harmonic `h`: `|h|, |h|+2, …` up to the fit order.
    fn powers(&self, h: i32) -> Vec<u32> {
        (h.unsigned_abs()..=self.order as u32).step_by(2).collect()
    }

    /// Coefficients `b_p` of `c(λ) = Σ_p b_p λ^p`, keyed by power.
    fn fit(&mut self, data: &[C64], h: i32) -> Result<Vec<(u32, C64)>> {
        let powers = self.powers(h);
        let n = self.lambdas.len();
        if powers.is_empty() || n < powers.len() {
            return Err(Error::InvalidParameter(format!(
                "{n} coupling values cannot determine {} coefficients of harmonic {h}",
                powers.len()
            )));
        }
        let design = DMatrix::from_fn(n, powers.len(), |r, c| (self.lambdas[r] / self.lmax).powi(powers[c] as i32));
        let svd = design.clone().svd(true, true);
        let sv = &svd.singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if cond > MAX_CONDITION {
            return Err(Error::IllConditionedFit(cond));
        }
        self.condition = self.condition.max(cond);
        let re = DVector::from_iterator(n, data.iter().map(|z| z.re));
        let im = DVector::from_iterator(n, data.iter().map(|z| z.im));
        let solve = |b: &DVector<f64>| svd.solve(b, 0.0).map_err(|_| Error::IllConditionedFit(cond));
        let (xr, xi) = (solve(&re)?, solve(&im)?);
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            let (rr, ri) = (&design * &xr - &re, &design * &xi - &im);
            let res = rr.iter().zip(ri.iter()).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
            self.residual = self.residual.max(res / scale);
        }
        Ok(powers
            .iter()
            .enumerate()
            .map(|(c, &pw)| (pw, C64::new(xr[c], xi[c]) / self.lmax.powi(pw as i32)))
            .collect())
    }

    fn coefficient(&mut self, data: &[C64], h: i32, power: u32) -> Result<C64> {
        Ok(self.fit(data, h)?.into_iter().find(|(p, _)| *p == power).map(|(_, b)| b).unwrap_or_default())
    }
}

fn column(runs: &[MasterRun], h: i32, pick: impl Fn(&FourierExtract, usize) -> C64) -> Vec<C64> {
    let slot = FourierExtract::slot(h);
    runs.iter().map(|r| pick(&r.extract, slot)).collect()
}

fn nonzero(value: C64, hint: &str) -> Result<C64> {
    if value.norm() <= 1e-14 {
        return Err(Error::UndeterminedSusceptibility { denominator: value.norm(), hint: hint.to_string() });
    }
    Ok(value)
}

/// Recovers `χ⁽⁰⁾`, `χ⁽¹⁾·e` and `χ⁽²⁾:ee` from runs at several couplings.
pub fn fit_susceptibilities(runs: &[MasterRun], p: &Problem, fit_order: usize) -> Result<OracleFit> {
    if runs.is_empty() {
        return Err(Error::InvalidParameter("no oracle runs to fit".into()));
    }
    let lambdas: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    let mut f = Fitter { lambdas: lambdas.clone(), lmax, order: fit_order, condition: 1.0, residual: 0.0 };

    let eps0 = p.epsilon0();
    let ia = C64::new(0.0, p.field.amplitude());
    let trace0 = f.coefficient(&column(runs, 0, |e, s| e.trace[s]), 0, 0)?;
    let trace1 = f.coefficient(&column(runs, 1, |e, s| e.trace[s]), 1, 1)?;
    let trace2 = f.coefficient(&column(runs, 2, |e, s| e.trace[s]), 2, 2)?;
    let d1 = f.coefficient(&column(runs, 0, |e, s| e.field_a[s]), 0, 0)?;
    let d2 = f.coefficient(&column(runs, 0, |e, s| e.field_a2[s]), 0, 0)?;
    let a1 = f.coefficient(&column(runs, 1, |e, s| e.field_a[s]), 1, 1)?;
    let trace0 = nonzero(trace0, "the equilibrium trace vanishes")?;
    let d1 = nonzero(d1, "Tr(ρ a) vanishes; the state has no adjacent photon coherence")?;
    let d2 = nonzero(d2, "Tr(ρ a²) vanishes; the state has no two-photon coherence")?;

    let mut chi0 = [C64::default(); 3];
    let mut chi1 = [C64::default(); 3];
    let mut chi2 = [C64::default(); 3];
    let mut cubic = 0.0_f64;
    for i in 0..3 {
        let p0 = f.coefficient(&column(runs, 0, |e, s| e.polarization[i][s]), 0, 0)?;
        let fit1 = f.fit(&column(runs, 1, |e, s| e.polarization[i][s]), 1)?;
        let p1 = fit1.iter().find(|(pw, _)| *pw == 1).map(|x| x.1).unwrap_or_default();
        if let Some((_, b3)) = fit1.iter().find(|(pw, _)| *pw == 3) {
            if p1.norm() > 0.0 {
                cubic = cubic.max(b3.norm() * lmax * lmax / p1.norm());
            }
        }
        let p2 = f.coefficient(&column(runs, 2, |e, s| e.polarization[i][s]), 2, 2)?;
        chi0[i] = p0 / (eps0 * trace0);
        chi1[i] = (p1 - eps0 * chi0[i] * trace1) / (eps0 * ia * d1);
        chi2[i] = (p2 - eps0 * chi0[i] * trace2 - eps0 * chi1[i] * ia * a1) / (eps0 * ia * ia * d2);
    }
    Ok(OracleFit {
        chi0,
        chi1,
        chi2,
        diagnostics: FitDiagnostics {
            lambda_values: lambdas,
            fit_order,
            condition: f.condition,
            relative_residual: f.residual,
            cubic_fraction: cubic,
            first_order_denominator: d1,
            second_order_denominator: d2,
        },
    })
}
