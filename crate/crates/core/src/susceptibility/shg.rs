use ndarray::Array3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linear::first_order_denominator;
use super::{check_denominator, resolvent, sqrtu, JointView, Problem};
use crate::error::{Error, Result};
use crate::hilbert::HBAR;
use crate::linalg::CMatrix;
use crate::states::JointEquilibrium;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `Σ_{kn} ρ^eq_{kn,k(n−2)} sqrt(n(n−1))` and the largest summand magnitude.
pub fn second_order_denominator(eq: &JointEquilibrium) -> (C64, f64) {
    let s = eq.space;
    let rho = JointView::new(&eq.rho_eq, s);
    let mut sum = ZERO;
    let mut largest = 0.0_f64;
    for k in 0..s.matter_dim() {
        for n in 2..=s.fock_cutoff() as i64 {
            let t = rho.get(k, n, k, n - 2) * ((n * (n - 1)) as f64).sqrt();
            largest = largest.max(t.norm());
            sum += t;
        }
    }
    (sum, largest)
}

/// Second-harmonic susceptibility tensor `χ_{ijk}` (no permutation symmetry imposed).
///
/// The inner rectification-like sum uses `γ_{k'n',k'(n'−1)}` with the summed
/// indices; with photon-dependent field rates this choice matters.
pub fn chi2_shg(eq: &JointEquilibrium, p: &Problem) -> Result<Array3<C64>> {
    let s = *p.space();
    if eq.space != s {
        return Err(Error::DimensionMismatch("equilibrium and problem spaces differ".into()));
    }
    if s.fock_cutoff() < 3 {
        return Err(Error::InvalidSpace(format!("second order needs fock_cutoff ≥ 3, got {}", s.fock_cutoff())));
    }
    let hint = "field state lacks photon-number coherences two (or one) quanta apart; SHG is undetermined for diagonal states";
    let (d2, big2) = second_order_denominator(eq);
    let d2 = check_denominator(d2, big2, hint)?;
    let (d1, big1) = first_order_denominator(eq);
    let d1 = check_denominator(d1, big1, hint)?;

    let rho = JointView::new(&eq.rho_eq, s);
    let dm = s.matter_dim();
    let nmax = s.fock_cutoff() as i64;
    let w = p.omega();
    let mu = p.matter.dipole();
    let tr = |k: usize, l: usize| p.matter.transition(k, l);
    let gam = |k: usize, n: i64, l: usize, m: i64| p.rates.g(k, n as usize, l, m as usize);

    // Σ_{k'n'l'} ρ_{k'n',l'n'} μ^i_{l'k'}
    let reduced = eq.matter_reduced();
    let trace_mu: Vec<C64> = (0..3)
        .map(|i| {
            let mut acc = ZERO;
            for k in 0..dm {
                for l in 0..dm {
                    acc += reduced[[k, l]] * mu[i][[l, k]];
                }
            }
            acc
        })
        .collect();

    // Per third-index direction: Σ_{k'n'} √n'/γ_{k'n',k'(n'−1)} Σ_{L'} {…}
    let mut inner_dc = [ZERO; 3];
    for (c, slot) in inner_dc.iter_mut().enumerate() {
        let mut acc = ZERO;
        for k1 in 0..dm {
            for n1 in 1..=nmax {
                let mut t = ZERO;
                for l1 in 0..dm {
                    t += sqrtu(n1 - 1) * rho.get(k1, n1, l1, n1 - 2) * mu[c][[l1, k1]];
                    t -= sqrtu(n1 + 1) * rho.get(l1, n1 + 1, k1, n1 - 1) * mu[c][[k1, l1]];
                }
                if t == ZERO {
                    continue;
                }
                let g = gam(k1, n1, k1, n1 - 1);
                if g == 0.0 {
                    return Err(Error::ResonanceSingularity { element: format!("({k1}{n1},{k1}{}) at 0", n1 - 1) });
                }
                acc += t * sqrtu(n1) / g;
            }
        }
        *slot = acc;
    }

    let mut out = Array3::<C64>::zeros((3, 3, 3));
    for j in 0..3 {
        for c in 0..3 {
            // everything after the (trace δ − μ) factor, per (k, n, l)
            let mut terms: Vec<(usize, usize, C64)> = Vec::with_capacity(dm * dm * s.fock_dim());
            for k in 0..dm {
                for n in 0..=nmax {
                    for l in 0..dm {
                        let outer = C64::new(tr(k, l) - 2.0 * w, -gam(k, n, l, n));
                        let mut bracket = ZERO;
                        for big_k in 0..dm {
                            for big_l in 0..dm {
                                if n >= 1 {
                                    let num = sqrtu(n + 1) * rho.get(big_k, n + 1, big_l, n - 1) * mu[j][[k, big_k]]
                                        - sqrtu(n - 1) * rho.get(k, n, big_k, n - 2) * mu[j][[big_k, big_l]];
                                    let num = num * mu[c][[big_l, l]] * sqrtu(n);
                                    if num != ZERO {
                                        let inner = resolvent(num, tr(k, big_l), gam(k, n, big_l, n - 1), || {
                                            format!("({k}{n},{big_l}{})", n - 1)
                                        })?;
                                        bracket += inner / outer;
                                    }
                                }
                                if n + 1 <= nmax {
                                    let num = sqrtu(n + 2) * rho.get(big_k, n + 2, l, n) * mu[j][[big_l, big_k]]
                                        - sqrtu(n) * rho.get(big_l, n + 1, big_k, n - 1) * mu[j][[big_k, l]];
                                    let num = num * mu[c][[k, big_l]] * sqrtu(n + 1);
                                    if num != ZERO {
                                        let inner = resolvent(num, tr(big_l, l), gam(big_l, n + 1, l, n), || {
                                            format!("({big_l}{},{l}{n})", n + 1)
                                        })?;
                                        bracket -= inner / outer;
                                    }
                                }
                            }
                        }
                        if outer == ZERO && bracket != ZERO {
                            return Err(Error::ResonanceSingularity { element: format!("({k}{n},{l}{n}) at 2ω") });
                        }
                        let mut lin = ZERO;
                        for big_l in 0..dm {
                            lin += sqrtu(n) * rho.get(k, n, big_l, n - 1) * mu[j][[big_l, l]]
                                - sqrtu(n + 1) * rho.get(big_l, n + 1, l, n) * mu[j][[k, big_l]];
                        }
                        let lin = resolvent(lin, tr(k, l) - w, gam(k, n, l, n), || format!("({k}{n},{l}{n}) at ω"))?;
                        terms.push((k, l, bracket + C64::new(0.0, 1.0) * lin / d1 * inner_dc[c]));
                    }
                }
            }
            for i in 0..3 {
                let mut acc = ZERO;
                for &(k, l, t) in &terms {
                    let mut weight = -mu[i][[l, k]];
                    if l == k {
                        weight += trace_mu[i];
                    }
                    acc += weight * t;
                }
                out[[i, j, c]] = acc * p.number_density / (p.epsilon0() * HBAR * HBAR * d2);
            }
        }
    }
    Ok(out)
}

/// Placement of the inner resonances in the population-only SHG formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceVariant {
    /// `ω_{zz'} − iγ_{zz'}`, as obtained from the quantized-field expansion.
    Quantum,
    /// `ω_{zz'} + ω − iγ_{zz'}`, the textbook form.
    Textbook,
}

/// SHG tensor from matter populations and matter rates only.
pub fn chi2_semiclassical(rho_m: &CMatrix, p: &Problem, variant: ResonanceVariant) -> Result<Array3<C64>> {
    let dm = p.matter.dim();
    if rho_m.dim() != (dm, dm) {
        return Err(Error::DimensionMismatch(format!("matter state {:?}", rho_m.dim())));
    }
    let w = p.omega();
    let shift = match variant {
        ResonanceVariant::Quantum => 0.0,
        ResonanceVariant::Textbook => w,
    };
    let mu = p.matter.dipole();
    let g = p.matter.rates();
    let tr = |a: usize, b: usize| p.matter.transition(a, b);
    let pop = |a: usize| rho_m[[a, a]];
    let mut out = Array3::<C64>::zeros((3, 3, 3));
    for i in 0..3 {
        for j in 0..3 {
            for c in 0..3 {
                let mut acc = ZERO;
                for k in 0..dm {
                    for l in 0..dm {
                        for big_l in 0..dm {
                            let n1 = (pop(k) - pop(big_l)) * mu[i][[k, l]] * mu[j][[l, big_l]] * mu[c][[big_l, k]];
                            let n2 = (pop(big_l) - pop(l)) * mu[i][[k, l]] * mu[j][[big_l, k]] * mu[c][[l, big_l]];
                            let t1 = resolvent(n1, tr(big_l, k) + shift, g[[big_l, k]], || format!("({big_l},{k})"))?;
                            let t2 = resolvent(n2, tr(l, big_l) + shift, g[[l, big_l]], || format!("({l},{big_l})"))?;
                            acc += resolvent(t1 - t2, tr(l, k) - 2.0 * w, g[[l, k]], || format!("({l},{k}) at 2ω"))?;
                        }
                    }
                }
                out[[i, j, c]] = acc * p.number_density / (p.epsilon0() * HBAR * HBAR);
            }
        }
    }
    Ok(out)
}
