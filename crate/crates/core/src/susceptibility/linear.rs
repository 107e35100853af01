use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::{check_denominator, resolvent, sqrtu, JointView, Problem};
use crate::error::{Error, Result};
use crate::hilbert::HBAR;
use crate::linalg::CMatrix;
use crate::states::{poisson_weights, JointEquilibrium};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Spontaneous susceptibility `(N_p/ε₀) Σ ρ^eq_{kn,ln} μ^i_{lk}`.
pub fn chi0(eq: &JointEquilibrium, p: &Problem) -> [C64; 3] {
    chi0_from_matter(&eq.matter_reduced(), p)
}

pub(crate) fn chi0_from_matter(rho_m: &CMatrix, p: &Problem) -> [C64; 3] {
    let d = p.matter.dim();
    let scale = p.number_density / p.epsilon0();
    let mut out = [ZERO; 3];
    for (axis, mu) in p.matter.dipole().iter().enumerate() {
        let mut acc = ZERO;
        for k in 0..d {
            for l in 0..d {
                acc += rho_m[[k, l]] * mu[[l, k]];
            }
        }
        out[axis] = acc * scale;
    }
    out
}

/// `Σ_{kn} ρ^eq_{kn,k(n−1)} √n` and the largest summand magnitude.
pub fn first_order_denominator(eq: &JointEquilibrium) -> (C64, f64) {
    let s = eq.space;
    let rho = JointView::new(&eq.rho_eq, s);
    let mut sum = ZERO;
    let mut largest = 0.0_f64;
    for k in 0..s.matter_dim() {
        for n in 1..=s.fock_cutoff() as i64 {
            let t = rho.get(k, n, k, n - 1) * sqrtu(n);
            largest = largest.max(t.norm());
            sum += t;
        }
    }
    (sum, largest)
}

/// `N_p μ^i_{lk} − ε₀ χ⁰_i δ_{lk}`.
#[inline]
fn response_weight(p: &Problem, chi0_in: &[C64; 3], i: usize, l: usize, k: usize) -> C64 {
    let mut w = p.matter.dipole()[i][[l, k]] * p.number_density;
    if l == k {
        w -= chi0_in[i] * p.epsilon0();
    }
    w
}

/// General linear susceptibility tensor from the joint equilibrium state.
pub fn chi1_general(eq: &JointEquilibrium, p: &Problem, chi0_in: &[C64; 3]) -> Result<Array2<C64>> {
    let s = *p.space();
    if eq.space != s {
        return Err(Error::DimensionMismatch("equilibrium and problem spaces differ".into()));
    }
    let (den, largest) = first_order_denominator(eq);
    let den = check_denominator(
        den,
        largest,
        "field state has no adjacent photon-number coherences (diagonal state); use the Fock-limit formula or an auxiliary state",
    )?;
    let rho = JointView::new(&eq.rho_eq, s);
    let dm = s.matter_dim();
    let w = p.omega();
    let mut out = Array2::<C64>::zeros((3, 3));
    for j in 0..3 {
        let mu_j = &p.matter.dipole()[j];
        // bracket[k][n][l] / (ω_kl − ω − iγ_{kn,ln})
        let mut terms = Vec::with_capacity(dm * dm * s.fock_dim());
        for k in 0..dm {
            for n in 0..=s.fock_cutoff() as i64 {
                for l in 0..dm {
                    let mut acc = ZERO;
                    for big_l in 0..dm {
                        acc += rho.get(big_l, n + 1, l, n) * mu_j[[k, big_l]] * sqrtu(n + 1);
                        acc -= rho.get(k, n, big_l, n - 1) * mu_j[[big_l, l]] * sqrtu(n);
                    }
                    let det = p.matter.transition(k, l) - w;
                    let g = p.rates.g(k, n as usize, l, n as usize);
                    terms.push((k, l, resolvent(acc, det, g, || format!("({k}{n},{l}{n}) at ω"))?));
                }
            }
        }
        for i in 0..3 {
            let mut acc = ZERO;
            for &(k, l, t) in &terms {
                acc += t * response_weight(p, chi0_in, i, l, k);
            }
            out[[i, j]] = acc / (den * p.epsilon0() * HBAR);
        }
    }
    Ok(out)
}

/// Poisson-tail bound used by the coherent closed form.
pub const COHERENT_TAIL_TOL: f64 = 1e-10;

/// Linear susceptibility for a matter state times a coherent field of mean photon number `nbar`.
pub fn chi1_coherent(rho_m: &CMatrix, nbar: f64, p: &Problem, chi0_in: &[C64; 3]) -> Result<Array2<C64>> {
    let s = *p.space();
    let dm = s.matter_dim();
    if rho_m.dim() != (dm, dm) {
        return Err(Error::DimensionMismatch(format!("matter state {:?}", rho_m.dim())));
    }
    if !(nbar > 0.0 && nbar.is_finite()) {
        return Err(Error::UndeterminedSusceptibility {
            denominator: 0.0,
            hint: format!("coherent closed form needs n̄ > 0, got {nbar}"),
        });
    }
    let weights = poisson_weights(nbar, s.fock_cutoff());
    let kept: f64 = weights.iter().sum();
    if 1.0 - kept > COHERENT_TAIL_TOL {
        return Err(Error::CutoffTooSmall { achieved_trace: kept, tolerance: COHERENT_TAIL_TOL });
    }
    let w = p.omega();
    let mut out = Array2::<C64>::zeros((3, 3));
    for j in 0..3 {
        let mu_j = &p.matter.dipole()[j];
        let mut terms = Vec::new();
        for k in 0..dm {
            for (n, &pn) in weights.iter().enumerate() {
                let prev = if n >= 1 { weights[n - 1] } else { 0.0 };
                for l in 0..dm {
                    let mut acc = ZERO;
                    for big_l in 0..dm {
                        acc += rho_m[[big_l, l]] * mu_j[[k, big_l]] * pn;
                        acc -= rho_m[[k, big_l]] * mu_j[[big_l, l]] * prev;
                    }
                    let det = p.matter.transition(k, l) - w;
                    let g = p.rates.g(k, n, l, n);
                    terms.push((k, l, resolvent(acc, det, g, || format!("({k}{n},{l}{n}) at ω"))?));
                }
            }
        }
        for i in 0..3 {
            let mut acc = ZERO;
            for &(k, l, t) in &terms {
                acc += t * response_weight(p, chi0_in, i, l, k);
            }
            out[[i, j]] = acc / (p.epsilon0() * HBAR);
        }
    }
    Ok(out)
}

/// Number-state limit of the linear susceptibility, reached through adjacent
/// photon-number coherences that vanish.
pub fn chi1_fock_limit(rho_m: &CMatrix, photons: usize, p: &Problem, chi0_in: &[C64; 3]) -> Result<Array2<C64>> {
    let s = *p.space();
    let dm = s.matter_dim();
    if rho_m.dim() != (dm, dm) {
        return Err(Error::DimensionMismatch(format!("matter state {:?}", rho_m.dim())));
    }
    if photons < 1 || photons + 1 > s.fock_cutoff() {
        return Err(Error::IndexOutOfRange(format!(
            "Fock limit needs 1 ≤ N ≤ cutoff−1, got N = {photons}, cutoff {}",
            s.fock_cutoff()
        )));
    }
    let w = p.omega();
    let nn = photons;
    let mut out = Array2::<C64>::zeros((3, 3));
    for j in 0..3 {
        let mu_j = &p.matter.dipole()[j];
        let mut terms = Vec::new();
        for k in 0..dm {
            for l in 0..dm {
                let mut absorb = ZERO;
                let mut emit = ZERO;
                for big_l in 0..dm {
                    absorb += rho_m[[big_l, l]] * mu_j[[k, big_l]];
                    emit += rho_m[[k, big_l]] * mu_j[[big_l, l]];
                }
                let det = p.matter.transition(k, l) - w;
                let a = resolvent(absorb, det, p.rates.g(k, nn, l, nn), || format!("({k}{nn},{l}{nn})"))?;
                let e = resolvent(emit, det, p.rates.g(k, nn + 1, l, nn + 1), || {
                    format!("({k}{},{l}{})", nn + 1, nn + 1)
                })?;
                terms.push((k, l, a - e));
            }
        }
        for i in 0..3 {
            let mut acc = ZERO;
            for &(k, l, t) in &terms {
                acc += t * response_weight(p, chi0_in, i, l, k);
            }
            out[[i, j]] = acc / (p.epsilon0() * HBAR);
        }
    }
    Ok(out)
}

/// Textbook linear susceptibility from matter populations and matter rates only.
pub fn chi1_semiclassical(rho_m: &CMatrix, p: &Problem) -> Result<Array2<C64>> {
    let dm = p.matter.dim();
    if rho_m.dim() != (dm, dm) {
        return Err(Error::DimensionMismatch(format!("matter state {:?}", rho_m.dim())));
    }
    let w = p.omega();
    let rates = p.matter.rates();
    let mut out = Array2::<C64>::zeros((3, 3));
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = ZERO;
            for k in 0..dm {
                for l in 0..dm {
                    let num = (rho_m[[l, l]] - rho_m[[k, k]]) * p.matter.dipole()[i][[l, k]] * p.matter.dipole()[j][[k, l]];
                    acc += resolvent(num, p.matter.transition(k, l) - w, rates[[k, l]], || format!("({k},{l})"))?;
                }
            }
            out[[i, j]] = acc * p.number_density / (p.epsilon0() * HBAR);
        }
    }
    Ok(out)
}
